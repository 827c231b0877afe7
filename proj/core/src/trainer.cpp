#include "l2ac/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "l2ac/rng.hpp"

namespace l2ac {

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");

    TrainConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;

        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        auto trim = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            const size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty key or value");
        }

        try {
            if (key == "k") cfg.k = std::stoi(value);
            else if (key == "n") cfg.n = std::stoi(value);
            else if (key == "batch_size") cfg.batch_size = std::stoi(value);
            else if (key == "lr") cfg.lr = std::stod(value);
            else if (key == "beta1") cfg.beta1 = std::stod(value);
            else if (key == "beta2") cfg.beta2 = std::stod(value);
            else if (key == "eps") cfg.eps = std::stod(value);
            else if (key == "max_epochs") cfg.max_epochs = std::stoi(value);
            else if (key == "patience") cfg.patience = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else throw ParseError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad value for '" + key + "'");
        } catch (const std::out_of_range&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": value out of range for '" + key + "'");
        }
    }

    if (cfg.k < 1 || cfg.n < 1 || cfg.batch_size < 1 || cfg.patience < 1) {
        throw ParseError(path + ": k, n, batch_size and patience must all be >= 1");
    }
    return cfg;
}

std::vector<TrainingPair> build_pairs(const EmbeddingMatrix& m,
                                      const std::set<std::string>& classes,
                                      int k, int n) {
    if (static_cast<int>(classes.size()) < n + 1) {
        throw InsufficientClassesError("build_pairs: need at least " + std::to_string(n + 1) +
                                       " classes, got " + std::to_string(classes.size()));
    }
    const ClassIndex idx = build_class_index(m, classes);
    for (const auto& label : classes) {
        if (idx.members(label).size() < 2) {
            throw ClassTooSmallError("class '" + label + "' needs >= 2 examples to form a positive pair");
        }
    }

    std::vector<TrainingPair> pairs;
    pairs.reserve(static_cast<size_t>(m.num_rows()) * (static_cast<size_t>(n) + 1));

    for (int row = 0; row < m.num_rows(); ++row) {
        const ExampleRecord& query = m.row(row);
        if (classes.count(query.class_label) == 0) continue;

        TrainingPair pos;
        pos.query_row = row;
        pos.neighbor_rows = topk_in_class(query.vector, query.class_label, k, idx, m, query.id);
        pos.label = 1;
        pos.weight = static_cast<double>(n);
        pairs.push_back(std::move(pos));

        for (const auto& neg_label :
             rank_negative_classes(query.vector, query.class_label, n, idx)) {
            TrainingPair neg;
            neg.query_row = row;
            neg.neighbor_rows = topk_in_class(query.vector, neg_label, k, idx, m);
            neg.label = 0;
            neg.weight = 1.0;
            pairs.push_back(std::move(neg));
        }
    }
    return pairs;
}

double validation_loss(const MetaClassifier& model,
                       const std::vector<TrainingPair>& val_pairs,
                       const EmbeddingMatrix& m) {
    if (val_pairs.empty()) throw Error("validation_loss: no pairs");
    double total = 0.0;
    for (const auto& pair : val_pairs) {
        const double p = model.class_probability(m.row(pair.query_row).vector,
                                                 m.lookup(pair.neighbor_rows));
        total += weighted_bce_loss(p, pair.label, pair.weight);
    }
    return total / static_cast<double>(val_pairs.size());
}

TrainResult train(const std::vector<TrainingPair>& pairs,
                  const std::vector<TrainingPair>& val_pairs,
                  const TrainConfig& cfg, const EmbeddingMatrix& m,
                  int hidden, SimKind sim) {
    if (pairs.empty() || val_pairs.empty()) {
        throw Error("train: pairs and val_pairs must be non-empty");
    }
    if (cfg.k < 1 || cfg.n < 1 || cfg.batch_size < 1 || cfg.patience < 1 || cfg.max_epochs < 1) {
        throw Error("train: k, n, batch_size, patience and max_epochs must all be >= 1");
    }

    HyperParams hyper;
    hyper.k = cfg.k;
    hyper.dim = m.dim();
    hyper.hidden = hidden;
    hyper.sim = sim;

    MetaClassifier model(hyper, derive_seed(cfg.seed, 0));
    Rng shuffle_rng(derive_seed(cfg.seed, 1));

    TrainResult result;
    result.model = model;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    std::vector<size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), size_t{0});

    int epochs_since_best = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        size_t cursor = 0;
        int batch_index = 0;
        while (cursor < order.size()) {
            const size_t batch_end = std::min(cursor + static_cast<size_t>(cfg.batch_size), order.size());
            const double batch_count = static_cast<double>(batch_end - cursor);

            model.params().zero_grads();
            double batch_loss = 0.0;
            for (size_t i = cursor; i < batch_end; ++i) {
                const TrainingPair& pair = pairs[order[i]];
                batch_loss += model.pair_loss_and_grad(m.row(pair.query_row).vector,
                                                       m.lookup(pair.neighbor_rows),
                                                       pair.label, pair.weight,
                                                       1.0 / batch_count);
            }
            if (!std::isfinite(batch_loss)) {
                throw TrainingDivergedError("non-finite loss at epoch " + std::to_string(epoch) +
                                            ", batch " + std::to_string(batch_index));
            }
            adam_step(model.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

            epoch_loss += batch_loss;
            cursor = batch_end;
            ++batch_index;
        }
        result.epoch_train_loss.push_back(epoch_loss / static_cast<double>(pairs.size()));

        const double val = validation_loss(model, val_pairs, m);
        result.epoch_val_loss.push_back(val);
        if (val < result.best_val_loss) {
            result.best_val_loss = val;
            result.best_epoch = epoch;
            result.model = model;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
        }
        if (epochs_since_best >= cfg.patience) break;
    }
    return result;
}

} // namespace l2ac
