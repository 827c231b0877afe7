#include "l2ac/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "l2ac/embedding.hpp"
#include "l2ac/parallel.hpp"
#include "l2ac/rng.hpp"

namespace l2ac {

EvalReport score_predictions(const std::vector<std::string>& gold,
                             const std::vector<std::string>& pred,
                             const std::set<std::string>& seen_labels) {
    if (gold.size() != pred.size()) {
        throw Error("score_predictions: gold has " + std::to_string(gold.size()) +
                    " entries, pred has " + std::to_string(pred.size()));
    }

    std::set<std::string> scored = seen_labels;
    scored.insert(kRejectClass);
    for (const auto& g : gold) {
        if (scored.count(g) == 0) {
            throw Error("gold label '" + g + "' is neither seen nor the rejection class");
        }
    }
    for (const auto& p : pred) {
        if (scored.count(p) == 0) {
            throw Error("predicted label '" + p + "' is neither seen nor the rejection class");
        }
    }

    EvalReport report;
    for (size_t i = 0; i < gold.size(); ++i) {
        report.confusion[{gold[i], pred[i]}] += 1;
        report.support[gold[i]] += 1;
    }

    const double total = static_cast<double>(gold.size());
    double weighted = 0.0, macro = 0.0;
    for (const auto& label : scored) {
        int tp = 0, fp = 0, fn = 0;
        for (const auto& [key, count] : report.confusion) {
            const auto& [g, p] = key;
            if (g == label && p == label) tp += count;
            else if (g != label && p == label) fp += count;
            else if (g == label && p != label) fn += count;
        }
        const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 = precision + recall > 0.0
                              ? 2.0 * precision * recall / (precision + recall)
                              : 0.0;
        report.per_class_precision[label] = precision;
        report.per_class_recall[label] = recall;
        report.per_class_f1[label] = f1;
        if (report.support.count(label) == 0) report.support[label] = 0;

        weighted += (static_cast<double>(report.support[label]) / total) * f1;
        macro += f1;
    }
    report.weighted_f1 = weighted;
    report.macro_f1 = macro / static_cast<double>(scored.size());
    return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
    out << "#l2ac-report v1\n";
    out << "== summary ==\n";
    out << "seen_size\t" << report.seen_size << "\n";
    out << "examples\t";
    {
        int total = 0;
        for (const auto& [label, n] : report.support) total += n;
        out << total << "\n";
    }
    out << "weighted_f1\t" << format_double(report.weighted_f1) << "\n";
    out << "macro_f1\t" << format_double(report.macro_f1) << "\n";

    out << "== per-class ==\n";
    for (const auto& [label, f1] : report.per_class_f1) {
        out << "class\t" << label << "\n";
        out << "  precision\t" << format_double(report.per_class_precision.at(label)) << "\n";
        out << "  recall\t" << format_double(report.per_class_recall.at(label)) << "\n";
        out << "  f1\t" << format_double(f1) << "\n";
        out << "  support\t" << report.support.at(label) << "\n";
    }

    out << "== confusion ==\n";
    for (const auto& [key, count] : report.confusion) {
        out << key.first << '\t' << key.second << '\t' << count << "\n";
    }

    out << "== flat ==\n";
    out << "seen_size\t" << report.seen_size << "\n";
    out << "weighted_f1\t" << format_double(report.weighted_f1) << "\n";
    out << "macro_f1\t" << format_double(report.macro_f1) << "\n";
    for (const auto& [label, f1] : report.per_class_f1) {
        out << "f1." << label << '\t' << format_double(f1) << "\n";
    }
    for (const auto& [label, n] : report.support) {
        out << "support." << label << '\t' << n << "\n";
    }
}

std::string report_to_string(const EvalReport& report) {
    std::ostringstream out;
    write_report(out, report);
    return out.str();
}

EmbeddingMatrix gen_synthetic(const SyntheticSpec& spec) {
    if (spec.num_classes < 1 || spec.per_class < 1) {
        throw Error("gen_synthetic: num_classes and per_class must be >= 1");
    }
    if (spec.dim < 1) throw Error("gen_synthetic: dim must be >= 1");
    if (!(spec.sigma > 0.0)) throw Error("gen_synthetic: sigma must be positive");

    const int label_width = std::max(2, static_cast<int>(std::to_string(spec.num_classes - 1).size()));
    auto class_label = [&](int c) {
        std::string digits = std::to_string(c);
        return "c" + std::string(static_cast<size_t>(label_width) - digits.size(), '0') + digits;
    };

    // sigma is the cluster standard deviation in the distance sense: the RMS
    // distance of points from their class mean. Per coordinate that is
    // sigma/sqrt(dim), keeping the cluster radius independent of dim.
    const double per_coord = spec.sigma / std::sqrt(static_cast<double>(spec.dim));

    Rng rng(spec.seed);
    EmbeddingMatrix m(spec.dim);
    for (int c = 0; c < spec.num_classes; ++c) {
        Vec mean(static_cast<size_t>(spec.dim));
        double norm = 0.0;
        for (double& v : mean) {
            v = rng.gaussian();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : mean) v /= norm;

        const std::string label = class_label(c);
        for (int i = 0; i < spec.per_class; ++i) {
            ExampleRecord rec;
            rec.id = label + "-" + std::to_string(i);
            rec.class_label = label;
            rec.vector.resize(static_cast<size_t>(spec.dim));
            for (int d = 0; d < spec.dim; ++d) {
                rec.vector[static_cast<size_t>(d)] = mean[static_cast<size_t>(d)] + per_coord * rng.gaussian();
            }
            m.append(std::move(rec));
        }
    }
    return m;
}

namespace {

void validate_plan(const ExperimentPlan& plan) {
    std::set<std::string> all;
    size_t n = 0;
    for (const auto* group : {&plan.meta_classes, &plan.val_classes, &plan.test_classes}) {
        all.insert(group->begin(), group->end());
        n += group->size();
    }
    if (all.size() != n) {
        throw Error("experiment plan: meta/validation/test class sets must be pairwise disjoint");
    }
    if (plan.meta_classes.empty() || plan.val_classes.empty() || plan.test_classes.empty()) {
        throw Error("experiment plan: all three class sets must be non-empty");
    }
    for (int s : plan.seen_sizes) {
        if (s < 1 || s > static_cast<int>(plan.test_classes.size())) {
            throw Error("experiment plan: seen_size " + std::to_string(s) +
                        " out of range [1, " + std::to_string(plan.test_classes.size()) + "]");
        }
    }
}

} // namespace

ExperimentResult run_openworld_experiment(const ExperimentPlan& plan,
                                          const EmbeddingMatrix& data,
                                          const TrainConfig& cfg) {
    validate_plan(plan);

    // Meta-training and validation pairs. Validation reuses the training n,
    // capped at what the validation class count allows.
    const std::set<std::string> meta_set(plan.meta_classes.begin(), plan.meta_classes.end());
    const std::set<std::string> val_set(plan.val_classes.begin(), plan.val_classes.end());
    const int n_val = std::min(cfg.n, static_cast<int>(val_set.size()) - 1);

    const std::vector<TrainingPair> pairs = build_pairs(data, meta_set, cfg.k, cfg.n);
    const std::vector<TrainingPair> val_pairs = build_pairs(data, val_set, cfg.k, n_val);

    ExperimentResult result;
    TrainResult trained = train(pairs, val_pairs, cfg, data, plan.hidden, plan.sim);
    result.model = std::move(trained.model);
    result.checkpoint_text = result.model.serialize();

    // Split each test class: leading rows are stored (registry side), the
    // rest are held out for evaluation.
    const std::set<std::string> test_set(plan.test_classes.begin(), plan.test_classes.end());
    std::map<std::string, std::vector<ExampleRecord>> stored;
    std::vector<int> heldout_rows;
    {
        std::map<std::string, int> taken;
        for (int r = 0; r < data.num_rows(); ++r) {
            const ExampleRecord& rec = data.row(r);
            if (test_set.count(rec.class_label) == 0) continue;
            if (taken[rec.class_label] < plan.stored_per_class) {
                stored[rec.class_label].push_back(rec);
                ++taken[rec.class_label];
            } else {
                heldout_rows.push_back(r);
            }
        }
        for (const auto& label : plan.test_classes) {
            if (stored[label].empty()) {
                throw Error("test class '" + label + "' has no stored examples");
            }
        }
    }

    for (int r : heldout_rows) {
        result.heldout_ids.push_back(data.row(r).id);
        result.heldout_gold.push_back(data.row(r).class_label);
    }

    const int threads = thread_hint();
    for (int seen_size : plan.seen_sizes) {
        SeenClassSet seen(data.dim());
        for (int c = 0; c < seen_size; ++c) {
            const std::string& label = plan.test_classes[static_cast<size_t>(c)];
            seen.add_class(label, stored.at(label));
        }

        std::vector<Prediction> preds(heldout_rows.size());
        parallel_for(static_cast<int>(heldout_rows.size()), threads, [&](int i) {
            preds[static_cast<size_t>(i)] =
                seen.classify(data.row(heldout_rows[static_cast<size_t>(i)]).vector,
                              result.model, plan.k);
        });

        std::vector<std::string> gold, pred;
        gold.reserve(preds.size());
        pred.reserve(preds.size());
        const std::set<std::string> seen_labels(plan.test_classes.begin(),
                                                plan.test_classes.begin() + seen_size);
        for (size_t i = 0; i < preds.size(); ++i) {
            const std::string& g = result.heldout_gold[i];
            gold.push_back(seen_labels.count(g) ? g : kRejectClass);
            pred.push_back(preds[i].rejected ? kRejectClass : preds[i].outcome);
        }

        EvalReport report = score_predictions(gold, pred, seen_labels);
        report.seen_size = seen_size;
        result.reports.push_back(std::move(report));
        result.predictions.push_back(std::move(preds));
    }
    return result;
}

std::vector<ExperimentResult> run_openworld_experiment_multi(const ExperimentPlan& plan,
                                                             const EmbeddingMatrix& data,
                                                             const TrainConfig& cfg) {
    if (plan.seeds.empty()) throw Error("experiment plan: seeds list is empty");
    std::vector<ExperimentResult> results;
    results.reserve(plan.seeds.size());
    for (uint64_t seed : plan.seeds) {
        TrainConfig per_run = cfg;
        per_run.seed = seed;
        results.push_back(run_openworld_experiment(plan, data, per_run));
    }
    return results;
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
    return s;
}

} // namespace l2ac
