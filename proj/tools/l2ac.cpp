// l2ac command-line interface: synthetic data generation, meta-training,
// open-world evaluation and registry maintenance. Every command is
// reproducible from its flags plus input files; the only environment knob is
// the optional L2AC_THREADS parallelism hint.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "l2ac/eval.hpp"
#include "l2ac/grad_check.hpp"
#include "l2ac/parallel.hpp"
#include "l2ac/registry.hpp"
#include "l2ac/trainer.hpp"

namespace {

using namespace l2ac;

int run_gen_synth(int classes, int per_class, int dim, double sigma, uint64_t seed,
                  const std::string& out) {
    SyntheticSpec spec;
    spec.num_classes = classes;
    spec.per_class = per_class;
    spec.dim = dim;
    spec.sigma = sigma;
    spec.seed = seed;
    const EmbeddingMatrix m = gen_synthetic(spec);
    save_embeddings(m, out);
    std::cout << "wrote " << m.num_rows() << " rows (dim " << m.dim() << ") to " << out << "\n";
    return 0;
}

// Meta and validation examples arrive as two embedding files; pairs index
// into their concatenation.
int run_train(const std::string& meta_path, const std::string& val_path,
              const std::string& config_path, const std::string& out,
              int hidden, const std::string& sim_name) {
    const TrainConfig cfg = load_train_config(config_path);
    const SimKind sim = parse_sim_kind(sim_name);

    const EmbeddingMatrix meta = load_embeddings(meta_path);
    const EmbeddingMatrix val = load_embeddings(val_path);
    if (meta.dim() != val.dim()) {
        throw ShapeError("meta embeddings have dim " + std::to_string(meta.dim()) +
                         " but validation embeddings have dim " + std::to_string(val.dim()));
    }

    EmbeddingMatrix all(meta.dim());
    for (const auto& rec : meta.rows()) all.append(rec);
    for (const auto& rec : val.rows()) all.append(rec);

    const auto to_set = [](const EmbeddingMatrix& m) {
        const auto l = m.labels();
        return std::set<std::string>(l.begin(), l.end());
    };
    const std::set<std::string> meta_classes = to_set(meta);
    const std::set<std::string> val_classes = to_set(val);
    for (const auto& c : val_classes) {
        if (meta_classes.count(c)) {
            throw Error("class '" + c + "' appears in both meta and validation sets");
        }
    }

    const int n_val = std::min(cfg.n, static_cast<int>(val_classes.size()) - 1);
    if (n_val < cfg.n) {
        std::cerr << "note: validation negative classes capped at " << n_val
                  << " (" << val_classes.size() << " validation classes)\n";
    }

    const auto pairs = build_pairs(all, meta_classes, cfg.k, cfg.n);
    const auto val_pairs = build_pairs(all, val_classes, cfg.k, n_val);

    const TrainResult result = train(pairs, val_pairs, cfg, all, hidden, sim);
    result.model.save(out);
    std::cout << "trained " << pairs.size() << " pairs, best epoch " << result.best_epoch
              << " (val loss " << result.best_val_loss << "), saved " << out << "\n";
    return 0;
}

SeenClassSet registry_prefix(const SeenClassSet& full, int size) {
    SeenClassSet s(full.dim());
    const auto& labels = full.labels();
    for (int c = 0; c < size; ++c) {
        const auto& label = labels[static_cast<size_t>(c)];
        std::vector<ExampleRecord> examples;
        for (int r : full.index().members(label)) examples.push_back(full.store().row(r));
        s.add_class(label, examples);
    }
    return s;
}

int run_eval(const std::string& model_path, const std::string& registry_path,
             const std::string& test_path, std::vector<int> seen_sizes,
             const std::string& report_path) {
    const MetaClassifier model = MetaClassifier::load(model_path);
    const SeenClassSet full = SeenClassSet::load(registry_path);
    const EmbeddingMatrix test = load_embeddings(test_path);

    std::ofstream report(report_path);
    if (!report) throw IoError("cannot write report file '" + report_path + "'");

    const int threads = thread_hint();
    for (int size : seen_sizes) {
        if (size < 1 || size > full.num_classes()) {
            throw Error("seen size " + std::to_string(size) + " out of range [1, " +
                        std::to_string(full.num_classes()) + "]");
        }
        const SeenClassSet seen = registry_prefix(full, size);
        const std::set<std::string> seen_labels(seen.labels().begin(), seen.labels().end());

        std::vector<Prediction> preds(static_cast<size_t>(test.num_rows()));
        parallel_for(test.num_rows(), threads, [&](int i) {
            preds[static_cast<size_t>(i)] =
                seen.classify(test.row(i).vector, model, model.hyper().k);
        });

        std::vector<std::string> gold, pred;
        for (int i = 0; i < test.num_rows(); ++i) {
            const std::string& g = test.row(i).class_label;
            gold.push_back(seen_labels.count(g) ? g : kRejectClass);
            pred.push_back(preds[static_cast<size_t>(i)].rejected
                               ? kRejectClass
                               : preds[static_cast<size_t>(i)].outcome);
        }

        EvalReport r = score_predictions(gold, pred, seen_labels);
        r.seen_size = size;
        write_report(report, r);
        std::cout << "seen_size=" << size << " weighted_f1=" << r.weighted_f1
                  << " macro_f1=" << r.macro_f1 << "\n";
    }
    return 0;
}

int run_classify(const std::string& model_path, const std::string& registry_path,
                 const std::string& input_path, bool explain) {
    const MetaClassifier model = MetaClassifier::load(model_path);
    const SeenClassSet seen = SeenClassSet::load(registry_path);
    const EmbeddingMatrix input = load_embeddings(input_path);

    for (int i = 0; i < input.num_rows(); ++i) {
        const Prediction p = seen.classify(input.row(i).vector, model, model.hyper().k);
        std::cout << input.row(i).id << '\t' << p.outcome;
        if (explain) {
            // Probability map, descending; ties by label for stable output.
            std::vector<std::pair<std::string, double>> ordered(p.scores.begin(), p.scores.end());
            std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
            });
            std::cout << '\t';
            for (size_t j = 0; j < ordered.size(); ++j) {
                if (j) std::cout << ' ';
                std::cout << ordered[j].first << '=' << ordered[j].second;
            }
        }
        std::cout << "\n";
    }
    return 0;
}

int run_registry_add(const std::string& registry_path, const std::string& label,
                     const std::string& examples_path) {
    SeenClassSet s;
    if (std::filesystem::exists(registry_path)) {
        s = SeenClassSet::load(registry_path);
    }
    const EmbeddingMatrix examples = load_embeddings(examples_path);
    s.add_class(label, examples.rows());
    s.save(registry_path);
    std::cout << "registry now has " << s.num_classes() << " classes\n";
    return 0;
}

int run_registry_remove(const std::string& registry_path, const std::string& label) {
    SeenClassSet s = SeenClassSet::load(registry_path);
    s.remove_class(label);
    s.save(registry_path);
    // Drop the per-class file this registry manages, if present.
    const auto owned = std::filesystem::path(registry_path).parent_path() / (label + ".emb");
    std::error_code ec;
    std::filesystem::remove(owned, ec);
    std::cout << "registry now has " << s.num_classes() << " classes\n";
    return 0;
}

int run_grad_check(int dim, int k, int hidden, uint64_t seed) {
    const double err = pipeline_grad_check(dim, k, hidden, SimKind::abssub_sum, seed);
    std::cout << "max_rel_error=" << err << "\n";
    return err < 1e-4 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"l2ac: open-world classification over a dynamic seen-class set"};
    app.require_subcommand(1);

    int rc = 0;

    // gen-synth
    int gs_classes = 0, gs_per_class = 0, gs_dim = 0;
    double gs_sigma = 0.0;
    uint64_t gs_seed = 0;
    std::string gs_out;
    auto* gen = app.add_subcommand("gen-synth", "Generate Gaussian-cluster embeddings");
    gen->add_option("--classes", gs_classes, "Number of classes")->required();
    gen->add_option("--per-class", gs_per_class, "Examples per class")->required();
    gen->add_option("--dim", gs_dim, "Embedding dimensionality")->required();
    gen->add_option("--sigma", gs_sigma, "Cluster standard deviation")->required();
    gen->add_option("--seed", gs_seed, "Random seed")->required();
    gen->add_option("--out", gs_out, "Output embedding file")->required();
    gen->callback([&] { rc = run_gen_synth(gs_classes, gs_per_class, gs_dim, gs_sigma, gs_seed, gs_out); });

    // train
    std::string tr_meta, tr_val, tr_config, tr_out, tr_sim = "abssub_sum";
    int tr_hidden = 512;
    auto* tr = app.add_subcommand("train", "Meta-train a model");
    tr->add_option("--meta", tr_meta, "Meta-training embeddings")->required();
    tr->add_option("--val", tr_val, "Validation embeddings (disjoint classes)")->required();
    tr->add_option("--config", tr_config, "TrainConfig file (key = value)")->required();
    tr->add_option("--out", tr_out, "Output model checkpoint")->required();
    tr->add_option("--hidden", tr_hidden, "Matching-network hidden width");
    tr->add_option("--sim", tr_sim, "Similarity features: abssub_sum|abssub|sum");
    tr->callback([&] { rc = run_train(tr_meta, tr_val, tr_config, tr_out, tr_hidden, tr_sim); });

    // eval
    std::string ev_model, ev_registry, ev_test, ev_report;
    std::vector<int> ev_seen_sizes;
    auto* ev = app.add_subcommand("eval", "Open-world evaluation with a rejection class");
    ev->add_option("--model", ev_model, "Model checkpoint")->required();
    ev->add_option("--registry", ev_registry, "Registry manifest of stored test classes")->required();
    ev->add_option("--test", ev_test, "Held-out test embeddings")->required();
    ev->add_option("--seen-sizes", ev_seen_sizes, "Comma-separated seen-set sizes")
        ->required()
        ->delimiter(',');
    ev->add_option("--report", ev_report, "Report output path")->required();
    ev->callback([&] { rc = run_eval(ev_model, ev_registry, ev_test, ev_seen_sizes, ev_report); });

    // classify
    std::string cl_model, cl_registry, cl_input;
    bool cl_explain = false;
    auto* cl = app.add_subcommand("classify", "Classify examples against the current seen set");
    cl->add_option("--model", cl_model, "Model checkpoint")->required();
    cl->add_option("--registry", cl_registry, "Registry manifest")->required();
    cl->add_option("--input", cl_input, "Embeddings to classify")->required();
    cl->add_flag("--explain", cl_explain, "Print the per-class probability map, descending");
    cl->callback([&] { rc = run_classify(cl_model, cl_registry, cl_input, cl_explain); });

    // registry-add
    std::string ra_registry, ra_label, ra_examples;
    auto* ra = app.add_subcommand("registry-add", "Add a class to a registry (creates it if missing)");
    ra->add_option("--registry", ra_registry, "Registry manifest path")->required();
    ra->add_option("--label", ra_label, "Class label")->required();
    ra->add_option("--examples", ra_examples, "Embedding file with the class examples")->required();
    ra->callback([&] { rc = run_registry_add(ra_registry, ra_label, ra_examples); });

    // registry-remove
    std::string rr_registry, rr_label;
    auto* rr = app.add_subcommand("registry-remove", "Remove a class from a registry");
    rr->add_option("--registry", rr_registry, "Registry manifest path")->required();
    rr->add_option("--label", rr_label, "Class label")->required();
    rr->callback([&] { rc = run_registry_remove(rr_registry, rr_label); });

    // grad-check
    int gc_dim = 8, gc_k = 3, gc_hidden = 16;
    uint64_t gc_seed = 0;
    auto* gc = app.add_subcommand("grad-check", "Finite-difference check of the full model gradient");
    gc->add_option("--dim", gc_dim, "Embedding dimensionality")->required();
    gc->add_option("--k", gc_k, "Neighbors per pair")->required();
    gc->add_option("--hidden", gc_hidden, "Matching-network hidden width")->required();
    gc->add_option("--seed", gc_seed, "Random seed")->required();
    gc->callback([&] { rc = run_grad_check(gc_dim, gc_k, gc_hidden, gc_seed); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const l2ac::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
