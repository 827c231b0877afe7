#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "l2ac/registry.hpp"
#include "l2ac/trainer.hpp"

namespace l2ac {

// Label under which everything outside the seen set is scored.
inline constexpr const char* kRejectClass = "REJECT";

struct EvalReport {
    int seen_size = 0;
    std::map<std::string, double> per_class_f1;
    std::map<std::string, double> per_class_precision;
    std::map<std::string, double> per_class_recall;
    std::map<std::string, int> support;                       // gold counts, N_c
    double weighted_f1 = 0.0;                                 // support-weighted mean F1
    double macro_f1 = 0.0;                                    // unweighted mean over S u {REJECT}
    std::map<std::pair<std::string, std::string>, int> confusion; // (gold, pred) -> count
};

// Per-class precision/recall/F1 over seen_labels plus the rejection class,
// with F1 = 0 whenever precision + recall = 0. Gold and pred entries must
// already use kRejectClass for anything outside the seen set.
EvalReport score_predictions(const std::vector<std::string>& gold,
                             const std::vector<std::string>& pred,
                             const std::set<std::string>& seen_labels);

// Structured report: summary keys, nested per-class blocks, a
// gold<TAB>pred<TAB>count confusion section and a flat key<TAB>value section.
void write_report(std::ostream& out, const EvalReport& report);
std::string report_to_string(const EvalReport& report);

struct SyntheticSpec {
    int num_classes = 1;
    int per_class = 1;
    int dim = 2;
    double sigma = 0.1;   // cluster standard deviation: RMS distance from the mean
    uint64_t seed = 0;
};

// One unit-norm Gaussian mean per class, then per_class isotropic Gaussian
// points whose RMS distance from the mean is sigma (per-coordinate std
// sigma/sqrt(dim)). Ids are `<class>-<i>`, labels `c<zero-padded idx>`, rows
// class-major in generation order. Deterministic given the seed.
EmbeddingMatrix gen_synthetic(const SyntheticSpec& spec);

struct ExperimentPlan {
    std::vector<std::string> meta_classes;
    std::vector<std::string> val_classes;
    std::vector<std::string> test_classes;   // order defines the expansion order
    std::vector<int> seen_sizes;
    int stored_per_class = 25;               // leading rows of each test class go to the registry
    int k = 5;
    int n = 9;
    int hidden = 512;
    SimKind sim = SimKind::abssub_sum;
    std::vector<uint64_t> seeds;             // consumed by run_openworld_experiment_multi
};

struct ExperimentResult {
    MetaClassifier model;
    std::string checkpoint_text;                          // serialized model (hash/compare)
    std::vector<EvalReport> reports;                      // one per seen_size
    std::vector<std::vector<Prediction>> predictions;     // [seen_size][held-out example]
    std::vector<std::string> heldout_ids;                 // aligned with predictions[i]
    std::vector<std::string> heldout_gold;                // true class labels (unmapped)
};

// Trains once on the meta classes (model selection on the validation
// classes), then for each seen size registers that many test classes and
// classifies every held-out test example, mapping gold labels outside S to
// the rejection class. The same trained parameters serve every seen size.
ExperimentResult run_openworld_experiment(const ExperimentPlan& plan,
                                          const EmbeddingMatrix& data,
                                          const TrainConfig& cfg);

// One run per plan.seeds entry (cfg.seed is overridden per run).
std::vector<ExperimentResult> run_openworld_experiment_multi(const ExperimentPlan& plan,
                                                             const EmbeddingMatrix& data,
                                                             const TrainConfig& cfg);

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;
};

MetricSummary summarize(const std::vector<double>& values);

} // namespace l2ac
