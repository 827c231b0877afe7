#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "l2ac/embedding.hpp"
#include "l2ac/meta_classifier.hpp"

namespace l2ac {

// One meta-training instance: a query row, the ordered top-k neighbor rows of
// one class, a binary label and the n:1 balancing weight.
struct TrainingPair {
    int query_row = -1;
    std::vector<int> neighbor_rows;
    int label = 0;        // 1: neighbors come from the query's class
    double weight = 1.0;  // n for positives, 1 for negatives
};

struct TrainConfig {
    int k = 5;
    int n = 9;
    int batch_size = 256;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int max_epochs = 200;
    int patience = 10;
    uint64_t seed = 0;
};

// Plain-text `key = value` file; keys are exactly the TrainConfig fields,
// unknown keys are rejected. '#' comments and blank lines are allowed.
TrainConfig load_train_config(const std::string& path);

// For every example of every listed class: one positive pair (top-k of its
// own class, the query itself excluded) and n negative pairs (top-k of each
// of the n most query-similar other classes). Positive weight n, negative 1.
std::vector<TrainingPair> build_pairs(const EmbeddingMatrix& m,
                                      const std::set<std::string>& classes,
                                      int k, int n);

// Mean weighted BCE over the pairs; no gradient side effects.
double validation_loss(const MetaClassifier& model,
                       const std::vector<TrainingPair>& val_pairs,
                       const EmbeddingMatrix& m);

struct TrainResult {
    MetaClassifier model;   // snapshot with the lowest validation loss
    int best_epoch = 0;
    double best_val_loss = 0.0;
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_val_loss;
};

// Seeded-shuffle minibatch Adam over weighted BCE with per-epoch validation
// and early stopping after `patience` epochs without improvement.
// Deterministic given (cfg, data): two runs with the same seed return
// bit-identical parameters.
TrainResult train(const std::vector<TrainingPair>& pairs,
                  const std::vector<TrainingPair>& val_pairs,
                  const TrainConfig& cfg, const EmbeddingMatrix& m,
                  int hidden, SimKind sim);

} // namespace l2ac
