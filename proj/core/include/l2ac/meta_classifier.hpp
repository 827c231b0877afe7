#pragma once

#include <map>
#include <string>
#include <vector>

#include "l2ac/nn.hpp"
#include "l2ac/param_store.hpp"
#include "l2ac/ranker.hpp"

namespace l2ac {

// Which similarity features feed the matching network. The default
// concatenates |x_t - x_a| and x_t + x_a; the single-function variants exist
// as ablations.
enum class SimKind { abssub_sum, abssub, sum };

std::string to_string(SimKind kind);
SimKind parse_sim_kind(const std::string& s);

struct HyperParams {
    int k = 5;          // max retrieved neighbors per class
    int dim = 0;        // embedding dimensionality
    int hidden = 512;   // matching-network hidden width
    SimKind sim = SimKind::abssub_sum;
};

Vec sim_features(const Vec& x_t, const Vec& x_a, SimKind kind = SimKind::abssub_sum);

// The trainable model: k weight-shared matching networks producing one score
// per retrieved neighbor, and a bidirectional recurrence (hidden size 1 per
// direction) that fuses the score sequence into a class probability.
class MetaClassifier {
public:
    MetaClassifier() = default;

    // Seeded init: all weights uniform in [-0.1, 0.1], forget-gate biases 1.
    MetaClassifier(const HyperParams& hyper, uint64_t seed);

    double match_score(const Vec& x_t, const Vec& x_a) const;

    // Scores every neighbor in the given (retrieval) order, feeds the score
    // sequence to the recurrence and returns sigmoid(W u + b).
    double class_probability(const Vec& x_t, const std::vector<Vec>& neighbors) const;

    // Forward + backward for one training pair. Accumulates parameter
    // gradients scaled by `scale` (1/batch_size); returns the unscaled loss.
    double pair_loss_and_grad(const Vec& x_t, const std::vector<Vec>& neighbors,
                              int label, double weight, double scale);

    const HyperParams& hyper() const { return hyper_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Width of the similarity feature vector (2*dim or dim).
    int feature_dim() const;

    // Checkpoint text, header line then tensors in fixed order
    // (see save() docs in the implementation). Round-trips bit-exactly.
    std::string serialize() const;
    static MetaClassifier deserialize(const std::string& text);

    void save(const std::string& path) const;
    static MetaClassifier load(const std::string& path);

private:
    HyperParams hyper_;
    ParamStore params_;
};

struct Decision {
    bool rejected = true;
    std::string label;                   // empty iff rejected
    std::map<std::string, double> scores;
};

// Open-world decision: per class, retrieve top-k and compute the class
// probability; reject when the maximum is <= 0.5, otherwise pick the argmax
// (probability ties broken by lexicographic label).
Decision decide(const Vec& x_t, const ClassIndex& idx, const EmbeddingMatrix& m,
                const MetaClassifier& model, int k);

// Non-parametric voting variant: the per-class score is the mean of the
// match scores of the top-`top_m` neighbors, same 0.5 threshold. Pairs with
// a k=1-trained model.
Decision decide_mean_vote(const Vec& x_t, const ClassIndex& idx, const EmbeddingMatrix& m,
                          const MetaClassifier& model, int top_m);

// Builds a seeded random model plus a small mixed batch of pairs (variable
// neighbor counts, both labels) and compares the analytic gradient of the
// match -> aggregate -> weighted-BCE pipeline against central finite
// differences. Returns the max relative error.
double pipeline_grad_check(int dim, int k, int hidden, SimKind sim, uint64_t seed,
                           double h = 1e-4);

} // namespace l2ac
