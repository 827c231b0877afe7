#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "l2ac/meta_classifier.hpp"

namespace l2ac {

struct Prediction {
    bool rejected = true;
    std::string outcome;                  // class label, or "REJECT"
    std::map<std::string, double> scores; // per-class probability
    int k_used = 0;
};

inline constexpr const char* kRejectOutcome = "REJECT";

// The dynamic seen-class set: the sole mutable state of open-world operation.
// Classes can be added or removed at any time; model parameters are never
// touched. Single-writer/multi-reader: classify is read-only against the
// generation published by the last mutation.
class SeenClassSet {
public:
    SeenClassSet() = default;
    explicit SeenClassSet(int dim) : store_(dim) {}

    void add_class(const std::string& label, const std::vector<ExampleRecord>& examples);
    void remove_class(const std::string& label);

    bool contains(const std::string& label) const { return index_.contains(label); }
    int num_classes() const { return index_.num_classes(); }
    const std::vector<std::string>& labels() const { return index_.labels(); }
    uint64_t generation() const { return generation_; }
    int dim() const { return store_.dim(); }

    Prediction classify(const Vec& x, const MetaClassifier& model, int k) const;
    Prediction classify_mean_vote(const Vec& x, const MetaClassifier& model, int top_m) const;

    const EmbeddingMatrix& store() const { return store_; }
    const ClassIndex& index() const { return index_; }

    // Manifest file: `#l2ac-registry v1` header, one `<label>\t<path>` line
    // per class in insertion order. Per-class example files use the
    // embedding format and live relative to the manifest's directory.
    void save(const std::string& manifest_path) const;
    static SeenClassSet load(const std::string& manifest_path);

private:
    EmbeddingMatrix store_;
    ClassIndex index_;
    uint64_t generation_ = 0;
};

} // namespace l2ac
