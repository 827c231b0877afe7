#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "l2ac/embedding.hpp"

namespace l2ac {

double cosine(const Vec& a, const Vec& b);

// Per-class membership (row indices into an EmbeddingMatrix) with a cached
// class vector: the arithmetic mean of the member vectors, recomputed on any
// membership change. Reads are concurrency-safe; mutation needs exclusive
// access.
class ClassIndex {
public:
    void add_class(const std::string& label, std::vector<int> rows, const EmbeddingMatrix& m);
    void remove_class(const std::string& label);

    bool contains(const std::string& label) const { return classes_.count(label) != 0; }
    int num_classes() const { return static_cast<int>(classes_.size()); }

    const std::vector<int>& members(const std::string& label) const;
    const Vec& class_vector(const std::string& label) const;

    // Labels in insertion order (registry manifests rely on this).
    const std::vector<std::string>& labels() const { return order_; }

private:
    struct Entry {
        std::vector<int> rows;
        Vec class_vector;
    };

    std::map<std::string, Entry> classes_;
    std::vector<std::string> order_;
};

// Index over every class in the matrix, members in row order.
ClassIndex build_class_index(const EmbeddingMatrix& m);
// Restricted to the given labels; throws UnknownClass if one has no rows.
ClassIndex build_class_index(const EmbeddingMatrix& m, const std::set<std::string>& classes);

// Up to k member rows of `label` sorted by descending cosine to the query,
// ties broken by ascending row index. `exclude_id`, when set, removes that
// stored example before ranking (used when the query is itself a member).
std::vector<int> topk_in_class(const Vec& query, const std::string& label, int k,
                               const ClassIndex& idx, const EmbeddingMatrix& m,
                               const std::optional<std::string>& exclude_id = std::nullopt);

// The n classes other than own_class whose class vectors are most cosine-
// similar to the query, descending, ties broken by lexicographic label.
std::vector<std::string> rank_negative_classes(const Vec& query, const std::string& own_class,
                                               int n, const ClassIndex& idx);

} // namespace l2ac
