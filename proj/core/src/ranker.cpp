#include "l2ac/ranker.hpp"

#include <algorithm>
#include <cmath>

namespace l2ac {

double cosine(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) {
        throw ShapeError("cosine: operands have sizes " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw ZeroVectorError("cosine: zero-norm operand");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void ClassIndex::add_class(const std::string& label, std::vector<int> rows,
                           const EmbeddingMatrix& m) {
    if (contains(label)) throw DuplicateClassError("class '" + label + "' already present");
    if (rows.empty()) throw Error("class '" + label + "' must have at least one member");

    Entry e;
    e.class_vector.assign(static_cast<size_t>(m.dim()), 0.0);
    for (int r : rows) {
        const Vec& v = m.row(r).vector;
        for (size_t i = 0; i < v.size(); ++i) e.class_vector[i] += v[i];
    }
    for (double& x : e.class_vector) x /= static_cast<double>(rows.size());
    e.rows = std::move(rows);

    classes_.emplace(label, std::move(e));
    order_.push_back(label);
}

void ClassIndex::remove_class(const std::string& label) {
    auto it = classes_.find(label);
    if (it == classes_.end()) throw UnknownClassError("unknown class '" + label + "'");
    classes_.erase(it);
    order_.erase(std::find(order_.begin(), order_.end(), label));
}

const std::vector<int>& ClassIndex::members(const std::string& label) const {
    auto it = classes_.find(label);
    if (it == classes_.end()) throw UnknownClassError("unknown class '" + label + "'");
    return it->second.rows;
}

const Vec& ClassIndex::class_vector(const std::string& label) const {
    auto it = classes_.find(label);
    if (it == classes_.end()) throw UnknownClassError("unknown class '" + label + "'");
    return it->second.class_vector;
}

ClassIndex build_class_index(const EmbeddingMatrix& m) {
    ClassIndex idx;
    for (const auto& label : m.labels()) {
        std::vector<int> rows;
        for (int r = 0; r < m.num_rows(); ++r) {
            if (m.row(r).class_label == label) rows.push_back(r);
        }
        idx.add_class(label, std::move(rows), m);
    }
    return idx;
}

ClassIndex build_class_index(const EmbeddingMatrix& m, const std::set<std::string>& classes) {
    ClassIndex idx;
    for (const auto& label : classes) {
        std::vector<int> rows;
        for (int r = 0; r < m.num_rows(); ++r) {
            if (m.row(r).class_label == label) rows.push_back(r);
        }
        if (rows.empty()) throw UnknownClassError("class '" + label + "' has no examples");
        idx.add_class(label, std::move(rows), m);
    }
    return idx;
}

std::vector<int> topk_in_class(const Vec& query, const std::string& label, int k,
                               const ClassIndex& idx, const EmbeddingMatrix& m,
                               const std::optional<std::string>& exclude_id) {
    if (k < 1) throw Error("topk_in_class: k must be >= 1");
    const std::vector<int>& rows = idx.members(label);

    std::vector<std::pair<double, int>> scored;
    scored.reserve(rows.size());
    for (int r : rows) {
        if (exclude_id && m.row(r).id == *exclude_id) continue;
        scored.emplace_back(cosine(query, m.row(r).vector), r);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    const size_t take = std::min(static_cast<size_t>(k), scored.size());
    std::vector<int> out;
    out.reserve(take);
    for (size_t i = 0; i < take; ++i) out.push_back(scored[i].second);
    return out;
}

std::vector<std::string> rank_negative_classes(const Vec& query, const std::string& own_class,
                                               int n, const ClassIndex& idx) {
    if (n < 1) throw Error("rank_negative_classes: n must be >= 1");

    std::vector<std::pair<double, std::string>> scored;
    for (const auto& label : idx.labels()) {
        if (label == own_class) continue;
        scored.emplace_back(cosine(query, idx.class_vector(label)), label);
    }
    if (static_cast<int>(scored.size()) < n) {
        throw InsufficientClassesError("need " + std::to_string(n) +
                                       " negative classes, only " +
                                       std::to_string(scored.size()) + " available");
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(scored[static_cast<size_t>(i)].second);
    return out;
}

} // namespace l2ac
