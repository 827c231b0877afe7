#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "l2ac/tensor.hpp"

namespace l2ac {

struct ExampleRecord {
    std::string id;
    std::string class_label;
    Vec vector;
};

// The in-memory store of encoded examples: an ordered list of rows indexed
// by example id. Immutable in normal use once loaded; append-only otherwise.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    explicit EmbeddingMatrix(int dim);

    int dim() const { return dim_; }
    int num_rows() const { return static_cast<int>(rows_.size()); }

    // Validates dimension, finiteness and id uniqueness.
    int append(ExampleRecord rec);

    const ExampleRecord& row(int i) const;
    const std::vector<ExampleRecord>& rows() const { return rows_; }

    bool has_id(const std::string& id) const { return index_.count(id) != 0; }
    int row_of(const std::string& id) const;

    // Rows in the requested order; throws IndexError on a bad index.
    std::vector<Vec> lookup(const std::vector<int>& row_indices) const;

    // Distinct labels in first-appearance order.
    std::vector<std::string> labels() const;

private:
    int dim_ = 0;
    std::vector<ExampleRecord> rows_;
    std::unordered_map<std::string, int> index_;
};

// File format (UTF-8 text):
//   line 1:            #l2ac-emb v1 dim=<D>
//   following lines:   <id>\t<class_label>\t<v1> <v2> ... <vD>
// Lines after the header starting with '#' are comments; blank lines are
// skipped. Values are full-precision decimal so save/load round-trips
// bit-exactly.
EmbeddingMatrix load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingMatrix& m, const std::string& path);

struct Encoder {
    enum class Kind { feature_hash, precomputed };
    Kind kind = Kind::feature_hash;
    int dim = 0;
    uint64_t seed = 0;
};

// Feature-hash encoder: each token goes through a seeded 64-bit hash into one
// of `dim` buckets, counts accumulate, and the result is L2-normalized.
// Precomputed encoders cannot encode (their vectors arrive via file).
Vec encode(const std::vector<std::string>& doc, const Encoder& enc);

// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

} // namespace l2ac
