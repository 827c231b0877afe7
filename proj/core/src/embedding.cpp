#include "l2ac/embedding.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace l2ac {

EmbeddingMatrix::EmbeddingMatrix(int dim) : dim_(dim) {
    if (dim <= 0) throw ShapeError("embedding dimension must be positive");
}

int EmbeddingMatrix::append(ExampleRecord rec) {
    if (static_cast<int>(rec.vector.size()) != dim_) {
        throw ShapeError("example '" + rec.id + "' has " + std::to_string(rec.vector.size()) +
                         " values, expected dim " + std::to_string(dim_));
    }
    for (double v : rec.vector) {
        if (!std::isfinite(v)) {
            throw Error("example '" + rec.id + "' contains a non-finite value");
        }
    }
    if (index_.count(rec.id) != 0) {
        throw Error("duplicate example id '" + rec.id + "'");
    }
    const int row = static_cast<int>(rows_.size());
    index_.emplace(rec.id, row);
    rows_.push_back(std::move(rec));
    return row;
}

const ExampleRecord& EmbeddingMatrix::row(int i) const {
    if (i < 0 || i >= num_rows()) {
        throw IndexError("row index " + std::to_string(i) + " out of range [0, " +
                         std::to_string(num_rows()) + ")");
    }
    return rows_[static_cast<size_t>(i)];
}

int EmbeddingMatrix::row_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw IndexError("unknown example id '" + id + "'");
    return it->second;
}

std::vector<Vec> EmbeddingMatrix::lookup(const std::vector<int>& row_indices) const {
    std::vector<Vec> out;
    out.reserve(row_indices.size());
    for (int i : row_indices) out.push_back(row(i).vector);
    return out;
}

std::vector<std::string> EmbeddingMatrix::labels() const {
    std::vector<std::string> out;
    for (const auto& r : rows_) {
        bool seen = false;
        for (const auto& l : out) {
            if (l == r.class_label) { seen = true; break; }
        }
        if (!seen) out.push_back(r.class_label);
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

constexpr const char* kEmbMagic = "#l2ac-emb v1";

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
}

} // namespace

EmbeddingMatrix load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file '" + path + "'");

    std::string line;
    int line_no = 1;
    if (!std::getline(in, line)) parse_fail(path, 1, "empty file, expected header");

    int dim = 0;
    if (std::sscanf(line.c_str(), "#l2ac-emb v1 dim=%d", &dim) != 1 || dim <= 0) {
        parse_fail(path, 1, "bad header, expected '" + std::string(kEmbMagic) + " dim=<D>'");
    }

    EmbeddingMatrix m(dim);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;

        const size_t tab1 = line.find('\t');
        const size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos) {
            parse_fail(path, line_no, "expected <id>\\t<class_label>\\t<values>");
        }

        ExampleRecord rec;
        rec.id = line.substr(0, tab1);
        rec.class_label = line.substr(tab1 + 1, tab2 - tab1 - 1);
        if (rec.id.empty()) parse_fail(path, line_no, "empty example id");
        if (rec.class_label.empty()) parse_fail(path, line_no, "empty class label");

        std::istringstream values(line.substr(tab2 + 1));
        double v = 0.0;
        rec.vector.reserve(static_cast<size_t>(dim));
        while (values >> v) rec.vector.push_back(v);
        if (!values.eof()) parse_fail(path, line_no, "unparseable value");
        if (static_cast<int>(rec.vector.size()) != dim) {
            parse_fail(path, line_no, "row has " + std::to_string(rec.vector.size()) +
                                      " values, header says dim=" + std::to_string(dim));
        }
        try {
            m.append(std::move(rec));
        } catch (const Error& e) {
            parse_fail(path, line_no, e.what());
        }
    }
    return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write embedding file '" + path + "'");
    out << kEmbMagic << " dim=" << m.dim() << "\n";
    for (const auto& rec : m.rows()) {
        out << rec.id << '\t' << rec.class_label << '\t';
        for (size_t i = 0; i < rec.vector.size(); ++i) {
            if (i) out << ' ';
            out << format_double(rec.vector[i]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

// FNV-1a 64-bit, then a splitmix-style scramble keyed by the seed. Stable
// across platforms and processes, unlike std::hash.
uint64_t token_hash(const std::string& token, uint64_t seed) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : token) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

Vec encode(const std::vector<std::string>& doc, const Encoder& enc) {
    if (enc.kind == Encoder::Kind::precomputed) {
        throw UnsupportedEncoderError("precomputed encoder cannot encode; vectors arrive via file");
    }
    if (doc.empty()) throw EmptyDocumentError("cannot encode an empty document");
    if (enc.dim <= 0) throw ShapeError("encoder dim must be positive");

    Vec v(static_cast<size_t>(enc.dim), 0.0);
    for (const auto& token : doc) {
        const uint64_t bucket = token_hash(token, enc.seed) % static_cast<uint64_t>(enc.dim);
        v[bucket] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

} // namespace l2ac
