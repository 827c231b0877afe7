#include "l2ac/registry.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_map>

namespace l2ac {

void SeenClassSet::add_class(const std::string& label,
                             const std::vector<ExampleRecord>& examples) {
    if (index_.contains(label)) {
        throw DuplicateClassError("class '" + label + "' already in the seen set");
    }
    if (examples.empty()) {
        throw Error("add_class('" + label + "'): example list is empty");
    }
    if (store_.dim() == 0) {
        store_ = EmbeddingMatrix(static_cast<int>(examples.front().vector.size()));
    }

    std::vector<int> rows;
    rows.reserve(examples.size());
    for (const auto& ex : examples) {
        ExampleRecord rec = ex;
        rec.class_label = label;
        rows.push_back(store_.append(std::move(rec)));
    }
    index_.add_class(label, std::move(rows), store_);
    ++generation_;
}

void SeenClassSet::remove_class(const std::string& label) {
    if (!index_.contains(label)) {
        throw UnknownClassError("class '" + label + "' not in the seen set");
    }

    // Compact the backing matrix so the label's ids can be re-added later.
    // Surviving rows keep their relative order, which keeps every other
    // class's retrieval (and therefore its scores) bit-identical.
    EmbeddingMatrix next(store_.dim());
    std::unordered_map<int, int> remap;
    for (int r = 0; r < store_.num_rows(); ++r) {
        const ExampleRecord& rec = store_.row(r);
        if (rec.class_label == label) continue;
        remap[r] = next.append(rec);
    }

    ClassIndex next_index;
    for (const auto& other : index_.labels()) {
        if (other == label) continue;
        std::vector<int> rows;
        rows.reserve(index_.members(other).size());
        for (int r : index_.members(other)) rows.push_back(remap.at(r));
        next_index.add_class(other, std::move(rows), next);
    }

    store_ = std::move(next);
    index_ = std::move(next_index);
    ++generation_;
}

Prediction SeenClassSet::classify(const Vec& x, const MetaClassifier& model, int k) const {
    if (index_.num_classes() == 0) throw EmptySeenSetError("classify: seen set is empty");
    const Decision d = decide(x, index_, store_, model, k);
    Prediction p;
    p.rejected = d.rejected;
    p.outcome = d.rejected ? kRejectOutcome : d.label;
    p.scores = d.scores;
    p.k_used = k;
    return p;
}

Prediction SeenClassSet::classify_mean_vote(const Vec& x, const MetaClassifier& model,
                                            int top_m) const {
    if (index_.num_classes() == 0) throw EmptySeenSetError("classify: seen set is empty");
    const Decision d = decide_mean_vote(x, index_, store_, model, top_m);
    Prediction p;
    p.rejected = d.rejected;
    p.outcome = d.rejected ? kRejectOutcome : d.label;
    p.scores = d.scores;
    p.k_used = top_m;
    return p;
}

namespace {
constexpr const char* kRegistryMagic = "#l2ac-registry v1";
}

void SeenClassSet::save(const std::string& manifest_path) const {
    namespace fs = std::filesystem;
    const fs::path manifest(manifest_path);
    const fs::path dir = manifest.parent_path();

    std::ofstream out(manifest_path);
    if (!out) throw IoError("cannot write registry manifest '" + manifest_path + "'");
    out << kRegistryMagic << "\n";

    for (const auto& label : index_.labels()) {
        const std::string file = label + ".emb";
        EmbeddingMatrix per_class(store_.dim());
        for (int r : index_.members(label)) per_class.append(store_.row(r));
        save_embeddings(per_class, (dir / file).string());
        out << label << '\t' << file << "\n";
    }
    if (!out) throw IoError("write failed for '" + manifest_path + "'");
}

SeenClassSet SeenClassSet::load(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open registry manifest '" + manifest_path + "'");

    std::string line;
    if (!std::getline(in, line) || line != kRegistryMagic) {
        throw ParseError(manifest_path + ":1: expected '" + std::string(kRegistryMagic) + "'");
    }

    SeenClassSet s;
    const fs::path dir = fs::path(manifest_path).parent_path();
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(manifest_path + ":" + std::to_string(line_no) +
                             ": expected <label>\\t<path>");
        }
        const std::string label = line.substr(0, tab);
        const fs::path file = fs::path(line.substr(tab + 1));
        const fs::path resolved = file.is_absolute() ? file : dir / file;
        const EmbeddingMatrix per_class = load_embeddings(resolved.string());
        s.add_class(label, per_class.rows());
    }
    return s;
}

} // namespace l2ac
