#include <benchmark/benchmark.h>

#include "l2ac/eval.hpp"
#include "l2ac/meta_classifier.hpp"
#include "l2ac/ranker.hpp"
#include "l2ac/registry.hpp"
#include "l2ac/rng.hpp"
#include "l2ac/trainer.hpp"

using namespace l2ac;

namespace {

EmbeddingMatrix bench_data(int classes, int per_class, int dim, uint64_t seed) {
    SyntheticSpec spec;
    spec.num_classes = classes;
    spec.per_class = per_class;
    spec.dim = dim;
    spec.sigma = 0.3;
    spec.seed = seed;
    return gen_synthetic(spec);
}

MetaClassifier bench_model(int dim, int k, int hidden) {
    HyperParams hyper;
    hyper.k = k;
    hyper.dim = dim;
    hyper.hidden = hidden;
    return MetaClassifier(hyper, 42);
}

Vec bench_query(int dim) {
    Rng rng(17);
    Vec q(static_cast<size_t>(dim));
    for (double& v : q) v = rng.uniform(-1, 1);
    return q;
}

} // namespace

static void BM_TopkInClass(benchmark::State& state) {
    const int members = static_cast<int>(state.range(0));
    const EmbeddingMatrix m = bench_data(1, members, 64, 3);
    const ClassIndex idx = build_class_index(m);
    const std::string label = m.labels().front();
    const Vec q = bench_query(64);
    for (auto _ : state) {
        auto top = topk_in_class(q, label, 5, idx, m);
        benchmark::DoNotOptimize(top);
    }
    state.SetComplexityN(members);
}
BENCHMARK(BM_TopkInClass)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oN);

static void BM_MatchScore(benchmark::State& state) {
    const int hidden = static_cast<int>(state.range(0));
    const MetaClassifier model = bench_model(64, 5, hidden);
    const Vec a = bench_query(64);
    Rng rng(23);
    Vec b(64);
    for (double& v : b) v = rng.uniform(-1, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.match_score(a, b));
    }
}
BENCHMARK(BM_MatchScore)->Arg(32)->Arg(128)->Arg(512);

static void BM_ClassProbability(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    const MetaClassifier model = bench_model(64, k, 128);
    const Vec q = bench_query(64);
    Rng rng(29);
    std::vector<Vec> neighbors;
    for (int i = 0; i < k; ++i) {
        Vec v(64);
        for (double& x : v) x = rng.uniform(-1, 1);
        neighbors.push_back(std::move(v));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.class_probability(q, neighbors));
    }
}
BENCHMARK(BM_ClassProbability)->Arg(1)->Arg(5)->Arg(20);

static void BM_PairBackward(benchmark::State& state) {
    MetaClassifier model = bench_model(64, 5, 128);
    const Vec q = bench_query(64);
    Rng rng(31);
    std::vector<Vec> neighbors;
    for (int i = 0; i < 5; ++i) {
        Vec v(64);
        for (double& x : v) x = rng.uniform(-1, 1);
        neighbors.push_back(std::move(v));
    }
    model.params().zero_grads();
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.pair_loss_and_grad(q, neighbors, 1, 9.0, 1.0));
    }
}
BENCHMARK(BM_PairBackward);

static void BM_ClassifyOverSeenSet(benchmark::State& state) {
    const int num_classes = static_cast<int>(state.range(0));
    const EmbeddingMatrix data = bench_data(num_classes, 100, 64, 5);
    const MetaClassifier model = bench_model(64, 5, 128);
    SeenClassSet s(64);
    for (const auto& label : data.labels()) {
        std::vector<ExampleRecord> examples;
        for (const auto& rec : data.rows()) {
            if (rec.class_label == label) examples.push_back(rec);
        }
        s.add_class(label, examples);
    }
    const Vec q = bench_query(64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(s.classify(q, model, 5));
    }
    state.SetComplexityN(num_classes);
}
BENCHMARK(BM_ClassifyOverSeenSet)->RangeMultiplier(2)->Range(2, 32)->Complexity(benchmark::oN);

static void BM_BuildPairs(benchmark::State& state) {
    const EmbeddingMatrix data = bench_data(12, 30, 32, 7);
    const auto labels = data.labels();
    const std::set<std::string> classes(labels.begin(), labels.end());
    for (auto _ : state) {
        auto pairs = build_pairs(data, classes, 5, 9);
        benchmark::DoNotOptimize(pairs);
    }
}
BENCHMARK(BM_BuildPairs);

BENCHMARK_MAIN();
