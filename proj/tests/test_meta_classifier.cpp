#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "l2ac/meta_classifier.hpp"
#include "l2ac/rng.hpp"
#include "support/oracles.hpp"

using namespace l2ac;

namespace {

MetaClassifier zeroed_model(int dim, int k, int hidden, SimKind sim = SimKind::abssub_sum) {
    HyperParams hyper;
    hyper.k = k;
    hyper.dim = dim;
    hyper.hidden = hidden;
    hyper.sim = sim;
    MetaClassifier model(hyper, 0);
    for (const auto& name : model.params().names()) {
        for (double& v : model.params().at(name).data) v = 0.0;
    }
    return model;
}

Vec random_vec(Rng& rng, int dim, double lo = -1.0, double hi = 1.0) {
    Vec v(static_cast<size_t>(dim));
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// A model whose class probability rises as neighbors get closer to the
// query: the matching net scores 5 - sum|x_t - x_a| through a sigmoid, the
// recurrence integrates the scores, and the head rescales. No training.
MetaClassifier handcrafted_model(int dim, int k) {
    MetaClassifier model = zeroed_model(dim, k, 1, SimKind::abssub);
    ParamStore& p = model.params();
    for (int c = 0; c < dim; ++c) p.at("W1").at(0, c) = -1.0;
    p.at("b1").data[0] = 10.0;
    p.at("W2").at(0, 0) = 1.0;
    p.at("b2").data[0] = -5.0;
    for (const char* cell : {"fw", "bw"}) {
        Tensor& b = p.at(std::string(cell) + ".b");
        b.data = {10.0, -10.0, 0.0, 10.0};  // i ~ 1, f ~ 0, o ~ 1
        p.at(std::string(cell) + ".Wx").at(2, 0) = 2.0;  // candidate tracks the score
    }
    p.at("W").at(0, 0) = 3.0;
    p.at("W").at(0, 1) = 3.0;
    p.at("b").data[0] = -2.0;
    return model;
}

} // namespace

TEST_SUITE_BEGIN("meta_classifier");

TEST_CASE("sim_features: definitions and symmetry") {
    CHECK(sim_features({1, 2}, {3, 1}) == Vec{2, 1, 4, 3});

    const Vec v{0.5, -1.5, 2.0};
    CHECK(sim_features(v, v) == Vec{0, 0, 0, 1, -3, 4});

    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Vec a = random_vec(rng, 4), b = random_vec(rng, 4);
        CHECK(sim_features(a, b) == sim_features(b, a));
    }

    CHECK(sim_features({1, 2}, {3, 1}, SimKind::abssub) == Vec{2, 1});
    CHECK(sim_features({1, 2}, {3, 1}, SimKind::sum) == Vec{4, 3});
    CHECK_THROWS_AS(sim_features({1}, {1, 2}), ShapeError);
}

TEST_CASE("match_score: zero parameters give exactly 0.5") {
    const MetaClassifier model = zeroed_model(4, 3, 8);
    Rng rng(10);
    for (int i = 0; i < 10; ++i) {
        CHECK(model.match_score(random_vec(rng, 4), random_vec(rng, 4)) == 0.5);
    }
}

TEST_CASE("match_score: symmetric in its arguments") {
    HyperParams hyper;
    hyper.k = 3;
    hyper.dim = 5;
    hyper.hidden = 7;
    const MetaClassifier model(hyper, 42);
    Rng rng(11);
    for (int i = 0; i < 40; ++i) {
        const Vec a = random_vec(rng, 5), b = random_vec(rng, 5);
        CHECK(model.match_score(a, b) == model.match_score(b, a));
    }
}

TEST_CASE("match_score: strictly inside (0, 1) for bounded inputs") {
    HyperParams hyper;
    hyper.k = 2;
    hyper.dim = 6;
    hyper.hidden = 12;
    const MetaClassifier model(hyper, 7);
    Rng rng(12);
    for (int i = 0; i < 100; ++i) {
        const double r = model.match_score(random_vec(rng, 6), random_vec(rng, 6));
        CHECK(r > 0.0);
        CHECK(r < 1.0);
    }
}

TEST_CASE("match_score: agrees with the scalar walk-through at dim=2, hidden=2") {
    for (SimKind sim : {SimKind::abssub_sum, SimKind::abssub, SimKind::sum}) {
        HyperParams hyper;
        hyper.k = 2;
        hyper.dim = 2;
        hyper.hidden = 2;
        hyper.sim = sim;
        const MetaClassifier model(hyper, 2024);
        Rng rng(55);
        for (int i = 0; i < 25; ++i) {
            const Vec a = random_vec(rng, 2), b = random_vec(rng, 2);
            const double want = oracle::match_score_ref(
                a, b, model.params(), sim != SimKind::sum, sim != SimKind::abssub);
            CHECK(model.match_score(a, b) == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("class_probability: zero parameters give exactly 0.5") {
    const MetaClassifier model = zeroed_model(3, 4, 6);
    Rng rng(14);
    const Vec q = random_vec(rng, 3);
    CHECK(model.class_probability(q, {random_vec(rng, 3)}) == 0.5);
    CHECK(model.class_probability(q, {random_vec(rng, 3), random_vec(rng, 3)}) == 0.5);
}

TEST_CASE("class_probability: sequence length matters") {
    HyperParams hyper;
    hyper.k = 4;
    hyper.dim = 3;
    hyper.hidden = 5;
    const MetaClassifier model(hyper, 31);
    Rng rng(15);
    const Vec q = random_vec(rng, 3);
    const Vec a = random_vec(rng, 3);
    CHECK(model.class_probability(q, {a}) != model.class_probability(q, {a, a}));
}

TEST_CASE("class_probability: agrees with the hand-unrolled recurrence at k=3") {
    HyperParams hyper;
    hyper.k = 3;
    hyper.dim = 4;
    hyper.hidden = 6;
    const MetaClassifier model(hyper, 99);
    Rng rng(16);
    for (int i = 0; i < 20; ++i) {
        const Vec q = random_vec(rng, 4);
        const std::vector<Vec> neighbors{random_vec(rng, 4), random_vec(rng, 4),
                                         random_vec(rng, 4)};
        std::vector<double> scores;
        for (const auto& nb : neighbors) scores.push_back(model.match_score(q, nb));
        const double want = oracle::class_probability_ref(scores, model.params());
        CHECK(model.class_probability(q, neighbors) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("class_probability: error paths") {
    const MetaClassifier model = zeroed_model(3, 2, 4);
    Rng rng(17);
    const Vec q = random_vec(rng, 3);
    CHECK_THROWS_AS(model.class_probability(q, {}), EmptyNeighborsError);
    const std::vector<Vec> too_many{random_vec(rng, 3), random_vec(rng, 3), random_vec(rng, 3)};
    CHECK_THROWS_AS(model.class_probability(q, too_many), Error);
}

TEST_CASE("decide: handcrafted model picks the near class and rejects far input") {
    const int dim = 4;
    const MetaClassifier model = handcrafted_model(dim, 3);

    EmbeddingMatrix m(dim);
    m.append({"n1", "near", {1, 0, 0, 0}});
    m.append({"n2", "near", {0.9, 0.1, 0, 0}});
    m.append({"f1", "far", {-8, 8, -8, 8}});
    m.append({"f2", "far", {-9, 7, -8, 8}});
    const ClassIndex idx = build_class_index(m);

    const Decision d = decide({1, 0, 0, 0}, idx, m, model, 3);
    CHECK_FALSE(d.rejected);
    CHECK(d.label == "near");
    CHECK(d.scores.at("near") > 0.5);
    CHECK(d.scores.at("far") < 0.5);

    // A query far from both classes is rejected.
    const Decision r = decide({20, 20, 20, 20}, idx, m, model, 3);
    CHECK(r.rejected);
    CHECK(r.label.empty());
}

TEST_CASE("decide: max probability exactly 0.5 rejects") {
    // Zero parameters make every class probability exactly 0.5.
    const MetaClassifier model = zeroed_model(2, 2, 4);
    EmbeddingMatrix m(2);
    m.append({"a1", "a", {1, 0}});
    m.append({"b1", "b", {0, 1}});
    const ClassIndex idx = build_class_index(m);
    const Decision d = decide({1, 1}, idx, m, model, 2);
    CHECK(d.scores.at("a") == 0.5);
    CHECK(d.scores.at("b") == 0.5);
    CHECK(d.rejected);
}

TEST_CASE("decide: exact probability ties break lexicographically") {
    const MetaClassifier model = handcrafted_model(2, 2);
    EmbeddingMatrix m(2);
    // Two classes with identical members give identical probabilities.
    m.append({"b1", "bravo", {1, 0}});
    m.append({"a1", "alpha", {1, 0}});
    const ClassIndex idx = build_class_index(m);
    const Decision d = decide({1, 0}, idx, m, model, 2);
    CHECK(d.scores.at("alpha") == d.scores.at("bravo"));
    CHECK(d.scores.at("alpha") > 0.5);
    CHECK(d.label == "alpha");
}

TEST_CASE("decide: per-class scores do not depend on other classes") {
    HyperParams hyper;
    hyper.k = 3;
    hyper.dim = 4;
    hyper.hidden = 8;
    const MetaClassifier model(hyper, 5);
    Rng rng(18);

    EmbeddingMatrix m(4);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 4; ++i) {
            m.append({"c" + std::to_string(c) + "-" + std::to_string(i),
                      "c" + std::to_string(c), random_vec(rng, 4)});
        }
    }
    ClassIndex two;
    two.add_class("c0", {0, 1, 2, 3}, m);
    two.add_class("c1", {4, 5, 6, 7}, m);
    ClassIndex three;
    three.add_class("c0", {0, 1, 2, 3}, m);
    three.add_class("c1", {4, 5, 6, 7}, m);
    three.add_class("c2", {8, 9, 10, 11}, m);

    const Vec q = random_vec(rng, 4);
    const Decision d2 = decide(q, two, m, model, 3);
    const Decision d3 = decide(q, three, m, model, 3);
    CHECK(d2.scores.at("c0") == d3.scores.at("c0"));
    CHECK(d2.scores.at("c1") == d3.scores.at("c1"));
}

TEST_CASE("decide: empty seen set") {
    const MetaClassifier model = zeroed_model(2, 2, 4);
    EmbeddingMatrix m(2);
    ClassIndex idx;
    CHECK_THROWS_AS(decide({1, 0}, idx, m, model, 2), EmptySeenSetError);
}

TEST_CASE("decide_mean_vote: averages the top match scores") {
    const MetaClassifier model = handcrafted_model(2, 1);
    EmbeddingMatrix m(2);
    m.append({"n1", "near", {1, 0}});
    m.append({"n2", "near", {0.98, 0.02}});
    m.append({"n3", "near", {1.02, -0.02}});
    m.append({"f1", "far", {-7, 7}});
    const ClassIndex idx = build_class_index(m);

    const Decision d = decide_mean_vote({1, 0}, idx, m, model, 3);
    CHECK_FALSE(d.rejected);
    CHECK(d.label == "near");
    double mean = 0.0;
    for (const auto& id : {"n1", "n2", "n3"}) {
        mean += model.match_score({1, 0}, m.row(m.row_of(id)).vector);
    }
    mean /= 3.0;
    CHECK(d.scores.at("near") == doctest::Approx(mean).epsilon(1e-15));

    // Fewer members than the vote size: averages what exists.
    const Decision f = decide_mean_vote({-7, 7}, idx, m, model, 3);
    CHECK(f.scores.at("far") == model.match_score({-7, 7}, m.row(3).vector));
}

TEST_CASE("checkpoint: serialize/deserialize round-trips bit-exactly") {
    for (SimKind sim : {SimKind::abssub_sum, SimKind::abssub, SimKind::sum}) {
        HyperParams hyper;
        hyper.k = 5;
        hyper.dim = 6;
        hyper.hidden = 9;
        hyper.sim = sim;
        const MetaClassifier model(hyper, 271828);
        const std::string text = model.serialize();
        const MetaClassifier back = MetaClassifier::deserialize(text);
        CHECK(back.serialize() == text);
        CHECK(back.hyper().k == 5);
        CHECK(back.hyper().dim == 6);
        CHECK(back.hyper().hidden == 9);
        CHECK(back.hyper().sim == sim);

        Rng rng(19);
        const Vec q = random_vec(rng, 6);
        const std::vector<Vec> nbs{random_vec(rng, 6), random_vec(rng, 6)};
        CHECK(model.class_probability(q, nbs) == back.class_probability(q, nbs));
    }
}

TEST_CASE("checkpoint: file save/load and malformed inputs") {
    HyperParams hyper;
    hyper.k = 3;
    hyper.dim = 4;
    hyper.hidden = 5;
    const MetaClassifier model(hyper, 1);
    const auto path = std::filesystem::temp_directory_path() / "l2ac-tests" / "model.l2ac";
    std::filesystem::create_directories(path.parent_path());
    model.save(path.string());
    const MetaClassifier back = MetaClassifier::load(path.string());
    CHECK(back.serialize() == model.serialize());

    CHECK_THROWS_AS(MetaClassifier::load("/nonexistent/model"), IoError);
    CHECK_THROWS_AS(MetaClassifier::deserialize("garbage"), ParseError);
    CHECK_THROWS_AS(MetaClassifier::deserialize("#l2ac-model v1 k=3 dim=4 hidden=5 sim=abssub_sum\nW1 2 2\n1 2\n3 4\n"), ParseError);
}

TEST_CASE("pipeline gradient: full model passes the finite-difference check") {
    for (SimKind sim : {SimKind::abssub_sum, SimKind::abssub, SimKind::sum}) {
        CHECK(pipeline_grad_check(4, 2, 8, sim, 12345) < 1e-4);
    }
}

TEST_SUITE_END();
