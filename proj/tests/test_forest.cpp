#include <doctest.h>

#include <sstream>

#include "sshmc/errors.hpp"
#include "sshmc/evaluation.hpp"
#include "sshmc/forest.hpp"
#include "sshmc/rng.hpp"

using namespace sshmc;

namespace {

Matrix column(const std::vector<double>& values) {
    Matrix m(values.size(), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("forest");

TEST_CASE("degenerate targets produce constant classifiers") {
    RandomForestConfig config;
    config.n_trees = 5;

    FitNotice notice = FitNotice::kNone;
    const auto all_pos = fit_forest(config, column({1.0, 2.0, 3.0}), {1, 1, 1}, &notice);
    CHECK(notice == FitNotice::kAllPositive);
    CHECK(all_pos->predict_proba(column({-100.0, 0.0, 100.0})) ==
          std::vector<double>{1.0, 1.0, 1.0});

    const auto single = fit_forest(config, column({42.0}), {0}, &notice);
    CHECK(notice == FitNotice::kAllNegative);
    CHECK(single->predict_proba(column({42.0})) == std::vector<double>{0.0});
}

TEST_CASE("separable data is separated") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        Matrix x(100, 1);
        std::vector<std::uint8_t> y(100);
        for (int i = 0; i < 50; ++i) {
            x(i, 0) = -1.0 - rng.uniform();
            y[static_cast<std::size_t>(i)] = 0;
            x(50 + i, 0) = 1.0 + rng.uniform();
            y[static_cast<std::size_t>(50 + i)] = 1;
        }
        RandomForestConfig config;
        config.seed = seed;
        const auto model = fit_forest(config, x, y);
        const auto proba = model->predict_proba(column({5.0, -5.0}));
        CHECK(proba[0] > 0.9);
        CHECK(proba[1] < 0.1);
    }
}

TEST_CASE("probabilities stay in range on noisy data") {
    Rng rng(19);
    Matrix x(80, 3);
    std::vector<std::uint8_t> y(80);
    for (std::size_t i = 0; i < 80; ++i) {
        for (std::size_t c = 0; c < 3; ++c) x(i, c) = rng.normal();
        y[i] = rng.below(2);
    }
    RandomForestConfig config;
    config.n_trees = 30;
    const auto model = fit_forest(config, x, y);
    Matrix probe(50, 3);
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t c = 0; c < 3; ++c) probe(i, c) = 3.0 * rng.normal();
    }
    for (double p : model->predict_proba(probe)) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("fit is deterministic given seed") {
    Rng rng(4);
    Matrix x(60, 2);
    std::vector<std::uint8_t> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = x(i, 0) + 0.3 * rng.normal() > 0 ? 1 : 0;
    }
    RandomForestConfig config;
    config.seed = 99;
    const auto a = fit_forest(config, x, y);
    const auto b = fit_forest(config, x, y);
    Matrix probe(30, 2);
    for (std::size_t i = 0; i < 30; ++i) {
        probe(i, 0) = rng.normal();
        probe(i, 1) = rng.normal();
    }
    CHECK(a->predict_proba(probe) == b->predict_proba(probe));
}

TEST_CASE("prediction is the mean of tree leaf fractions") {
    // A hand-written forest of two stumps with leaf fractions 0.2 and 0.6.
    const std::string text =
        "forest v1\n"
        "n_features 1\n"
        "config n_trees=2 max_features=all min_samples_split=2 max_depth=-1 seed=0\n"
        "trees 2\n"
        "tree 0 nodes 1\n"
        "-1 0x0p+0 -1 -1 0x1.999999999999ap-3\n"
        "tree 1 nodes 1\n"
        "-1 0x0p+0 -1 -1 0x1.3333333333333p-1\n";
    std::istringstream in(text);
    const auto model = load_classifier(in);
    const auto proba = model->predict_proba(column({7.0}));
    CHECK(proba[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("empty input and width checks") {
    RandomForestConfig config;
    config.n_trees = 3;
    Matrix x(4, 2);
    x(0, 0) = 0.0;
    x(1, 0) = 1.0;
    x(2, 0) = 2.0;
    x(3, 0) = 3.0;
    const auto model = fit_forest(config, x, {0, 0, 1, 1});
    CHECK(model->predict_proba(Matrix(0, 2)).empty());
    CHECK_THROWS_AS(model->predict_proba(Matrix(1, 5)), WidthMismatchError);
}

TEST_CASE("serialization round trip is exact") {
    Rng rng(31);
    Matrix x(50, 4);
    std::vector<std::uint8_t> y(50);
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t c = 0; c < 4; ++c) x(i, c) = rng.normal();
        y[i] = (x(i, 0) * x(i, 1) > 0) ? 1 : 0;
    }
    RandomForestConfig config;
    config.n_trees = 12;
    config.seed = 5;
    const auto model = fit_forest(config, x, y);
    std::stringstream buffer;
    model->save(buffer);
    const auto reloaded = load_classifier(buffer);
    Matrix probe(20, 4);
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t c = 0; c < 4; ++c) probe(i, c) = 2.0 * rng.normal();
    }
    CHECK(model->predict_proba(probe) == reloaded->predict_proba(probe));

    std::stringstream constant_buffer;
    ConstantClassifier(0.25, 3).save(constant_buffer);
    const auto constant = load_classifier(constant_buffer);
    CHECK(constant->predict_proba(Matrix(2, 3)) == std::vector<double>{0.25, 0.25});
}

TEST_CASE("label-permuted targets score near prevalence") {
    Rng rng(8);
    const double prevalence = 0.4;
    auto draw = [&](std::size_t n, Matrix& x, std::vector<LabelVector>& truth,
                    std::vector<std::uint8_t>& y) {
        x = Matrix(n, 3);
        truth.clear();
        y.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < 3; ++c) x(i, c) = rng.normal();
            y[i] = rng.uniform() < prevalence ? 1 : 0;
            truth.push_back({y[i]});
        }
    };
    Matrix x_train, x_test;
    std::vector<LabelVector> truth_train, truth_test;
    std::vector<std::uint8_t> y_train, y_test;
    draw(500, x_train, truth_train, y_train);
    draw(500, x_test, truth_test, y_test);

    RandomForestConfig config;
    config.n_trees = 50;
    const auto model = fit_forest(config, x_train, y_train);
    const auto proba = model->predict_proba(x_test);
    Matrix pred(500, 1);
    for (std::size_t i = 0; i < 500; ++i) pred(i, 0) = proba[i];
    const double ap = average_precision(pred, truth_test);
    CHECK(std::abs(ap - prevalence) < 0.1);
}

TEST_SUITE_END();
