// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#include "oracles.hpp"

#include <semrank/siamese.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace semrank;
using namespace semrank::testing;

namespace {

std::vector<double> project_oracle(const ProjectionModel& m, const std::vector<double>& x) {
    std::vector<double> y(m.d_out(), 0.0);
    for (std::size_t o = 0; o < m.d_out(); ++o)
        for (std::size_t i = 0; i < m.d_in(); ++i) y[o] += m.at(i, o) * x[i];
    return y;
}

}  // namespace

TEST(Forward, IdentityCases) {
    auto m = ProjectionModel::identity(3);
    EXPECT_NEAR(forward(m, std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}), 1.0, 1e-15);
    EXPECT_NEAR(forward(m, std::vector<double>{1, 0, 0}, std::vector<double>{0, 1, 0}), 0.0, 1e-15);
    EXPECT_NEAR(forward(m, std::vector<double>{1, 0, 0}, std::vector<double>{-1, 0, 0}), -1.0, 1e-15);
    EXPECT_EQ(forward(m, std::vector<double>{0, 0, 0}, std::vector<double>{1, 0, 0}), 0.0);
    EXPECT_THROW(m.project(std::vector<double>{1, 2}), UsageError);
}

TEST(Forward, ProjectionMatchesOracle) {
    Rng rng(1);
    auto m = ProjectionModel::seeded(7, 4, 3, 0.5);
    for (int t = 0; t < 20; ++t) {
        auto x = random_vector(rng, 7), y = random_vector(rng, 7);
        auto px = m.project(x);
        auto want = project_oracle(m, x);
        for (std::size_t o = 0; o < 4; ++o) EXPECT_NEAR(px[o], want[o], 1e-14);
        EXPECT_NEAR(forward(m, x, y), oracle::cosine(want, project_oracle(m, y)), 1e-14);
    }
}

TEST(Loss, MeanSquaredError) {
    Rng rng(2);
    auto m = ProjectionModel::seeded(5, 5, 1, 0.3);
    auto batch = oracle::random_pairs(rng, 9, 5);
    double want = 0;
    for (const auto& p : batch) {
        const double r = oracle::cosine(project_oracle(m, p.a), project_oracle(m, p.b)) - p.label;
        want += r * r;
    }
    EXPECT_NEAR(loss(m, batch), want / 9, 1e-14);
    EXPECT_THROW(loss(m, std::span<const LabeledPair>{}), UsageError);
}

TEST(Gradient, MatchesCentralDifferences) {
    Rng rng(3);
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t d_in = 3 + rng.index(5), d_out = 2 + rng.index(5);
        auto m = ProjectionModel::seeded(d_in, d_out, inst, 0.5);
        auto batch = oracle::random_pairs(rng, 1 + rng.index(6), d_in);
        worst = std::max(worst, oracle::gradient_check(m, batch, 1e-5));
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Gradient, Invariants) {
    Rng rng(4);
    auto m = ProjectionModel::seeded(4, 4, 9, 0.3);
    // Perfectly fit pair: cos = label.
    auto a = random_vector(rng, 4);
    auto b = a;
    for (auto& x : b) x *= 3;
    std::vector<LabeledPair> fit{{a, b, 1.0}};
    for (double x : gradient(m, fit)) EXPECT_NEAR(x, 0.0, 1e-12);

    // Duplicating every pair keeps the mean gradient.
    auto batch = oracle::random_pairs(rng, 5, 4);
    auto doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    auto g1 = gradient(m, batch), g2 = gradient(m, doubled);
    for (std::size_t k = 0; k < g1.size(); ++k) EXPECT_NEAR(g1[k], g2[k], 1e-14);

    // Tied weights: swapping the two sides changes nothing.
    auto swapped = batch;
    for (auto& p : swapped) std::swap(p.a, p.b);
    auto g3 = gradient(m, swapped);
    for (std::size_t k = 0; k < g1.size(); ++k) EXPECT_NEAR(g1[k], g3[k], 1e-14);
    EXPECT_EQ(loss(m, batch), loss(m, swapped));
}

TEST(Gradient, ZeroProjectionIsSkippedWithWarning) {
    CaptureWarnings cap;
    auto m = ProjectionModel::identity(2);
    std::vector<LabeledPair> batch{{{0, 0}, {1, 0}, 1.0}};
    for (double x : gradient(m, batch)) EXPECT_EQ(x, 0.0);
    EXPECT_NE(cap.text().find("zero projection"), std::string::npos);
}

TEST(Train, ZeroLearningRateKeepsInit) {
    Rng rng(5);
    auto pairs = oracle::random_pairs(rng, 10, 4);
    TrainConfig cfg;
    cfg.learning_rate = 0;
    cfg.epochs = 3;
    auto r = train(pairs, cfg);
    EXPECT_EQ(r.model, ProjectionModel::seeded(4, 4, cfg.seed, cfg.init_scale));
    ASSERT_EQ(r.epoch_loss.size(), 3u);
    EXPECT_EQ(r.epoch_loss[0], r.epoch_loss[2]);
}

TEST(Train, SeparableToyLossNeverRises) {
    auto pairs = oracle::separable_toy(6);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = pairs.size();
    cfg.learning_rate = 0.05;
    auto r = train(pairs, cfg);
    ASSERT_EQ(r.epoch_loss.size(), 50u);
    for (std::size_t e = 1; e < 50; ++e) EXPECT_LE(r.epoch_loss[e], r.epoch_loss[e - 1] + 1e-9) << e;
    EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

TEST(Train, SameSeedIsBitIdentical) {
    Rng rng(6);
    auto pairs = oracle::random_pairs(rng, 40, 6);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 7;
    cfg.d_out = 3;
    auto a = train(pairs, cfg), b = train(pairs, cfg);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.epoch_loss, b.epoch_loss);
    cfg.seed = 14;
    EXPECT_FALSE(train(pairs, cfg).model == a.model);
    EXPECT_EQ(a.model.d_out(), 3u);
}

TEST(Train, LearnsToSeparateClusters) {
    // Nuisance dimension dominates raw cosine; training should down-weight it.
    Rng rng(7);
    std::vector<LabeledPair> pairs;
    auto make = [&](int cls) {
        std::vector<double> v{0, 0, rng.uniform(5, 6)};
        v[cls] = rng.uniform(0.5, 1.0);
        return v;
    };
    for (int i = 0; i < 30; ++i) {
        pairs.push_back({make(0), make(0), 1.0});
        pairs.push_back({make(1), make(1), 1.0});
        pairs.push_back({make(0), make(1), 0.0});
    }
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 0.5;
    cfg.batch_size = 16;
    auto r = train(pairs, cfg);
    EXPECT_LT(r.epoch_loss.back(), 0.5 * loss(ProjectionModel::identity(3), pairs));
    auto a = make(0), b = make(0), c = make(1);
    EXPECT_GT(forward(r.model, a, b), forward(r.model, a, c));
}

TEST(Train, RejectsBadInput) {
    TrainConfig cfg;
    EXPECT_THROW(train({}, cfg), UsageError);
    std::vector<LabeledPair> bad{{{1, 0}, {0, 1}, 0.7}};
    EXPECT_THROW(train(bad, cfg), DataError);
    std::vector<LabeledPair> mismatch{{{1, 0}, {0, 1, 2}, 1.0}};
    EXPECT_THROW(train(mismatch, cfg), DataError);
    cfg.epochs = 0;
    std::vector<LabeledPair> ok{{{1, 0}, {0, 1}, 1.0}};
    EXPECT_THROW(train(ok, cfg), UsageError);
}

TEST(Model, SaveLoadRoundTrip) {
    TempDir dir("semw");
    auto m = ProjectionModel::seeded(5, 3, 2, 0.2);
    m.save(dir.file("m.semw"));
    EXPECT_EQ(ProjectionModel::load(dir.file("m.semw")), m);
    std::ofstream(dir.file("bad.semw")) << "SEMW";
    EXPECT_THROW(ProjectionModel::load(dir.file("bad.semw")), DataError);
}

TEST(RandomPairs, ExcludeSelfAndEmpty) {
    auto c = Corpus::from_texts({{"a", "x"}, {"b", "y"}, {"c", "..."}, {"d", "z"}});
    auto pairs = make_random_pairs(c, {"a", "b"}, 50, 3);
    ASSERT_EQ(pairs.size(), 100u);
    for (const auto& p : pairs) {
        EXPECT_NE(p.query_id, p.doc_id);
        EXPECT_NE(p.doc_id, "c");
        EXPECT_EQ(p.label, 0.0);
    }
    EXPECT_EQ(pairs, make_random_pairs(c, {"a", "b"}, 50, 3));
    EXPECT_TRUE(make_random_pairs(c, {"a"}, 0, 3).empty());
    auto solo = Corpus::from_texts({{"a", "x"}});
    EXPECT_TRUE(make_random_pairs(solo, {"a"}, 3, 1).empty());
}

TEST(PairFile, RoundTripAndErrors) {
    TempDir dir("pairs");
    std::vector<PairRecord> ps{{"q1", "d1", 1.0}, {"q1", "d2", 0.5}, {"q2", "d9", 0.0}};
    write_pairs(ps, dir.file("p.jsonl"));
    EXPECT_EQ(read_pairs(dir.file("p.jsonl")), ps);
    std::ofstream(dir.file("bad.jsonl")) << "{\"query_id\":\"q\",\"doc_id\":\"d\",\"label\":0.3}\n";
    EXPECT_THROW(read_pairs(dir.file("bad.jsonl")), DataError);
    std::ofstream(dir.file("bad2.jsonl")) << "{\"query_id\":\"q\"}\n";
    EXPECT_THROW(read_pairs(dir.file("bad2.jsonl")), DataError);
}
