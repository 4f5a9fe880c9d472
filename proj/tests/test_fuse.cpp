// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#include "test_util.hpp"

#include <semrank/fuse.hpp>

#include <gtest/gtest.h>

#include <numeric>
#include <set>

using namespace semrank;
using namespace semrank::testing;

namespace {

RankedList ranking(std::vector<std::string> ids) {
    RankedList l{"q", {}, 0};
    double s = ids.size();
    for (auto& id : ids) l.entries.push_back({std::move(id), s--});
    return l;
}

std::vector<std::string> ids_of(const RankedList& l) {
    std::vector<std::string> out;
    for (const auto& e : l.entries) out.push_back(e.doc_id);
    return out;
}

RankedList random_ranking(Rng& rng, std::size_t pool, std::size_t max_len) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < pool; ++i) ids.push_back("d" + std::to_string(i));
    rng.shuffle(ids);
    ids.resize(1 + rng.index(std::min(max_len, pool)));
    return ranking(ids);
}

}  // namespace

TEST(Fuse, SymmetricTie) {
    auto out = fuse({{ranking({"a", "b", "c"}), ranking({"c", "b", "a"})}, {1, 1}});
    EXPECT_EQ(ids_of(out), (std::vector<std::string>{"a", "b", "c"}));
    for (const auto& e : out.entries) EXPECT_EQ(e.score, 4.0 / 3.0);
    EXPECT_EQ(out.entries[0].score, out.entries[2].score);
}

TEST(Fuse, WeightedPreset) {
    auto out = fuse({{ranking({"a", "b", "c"}), ranking({"c", "b", "a"})}, parse_fusion_weights("fusion.paper-weighted")});
    EXPECT_EQ(ids_of(out), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_NEAR(out.entries[0].score, 7.0 / 3.0, 1e-15);
    EXPECT_NEAR(out.entries[1].score, 2.0, 1e-15);
    EXPECT_NEAR(out.entries[2].score, 5.0 / 3.0, 1e-15);
}

TEST(Fuse, AbsentDocsContributeNothing) {
    // D = {a, b, c}; r2 lacks c.
    auto out = fuse({{ranking({"a", "b", "c"}), ranking({"b", "a"})}, {1, 1}});
    EXPECT_EQ(ids_of(out), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_NEAR(out.entries[0].score, 5.0 / 3.0, 1e-15);
    EXPECT_NEAR(out.entries[2].score, 1.0 / 3.0, 1e-15);
}

TEST(Fuse, Errors) {
    EXPECT_THROW(fuse({}), UsageError);
    EXPECT_THROW(fuse({{ranking({"a"})}, {1, 2}}), UsageError);
    EXPECT_THROW(fuse({{ranking({"a"})}, {0}}), UsageError);
    EXPECT_THROW(fuse({{ranking({"a", "a"})}, {1}}), DataError);
    EXPECT_EQ(parse_fusion_weights("fusion.paper-uniform"), (std::vector<std::uint32_t>{1, 1}));
    EXPECT_EQ(parse_fusion_weights("3,1,2"), (std::vector<std::uint32_t>{3, 1, 2}));
    EXPECT_THROW(parse_fusion_weights("1,0"), UsageError);
    EXPECT_THROW(parse_fusion_weights("x"), UsageError);
}

TEST(Fuse, Properties) {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        // Single ranking keeps its order.
        auto r = random_ranking(rng, 30, 30);
        const std::uint32_t w = 1 + static_cast<std::uint32_t>(rng.index(9));
        EXPECT_EQ(ids_of(fuse({{r}, {w}})), ids_of(r));

        // Several rankings with random weights.
        const std::size_t m = 2 + rng.index(3);
        FusionInput in;
        std::uint32_t wsum = 0;
        for (std::size_t i = 0; i < m; ++i) {
            in.rankings.push_back(random_ranking(rng, 20, 15));
            in.weights.push_back(1 + static_cast<std::uint32_t>(rng.index(5)));
            wsum += in.weights.back();
        }
        auto base = fuse(in);

        auto scaled = in;
        const std::uint32_t c = 2 + static_cast<std::uint32_t>(rng.index(5));
        for (auto& x : scaled.weights) x *= c;
        EXPECT_EQ(ids_of(fuse(scaled)), ids_of(base));

        auto permuted = in;
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (std::size_t i = 0; i < m; ++i) {
            permuted.rankings[i] = in.rankings[order[i]];
            permuted.weights[i] = in.weights[order[i]];
        }
        EXPECT_EQ(fuse(permuted), base);

        std::set<std::string> all;
        for (const auto& rk : in.rankings)
            for (const auto& e : rk.entries) all.insert(e.doc_id);
        EXPECT_EQ(base.entries.size(), all.size());
        for (const auto& e : base.entries) {
            EXPECT_GT(e.score, 0.0);
            EXPECT_LE(e.score, static_cast<double>(wsum));
        }
    }
}
