// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#include "oracles.hpp"

#include <semrank/lexical.hpp>

#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <cmath>
#include <map>

using namespace semrank;
using namespace semrank::testing;

TEST(InvertedIndex, PositionalPostings) {
    auto c = Corpus::from_texts({{"d1", "a b a"}, {"d2", "b"}, {"d3", ""}});
    InvertedIndex idx(c);
    EXPECT_EQ(idx.num_docs(), 2u);
    ASSERT_NE(idx.find("a"), nullptr);
    EXPECT_EQ(idx.find("a")->size(), 1u);
    EXPECT_EQ(idx.find("a")->front().positions, (std::vector<std::uint32_t>{0, 2}));
    EXPECT_EQ(idx.find("b")->front().positions, (std::vector<std::uint32_t>{1}));
    EXPECT_EQ(idx.doc_freq("b"), 2u);
    EXPECT_EQ(idx.collection_freq("a"), 2u);
    EXPECT_EQ(idx.find("z"), nullptr);
    EXPECT_DOUBLE_EQ(idx.avg_len(), 2.0);
}

TEST(InvertedIndex, SaveLoadRoundTrip) {
    TempDir dir("semx");
    InvertedIndex idx(random_corpus(80, 40, 4));
    idx.save(dir.file("i.semx"));
    auto back = InvertedIndex::load(dir.file("i.semx"));
    EXPECT_EQ(back, idx);
    EXPECT_DOUBLE_EQ(back.avg_len(), idx.avg_len());
    // Saving is byte-stable.
    back.save(dir.file("j.semx"));
    std::ifstream a(dir.file("i.semx"), std::ios::binary), b(dir.file("j.semx"), std::ios::binary);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
    std::ofstream(dir.file("bad.semx")) << "SEMV";
    EXPECT_THROW(InvertedIndex::load(dir.file("bad.semx")), DataError);
}
TEST(Bm25, MatchesExhaustiveScorer) {
    auto c = random_corpus(200, 60, 17, 0, 20);
    InvertedIndex idx(c);
    Rng rng(2);
    for (int q = 0; q < 20; ++q) {
        auto query = random_query(rng, 70, 1 + rng.index(5));
        auto got = bm25_search(query, idx, {}, 10);
        auto want = oracle::bm25_exhaustive(c, query, 1.2, 0.75, 10);
        ASSERT_EQ(got.entries.size(), want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            EXPECT_EQ(got.entries[i].doc_id, want[i].doc_id);
            EXPECT_NEAR(got.entries[i].score, want[i].score, 1e-9);
        }
    }
}

TEST(Bm25, EdgeCases) {
    auto c = Corpus::from_texts({{"a", "x y"}, {"b", "y z"}});
    InvertedIndex idx(c);
    EXPECT_TRUE(bm25_search({}, idx, {}, 5).entries.empty());
    EXPECT_TRUE(bm25_search({"nope"}, idx, {}, 5).entries.empty());
    EXPECT_THROW(bm25_search({"x"}, idx, {}, 0), UsageError);
    EXPECT_THROW(bm25_search({"x"}, idx, {0.0, 0.75}, 3), UsageError);
    EXPECT_THROW(bm25_search({"x"}, idx, {1.2, 1.5}, 3), UsageError);
    // Repeated query terms count once.
    EXPECT_EQ(bm25_search({"x", "x"}, idx, {}, 5), bm25_search({"x"}, idx, {}, 5));
    // Equal scores fall back to ascending id.
    auto tie = bm25_search({"y"}, idx, {}, 5);
    ASSERT_EQ(tie.entries.size(), 2u);
    EXPECT_EQ(tie.entries[0].doc_id, "a");
}

TEST(Sdm, CountsMatchQuadraticScan) {
    auto c = random_corpus(100, 8, 33, 1, 30);
    InvertedIndex idx(c);
    const std::vector<std::string> vocab = {"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7"};
    for (const auto& s : c.sentences()) {
        auto doc = std::find(idx.doc_ids().begin(), idx.doc_ids().end(), s.id) - idx.doc_ids().begin();
        for (const auto& a : vocab)
            for (const auto& b : vocab) {
                const auto* pa = detail::posting_for(idx.find(a), static_cast<std::uint32_t>(doc));
                const auto* pb = detail::posting_for(idx.find(b), static_cast<std::uint32_t>(doc));
                std::uint32_t o = 0, u = 0;
                if (pa && pb) {
                    o = ordered_count(pa->positions, pb->positions);
                    u = unordered_count(pa->positions, pb->positions, 8);
                }
                EXPECT_EQ(o, oracle::ordered_scan(s.tokens, a, b));
                EXPECT_EQ(u, oracle::unordered_scan(s.tokens, a, b, 8));
            }
    }
}

TEST(Sdm, SmallExamples) {
    // "a b c": ordered (a,b) once; unordered window 8 counts (a,b) once.
    EXPECT_EQ(ordered_count({0}, {1}), 1u);
    EXPECT_EQ(unordered_count({0}, {1}, 8), 1u);
    // "b x a": no ordered a-b; unordered pair spans 3 tokens.
    EXPECT_EQ(ordered_count({2}, {0}), 0u);
    EXPECT_EQ(unordered_count({2}, {0}, 8), 1u);
    EXPECT_EQ(unordered_count({2}, {0}, 2), 0u);
}

TEST(Sdm, SingleTermEqualsQueryLikelihood) {
    auto c = random_corpus(60, 20, 3);
    InvertedIndex idx(c);
    SdmParams p;
    auto got = sdm_search({"w3"}, idx, p, 100);
    ASSERT_FALSE(got.entries.empty());
    const double cf = idx.collection_freq("w3");
    const double total = idx.total_tokens();
    std::map<std::string, double> ql;
    for (const auto& s : c.sentences()) {
        const double tf = std::count(s.tokens.begin(), s.tokens.end(), "w3");
        if (tf == 0) continue;
        ql[s.id] = std::log((tf + p.mu * cf / total) / (s.tokens.size() + p.mu));
    }
    ASSERT_EQ(got.entries.size(), ql.size());
    for (const auto& e : got.entries) EXPECT_NEAR(e.score, p.lambda_t * ql.at(e.doc_id), 1e-12);
}

TEST(Sdm, ProximityBreaksUnigramTies) {
    // Same bag of words; only the first keeps "new york" adjacent.
    auto c = Corpus::from_texts({{"adj", "new york city"}, {"far", "york city new"}, {"x", "other words here"}});
    InvertedIndex idx(c);
    auto r = sdm_search({"new", "york"}, idx, {}, 10);
    ASSERT_EQ(r.entries.size(), 2u);
    EXPECT_EQ(r.entries[0].doc_id, "adj");
    EXPECT_GT(r.entries[0].score, r.entries[1].score);
    EXPECT_TRUE(sdm_search({"absent"}, idx, {}, 10).entries.empty());
    SdmParams full;
    full.full_corpus = true;
    EXPECT_EQ(sdm_search({"new", "york"}, idx, full, 10).entries.size(), 3u);
    SdmParams bad;
    bad.lambda_t = 0.5;
    EXPECT_THROW(sdm_search({"new"}, idx, bad, 10), UsageError);
}
