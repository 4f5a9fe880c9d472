// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#include "test_util.hpp"

#include <semrank/pipeline.hpp>
#include <semrank/synth.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <set>

using namespace semrank;
using namespace semrank::testing;

TEST(Config, DefaultsOverridesAndErrors) {
    Config c;
    EXPECT_EQ(c.integer("dim"), 64u);
    EXPECT_EQ(c.str("fusion"), "fusion.paper-weighted");
    EXPECT_EQ(c.integer_list("eval_k"), (std::vector<std::size_t>{5, 10}));
    EXPECT_THROW(c.set("dimm", "3"), UsageError);
    c.set_assignment(" dim = 8 ");
    EXPECT_EQ(c.integer("dim"), 8u);
    c.set("dim", "-1");
    EXPECT_THROW(c.integer("dim"), UsageError);
    c.set("exclude_self", "maybe");
    EXPECT_THROW(c.flag("exclude_self"), UsageError);
    EXPECT_THROW(c.set_assignment("novalue"), UsageError);

    TempDir dir("conf");
    std::ofstream(dir.file("a.conf")) << "# comment\ndim=16  # trailing\n\nnprobe=2\n";
    auto f = Config::from_file(dir.file("a.conf"));
    EXPECT_EQ(f.integer("dim"), 16u);
    EXPECT_EQ(f.integer("nprobe"), 2u);
    std::ofstream(dir.file("b.conf")) << "dim=16\ntypo=1\n";
    try {
        Config::from_file(dir.file("b.conf"));
        FAIL();
    } catch (const UsageError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
    }
}

TEST(Synth, SmallCorpusShape) {
    SynthParams p;
    p.clusters = 2;
    p.paraphrases = 3;
    p.negatives = 0;
    auto s = make_synthetic_corpus(p);
    EXPECT_EQ(s.corpus.size(), 6u);
    EXPECT_EQ(s.qrels.size(), 12u);
    for (const auto& j : s.qrels.all()) EXPECT_EQ(j.grade, 3);
    EXPECT_EQ(s.corpus.sentences()[0].id, "c0p0");
    p.negatives = 2;
    auto n = make_synthetic_corpus(p);
    for (const auto& j : n.qrels.all())
        if (j.grade == 0) {
            EXPECT_NE(j.doc_id.substr(0, 2), j.query_id.substr(0, 2));
        }
}

TEST(Synth, VocabularySplitControlsOverlap) {
    SynthParams p;
    p.clusters = 5;
    p.paraphrases = 4;
    p.vocab_split = 1.0;
    auto disjoint = make_synthetic_corpus(p);
    for (const auto& [term, df] : disjoint.corpus.stats().df) EXPECT_EQ(df, 1u) << term;
    p.vocab_split = 0.0;
    auto shared = make_synthetic_corpus(p);
    for (const auto& s : shared.corpus.sentences()) {
        auto a = s.tokens, b = shared.corpus.sentences()[0].tokens;
        std::sort(a.begin(), a.end());
        if (s.id.substr(0, 2) == "c0") {
            std::sort(b.begin(), b.end());
            EXPECT_EQ(a, b);
        }
    }
}

TEST(Synth, DeterministicAndValidated) {
    SynthParams p;
    p.noise_words = 2;
    auto a = make_synthetic_corpus(p), b = make_synthetic_corpus(p);
    ASSERT_EQ(a.corpus.size(), b.corpus.size());
    for (std::size_t i = 0; i < a.corpus.size(); ++i)
        EXPECT_EQ(a.corpus.sentences()[i].text, b.corpus.sentences()[i].text);
    EXPECT_EQ(a.qrels, b.qrels);
    p.vocab_split = 1.5;
    EXPECT_THROW(make_synthetic_corpus(p), UsageError);
}

class EngineTest : public ::testing::Test {
protected:
    void SetUp() override {
        SynthParams p;
        p.clusters = 12;
        p.paraphrases = 4;
        p.vocab_split = 0.5;
        p.noise_words = 2;
        p.noise_vocab = 10;
        cfg = write_synthetic(dir, p);
        cfg.set("dim", "16");
    }
    TempDir dir{"engine"};
    Config cfg;
};

TEST_F(EngineTest, RunsAreWellFormed) {
    Engine e(cfg);
    EXPECT_EQ(e.queries().size(), 48u);
    for (auto system : kAllSystems) {
        auto rs = e.run_all(system);
        EXPECT_EQ(rs.tag, system_key(system));
        for (const auto& [qid, list] : rs.lists) {
            EXPECT_TRUE(has_unique_ids(list));
            for (const auto& entry : list.entries) EXPECT_NE(entry.doc_id, qid);
        }
    }
}

TEST_F(EngineTest, ComposedSystemsMatchTheirParts) {
    Engine e(cfg);
    const auto& q = e.queries()[5];
    auto bm25 = e.run(System::Bm25, q);
    EXPECT_EQ(e.run(System::RerankedBm25, q), e.rerank_list(bm25, q));
    auto tuned = e.run(System::FineTuned, q);
    auto rr = e.run(System::RerankedFineTuned, q);
    EXPECT_EQ(rr, e.rerank_list(tuned, q));
    EXPECT_EQ(e.run(System::Fused, q), fuse({{rr, bm25}, {2, 1}}));
}

TEST_F(EngineTest, SelfExclusionToggle) {
    cfg.set("exclude_self", "false");
    Engine e(cfg);
    auto list = e.run(System::Unsupervised, e.queries()[0]);
    ASSERT_FALSE(list.entries.empty());
    EXPECT_EQ(list.entries[0].doc_id, e.queries()[0].id);
}

TEST_F(EngineTest, IvfWithFullProbeMatchesFlat) {
    Engine flat(cfg);
    cfg.set("index", "ivf");
    cfg.set("nlist", "6");
    cfg.set("nprobe", "6");
    Engine ivf(cfg);
    EXPECT_EQ(ivf.run_all(System::Unsupervised), flat.run_all(System::Unsupervised));
}

TEST_F(EngineTest, AblationIsDeterministic) {
    Engine a(cfg), b(cfg);
    auto qrels = read_qrels(cfg.str("qrels"));
    auto ra = run_ablation(a, qrels, dir.file("a"));
    auto rb = run_ablation(b, qrels, dir.file("b"));
    EXPECT_EQ(ra.rows.size(), 7u);
    EXPECT_EQ(ra.tsv(), rb.tsv());
    for (auto system : kAllSystems) {
        const auto name = std::string(system_key(system)) + ".run";
        EXPECT_EQ(slurp(dir.file("a/" + name)), slurp(dir.file("b/" + name))) << name;
    }
    EXPECT_NE(ra.table().find("Fused reranked fine-tuned x BM25 (2,1)"), std::string::npos);
}

TEST_F(EngineTest, EmptyQueryWarns) {
    Engine e(cfg);
    CaptureWarnings cap;
    EXPECT_TRUE(e.run_text(System::Bm25, "...").entries.empty());
    EXPECT_NE(cap.text().find("no terms"), std::string::npos);
}

TEST(Systems, KeysRoundTrip) {
    for (auto s : kAllSystems) EXPECT_EQ(parse_system(system_key(s)), s);
    EXPECT_THROW(parse_system("bert"), UsageError);
}

namespace {

int cli(const std::string& args) {
    const std::string cmd = std::string(SEMRANK_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
    TempDir dir("cli");
    EXPECT_EQ(cli("--help"), 0);
    EXPECT_EQ(cli("no-such-command"), 1);
    EXPECT_EQ(cli("eval --run " + dir.file("missing.run") + " --qrels " + dir.file("q")), 2);
    EXPECT_EQ(cli("ingest " + dir.file("missing.jsonl")), 2);
    EXPECT_EQ(cli("synth --clusters 3 --paraphrases 2 -o " + dir.file("s")), 0);
    EXPECT_EQ(cli("search -c " + dir.file("s/semrank.conf") + " --system bert --query x"), 1);
    EXPECT_EQ(cli("search -c " + dir.file("s/semrank.conf") + " -s dim=8 --system bm25 -o " + dir.file("r.run")), 0);
    EXPECT_EQ(cli("search -c " + dir.file("s/semrank.conf") + " -s dimm=8 --system bm25 -o " + dir.file("r.run")), 1);
    // Disjoint vocabularies: BM25 retrieves nothing, so the run file is empty.
    EXPECT_EQ(cli("eval --run " + dir.file("r.run") + " --qrels " + dir.file("s/qrels.txt")), 0);
    EXPECT_EQ(cli("eval --run-queries-only --run " + dir.file("r.run") + " --qrels " + dir.file("s/qrels.txt")), 2);
}

TEST(Cli, StagedPipelineMatchesInProcess) {
    TempDir dir("cli_stages");
    ASSERT_EQ(cli("synth --clusters 8 --paraphrases 3 --split 0.5 -o " + dir.file("s")), 0);
    const std::string conf = "-c " + dir.file("s/semrank.conf") + " -s dim=16";
    ASSERT_EQ(cli("stats " + conf + " -o " + dir.file("stats.sems")), 0);
    ASSERT_EQ(cli("index-lexical " + dir.file("s/corpus.jsonl") + " -o " + dir.file("lex.semx")), 0);
    ASSERT_EQ(cli("train-siamese " + conf + " -o " + dir.file("model.semw")), 0);
    ASSERT_EQ(cli("index-vector " + conf + " --fine-tuned --model " + dir.file("model.semw") + " -o " +
                  dir.file("vec.sema")),
              0);
    ASSERT_EQ(cli("search " + conf + " --system fine-tuned --model " + dir.file("model.semw") + " --stats " +
                  dir.file("stats.sems") + " --vector-index " + dir.file("vec.sema") + " -o " + dir.file("ft.run")),
              0);
    ASSERT_EQ(cli("search " + conf + " --system bm25 --lexical-index " + dir.file("lex.semx") + " -o " +
                  dir.file("bm25.run")),
              0);
    ASSERT_EQ(cli("rerank " + conf + " --run " + dir.file("ft.run") + " --model " + dir.file("model.semw") +
                  " -o " + dir.file("rr.run") + " --tag reranked-fine-tuned"),
              0);
    ASSERT_EQ(cli("fuse --runs " + dir.file("rr.run") + " " + dir.file("bm25.run") +
                  " --weights fusion.paper-weighted --tag fused -o " + dir.file("fused.run")),
              0);

    auto cfg = Config::from_file(dir.file("s/semrank.conf"));
    cfg.set("dim", "16");
    Engine e(cfg);
    EXPECT_EQ(read_run(dir.file("bm25.run")), e.run_all(System::Bm25));
    EXPECT_EQ(read_run(dir.file("ft.run")), e.run_all(System::FineTuned));
    EXPECT_EQ(read_run(dir.file("rr.run")), e.run_all(System::RerankedFineTuned));
    EXPECT_EQ(read_run(dir.file("fused.run")), e.run_all(System::Fused));

    ASSERT_EQ(cli("pool --runs " + dir.file("bm25.run") + " " + dir.file("ft.run") + " --k 3 --corpus " +
                  dir.file("s/corpus.jsonl") + " -o " + dir.file("ws.tsv")),
              0);
    ASSERT_EQ(cli("export-xenc " + conf + " -o " + dir.file("x.tsv")), 0);
    auto xenc = slurp(dir.file("x.tsv"));
    EXPECT_EQ(xenc.substr(0, 6), "[CLS] ");
    EXPECT_NE(xenc.find("\t1.0\n"), std::string::npos);
}
