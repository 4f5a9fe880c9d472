// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors
//
// Command-line front end: index building, searching, reranking, fusion,
// evaluation, judgment pooling, the seven-system ablation and synthetic
// corpus generation.

#include <semrank/pipeline.hpp>
#include <semrank/synth.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace semrank;

namespace {

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("-c,--config", opts.config_path, "key=value configuration file");
    cmd->add_option("-s,--set", opts.overrides, "configuration override key=value (repeatable)");
}

Config load_config(const CommonOptions& opts) {
    Config cfg = opts.config_path.empty() ? Config() : Config::from_file(opts.config_path);
    for (const auto& o : opts.overrides) cfg.set_assignment(o);
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << text;
}

void print_list(const RankedList& list, const Engine& engine) {
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        const auto& e = list.entries[i];
        const auto* text = engine.text_of(e.doc_id);
        std::cout << (i + 1) << '\t' << e.doc_id << '\t' << format_fixed(e.score, 6) << '\t'
                  << (text ? *text : std::string()) << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semrank: similar-sentence retrieval and ranking"};
    app.require_subcommand(1);
    CommonOptions common;

    // ingest ----------------------------------------------------------------
    auto* ingest_cmd = app.add_subcommand("ingest", "validate a corpus file and print term statistics");
    std::string corpus_path;
    ingest_cmd->add_option("corpus", corpus_path, "corpus file (JSON object per line)")->required();

    // stats -----------------------------------------------------------------
    auto* stats_cmd = app.add_subcommand("stats", "compute per-component embedding statistics");
    add_common(stats_cmd, common);
    std::string out_path;
    stats_cmd->add_option("-o,--out", out_path, "component statistics file")->required();

    // index-lexical ---------------------------------------------------------
    auto* lex_cmd = app.add_subcommand("index-lexical", "build the positional inverted index");
    lex_cmd->add_option("corpus", corpus_path, "corpus file")->required();
    lex_cmd->add_option("-o,--out", out_path, "index file")->required();

    // index-vector ----------------------------------------------------------
    auto* vec_cmd = app.add_subcommand("index-vector", "build a flat or IVF vector index");
    add_common(vec_cmd, common);
    vec_cmd->add_option("-o,--out", out_path, "index file")->required();
    std::string model_path, stats_path;
    bool fine_tuned = false;
    vec_cmd->add_flag("--fine-tuned", fine_tuned, "index projected vectors of the siamese model");
    vec_cmd->add_option("--model", model_path, "projection model (default: train from configuration)");
    vec_cmd->add_option("--stats", stats_path, "component statistics file to reuse");

    // train-siamese ---------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train-siamese", "train the siamese projection");
    add_common(train_cmd, common);
    train_cmd->add_option("-o,--out", out_path, "model file")->required();

    // make-pairs ------------------------------------------------------------
    auto* pairs_cmd = app.add_subcommand("make-pairs", "build labeled training pairs from qrels");
    add_common(pairs_cmd, common);
    pairs_cmd->add_option("-o,--out", out_path, "pair file")->required();

    // export-xenc -----------------------------------------------------------
    auto* xenc_cmd = app.add_subcommand("export-xenc", "export cross-encoder training inputs");
    add_common(xenc_cmd, common);
    std::string pairs_path;
    xenc_cmd->add_option("--pairs", pairs_path, "pair file (default: derived from configuration)");
    xenc_cmd->add_option("-o,--out", out_path, "output file")->required();

    // search ----------------------------------------------------------------
    auto* search_cmd = app.add_subcommand("search", "run one ranking system");
    add_common(search_cmd, common);
    std::string system_name = "fine-tuned", query_text, lexical_path, vector_path;
    bool have_query = false;
    search_cmd->add_option("--system", system_name, "bm25|sdm|reranked-bm25|unsupervised|fine-tuned|"
                                                    "reranked-fine-tuned|fused");
    search_cmd->add_option("-q,--query", query_text, "ad-hoc query text (default: every configured query)");
    search_cmd->add_option("-o,--out", out_path, "run file (TREC format)");
    search_cmd->add_option("--model", model_path, "projection model file");
    search_cmd->add_option("--stats", stats_path, "component statistics file");
    search_cmd->add_option("--lexical-index", lexical_path, "inverted index file");
    search_cmd->add_option("--vector-index", vector_path, "vector index file for the chosen vector system");

    // rerank ----------------------------------------------------------------
    auto* rerank_cmd = app.add_subcommand("rerank", "rerank the head of every list in a run file");
    add_common(rerank_cmd, common);
    std::string run_path;
    rerank_cmd->add_option("--run", run_path, "input run file")->required();
    rerank_cmd->add_option("-o,--out", out_path, "output run file")->required();
    rerank_cmd->add_option("--model", model_path, "projection model file");
    std::string tag;
    rerank_cmd->add_option("--tag", tag, "run tag for the output");

    // fuse ------------------------------------------------------------------
    auto* fuse_cmd = app.add_subcommand("fuse", "fuse run files by weighted rank position");
    std::vector<std::string> run_paths;
    std::string weights_spec = "fusion.paper-weighted";
    fuse_cmd->add_option("--runs", run_paths, "run files, in weight order")->required();
    fuse_cmd->add_option("--weights", weights_spec,
                         "positive integers (e.g. 2,1) or fusion.paper-weighted|fusion.paper-uniform");
    fuse_cmd->add_option("-o,--out", out_path, "fused run file")->required();
    fuse_cmd->add_option("--tag", tag, "run tag for the output");

    // eval ------------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "mean nDCG of a run file");
    std::string qrels_path, ks_spec = "5,10";
    eval_cmd->add_option("--run", run_path, "run file")->required();
    eval_cmd->add_option("--qrels", qrels_path, "qrels file")->required();
    eval_cmd->add_option("--k", ks_spec, "comma-separated depths");
    bool run_queries_only = false;
    eval_cmd->add_flag("--run-queries-only", run_queries_only,
                       "skip judged queries absent from the run (default: they score 0)");

    // pool ------------------------------------------------------------------
    auto* pool_cmd = app.add_subcommand("pool", "pool top-k results into a judgment worksheet");
    std::size_t pool_k = 10;
    pool_cmd->add_option("--runs", run_paths, "run files")->required();
    pool_cmd->add_option("--k", pool_k, "depth per system");
    pool_cmd->add_option("--corpus", corpus_path, "corpus file for sentence texts");
    pool_cmd->add_option("-o,--out", out_path, "worksheet file")->required();

    // ablate ----------------------------------------------------------------
    auto* ablate_cmd = app.add_subcommand("ablate", "run and evaluate all seven systems");
    add_common(ablate_cmd, common);
    std::string out_dir;
    ablate_cmd->add_option("-o,--out-dir", out_dir, "output directory (default: out_dir from configuration)");

    // synth -----------------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic paraphrase corpus");
    SynthParams sp;
    synth_cmd->add_option("--clusters", sp.clusters, "number of clusters");
    synth_cmd->add_option("--paraphrases", sp.paraphrases, "sentences per cluster");
    synth_cmd->add_option("--split", sp.vocab_split, "vocabulary split in [0,1]; 1 = fully disjoint");
    synth_cmd->add_option("--seed", sp.seed, "random seed");
    synth_cmd->add_option("--slots", sp.slots, "concept words per sentence");
    synth_cmd->add_option("--noise", sp.noise_words, "shared noise words per sentence");
    synth_cmd->add_option("--noise-vocab", sp.noise_vocab, "noise vocabulary size");
    synth_cmd->add_option("--negatives", sp.negatives, "grade-0 judgments per query");
    synth_cmd->add_option("-o,--out-dir", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*ingest_cmd) {
            auto corpus = ingest(corpus_path);
            std::size_t empty = 0;
            for (const auto& s : corpus.sentences()) empty += s.tokens.empty();
            std::cout << "sentences\t" << corpus.size() << "\nempty\t" << empty << "\nvocabulary\t"
                      << corpus.stats().df.size() << "\navg_len\t" << format_fixed(corpus.stats().avg_len, 4) << '\n';
        } else if (*stats_cmd) {
            Engine engine(load_config(common));
            write_component_stats(engine.component_stats(), out_path);
            std::cout << "dim\t" << engine.component_stats().dim() << "\ntokens\t"
                      << engine.component_stats().count() << '\n';
        } else if (*lex_cmd) {
            auto idx = build_inverted_index(ingest(corpus_path));
            idx.save(out_path);
            std::cout << "docs\t" << idx.num_docs() << "\nterms\t" << idx.postings().size() << '\n';
        } else if (*vec_cmd) {
            Engine engine(load_config(common));
            if (!stats_path.empty()) engine.use_component_stats(read_component_stats(stats_path));
            if (!model_path.empty()) engine.set_model(ProjectionModel::load(model_path));
            const auto& idx = fine_tuned ? engine.fine_tuned_index() : engine.unsupervised_index();
            if (idx.ivf)
                idx.ivf->save(out_path);
            else
                idx.flat.save(out_path);
            std::cout << "vectors\t" << idx.flat.size() << "\nnlist\t" << (idx.ivf ? idx.ivf->nlist() : 0) << '\n';
        } else if (*train_cmd) {
            Engine engine(load_config(common));
            auto res = engine.train_model();
            res.model.save(out_path);
            for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
                std::cout << "epoch " << (e + 1) << "\tloss " << format_fixed(res.epoch_loss[e], 8) << '\n';
        } else if (*pairs_cmd) {
            Engine engine(load_config(common));
            auto pairs = engine.training_pairs();
            write_pairs(pairs, out_path);
            std::cout << "pairs\t" << pairs.size() << '\n';
        } else if (*xenc_cmd) {
            Engine engine(load_config(common));
            auto pairs = pairs_path.empty() ? engine.training_pairs() : read_pairs(pairs_path);
            std::ofstream out(out_path);
            if (!out) throw DataError("cannot open for writing: " + out_path);
            auto resolve = [&engine](const std::string& id) { return engine.text_of(id); };
            export_cross_encoder_inputs(pairs, resolve, resolve, out);
            std::cout << "lines\t" << pairs.size() << '\n';
        } else if (*search_cmd) {
            const auto system = parse_system(system_name);
            Engine engine(load_config(common));
            if (!stats_path.empty()) engine.use_component_stats(read_component_stats(stats_path));
            if (!model_path.empty()) engine.set_model(ProjectionModel::load(model_path));
            if (!lexical_path.empty()) engine.use_lexical_index(InvertedIndex::load(lexical_path));
            if (!vector_path.empty()) engine.use_vector_index(system, engine.load_vector_index(vector_path));
            have_query = search_cmd->count("--query") > 0;
            if (have_query) {
                if (tokenize(query_text).empty()) warn("empty query; no results");
                auto list = engine.run_text(system, query_text);
                print_list(list, engine);
                if (!out_path.empty()) {
                    RunSet rs;
                    rs.tag = std::string(system_key(system));
                    rs.add(std::move(list));
                    write_run(rs, out_path);
                }
            } else {
                if (out_path.empty()) throw UsageError("batch search needs --out");
                write_run(engine.run_all(system), out_path);
            }
        } else if (*rerank_cmd) {
            Engine engine(load_config(common));
            if (!model_path.empty()) engine.set_model(ProjectionModel::load(model_path));
            auto in = read_run(run_path);
            RunSet out;
            out.tag = tag.empty() ? in.tag + "-reranked" : tag;
            for (const auto& [qid, list] : in.lists) {
                const auto* text = engine.text_of(qid);
                if (!text) throw DataError("cannot resolve query text for " + qid);
                out.add(engine.rerank_list(list, Query{qid, *text, tokenize(*text)}));
            }
            write_run(out, out_path);
        } else if (*fuse_cmd) {
            auto weights = parse_fusion_weights(weights_spec);
            if (weights.size() != run_paths.size())
                throw UsageError("need one weight per run file (" + std::to_string(run_paths.size()) + " runs, " +
                                 std::to_string(weights.size()) + " weights)");
            std::vector<RunSet> runs;
            for (const auto& p : run_paths) runs.push_back(read_run(p));
            std::set<std::string> qids;
            for (const auto& r : runs)
                for (const auto& [q, _] : r.lists) qids.insert(q);
            RunSet out;
            out.tag = tag.empty() ? "fused" : tag;
            for (const auto& q : qids) {
                FusionInput in;
                in.weights = weights;
                for (const auto& r : runs) {
                    auto it = r.lists.find(q);
                    in.rankings.push_back(it == r.lists.end() ? RankedList{q, {}, 0} : it->second);
                }
                out.add(fuse(in));
            }
            write_run(out, out_path);
        } else if (*eval_cmd) {
            auto runs = read_run(run_path);
            auto qrels = read_qrels(qrels_path);
            if (!run_queries_only) fill_missing_queries(runs, qrels);
            if (runs.lists.empty()) throw DataError("run file has no entries: " + run_path);
            Config tmp;
            tmp.set("eval_k", ks_spec);
            for (auto k : tmp.integer_list("eval_k")) {
                auto m = mean_ndcg(runs, qrels, k);
                std::cout << "ndcg@" << k << '\t' << format_fixed(m.mean, 6) << "\tqueries\t" << m.evaluated << '\n';
            }
        } else if (*pool_cmd) {
            std::vector<RunSet> runs;
            for (const auto& p : run_paths) runs.push_back(read_run(p));
            std::optional<Corpus> corpus;
            if (!corpus_path.empty()) corpus = ingest(corpus_path);
            auto rows = pool_top_k(runs, pool_k, corpus ? &*corpus : nullptr);
            write_worksheet(rows, out_path);
            std::cout << "rows\t" << rows.size() << '\n';
        } else if (*ablate_cmd) {
            auto cfg = load_config(common);
            if (cfg.str("qrels").empty()) throw UsageError("ablation needs qrels=<path>");
            if (out_dir.empty()) out_dir = cfg.str("out_dir");
            Engine engine(cfg);
            auto report = run_ablation(engine, read_qrels(cfg.str("qrels")), out_dir);
            write_text(out_dir + "/report.tsv", report.tsv());
            write_text(out_dir + "/report.txt", report.table());
            std::cout << report.table();
        } else if (*synth_cmd) {
            auto s = make_synthetic_corpus(sp);
            fs::create_directories(out_dir);
            const auto dir = fs::absolute(out_dir).lexically_normal().string();
            write_corpus(s.corpus, dir + "/corpus.jsonl");
            write_synonyms(s.synonyms, dir + "/synonyms.tsv");
            write_qrels(s.qrels, dir + "/qrels.txt");
            write_text(dir + "/semrank.conf", "# generated by semrank synth\ncorpus=" + dir +
                                                  "/corpus.jsonl\nsynonyms=" + dir + "/synonyms.tsv\nqrels=" + dir +
                                                  "/qrels.txt\nout_dir=" + dir + "/ablation\n");
            std::cout << "sentences\t" << s.corpus.size() << "\njudgments\t" << s.qrels.size() << '\n';
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
