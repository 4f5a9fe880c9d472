// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/annindex.hpp>
#include <semrank/common.hpp>
#include <semrank/config.hpp>
#include <semrank/corpus.hpp>
#include <semrank/embed.hpp>
#include <semrank/eval.hpp>
#include <semrank/fuse.hpp>
#include <semrank/lexical.hpp>
#include <semrank/rerank.hpp>
#include <semrank/siamese.hpp>

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace semrank {

/// The seven ranking systems of the ablation, in report order.
enum class System {
    Bm25,
    Sdm,
    RerankedBm25,
    Unsupervised,
    FineTuned,
    RerankedFineTuned,
    Fused,
};

inline constexpr std::array<System, 7> kAllSystems = {
    System::Bm25,      System::Sdm,         System::RerankedBm25, System::Unsupervised,
    System::FineTuned, System::RerankedFineTuned, System::Fused,
};

inline std::string_view system_key(System s) {
    switch (s) {
        case System::Bm25: return "bm25";
        case System::Sdm: return "sdm";
        case System::RerankedBm25: return "reranked-bm25";
        case System::Unsupervised: return "unsupervised";
        case System::FineTuned: return "fine-tuned";
        case System::RerankedFineTuned: return "reranked-fine-tuned";
        case System::Fused: return "fused";
    }
    return "";
}

inline std::string_view system_label(System s) {
    switch (s) {
        case System::Bm25: return "BM25";
        case System::Sdm: return "SDM";
        case System::RerankedBm25: return "Reranked BM25";
        case System::Unsupervised: return "Unsupervised pooled vectors";
        case System::FineTuned: return "Fine-tuned (siamese projection)";
        case System::RerankedFineTuned: return "Reranked fine-tuned";
        case System::Fused: return "Fused reranked fine-tuned x BM25";
    }
    return "";
}

inline System parse_system(std::string_view key) {
    for (auto s : kAllSystems)
        if (system_key(s) == key) return s;
    throw UsageError("unknown system '" + std::string(key) +
                     "' (bm25|sdm|reranked-bm25|unsupervised|fine-tuned|reranked-fine-tuned|fused)");
}

struct Query {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
};

inline std::unique_ptr<EmbeddingProvider> make_provider(const Config& cfg) {
    const auto& kind = cfg.str("provider");
    if (kind == "stub") {
        SynonymMap syn;
        if (!cfg.str("synonyms").empty()) syn = read_synonyms(cfg.str("synonyms"));
        return std::make_unique<StubProvider>(cfg.integer("dim"), cfg.integer("stub_seed"), std::move(syn));
    }
    if (kind == "file") {
        if (cfg.str("embeddings").empty()) throw UsageError("provider=file needs embeddings=<path>");
        const auto& unk = cfg.str("unknown_terms");
        if (unk != "error" && unk != "zero") throw UsageError("unknown_terms must be error or zero");
        return std::make_unique<FileProvider>(cfg.str("embeddings"),
                                              unk == "zero" ? UnknownTermPolicy::ZeroVector : UnknownTermPolicy::Error);
    }
    throw UsageError("provider must be stub or file");
}

/// Everything the ranking systems need, built once from a configuration:
/// the corpus, its lexical index, component statistics, the two vector
/// indexes and the trained projection.
class Engine {
public:
    explicit Engine(Config cfg) : cfg_(std::move(cfg)) {
        if (cfg_.str("corpus").empty()) throw UsageError("configuration needs corpus=<path>");
        corpus_ = ingest(cfg_.str("corpus"));
        if (cfg_.str("queries").empty()) {
            for (const auto& s : corpus_.sentences()) queries_.push_back({s.id, s.text, s.tokens});
        } else {
            query_corpus_ = ingest(cfg_.str("queries"));
            for (const auto& s : query_corpus_->sentences()) queries_.push_back({s.id, s.text, s.tokens});
        }
        std::sort(queries_.begin(), queries_.end(), [](const Query& a, const Query& b) { return a.id < b.id; });

        provider_ = make_provider(cfg_);
        comp_ = corpus_component_stats(corpus_, *provider_, cfg_.integer("variance_sample"));
        lexical_ = InvertedIndex(corpus_);

        bm25_.k1 = cfg_.real("bm25_k1");
        bm25_.b = cfg_.real("bm25_b");
        bm25_.validate();
        sdm_.lambda_t = cfg_.real("sdm_lambda_t");
        sdm_.lambda_o = cfg_.real("sdm_lambda_o");
        sdm_.lambda_u = cfg_.real("sdm_lambda_u");
        sdm_.window = static_cast<std::uint32_t>(cfg_.integer("sdm_window"));
        sdm_.mu = cfg_.real("sdm_mu");
        sdm_.validate();

        depth_ = cfg_.integer("first_stage_depth");
        rerank_.depth = cfg_.integer("rerank_depth");
        if (depth_ == 0 || rerank_.depth == 0) throw UsageError("depths must be >= 1");
        weights_ = parse_fusion_weights(cfg_.str("fusion"));
        if (weights_.size() != 2) throw UsageError("fusion needs two weights (reranked fine-tuned, BM25)");
        exclude_self_ = cfg_.flag("exclude_self");
    }

    const Config& config() const { return cfg_; }
    const Corpus& corpus() const { return corpus_; }
    const std::vector<Query>& queries() const { return queries_; }
    const EmbeddingProvider& provider() const { return *provider_; }
    const ComponentStats& component_stats() const { return comp_; }
    const InvertedIndex& lexical_index() const { return lexical_; }
    const std::vector<std::uint32_t>& fusion_weights() const { return weights_; }

    SentenceEncoder encoder(PoolingMode mode) const {
        return SentenceEncoder(*provider_, corpus_.stats(), comp_, mode);
    }

    const std::string* text_of(const std::string& id) const {
        if (query_corpus_)
            if (const auto* s = query_corpus_->find(id)) return &s->text;
        if (const auto* s = corpus_.find(id)) return &s->text;
        return nullptr;
    }

    // -- vector side ------------------------------------------------------

    /// Pooled (and optionally projected) vectors for every non-empty sentence.
    std::vector<SentenceVector> corpus_vectors(PoolingMode mode, const ProjectionModel* model = nullptr) const {
        const auto enc = encoder(mode);
        std::vector<SentenceVector> out;
        for (const auto& s : corpus_.sentences()) {
            auto v = enc.encode_tokens(s.tokens);
            if (!v) continue;
            out.push_back({s.id, model ? model->project(*v) : std::move(*v)});
        }
        return out;
    }

    /// Searchable vector index honoring index=flat|ivf.
    struct VectorIndex {
        FlatIndex flat;
        std::optional<IvfIndex> ivf;
        std::size_t nprobe = 1;

        RankedList search(std::span<const double> q, std::size_t k, const std::string& qid) const {
            return ivf ? ivf->search(q, k, nprobe, qid) : flat.search(q, k, qid);
        }
    };

    VectorIndex build_vector_index(std::vector<SentenceVector> vectors) const {
        VectorIndex idx;
        idx.flat = build_flat(std::move(vectors));
        const auto& kind = cfg_.str("index");
        if (kind == "ivf") {
            std::size_t nlist = cfg_.integer("nlist");
            if (nlist == 0) nlist = default_nlist(idx.flat.size());
            nlist = std::min(nlist, idx.flat.size());
            idx.ivf = build_ivf(idx.flat, nlist, cfg_.integer("kmeans_seed"), cfg_.integer("kmeans_iters"));
            idx.nprobe = std::clamp<std::size_t>(cfg_.integer("nprobe"), 1, nlist);
        } else if (kind != "flat") {
            throw UsageError("index must be flat or ivf");
        }
        return idx;
    }

    const VectorIndex& unsupervised_index() const {
        if (!unsup_index_)
            unsup_index_ = build_vector_index(corpus_vectors(parse_pooling(cfg_.str("pooling"))));
        return *unsup_index_;
    }

    // -- siamese side -----------------------------------------------------

    std::vector<PairRecord> training_pairs() const {
        if (!cfg_.str("pairs").empty()) return read_pairs(cfg_.str("pairs"));
        if (cfg_.str("qrels").empty())
            throw UsageError("training needs pairs=<path> or qrels=<path> in the configuration");
        return build_training_pairs(read_qrels(cfg_.str("qrels")), corpus_, cfg_.integer("random_pairs"),
                                    cfg_.integer("pair_seed"), static_cast<int>(cfg_.integer("good_threshold")));
    }

    std::vector<LabeledPair> materialize(const std::vector<PairRecord>& records) const {
        const auto enc = encoder(parse_pooling(cfg_.str("siamese_pooling")));
        std::vector<LabeledPair> out;
        std::size_t skipped = 0;
        for (const auto& r : records) {
            const auto* qt = text_of(r.query_id);
            const auto* dt = text_of(r.doc_id);
            if (!qt) throw DataError("training pair query id not found: " + r.query_id);
            if (!dt) throw DataError("training pair doc id not found: " + r.doc_id);
            auto a = enc.encode(*qt);
            auto b = enc.encode(*dt);
            if (!a || !b) {
                ++skipped;
                continue;
            }
            out.push_back({std::move(*a), std::move(*b), r.label});
        }
        if (skipped) warn(std::to_string(skipped) + " training pair(s) with empty text skipped");
        return out;
    }

    TrainConfig train_config() const {
        TrainConfig tc;
        tc.learning_rate = cfg_.real("train_lr");
        tc.epochs = cfg_.integer("train_epochs");
        tc.batch_size = cfg_.integer("train_batch");
        tc.seed = cfg_.integer("train_seed");
        tc.d_out = cfg_.integer("train_d_out");
        return tc;
    }

    TrainResult train_model() const { return train(materialize(training_pairs()), train_config()); }

    /// Uses a preloaded model when one was supplied, else trains.
    const ProjectionModel& model() const {
        if (!model_) model_ = train_model().model;
        return *model_;
    }

    void set_model(ProjectionModel m) {
        if (m.d_in() != provider_->dim())
            throw UsageError("model d_in " + std::to_string(m.d_in()) + " != embedding dimension " +
                             std::to_string(provider_->dim()));
        model_ = std::move(m);
        tuned_index_.reset();
        scorer_.reset();
    }

    const VectorIndex& fine_tuned_index() const {
        if (!tuned_index_)
            tuned_index_ = build_vector_index(corpus_vectors(parse_pooling(cfg_.str("siamese_pooling")), &model()));
        return *tuned_index_;
    }

    const PairScorer& scorer() const {
        if (!scorer_) {
            if (!cfg_.str("scores").empty())
                scorer_ = std::make_unique<ScoreFileScorer>(cfg_.str("scores"));
            else
                scorer_ = std::make_unique<SiameseScorer>(model(), encoder(parse_pooling(cfg_.str("scorer_pooling"))));
        }
        return *scorer_;
    }

    /// Replace built artifacts with persisted ones (CLI --*-index / --stats flags).
    void use_lexical_index(InvertedIndex idx) { lexical_ = std::move(idx); }

    void use_component_stats(ComponentStats stats) {
        if (stats.dim() != provider_->dim()) throw DataError("component stats dimension does not match provider");
        comp_ = std::move(stats);
        unsup_index_.reset();
        tuned_index_.reset();
        scorer_.reset();
    }

    void use_vector_index(System system, VectorIndex idx) {
        if (system == System::Unsupervised)
            unsup_index_ = std::move(idx);
        else if (system == System::FineTuned)
            tuned_index_ = std::move(idx);
        else
            throw UsageError("vector indexes belong to the unsupervised or fine-tuned system");
    }

    /// Loads a SEMA file of either kind; nprobe comes from the configuration.
    VectorIndex load_vector_index(const std::string& path) const {
        VectorIndex idx;
        const auto nlist = peek_index_nlist(path);
        if (nlist == 0) {
            idx.flat = FlatIndex::load(path);
        } else {
            idx.ivf = IvfIndex::load(path);
            idx.nprobe = std::clamp<std::size_t>(cfg_.integer("nprobe"), 1, nlist);
        }
        return idx;
    }

    // -- ranking ----------------------------------------------------------

    RankedList rerank_list(const RankedList& list, const Query& q) const {
        return rerank(list, scorer(), q.text, [this](const std::string& id) { return text_of(id); }, rerank_);
    }

    RankedList run(System system, const Query& q) const {
        switch (system) {
            case System::Bm25:
                return first_stage(q, [&](std::size_t k) { return bm25_search(q.tokens, lexical_, bm25_, k, q.id); });
            case System::Sdm:
                return first_stage(q, [&](std::size_t k) { return sdm_search(q.tokens, lexical_, sdm_, k, q.id); });
            case System::RerankedBm25:
                return rerank_list(run(System::Bm25, q), q);
            case System::Unsupervised:
                return vector_search(unsupervised_index(), parse_pooling(cfg_.str("pooling")), nullptr, q);
            case System::FineTuned:
                return vector_search(fine_tuned_index(), parse_pooling(cfg_.str("siamese_pooling")), &model(), q);
            case System::RerankedFineTuned:
                return rerank_list(run(System::FineTuned, q), q);
            case System::Fused:
                return fuse({{run(System::RerankedFineTuned, q), run(System::Bm25, q)}, weights_});
        }
        throw UsageError("unknown system");
    }

    RunSet run_all(System system) const {
        RunSet rs;
        rs.tag = std::string(system_key(system));
        for (const auto& q : queries_) rs.add(run(system, q));
        return rs;
    }

    /// Ad-hoc text query through one system.
    RankedList run_text(System system, const std::string& text, const std::string& query_id = "query") const {
        return run(system, Query{query_id, text, tokenize(text)});
    }

private:
    template <class Search>
    RankedList first_stage(const Query& q, Search&& search) const {
        if (q.tokens.empty()) {
            warn("query " + q.id + " has no terms; returning no results");
            return RankedList{q.id, {}, 0};
        }
        const bool drop_self = exclude_self_ && corpus_.find(q.id);
        auto list = search(depth_ + (drop_self ? 1 : 0));
        if (drop_self) {
            std::erase_if(list.entries, [&](const RankedEntry& e) { return e.doc_id == q.id; });
            if (list.entries.size() > depth_) list.entries.resize(depth_);
        }
        return list;
    }

    RankedList vector_search(const VectorIndex& index, PoolingMode mode, const ProjectionModel* model,
                             const Query& q) const {
        return first_stage(q, [&](std::size_t k) {
            auto v = encoder(mode).encode_tokens(q.tokens);
            if (model) *v = model->project(*v);
            return index.search(*v, k, q.id);
        });
    }

    Config cfg_;
    Corpus corpus_;
    std::optional<Corpus> query_corpus_;
    std::vector<Query> queries_;
    std::unique_ptr<EmbeddingProvider> provider_;
    ComponentStats comp_;
    InvertedIndex lexical_;
    Bm25Params bm25_;
    SdmParams sdm_;
    std::size_t depth_ = 1000;
    RerankConfig rerank_;
    std::vector<std::uint32_t> weights_;
    bool exclude_self_ = true;

    mutable std::optional<VectorIndex> unsup_index_;
    mutable std::optional<VectorIndex> tuned_index_;
    mutable std::optional<ProjectionModel> model_;
    mutable std::unique_ptr<PairScorer> scorer_;
};

// ---------------------------------------------------------------------------
// Ablation report
// ---------------------------------------------------------------------------

struct AblationRow {
    System system;
    std::string label;
    std::vector<MeanNdcg> metrics;  // aligned with AblationReport::ks
};

struct AblationReport {
    std::vector<std::size_t> ks;
    std::vector<AblationRow> rows;

    /// Tab-separated: system, label, ndcg@k columns, evaluated query count.
    std::string tsv() const {
        std::ostringstream out;
        out << "system\tlabel";
        for (auto k : ks) out << "\tndcg@" << k;
        out << "\tqueries\n";
        for (const auto& r : rows) {
            out << system_key(r.system) << '\t' << r.label;
            for (const auto& m : r.metrics) out << '\t' << format_fixed(m.mean, 6);
            out << '\t' << (r.metrics.empty() ? 0 : r.metrics.front().evaluated) << '\n';
        }
        return out.str();
    }

    std::string table() const {
        std::size_t width = 6;
        for (const auto& r : rows) width = std::max(width, r.label.size());
        auto pad = [](const std::string& s, std::size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; };
        std::vector<std::string> heads;
        for (auto k : ks) heads.push_back("ndcg@" + std::to_string(k));
        std::ostringstream out;
        out << std::string(width, ' ');
        for (const auto& h : heads) out << "  " << pad(h, std::max<std::size_t>(h.size(), 6));
        out << '\n';
        for (const auto& r : rows) {
            out << r.label << std::string(width - r.label.size(), ' ');
            for (std::size_t c = 0; c < r.metrics.size(); ++c)
                out << "  " << pad(format_fixed(r.metrics[c].mean, 4), std::max<std::size_t>(heads[c].size(), 6));
            out << '\n';
        }
        return out.str();
    }
};

inline std::string fused_label(const std::vector<std::uint32_t>& w) {
    std::string s(system_label(System::Fused));
    s += " (";
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
    return s + ")";
}

/// Runs all seven systems, writes one run file per system into `out_dir`
/// (when non-empty) and evaluates each at every configured depth.
inline AblationReport run_ablation(const Engine& engine, const JudgmentSet& qrels, const std::string& out_dir) {
    AblationReport report;
    report.ks = engine.config().integer_list("eval_k");
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    for (auto system : kAllSystems) {
        RunSet rs;
        try {
            rs = engine.run_all(system);
        } catch (const Error& e) {
            throw DataError("system '" + std::string(system_key(system)) + "' failed: " + e.what());
        }
        if (!out_dir.empty()) write_run(rs, out_dir + "/" + std::string(system_key(system)) + ".run");
        AblationRow row{system, system == System::Fused ? fused_label(engine.fusion_weights())
                                                        : std::string(system_label(system)), {}};
        for (auto k : report.ks) {
            try {
                row.metrics.push_back(mean_ndcg(rs, qrels, k));
            } catch (const Error& e) {
                throw DataError("system '" + std::string(system_key(system)) + "' evaluation failed: " + e.what());
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace semrank
