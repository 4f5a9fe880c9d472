// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>
#include <semrank/corpus.hpp>
#include <semrank/embed.hpp>
#include <semrank/eval.hpp>
#include <semrank/siamese.hpp>

#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace semrank {

/// A (query, candidate) pair as seen by a second-stage scorer.
struct PairView {
    const std::string& query_id;
    const std::string& query_text;
    const std::string& doc_id;
    const std::string& doc_text;
};

/// Second-stage pair scorer. Scores lie in [0, 1] and are deterministic.
class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual double score(const PairView& pair) const = 0;
};

/// Looks up a sentence text by id; nullptr when unknown.
using TextResolver = std::function<const std::string*(const std::string&)>;

inline TextResolver corpus_resolver(const Corpus& corpus) {
    return [&corpus](const std::string& id) -> const std::string* {
        const auto* s = corpus.find(id);
        return s ? &s->text : nullptr;
    };
}

struct RerankConfig {
    std::size_t depth = 100;
};

/// Re-sorts the first min(K, |list|) entries by scorer output (descending,
/// stable on the original rank) and leaves the tail untouched. Head entries
/// carry scorer scores; `boundary` marks where first-stage scores resume.
inline RankedList rerank(const RankedList& list, const PairScorer& scorer, const std::string& query_text,
                         const TextResolver& resolve, const RerankConfig& config = {}) {
    if (config.depth == 0) throw UsageError("rerank depth must be >= 1");
    const std::size_t head = std::min(config.depth, list.entries.size());
    std::vector<double> scores(head);
    for (std::size_t i = 0; i < head; ++i) {
        const auto& id = list.entries[i].doc_id;
        const std::string* text = resolve(id);
        if (!text) throw DataError("cannot resolve text for doc id " + id);
        scores[i] = scorer.score({list.query_id, query_text, id, *text});
        if (!(scores[i] >= 0.0 && scores[i] <= 1.0))
            throw DataError("pair scorer returned a score outside [0, 1] for doc " + id);
    }
    std::vector<std::size_t> order(head);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RankedList out{list.query_id, {}, head < list.entries.size() ? head : 0};
    out.entries.reserve(list.entries.size());
    for (auto i : order) out.entries.push_back({list.entries[i].doc_id, scores[i]});
    for (std::size_t i = head; i < list.entries.size(); ++i) out.entries.push_back(list.entries[i]);
    return out;
}

/// Surrogate cross-encoder: (cos(W^T pool(q), W^T pool(d)) + 1) / 2 under a
/// trained projection. Texts without terms score 0.5.
class SiameseScorer final : public PairScorer {
public:
    SiameseScorer(const ProjectionModel& model, SentenceEncoder encoder)
        : model_(&model), encoder_(std::move(encoder)) {
        if (model.d_in() != encoder_.dim())
            throw UsageError("projection d_in " + std::to_string(model.d_in()) +
                             " does not match embedding dimension " + std::to_string(encoder_.dim()));
    }

    double score(const PairView& pair) const override {
        const auto* a = projected(pair.query_text);
        const auto* b = projected(pair.doc_text);
        if (!a || !b) return 0.5;
        const double c = detail::cosine(*a, *b);
        return std::clamp((c + 1.0) / 2.0, 0.0, 1.0);
    }

private:
    const std::vector<double>* projected(const std::string& text) const {
        std::lock_guard lock(mu_);
        auto it = cache_.find(text);
        if (it == cache_.end()) {
            std::optional<std::vector<double>> v;
            if (auto pooled = encoder_.encode(text)) v = model_->project(*pooled);
            it = cache_.emplace(text, std::move(v)).first;
        }
        return it->second ? &*it->second : nullptr;
    }

    const ProjectionModel* model_;
    SentenceEncoder encoder_;
    mutable std::mutex mu_;
    mutable std::unordered_map<std::string, std::optional<std::vector<double>>> cache_;
};

/// Scores supplied by an external model, keyed by (query_id, doc_id).
/// File lines: query_id<TAB>doc_id<TAB>score.
class ScoreFileScorer final : public PairScorer {
public:
    explicit ScoreFileScorer(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open score file: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto view = strip_cr(line);
            if (view.empty()) continue;
            auto f = split_char(view, '\t');
            double s = 0;
            if (f.size() != 3 || !parse_number(f[2], s) || !(s >= 0.0 && s <= 1.0))
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": expected query_id<TAB>doc_id<TAB>score in [0,1]");
            scores_[{std::string(f[0]), std::string(f[1])}] = s;
        }
    }

    double score(const PairView& pair) const override {
        auto it = scores_.find({pair.query_id, pair.doc_id});
        if (it == scores_.end())
            throw DataError("score file has no entry for " + pair.query_id + "/" + pair.doc_id);
        return it->second;
    }

private:
    std::map<std::pair<std::string, std::string>, double> scores_;
};

// ---------------------------------------------------------------------------
// Training data for the external cross-encoder
// ---------------------------------------------------------------------------

/// Judged pairs labeled 1.0 (grade >= good_threshold) or 0.5 (below), in
/// (query, doc) order, followed by `random_count` zero-labeled random pairs
/// per judged query.
inline std::vector<PairRecord> build_training_pairs(const JudgmentSet& judgments, const Corpus& corpus,
                                                    std::size_t random_count, std::uint64_t seed,
                                                    int good_threshold = 1) {
    std::vector<PairRecord> out;
    std::vector<std::string> queries;
    for (const auto& [qid, docs] : judgments.queries()) {
        queries.push_back(qid);
        for (const auto& [doc, grade] : docs) {
            if (!corpus.find(doc)) throw DataError("judged doc id not in corpus: " + doc);
            out.push_back({qid, doc, grade >= good_threshold ? 1.0 : 0.5});
        }
    }
    auto random = make_random_pairs(corpus, queries, random_count, seed);
    out.insert(out.end(), random.begin(), random.end());
    return out;
}

inline std::string format_label(double label) { return format_fixed(label, 1); }

/// One line per pair: "[CLS] <query> [SEP] <result>" TAB label.
inline void export_cross_encoder_inputs(const std::vector<PairRecord>& pairs, const TextResolver& query_text,
                                        const TextResolver& doc_text, std::ostream& out) {
    for (const auto& p : pairs) {
        const std::string* q = query_text(p.query_id);
        if (!q) throw DataError("cannot resolve query text for " + p.query_id);
        const std::string* d = doc_text(p.doc_id);
        if (!d) throw DataError("cannot resolve doc text for " + p.doc_id);
        if (d->empty()) warn("empty result text for pair " + p.query_id + "/" + p.doc_id);
        out << "[CLS] " << detail::sanitize_field(*q) << " [SEP] " << detail::sanitize_field(*d) << '\t'
            << format_label(p.label) << '\n';
    }
}

}  // namespace semrank
