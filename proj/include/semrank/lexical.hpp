// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>
#include <semrank/corpus.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace semrank {

struct Posting {
    std::uint32_t doc = 0;                 // index into InvertedIndex::doc_ids()
    std::vector<std::uint32_t> positions;  // strictly ascending

    std::uint32_t tf() const { return static_cast<std::uint32_t>(positions.size()); }
    friend bool operator==(const Posting&, const Posting&) = default;
};

/// Positional inverted index over the non-empty sentences of a corpus.
/// Term statistics (n, avg_len, df) describe the indexed sentences only.
class InvertedIndex {
public:
    InvertedIndex() = default;

    explicit InvertedIndex(const Corpus& corpus) {
        for (const auto& s : corpus.sentences()) {
            if (s.tokens.empty()) continue;
            const auto doc = static_cast<std::uint32_t>(doc_ids_.size());
            doc_ids_.push_back(s.id);
            lengths_.push_back(static_cast<std::uint32_t>(s.tokens.size()));
            for (std::uint32_t pos = 0; pos < s.tokens.size(); ++pos) {
                auto& list = postings_[s.tokens[pos]];
                if (list.empty() || list.back().doc != doc) list.push_back({doc, {}});
                list.back().positions.push_back(pos);
            }
        }
        finalize();
    }

    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    std::uint32_t length(std::uint32_t doc) const { return lengths_[doc]; }
    std::size_t num_docs() const { return doc_ids_.size(); }
    double avg_len() const { return avg_len_; }
    std::uint64_t total_tokens() const { return total_tokens_; }
    const std::unordered_map<std::string, std::vector<Posting>>& postings() const { return postings_; }

    const std::vector<Posting>* find(const std::string& term) const {
        auto it = postings_.find(term);
        return it == postings_.end() ? nullptr : &it->second;
    }

    std::uint32_t doc_freq(const std::string& term) const {
        const auto* p = find(term);
        return p ? static_cast<std::uint32_t>(p->size()) : 0;
    }

    std::uint64_t collection_freq(const std::string& term) const {
        auto it = cf_.find(term);
        return it == cf_.end() ? 0 : it->second;
    }

    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

    friend bool operator==(const InvertedIndex& a, const InvertedIndex& b) {
        return a.doc_ids_ == b.doc_ids_ && a.lengths_ == b.lengths_ && a.postings_ == b.postings_;
    }

private:
    void finalize() {
        total_tokens_ = 0;
        for (auto l : lengths_) total_tokens_ += l;
        avg_len_ = doc_ids_.empty() ? 0.0
                                    : static_cast<double>(total_tokens_) / static_cast<double>(doc_ids_.size());
        cf_.clear();
        for (const auto& [term, list] : postings_) {
            std::uint64_t c = 0;
            for (const auto& p : list) c += p.tf();
            cf_[term] = c;
        }
    }

    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> lengths_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint64_t> cf_;
    std::uint64_t total_tokens_ = 0;
    double avg_len_ = 0.0;
};

inline InvertedIndex build_inverted_index(const Corpus& corpus) { return InvertedIndex(corpus); }

// Layout: "SEMX", u32 version, u64 docs, {string id, u32 length} per doc,
// u64 terms, then per term in byte order: string term, u32 postings,
// {u32 doc, u32 tf, tf x u32 position} per posting.
inline void InvertedIndex::save(const std::string& path) const {
    BinaryWriter w(path);
    w.magic("SEMX");
    w.put<std::uint32_t>(1);
    w.put<std::uint64_t>(doc_ids_.size());
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
        w.string(doc_ids_[d]);
        w.put<std::uint32_t>(lengths_[d]);
    }
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [t, _] : postings_) terms.push_back(&t);
    std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return *a < *b; });
    w.put<std::uint64_t>(terms.size());
    for (const auto* t : terms) {
        const auto& list = postings_.at(*t);
        w.string(*t);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            w.put<std::uint32_t>(p.doc);
            w.put<std::uint32_t>(p.tf());
            for (auto pos : p.positions) w.put<std::uint32_t>(pos);
        }
    }
    w.finish();
}

inline InvertedIndex InvertedIndex::load(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("SEMX");
    r.expect_version(1);
    InvertedIndex idx;
    const auto docs = r.get<std::uint64_t>();
    for (std::uint64_t d = 0; d < docs; ++d) {
        idx.doc_ids_.push_back(r.string());
        idx.lengths_.push_back(r.get<std::uint32_t>());
    }
    const auto terms = r.get<std::uint64_t>();
    for (std::uint64_t t = 0; t < terms; ++t) {
        auto term = r.string();
        const auto n = r.get<std::uint32_t>();
        std::vector<Posting> list(n);
        for (auto& p : list) {
            p.doc = r.get<std::uint32_t>();
            const auto tf = r.get<std::uint32_t>();
            if (p.doc >= docs || tf == 0 || tf > idx.lengths_[p.doc])
                throw DataError(path + ": corrupt posting for term '" + term + "'");
            p.positions.resize(tf);
            for (auto& pos : p.positions) pos = r.get<std::uint32_t>();
            if (!std::is_sorted(p.positions.begin(), p.positions.end()) ||
                std::adjacent_find(p.positions.begin(), p.positions.end()) != p.positions.end())
                throw DataError(path + ": positions not strictly ascending");
        }
        idx.postings_.emplace(std::move(term), std::move(list));
    }
    r.expect_eof();
    idx.finalize();
    return idx;
}

// ---------------------------------------------------------------------------
// BM25
// ---------------------------------------------------------------------------

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const {
        if (!(k1 > 0)) throw UsageError("bm25 k1 must be positive");
        if (!(b >= 0 && b <= 1)) throw UsageError("bm25 b must lie in [0, 1]");
    }
};

inline double bm25_idf(std::uint32_t df, std::size_t n) {
    const double dfd = df;
    return std::log(1.0 + (static_cast<double>(n) - dfd + 0.5) / (dfd + 0.5));
}

/// One term's contribution for a sentence of length `len`.
inline double bm25_term_score(double idf_t, double tf, double len, double avg_len,
                              const Bm25Params& p) {
    const double norm = 1.0 - p.b + p.b * (avg_len > 0 ? len / avg_len : 0.0);
    return idf_t * tf * (p.k1 + 1.0) / (tf + p.k1 * norm);
}

inline std::vector<std::string> unique_in_order(const std::vector<std::string>& terms) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& t : terms)
        if (seen.insert(t).second) out.push_back(t);
    return out;
}

inline RankedList bm25_search(const std::vector<std::string>& query, const InvertedIndex& index,
                              const Bm25Params& params, std::size_t k, std::string query_id = {}) {
    if (k == 0) throw UsageError("result depth k must be >= 1");
    params.validate();
    RankedList out{std::move(query_id), {}, 0};
    if (query.empty()) return out;

    std::vector<double> acc(index.num_docs(), 0.0);
    std::vector<char> touched(index.num_docs(), 0);
    for (const auto& term : unique_in_order(query)) {
        const auto* list = index.find(term);
        if (!list) continue;
        const double w = bm25_idf(static_cast<std::uint32_t>(list->size()), index.num_docs());
        for (const auto& p : *list) {
            acc[p.doc] += bm25_term_score(w, p.tf(), index.length(p.doc), index.avg_len(), params);
            touched[p.doc] = 1;
        }
    }
    for (std::size_t d = 0; d < acc.size(); ++d)
        if (touched[d]) out.entries.push_back({index.doc_ids()[d], acc[d]});
    sort_and_truncate(out.entries, k);
    return out;
}

// ---------------------------------------------------------------------------
// Sequential dependence model
// ---------------------------------------------------------------------------

struct SdmParams {
    double lambda_t = 0.85;
    double lambda_o = 0.10;
    double lambda_u = 0.05;
    std::uint32_t window = 8;
    double mu = 2500.0;
    bool full_corpus = false;  // score every indexed sentence, not just term matches

    void validate() const {
        if (lambda_t < 0 || lambda_o < 0 || lambda_u < 0)
            throw UsageError("sdm weights must be nonnegative");
        if (std::abs(lambda_t + lambda_o + lambda_u - 1.0) > 1e-9)
            throw UsageError("sdm weights must sum to 1");
        if (window < 2) throw UsageError("sdm window must be >= 2");
        if (!(mu > 0)) throw UsageError("sdm mu must be positive");
    }
};

/// Number of positions p in `a` with p + 1 in `b`.
inline std::uint32_t ordered_count(const std::vector<std::uint32_t>& a,
                                   const std::vector<std::uint32_t>& b) {
    std::uint32_t n = 0;
    std::size_t j = 0;
    for (auto p : a) {
        while (j < b.size() && b[j] < p + 1) ++j;
        if (j < b.size() && b[j] == p + 1) ++n;
    }
    return n;
}

/// Number of position pairs (p in a, q in b), p != q, whose span
/// max(p,q) - min(p,q) + 1 fits in `window` tokens.
inline std::uint32_t unordered_count(const std::vector<std::uint32_t>& a,
                                     const std::vector<std::uint32_t>& b, std::uint32_t window) {
    std::uint32_t n = 0;
    const std::uint32_t reach = window - 1;
    std::size_t lo = 0;
    for (auto p : a) {
        const std::uint32_t from = p >= reach ? p - reach : 0;
        while (lo < b.size() && b[lo] < from) ++lo;
        for (std::size_t j = lo; j < b.size() && b[j] <= p + reach; ++j)
            if (b[j] != p) ++n;
    }
    return n;
}

namespace detail {

inline const Posting* posting_for(const std::vector<Posting>* list, std::uint32_t doc) {
    if (!list) return nullptr;
    auto it = std::lower_bound(list->begin(), list->end(), doc,
                               [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    return (it != list->end() && it->doc == doc) ? &*it : nullptr;
}

struct PairCounts {
    std::uint64_t ordered = 0;
    std::uint64_t unordered = 0;
};

/// Collection-wide ordered/unordered counts for the pair (a, b).
inline PairCounts collection_pair_counts(const std::vector<Posting>* la, const std::vector<Posting>* lb,
                                         std::uint32_t window) {
    PairCounts c;
    if (!la || !lb) return c;
    std::size_t j = 0;
    for (const auto& pa : *la) {
        while (j < lb->size() && (*lb)[j].doc < pa.doc) ++j;
        if (j < lb->size() && (*lb)[j].doc == pa.doc) {
            c.ordered += ordered_count(pa.positions, (*lb)[j].positions);
            c.unordered += unordered_count(pa.positions, (*lb)[j].positions, window);
        }
    }
    return c;
}

}  // namespace detail

/// Markov-random-field scoring with unigram, ordered-bigram and
/// unordered-window features over adjacent query term pairs. Features whose
/// collection count is zero are dropped (they are -inf for every sentence).
inline RankedList sdm_search(const std::vector<std::string>& query, const InvertedIndex& index,
                             const SdmParams& params, std::size_t k, std::string query_id = {}) {
    if (k == 0) throw UsageError("result depth k must be >= 1");
    params.validate();
    RankedList out{std::move(query_id), {}, 0};
    if (query.empty() || index.num_docs() == 0) return out;

    const double total = static_cast<double>(index.total_tokens());
    const double mu = params.mu;

    struct Unigram {
        const std::vector<Posting>* list;
        double background;
    };
    std::vector<Unigram> unigrams;
    for (const auto& t : query) {
        const auto cf = index.collection_freq(t);
        if (cf > 0) unigrams.push_back({index.find(t), static_cast<double>(cf) / total});
    }

    struct Pair {
        const std::vector<Posting>* a;
        const std::vector<Posting>* b;
        double bg_ordered;
        double bg_unordered;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i + 1 < query.size(); ++i) {
        const auto* la = index.find(query[i]);
        const auto* lb = index.find(query[i + 1]);
        const auto c = detail::collection_pair_counts(la, lb, params.window);
        pairs.push_back({la, lb, static_cast<double>(c.ordered) / total,
                         static_cast<double>(c.unordered) / total});
    }

    std::vector<std::uint32_t> candidates;
    if (params.full_corpus) {
        candidates.resize(index.num_docs());
        for (std::uint32_t d = 0; d < candidates.size(); ++d) candidates[d] = d;
    } else {
        std::vector<char> mark(index.num_docs(), 0);
        for (const auto& u : unigrams)
            for (const auto& p : *u.list) mark[p.doc] = 1;
        for (std::uint32_t d = 0; d < mark.size(); ++d)
            if (mark[d]) candidates.push_back(d);
    }

    for (auto doc : candidates) {
        const double denom = static_cast<double>(index.length(doc)) + mu;
        double st = 0.0, so = 0.0, su = 0.0;
        for (const auto& u : unigrams) {
            const auto* p = detail::posting_for(u.list, doc);
            const double tf = p ? p->tf() : 0.0;
            st += std::log((tf + mu * u.background) / denom);
        }
        for (const auto& pr : pairs) {
            const auto* pa = detail::posting_for(pr.a, doc);
            const auto* pb = detail::posting_for(pr.b, doc);
            double co = 0.0, cu = 0.0;
            if (pa && pb) {
                co = ordered_count(pa->positions, pb->positions);
                cu = unordered_count(pa->positions, pb->positions, params.window);
            }
            if (pr.bg_ordered > 0) so += std::log((co + mu * pr.bg_ordered) / denom);
            if (pr.bg_unordered > 0) su += std::log((cu + mu * pr.bg_unordered) / denom);
        }
        out.entries.push_back(
            {index.doc_ids()[doc], params.lambda_t * st + params.lambda_o * so + params.lambda_u * su});
    }
    sort_and_truncate(out.entries, k);
    return out;
}

}  // namespace semrank
