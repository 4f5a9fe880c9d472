// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>
#include <semrank/corpus.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace semrank {

/// Token vectors of one sentence, row-major, one row per token occurrence.
class TokenMatrix {
public:
    TokenMatrix() = default;
    explicit TokenMatrix(std::size_t dim) : dim_(dim) {
        if (dim == 0) throw UsageError("embedding dimension must be >= 1");
    }

    void add_row(std::string term, std::span<const double> row) {
        if (row.size() != dim_) throw DataError("token row dimension mismatch");
        terms_.push_back(std::move(term));
        data_.insert(data_.end(), row.begin(), row.end());
    }

    std::size_t dim() const { return dim_; }
    std::size_t rows() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const std::vector<std::string>& terms() const { return terms_; }

    std::span<const double> row(std::size_t j) const {
        return {data_.data() + j * dim_, dim_};
    }

    friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> terms_;
    std::vector<double> data_;
};

/// A pooled sentence embedding.
struct SentenceVector {
    std::string sentence_id;
    std::vector<double> components;
};

/// Source of per-token vectors. Implementations must be deterministic:
/// the same token list always yields a bit-identical matrix.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    virtual TokenMatrix embed(const std::vector<std::string>& tokens) const = 0;
};

/// Maps surface terms to a canonical term. Terms sharing a canonical form
/// receive identical stub vectors.
using SynonymMap = std::unordered_map<std::string, std::string>;

/// Deterministic provider for tests and synthetic corpora. Each component is
/// drawn uniformly from [-1, 1] by expanding a seeded 64-bit hash of the
/// canonical term.
class StubProvider final : public EmbeddingProvider {
public:
    StubProvider(std::size_t dim, std::uint64_t seed, SynonymMap synonyms = {})
        : dim_(dim), seed_(seed), synonyms_(std::move(synonyms)) {
        if (dim == 0) throw UsageError("embedding dimension must be >= 1");
    }

    std::size_t dim() const override { return dim_; }

    std::vector<double> vector_for(const std::string& term) const {
        const auto it = synonyms_.find(term);
        const std::string& canonical = it == synonyms_.end() ? term : it->second;
        const std::uint64_t base = hash_bytes(canonical, seed_);
        std::vector<double> v(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            std::uint64_t h = mix64(base + 0x632be59bd9b4e019ULL * (i + 1));
            v[i] = static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
        }
        return v;
    }

    TokenMatrix embed(const std::vector<std::string>& tokens) const override {
        TokenMatrix m(dim_);
        for (const auto& t : tokens) m.add_row(t, vector_for(t));
        return m;
    }

    const SynonymMap& synonyms() const { return synonyms_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
    SynonymMap synonyms_;
};

inline TokenMatrix stub_embed(const std::vector<std::string>& tokens, std::size_t dim,
                              std::uint64_t seed, const SynonymMap& synonyms = {}) {
    return StubProvider(dim, seed, synonyms).embed(tokens);
}

/// Reads "term<TAB>canonical" lines.
inline SynonymMap read_synonyms(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open synonym map: " + path);
    SynonymMap map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto view = strip_cr(line);
        if (view.empty()) continue;
        auto f = split_char(view, '\t');
        if (f.size() != 2 || f[0].empty() || f[1].empty())
            throw DataError(path + ":" + std::to_string(lineno) + ": expected term<TAB>canonical");
        map[std::string(f[0])] = std::string(f[1]);
    }
    return map;
}

inline void write_synonyms(const SynonymMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    std::map<std::string, std::string> sorted(map.begin(), map.end());
    for (const auto& [term, canon] : sorted) out << term << '\t' << canon << '\n';
}

// ---------------------------------------------------------------------------
// Embedding file ("SEMV")
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

/// Writes per-term float32 vectors. Entries are written in the given order.
inline void write_embedding_file(const std::string& path, std::size_t dim,
                                 const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
    BinaryWriter w(path);
    w.magic("SEMV");
    w.put<std::uint32_t>(kEmbeddingFormatVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dim));
    w.put<std::uint64_t>(entries.size());
    for (const auto& [term, vec] : entries) {
        if (vec.size() != dim) throw DataError("vector for '" + term + "' has wrong dimension");
        w.string(term);
        for (float f : vec) w.put<float>(f);
    }
    w.finish();
}

enum class UnknownTermPolicy { Error, ZeroVector };

/// Provider backed by vectors computed offline (e.g. by a pretrained model).
class FileProvider final : public EmbeddingProvider {
public:
    explicit FileProvider(const std::string& path,
                          UnknownTermPolicy policy = UnknownTermPolicy::Error,
                          std::optional<std::size_t> expected_dim = std::nullopt)
        : policy_(policy) {
        BinaryReader r(path);
        r.expect_magic("SEMV");
        r.expect_version(kEmbeddingFormatVersion);
        dim_ = r.get<std::uint32_t>();
        if (dim_ == 0) throw DataError(path + ": dimension must be >= 1");
        if (expected_dim && *expected_dim != dim_)
            throw DataError(path + ": dimension mismatch (file " + std::to_string(dim_) +
                            ", expected " + std::to_string(*expected_dim) + ")");
        const auto count = r.get<std::uint64_t>();
        for (std::uint64_t e = 0; e < count; ++e) {
            std::string term = r.string();
            std::vector<double> v(dim_);
            for (auto& x : v) x = static_cast<double>(r.get<float>());
            if (!vectors_.emplace(std::move(term), std::move(v)).second)
                throw DataError(path + ": duplicate term entry");
        }
        r.expect_eof();
    }

    std::size_t dim() const override { return dim_; }

    TokenMatrix embed(const std::vector<std::string>& tokens) const override {
        TokenMatrix m(dim_);
        const std::vector<double> zeros(dim_, 0.0);
        for (const auto& t : tokens) {
            auto it = vectors_.find(t);
            if (it != vectors_.end()) {
                m.add_row(t, it->second);
            } else if (policy_ == UnknownTermPolicy::ZeroVector) {
                m.add_row(t, zeros);
            } else {
                throw DataError("unknown term: " + t);
            }
        }
        return m;
    }

    std::size_t vocabulary_size() const { return vectors_.size(); }

private:
    std::size_t dim_ = 0;
    UnknownTermPolicy policy_;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

// ---------------------------------------------------------------------------
// Component statistics
// ---------------------------------------------------------------------------

/// Per-dimension population mean and variance over every token vector seen,
/// accumulated with Welford's update. Partial results merge associatively.
class ComponentStats {
public:
    ComponentStats() = default;
    explicit ComponentStats(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

    static ComponentStats from_moments(std::uint64_t count, std::vector<double> mean,
                                       const std::vector<double>& variance) {
        if (mean.size() != variance.size()) throw DataError("moment dimension mismatch");
        ComponentStats s;
        s.count_ = count;
        s.mean_ = std::move(mean);
        s.m2_.resize(variance.size());
        for (std::size_t i = 0; i < variance.size(); ++i)
            s.m2_[i] = variance[i] * static_cast<double>(count);
        return s;
    }

    std::size_t dim() const { return mean_.size(); }
    std::uint64_t count() const { return count_; }
    const std::vector<double>& mean() const { return mean_; }

    std::vector<double> variance() const {
        std::vector<double> v(dim(), 0.0);
        if (count_ <= 1) return v;
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = std::max(0.0, m2_[i] / static_cast<double>(count_));
        return v;
    }

    void add(std::span<const double> x) {
        if (mean_.empty() && count_ == 0) {
            mean_.assign(x.size(), 0.0);
            m2_.assign(x.size(), 0.0);
        }
        if (x.size() != dim()) throw DataError("component stats: dimension mismatch");
        ++count_;
        const double n = static_cast<double>(count_);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double delta = x[i] - mean_[i];
            mean_[i] += delta / n;
            m2_[i] += delta * (x[i] - mean_[i]);
        }
    }

    void add(const TokenMatrix& m) {
        if (m.dim() != dim() && !(count_ == 0 && mean_.empty()))
            throw DataError("component stats: dimension mismatch");
        for (std::size_t j = 0; j < m.rows(); ++j) add(m.row(j));
    }

    /// Chan et al. pairwise combination of two partial accumulations.
    void merge(const ComponentStats& other) {
        if (other.count_ == 0) return;
        if (count_ == 0) {
            *this = other;
            return;
        }
        if (other.dim() != dim()) throw DataError("component stats: dimension mismatch");
        const double na = static_cast<double>(count_);
        const double nb = static_cast<double>(other.count_);
        const double n = na + nb;
        for (std::size_t i = 0; i < dim(); ++i) {
            const double delta = other.mean_[i] - mean_[i];
            mean_[i] += delta * nb / n;
            m2_[i] += other.m2_[i] + delta * delta * na * nb / n;
        }
        count_ += other.count_;
    }

private:
    std::uint64_t count_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Accumulates over a sequence of token matrices. A nonzero `max_tokens`
/// stops after that many token vectors (variance estimated on a prefix sample).
template <class Range>
ComponentStats accumulate_component_stats(const Range& matrices, std::size_t dim,
                                          std::uint64_t max_tokens = 0) {
    ComponentStats stats(dim);
    for (const TokenMatrix& m : matrices) {
        if (m.empty()) continue;
        if (m.dim() != dim) throw DataError("component stats: dimension mismatch mid-stream");
        for (std::size_t j = 0; j < m.rows(); ++j) {
            if (max_tokens && stats.count() >= max_tokens) return stats;
            stats.add(m.row(j));
        }
    }
    return stats;
}

inline void write_component_stats(const ComponentStats& stats, const std::string& path) {
    BinaryWriter w(path);
    w.magic("SEMS");
    w.put<std::uint32_t>(1);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(stats.dim()));
    w.put<std::uint64_t>(stats.count());
    for (double m : stats.mean()) w.put<double>(m);
    for (double v : stats.variance()) w.put<double>(v);
    w.finish();
}

inline ComponentStats read_component_stats(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("SEMS");
    r.expect_version(1);
    const auto dim = r.get<std::uint32_t>();
    const auto count = r.get<std::uint64_t>();
    std::vector<double> mean(dim), var(dim);
    for (auto& m : mean) m = r.get<double>();
    for (auto& v : var) v = r.get<double>();
    r.expect_eof();
    return ComponentStats::from_moments(count, std::move(mean), var);
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

inline constexpr double kVarianceEpsilon = 1e-12;

/// IDF-weighted average of variance-scaled token vectors:
///   y_i = (sum_j w_j x_ij / sqrt(var_i + eps)) / sum_j w_j,  w_j = idf(term_j).
/// Each token occurrence contributes once.
inline std::vector<double> pool_tfidf(const TokenMatrix& matrix, const TermStats& stats,
                                      const ComponentStats& comp) {
    if (matrix.empty()) throw DataError("cannot pool an empty sentence");
    if (comp.dim() != matrix.dim())
        throw DataError("component stats dimension does not match token vectors");
    const std::size_t d = matrix.dim();
    const auto var = comp.variance();
    std::vector<double> inv_sd(d);
    for (std::size_t i = 0; i < d; ++i) inv_sd[i] = 1.0 / std::sqrt(var[i] + kVarianceEpsilon);

    std::vector<double> y(d, 0.0);
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < matrix.rows(); ++j) {
        const double w = idf(matrix.terms()[j], stats);
        weight_sum += w;
        const auto x = matrix.row(j);
        for (std::size_t i = 0; i < d; ++i) y[i] += w * x[i] * inv_sd[i];
    }
    for (auto& v : y) v /= weight_sum;
    return y;
}

/// Plain mean of token vectors (the siamese branch's pooler).
inline std::vector<double> pool_mean(const TokenMatrix& matrix) {
    if (matrix.empty()) throw DataError("cannot pool an empty sentence");
    std::vector<double> y(matrix.dim(), 0.0);
    for (std::size_t j = 0; j < matrix.rows(); ++j) {
        const auto x = matrix.row(j);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
    }
    for (auto& v : y) v /= static_cast<double>(matrix.rows());
    return y;
}

enum class PoolingMode { TfIdf, Mean };

inline PoolingMode parse_pooling(std::string_view s) {
    if (s == "tfidf") return PoolingMode::TfIdf;
    if (s == "mean") return PoolingMode::Mean;
    throw UsageError("unknown pooling mode: " + std::string(s) + " (expected tfidf|mean)");
}

/// Tokenizes, embeds and pools one text under a fixed provider and statistics.
class SentenceEncoder {
public:
    SentenceEncoder(const EmbeddingProvider& provider, const TermStats& stats,
                    const ComponentStats& comp, PoolingMode mode)
        : provider_(&provider), stats_(&stats), comp_(&comp), mode_(mode) {}

    std::size_t dim() const { return provider_->dim(); }
    PoolingMode mode() const { return mode_; }

    /// Returns nullopt for texts without terms.
    std::optional<std::vector<double>> encode_tokens(const std::vector<std::string>& tokens) const {
        if (tokens.empty()) return std::nullopt;
        auto m = provider_->embed(tokens);
        if (mode_ == PoolingMode::Mean) return pool_mean(m);
        return pool_tfidf(m, *stats_, *comp_);
    }

    std::optional<std::vector<double>> encode(std::string_view text) const {
        return encode_tokens(tokenize(text));
    }

private:
    const EmbeddingProvider* provider_;
    const TermStats* stats_;
    const ComponentStats* comp_;
    PoolingMode mode_;
};

/// Component statistics over every non-empty sentence of a corpus.
inline ComponentStats corpus_component_stats(const Corpus& corpus, const EmbeddingProvider& provider,
                                             std::uint64_t max_tokens = 0) {
    ComponentStats stats(provider.dim());
    for (const auto& s : corpus.sentences()) {
        if (s.tokens.empty()) continue;
        auto m = provider.embed(s.tokens);
        for (std::size_t j = 0; j < m.rows(); ++j) {
            if (max_tokens && stats.count() >= max_tokens) return stats;
            stats.add(m.row(j));
        }
    }
    return stats;
}

}  // namespace semrank
