// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>
#include <semrank/embed.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace semrank {

namespace detail {

inline double dot(std::span<const double> q, std::span<const float> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * static_cast<double>(v[i]);
    return s;
}

inline double l2_sq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double l2_sq(std::span<const double> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

inline std::vector<double> normalized(std::span<const double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (!(n > 0) || !std::isfinite(n)) return {};
    std::vector<double> out(v.begin(), v.end());
    for (auto& x : out) x /= n;
    return out;
}

}  // namespace detail

/// Row-major float32 matrix of unit vectors with row-aligned ids.
class VectorStore {
public:
    VectorStore() = default;
    explicit VectorStore(std::size_t dim) : dim_(dim) {}

    void add(std::string id, std::span<const double> unit) {
        ids_.push_back(std::move(id));
        for (double x : unit) data_.push_back(static_cast<float>(x));
    }

    void add_raw(std::string id, std::span<const float> row) {
        ids_.push_back(std::move(id));
        data_.insert(data_.end(), row.begin(), row.end());
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    const std::string& id(std::size_t r) const { return ids_[r]; }
    const std::vector<std::string>& ids() const { return ids_; }
    std::span<const float> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }

    std::vector<double> row_as_double(std::size_t r) const {
        auto f = row(r);
        return {f.begin(), f.end()};
    }

    friend bool operator==(const VectorStore&, const VectorStore&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
};

/// Exact cosine search over L2-normalized vectors, ids stored ascending.
class FlatIndex {
public:
    FlatIndex() = default;

    std::size_t dim() const { return store_.dim(); }
    std::size_t size() const { return store_.size(); }
    const VectorStore& store() const { return store_; }

    RankedList search(std::span<const double> query, std::size_t k, std::string query_id = {}) const;

    void save(const std::string& path) const;
    static FlatIndex load(const std::string& path);

    friend bool operator==(const FlatIndex&, const FlatIndex&) = default;

private:
    friend FlatIndex build_flat(std::vector<SentenceVector> vectors);
    friend class IvfIndex;
    VectorStore store_;
};

/// Normalizes and stores the vectors. Rejects zero vectors, duplicate ids
/// and mixed dimensions.
inline FlatIndex build_flat(std::vector<SentenceVector> vectors) {
    FlatIndex idx;
    if (vectors.empty()) return idx;
    std::sort(vectors.begin(), vectors.end(),
              [](const auto& a, const auto& b) { return a.sentence_id < b.sentence_id; });
    const std::size_t dim = vectors.front().components.size();
    if (dim == 0) throw DataError("vectors must have dimension >= 1");
    idx.store_ = VectorStore(dim);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        auto& v = vectors[i];
        if (i > 0 && idx.store_.ids().back() == v.sentence_id)
            throw DataError("duplicate vector id: " + v.sentence_id);
        if (v.components.size() != dim)
            throw DataError("dimension mismatch for vector " + v.sentence_id);
        auto unit = detail::normalized(v.components);
        if (unit.empty()) throw DataError("zero or non-finite vector: " + v.sentence_id);
        idx.store_.add(std::move(v.sentence_id), unit);
    }
    return idx;
}

namespace detail {

inline std::vector<double> checked_query(std::span<const double> query, std::size_t dim) {
    if (query.size() != dim)
        throw UsageError("query dimension " + std::to_string(query.size()) + " != index dimension " +
                         std::to_string(dim));
    auto q = normalized(query);
    if (q.empty()) throw DataError("zero query vector");
    return q;
}

}  // namespace detail

inline RankedList FlatIndex::search(std::span<const double> query, std::size_t k,
                                    std::string query_id) const {
    if (k == 0) throw UsageError("result depth k must be >= 1");
    RankedList out{std::move(query_id), {}, 0};
    if (store_.size() == 0) return out;
    const auto q = detail::checked_query(query, dim());
    out.entries.reserve(store_.size());
    for (std::size_t r = 0; r < store_.size(); ++r)
        out.entries.push_back({store_.id(r), detail::dot(q, store_.row(r))});
    sort_and_truncate(out.entries, k);
    return out;
}

inline RankedList search_flat(const FlatIndex& index, std::span<const double> query, std::size_t k,
                              std::string query_id = {}) {
    return index.search(query, k, std::move(query_id));
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> assignment;
    std::size_t iterations = 0;
};

namespace detail {

template <class Row>
std::size_t nearest_centroid(const Row& x, const std::vector<std::vector<double>>& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = l2_sq(centroids[c], x);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

}  // namespace detail

/// Lloyd's algorithm with seeded initialization from nlist distinct input
/// points. Stops at an assignment fixpoint or after max_iters. An empty
/// cluster is re-seeded with the point of the largest cluster that lies
/// farthest from that cluster's centroid.
inline KMeansResult kmeans(const std::vector<std::vector<double>>& vectors, std::size_t nlist,
                           std::uint64_t seed, std::size_t max_iters = 25) {
    if (nlist == 0) throw UsageError("nlist must be >= 1");
    if (vectors.size() < nlist)
        throw DataError("k-means needs at least nlist vectors (" + std::to_string(vectors.size()) +
                        " < " + std::to_string(nlist) + ")");
    const std::size_t n = vectors.size();
    const std::size_t dim = vectors.front().size();

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < nlist; ++i) std::swap(order[i], order[i + rng.index(n - i)]);

    KMeansResult res;
    res.centroids.reserve(nlist);
    for (std::size_t c = 0; c < nlist; ++c) res.centroids.push_back(vectors[order[c]]);
    res.assignment.assign(n, std::numeric_limits<std::size_t>::max());

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            auto c = detail::nearest_centroid(vectors[i], res.centroids);
            if (c != res.assignment[i]) {
                res.assignment[i] = c;
                changed = true;
            }
        }
        res.iterations = iter + 1;
        if (!changed) break;

        std::vector<std::vector<double>> sums(nlist, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(nlist, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[res.assignment[i]];
            auto& s = sums[res.assignment[i]];
            for (std::size_t j = 0; j < dim; ++j) s[j] += vectors[i][j];
        }
        for (std::size_t c = 0; c < nlist; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < dim; ++j)
                res.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
        }
        for (std::size_t c = 0; c < nlist; ++c) {
            if (counts[c] != 0) continue;
            const auto largest = static_cast<std::size_t>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (res.assignment[i] != largest) continue;
                const double d = detail::l2_sq(res.centroids[largest], vectors[i]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            res.centroids[c] = vectors[far];
            res.assignment[far] = c;
            --counts[largest];
            counts[c] = 1;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Inverted-file index
// ---------------------------------------------------------------------------

class IvfIndex {
public:
    IvfIndex() = default;

    /// Trains nlist centroids on the flat index's vectors and partitions them.
    IvfIndex(const FlatIndex& flat, std::size_t nlist, std::uint64_t seed, std::size_t max_iters = 25)
        : seed_(seed) {
        const auto& store = flat.store();
        std::vector<std::vector<double>> rows;
        rows.reserve(store.size());
        for (std::size_t r = 0; r < store.size(); ++r) rows.push_back(store.row_as_double(r));
        auto km = kmeans(rows, nlist, seed, max_iters);
        dim_ = store.dim();
        // Centroids are kept at storage precision so a reloaded index probes identically.
        for (auto& c : km.centroids)
            for (auto& x : c) x = static_cast<double>(static_cast<float>(x));
        centroids_ = std::move(km.centroids);
        cells_.assign(nlist, VectorStore(dim_));
        for (std::size_t r = 0; r < store.size(); ++r)
            cells_[detail::nearest_centroid(rows[r], centroids_)].add_raw(store.id(r), store.row(r));
    }

    std::size_t dim() const { return dim_; }
    std::size_t nlist() const { return centroids_.size(); }
    std::uint64_t seed() const { return seed_; }
    const std::vector<std::vector<double>>& centroids() const { return centroids_; }
    const std::vector<VectorStore>& cells() const { return cells_; }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& c : cells_) n += c.size();
        return n;
    }

    /// Cells ordered by centroid distance to the (normalized) query; ties by cell index.
    std::vector<std::size_t> probe_order(std::span<const double> unit_query) const {
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(centroids_.size());
        for (std::size_t c = 0; c < centroids_.size(); ++c)
            d.emplace_back(detail::l2_sq(centroids_[c], unit_query), c);
        std::sort(d.begin(), d.end());
        std::vector<std::size_t> out;
        out.reserve(d.size());
        for (auto& [_, c] : d) out.push_back(c);
        return out;
    }

    RankedList search(std::span<const double> query, std::size_t k, std::size_t nprobe,
                      std::string query_id = {}) const {
        if (k == 0) throw UsageError("result depth k must be >= 1");
        if (nprobe == 0 || nprobe > nlist())
            throw UsageError("nprobe must lie in [1, nlist=" + std::to_string(nlist()) + "]");
        RankedList out{std::move(query_id), {}, 0};
        const auto q = detail::checked_query(query, dim_);
        const auto order = probe_order(q);
        for (std::size_t p = 0; p < nprobe; ++p) {
            const auto& cell = cells_[order[p]];
            for (std::size_t r = 0; r < cell.size(); ++r)
                out.entries.push_back({cell.id(r), detail::dot(q, cell.row(r))});
        }
        sort_and_truncate(out.entries, k);
        return out;
    }

    void save(const std::string& path) const;
    static IvfIndex load(const std::string& path);

    friend bool operator==(const IvfIndex&, const IvfIndex&) = default;

private:
    std::size_t dim_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::vector<double>> centroids_;
    std::vector<VectorStore> cells_;
};

inline IvfIndex build_ivf(const FlatIndex& flat, std::size_t nlist, std::uint64_t seed,
                          std::size_t max_iters = 25) {
    return IvfIndex(flat, nlist, seed, max_iters);
}

inline RankedList search_ivf(const IvfIndex& index, std::span<const double> query, std::size_t k,
                             std::size_t nprobe, std::string query_id = {}) {
    return index.search(query, k, nprobe, std::move(query_id));
}

/// nlist default: ceil(sqrt(N)).
inline std::size_t default_nlist(std::size_t n) {
    auto r = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    return std::max<std::size_t>(1, r);
}

// ---------------------------------------------------------------------------
// Persistence ("SEMA")
// ---------------------------------------------------------------------------
//
// "SEMA", u32 version, u32 d, u32 nlist, u64 seed, nlist*d float32 centroids,
// then max(nlist, 1) cells: u64 count, {string id, d float32} per entry.
// A flat index is written with nlist = 0 and a single cell.

namespace detail {

inline void write_cell(BinaryWriter& w, const VectorStore& cell) {
    w.put<std::uint64_t>(cell.size());
    for (std::size_t r = 0; r < cell.size(); ++r) {
        w.string(cell.id(r));
        for (float f : cell.row(r)) w.put<float>(f);
    }
}

inline VectorStore read_cell(BinaryReader& r, std::size_t dim) {
    VectorStore cell(dim);
    const auto count = r.get<std::uint64_t>();
    std::vector<float> row(dim);
    for (std::uint64_t e = 0; e < count; ++e) {
        auto id = r.string();
        for (auto& f : row) f = r.get<float>();
        cell.add_raw(std::move(id), row);
    }
    return cell;
}

struct SemaHeader {
    std::uint32_t dim;
    std::uint32_t nlist;
    std::uint64_t seed;
};

inline SemaHeader read_sema_header(BinaryReader& r) {
    r.expect_magic("SEMA");
    r.expect_version(1);
    SemaHeader h{r.get<std::uint32_t>(), r.get<std::uint32_t>(), r.get<std::uint64_t>()};
    if (h.dim == 0) throw DataError(r.path() + ": dimension must be >= 1");
    return h;
}

}  // namespace detail

inline void FlatIndex::save(const std::string& path) const {
    BinaryWriter w(path);
    w.magic("SEMA");
    w.put<std::uint32_t>(1);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dim()));
    w.put<std::uint32_t>(0);
    w.put<std::uint64_t>(0);
    detail::write_cell(w, store_);
    w.finish();
}

inline FlatIndex FlatIndex::load(const std::string& path) {
    BinaryReader r(path);
    auto h = detail::read_sema_header(r);
    if (h.nlist != 0) throw DataError(path + ": file holds an IVF index, not a flat index");
    FlatIndex idx;
    idx.store_ = detail::read_cell(r, h.dim);
    r.expect_eof();
    return idx;
}

inline void IvfIndex::save(const std::string& path) const {
    BinaryWriter w(path);
    w.magic("SEMA");
    w.put<std::uint32_t>(1);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dim_));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(nlist()));
    w.put<std::uint64_t>(seed_);
    for (const auto& c : centroids_)
        for (double x : c) w.put<float>(static_cast<float>(x));
    for (const auto& cell : cells_) detail::write_cell(w, cell);
    w.finish();
}

inline IvfIndex IvfIndex::load(const std::string& path) {
    BinaryReader r(path);
    auto h = detail::read_sema_header(r);
    if (h.nlist == 0) throw DataError(path + ": file holds a flat index, not an IVF index");
    IvfIndex idx;
    idx.dim_ = h.dim;
    idx.seed_ = h.seed;
    idx.centroids_.assign(h.nlist, std::vector<double>(h.dim));
    for (auto& c : idx.centroids_)
        for (auto& x : c) x = static_cast<double>(r.get<float>());
    for (std::uint32_t c = 0; c < h.nlist; ++c) idx.cells_.push_back(detail::read_cell(r, h.dim));
    r.expect_eof();
    return idx;
}

/// nlist recorded in an index file; 0 means a flat index.
inline std::uint32_t peek_index_nlist(const std::string& path) {
    BinaryReader r(path);
    return detail::read_sema_header(r).nlist;
}

}  // namespace semrank
