// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>
#include <semrank/corpus.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace semrank {

/// Tied-weight linear projection shared by both branches of the siamese pair.
/// Stored row-major as a d_in x d_out matrix; a vector x projects to W^T x.
class ProjectionModel {
public:
    ProjectionModel() = default;
    ProjectionModel(std::size_t d_in, std::size_t d_out, std::uint64_t seed = 0)
        : d_in_(d_in), d_out_(d_out), seed_(seed), w_(d_in * d_out, 0.0) {
        if (d_in == 0 || d_out == 0) throw UsageError("projection dimensions must be >= 1");
    }

    static ProjectionModel identity(std::size_t d) {
        ProjectionModel m(d, d);
        for (std::size_t i = 0; i < d; ++i) m.at(i, i) = 1.0;
        return m;
    }

    /// Identity on the leading min(d_in, d_out) block plus uniform noise in
    /// [-scale, scale].
    static ProjectionModel seeded(std::size_t d_in, std::size_t d_out, std::uint64_t seed,
                                  double scale = 0.01) {
        ProjectionModel m(d_in, d_out, seed);
        Rng rng(seed);
        for (std::size_t i = 0; i < d_in; ++i)
            for (std::size_t o = 0; o < d_out; ++o)
                m.at(i, o) = (i == o ? 1.0 : 0.0) + rng.uniform(-scale, scale);
        return m;
    }

    std::size_t d_in() const { return d_in_; }
    std::size_t d_out() const { return d_out_; }
    std::uint64_t seed() const { return seed_; }

    double& at(std::size_t i, std::size_t o) { return w_[i * d_out_ + o]; }
    double at(std::size_t i, std::size_t o) const { return w_[i * d_out_ + o]; }
    std::vector<double>& weights() { return w_; }
    const std::vector<double>& weights() const { return w_; }

    std::vector<double> project(std::span<const double> x) const {
        if (x.size() != d_in_)
            throw UsageError("projection input dimension " + std::to_string(x.size()) +
                             " != d_in " + std::to_string(d_in_));
        std::vector<double> y(d_out_, 0.0);
        for (std::size_t i = 0; i < d_in_; ++i) {
            const double xi = x[i];
            const double* row = w_.data() + i * d_out_;
            for (std::size_t o = 0; o < d_out_; ++o) y[o] += row[o] * xi;
        }
        return y;
    }

    void save(const std::string& path) const {
        BinaryWriter w(path);
        w.magic("SEMW");
        w.put<std::uint32_t>(1);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(d_in_));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(d_out_));
        for (double x : w_) w.put<double>(x);
        w.finish();
    }

    static ProjectionModel load(const std::string& path) {
        BinaryReader r(path);
        r.expect_magic("SEMW");
        r.expect_version(1);
        const auto d_in = r.get<std::uint32_t>();
        const auto d_out = r.get<std::uint32_t>();
        if (d_in == 0 || d_out == 0) throw DataError(path + ": projection dimensions must be >= 1");
        ProjectionModel m(d_in, d_out);
        for (auto& x : m.w_) {
            x = r.get<double>();
            if (!std::isfinite(x)) throw DataError(path + ": non-finite weight");
        }
        r.expect_eof();
        return m;
    }

    friend bool operator==(const ProjectionModel& a, const ProjectionModel& b) {
        return a.d_in_ == b.d_in_ && a.d_out_ == b.d_out_ && a.w_ == b.w_;
    }

private:
    std::size_t d_in_ = 0;
    std::size_t d_out_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> w_;
};

struct LabeledPair {
    std::vector<double> a;
    std::vector<double> b;
    double label = 0.0;
};

inline bool valid_label(double label) { return label == 0.0 || label == 0.5 || label == 1.0; }

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double cosine(std::span<const double> u, std::span<const double> v) {
    const double nu = std::sqrt(dot(u, u));
    const double nv = std::sqrt(dot(v, v));
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

}  // namespace detail

/// cos(W^T a, W^T b); 0 when either projection vanishes.
inline double forward(const ProjectionModel& model, std::span<const double> a,
                      std::span<const double> b) {
    return detail::cosine(model.project(a), model.project(b));
}

inline double forward(const ProjectionModel& model, const LabeledPair& pair) {
    return forward(model, pair.a, pair.b);
}

/// Mean squared error between pair cosine and label.
inline double loss(const ProjectionModel& model, std::span<const LabeledPair> batch) {
    if (batch.empty()) throw UsageError("loss of an empty batch");
    double s = 0.0;
    for (const auto& p : batch) {
        const double r = forward(model, p) - p.label;
        s += r * r;
    }
    return s / static_cast<double>(batch.size());
}

/// Analytic d(loss)/dW, row-major d_in x d_out. With u = W^T a, v = W^T b and
/// c = cos(u, v):  dc/du = v/(|u||v|) - c u/|u|^2  (symmetrically for v), and
/// dL/dW = (2/B) sum (c - y) (a (dc/du)^T + b (dc/dv)^T).
/// Pairs with a zero projection are skipped; the mean still divides by B.
inline std::vector<double> gradient(const ProjectionModel& model, std::span<const LabeledPair> batch) {
    if (batch.empty()) throw UsageError("gradient of an empty batch");
    const std::size_t d_in = model.d_in(), d_out = model.d_out();
    std::vector<double> g(d_in * d_out, 0.0);
    std::vector<double> du(d_out), dv(d_out);
    std::size_t skipped = 0;
    for (const auto& p : batch) {
        const auto u = model.project(p.a);
        const auto v = model.project(p.b);
        const double nu = std::sqrt(detail::dot(u, u));
        const double nv = std::sqrt(detail::dot(v, v));
        if (nu == 0.0 || nv == 0.0) {
            ++skipped;
            continue;
        }
        const double c = detail::dot(u, v) / (nu * nv);
        const double coef = 2.0 * (c - p.label) / static_cast<double>(batch.size());
        if (coef == 0.0) continue;
        for (std::size_t o = 0; o < d_out; ++o) {
            du[o] = coef * (v[o] / (nu * nv) - c * u[o] / (nu * nu));
            dv[o] = coef * (u[o] / (nu * nv) - c * v[o] / (nv * nv));
        }
        for (std::size_t i = 0; i < d_in; ++i) {
            double* row = g.data() + i * d_out;
            const double ai = p.a[i], bi = p.b[i];
            for (std::size_t o = 0; o < d_out; ++o) row[o] += ai * du[o] + bi * dv[o];
        }
    }
    if (skipped) warn(std::to_string(skipped) + " pair(s) with zero projection skipped in gradient");
    return g;
}

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 2;
    std::size_t batch_size = 16;
    std::uint64_t seed = 13;
    std::size_t d_out = 0;  // 0 keeps d_in
    double init_scale = 0.01;

    void validate() const {
        if (!(learning_rate >= 0)) throw UsageError("learning rate must be nonnegative");
        if (epochs == 0) throw UsageError("epochs must be >= 1");
        if (batch_size == 0) throw UsageError("batch size must be >= 1");
    }
};

struct TrainResult {
    ProjectionModel model;
    std::vector<double> epoch_loss;  // full-set loss after each epoch
};

/// Plain mini-batch gradient descent with seeded initialization and a seeded
/// shuffle per epoch.
inline TrainResult train(std::span<const LabeledPair> pairs, const TrainConfig& config) {
    config.validate();
    if (pairs.empty()) throw UsageError("no training pairs");
    const std::size_t d_in = pairs.front().a.size();
    for (const auto& p : pairs) {
        if (p.a.size() != d_in || p.b.size() != d_in)
            throw DataError("training pair dimension mismatch");
        if (!valid_label(p.label)) throw DataError("training label must be 0, 0.5 or 1");
    }
    const std::size_t d_out = config.d_out ? config.d_out : d_in;

    TrainResult res{ProjectionModel::seeded(d_in, d_out, config.seed, config.init_scale), {}};
    Rng rng(config.seed ^ 0x5851f42d4c957f2dULL);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<LabeledPair> batch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);
            if (config.learning_rate == 0.0) continue;
            const auto g = gradient(res.model, batch);
            auto& w = res.model.weights();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * g[i];
        }
        res.epoch_loss.push_back(loss(res.model, pairs));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Training-pair records
// ---------------------------------------------------------------------------

/// Id-level training pair, as stored in pair files.
struct PairRecord {
    std::string query_id;
    std::string doc_id;
    double label = 0.0;

    friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

/// `count` zero-labeled pairs per query, doc sampled uniformly (with
/// replacement) from the non-empty corpus sentences other than the query.
inline std::vector<PairRecord> make_random_pairs(const Corpus& corpus,
                                                 const std::vector<std::string>& query_ids,
                                                 std::size_t count, std::uint64_t seed) {
    if (corpus.empty()) throw UsageError("random pairs need a non-empty corpus");
    std::vector<PairRecord> out;
    if (count == 0) return out;
    std::vector<const SentenceRecord*> pool;
    for (const auto& s : corpus.sentences())
        if (!s.tokens.empty()) pool.push_back(&s);
    if (pool.empty()) throw DataError("corpus has no non-empty sentences");
    Rng rng(seed);
    for (const auto& q : query_ids) {
        const bool only_self = pool.size() == 1 && pool.front()->id == q;
        if (only_self) continue;
        for (std::size_t c = 0; c < count; ++c) {
            const SentenceRecord* s;
            do {
                s = pool[rng.index(pool.size())];
            } while (s->id == q);
            out.push_back({q, s->id, 0.0});
        }
    }
    return out;
}

inline void write_pairs(const std::vector<PairRecord>& pairs, std::ostream& out) {
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["query_id"] = p.query_id;
        j["doc_id"] = p.doc_id;
        j["label"] = p.label;
        out << j.dump() << '\n';
    }
}

inline void write_pairs(const std::vector<PairRecord>& pairs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    write_pairs(pairs, out);
}

inline std::vector<PairRecord> read_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pair file: " + path);
    std::vector<PairRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto view = strip_cr(line);
        if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(view);
        } catch (const nlohmann::json::parse_error&) {
            throw DataError(where + ": malformed JSON");
        }
        if (!j.is_object() || !j.contains("query_id") || !j.contains("doc_id") || !j.contains("label") ||
            !j["query_id"].is_string() || !j["doc_id"].is_string() || !j["label"].is_number())
            throw DataError(where + ": record needs query_id, doc_id (strings) and label (number)");
        PairRecord p{j["query_id"].get<std::string>(), j["doc_id"].get<std::string>(),
                     j["label"].get<double>()};
        if (!valid_label(p.label)) throw DataError(where + ": label must be 0, 0.5 or 1");
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace semrank
