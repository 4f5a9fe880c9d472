// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>

#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace semrank {

/// Flat key=value configuration. '#' starts a comment; later assignments
/// (including command-line overrides) win. Unknown keys are rejected so that
/// typos do not silently fall back to defaults.
class Config {
public:
    Config() { defaults(); }

    static const std::map<std::string, std::string>& default_values() {
        static const std::map<std::string, std::string> d = {
            {"corpus", ""},
            {"queries", ""},  // empty: every corpus sentence is also a query
            {"qrels", ""},
            {"pairs", ""},  // empty: derive training pairs from qrels
            {"synonyms", ""},
            {"provider", "stub"},
            {"embeddings", ""},
            {"unknown_terms", "error"},
            {"dim", "64"},
            {"stub_seed", "7"},
            {"pooling", "tfidf"},
            {"siamese_pooling", "mean"},
            {"scorer_pooling", "tfidf"},
            {"scores", ""},  // external cross-encoder score file; empty uses the siamese surrogate
            {"variance_sample", "0"},
            {"index", "flat"},
            {"nlist", "0"},  // 0: ceil(sqrt(N))
            {"nprobe", "8"},
            {"kmeans_seed", "1"},
            {"kmeans_iters", "25"},
            {"first_stage_depth", "1000"},
            {"rerank_depth", "100"},
            {"fusion", "fusion.paper-weighted"},
            {"eval_k", "5,10"},
            {"exclude_self", "true"},
            {"bm25_k1", "1.2"},
            {"bm25_b", "0.75"},
            {"sdm_lambda_t", "0.85"},
            {"sdm_lambda_o", "0.10"},
            {"sdm_lambda_u", "0.05"},
            {"sdm_window", "8"},
            {"sdm_mu", "2500"},
            {"train_lr", "0.05"},
            {"train_epochs", "2"},
            {"train_batch", "16"},
            {"train_seed", "13"},
            {"train_d_out", "0"},
            {"random_pairs", "2"},
            {"pair_seed", "17"},
            {"good_threshold", "1"},
            {"out_dir", "out"},
        };
        return d;
    }

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open config file: " + path);
        Config c;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string_view v = line;
            if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
            v = trim(v);
            if (v.empty()) continue;
            try {
                c.set_assignment(v);
            } catch (const UsageError& e) {
                throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        return c;
    }

    void set_assignment(std::string_view assignment) {
        auto eq = assignment.find('=');
        if (eq == std::string_view::npos) throw UsageError("expected key=value, got '" + std::string(assignment) + "'");
        set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
    }

    void set(const std::string& key, std::string value) {
        if (!default_values().contains(key)) throw UsageError("unknown configuration key: " + key);
        values_[key] = std::move(value);
    }

    const std::string& str(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw UsageError("unknown configuration key: " + key);
        return it->second;
    }

    double real(const std::string& key) const {
        double v = 0;
        if (!parse_number(str(key), v)) throw UsageError(key + " must be a number, got '" + str(key) + "'");
        return v;
    }

    std::uint64_t integer(const std::string& key) const {
        std::uint64_t v = 0;
        if (!parse_number(str(key), v))
            throw UsageError(key + " must be a nonnegative integer, got '" + str(key) + "'");
        return v;
    }

    bool flag(const std::string& key) const {
        const auto& s = str(key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw UsageError(key + " must be true or false, got '" + s + "'");
    }

    std::vector<std::size_t> integer_list(const std::string& key) const {
        std::vector<std::size_t> out;
        for (auto part : split_char(str(key), ',')) {
            std::size_t v = 0;
            if (!parse_number(trim(part), v) || v == 0)
                throw UsageError(key + " must be a list of positive integers");
            out.push_back(v);
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Serialized form, keys sorted.
    std::string dump() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

private:
    void defaults() { values_ = default_values(); }

    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        return s;
    }

    std::map<std::string, std::string> values_;
};

}  // namespace semrank
