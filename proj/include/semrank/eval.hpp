// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>
#include <semrank/corpus.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace semrank {

/// Grades: 3 exactly on-point, 2 relevant, 1 somewhat relevant, 0 irrelevant.
struct Judgment {
    std::string query_id;
    std::string doc_id;
    int grade = 0;

    friend bool operator==(const Judgment&, const Judgment&) = default;
};

class JudgmentSet {
public:
    using DocGrades = std::map<std::string, int>;

    void add(const Judgment& j) {
        if (j.grade < 0 || j.grade > 3)
            throw DataError("grade out of range [0,3] for " + j.query_id + "/" + j.doc_id);
        if (!by_query_[j.query_id].emplace(j.doc_id, j.grade).second)
            throw DataError("duplicate judgment for " + j.query_id + "/" + j.doc_id);
    }

    /// Grade of (query, doc); unjudged pairs grade 0.
    int grade(const std::string& query_id, const std::string& doc_id) const {
        auto q = by_query_.find(query_id);
        if (q == by_query_.end()) return 0;
        auto d = q->second.find(doc_id);
        return d == q->second.end() ? 0 : d->second;
    }

    const DocGrades* for_query(const std::string& query_id) const {
        auto q = by_query_.find(query_id);
        return q == by_query_.end() ? nullptr : &q->second;
    }

    const std::map<std::string, DocGrades>& queries() const { return by_query_; }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [_, docs] : by_query_) n += docs.size();
        return n;
    }

    std::vector<Judgment> all() const {
        std::vector<Judgment> out;
        for (const auto& [q, docs] : by_query_)
            for (const auto& [d, g] : docs) out.push_back({q, d, g});
        return out;
    }

    friend bool operator==(const JudgmentSet&, const JudgmentSet&) = default;

private:
    std::map<std::string, DocGrades> by_query_;
};

/// Per-query ranked lists plus a run tag; queries iterate in ascending id order.
struct RunSet {
    std::string tag = "semrank";
    std::map<std::string, RankedList> lists;

    void add(RankedList list) {
        if (!has_unique_ids(list)) throw DataError("duplicate doc id in run for query " + list.query_id);
        auto key = list.query_id;
        lists[key] = std::move(list);
    }

    friend bool operator==(const RunSet& a, const RunSet& b) {
        return a.tag == b.tag && a.lists == b.lists;
    }
};

// ---------------------------------------------------------------------------
// nDCG
// ---------------------------------------------------------------------------

inline double dcg_gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }

inline double dcg_discount(std::size_t rank) {  // 1-based
    return std::log2(static_cast<double>(rank) + 1.0);
}

/// nDCG@k with gain 2^g - 1 and discount log2(i + 1). Unjudged documents
/// grade 0. Returns nullopt when the query's ideal DCG is zero.
inline std::optional<double> ndcg(const RankedList& run, const JudgmentSet& judgments, std::size_t k) {
    if (k == 0) throw UsageError("ndcg depth k must be >= 1");
    std::vector<int> ideal;
    if (const auto* docs = judgments.for_query(run.query_id))
        for (const auto& [_, g] : *docs)
            if (g > 0) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) idcg += dcg_gain(ideal[i]) / dcg_discount(i + 1);
    if (idcg == 0.0) return std::nullopt;

    double dcg = 0.0;
    const std::size_t depth = std::min(k, run.entries.size());
    for (std::size_t i = 0; i < depth; ++i) {
        const int g = judgments.grade(run.query_id, run.entries[i].doc_id);
        if (g > 0) dcg += dcg_gain(g) / dcg_discount(i + 1);
    }
    return dcg / idcg;
}

struct MeanNdcg {
    double mean = 0.0;
    std::size_t evaluated = 0;
};

/// Mean nDCG@k over the run's evaluable queries.
inline MeanNdcg mean_ndcg(const RunSet& runs, const JudgmentSet& judgments, std::size_t k) {
    if (runs.lists.empty()) throw UsageError("run set is empty");
    MeanNdcg out;
    double sum = 0.0;
    for (const auto& [qid, list] : runs.lists) {
        if (auto v = ndcg(list, judgments, k)) {
            sum += *v;
            ++out.evaluated;
        }
    }
    if (out.evaluated == 0) throw DataError("no evaluable queries (every query has ideal DCG 0)");
    out.mean = sum / static_cast<double>(out.evaluated);
    return out;
}

/// Adds an empty list for every judged query the run lacks. A run file
/// cannot express "no results", so this restores those queries before
/// averaging.
inline void fill_missing_queries(RunSet& runs, const JudgmentSet& judgments) {
    for (const auto& [qid, _] : judgments.queries())
        if (!runs.lists.contains(qid)) runs.lists.emplace(qid, RankedList{qid, {}, 0});
}

/// Recall@k of the positively judged documents (grade >= min_grade);
/// nullopt when the query has none.
inline std::optional<double> recall_at(const RankedList& run, const JudgmentSet& judgments,
                                       std::size_t k, int min_grade = 1) {
    const auto* docs = judgments.for_query(run.query_id);
    if (!docs) return std::nullopt;
    std::size_t relevant = 0;
    for (const auto& [_, g] : *docs) relevant += g >= min_grade;
    if (relevant == 0) return std::nullopt;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < std::min(k, run.entries.size()); ++i)
        hit += judgments.grade(run.query_id, run.entries[i].doc_id) >= min_grade;
    return static_cast<double>(hit) / static_cast<double>(relevant);
}

// ---------------------------------------------------------------------------
// Judgment pooling
// ---------------------------------------------------------------------------

struct WorksheetRow {
    std::string query_id;
    std::string doc_id;
    std::string doc_text;

    friend bool operator==(const WorksheetRow&, const WorksheetRow&) = default;
};

/// Deduplicated union of every system's top-k per query, sorted by
/// (query_id, doc_id). Documents missing from the corpus get empty text.
inline std::vector<WorksheetRow> pool_top_k(const std::vector<RunSet>& runsets, std::size_t k,
                                            const Corpus* corpus = nullptr) {
    if (k == 0) throw UsageError("pool depth k must be >= 1");
    std::set<std::pair<std::string, std::string>> pooled;
    for (const auto& rs : runsets)
        for (const auto& [qid, list] : rs.lists)
            for (std::size_t i = 0; i < std::min(k, list.entries.size()); ++i)
                pooled.emplace(qid, list.entries[i].doc_id);
    std::vector<WorksheetRow> rows;
    rows.reserve(pooled.size());
    for (const auto& [q, d] : pooled) {
        std::string text;
        if (corpus)
            if (const auto* s = corpus->find(d)) text = s->text;
        rows.push_back({q, d, std::move(text)});
    }
    return rows;
}

namespace detail {

inline std::string sanitize_field(std::string s) {
    for (auto& c : s)
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    return s;
}

}  // namespace detail

/// Tab-separated query_id, doc_id, doc_text and an empty grade column.
inline void write_worksheet(const std::vector<WorksheetRow>& rows, std::ostream& out) {
    for (const auto& r : rows)
        out << r.query_id << '\t' << r.doc_id << '\t' << detail::sanitize_field(r.doc_text) << '\t' << '\n';
}

inline void write_worksheet(const std::vector<WorksheetRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    write_worksheet(rows, out);
}

// ---------------------------------------------------------------------------
// TREC run and qrels files
// ---------------------------------------------------------------------------

/// `query_id Q0 doc_id rank score tag`, queries ascending, ranks from 1.
inline void write_run(const RunSet& runs, std::ostream& out) {
    for (const auto& [qid, list] : runs.lists)
        for (std::size_t i = 0; i < list.entries.size(); ++i)
            out << qid << " Q0 " << list.entries[i].doc_id << ' ' << (i + 1) << ' '
                << format_double(list.entries[i].score) << ' ' << runs.tag << '\n';
}

inline void write_run(const RunSet& runs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    write_run(runs, out);
    if (!out) throw DataError("write failed: " + path);
}

inline RunSet read_run(std::istream& in, const std::string& source = "<run>") {
    struct Row {
        long rank;
        RankedEntry entry;
    };
    std::map<std::string, std::vector<Row>> rows;
    RunSet runs;
    bool have_tag = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto f = split_ws(line);
        if (f.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        long rank = 0;
        double score = 0;
        if (f.size() != 6 || f[1] != "Q0" || !parse_number(f[3], rank) || rank < 1 ||
            !parse_number(f[4], score))
            throw DataError(where + ": expected 'query_id Q0 doc_id rank score tag'");
        if (!have_tag) {
            runs.tag = std::string(f[5]);
            have_tag = true;
        } else if (f[5] != runs.tag) {
            warn(where + ": run tag '" + std::string(f[5]) + "' differs from '" + runs.tag + "'");
        }
        rows[std::string(f[0])].push_back({rank, {std::string(f[2]), score}});
    }
    for (auto& [qid, list] : rows) {
        std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
        RankedList rl{qid, {}, 0};
        bool warned = false;
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (i > 0 && list[i].rank == list[i - 1].rank)
                throw DataError(source + ": duplicate rank " + std::to_string(list[i].rank) + " for query " + qid);
            if (i > 0 && list[i].entry.score > list[i - 1].entry.score && !warned) {
                warn(source + ": scores increase with rank for query " + qid);
                warned = true;
            }
            rl.entries.push_back(std::move(list[i].entry));
        }
        if (!has_unique_ids(rl)) throw DataError(source + ": duplicate doc id for query " + qid);
        runs.lists.emplace(qid, std::move(rl));
    }
    return runs;
}

inline RunSet read_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run file: " + path);
    return read_run(in, path);
}

/// `query_id 0 doc_id grade`.
inline void write_qrels(const JudgmentSet& judgments, std::ostream& out) {
    for (const auto& [q, docs] : judgments.queries())
        for (const auto& [d, g] : docs) out << q << " 0 " << d << ' ' << g << '\n';
}

inline void write_qrels(const JudgmentSet& judgments, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    write_qrels(judgments, out);
}

inline JudgmentSet read_qrels(std::istream& in, const std::string& source = "<qrels>") {
    JudgmentSet js;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto f = split_ws(line);
        if (f.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        int grade = 0;
        if (f.size() != 4 || !parse_number(f[3], grade))
            throw DataError(where + ": expected 'query_id 0 doc_id grade'");
        if (grade < 0 || grade > 3) throw DataError(where + ": grade must lie in [0, 3]");
        try {
            js.add({std::string(f[0]), std::string(f[2]), grade});
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return js;
}

inline JudgmentSet read_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open qrels file: " + path);
    return read_qrels(in, path);
}

}  // namespace semrank
