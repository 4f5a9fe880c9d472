// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace semrank {

namespace detail {

/// Decodes one UTF-8 sequence starting at s[i]; invalid bytes decode as
/// U+FFFD and consume a single byte.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k < len; ++k) {
        int c = cont(static_cast<std::size_t>(k));
        if (c < 0) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | static_cast<char32_t>(c);
    }
    i += static_cast<std::size_t>(len);
    return cp;
}

inline void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline bool is_word_char(char32_t cp) {
    if (cp < 0x80)
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp == 0xFFFD) return false;
    if (cp >= 0x80 && cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;  // Latin-1 symbols
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, arrows, math, box drawing
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK symbols and punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;  // fullwidth punctuation
    if (cp >= 0xFF1A && cp <= 0xFF20) return false;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
    return true;
}

inline char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp < 0x80) return cp;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;  // Greek
    if (cp >= 0x410 && cp <= 0x42F) return cp + 32;                 // Cyrillic
    if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
    // Latin Extended-A pairs upper/lower case; the parity flips at U+0139 and U+014A.
    if ((cp >= 0x100 && cp <= 0x137 && cp != 0x130) || (cp >= 0x14A && cp <= 0x177))
        return cp % 2 == 0 ? cp + 1 : cp;
    if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E))
        return cp % 2 == 1 ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;
    return cp;
}

}  // namespace detail

/// Lowercases and splits on maximal runs of non-alphanumeric characters.
/// Total and deterministic; the empty string yields no terms.
inline std::vector<std::string> tokenize(std::string_view text,
                                         const std::unordered_set<std::string>* stopwords = nullptr) {
    std::vector<std::string> terms;
    std::string current;
    auto flush = [&] {
        if (current.empty()) return;
        if (!stopwords || !stopwords->contains(current)) terms.push_back(std::move(current));
        current.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = detail::decode_utf8(text, i);
        if (detail::is_word_char(cp))
            detail::encode_utf8(detail::to_lower(cp), current);
        else
            flush();
    }
    flush();
    return terms;
}

inline std::string join_terms(const std::vector<std::string>& terms) {
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i) out.push_back(' ');
        out += terms[i];
    }
    return out;
}

struct SentenceRecord {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
};

/// Corpus-level term statistics.
struct TermStats {
    std::unordered_map<std::string, std::uint32_t> df;
    std::size_t n = 0;
    double avg_len = 0.0;

    std::uint32_t doc_freq(const std::string& term) const {
        auto it = df.find(term);
        return it == df.end() ? 0 : it->second;
    }

    friend bool operator==(const TermStats&, const TermStats&) = default;
};

inline TermStats compute_term_stats(const std::vector<SentenceRecord>& sentences) {
    TermStats stats;
    stats.n = sentences.size();
    std::size_t total = 0;
    for (const auto& s : sentences) {
        total += s.tokens.size();
        std::unordered_set<std::string_view> seen;
        for (const auto& t : s.tokens)
            if (seen.insert(t).second) ++stats.df[t];
    }
    stats.avg_len = stats.n ? static_cast<double>(total) / static_cast<double>(stats.n) : 0.0;
    return stats;
}

/// Smoothed inverse document frequency, ln((n + 1) / (df + 1)) + 1.
/// Always >= 1; unseen terms take df = 0.
inline double idf(std::uint32_t df, std::size_t n) {
    return std::log((static_cast<double>(n) + 1.0) / (static_cast<double>(df) + 1.0)) + 1.0;
}

inline double idf(const std::string& term, const TermStats& stats) {
    return idf(stats.doc_freq(term), stats.n);
}

class Corpus {
public:
    Corpus() = default;

    /// Takes ownership of the records. Tokens are recomputed from text so the
    /// tokens == tokenize(text) invariant cannot be violated by the caller.
    explicit Corpus(std::vector<SentenceRecord> sentences) : sentences_(std::move(sentences)) {
        for (std::size_t i = 0; i < sentences_.size(); ++i) {
            auto& s = sentences_[i];
            s.tokens = tokenize(s.text);
            if (!by_id_.emplace(s.id, i).second) throw DataError("duplicate id: " + s.id);
        }
        stats_ = compute_term_stats(sentences_);
    }

    static Corpus from_texts(const std::vector<std::pair<std::string, std::string>>& rows) {
        std::vector<SentenceRecord> recs;
        recs.reserve(rows.size());
        for (const auto& [id, text] : rows) recs.push_back({id, text, {}});
        return Corpus(std::move(recs));
    }

    const std::vector<SentenceRecord>& sentences() const { return sentences_; }
    const TermStats& stats() const { return stats_; }
    std::size_t size() const { return sentences_.size(); }
    bool empty() const { return sentences_.empty(); }

    const SentenceRecord* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &sentences_[it->second];
    }

    const SentenceRecord& at(const std::string& id) const {
        if (const auto* s = find(id)) return *s;
        throw DataError("unknown sentence id: " + id);
    }

private:
    std::vector<SentenceRecord> sentences_;
    std::unordered_map<std::string, std::size_t> by_id_;
    TermStats stats_;
};

/// Reads newline-delimited JSON objects with string fields "id" and "text".
/// Blank lines are skipped. Empty sentences are kept and reported.
inline Corpus ingest(std::istream& in, const std::string& source = "<stream>") {
    std::vector<SentenceRecord> recs;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = strip_cr(line);
        if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(view);
        } catch (const nlohmann::json::parse_error&) {
            throw DataError(source + ":" + std::to_string(lineno) + ": malformed JSON");
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("text") || !j["id"].is_string() ||
            !j["text"].is_string())
            throw DataError(source + ":" + std::to_string(lineno) +
                            ": record needs string fields \"id\" and \"text\"");
        SentenceRecord rec{j["id"].get<std::string>(), j["text"].get<std::string>(), {}};
        if (!ids.insert(rec.id).second) throw DataError("duplicate id: " + rec.id);
        recs.push_back(std::move(rec));
    }
    Corpus corpus(std::move(recs));
    for (const auto& s : corpus.sentences())
        if (s.tokens.empty()) warn("sentence " + s.id + " has no terms; it will not be indexed");
    return corpus;
}

inline Corpus ingest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus: " + path);
    return ingest(in, path);
}

inline void write_corpus(const Corpus& corpus, std::ostream& out) {
    for (const auto& s : corpus.sentences()) {
        nlohmann::json j = {{"id", s.id}, {"text", s.text}};
        out << j.dump() << '\n';
    }
}

inline void write_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    write_corpus(corpus, out);
}

}  // namespace semrank
