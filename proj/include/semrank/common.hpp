// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <utility>
#include <vector>

namespace semrank {

/// Base of every error the library throws. Malformed inputs, violated
/// preconditions on data, and I/O failures all derive from this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data (malformed files, unknown ids, degenerate vectors).
/// The CLI maps this to exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// Bad caller arguments (k = 0, mismatched dimensions from configuration).
/// The CLI maps this to exit code 1.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Warnings go to a replaceable sink so tests can capture them.
struct WarningSink {
    static std::ostream*& stream() {
        static std::ostream* s = &std::cerr;
        return s;
    }
};

inline void warn(const std::string& msg) {
    if (auto* s = WarningSink::stream()) *s << "warning: " << msg << '\n';
}

// ---------------------------------------------------------------------------
// Ranked lists
// ---------------------------------------------------------------------------

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// Ordered results for one query. Every ranker emits entries sorted by
/// score descending, ties by ascending doc_id. Reranked lists may break the
/// score order at `boundary` (entries at index >= boundary keep first-stage
/// scores).
struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;
    std::size_t boundary = 0;  // 0 means no mixed-scale boundary

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    friend bool operator==(const RankedList& a, const RankedList& b) {
        return a.query_id == b.query_id && a.entries == b.entries;
    }
};

/// The artifact-wide total order: score descending, then doc_id ascending.
inline bool ranks_before(const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/// Sorts `entries` into the total order and keeps the first k.
inline void sort_and_truncate(std::vector<RankedEntry>& entries, std::size_t k) {
    if (entries.size() > k) {
        std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k),
                          entries.end(), ranks_before);
        entries.resize(k);
    } else {
        std::sort(entries.begin(), entries.end(), ranks_before);
    }
}

inline bool has_unique_ids(const RankedList& list) {
    std::unordered_set<std::string_view> seen;
    for (const auto& e : list.entries)
        if (!seen.insert(e.doc_id).second) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Deterministic randomness
// ---------------------------------------------------------------------------

/// splitmix64 finalizer; used for hashing seeds and terms into streams.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over bytes, then mixed.
inline std::uint64_t hash_bytes(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

/// mt19937_64 output is fixed by the standard; the distributions are not,
/// so the few draws we need are implemented here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

    /// Uniform double in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int precision) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::vector<std::string_view> split_char(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view strip_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

// ---------------------------------------------------------------------------
// Little-endian binary I/O
// ---------------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw DataError("cannot open for writing: " + path);
    }

    template <class T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }

    void magic(std::string_view m) { out_.write(m.data(), static_cast<std::streamsize>(m.size())); }

    void string(std::string_view s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void finish() {
        out_.flush();
        if (!out_) throw DataError("write failed: " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw DataError("cannot open: " + path);
    }

    template <class T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        T v;
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in_) throw DataError(path_ + ": truncated file");
        return v;
    }

    void expect_magic(std::string_view m) {
        std::string got(m.size(), '\0');
        in_.read(got.data(), static_cast<std::streamsize>(m.size()));
        if (!in_ || got != m)
            throw DataError(path_ + ": bad magic (expected \"" + std::string(m) + "\")");
    }

    void expect_version(std::uint32_t want) {
        auto v = get<std::uint32_t>();
        if (v != want)
            throw DataError(path_ + ": unsupported format version " + std::to_string(v));
    }

    std::string string(std::size_t max_len = 1u << 20) {
        auto n = get<std::uint32_t>();
        if (n > max_len) throw DataError(path_ + ": string length out of range");
        std::string s(n, '\0');
        in_.read(s.data(), n);
        if (!in_) throw DataError(path_ + ": truncated file");
        return s;
    }

    void expect_eof() {
        if (in_.peek() != std::char_traits<char>::eof())
            throw DataError(path_ + ": trailing bytes after payload");
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
};

}  // namespace semrank
