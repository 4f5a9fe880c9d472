// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>
#include <semrank/corpus.hpp>
#include <semrank/embed.hpp>
#include <semrank/eval.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace semrank {

/// Synthetic paraphrase corpus. Each cluster is a bag of `slots` concepts;
/// every concept has one surface word per paraphrase, all linked to the
/// first by the synonym map. Paraphrase j uses its own surface word for a
/// slot with probability `vocab_split`, else the shared one.
struct SynthParams {
    std::size_t clusters = 20;
    std::size_t paraphrases = 5;
    double vocab_split = 1.0;
    std::uint64_t seed = 42;
    std::size_t slots = 8;
    std::size_t noise_words = 0;     // extra words per sentence from a shared noise vocabulary
    std::size_t noise_vocab = 50;
    std::size_t negatives = 2;       // grade-0 cross-cluster judgments per query

    void validate() const {
        if (clusters == 0 || paraphrases == 0 || slots == 0)
            throw UsageError("clusters, paraphrases and slots must be positive");
        if (!(vocab_split >= 0.0 && vocab_split <= 1.0)) throw UsageError("vocabulary split must lie in [0, 1]");
        if (noise_words > 0 && noise_vocab == 0) throw UsageError("noise vocabulary must be positive");
    }
};

struct SynthCorpus {
    Corpus corpus;
    SynonymMap synonyms;
    JudgmentSet qrels;
    /// cluster index of each sentence, aligned with corpus.sentences()
    std::vector<std::size_t> cluster_of;
};

namespace detail {

inline std::string pseudo_word(std::uint64_t id, const char* suffix = "") {
    static constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ne", "ru", "ta", "vi", "so", "de", "pa",
                                                 "gu", "fe", "bo", "zi", "ha", "ju", "we", "xo", "ly", "qu"};
    std::string w;
    for (int i = 0; i < 3 || id > 0; ++i) {
        w += kSyllables[id % 20];
        id /= 20;
    }
    return w + suffix;
}

inline std::string padded(std::size_t v, std::size_t max_value) {
    const int width = static_cast<int>(std::to_string(max_value).size());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*zu", width, v);
    return buf;
}

}  // namespace detail

inline SynthCorpus make_synthetic_corpus(const SynthParams& p) {
    p.validate();
    Rng rng(p.seed);
    SynthCorpus out;
    std::vector<std::pair<std::string, std::string>> rows;
    std::vector<std::vector<std::string>> members(p.clusters);

    auto surface = [&](std::size_t c, std::size_t s, std::size_t v) {
        return detail::pseudo_word((c * p.slots + s) * p.paraphrases + v);
    };

    for (std::size_t c = 0; c < p.clusters; ++c) {
        for (std::size_t s = 0; s < p.slots; ++s)
            for (std::size_t v = 1; v < p.paraphrases; ++v) out.synonyms[surface(c, s, v)] = surface(c, s, 0);
        for (std::size_t j = 0; j < p.paraphrases; ++j) {
            std::vector<std::string> words;
            for (std::size_t s = 0; s < p.slots; ++s) {
                const bool own = j > 0 && rng.unit() < p.vocab_split;
                words.push_back(surface(c, s, own ? j : 0));
            }
            for (std::size_t n = 0; n < p.noise_words; ++n)
                words.push_back(detail::pseudo_word(rng.index(p.noise_vocab), "n"));
            rng.shuffle(words);
            std::string text;
            for (std::size_t w = 0; w < words.size(); ++w) {
                if (w) text += ' ';
                text += words[w];
            }
            text[0] = static_cast<char>(text[0] - 'a' + 'A');
            text += '.';
            std::string id = "c" + detail::padded(c, p.clusters - 1) + "p" + detail::padded(j, p.paraphrases - 1);
            members[c].push_back(id);
            out.cluster_of.push_back(c);
            rows.emplace_back(std::move(id), std::move(text));
        }
    }
    out.corpus = Corpus::from_texts(rows);

    for (std::size_t c = 0; c < p.clusters; ++c) {
        for (const auto& q : members[c]) {
            for (const auto& d : members[c])
                if (d != q) out.qrels.add({q, d, 3});
            if (p.clusters < 2) continue;
            for (std::size_t n = 0; n < p.negatives; ++n) {
                std::size_t other = rng.index(p.clusters - 1);
                if (other >= c) ++other;
                const auto& d = members[other][rng.index(p.paraphrases)];
                const auto* judged = out.qrels.for_query(q);
                if (!judged || !judged->contains(d)) out.qrels.add({q, d, 0});
            }
        }
    }
    return out;
}

}  // namespace semrank
