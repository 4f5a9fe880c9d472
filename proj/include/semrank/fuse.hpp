// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The semrank Authors

#pragma once

#include <semrank/common.hpp>

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace semrank {

struct FusionInput {
    std::vector<RankedList> rankings;
    std::vector<std::uint32_t> weights;  // one positive integer per ranking
};

/// Positional fusion over the union D of all candidates:
///   score(d) = sum_r w(r) * (|D| - pos_r(d) + 1) / |D|
/// with 1-based positions; a ranking that lacks d contributes nothing.
/// Output is ordered by score descending, then doc_id ascending.
inline RankedList fuse(const FusionInput& input) {
    if (input.rankings.empty()) throw UsageError("fusion needs at least one ranking");
    if (input.rankings.size() != input.weights.size())
        throw UsageError("fusion needs exactly one weight per ranking");
    for (auto w : input.weights)
        if (w == 0) throw UsageError("fusion weights must be positive integers");
    for (const auto& r : input.rankings)
        if (!has_unique_ids(r)) throw DataError("ranking for query " + r.query_id + " repeats a doc id");

    // Integer numerators keep equal fused scores exactly equal.
    std::map<std::string, std::uint64_t> numerator;
    for (const auto& r : input.rankings)
        for (const auto& e : r.entries) numerator.emplace(e.doc_id, 0);
    const std::uint64_t n = numerator.size();
    for (std::size_t ri = 0; ri < input.rankings.size(); ++ri) {
        const auto& entries = input.rankings[ri].entries;
        for (std::size_t p = 0; p < entries.size(); ++p)
            numerator[entries[p].doc_id] += (n - p) * input.weights[ri];
    }

    std::vector<std::pair<std::uint64_t, const std::string*>> order;
    order.reserve(numerator.size());
    for (const auto& [id, num] : numerator) order.emplace_back(num, &id);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    RankedList out{input.rankings.front().query_id, {}, 0};
    out.entries.reserve(order.size());
    for (const auto& [num, id] : order)
        out.entries.push_back({*id, static_cast<double>(num) / static_cast<double>(n)});
    return out;
}

/// Weight presets: "fusion.paper-weighted" = (2, 1) for (reranked
/// fine-tuned, BM25); "fusion.paper-uniform" = (1, 1). Anything else is
/// parsed as a comma-separated list of positive integers.
inline std::vector<std::uint32_t> parse_fusion_weights(std::string_view spec) {
    if (spec == "fusion.paper-weighted" || spec == "paper-weighted") return {2, 1};
    if (spec == "fusion.paper-uniform" || spec == "paper-uniform") return {1, 1};
    std::vector<std::uint32_t> out;
    for (auto part : split_char(spec, ',')) {
        std::uint32_t w = 0;
        if (!parse_number(part, w) || w == 0)
            throw UsageError("fusion weights must be positive integers: '" + std::string(spec) + "'");
        out.push_back(w);
    }
    return out;
}

}  // namespace semrank
