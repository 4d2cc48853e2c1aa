// Copyright 2026 The mics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <string>
#include <unordered_set>
#include <vector>

namespace mics {

struct ScoredPassage {
    std::string id;
    double score = 0.0;

    bool operator==(const ScoredPassage&) const = default;
};

/// Ranking order: score descending, ties by ascending passage id.
inline bool ranks_before(const ScoredPassage& lhs, const ScoredPassage& rhs) {
    if (lhs.score != rhs.score) {
        return lhs.score > rhs.score;
    }
    return lhs.id < rhs.id;
}

/// An ordered list of passages. Freshly retrieved lists are in canonical
/// order; a reranked list keeps its untouched tail with the scores it had in
/// the previous stage, so only `has_unique_ids` is guaranteed in general.
struct RankedList {
    std::vector<ScoredPassage> entries;

    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries.empty(); }

    [[nodiscard]] std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(entries.size());
        for (const auto& e : entries) {
            out.push_back(e.id);
        }
        return out;
    }

    [[nodiscard]] bool has_unique_ids() const {
        std::unordered_set<std::string> seen;
        for (const auto& e : entries) {
            if (!seen.insert(e.id).second) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] bool is_canonical() const {
        return has_unique_ids() &&
               std::is_sorted(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return ranks_before(a, b); });
    }

    bool operator==(const RankedList&) const = default;
};

}  // namespace mics
