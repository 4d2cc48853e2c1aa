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

/**
 * Rerank cascade: a pointwise pass over the head of the first-stage list,
 * then a pairwise pass over a shorter head. Entries below each depth keep
 * their previous order and scores.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mics/error.hpp"
#include "mics/ranked_list.hpp"
#include "mics/retrieval.hpp"
#include "mics/text.hpp"

namespace mics {

struct RerankConfig {
    std::size_t pointwise_depth = 1000;
    std::size_t pairwise_depth = 50;

    void validate() const {
        if (pairwise_depth > pointwise_depth) {
            fail(ErrorCode::invalid_arguments, "pairwise depth must not exceed pointwise depth");
        }
    }
};

/// Passage id -> text, or null when unknown.
using PassageLookup = std::function<const std::string*(const std::string&)>;

inline PassageLookup lookup_in(const InvertedIndex& index) {
    return [&index](const std::string& id) -> const std::string* {
        auto doc = index.find(id);
        return doc ? &index.text(*doc) : nullptr;
    };
}

inline PassageLookup lookup_in(const std::map<std::string, std::string>& corpus) {
    return [&corpus](const std::string& id) -> const std::string* {
        auto it = corpus.find(id);
        return it == corpus.end() ? nullptr : &it->second;
    };
}

class PointwiseScorer {
  public:
    virtual ~PointwiseScorer() = default;

    [[nodiscard]] virtual std::string identity() const = 0;
    [[nodiscard]] virtual bool is_serial() const { return false; }
    /// One finite score per passage, in input order.
    [[nodiscard]] virtual std::vector<double> score(const std::string& query, std::span<const Passage> passages) const = 0;
};

struct PassagePair {
    Passage a;
    Passage b;
};

class PairwiseScorer {
  public:
    virtual ~PairwiseScorer() = default;

    [[nodiscard]] virtual std::string identity() const = 0;
    [[nodiscard]] virtual bool is_serial() const { return false; }
    /// Probability in [0, 1] that `a` is more relevant than `b`, per pair.
    [[nodiscard]] virtual std::vector<double> prefer(const std::string& query, std::span<const PassagePair> pairs) const = 0;
};

/// Cosine between tf-idf vectors of query and passage; idf is the BM25 idf
/// of the index.
class LexicalPointwiseScorer final : public PointwiseScorer {
  public:
    explicit LexicalPointwiseScorer(std::shared_ptr<const InvertedIndex> index) : index_(std::move(index)) {}

    [[nodiscard]] std::string identity() const override { return "lexical-tfidf"; }

    [[nodiscard]] std::vector<double> score(const std::string& query, std::span<const Passage> passages) const override {
        const auto q = vectorize(query);
        double qn = 0.0;
        for (const auto& [term, w] : q) {
            qn += w * w;
        }
        std::vector<double> out;
        out.reserve(passages.size());
        for (const auto& p : passages) {
            const auto d = vectorize(p.text);
            double dot = 0.0;
            double dn = 0.0;
            for (const auto& [term, w] : d) {
                dn += w * w;
                auto it = q.find(term);
                if (it != q.end()) {
                    dot += w * it->second;
                }
            }
            out.push_back(qn == 0.0 || dn == 0.0 ? 0.0 : dot / (std::sqrt(qn) * std::sqrt(dn)));
        }
        return out;
    }

  private:
    [[nodiscard]] std::map<std::string, double> vectorize(const std::string& text) const {
        std::map<std::string, double> v;
        for (auto& t : tokenize(text)) {
            v[std::move(t)] += 1.0;
        }
        for (auto& [term, w] : v) {
            w *= bm25_idf(index_->doc_count(), index_->doc_freq(term));
        }
        return v;
    }

    std::shared_ptr<const InvertedIndex> index_;
};

/// Logistic function with sigmoid(-x) == 1 - sigmoid(x) exactly.
inline double symmetric_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    return 1.0 - 1.0 / (1.0 + std::exp(x));
}

/// p(a, b) = sigmoid(score(a) - score(b)) over a pointwise scorer.
class LogisticPairwiseScorer final : public PairwiseScorer {
  public:
    explicit LogisticPairwiseScorer(std::shared_ptr<const PointwiseScorer> base) : base_(std::move(base)) {}

    [[nodiscard]] std::string identity() const override { return "logistic(" + base_->identity() + ")"; }

    [[nodiscard]] std::vector<double> prefer(const std::string& query, std::span<const PassagePair> pairs) const override {
        std::vector<Passage> unique;
        std::unordered_map<std::string, std::size_t> slot;
        for (const auto& pair : pairs) {
            for (const auto* p : {&pair.a, &pair.b}) {
                if (slot.emplace(p->id, unique.size()).second) {
                    unique.push_back(*p);
                }
            }
        }
        const auto scores = base_->score(query, unique);
        std::vector<double> out;
        out.reserve(pairs.size());
        for (const auto& pair : pairs) {
            out.push_back(symmetric_sigmoid(scores[slot.at(pair.a.id)] - scores[slot.at(pair.b.id)]));
        }
        return out;
    }

  private:
    std::shared_ptr<const PointwiseScorer> base_;
};

namespace detail {

inline std::vector<Passage> head_passages(const RankedList& candidates, std::size_t head, const PassageLookup& corpus) {
    std::vector<Passage> out;
    out.reserve(head);
    for (std::size_t i = 0; i < head; ++i) {
        const auto& id = candidates.entries[i].id;
        const auto* text = corpus(id);
        if (text == nullptr) {
            fail(ErrorCode::not_found, "passage '" + id + "' is not in the corpus");
        }
        out.push_back(Passage{id, *text});
    }
    return out;
}

inline RankedList with_new_head(const RankedList& candidates, std::vector<ScoredPassage> head) {
    std::sort(head.begin(), head.end(), ranks_before);
    RankedList out;
    out.entries = std::move(head);
    out.entries.insert(out.entries.end(), candidates.entries.begin() + static_cast<std::ptrdiff_t>(out.entries.size()),
                       candidates.entries.end());
    return out;
}

}  // namespace detail

/// Rescores and re-sorts the first `depth` entries with `scorer`.
inline RankedList rerank_pointwise(const std::string& query, const RankedList& candidates, const PassageLookup& corpus,
                                   const PointwiseScorer& scorer, std::size_t depth) {
    const auto head = std::min(depth, candidates.size());
    if (head == 0) {
        return candidates;
    }
    const auto passages = detail::head_passages(candidates, head, corpus);
    const auto scores = scorer.score(query, passages);
    if (scores.size() != head) {
        fail(ErrorCode::backend_unavailable, scorer.identity() + " returned the wrong number of scores");
    }
    std::vector<ScoredPassage> rescored;
    rescored.reserve(head);
    for (std::size_t i = 0; i < head; ++i) {
        if (!std::isfinite(scores[i])) {
            fail(ErrorCode::backend_unavailable, scorer.identity() + " returned a non-finite score");
        }
        rescored.push_back(ScoredPassage{passages[i].id, scores[i]});
    }
    return detail::with_new_head(candidates, std::move(rescored));
}

/// Re-sorts the first `depth` entries by s(i) = sum over j != i of p(i, j).
inline RankedList rerank_pairwise(const std::string& query, const RankedList& candidates, const PassageLookup& corpus,
                                  const PairwiseScorer& scorer, std::size_t depth) {
    const auto head = std::min(depth, candidates.size());
    if (head < 2) {
        if (head == 1) {
            detail::head_passages(candidates, 1, corpus);
        }
        return candidates;
    }
    const auto passages = detail::head_passages(candidates, head, corpus);
    std::vector<PassagePair> pairs;
    pairs.reserve(head * (head - 1));
    for (std::size_t i = 0; i < head; ++i) {
        for (std::size_t j = 0; j < head; ++j) {
            if (i != j) {
                pairs.push_back(PassagePair{passages[i], passages[j]});
            }
        }
    }
    const auto probs = scorer.prefer(query, pairs);
    if (probs.size() != pairs.size()) {
        fail(ErrorCode::backend_unavailable, scorer.identity() + " returned the wrong number of preferences");
    }
    std::vector<double> totals(head, 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < head; ++i) {
        for (std::size_t j = 0; j < head; ++j) {
            if (i == j) {
                continue;
            }
            const double p = probs[k++];
            if (!(p >= 0.0 && p <= 1.0)) {
                fail(ErrorCode::backend_unavailable, scorer.identity() + " returned a preference outside [0, 1]");
            }
            totals[i] += p;
        }
    }
    std::vector<ScoredPassage> rescored;
    rescored.reserve(head);
    for (std::size_t i = 0; i < head; ++i) {
        rescored.push_back(ScoredPassage{passages[i].id, totals[i]});
    }
    return detail::with_new_head(candidates, std::move(rescored));
}

}  // namespace mics
