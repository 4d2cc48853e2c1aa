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
 * Clarifying question pool: loading, filtering out unusable questions, and
 * picking the question most similar to the resolved query.
 */
#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mics/error.hpp"
#include "mics/text.hpp"

namespace mics {

struct ClarifyingQuestion {
    std::string id;
    std::string text;

    bool operator==(const ClarifyingQuestion&) const = default;
};

class QuestionPool {
  public:
    QuestionPool() = default;
    explicit QuestionPool(std::vector<ClarifyingQuestion> questions, bool filtered = false)
        : questions_(std::move(questions)), filtered_(filtered) {
        std::unordered_set<std::string> ids;
        for (const auto& q : questions_) {
            if (q.id.empty()) {
                fail(ErrorCode::invalid_arguments, "question id is empty");
            }
            if (trim(q.text).empty()) {
                fail(ErrorCode::invalid_arguments, "question '" + q.id + "' has empty text");
            }
            if (!ids.insert(q.id).second) {
                fail(ErrorCode::duplicate_id, "duplicate question id '" + q.id + "'");
            }
        }
    }

    [[nodiscard]] const std::vector<ClarifyingQuestion>& questions() const noexcept { return questions_; }
    [[nodiscard]] bool filtered() const noexcept { return filtered_; }
    [[nodiscard]] std::size_t size() const noexcept { return questions_.size(); }
    [[nodiscard]] bool empty() const noexcept { return questions_.empty(); }

    bool operator==(const QuestionPool&) const = default;

  private:
    std::vector<ClarifyingQuestion> questions_;
    bool filtered_ = false;
};

/// Pool file: `question_id \t question_text` per line.
inline QuestionPool load_pool(std::istream& in) {
    std::vector<ClarifyingQuestion> questions;
    std::unordered_set<std::string> ids;
    auto lines = read_lines(in);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        auto fields = split(lines[n], '\t');
        if (fields.size() != 2 || fields[0].empty() || trim(fields[1]).empty()) {
            throw ParseError(n + 1, "expected 'question_id<TAB>question_text'");
        }
        if (!ids.insert(fields[0]).second) {
            fail(ErrorCode::duplicate_id, "duplicate question id '" + fields[0] + "' on line " + std::to_string(n + 1));
        }
        questions.push_back(ClarifyingQuestion{std::move(fields[0]), std::move(fields[1])});
    }
    return QuestionPool(std::move(questions));
}

/// Canonical form used for blocklist and duplicate matching.
inline std::string normalize_question(std::string_view text) { return join(tokenize(text), " "); }

/// Generic template questions that carry no topical signal.
inline std::set<std::string> default_question_blocklist() {
    std::set<std::string> out;
    for (auto text : {"can you tell me more?", "can you tell me more about it?", "what do you want to know?",
                      "what are you looking for?", "could you be more specific?", "can you clarify your question?",
                      "do you have any other questions?", "what do you mean?", "is this what you are looking for?",
                      "would you like to know more?"}) {
        out.insert(normalize_question(text));
    }
    return out;
}

struct FilterRules {
    std::size_t min_tokens = 3;
    bool require_question_mark = true;
    std::set<std::string> blocklist = default_question_blocklist();  // normalized texts
    bool drop_duplicates = true;

    static std::set<std::string> load_blocklist(std::istream& in) {
        std::set<std::string> out;
        for (const auto& line : read_lines(in)) {
            auto text = trim(line);
            if (!text.empty() && text.front() != '#') {
                out.insert(normalize_question(text));
            }
        }
        return out;
    }
};

/// Keeps the questions passing every rule: enough tokens, ends with '?',
/// not a blocklisted template, first occurrence of its exact text.
inline QuestionPool filter_pool(const QuestionPool& pool, const FilterRules& rules = {}) {
    std::vector<ClarifyingQuestion> kept;
    std::unordered_set<std::string> seen;
    for (const auto& q : pool.questions()) {
        auto text = trim(q.text);
        if (tokenize(text).size() < rules.min_tokens) {
            continue;
        }
        if (rules.require_question_mark && (text.empty() || text.back() != '?')) {
            continue;
        }
        if (rules.blocklist.count(normalize_question(text)) != 0) {
            continue;
        }
        if (rules.drop_duplicates && !seen.insert(std::string(text)).second) {
            continue;
        }
        kept.push_back(q);
    }
    return QuestionPool(std::move(kept), true);
}

class SimilarityScorer {
  public:
    virtual ~SimilarityScorer() = default;

    [[nodiscard]] virtual std::string identity() const = 0;
    [[nodiscard]] virtual bool is_serial() const { return false; }
    [[nodiscard]] virtual double score(const std::string& query, const std::string& candidate) const = 0;

    /// Scores one query against many candidates; backends override this to
    /// batch remote calls.
    [[nodiscard]] virtual std::vector<double> score_all(const std::string& query, std::span<const std::string> candidates) const {
        std::vector<double> out;
        out.reserve(candidates.size());
        for (const auto& c : candidates) {
            out.push_back(score(query, c));
        }
        return out;
    }
};

/// Cosine of raw-tf x smoothed-idf vectors, idf = ln((1+N)/(1+df)) + 1 over
/// a reference collection (the question pool).
class TfidfScorer final : public SimilarityScorer {
  public:
    TfidfScorer() = default;
    explicit TfidfScorer(const QuestionPool& pool) {
        std::vector<std::string> texts;
        for (const auto& q : pool.questions()) {
            texts.push_back(q.text);
        }
        fit(texts);
    }
    explicit TfidfScorer(std::span<const std::string> collection) { fit(collection); }

    [[nodiscard]] std::string identity() const override { return "tfidf-cosine"; }

    [[nodiscard]] double idf(const std::string& term) const {
        auto it = df_.find(term);
        const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
        return std::log((1.0 + docs_) / (1.0 + df)) + 1.0;
    }

    [[nodiscard]] double score(const std::string& query, const std::string& candidate) const override {
        const auto a = vectorize(query);
        const auto b = vectorize(candidate);
        double dot = 0.0;
        double na = 0.0;
        double nb = 0.0;
        for (const auto& [term, w] : a) {
            na += w * w;
            auto it = b.find(term);
            if (it != b.end()) {
                dot += w * it->second;
            }
        }
        for (const auto& [term, w] : b) {
            nb += w * w;
        }
        if (na == 0.0 || nb == 0.0) {
            return 0.0;
        }
        return dot / (std::sqrt(na) * std::sqrt(nb));
    }

  private:
    void fit(std::span<const std::string> texts) {
        docs_ = static_cast<double>(texts.size());
        for (const auto& text : texts) {
            auto tokens = tokenize(text);
            std::set<std::string> unique(tokens.begin(), tokens.end());
            for (const auto& t : unique) {
                ++df_[t];
            }
        }
    }

    [[nodiscard]] std::map<std::string, double> vectorize(const std::string& text) const {
        std::map<std::string, double> tf;
        for (auto& t : tokenize(text)) {
            tf[std::move(t)] += 1.0;
        }
        for (auto& [term, w] : tf) {
            w *= idf(term);
        }
        return tf;
    }

    double docs_ = 0.0;
    std::map<std::string, std::size_t> df_;
};

/// argmax over the filtered pool; equal scores go to the smaller question id.
inline ClarifyingQuestion select_question(const std::string& resolved, const QuestionPool& pool, const SimilarityScorer& scorer) {
    if (!pool.filtered()) {
        fail(ErrorCode::contract, "question selection requires a filtered pool");
    }
    if (pool.empty()) {
        fail(ErrorCode::empty_pool, "the filtered question pool is empty");
    }
    std::vector<std::string> texts;
    texts.reserve(pool.size());
    for (const auto& q : pool.questions()) {
        texts.push_back(q.text);
    }
    const auto scores = scorer.score_all(resolved, texts);
    if (scores.size() != texts.size()) {
        fail(ErrorCode::backend_unavailable, scorer.identity() + " returned " + std::to_string(scores.size()) +
                                                 " scores for " + std::to_string(texts.size()) + " questions");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        const auto& q = pool.questions()[i];
        if (scores[i] > scores[best] || (scores[i] == scores[best] && q.id < pool.questions()[best].id)) {
            best = i;
        }
    }
    return pool.questions()[best];
}

}  // namespace mics
