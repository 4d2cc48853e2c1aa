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
 * Query rewriting. Two functions live behind one backend contract:
 *
 *  - resolve: makes the current query self-contained given the history;
 *  - expand:  folds a clarifying question and/or the user's answer into the
 *             resolved query.
 *
 * `FallbackRewriter` is the deterministic built-in backend; a remote backend
 * speaking the JSON wire protocol lives in remote.hpp.
 */
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mics/conversation.hpp"
#include "mics/error.hpp"
#include "mics/text.hpp"

namespace mics {

class RewriteBackend {
  public:
    virtual ~RewriteBackend() = default;

    [[nodiscard]] virtual std::string identity() const = 0;
    [[nodiscard]] virtual bool supports_resolve() const = 0;
    [[nodiscard]] virtual bool supports_expand() const = 0;
    /// Serial backends get their calls serialized by the engine.
    [[nodiscard]] virtual bool is_serial() const { return false; }

    [[nodiscard]] virtual std::string resolve_query(const std::string& query, const ConversationHistory& history) const = 0;
    [[nodiscard]] virtual std::string expand_query(const std::string& resolved, const std::optional<std::string>& question,
                                                   const std::optional<std::string>& answer) const = 0;
};

/// u'_q. The empty-history identity holds for every backend and is enforced
/// here rather than trusted to the backend.
inline std::string resolve(const RewriteBackend& backend, const std::string& query, const ConversationHistory& history) {
    if (trim(query).empty()) {
        fail(ErrorCode::invalid_arguments, "query to resolve is empty");
    }
    if (history.empty()) {
        return query;
    }
    if (!backend.supports_resolve()) {
        fail(ErrorCode::backend_unavailable, backend.identity() + " does not support resolve");
    }
    return backend.resolve_query(query, history);
}

/// u''_q from u'_q and at least one piece of clarification context.
inline std::string expand(const RewriteBackend& backend, const std::string& resolved, const std::optional<std::string>& question,
                          const std::optional<std::string>& answer) {
    if (!question && !answer) {
        fail(ErrorCode::invalid_arguments, "expand needs a question, an answer, or both");
    }
    if (trim(resolved).empty()) {
        fail(ErrorCode::invalid_arguments, "resolved query is empty");
    }
    if (!backend.supports_expand()) {
        fail(ErrorCode::backend_unavailable, backend.identity() + " does not support expand");
    }
    return backend.expand_query(resolved, question, answer);
}

/// Deterministic lexical rewriting.
///
/// resolve appends up to `max_history_terms` non-stopword tokens of the most
/// recent prior query that the current query lacks, in their original order.
/// expand appends the non-stopword tokens of the question, then of the
/// answer, that are not yet present. The input is always kept verbatim as
/// the prefix of the output.
class FallbackRewriter final : public RewriteBackend {
  public:
    explicit FallbackRewriter(Lexicon stopwords = default_stopwords(), std::size_t max_history_terms = 5)
        : stopwords_(std::move(stopwords)), max_history_terms_(max_history_terms) {}

    [[nodiscard]] std::string identity() const override { return "fallback-lexical"; }
    [[nodiscard]] bool supports_resolve() const override { return true; }
    [[nodiscard]] bool supports_expand() const override { return true; }

    [[nodiscard]] std::string resolve_query(const std::string& query, const ConversationHistory& history) const override {
        const auto* previous = history.last_query();
        if (previous == nullptr) {
            return query;
        }
        auto present = token_set(query);
        std::vector<std::string> added;
        for (auto& token : tokenize(previous->text())) {
            if (added.size() >= max_history_terms_) {
                break;
            }
            if (stopwords_.contains(token) || !present.insert(token).second) {
                continue;
            }
            added.push_back(std::move(token));
        }
        return append(query, added);
    }

    [[nodiscard]] std::string expand_query(const std::string& resolved, const std::optional<std::string>& question,
                                           const std::optional<std::string>& answer) const override {
        auto present = token_set(resolved);
        std::vector<std::string> added;
        for (const auto* context : {&question, &answer}) {
            if (!context->has_value()) {
                continue;
            }
            for (auto& token : tokenize(**context)) {
                if (stopwords_.contains(token) || !present.insert(token).second) {
                    continue;
                }
                added.push_back(std::move(token));
            }
        }
        return append(resolved, added);
    }

  private:
    static std::set<std::string> token_set(const std::string& text) {
        auto tokens = tokenize(text);
        return {tokens.begin(), tokens.end()};
    }

    static std::string append(const std::string& base, const std::vector<std::string>& added) {
        if (added.empty()) {
            return base;
        }
        return base + " " + join(added, " ");
    }

    Lexicon stopwords_;
    std::size_t max_history_terms_;
};

}  // namespace mics
