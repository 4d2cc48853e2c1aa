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
 * End-to-end conversational turns.
 *
 * A turn starts with a user query, which is resolved against the history.
 * In NO_MI mode the resolved query is retrieved directly. In the two
 * mixed-initiative modes the session asks the most similar clarifying
 * question first and waits for the answer; MI_ALL then always expands the
 * query with question and answer, MI_CLF lets the usefulness classifier
 * decide. Retrieval is BM25 (+RM3) followed by pointwise and pairwise
 * reranking.
 */
#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mics/clarification.hpp"
#include "mics/conversation.hpp"
#include "mics/error.hpp"
#include "mics/evaluation.hpp"
#include "mics/reranker.hpp"
#include "mics/retrieval.hpp"
#include "mics/rewriter.hpp"
#include "mics/usefulness.hpp"

namespace mics {

enum class Mode { no_mi, mi_all, mi_clf };

inline constexpr std::string_view to_string(Mode mode) {
    switch (mode) {
    case Mode::no_mi: return "NO_MI";
    case Mode::mi_all: return "MI_ALL";
    case Mode::mi_clf: return "MI_CLF";
    }
    return "NO_MI";
}

/// Accepts NO_MI / no_mi style names.
inline Mode parse_mode(std::string_view text) {
    std::string s;
    for (char c : text) {
        s.push_back(c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
    }
    if (s == "NO_MI") return Mode::no_mi;
    if (s == "MI_ALL") return Mode::mi_all;
    if (s == "MI_CLF") return Mode::mi_clf;
    fail(ErrorCode::invalid_arguments, "unknown mode '" + std::string(text) + "' (expected no_mi, mi_all or mi_clf)");
}

/// Which backend served each role of a turn, e.g. "rewrite" -> "fallback-lexical".
struct BackendTrace {
    std::map<std::string, std::string> used;

    [[nodiscard]] std::string render() const {
        std::string out;
        for (const auto& [role, id] : used) {
            if (!out.empty()) {
                out += ';';
            }
            out += role + '=' + id;
        }
        return out;
    }

    bool operator==(const BackendTrace&) const = default;
};

/// A configured backend with its built-in fallback. When the primary
/// reports itself unavailable the fallback answers and the trace says so.
template <typename Backend>
class BackendSlot {
  public:
    BackendSlot() = default;
    BackendSlot(std::shared_ptr<const Backend> fallback, std::shared_ptr<const Backend> primary = nullptr)
        : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

    [[nodiscard]] bool configured() const noexcept { return primary_ != nullptr || fallback_ != nullptr; }
    [[nodiscard]] const Backend* primary() const noexcept { return primary_.get(); }
    [[nodiscard]] const Backend* fallback() const noexcept { return fallback_.get(); }

    template <typename Fn>
    auto call(std::string_view role, BackendTrace& trace, Fn&& fn) const {
        if (primary_ != nullptr) {
            try {
                auto result = invoke(*primary_, primary_mutex_, fn);
                trace.used[std::string(role)] = primary_->identity();
                return result;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::backend_unavailable || fallback_ == nullptr) {
                    throw;
                }
                auto result = invoke(*fallback_, fallback_mutex_, fn);
                trace.used[std::string(role)] = fallback_->identity() + "(degraded from " + primary_->identity() + ")";
                return result;
            }
        }
        if (fallback_ == nullptr) {
            fail(ErrorCode::contract, "no backend configured for " + std::string(role));
        }
        auto result = invoke(*fallback_, fallback_mutex_, fn);
        trace.used[std::string(role)] = fallback_->identity();
        return result;
    }

  private:
    template <typename Fn>
    static auto invoke(const Backend& backend, std::mutex& mutex, Fn& fn) {
        if (backend.is_serial()) {
            std::lock_guard lock(mutex);
            return fn(backend);
        }
        return fn(backend);
    }

    std::shared_ptr<const Backend> primary_;
    std::shared_ptr<const Backend> fallback_;
    mutable std::mutex primary_mutex_;
    mutable std::mutex fallback_mutex_;
};

struct PipelineParams {
    Bm25Params bm25;
    Rm3Params rm3;
    /// RM3 runs on the post-dispatch query u''_q.
    bool rm3_enabled = true;
    RerankConfig rerank;
    /// Passages kept in the history's passage_list utterances.
    std::size_t history_passages = 10;
};

struct EngineParts {
    std::shared_ptr<const InvertedIndex> index;
    QuestionPool pool;  // filtered by the engine if it is not already
    FilterRules filter;
    UsefulnessLexicons lexicons;
    PipelineParams params;

    std::shared_ptr<const RewriteBackend> rewriter;
    std::shared_ptr<const SimilarityScorer> similarity;
    std::shared_ptr<const UsefulnessClassifier> classifier;
    std::shared_ptr<const PointwiseScorer> pointwise;
    std::shared_ptr<const PairwiseScorer> pairwise;

    /// Built-in classifier; MI_CLF needs either this or `classifier`.
    std::optional<UsefulnessModel> model;
};

/// Shared, read-only state of a deployment. Safe to use from many sessions
/// at once.
class Engine {
  public:
    explicit Engine(EngineParts parts)
        : index_(std::move(parts.index)),
          pool_(parts.pool.filtered() ? std::move(parts.pool) : filter_pool(parts.pool, parts.filter)),
          stopwords_(parts.lexicons.stopwords),
          params_(parts.params) {
        if (index_ == nullptr) {
            fail(ErrorCode::config, "engine needs an index");
        }
        params_.rerank.validate();
        auto lexical = std::make_shared<const LexicalPointwiseScorer>(index_);
        rewriter_ = std::make_unique<BackendSlot<RewriteBackend>>(std::make_shared<const FallbackRewriter>(stopwords_),
                                                                  std::move(parts.rewriter));
        similarity_ = std::make_unique<BackendSlot<SimilarityScorer>>(std::make_shared<const TfidfScorer>(pool_),
                                                                      std::move(parts.similarity));
        std::shared_ptr<const UsefulnessClassifier> builtin;
        if (parts.model) {
            builtin = std::make_shared<const LinearUsefulnessClassifier>(std::move(*parts.model), std::move(parts.lexicons));
        }
        classifier_ = std::make_unique<BackendSlot<UsefulnessClassifier>>(std::move(builtin), std::move(parts.classifier));
        pointwise_ = std::make_unique<BackendSlot<PointwiseScorer>>(lexical, std::move(parts.pointwise));
        pairwise_ = std::make_unique<BackendSlot<PairwiseScorer>>(std::make_shared<const LogisticPairwiseScorer>(lexical),
                                                                  std::move(parts.pairwise));
    }

    [[nodiscard]] const InvertedIndex& index() const noexcept { return *index_; }
    [[nodiscard]] const QuestionPool& pool() const noexcept { return pool_; }
    [[nodiscard]] const PipelineParams& params() const noexcept { return params_; }
    [[nodiscard]] bool can_classify() const noexcept { return classifier_->configured(); }

    [[nodiscard]] std::string resolve(const std::string& query, const ConversationHistory& history, BackendTrace& trace) const {
        return rewriter_->call("rewrite", trace, [&](const RewriteBackend& b) { return mics::resolve(b, query, history); });
    }

    [[nodiscard]] ClarifyingQuestion select(const std::string& resolved, BackendTrace& trace) const {
        return similarity_->call("similarity", trace,
                                 [&](const SimilarityScorer& s) { return select_question(resolved, pool_, s); });
    }

    [[nodiscard]] std::string expand_all(const std::string& resolved, const std::string& question, const std::string& answer,
                                         BackendTrace& trace) const {
        return rewriter_->call("rewrite", trace,
                               [&](const RewriteBackend& b) { return expand(b, resolved, question, answer); });
    }

    [[nodiscard]] UsefulnessLabel classify(const std::string& resolved, const std::string& question, const std::string& answer,
                                           BackendTrace& trace) const {
        return classifier_->call("classify", trace,
                                 [&](const UsefulnessClassifier& c) { return c.classify(resolved, question, answer); });
    }

    [[nodiscard]] std::string dispatch(UsefulnessLabel label, const std::string& resolved, const std::string& question,
                                       const std::string& answer, BackendTrace& trace) const {
        if (label == UsefulnessLabel::neither) {
            return dispatch_expansion(label, resolved, question, answer, FallbackRewriter(stopwords_));
        }
        return rewriter_->call("rewrite", trace, [&](const RewriteBackend& b) {
            return dispatch_expansion(label, resolved, question, answer, b);
        });
    }

    /// First-stage BM25 (+RM3) then the rerank cascade, all on `text`.
    [[nodiscard]] RankedList retrieve(const std::string& text, BackendTrace& trace) const {
        auto query = WeightedQuery::from_text(text);
        if (params_.rm3_enabled) {
            query = rm3_expand(*index_, query, params_.rm3, params_.bm25, stopwords_);
            trace.used["first_stage"] = "bm25+rm3";
        } else {
            trace.used["first_stage"] = "bm25";
        }
        auto first = search(*index_, query, params_.rerank.pointwise_depth, params_.bm25);
        const auto corpus = lookup_in(*index_);
        auto pointwise = pointwise_->call("pointwise", trace, [&](const PointwiseScorer& s) {
            return rerank_pointwise(text, first, corpus, s, params_.rerank.pointwise_depth);
        });
        return pairwise_->call("pairwise", trace, [&](const PairwiseScorer& s) {
            return rerank_pairwise(text, pointwise, corpus, s, params_.rerank.pairwise_depth);
        });
    }

  private:
    std::shared_ptr<const InvertedIndex> index_;
    QuestionPool pool_;
    Lexicon stopwords_;
    PipelineParams params_;
    // Slots hold mutexes, so they live behind pointers to keep Engine movable.
    std::unique_ptr<BackendSlot<RewriteBackend>> rewriter_;
    std::unique_ptr<BackendSlot<SimilarityScorer>> similarity_;
    std::unique_ptr<BackendSlot<UsefulnessClassifier>> classifier_;
    std::unique_ptr<BackendSlot<PointwiseScorer>> pointwise_;
    std::unique_ptr<BackendSlot<PairwiseScorer>> pairwise_;
};

struct TurnResult {
    QueryState query_state;
    std::optional<ClarifyingQuestion> question_asked;
    std::optional<UsefulnessLabel> label;
    RankedList ranking;
    BackendTrace trace;
};

enum class SessionState { awaiting_query, awaiting_answer };

inline constexpr std::string_view to_string(SessionState state) {
    return state == SessionState::awaiting_query ? "awaiting_query" : "awaiting_answer";
}

struct PendingClarification {
    QueryState query;
    ClarifyingQuestion question;
    BackendTrace trace;
};

/// One conversation. Operations must be serialized by the caller; a failed
/// operation leaves the session unchanged.
///
/// A NO_MI cycle appends one turn (query, passages) to the history; a
/// mixed-initiative cycle appends two, (query, clarifying question) and
/// (answer, passages), once the answer has been processed.
class Session {
  public:
    Session(std::string id, Mode mode) : id_(std::move(id)), mode_(mode), history_(id_) {}
    Session(std::string id, Mode mode, ConversationHistory history, SessionState state,
            std::optional<PendingClarification> pending)
        : id_(std::move(id)), mode_(mode), history_(std::move(history)), state_(state), pending_(std::move(pending)) {
        if ((state_ == SessionState::awaiting_answer) != pending_.has_value() ||
            (mode_ == Mode::no_mi && state_ == SessionState::awaiting_answer)) {
            fail(ErrorCode::state, "inconsistent session state");
        }
    }

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] Mode mode() const noexcept { return mode_; }
    [[nodiscard]] SessionState state() const noexcept { return state_; }
    [[nodiscard]] const ConversationHistory& history() const noexcept { return history_; }
    [[nodiscard]] const std::optional<PendingClarification>& pending() const noexcept { return pending_; }

    /// NO_MI returns the ranked passages; the MI modes return the clarifying
    /// question to show the user.
    std::variant<ClarifyingQuestion, TurnResult> submit_query(const Engine& engine, const std::string& query) {
        if (state_ != SessionState::awaiting_query) {
            fail(ErrorCode::state, "session " + id_ + " is waiting for an answer, not a query");
        }
        if (trim(query).empty()) {
            fail(ErrorCode::invalid_arguments, "query is empty");
        }
        BackendTrace trace;
        QueryState qs;
        qs.raw = query;
        qs.resolved = engine.resolve(query, history_, trace);

        if (mode_ == Mode::no_mi) {
            qs.expanded = qs.resolved;
            TurnResult result{qs, std::nullopt, std::nullopt, engine.retrieve(qs.expanded, trace), trace};
            history_ = append_turn(history_, Utterance::query(query), Utterance::passage_list(truncated(engine, result.ranking)));
            return result;
        }

        auto question = engine.select(qs.resolved, trace);
        pending_ = PendingClarification{std::move(qs), question, std::move(trace)};
        state_ = SessionState::awaiting_answer;
        return question;
    }

    TurnResult submit_answer(const Engine& engine, const std::string& answer) {
        if (state_ != SessionState::awaiting_answer || !pending_) {
            fail(ErrorCode::state, "session " + id_ + " is not waiting for an answer");
        }
        if (trim(answer).empty()) {
            fail(ErrorCode::invalid_arguments, "answer is empty");
        }
        auto pending = *pending_;
        auto& qs = pending.query;
        auto& trace = pending.trace;
        std::optional<UsefulnessLabel> label;
        if (mode_ == Mode::mi_all) {
            qs.expanded = engine.expand_all(qs.resolved, pending.question.text, answer, trace);
            qs.label = UsefulnessLabel::both;
        } else {
            label = engine.classify(qs.resolved, pending.question.text, answer, trace);
            qs.expanded = engine.dispatch(*label, qs.resolved, pending.question.text, answer, trace);
            qs.label = label;
        }
        TurnResult result{qs, pending.question, label, engine.retrieve(qs.expanded, trace), trace};

        auto history = append_turn(history_, Utterance::query(qs.raw), Utterance::clarifying_question(pending.question.text));
        history_ = append_turn(history, Utterance::answer(answer), Utterance::passage_list(truncated(engine, result.ranking)));
        pending_.reset();
        state_ = SessionState::awaiting_query;
        return result;
    }

  private:
    static RankedList truncated(const Engine& engine, const RankedList& ranking) {
        RankedList out;
        const auto n = std::min(ranking.size(), engine.params().history_passages);
        out.entries.assign(ranking.entries.begin(), ranking.entries.begin() + static_cast<std::ptrdiff_t>(n));
        return out;
    }

    std::string id_;
    Mode mode_;
    ConversationHistory history_;
    SessionState state_ = SessionState::awaiting_query;
    std::optional<PendingClarification> pending_;
};

// ---------------------------------------------------------------------------
// Batch runs.

struct TurnMetadata {
    std::string topic_id;
    int turn = 0;
    Mode mode = Mode::no_mi;
    std::optional<UsefulnessLabel> label;
    std::string backend_ids;

    bool operator==(const TurnMetadata&) const = default;
};

struct BatchRun {
    std::vector<eval::RunRecord> records;
    std::vector<TurnMetadata> metadata;
    /// Full per-turn results, keyed by topic_turn_id.
    std::map<std::string, TurnResult> turns;
};

inline std::string topic_turn_id(const std::string& topic_id, int turn) { return topic_id + "_" + std::to_string(turn); }

/// Replays every topic in a fresh session. Turns must be user queries; the
/// mixed-initiative modes answer the clarifying question with the turn's
/// scripted answer.
inline BatchRun run_batch(const Engine& engine, const std::vector<ScriptedTopic>& topics, Mode mode,
                          const std::string& run_id = "mics") {
    BatchRun run;
    for (const auto& topic : topics) {
        const auto& turns = topic.history.turns();
        for (std::size_t i = 0; i < turns.size(); ++i) {
            const auto where = "topic " + topic.history.topic_id() + " turn " + std::to_string(turns[i].index);
            if (turns[i].user.kind() != UtteranceKind::query) {
                fail(ErrorCode::input, where + ": batch turns must be user queries");
            }
            if (mode != Mode::no_mi && (i >= topic.answers.size() || !topic.answers[i])) {
                fail(ErrorCode::input, where + ": missing scripted answer for mode " + std::string(to_string(mode)));
            }
        }
        Session session(topic.history.topic_id(), mode);
        for (std::size_t i = 0; i < turns.size(); ++i) {
            auto reply = session.submit_query(engine, turns[i].user.text());
            TurnResult result = mode == Mode::no_mi ? std::get<TurnResult>(std::move(reply))
                                                    : session.submit_answer(engine, *topic.answers[i]);
            const auto id = topic_turn_id(topic.history.topic_id(), turns[i].index);
            auto rows = eval::to_run_records(id, result.ranking, run_id);
            run.records.insert(run.records.end(), rows.begin(), rows.end());
            run.metadata.push_back(TurnMetadata{topic.history.topic_id(), turns[i].index, mode, result.label, result.trace.render()});
            run.turns.emplace(id, std::move(result));
        }
    }
    return run;
}

/// `topic_id \t turn \t mode \t label \t backend_ids`; label is "-" when
/// no classifier ran.
inline void write_metadata(std::ostream& out, const std::vector<TurnMetadata>& rows) {
    for (const auto& m : rows) {
        out << m.topic_id << '\t' << m.turn << '\t' << to_string(m.mode) << '\t'
            << (m.label ? std::to_string(to_int(*m.label)) : std::string("-")) << '\t' << m.backend_ids << '\n';
    }
}

}  // namespace mics
