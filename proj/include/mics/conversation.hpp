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
 * Dialogue data model: utterances, turns, histories and per-turn query
 * states, plus the tab-separated topic file format.
 *
 * All types are immutable values; "mutating" operations return new values.
 * Text is stored verbatim, normalization is the tokenizer's job.
 */
#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mics/error.hpp"
#include "mics/ranked_list.hpp"
#include "mics/text.hpp"

namespace mics {

enum class Role { user, system };

enum class UtteranceKind { query, answer, clarifying_question, passage_list };

/// The four usefulness classes of a (question, answer) exchange.
enum class UsefulnessLabel : std::uint8_t {
    neither = 0,
    question = 1,
    answer = 2,
    both = 3,
};

inline constexpr std::string_view to_string(UtteranceKind kind) {
    switch (kind) {
    case UtteranceKind::query: return "query";
    case UtteranceKind::answer: return "answer";
    case UtteranceKind::clarifying_question: return "clarifying_question";
    case UtteranceKind::passage_list: return "passage_list";
    }
    return "query";
}

inline std::optional<UtteranceKind> parse_utterance_kind(std::string_view text) {
    if (text == "query") return UtteranceKind::query;
    if (text == "answer") return UtteranceKind::answer;
    if (text == "clarifying_question") return UtteranceKind::clarifying_question;
    if (text == "passage_list") return UtteranceKind::passage_list;
    return std::nullopt;
}

inline constexpr Role role_of(UtteranceKind kind) {
    return (kind == UtteranceKind::query || kind == UtteranceKind::answer) ? Role::user : Role::system;
}

inline constexpr std::string_view to_string(UsefulnessLabel label) {
    switch (label) {
    case UsefulnessLabel::neither: return "none";
    case UsefulnessLabel::question: return "question";
    case UsefulnessLabel::answer: return "answer";
    case UsefulnessLabel::both: return "both";
    }
    return "none";
}

inline constexpr int to_int(UsefulnessLabel label) { return static_cast<int>(label); }

inline std::optional<UsefulnessLabel> label_from_int(long value) {
    if (value < 0 || value > 3) {
        return std::nullopt;
    }
    return static_cast<UsefulnessLabel>(value);
}

class Utterance {
  public:
    Utterance(Role role, UtteranceKind kind, std::string text, std::optional<RankedList> passages = std::nullopt)
        : role_(role), kind_(kind), text_(std::move(text)), passages_(std::move(passages)) {
        if (role_of(kind_) != role_) {
            fail(ErrorCode::invalid_utterance,
                 std::string(to_string(kind_)) + " utterance cannot have role " + (role_ == Role::user ? "user" : "system"));
        }
        if (kind_ != UtteranceKind::passage_list && trim(text_).empty()) {
            fail(ErrorCode::invalid_utterance, std::string(to_string(kind_)) + " utterance text is empty");
        }
        if ((kind_ == UtteranceKind::passage_list) != passages_.has_value()) {
            fail(ErrorCode::invalid_utterance, "passages must be present exactly for passage_list utterances");
        }
    }

    static Utterance query(std::string text) { return {Role::user, UtteranceKind::query, std::move(text)}; }
    static Utterance answer(std::string text) { return {Role::user, UtteranceKind::answer, std::move(text)}; }
    static Utterance clarifying_question(std::string text) {
        return {Role::system, UtteranceKind::clarifying_question, std::move(text)};
    }
    static Utterance passage_list(RankedList passages, std::string text = {}) {
        return {Role::system, UtteranceKind::passage_list, std::move(text), std::move(passages)};
    }

    [[nodiscard]] Role role() const noexcept { return role_; }
    [[nodiscard]] UtteranceKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::string& text() const noexcept { return text_; }
    [[nodiscard]] const std::optional<RankedList>& passages() const noexcept { return passages_; }

    bool operator==(const Utterance&) const = default;

  private:
    Role role_;
    UtteranceKind kind_;
    std::string text_;
    std::optional<RankedList> passages_;
};

struct Turn {
    int index = 0;
    Utterance user;
    Utterance system;

    bool operator==(const Turn&) const = default;
};

/// H = [(u1, s1), ..., (u_{t-1}, s_{t-1})] for one topic. Turn indices are
/// 1..n; a query follows a passage list and an answer follows a clarifying
/// question.
class ConversationHistory {
  public:
    ConversationHistory() = default;
    explicit ConversationHistory(std::string topic_id, std::vector<Turn> turns = {})
        : topic_id_(std::move(topic_id)), turns_(std::move(turns)) {
        for (std::size_t i = 0; i < turns_.size(); ++i) {
            check_turn(i == 0 ? nullptr : &turns_[i - 1], turns_[i], static_cast<int>(i) + 1);
        }
    }

    [[nodiscard]] const std::string& topic_id() const noexcept { return topic_id_; }
    [[nodiscard]] const std::vector<Turn>& turns() const noexcept { return turns_; }
    [[nodiscard]] std::size_t size() const noexcept { return turns_.size(); }
    [[nodiscard]] bool empty() const noexcept { return turns_.empty(); }

    /// Most recent user utterance of kind query, if any.
    [[nodiscard]] const Utterance* last_query() const {
        for (auto it = turns_.rbegin(); it != turns_.rend(); ++it) {
            if (it->user.kind() == UtteranceKind::query) {
                return &it->user;
            }
        }
        return nullptr;
    }

    /// Validates the turn that would follow `previous` (null for the first).
    static void check_turn(const Turn* previous, const Turn& turn, int expected_index) {
        if (turn.index != expected_index) {
            fail(ErrorCode::invalid_utterance,
                 "turn index " + std::to_string(turn.index) + " where " + std::to_string(expected_index) + " was expected");
        }
        if (turn.user.role() != Role::user || turn.system.role() != Role::system) {
            fail(ErrorCode::invalid_utterance, "turn must pair a user utterance with a system utterance");
        }
        if (turn.user.kind() == UtteranceKind::answer &&
            (previous == nullptr || previous->system.kind() != UtteranceKind::clarifying_question)) {
            fail(ErrorCode::invalid_utterance, "an answer must follow a clarifying question");
        }
        if (turn.user.kind() == UtteranceKind::query && previous != nullptr &&
            previous->system.kind() != UtteranceKind::passage_list) {
            fail(ErrorCode::invalid_utterance, "a query must follow a passage list");
        }
    }

    bool operator==(const ConversationHistory&) const = default;

  private:
    std::string topic_id_;
    std::vector<Turn> turns_;
};

/// Returns a new history with (user, system) appended as the next turn.
inline ConversationHistory append_turn(const ConversationHistory& history, Utterance user, Utterance system) {
    if (user.role() != Role::user) {
        fail(ErrorCode::invalid_utterance, "first utterance of a turn must have role user");
    }
    if (system.role() != Role::system) {
        fail(ErrorCode::invalid_utterance, "second utterance of a turn must have role system");
    }
    auto turns = history.turns();
    turns.push_back(Turn{static_cast<int>(turns.size()) + 1, std::move(user), std::move(system)});
    return ConversationHistory(history.topic_id(), std::move(turns));
}

/// u_q, its history-resolved form u'_q and the clarification-expanded u''_q.
/// `label` is the usefulness decision that produced `expanded`; expanded
/// equals resolved when the label is absent or `neither`.
struct QueryState {
    std::string raw;
    std::string resolved;
    std::string expanded;
    std::optional<UsefulnessLabel> label;

    bool operator==(const QueryState&) const = default;
};

// ---------------------------------------------------------------------------
// Topic file: one turn per line,
//   topic_id \t turn_index \t user_kind \t user_text \t system_kind \t system_text [\t answer]
// The optional seventh column carries the scripted answer to a clarifying
// question for batch runs.

struct ScriptedTopic {
    ConversationHistory history;
    /// One slot per turn.
    std::vector<std::optional<std::string>> answers;

    bool operator==(const ScriptedTopic&) const = default;
};

inline std::vector<ScriptedTopic> parse_topic_file(std::istream& in) {
    std::vector<ScriptedTopic> topics;
    std::unordered_set<std::string> closed;
    std::string current_id;
    std::vector<Turn> turns;
    std::vector<std::optional<std::string>> answers;

    auto flush = [&] {
        if (!current_id.empty()) {
            topics.push_back(ScriptedTopic{ConversationHistory(current_id, std::move(turns)), std::move(answers)});
            closed.insert(current_id);
            turns.clear();
            answers.clear();
        }
    };

    auto lines = read_lines(in);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        auto fields = split(lines[n], '\t');
        if (fields.size() != 6 && fields.size() != 7) {
            throw ParseError(line_no, "expected 6 or 7 tab-separated fields, got " + std::to_string(fields.size()));
        }
        const auto& topic_id = fields[0];
        if (topic_id.empty()) {
            throw ParseError(line_no, "empty topic id");
        }
        if (topic_id != current_id) {
            if (closed.count(topic_id) != 0) {
                fail(ErrorCode::duplicate_id, "topic '" + topic_id + "' appears twice (line " + std::to_string(line_no) + ")");
            }
            flush();
            current_id = topic_id;
        }

        int index = 0;
        try {
            std::size_t used = 0;
            index = std::stoi(fields[1], &used);
            if (used != fields[1].size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw ParseError(line_no, "turn index '" + fields[1] + "' is not an integer");
        }
        if (index != static_cast<int>(turns.size()) + 1) {
            throw ParseError(line_no, "turn index " + std::to_string(index) + " is not contiguous (expected " +
                                          std::to_string(turns.size() + 1) + ")");
        }

        auto user_kind = parse_utterance_kind(fields[2]);
        auto system_kind = parse_utterance_kind(fields[4]);
        if (!user_kind || role_of(*user_kind) != Role::user) {
            throw ParseError(line_no, "bad user kind '" + fields[2] + "'");
        }
        if (!system_kind || role_of(*system_kind) != Role::system) {
            throw ParseError(line_no, "bad system kind '" + fields[4] + "'");
        }
        try {
            Utterance user(Role::user, *user_kind, fields[3]);
            Utterance system = *system_kind == UtteranceKind::passage_list
                                   ? Utterance::passage_list(RankedList{}, fields[5])
                                   : Utterance(Role::system, *system_kind, fields[5]);
            Turn turn{index, std::move(user), std::move(system)};
            ConversationHistory::check_turn(turns.empty() ? nullptr : &turns.back(), turn, index);
            turns.push_back(std::move(turn));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(line_no, e.what());
        }
        if (fields.size() == 7) {
            if (trim(fields[6]).empty()) {
                throw ParseError(line_no, "answer column present but empty");
            }
            answers.emplace_back(fields[6]);
        } else {
            answers.emplace_back(std::nullopt);
        }
    }
    flush();
    return topics;
}

inline std::vector<ConversationHistory> parse_topics(std::istream& in) {
    std::vector<ConversationHistory> out;
    for (auto& topic : parse_topic_file(in)) {
        out.push_back(std::move(topic.history));
    }
    return out;
}

namespace detail {

inline void check_field(const std::string& text) {
    if (text.find_first_of("\t\n\r") != std::string::npos) {
        fail(ErrorCode::validation, "text contains a tab or line break and cannot be written to a topic file");
    }
}

}  // namespace detail

inline void write_topic_file(std::ostream& out, const std::vector<ScriptedTopic>& topics) {
    for (const auto& topic : topics) {
        const auto& turns = topic.history.turns();
        for (std::size_t i = 0; i < turns.size(); ++i) {
            const auto& t = turns[i];
            detail::check_field(topic.history.topic_id());
            detail::check_field(t.user.text());
            detail::check_field(t.system.text());
            out << topic.history.topic_id() << '\t' << t.index << '\t' << to_string(t.user.kind()) << '\t'
                << t.user.text() << '\t' << to_string(t.system.kind()) << '\t' << t.system.text();
            if (i < topic.answers.size() && topic.answers[i]) {
                detail::check_field(*topic.answers[i]);
                out << '\t' << *topic.answers[i];
            }
            out << '\n';
        }
    }
}

inline std::string serialize_topics(const std::vector<ScriptedTopic>& topics) {
    std::ostringstream out;
    write_topic_file(out, topics);
    return out.str();
}

inline std::string serialize_topics(const std::vector<ConversationHistory>& histories) {
    std::vector<ScriptedTopic> topics;
    for (const auto& h : histories) {
        topics.push_back(ScriptedTopic{h, {}});
    }
    return serialize_topics(topics);
}

}  // namespace mics
