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
 * HTTP+JSON session API.
 *
 *   POST /session               {mode?}   -> {session_id, mode, state}
 *   POST /session/{id}/query    {text}    -> {clarifying_question, state}          (MI modes)
 *                                         -> {label, expanded_query, passages, state} (NO_MI)
 *   POST /session/{id}/answer   {text}    -> {label, expanded_query, passages, state}
 *   GET  /session/{id}                    -> {session_id, mode, state, history, pending}
 *   GET  /healthz                         -> {status, sessions}
 *
 * Errors are {error, code} with 400 (bad request), 404 (unknown session),
 * 409 (out-of-order request; the session is untouched) or 503 (backend).
 */
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "mics/error.hpp"
#include "mics/pipeline.hpp"
#include "mics/remote.hpp"

namespace mics::service {

using nlohmann::json;

struct Response {
    int status = 200;
    json body;
};

inline int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::state: return 409;
    case ErrorCode::not_found: return 404;
    case ErrorCode::backend_unavailable: return 503;
    case ErrorCode::invalid_arguments:
    case ErrorCode::invalid_utterance:
    case ErrorCode::parse:
    case ErrorCode::input:
    case ErrorCode::validation: return 400;
    default: return 500;
    }
}

inline Response error_response(int status, const std::string& code, const std::string& message) {
    return {status, json{{"error", message}, {"code", code}}};
}

// ---------------------------------------------------------------------------
// JSON views of session state, also used for snapshots.

inline json ranking_to_json(const RankedList& ranking) {
    json out = json::array();
    for (const auto& e : ranking.entries) {
        out.push_back(json{{"id", e.id}, {"score", e.score}});
    }
    return out;
}

inline RankedList ranking_from_json(const json& j) {
    RankedList out;
    for (const auto& e : j) {
        out.entries.push_back(ScoredPassage{e.at("id").get<std::string>(), e.at("score").get<double>()});
    }
    return out;
}

inline json utterance_to_json(const Utterance& u) {
    auto j = remote::to_json(u);
    if (u.passages()) {
        j["passages"] = ranking_to_json(*u.passages());
    }
    return j;
}

inline Utterance utterance_from_json(const json& j) {
    const auto kind = parse_utterance_kind(j.at("kind").get<std::string>());
    if (!kind) {
        fail(ErrorCode::parse, "unknown utterance kind " + j.at("kind").dump());
    }
    auto text = j.at("text").get<std::string>();
    switch (*kind) {
    case UtteranceKind::query: return Utterance::query(std::move(text));
    case UtteranceKind::answer: return Utterance::answer(std::move(text));
    case UtteranceKind::clarifying_question: return Utterance::clarifying_question(std::move(text));
    case UtteranceKind::passage_list: return Utterance::passage_list(ranking_from_json(j.at("passages")), std::move(text));
    }
    fail(ErrorCode::parse, "unknown utterance kind");
}

inline json history_to_json(const ConversationHistory& history) {
    json turns = json::array();
    for (const auto& t : history.turns()) {
        turns.push_back(json{{"index", t.index}, {"user", utterance_to_json(t.user)}, {"system", utterance_to_json(t.system)}});
    }
    return turns;
}

inline json label_to_json(const std::optional<UsefulnessLabel>& label) {
    return label ? json(to_int(*label)) : json(nullptr);
}

inline std::optional<UsefulnessLabel> label_from_json(const json& j) {
    if (j.is_null()) {
        return std::nullopt;
    }
    auto label = label_from_int(j.get<long>());
    if (!label) {
        fail(ErrorCode::parse, "label outside 0..3");
    }
    return label;
}

inline json query_state_to_json(const QueryState& qs) {
    return json{{"raw", qs.raw}, {"resolved", qs.resolved}, {"expanded", qs.expanded}, {"label", label_to_json(qs.label)}};
}

inline QueryState query_state_from_json(const json& j) {
    return QueryState{j.at("raw").get<std::string>(), j.at("resolved").get<std::string>(),
                      j.at("expanded").get<std::string>(), label_from_json(j.at("label"))};
}

inline json session_to_json(const Session& s) {
    json pending = nullptr;
    if (s.pending()) {
        const auto& p = *s.pending();
        pending = json{{"query", query_state_to_json(p.query)},
                       {"question", {{"id", p.question.id}, {"text", p.question.text}}},
                       {"backends", p.trace.used}};
    }
    return json{{"session_id", s.id()},
                {"mode", to_string(s.mode())},
                {"state", to_string(s.state())},
                {"history", history_to_json(s.history())},
                {"pending", pending}};
}

inline Session session_from_json(const json& j) {
    const auto id = j.at("session_id").get<std::string>();
    std::vector<Turn> turns;
    for (const auto& t : j.at("history")) {
        turns.push_back(Turn{t.at("index").get<int>(), utterance_from_json(t.at("user")), utterance_from_json(t.at("system"))});
    }
    std::optional<PendingClarification> pending;
    if (!j.at("pending").is_null()) {
        const auto& p = j.at("pending");
        pending = PendingClarification{
            query_state_from_json(p.at("query")),
            ClarifyingQuestion{p.at("question").at("id").get<std::string>(), p.at("question").at("text").get<std::string>()},
            BackendTrace{p.at("backends").get<std::map<std::string, std::string>>()}};
    }
    const auto state = j.at("state").get<std::string>() == "awaiting_answer" ? SessionState::awaiting_answer
                                                                              : SessionState::awaiting_query;
    return Session(id, parse_mode(j.at("mode").get<std::string>()), ConversationHistory(id, std::move(turns)), state,
                   std::move(pending));
}

// ---------------------------------------------------------------------------

struct ServiceOptions {
    Mode default_mode = Mode::no_mi;
    /// Passages returned per turn.
    std::size_t result_limit = 10;
    std::size_t snippet_chars = 200;
};

/// Session store plus request handling, independent of the HTTP server so
/// it can be driven directly.
class SessionService {
  public:
    SessionService(std::shared_ptr<const Engine> engine, ServiceOptions options = {})
        : engine_(std::move(engine)), options_(options) {}

    [[nodiscard]] Response handle(const std::string& method, const std::string& path, const std::string& body) {
        try {
            return route(method, path, body);
        } catch (const Error& e) {
            return error_response(http_status(e.code()), std::string(to_string(e.code())), e.what());
        } catch (const json::exception& e) {
            return error_response(400, "invalid-arguments", std::string("malformed request: ") + e.what());
        } catch (const std::exception& e) {
            return error_response(500, "internal", e.what());
        }
    }

    [[nodiscard]] std::size_t session_count() const {
        std::lock_guard lock(store_mutex_);
        return sessions_.size();
    }

    void mount(httplib::Server& server) {
        auto forward = [this](const httplib::Request& req, httplib::Response& res) {
            auto r = handle(req.method, req.path, req.body);
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        server.Post(R"(/session(/[^/]+/(query|answer))?)", forward);
        server.Get(R"(/session/[^/]+)", forward);
        server.Get("/healthz", forward);
    }

    /// Writes all sessions to `path` as JSON.
    void save(const std::filesystem::path& path) const {
        json sessions = json::array();
        std::uint64_t next = 0;
        {
            std::lock_guard lock(store_mutex_);
            next = next_id_;
            for (const auto& [id, entry] : sessions_) {
                std::lock_guard session_lock(entry->mutex);
                sessions.push_back(session_to_json(entry->session));
            }
        }
        std::ofstream out(path);
        if (!out) {
            fail(ErrorCode::input, "cannot write snapshot " + path.string());
        }
        out << json{{"next_id", next}, {"sessions", sessions}}.dump(2) << '\n';
    }

    void load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) {
            fail(ErrorCode::not_found, "file not found: " + path.string());
        }
        json snapshot;
        try {
            snapshot = json::parse(in);
        } catch (const json::exception& e) {
            fail(ErrorCode::parse, "snapshot " + path.string() + ": " + e.what());
        }
        std::map<std::string, std::shared_ptr<Entry>> loaded;
        for (const auto& s : snapshot.at("sessions")) {
            auto session = session_from_json(s);
            auto id = session.id();
            loaded.emplace(id, std::make_shared<Entry>(std::move(session)));
        }
        std::lock_guard lock(store_mutex_);
        sessions_ = std::move(loaded);
        next_id_ = snapshot.at("next_id").get<std::uint64_t>();
    }

  private:
    struct Entry {
        explicit Entry(Session s) : session(std::move(s)) {}
        std::mutex mutex;
        Session session;
    };

    Response route(const std::string& method, const std::string& path, const std::string& body) {
        if (path == "/healthz" && method == "GET") {
            return {200, json{{"status", "ok"}, {"sessions", session_count()}}};
        }
        const std::string prefix = "/session";
        if (path.rfind(prefix, 0) != 0) {
            return error_response(404, "not-found", "no route for " + path);
        }
        const auto rest = path.substr(prefix.size());
        if (rest.empty() || rest == "/") {
            if (method != "POST") {
                return error_response(405, "method", "use POST /session");
            }
            return create(parse_body(body, false));
        }
        const auto slash = rest.find('/', 1);
        const auto id = rest.substr(1, slash == std::string::npos ? std::string::npos : slash - 1);
        const auto action = slash == std::string::npos ? std::string() : rest.substr(slash + 1);
        auto entry = find(id);
        if (!entry) {
            return error_response(404, "not-found", "unknown session '" + id + "'");
        }
        if (action.empty()) {
            if (method != "GET") {
                return error_response(405, "method", "use GET /session/{id}");
            }
            std::lock_guard lock(entry->mutex);
            return {200, session_to_json(entry->session)};
        }
        if (method != "POST" || (action != "query" && action != "answer")) {
            return error_response(404, "not-found", "no route for " + method + " " + path);
        }
        const auto request = parse_body(body, true);
        const auto text = request.at("text").get<std::string>();
        std::lock_guard lock(entry->mutex);
        if (action == "query") {
            auto reply = entry->session.submit_query(*engine_, text);
            if (const auto* question = std::get_if<ClarifyingQuestion>(&reply)) {
                return {200, json{{"clarifying_question", question->text},
                                  {"question_id", question->id},
                                  {"state", to_string(entry->session.state())}}};
            }
            return {200, turn_json(std::get<TurnResult>(reply), entry->session)};
        }
        return {200, turn_json(entry->session.submit_answer(*engine_, text), entry->session)};
    }

    Response create(const json& request) {
        auto mode = options_.default_mode;
        if (request.contains("mode")) {
            mode = parse_mode(request.at("mode").get<std::string>());
        }
        std::lock_guard lock(store_mutex_);
        auto id = "s" + std::to_string(++next_id_);
        auto entry = std::make_shared<Entry>(Session(id, mode));
        sessions_.emplace(id, entry);
        return {200, json{{"session_id", id}, {"mode", to_string(mode)}, {"state", to_string(entry->session.state())}}};
    }

    [[nodiscard]] std::shared_ptr<Entry> find(const std::string& id) const {
        std::lock_guard lock(store_mutex_);
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    static json parse_body(const std::string& body, bool require_text) {
        json request = body.empty() ? json::object() : json::parse(body);
        if (!request.is_object()) {
            fail(ErrorCode::invalid_arguments, "request body must be a JSON object");
        }
        if (require_text && !(request.contains("text") && request["text"].is_string())) {
            fail(ErrorCode::invalid_arguments, "request needs a string 'text' field");
        }
        return request;
    }

    [[nodiscard]] json turn_json(const TurnResult& r, const Session& session) const {
        json passages = json::array();
        const auto n = std::min(options_.result_limit, r.ranking.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto& e = r.ranking.entries[i];
            std::string snippet;
            if (auto doc = engine_->index().find(e.id)) {
                snippet = engine_->index().text(*doc).substr(0, options_.snippet_chars);
            }
            passages.push_back(json{{"id", e.id}, {"score", e.score}, {"snippet", snippet}});
        }
        json out{{"label", label_to_json(r.label)},
                 {"resolved_query", r.query_state.resolved},
                 {"expanded_query", r.query_state.expanded},
                 {"passages", passages},
                 {"backends", r.trace.used},
                 {"state", to_string(session.state())}};
        if (r.label) {
            out["label_name"] = to_string(*r.label);
        }
        if (r.question_asked) {
            out["clarifying_question"] = r.question_asked->text;
        }
        return out;
    }

    std::shared_ptr<const Engine> engine_;
    ServiceOptions options_;
    mutable std::mutex store_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t next_id_ = 0;
};

}  // namespace mics::service
