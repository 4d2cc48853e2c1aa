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
 * Clients for model backends reached over HTTP+JSON.
 *
 * Every request is a POST of one JSON object to the configured endpoint URL;
 * the `op` field selects the operation:
 *
 *   {op:"resolve", query, history:[turn...]}            -> {text}
 *   {op:"expand",  query, question?, answer?}           -> {text}
 *   {op:"embed",   texts:[...]}                         -> {vectors:[[...],...]}
 *   {op:"classify", query, question, answer}            -> {label}
 *   {op:"score",   query, passages:[{id,text},...]}     -> {scores:[...]}
 *   {op:"prefer",  query, pairs:[{a_id,a_text,b_id,b_text},...]} -> {probs:[...]}
 *
 * A turn in `history` is {index, user:{kind,text}, system:{kind,text}}.
 * Connection failures, timeouts, non-200 replies and malformed bodies all
 * surface as backend-unavailable errors so the engine can fall back.
 */
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mics/clarification.hpp"
#include "mics/conversation.hpp"
#include "mics/error.hpp"
#include "mics/reranker.hpp"
#include "mics/rewriter.hpp"
#include "mics/usefulness.hpp"

namespace mics::remote {

using nlohmann::json;

inline json to_json(const Utterance& u) { return json{{"kind", to_string(u.kind())}, {"text", u.text()}}; }

inline json to_json(const ConversationHistory& history) {
    json turns = json::array();
    for (const auto& t : history.turns()) {
        turns.push_back(json{{"index", t.index}, {"user", to_json(t.user)}, {"system", to_json(t.system)}});
    }
    return turns;
}

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;

    /// Splits `http://host:port/some/path`; the path defaults to "/".
    static Endpoint parse(const std::string& url) {
        auto scheme = url.find("://");
        if (scheme == std::string::npos || url.substr(0, scheme) != "http") {
            fail(ErrorCode::config, "backend endpoint must be an http:// URL: '" + url + "'");
        }
        auto slash = url.find('/', scheme + 3);
        if (slash == std::string::npos) {
            return {url, "/"};
        }
        return {url.substr(0, slash), url.substr(slash)};
    }
};

class WireClient {
  public:
    explicit WireClient(std::string url, double timeout_seconds = 10.0)
        : url_(std::move(url)), endpoint_(Endpoint::parse(url_)), timeout_(timeout_seconds) {}

    [[nodiscard]] const std::string& url() const noexcept { return url_; }

    [[nodiscard]] json call(const json& request) const {
        httplib::Client client(endpoint_.base);
        const auto secs = static_cast<time_t>(timeout_);
        const auto usecs = static_cast<time_t>((timeout_ - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        const std::string op = request.value("op", "?");
        auto res = client.Post(endpoint_.path, request.dump(), "application/json");
        if (!res) {
            fail(ErrorCode::backend_unavailable, op + " at " + url_ + ": " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            fail(ErrorCode::backend_unavailable, op + " at " + url_ + ": HTTP " + std::to_string(res->status));
        }
        try {
            auto body = json::parse(res->body);
            if (!body.is_object()) {
                throw std::runtime_error("not an object");
            }
            if (body.contains("error")) {
                fail(ErrorCode::backend_unavailable, op + " at " + url_ + ": " + body["error"].dump());
            }
            return body;
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            fail(ErrorCode::backend_unavailable, op + " at " + url_ + ": malformed response");
        }
    }

    template <typename T>
    [[nodiscard]] static T field(const json& body, const char* name) {
        try {
            return body.at(name).get<T>();
        } catch (const std::exception&) {
            fail(ErrorCode::backend_unavailable, std::string("response lacks a valid '") + name + "' field");
        }
    }

  private:
    std::string url_;
    Endpoint endpoint_;
    double timeout_;
};

class RemoteRewriter final : public RewriteBackend {
  public:
    explicit RemoteRewriter(std::string url, double timeout_seconds = 10.0, bool serial = false)
        : client_(std::move(url), timeout_seconds), serial_(serial) {}

    [[nodiscard]] std::string identity() const override { return "remote-rewrite(" + client_.url() + ")"; }
    [[nodiscard]] bool supports_resolve() const override { return true; }
    [[nodiscard]] bool supports_expand() const override { return true; }
    [[nodiscard]] bool is_serial() const override { return serial_; }

    [[nodiscard]] std::string resolve_query(const std::string& query, const ConversationHistory& history) const override {
        auto body = client_.call(json{{"op", "resolve"}, {"query", query}, {"history", to_json(history)}});
        return non_empty(WireClient::field<std::string>(body, "text"));
    }

    [[nodiscard]] std::string expand_query(const std::string& resolved, const std::optional<std::string>& question,
                                           const std::optional<std::string>& answer) const override {
        json request{{"op", "expand"}, {"query", resolved}};
        if (question) {
            request["question"] = *question;
        }
        if (answer) {
            request["answer"] = *answer;
        }
        return non_empty(WireClient::field<std::string>(client_.call(request), "text"));
    }

  private:
    static std::string non_empty(std::string text) {
        if (trim(text).empty()) {
            fail(ErrorCode::backend_unavailable, "rewrite backend returned empty text");
        }
        return text;
    }

    WireClient client_;
    bool serial_;
};

/// Dot product of unit-normalized embeddings.
class RemoteEmbeddingScorer final : public SimilarityScorer {
  public:
    explicit RemoteEmbeddingScorer(std::string url, double timeout_seconds = 10.0, bool serial = false)
        : client_(std::move(url), timeout_seconds), serial_(serial) {}

    [[nodiscard]] std::string identity() const override { return "remote-embed(" + client_.url() + ")"; }
    [[nodiscard]] bool is_serial() const override { return serial_; }

    [[nodiscard]] std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) const {
        auto body = client_.call(json{{"op", "embed"}, {"texts", texts}});
        auto vectors = WireClient::field<std::vector<std::vector<double>>>(body, "vectors");
        if (vectors.size() != texts.size()) {
            fail(ErrorCode::backend_unavailable, "embed returned " + std::to_string(vectors.size()) + " vectors for " +
                                                     std::to_string(texts.size()) + " texts");
        }
        for (auto& v : vectors) {
            double norm = 0.0;
            for (double x : v) {
                norm += x * x;
            }
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (double& x : v) {
                    x /= norm;
                }
            }
        }
        return vectors;
    }

    [[nodiscard]] double score(const std::string& query, const std::string& candidate) const override {
        const std::string texts[] = {candidate};
        return score_all(query, texts).front();
    }

    [[nodiscard]] std::vector<double> score_all(const std::string& query, std::span<const std::string> candidates) const override {
        std::vector<std::string> texts{query};
        texts.insert(texts.end(), candidates.begin(), candidates.end());
        const auto vectors = embed(texts);
        std::vector<double> out;
        for (std::size_t i = 1; i < vectors.size(); ++i) {
            if (vectors[i].size() != vectors[0].size()) {
                fail(ErrorCode::backend_unavailable, "embed returned vectors of different dimensions");
            }
            double dot = 0.0;
            for (std::size_t j = 0; j < vectors[0].size(); ++j) {
                dot += vectors[0][j] * vectors[i][j];
            }
            out.push_back(dot);
        }
        return out;
    }

  private:
    WireClient client_;
    bool serial_;
};

class RemoteClassifier final : public UsefulnessClassifier {
  public:
    explicit RemoteClassifier(std::string url, double timeout_seconds = 10.0, bool serial = false)
        : client_(std::move(url), timeout_seconds), serial_(serial) {}

    [[nodiscard]] std::string identity() const override { return "remote-classify(" + client_.url() + ")"; }
    [[nodiscard]] bool is_serial() const override { return serial_; }

    [[nodiscard]] UsefulnessLabel classify(const std::string& query, const std::string& question,
                                           const std::string& answer) const override {
        auto body = client_.call(json{{"op", "classify"}, {"query", query}, {"question", question}, {"answer", answer}});
        auto label = label_from_int(WireClient::field<long>(body, "label"));
        if (!label) {
            fail(ErrorCode::backend_unavailable, "classify returned a label outside 0..3");
        }
        return *label;
    }

  private:
    WireClient client_;
    bool serial_;
};

class RemotePointwiseScorer final : public PointwiseScorer {
  public:
    explicit RemotePointwiseScorer(std::string url, double timeout_seconds = 10.0, bool serial = false)
        : client_(std::move(url), timeout_seconds), serial_(serial) {}

    [[nodiscard]] std::string identity() const override { return "remote-score(" + client_.url() + ")"; }
    [[nodiscard]] bool is_serial() const override { return serial_; }

    [[nodiscard]] std::vector<double> score(const std::string& query, std::span<const Passage> passages) const override {
        json items = json::array();
        for (const auto& p : passages) {
            items.push_back(json{{"id", p.id}, {"text", p.text}});
        }
        auto scores = WireClient::field<std::vector<double>>(
            client_.call(json{{"op", "score"}, {"query", query}, {"passages", items}}), "scores");
        if (scores.size() != passages.size()) {
            fail(ErrorCode::backend_unavailable, "score returned the wrong number of scores");
        }
        return scores;
    }

  private:
    WireClient client_;
    bool serial_;
};

class RemotePairwiseScorer final : public PairwiseScorer {
  public:
    explicit RemotePairwiseScorer(std::string url, double timeout_seconds = 10.0, bool serial = false)
        : client_(std::move(url), timeout_seconds), serial_(serial) {}

    [[nodiscard]] std::string identity() const override { return "remote-prefer(" + client_.url() + ")"; }
    [[nodiscard]] bool is_serial() const override { return serial_; }

    [[nodiscard]] std::vector<double> prefer(const std::string& query, std::span<const PassagePair> pairs) const override {
        json items = json::array();
        for (const auto& pair : pairs) {
            items.push_back(json{{"a_id", pair.a.id}, {"a_text", pair.a.text}, {"b_id", pair.b.id}, {"b_text", pair.b.text}});
        }
        auto probs = WireClient::field<std::vector<double>>(
            client_.call(json{{"op", "prefer"}, {"query", query}, {"pairs", items}}), "probs");
        if (probs.size() != pairs.size()) {
            fail(ErrorCode::backend_unavailable, "prefer returned the wrong number of probabilities");
        }
        return probs;
    }

  private:
    WireClient client_;
    bool serial_;
};

}  // namespace mics::remote
