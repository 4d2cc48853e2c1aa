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


// In-process stand-in for the model sidecar: speaks the JSON wire protocol
// with simple deterministic answers and can be told to misbehave.

#pragma once

#include <atomic>
#include <chrono>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace fake {

enum class Behavior { ok, http_error, malformed, error_field, wrong_count, slow };

class Sidecar {
  public:
    Sidecar() {
        server_.Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) { serve(req, res); });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~Sidecar() {
        server_.stop();
        thread_.join();
    }
    Sidecar(const Sidecar&) = delete;
    Sidecar& operator=(const Sidecar&) = delete;

    [[nodiscard]] std::string url(const std::string& path = "/v1") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

    void set(Behavior b) { behavior_ = b; }
    void set_label(int label) { label_ = label; }

    [[nodiscard]] std::vector<nlohmann::json> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }
    [[nodiscard]] std::size_t count(const std::string& op) const {
        std::lock_guard lock(mutex_);
        std::size_t n = 0;
        for (const auto& r : requests_) {
            n += r.value("op", "") == op ? 1 : 0;
        }
        return n;
    }

  private:
    void serve(const httplib::Request& req, httplib::Response& res) {
        using nlohmann::json;
        const auto request = json::parse(req.body);
        {
            std::lock_guard lock(mutex_);
            requests_.push_back(request);
        }
        switch (behavior_.load()) {
        case Behavior::http_error: res.status = 500; res.set_content("boom", "text/plain"); return;
        case Behavior::malformed: res.set_content("{not json", "application/json"); return;
        case Behavior::error_field: res.set_content(R"({"error":"model not loaded"})", "application/json"); return;
        case Behavior::slow: std::this_thread::sleep_for(std::chrono::milliseconds(1500)); break;
        default: break;
        }
        const bool short_reply = behavior_ == Behavior::wrong_count;
        const auto op = request.at("op").get<std::string>();
        json out;
        if (op == "resolve") {
            out["text"] = request.at("query").get<std::string>() + " sidecar" + std::to_string(request.at("history").size());
        } else if (op == "expand") {
            std::string text = request.at("query").get<std::string>();
            for (const char* k : {"question", "answer"}) {
                if (request.contains(k)) {
                    text += " " + request.at(k).get<std::string>();
                }
            }
            out["text"] = text;
        } else if (op == "embed") {
            json vectors = json::array();
            for (const auto& t : request.at("texts")) {
                const auto s = t.get<std::string>();
                vectors.push_back({static_cast<double>(s.size()), s.find('?') == std::string::npos ? 0.0 : 3.0, 1.0});
            }
            if (short_reply && !vectors.empty()) {
                vectors.erase(vectors.end() - 1);
            }
            out["vectors"] = vectors;
        } else if (op == "classify") {
            out["label"] = label_.load();
        } else if (op == "score") {
            json scores = json::array();
            for (const auto& p : request.at("passages")) {
                scores.push_back(static_cast<double>(p.at("text").get<std::string>().size()));
            }
            if (short_reply && !scores.empty()) {
                scores.erase(scores.end() - 1);
            }
            out["scores"] = scores;
        } else if (op == "prefer") {
            json probs = json::array();
            for (const auto& p : request.at("pairs")) {
                const auto a = p.at("a_text").get<std::string>().size();
                const auto b = p.at("b_text").get<std::string>().size();
                probs.push_back(a == b ? 0.5 : (a > b ? 0.8 : 0.2));
            }
            out["probs"] = probs;
        } else {
            res.status = 400;
            out["error"] = "unknown op";
        }
        res.set_content(out.dump(), "application/json");
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<Behavior> behavior_{Behavior::ok};
    std::atomic<int> label_{2};
    mutable std::mutex mutex_;
    std::vector<nlohmann::json> requests_;
};

}  // namespace fake
