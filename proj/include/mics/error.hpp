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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mics {

enum class ErrorCode {
    invalid_utterance,
    parse,
    duplicate_id,
    not_found,
    invalid_arguments,
    backend_unavailable,
    stratification,
    contract,
    state,
    empty_pool,
    validation,
    input,
    config,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_utterance: return "invalid-utterance";
    case ErrorCode::parse: return "parse";
    case ErrorCode::duplicate_id: return "duplicate-id";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::invalid_arguments: return "invalid-arguments";
    case ErrorCode::backend_unavailable: return "backend-unavailable";
    case ErrorCode::stratification: return "stratification";
    case ErrorCode::contract: return "contract";
    case ErrorCode::state: return "state";
    case ErrorCode::empty_pool: return "empty-pool";
    case ErrorCode::validation: return "validation";
    case ErrorCode::input: return "input";
    case ErrorCode::config: return "config";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above, so
/// callers (CLI, HTTP service) can map it to an exit status or status code.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

/// Parse failure in a line-oriented file; `line` is 1-based.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& message)
        : Error(ErrorCode::parse, "line " + std::to_string(line) + ": " + message), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace mics
