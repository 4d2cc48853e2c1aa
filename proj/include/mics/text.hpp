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
 * Tokenization and the small fixed word lists shared by retrieval, rewriting
 * and usefulness classification.
 */
#pragma once

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mics/error.hpp"

namespace mics {

namespace detail {

// Bytes >= 0x80 are kept inside tokens so UTF-8 sequences are never split.
constexpr bool is_token_byte(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

constexpr char ascii_lower(char c) noexcept {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace detail

/// Lowercases and splits on every maximal run of non-alphanumeric characters.
/// No stemming, no stopword removal.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        if (detail::is_token_byte(static_cast<unsigned char>(ch))) {
            current.push_back(detail::ascii_lower(ch));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

inline std::string_view trim(std::string_view text) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (!text.empty() && is_space(text.front())) {
        text.remove_prefix(1);
    }
    while (!text.empty() && is_space(text.back())) {
        text.remove_suffix(1);
    }
    return text;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            return fields;
        }
        fields.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Splits on runs of spaces/tabs, dropping empty fields.
inline std::vector<std::string> split_whitespace(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    for (char ch : line) {
        if (ch == ' ' || ch == '\t' || ch == '\r') {
            if (!current.empty()) {
                fields.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty()) {
        fields.push_back(std::move(current));
    }
    return fields;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

/// Reads all lines, stripping a trailing CR. A final empty line after the
/// last LF is not reported.
inline std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::not_found, "file not found: " + path);
    }
    return in;
}

/// An immutable set of lowercase words.
class Lexicon {
  public:
    Lexicon() = default;
    Lexicon(std::initializer_list<std::string_view> words) {
        for (auto w : words) {
            words_.emplace(w);
        }
    }
    explicit Lexicon(std::set<std::string> words) : words_(std::move(words)) {}

    [[nodiscard]] bool contains(std::string_view word) const {
        return words_.find(std::string(word)) != words_.end();
    }
    [[nodiscard]] std::size_t size() const noexcept { return words_.size(); }
    [[nodiscard]] const std::set<std::string>& words() const noexcept { return words_; }

    /// One word per line; blank lines and lines starting with '#' are skipped.
    static Lexicon load(std::istream& in) {
        std::set<std::string> words;
        for (const auto& line : read_lines(in)) {
            auto word = trim(line);
            if (word.empty() || word.front() == '#') {
                continue;
            }
            for (auto& token : tokenize(word)) {
                words.insert(std::move(token));
            }
        }
        return Lexicon(std::move(words));
    }

    static Lexicon load_file(const std::string& path) {
        auto in = open_input(path);
        return load(in);
    }

  private:
    std::set<std::string> words_;
};

// 30 words. Kept in the index; excluded from feedback expansion and from the
// rewriting fallbacks.
inline const Lexicon& default_stopwords() {
    static const Lexicon words{
        "a",  "an",   "the",  "of",  "in", "on",    "to",   "for",  "and",  "or",
        "is", "are",  "be",   "do",  "does", "you", "your", "i",    "me",   "my",
        "it", "what", "how",  "about", "tell", "want", "know", "like", "would", "with",
    };
    return words;
}

inline const Lexicon& default_affirmations() {
    static const Lexicon words{"yes", "yeah", "yep", "sure", "correct", "right", "exactly"};
    return words;
}

inline const Lexicon& default_negations() {
    static const Lexicon words{"no", "nope", "not", "nah"};
    return words;
}

}  // namespace mics
