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
 * Engine configuration file.
 *
 * One `key = value` per line; `#` starts a comment. Relative paths are
 * resolved against the directory of the config file.
 *
 *   index               index file written by `mics index` (required)
 *   pool                clarifying question pool, `id \t text` per line
 *   mode                default mode: no_mi | mi_all | mi_clf
 *   model               trained usefulness model
 *   annotations         training set used when no model is given
 *   rewrite_endpoint    remote rewrite backend URL
 *   embed_endpoint      remote embedding backend URL
 *   classify_endpoint   remote usefulness backend URL
 *   score_endpoint      remote rerank backend URL (ops score and prefer)
 *   backend_timeout     seconds, default 10
 *   backend_serial      true if remote backends take one request at a time
 *   bm25.k1, bm25.b     0.95, 0.45
 *   rm3.enabled         true
 *   rm3.fb_docs, rm3.fb_terms, rm3.lambda    10, 10, 0.5
 *   rerank.pointwise_depth, rerank.pairwise_depth    1000, 50
 *   seed                seed for training, default 13
 *   folds               cross-validation folds, default 5
 *   stopwords, affirmations, negations, blocklist    word lists
 *   run_id              run tag written to run files, default "mics"
 */
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <string>

#include "mics/clarification.hpp"
#include "mics/error.hpp"
#include "mics/pipeline.hpp"
#include "mics/remote.hpp"
#include "mics/retrieval.hpp"
#include "mics/synthetic_annotations.hpp"
#include "mics/text.hpp"
#include "mics/usefulness.hpp"

namespace mics {

struct EngineConfig {
    std::filesystem::path index;
    std::optional<std::filesystem::path> pool;
    Mode mode = Mode::no_mi;
    std::optional<std::filesystem::path> model;
    std::optional<std::filesystem::path> annotations;

    std::optional<std::string> rewrite_endpoint;
    std::optional<std::string> embed_endpoint;
    std::optional<std::string> classify_endpoint;
    std::optional<std::string> score_endpoint;
    double backend_timeout = 10.0;
    bool backend_serial = false;

    PipelineParams params;
    std::uint64_t seed = 13;
    std::size_t folds = 5;

    std::optional<std::filesystem::path> stopwords;
    std::optional<std::filesystem::path> affirmations;
    std::optional<std::filesystem::path> negations;
    std::optional<std::filesystem::path> blocklist;
    std::string run_id = "mics";

    /// Throws a config error naming the first offending setting.
    void validate() const {
        auto bad = [](const std::string& what) { fail(ErrorCode::config, what); };
        if (!(params.bm25.k1 > 0.0)) bad("bm25.k1 must be > 0");
        if (!(params.bm25.b >= 0.0 && params.bm25.b <= 1.0)) bad("bm25.b must be in [0, 1]");
        if (!(params.rm3.lambda >= 0.0 && params.rm3.lambda <= 1.0)) bad("rm3.lambda must be in [0, 1]");
        if (params.rm3.fb_docs == 0) bad("rm3.fb_docs must be positive");
        if (params.rm3.fb_terms == 0) bad("rm3.fb_terms must be positive");
        if (params.rerank.pointwise_depth == 0) bad("rerank.pointwise_depth must be positive");
        if (params.rerank.pairwise_depth == 0) bad("rerank.pairwise_depth must be positive");
        if (params.rerank.pairwise_depth > params.rerank.pointwise_depth) {
            bad("rerank.pairwise_depth must not exceed rerank.pointwise_depth");
        }
        if (!(backend_timeout > 0.0)) bad("backend_timeout must be > 0");
        if (folds < 2) bad("folds must be at least 2");
        if (run_id.empty() || run_id.find_first_of(" \t") != std::string::npos) bad("run_id must be one non-empty word");
        if (index.empty()) bad("index is required");
        auto exists = [&](const std::filesystem::path& p, const char* key) {
            if (!std::filesystem::exists(p)) {
                fail(ErrorCode::not_found, std::string(key) + ": file not found: " + p.string());
            }
        };
        exists(index, "index");
        for (const auto& [p, key] : {std::pair{&pool, "pool"}, {&model, "model"}, {&annotations, "annotations"},
                                     {&stopwords, "stopwords"}, {&affirmations, "affirmations"},
                                     {&negations, "negations"}, {&blocklist, "blocklist"}}) {
            if (*p) {
                exists(**p, key);
            }
        }
    }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        fail(ErrorCode::config, key + ": not a number: '" + value + "'");
    }
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    fail(ErrorCode::config, key + ": not a boolean: '" + value + "'");
}

}  // namespace detail

/// Parses without validating; `base` anchors relative paths.
inline EngineConfig parse_config(std::istream& in, const std::filesystem::path& base = {}) {
    EngineConfig c;
    auto path = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_absolute() || base.empty() ? p : base / p;
    };
    const auto lines = read_lines(in);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        auto line = lines[n];
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::config, "line " + std::to_string(n + 1) + ": expected key = value");
        }
        const std::string key(trim(std::string_view(line).substr(0, eq)));
        const std::string value(trim(std::string_view(line).substr(eq + 1)));
        if (value.empty()) {
            fail(ErrorCode::config, "line " + std::to_string(n + 1) + ": empty value for " + key);
        }
        using detail::parse_bool;
        using detail::parse_number;
        if (key == "index") c.index = path(value);
        else if (key == "pool") c.pool = path(value);
        else if (key == "mode") c.mode = parse_mode(value);
        else if (key == "model") c.model = path(value);
        else if (key == "annotations") c.annotations = path(value);
        else if (key == "rewrite_endpoint") c.rewrite_endpoint = value;
        else if (key == "embed_endpoint") c.embed_endpoint = value;
        else if (key == "classify_endpoint") c.classify_endpoint = value;
        else if (key == "score_endpoint") c.score_endpoint = value;
        else if (key == "backend_timeout") c.backend_timeout = parse_number<double>(key, value);
        else if (key == "backend_serial") c.backend_serial = parse_bool(key, value);
        else if (key == "bm25.k1") c.params.bm25.k1 = parse_number<double>(key, value);
        else if (key == "bm25.b") c.params.bm25.b = parse_number<double>(key, value);
        else if (key == "rm3.enabled") c.params.rm3_enabled = parse_bool(key, value);
        else if (key == "rm3.fb_docs") c.params.rm3.fb_docs = parse_number<std::size_t>(key, value);
        else if (key == "rm3.fb_terms") c.params.rm3.fb_terms = parse_number<std::size_t>(key, value);
        else if (key == "rm3.lambda") c.params.rm3.lambda = parse_number<double>(key, value);
        else if (key == "rerank.pointwise_depth") c.params.rerank.pointwise_depth = parse_number<std::size_t>(key, value);
        else if (key == "rerank.pairwise_depth") c.params.rerank.pairwise_depth = parse_number<std::size_t>(key, value);
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "folds") c.folds = parse_number<std::size_t>(key, value);
        else if (key == "stopwords") c.stopwords = path(value);
        else if (key == "affirmations") c.affirmations = path(value);
        else if (key == "negations") c.negations = path(value);
        else if (key == "blocklist") c.blocklist = path(value);
        else if (key == "run_id") c.run_id = value;
        else fail(ErrorCode::config, "line " + std::to_string(n + 1) + ": unknown key '" + key + "'");
    }
    return c;
}

inline EngineConfig load_config(const std::filesystem::path& file) {
    auto in = open_input(file.string());
    return parse_config(in, file.parent_path());
}

inline UsefulnessLexicons load_lexicons(const EngineConfig& c) {
    UsefulnessLexicons lex;
    if (c.stopwords) lex.stopwords = Lexicon::load_file(c.stopwords->string());
    if (c.affirmations) lex.affirmations = Lexicon::load_file(c.affirmations->string());
    if (c.negations) lex.negations = Lexicon::load_file(c.negations->string());
    return lex;
}

/// The model named in the config, else one trained on the configured
/// annotations, else one trained on the generated default set.
inline UsefulnessModel load_or_train_model(const EngineConfig& c, const UsefulnessLexicons& lex) {
    if (c.model) {
        auto in = open_input(c.model->string());
        return UsefulnessModel::read(in);
    }
    TrainingOptions options;
    options.folds = c.folds;
    options.seed = c.seed;
    if (c.annotations) {
        auto in = open_input(c.annotations->string());
        return train(read_annotations(in), options, lex).first;
    }
    return train(generate_annotations(), options, lex).first;
}

/// Validates `c` and loads everything it references.
inline Engine build_engine(const EngineConfig& c) {
    c.validate();
    EngineParts parts;
    {
        auto in = open_input(c.index.string());
        parts.index = std::make_shared<const InvertedIndex>(InvertedIndex::read(in));
    }
    if (c.pool) {
        auto in = open_input(c.pool->string());
        parts.pool = load_pool(in);
    }
    if (c.blocklist) {
        auto in = open_input(c.blocklist->string());
        parts.filter.blocklist = FilterRules::load_blocklist(in);
    }
    parts.lexicons = load_lexicons(c);
    parts.params = c.params;
    parts.model = load_or_train_model(c, parts.lexicons);

    const double t = c.backend_timeout;
    const bool serial = c.backend_serial;
    if (c.rewrite_endpoint) parts.rewriter = std::make_shared<remote::RemoteRewriter>(*c.rewrite_endpoint, t, serial);
    if (c.embed_endpoint) parts.similarity = std::make_shared<remote::RemoteEmbeddingScorer>(*c.embed_endpoint, t, serial);
    if (c.classify_endpoint) parts.classifier = std::make_shared<remote::RemoteClassifier>(*c.classify_endpoint, t, serial);
    if (c.score_endpoint) {
        parts.pointwise = std::make_shared<remote::RemotePointwiseScorer>(*c.score_endpoint, t, serial);
        parts.pairwise = std::make_shared<remote::RemotePairwiseScorer>(*c.score_endpoint, t, serial);
    }
    return Engine(std::move(parts));
}

}  // namespace mics
