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
 * First-stage retrieval: an in-memory inverted index, BM25 ranking and RM3
 * pseudo-relevance feedback.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mics/error.hpp"
#include "mics/ranked_list.hpp"
#include "mics/text.hpp"

namespace mics {

struct Passage {
    std::string id;
    std::string text;

    bool operator==(const Passage&) const = default;
};

struct Bm25Params {
    double k1 = 0.95;
    double b = 0.45;
};

struct Rm3Params {
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;
    double lambda = 0.5;
};

/// Term -> non-negative weight. Iteration is in ascending term order.
class WeightedQuery {
  public:
    using Map = std::map<std::string, double>;

    WeightedQuery() = default;
    explicit WeightedQuery(Map weights) : weights_(std::move(weights)) {
        for (const auto& [term, w] : weights_) {
            if (!std::isfinite(w) || w < 0.0) {
                fail(ErrorCode::invalid_arguments, "query weight for '" + term + "' must be finite and non-negative");
            }
        }
    }

    /// Bag-of-words query: each token weighted by its count.
    static WeightedQuery from_text(std::string_view text) {
        Map weights;
        for (auto& token : tokenize(text)) {
            weights[std::move(token)] += 1.0;
        }
        return WeightedQuery(std::move(weights));
    }

    [[nodiscard]] const Map& weights() const noexcept { return weights_; }
    [[nodiscard]] bool empty() const noexcept { return weights_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }

    [[nodiscard]] double weight(const std::string& term) const {
        auto it = weights_.find(term);
        return it == weights_.end() ? 0.0 : it->second;
    }

    [[nodiscard]] double total() const {
        double sum = 0.0;
        for (const auto& [term, w] : weights_) {
            sum += w;
        }
        return sum;
    }

    /// Weights divided by their sum; zero-weight terms are dropped.
    [[nodiscard]] WeightedQuery normalized() const {
        const double sum = total();
        Map out;
        if (sum <= 0.0) {
            return WeightedQuery{};
        }
        for (const auto& [term, w] : weights_) {
            if (w > 0.0) {
                out.emplace(term, w / sum);
            }
        }
        return WeightedQuery(std::move(out));
    }

    bool operator==(const WeightedQuery&) const = default;

  private:
    Map weights_;
};

struct Posting {
    std::uint32_t doc = 0;  // position in ascending passage-id order
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Immutable after construction; safe to share across threads.
///
/// Passages are numbered in ascending id order, so ascending doc number is
/// ascending passage id.
class InvertedIndex {
  public:
    static constexpr std::string_view kMagic = "mics-index";
    static constexpr int kVersion = 1;

    InvertedIndex() = default;

    static InvertedIndex build(std::span<const Passage> corpus) {
        std::vector<const Passage*> sorted;
        sorted.reserve(corpus.size());
        for (const auto& p : corpus) {
            if (p.id.empty() || p.id.find_first_of(" \t\r\n") != std::string::npos) {
                fail(ErrorCode::invalid_arguments, "passage id '" + p.id + "' is empty or contains whitespace");
            }
            sorted.push_back(&p);
        }
        std::sort(sorted.begin(), sorted.end(), [](const Passage* a, const Passage* b) { return a->id < b->id; });
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            if (sorted[i]->id == sorted[i - 1]->id) {
                fail(ErrorCode::duplicate_id, "duplicate passage id '" + sorted[i]->id + "'");
            }
        }

        InvertedIndex index;
        for (std::uint32_t doc = 0; doc < sorted.size(); ++doc) {
            const auto& passage = *sorted[doc];
            std::map<std::string, std::uint32_t> counts;
            const auto tokens = tokenize(passage.text);
            for (const auto& t : tokens) {
                ++counts[t];
            }
            index.ids_.push_back(passage.id);
            index.texts_.push_back(passage.text);
            index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
            std::vector<std::pair<std::string, std::uint32_t>> terms(counts.begin(), counts.end());
            for (const auto& [term, tf] : terms) {
                index.postings_[term].push_back(Posting{doc, tf});
            }
            index.doc_terms_.push_back(std::move(terms));
        }
        index.finish();
        return index;
    }

    [[nodiscard]] std::size_t doc_count() const noexcept { return ids_.size(); }
    [[nodiscard]] std::size_t term_count() const noexcept { return postings_.size(); }
    [[nodiscard]] double avg_doc_length() const noexcept { return avg_length_; }

    [[nodiscard]] std::optional<std::uint32_t> find(std::string_view id) const {
        auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
        if (it == ids_.end() || *it != id) {
            return std::nullopt;
        }
        return static_cast<std::uint32_t>(it - ids_.begin());
    }

    [[nodiscard]] std::uint32_t require(std::string_view id) const {
        auto doc = find(id);
        if (!doc) {
            fail(ErrorCode::not_found, "passage '" + std::string(id) + "' is not in the index");
        }
        return *doc;
    }

    [[nodiscard]] const std::string& id(std::uint32_t doc) const { return ids_.at(doc); }
    [[nodiscard]] const std::string& text(std::uint32_t doc) const { return texts_.at(doc); }
    [[nodiscard]] std::uint32_t doc_length(std::uint32_t doc) const { return lengths_.at(doc); }
    [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return ids_; }

    /// Term frequencies of one passage, ascending by term.
    [[nodiscard]] const std::vector<std::pair<std::string, std::uint32_t>>& doc_terms(std::uint32_t doc) const {
        return doc_terms_.at(doc);
    }

    [[nodiscard]] std::span<const Posting> postings(const std::string& term) const {
        auto it = postings_.find(term);
        if (it == postings_.end()) {
            return {};
        }
        return it->second;
    }

    [[nodiscard]] std::size_t doc_freq(const std::string& term) const { return postings(term).size(); }

    [[nodiscard]] std::uint32_t term_freq(const std::string& term, std::uint32_t doc) const {
        auto list = postings(term);
        auto it = std::lower_bound(list.begin(), list.end(), doc, [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        return (it != list.end() && it->doc == doc) ? it->tf : 0;
    }

    /// Deterministic text layout: header, passages in id order, then postings
    /// in ascending term order.
    void write(std::ostream& out) const {
        out << kMagic << ' ' << kVersion << '\n';
        out << "passages " << ids_.size() << '\n';
        for (std::size_t d = 0; d < ids_.size(); ++d) {
            out << ids_[d] << '\t' << texts_[d] << '\n';
        }
        out << "terms " << postings_.size() << '\n';
        for (const auto& [term, list] : postings_) {
            out << term;
            for (const auto& p : list) {
                out << ' ' << p.doc << ':' << p.tf;
            }
            out << '\n';
        }
    }

    [[nodiscard]] std::string serialize() const {
        std::ostringstream out;
        write(out);
        return out.str();
    }

    /// Reads what `write` produced. Postings are taken from the file and then
    /// cross-checked against the stored passages.
    static InvertedIndex read(std::istream& in) {
        auto lines = read_lines(in);
        std::size_t n = 0;
        auto next = [&]() -> const std::string& {
            if (n >= lines.size()) {
                throw ParseError(n + 1, "unexpected end of index file");
            }
            return lines[n++];
        };
        {
            auto header = split_whitespace(next());
            if (header.size() != 2 || header[0] != kMagic) {
                throw ParseError(1, "not an index file");
            }
            if (header[1] != std::to_string(kVersion)) {
                throw ParseError(1, "unsupported index version " + header[1]);
            }
        }
        auto count_line = [&](std::string_view label) -> std::size_t {
            auto fields = split_whitespace(next());
            if (fields.size() != 2 || fields[0] != label) {
                throw ParseError(n, "expected '" + std::string(label) + " <count>'");
            }
            try {
                return static_cast<std::size_t>(std::stoull(fields[1]));
            } catch (const std::exception&) {
                throw ParseError(n, "bad count");
            }
        };
        std::vector<Passage> corpus;
        const auto passages = count_line("passages");
        for (std::size_t i = 0; i < passages; ++i) {
            const auto& line = next();
            auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw ParseError(n, "expected 'id<TAB>text'");
            }
            corpus.push_back(Passage{line.substr(0, tab), line.substr(tab + 1)});
        }
        auto index = build(corpus);
        const auto terms = count_line("terms");
        if (terms != index.postings_.size()) {
            throw ParseError(n, "term count does not match stored passages");
        }
        auto it = index.postings_.begin();
        for (std::size_t i = 0; i < terms; ++i, ++it) {
            const auto& line = next();
            std::string expected = it->first;
            for (const auto& p : it->second) {
                expected += ' ' + std::to_string(p.doc) + ':' + std::to_string(p.tf);
            }
            if (line != expected) {
                throw ParseError(n, "postings for '" + it->first + "' do not match stored passages");
            }
        }
        return index;
    }

  private:
    void finish() {
        double total = 0.0;
        for (auto len : lengths_) {
            total += len;
        }
        avg_length_ = ids_.empty() ? 0.0 : total / static_cast<double>(ids_.size());
    }

    std::vector<std::string> ids_;
    std::vector<std::string> texts_;
    std::vector<std::uint32_t> lengths_;
    std::vector<std::vector<std::pair<std::string, std::uint32_t>>> doc_terms_;
    std::map<std::string, std::vector<Posting>> postings_;
    double avg_length_ = 0.0;
};

inline InvertedIndex build_index(std::span<const Passage> corpus) { return InvertedIndex::build(corpus); }

/// Corpus file: `passage_id \t text` per line.
inline std::vector<Passage> read_corpus(std::istream& in) {
    std::vector<Passage> corpus;
    auto lines = read_lines(in);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto& line = lines[n];
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(n + 1, "expected 'passage_id<TAB>text'");
        }
        auto id = line.substr(0, tab);
        if (id.empty() || id.find_first_of(" \r\n") != std::string::npos) {
            throw ParseError(n + 1, "passage id '" + id + "' is empty or contains whitespace");
        }
        corpus.push_back(Passage{std::move(id), line.substr(tab + 1)});
    }
    return corpus;
}

/// Smoothed, always non-negative BM25 idf.
inline double bm25_idf(std::size_t doc_count, std::size_t doc_freq) {
    const double n = static_cast<double>(doc_count);
    const double df = static_cast<double>(doc_freq);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

inline double bm25_term_score(double idf, double tf, double doc_length, double avg_length, const Bm25Params& params) {
    const double norm = params.k1 * (1.0 - params.b + params.b * doc_length / avg_length);
    return idf * tf * (params.k1 + 1.0) / (tf + norm);
}

inline double bm25_score(const InvertedIndex& index, const WeightedQuery& query, std::string_view passage_id,
                         const Bm25Params& params = {}) {
    const auto doc = index.require(passage_id);
    double score = 0.0;
    for (const auto& [term, weight] : query.weights()) {
        const auto tf = index.term_freq(term, doc);
        if (tf == 0) {
            continue;
        }
        const double idf = bm25_idf(index.doc_count(), index.doc_freq(term));
        score += weight * bm25_term_score(idf, tf, index.doc_length(doc), index.avg_doc_length(), params);
    }
    return score;
}

/// The k best passages with a positive score, in canonical ranking order.
inline RankedList search(const InvertedIndex& index, const WeightedQuery& query, std::size_t k,
                         const Bm25Params& params = {}) {
    RankedList result;
    if (k == 0 || index.doc_count() == 0) {
        return result;
    }
    std::vector<double> scores(index.doc_count(), 0.0);
    // Terms are visited in ascending order, the same order bm25_score uses, so
    // the per-passage sums are bit-identical between the two paths.
    for (const auto& [term, weight] : query.weights()) {
        auto list = index.postings(term);
        if (list.empty() || weight == 0.0) {
            continue;
        }
        const double idf = bm25_idf(index.doc_count(), list.size());
        for (const auto& p : list) {
            scores[p.doc] += weight * bm25_term_score(idf, p.tf, index.doc_length(p.doc), index.avg_doc_length(), params);
        }
    }
    std::vector<std::uint32_t> hits;
    for (std::uint32_t d = 0; d < scores.size(); ++d) {
        if (scores[d] > 0.0) {
            hits.push_back(d);
        }
    }
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;
    };
    const auto keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), better);
    hits.resize(keep);
    result.entries.reserve(keep);
    for (auto d : hits) {
        result.entries.push_back(ScoredPassage{index.id(d), scores[d]});
    }
    return result;
}

/// RM3: builds a relevance model from the top `fb_docs` passages (each
/// weighted by its share of the feedback BM25 mass, term probability
/// tf/doc_length), keeps the `fb_terms` most probable non-stopword terms,
/// renormalizes them and interpolates with the normalized input query.
inline WeightedQuery rm3_expand(const InvertedIndex& index, const WeightedQuery& query, const Rm3Params& rm3 = {},
                                const Bm25Params& bm25 = {}, const Lexicon& stopwords = default_stopwords()) {
    if (rm3.lambda < 0.0 || rm3.lambda > 1.0 || !std::isfinite(rm3.lambda)) {
        fail(ErrorCode::invalid_arguments, "rm3 lambda must lie in [0, 1]");
    }
    const auto original = query.normalized();
    const auto feedback = search(index, query, rm3.fb_docs, bm25);
    if (feedback.empty() || rm3.fb_terms == 0) {
        return original;
    }

    double mass = 0.0;
    for (const auto& e : feedback.entries) {
        mass += e.score;
    }
    std::map<std::string, double> relevance;
    for (const auto& e : feedback.entries) {
        const auto doc = index.require(e.id);
        const double doc_weight = e.score / mass;
        const double length = index.doc_length(doc);
        for (const auto& [term, tf] : index.doc_terms(doc)) {
            if (stopwords.contains(term)) {
                continue;
            }
            relevance[term] += doc_weight * static_cast<double>(tf) / length;
        }
    }

    std::vector<std::pair<std::string, double>> ranked(relevance.begin(), relevance.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    if (ranked.size() > rm3.fb_terms) {
        ranked.resize(rm3.fb_terms);
    }
    double kept = 0.0;
    for (const auto& [term, p] : ranked) {
        kept += p;
    }

    std::map<std::string, double> mixed;
    for (const auto& [term, p] : original.weights()) {
        mixed[term] += rm3.lambda * p;
    }
    if (kept > 0.0) {
        for (const auto& [term, p] : ranked) {
            mixed[term] += (1.0 - rm3.lambda) * p / kept;
        }
    }
    return WeightedQuery(std::move(mixed)).normalized();
}

}  // namespace mics
