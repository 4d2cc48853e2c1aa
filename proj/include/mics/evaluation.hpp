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
 * TREC-style evaluation: qrels and run files, ranking metrics (recall@k,
 * MAP, MRR, nDCG), classifier metrics (macro-F1, accuracy), Cohen's kappa
 * and stratified k-fold splitting.
 *
 * Conventions:
 *  - a passage is relevant for binary metrics when grade >= rel_threshold;
 *  - AP divides by the number of relevant judged passages of the turn;
 *  - nDCG uses linear gain unless exponential gain is requested;
 *  - turns present in the run but absent from the qrels are skipped and
 *    counted, never averaged in as zero; recall additionally skips turns
 *    with no relevant passage.
 */
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "mics/error.hpp"
#include "mics/ranked_list.hpp"
#include "mics/text.hpp"

namespace mics::eval {

/// passage id -> grade, for one topic-turn.
using Judgments = std::map<std::string, int>;

struct Qrels {
    std::map<std::string, Judgments> judgments;

    [[nodiscard]] const Judgments* find(const std::string& turn) const {
        auto it = judgments.find(turn);
        return it == judgments.end() ? nullptr : &it->second;
    }

    void add(const std::string& turn, const std::string& passage, int grade) {
        if (grade < 0) {
            fail(ErrorCode::validation, "negative grade for " + turn + "/" + passage);
        }
        judgments[turn][passage] = grade;
    }

    bool operator==(const Qrels&) const = default;
};

/// `topic_turn_id 0 passage_id grade`, whitespace separated.
inline Qrels read_qrels(std::istream& in) {
    Qrels qrels;
    auto lines = read_lines(in);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        auto fields = split_whitespace(lines[n]);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 4) {
            throw ParseError(n + 1, "expected 'topic_turn_id 0 passage_id grade'");
        }
        long grade = 0;
        try {
            std::size_t used = 0;
            grade = std::stol(fields[3], &used);
            if (used != fields[3].size()) {
                throw std::invalid_argument("trailing");
            }
        } catch (const std::exception&) {
            throw ParseError(n + 1, "grade '" + fields[3] + "' is not an integer");
        }
        if (grade < 0) {
            throw ParseError(n + 1, "grade must be non-negative");
        }
        qrels.add(fields[0], fields[2], static_cast<int>(grade));
    }
    return qrels;
}

inline void write_qrels(std::ostream& out, const Qrels& qrels) {
    for (const auto& [turn, judged] : qrels.judgments) {
        for (const auto& [passage, grade] : judged) {
            out << turn << " 0 " << passage << ' ' << grade << '\n';
        }
    }
}

struct RunRecord {
    std::string topic_turn_id;
    std::string passage_id;
    int rank = 0;
    double score = 0.0;
    std::string run_id;

    bool operator==(const RunRecord&) const = default;
};

inline std::string format_score(double score) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", score);
    return buf;
}

/// Ranks contiguous from 1 and scores non-increasing within every turn (in
/// order of appearance), no passage repeated within a turn.
inline void validate_run(std::span<const RunRecord> records) {
    std::map<std::string, std::pair<int, double>> last;
    std::map<std::string, std::unordered_set<std::string>> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        auto where = " (row " + std::to_string(i + 1) + ")";
        if (r.topic_turn_id.empty() || r.passage_id.empty() || r.run_id.empty()) {
            fail(ErrorCode::validation, "empty field" + where);
        }
        auto it = last.find(r.topic_turn_id);
        const int expected = it == last.end() ? 1 : it->second.first + 1;
        if (r.rank != expected) {
            fail(ErrorCode::validation, "rank " + std::to_string(r.rank) + " for " + r.topic_turn_id + " where " +
                                            std::to_string(expected) + " was expected" + where);
        }
        if (it != last.end() && r.score > it->second.second) {
            fail(ErrorCode::validation, "score increases within " + r.topic_turn_id + where);
        }
        if (!seen[r.topic_turn_id].insert(r.passage_id).second) {
            fail(ErrorCode::validation, "passage " + r.passage_id + " repeated within " + r.topic_turn_id + where);
        }
        last[r.topic_turn_id] = {r.rank, r.score};
    }
}

/// `topic_turn_id Q0 passage_id rank score run_id`; tolerant of extra
/// whitespace, validated after reading.
inline std::vector<RunRecord> read_run(std::istream& in) {
    std::vector<RunRecord> records;
    auto lines = read_lines(in);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        auto fields = split_whitespace(lines[n]);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 6 || fields[1] != "Q0") {
            throw ParseError(n + 1, "expected 'topic_turn_id Q0 passage_id rank score run_id'");
        }
        RunRecord r;
        r.topic_turn_id = fields[0];
        r.passage_id = fields[2];
        r.run_id = fields[5];
        try {
            std::size_t used = 0;
            r.rank = std::stoi(fields[3], &used);
            if (used != fields[3].size()) {
                throw std::invalid_argument("rank");
            }
            r.score = std::stod(fields[4], &used);
            if (used != fields[4].size() || !std::isfinite(r.score)) {
                throw std::invalid_argument("score");
            }
        } catch (const std::exception&) {
            throw ParseError(n + 1, "bad rank or score");
        }
        records.push_back(std::move(r));
    }
    validate_run(records);
    return records;
}

inline void write_run(std::ostream& out, std::span<const RunRecord> records) {
    validate_run(records);
    for (const auto& r : records) {
        out << r.topic_turn_id << " Q0 " << r.passage_id << ' ' << r.rank << ' ' << format_score(r.score) << ' ' << r.run_id
            << '\n';
    }
}

inline std::string write_run(std::span<const RunRecord> records) {
    std::ostringstream out;
    write_run(out, records);
    return out.str();
}

/// Exact grammar of one written run line.
inline bool is_canonical_run_line(const std::string& line) {
    static const std::regex grammar(R"(^[^\s]+ Q0 [^\s]+ [1-9][0-9]* -?[0-9]+\.[0-9]{6} [^\s]+$)");
    return std::regex_match(line, grammar);
}

/// Converts a ranking into run rows. Scores are clamped to be non-increasing
/// (a reranked tail may carry larger first-stage scores than the head).
inline std::vector<RunRecord> to_run_records(const std::string& topic_turn_id, const RankedList& ranking,
                                             const std::string& run_id, std::size_t depth = SIZE_MAX) {
    std::vector<RunRecord> out;
    double ceiling = INFINITY;
    for (std::size_t i = 0; i < ranking.size() && i < depth; ++i) {
        const double score = std::min(ranking.entries[i].score, ceiling);
        ceiling = score;
        out.push_back(RunRecord{topic_turn_id, ranking.entries[i].id, static_cast<int>(i) + 1, score, run_id});
    }
    return out;
}

/// turn -> passage ids in rank order.
using Rankings = std::map<std::string, std::vector<std::string>>;

inline Rankings rankings_of(std::span<const RunRecord> records) {
    std::map<std::string, std::vector<const RunRecord*>> grouped;
    for (const auto& r : records) {
        grouped[r.topic_turn_id].push_back(&r);
    }
    Rankings out;
    for (auto& [turn, rows] : grouped) {
        std::stable_sort(rows.begin(), rows.end(), [](const RunRecord* a, const RunRecord* b) { return a->rank < b->rank; });
        auto& ids = out[turn];
        for (const auto* r : rows) {
            ids.push_back(r->passage_id);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-turn ranking metrics.

inline std::size_t relevant_count(const Judgments& judged, int rel_threshold) {
    std::size_t n = 0;
    for (const auto& [passage, grade] : judged) {
        n += grade >= rel_threshold ? 1 : 0;
    }
    return n;
}

inline bool is_relevant(const Judgments& judged, const std::string& passage, int rel_threshold) {
    auto it = judged.find(passage);
    return it != judged.end() && it->second >= rel_threshold;
}

/// nullopt when the turn has no relevant passage.
inline std::optional<double> turn_recall(std::span<const std::string> ranking, const Judgments& judged, std::size_t k,
                                         int rel_threshold = 1) {
    if (k == 0) {
        fail(ErrorCode::invalid_arguments, "recall cutoff must be >= 1");
    }
    const auto total = relevant_count(judged, rel_threshold);
    if (total == 0) {
        return std::nullopt;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
        hits += is_relevant(judged, ranking[i], rel_threshold) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

inline double turn_average_precision(std::span<const std::string> ranking, const Judgments& judged, int rel_threshold = 1) {
    const auto total = relevant_count(judged, rel_threshold);
    if (total == 0) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (is_relevant(judged, ranking[i], rel_threshold)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total);
}

inline double turn_reciprocal_rank(std::span<const std::string> ranking, const Judgments& judged, int rel_threshold = 1) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (is_relevant(judged, ranking[i], rel_threshold)) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

enum class Gain { linear, exponential };

inline double gain_of(int grade, Gain gain) {
    return gain == Gain::linear ? static_cast<double>(grade) : std::exp2(static_cast<double>(grade)) - 1.0;
}

struct NdcgValue {
    double value = 0.0;
    bool degenerate = false;  // ideal DCG is zero
};

/// `k` absent means full depth.
inline NdcgValue turn_ndcg(std::span<const std::string> ranking, const Judgments& judged, std::optional<std::size_t> k,
                           Gain gain = Gain::linear) {
    const std::size_t depth = k.value_or(SIZE_MAX);
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranking.size() && i < depth; ++i) {
        auto it = judged.find(ranking[i]);
        if (it != judged.end() && it->second > 0) {
            dcg += gain_of(it->second, gain) / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    std::vector<int> grades;
    for (const auto& [passage, grade] : judged) {
        grades.push_back(grade);
    }
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double ideal = 0.0;
    for (std::size_t i = 0; i < grades.size() && i < depth; ++i) {
        if (grades[i] > 0) {
            ideal += gain_of(grades[i], gain) / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    if (ideal == 0.0) {
        return {0.0, true};
    }
    return {dcg / ideal, false};
}

// ---------------------------------------------------------------------------
// Aggregation over a run.

struct MetricSpec {
    enum class Kind { recall, map, mrr, ndcg };
    Kind kind = Kind::map;
    std::optional<std::size_t> cutoff;

    [[nodiscard]] std::string name() const {
        switch (kind) {
        case Kind::recall: return "r@" + std::to_string(cutoff.value_or(0));
        case Kind::map: return "map";
        case Kind::mrr: return "mrr";
        case Kind::ndcg: return cutoff ? "ndcg@" + std::to_string(*cutoff) : "ndcg";
        }
        return "map";
    }

    /// Accepts r@k / recall@k, map, mrr, ndcg, ndcg@k (case-insensitive).
    static MetricSpec parse(std::string_view text) {
        std::string s;
        for (char c : trim(text)) {
            s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        auto cutoff_of = [&](std::string_view rest) -> std::size_t {
            try {
                std::size_t used = 0;
                auto value = std::stoul(std::string(rest), &used);
                if (used != rest.size() || value == 0) {
                    throw std::invalid_argument("cutoff");
                }
                return value;
            } catch (const std::exception&) {
                fail(ErrorCode::invalid_arguments, "bad metric cutoff in '" + s + "'");
            }
        };
        if (s == "map") return {Kind::map, std::nullopt};
        if (s == "mrr") return {Kind::mrr, std::nullopt};
        if (s == "ndcg") return {Kind::ndcg, std::nullopt};
        if (s.rfind("ndcg@", 0) == 0) return {Kind::ndcg, cutoff_of(std::string_view(s).substr(5))};
        if (s.rfind("r@", 0) == 0) return {Kind::recall, cutoff_of(std::string_view(s).substr(2))};
        if (s.rfind("recall@", 0) == 0) return {Kind::recall, cutoff_of(std::string_view(s).substr(7))};
        fail(ErrorCode::invalid_arguments, "unknown metric '" + std::string(text) + "'");
    }
};

struct EvalOptions {
    int rel_threshold = 1;
    Gain gain = Gain::linear;
};

struct MetricResult {
    std::map<std::string, double> per_turn;
    double mean = 0.0;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;  // judged turns left out of the mean (recall without relevant passages)
    std::size_t flagged = 0;   // nDCG turns with zero ideal DCG
};

struct MetricReport {
    std::map<std::string, MetricResult> metrics;
    std::size_t turns_in_run = 0;
    std::size_t turns_skipped = 0;  // absent from qrels
};

inline MetricResult compute_metric(const Rankings& run, const Qrels& qrels, const MetricSpec& spec, const EvalOptions& options = {}) {
    MetricResult result;
    double sum = 0.0;
    for (const auto& [turn, ranking] : run) {
        const auto* judged = qrels.find(turn);
        if (judged == nullptr) {
            continue;
        }
        std::optional<double> value;
        switch (spec.kind) {
        case MetricSpec::Kind::recall:
            value = turn_recall(ranking, *judged, spec.cutoff.value_or(1), options.rel_threshold);
            break;
        case MetricSpec::Kind::map:
            value = turn_average_precision(ranking, *judged, options.rel_threshold);
            break;
        case MetricSpec::Kind::mrr:
            value = turn_reciprocal_rank(ranking, *judged, options.rel_threshold);
            break;
        case MetricSpec::Kind::ndcg: {
            auto nd = turn_ndcg(ranking, *judged, spec.cutoff, options.gain);
            result.flagged += nd.degenerate ? 1 : 0;
            value = nd.value;
            break;
        }
        }
        if (!value) {
            ++result.excluded;
            continue;
        }
        result.per_turn[turn] = *value;
        sum += *value;
        ++result.evaluated;
    }
    result.mean = result.evaluated == 0 ? 0.0 : sum / static_cast<double>(result.evaluated);
    return result;
}

inline MetricReport evaluate(const Rankings& run, const Qrels& qrels, std::span<const MetricSpec> metrics,
                             const EvalOptions& options = {}) {
    MetricReport report;
    report.turns_in_run = run.size();
    for (const auto& [turn, ranking] : run) {
        report.turns_skipped += qrels.find(turn) == nullptr ? 1 : 0;
    }
    for (const auto& spec : metrics) {
        report.metrics[spec.name()] = compute_metric(run, qrels, spec, options);
    }
    return report;
}

inline MetricResult recall_at_k(const Rankings& run, const Qrels& qrels, std::size_t k, int rel_threshold = 1) {
    return compute_metric(run, qrels, {MetricSpec::Kind::recall, k}, {rel_threshold, Gain::linear});
}

inline MetricResult mean_average_precision(const Rankings& run, const Qrels& qrels, int rel_threshold = 1) {
    return compute_metric(run, qrels, {MetricSpec::Kind::map, std::nullopt}, {rel_threshold, Gain::linear});
}

inline MetricResult mrr(const Rankings& run, const Qrels& qrels, int rel_threshold = 1) {
    return compute_metric(run, qrels, {MetricSpec::Kind::mrr, std::nullopt}, {rel_threshold, Gain::linear});
}

inline MetricResult ndcg_at_k(const Rankings& run, const Qrels& qrels, std::optional<std::size_t> k, Gain gain = Gain::linear) {
    return compute_metric(run, qrels, {MetricSpec::Kind::ndcg, k}, {1, gain});
}

// ---------------------------------------------------------------------------
// Classifier metrics.

struct ClassificationScores {
    double macro_f1 = 0.0;
    double accuracy = 0.0;

    bool operator==(const ClassificationScores&) const = default;
};

/// Per-class F1 (0 when precision + recall = 0), averaged over the classes
/// of `classes` that occur in `truth`.
inline ClassificationScores macro_f1_and_accuracy(std::span<const int> truth, std::span<const int> predicted,
                                                  const std::set<int>& classes = {0, 1, 2, 3}) {
    if (truth.size() != predicted.size()) {
        fail(ErrorCode::invalid_arguments, "label lists differ in length");
    }
    if (truth.empty()) {
        fail(ErrorCode::invalid_arguments, "no labels");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        correct += truth[i] == predicted[i] ? 1 : 0;
    }
    std::set<int> present;
    for (int t : truth) {
        if (classes.count(t) != 0) {
            present.insert(t);
        }
    }
    double f1_sum = 0.0;
    for (int c : present) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool t = truth[i] == c;
            const bool p = predicted[i] == c;
            tp += (t && p) ? 1 : 0;
            fp += (!t && p) ? 1 : 0;
            fn += (t && !p) ? 1 : 0;
        }
        const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        f1_sum += precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    }
    return {present.empty() ? 0.0 : f1_sum / static_cast<double>(present.size()),
            static_cast<double>(correct) / static_cast<double>(truth.size())};
}

inline double cohens_kappa(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size() || a.empty()) {
        fail(ErrorCode::invalid_arguments, "kappa needs two label lists of equal, non-zero length");
    }
    const double n = static_cast<double>(a.size());
    std::map<int, double> count_a;
    std::map<int, double> count_b;
    double agree = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        count_a[a[i]] += 1.0;
        count_b[b[i]] += 1.0;
        agree += a[i] == b[i] ? 1.0 : 0.0;
    }
    const double observed = agree / n;
    double expected = 0.0;
    for (const auto& [label, ca] : count_a) {
        auto it = count_b.find(label);
        if (it != count_b.end()) {
            expected += (ca / n) * (it->second / n);
        }
    }
    if (expected == 1.0) {
        return observed == 1.0 ? 1.0 : 0.0;
    }
    return (observed - expected) / (1.0 - expected);
}

// ---------------------------------------------------------------------------
// Stratified k-fold.

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;

    bool operator==(const Fold&) const = default;
};

/// Shuffles each class with a seeded generator and deals its members round
/// robin over the folds, continuing where the previous class stopped, so
/// per-class counts per fold differ by at most one and fold sizes stay
/// balanced.
inline std::vector<Fold> stratified_kfold_split(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) {
        fail(ErrorCode::invalid_arguments, "need at least 2 folds");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i]].push_back(i);
    }
    for (const auto& [label, members] : by_class) {
        if (members.size() < folds) {
            fail(ErrorCode::stratification, "class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                                                " examples, fewer than " + std::to_string(folds) + " folds");
        }
    }
    if (by_class.empty()) {
        fail(ErrorCode::stratification, "no examples to split");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> tests(folds);
    std::size_t next = 0;
    for (auto& [label, members] : by_class) {
        // Fisher-Yates on raw engine output keeps the split identical across
        // standard library implementations.
        for (std::size_t i = members.size(); i > 1; --i) {
            std::swap(members[i - 1], members[rng() % i]);
        }
        for (auto idx : members) {
            tests[next].push_back(idx);
            next = (next + 1) % folds;
        }
    }
    std::vector<Fold> out(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        std::sort(tests[f].begin(), tests[f].end());
        std::vector<bool> in_test(labels.size(), false);
        for (auto i : tests[f]) {
            in_test[i] = true;
        }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!in_test[i]) {
                out[f].train.push_back(i);
            }
        }
        out[f].test = std::move(tests[f]);
    }
    return out;
}

}  // namespace mics::eval
