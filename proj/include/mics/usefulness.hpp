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
 * Usefulness of a clarifying exchange.
 *
 * Given the resolved query, the clarifying question that was asked and the
 * user's answer, a four-class classifier decides whether the question, the
 * answer, both or neither carry information worth adding to the query, and
 * `dispatch_expansion` rewrites the query accordingly:
 *
 *     label 0 (neither)   -> resolved query, untouched
 *     label 1 (question)  -> expand(resolved, question)
 *     label 2 (answer)    -> expand(resolved, answer)
 *     label 3 (both)      -> expand(resolved, question, answer)
 *
 * The built-in classifier is a multinomial logistic regression over a small
 * hand-designed feature vector (answer polarity, length, novel content).
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mics/conversation.hpp"
#include "mics/error.hpp"
#include "mics/evaluation.hpp"
#include "mics/rewriter.hpp"
#include "mics/text.hpp"

namespace mics {

enum class Polarity { affirmative, negative, other };

inline constexpr std::string_view to_string(Polarity p) {
    switch (p) {
    case Polarity::affirmative: return "affirmative";
    case Polarity::negative: return "negative";
    case Polarity::other: return "other";
    }
    return "other";
}

struct UsefulnessLexicons {
    Lexicon stopwords = default_stopwords();
    Lexicon affirmations = default_affirmations();
    Lexicon negations = default_negations();

    /// Neither a stopword nor a polarity word.
    [[nodiscard]] bool is_content(const std::string& token) const {
        return !stopwords.contains(token) && !affirmations.contains(token) && !negations.contains(token);
    }
};

inline const UsefulnessLexicons& default_usefulness_lexicons() {
    static const UsefulnessLexicons lex;
    return lex;
}

namespace detail {

/// Index of the first non-stopword token, or tokens.size().
inline std::size_t first_non_stopword(const std::vector<std::string>& tokens, const Lexicon& stopwords) {
    std::size_t i = 0;
    while (i < tokens.size() && stopwords.contains(tokens[i])) {
        ++i;
    }
    return i;
}

inline Polarity polarity_of(const std::vector<std::string>& tokens, std::size_t lead, const UsefulnessLexicons& lex) {
    if (lead >= tokens.size()) {
        return Polarity::other;
    }
    if (lex.affirmations.contains(tokens[lead])) {
        return Polarity::affirmative;
    }
    if (lex.negations.contains(tokens[lead])) {
        return Polarity::negative;
    }
    return Polarity::other;
}

}  // namespace detail

/// Looks only at the first non-stopword token of the answer.
inline Polarity detect_polarity(std::string_view answer, const UsefulnessLexicons& lex = default_usefulness_lexicons()) {
    const auto tokens = tokenize(answer);
    return detail::polarity_of(tokens, detail::first_non_stopword(tokens, lex.stopwords), lex);
}

struct FeatureVector {
    Polarity answer_polarity = Polarity::other;
    std::size_t answer_token_count = 0;
    /// Content tokens of the answer absent from both query and question.
    std::size_t answer_novel_content_tokens = 0;
    /// |tokens(question) ∩ tokens(query)| / |tokens(question)|, over distinct tokens.
    double question_query_overlap = 0.0;
    /// Affirmative lead word followed by at least one content token.
    bool starts_affirmative_then_content = false;
    bool starts_negative_then_content = false;

    bool operator==(const FeatureVector&) const = default;
};

inline FeatureVector extract_features(const std::string& query, const std::string& question, const std::string& answer,
                                      const UsefulnessLexicons& lex = default_usefulness_lexicons()) {
    if (trim(query).empty() || trim(question).empty() || trim(answer).empty()) {
        fail(ErrorCode::invalid_arguments, "query, question and answer must all be non-empty");
    }
    const auto q_tokens = tokenize(query);
    const auto cq_tokens = tokenize(question);
    const auto a_tokens = tokenize(answer);
    const std::set<std::string> q_set(q_tokens.begin(), q_tokens.end());
    const std::set<std::string> cq_set(cq_tokens.begin(), cq_tokens.end());

    FeatureVector f;
    f.answer_token_count = a_tokens.size();

    std::set<std::string> novel;
    for (const auto& t : a_tokens) {
        if (lex.is_content(t) && q_set.count(t) == 0 && cq_set.count(t) == 0) {
            novel.insert(t);
        }
    }
    f.answer_novel_content_tokens = novel.size();

    if (!cq_set.empty()) {
        std::size_t shared = 0;
        for (const auto& t : cq_set) {
            shared += q_set.count(t);
        }
        f.question_query_overlap = static_cast<double>(shared) / static_cast<double>(cq_set.size());
    }

    const auto lead = detail::first_non_stopword(a_tokens, lex.stopwords);
    f.answer_polarity = detail::polarity_of(a_tokens, lead, lex);
    bool content_after_lead = false;
    for (std::size_t i = lead + 1; i < a_tokens.size(); ++i) {
        if (lex.is_content(a_tokens[i])) {
            content_after_lead = true;
            break;
        }
    }
    f.starts_affirmative_then_content = f.answer_polarity == Polarity::affirmative && content_after_lead;
    f.starts_negative_then_content = f.answer_polarity == Polarity::negative && content_after_lead;
    return f;
}

/// Numeric encoding used by the linear model. The last slot is the bias.
inline constexpr std::size_t kFeatureDims = 10;
inline constexpr std::size_t kLabelCount = 4;

inline std::array<double, kFeatureDims> encode(const FeatureVector& f) {
    const double novel = static_cast<double>(f.answer_novel_content_tokens);
    return {
        f.answer_polarity == Polarity::affirmative ? 1.0 : 0.0,
        f.answer_polarity == Polarity::negative ? 1.0 : 0.0,
        f.answer_polarity == Polarity::other ? 1.0 : 0.0,
        std::log1p(static_cast<double>(f.answer_token_count)),
        std::log1p(novel),
        novel > 0.0 ? 1.0 : 0.0,
        f.question_query_overlap,
        f.starts_affirmative_then_content ? 1.0 : 0.0,
        f.starts_negative_then_content ? 1.0 : 0.0,
        1.0,
    };
}

struct AnnotatedExample {
    std::string query;
    std::string question;
    std::string answer;
    UsefulnessLabel label = UsefulnessLabel::neither;

    bool operator==(const AnnotatedExample&) const = default;
};

/// Annotation file: `label \t query \t question \t answer`, label in 0..3.
inline std::vector<AnnotatedExample> read_annotations(std::istream& in) {
    std::vector<AnnotatedExample> out;
    auto lines = read_lines(in);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        auto fields = split(lines[n], '\t');
        if (fields.size() != 4) {
            throw ParseError(n + 1, "expected 'label<TAB>query<TAB>question<TAB>answer'");
        }
        if (fields[0].size() != 1 || fields[0][0] < '0' || fields[0][0] > '3') {
            throw ParseError(n + 1, "label must be one of 0, 1, 2, 3");
        }
        for (std::size_t i = 1; i < 4; ++i) {
            if (trim(fields[i]).empty()) {
                throw ParseError(n + 1, "empty text field");
            }
        }
        out.push_back(AnnotatedExample{fields[1], fields[2], fields[3], static_cast<UsefulnessLabel>(fields[0][0] - '0')});
    }
    return out;
}

inline void write_annotations(std::ostream& out, const std::vector<AnnotatedExample>& examples) {
    for (const auto& e : examples) {
        out << to_int(e.label) << '\t' << e.query << '\t' << e.question << '\t' << e.answer << '\n';
    }
}

struct TrainingOptions {
    std::size_t folds = 5;
    std::uint64_t seed = 13;
    std::size_t epochs = 3000;
    double learning_rate = 0.5;
    double l2 = 1e-4;
};

struct ClassifierReport {
    std::vector<eval::ClassificationScores> folds;
    double mean_macro_f1 = 0.0;
    double mean_accuracy = 0.0;

    bool operator==(const ClassifierReport&) const = default;
};

/// Per-class weight vectors over the encoded features. Immutable once
/// trained; prediction is the argmax class score, ties to the lower label.
class UsefulnessModel {
  public:
    using Weights = std::array<std::array<double, kFeatureDims>, kLabelCount>;

    UsefulnessModel() = default;
    UsefulnessModel(Weights weights, ClassifierReport report = {})
        : weights_(weights), report_(std::move(report)), trained_(true) {}

    [[nodiscard]] bool trained() const noexcept { return trained_; }
    [[nodiscard]] const Weights& weights() const noexcept { return weights_; }
    [[nodiscard]] const ClassifierReport& report() const noexcept { return report_; }

    [[nodiscard]] std::array<double, kLabelCount> scores(const std::array<double, kFeatureDims>& x) const {
        std::array<double, kLabelCount> out{};
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < kFeatureDims; ++j) {
                s += weights_[c][j] * x[j];
            }
            out[c] = s;
        }
        return out;
    }

    [[nodiscard]] UsefulnessLabel predict(const FeatureVector& f) const {
        if (!trained_) {
            fail(ErrorCode::contract, "usefulness model is not trained");
        }
        const auto s = scores(encode(f));
        std::size_t best = 0;
        for (std::size_t c = 1; c < kLabelCount; ++c) {
            if (s[c] > s[best]) {
                best = c;
            }
        }
        return static_cast<UsefulnessLabel>(best);
    }

    void write(std::ostream& out) const {
        if (!trained_) {
            fail(ErrorCode::contract, "cannot save an untrained model");
        }
        char buf[40];
        out << "mics-usefulness-model 1\n";
        out << "dims " << kFeatureDims << '\n';
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            out << "class " << c;
            for (double w : weights_[c]) {
                std::snprintf(buf, sizeof(buf), "%.17g", w);
                out << ' ' << buf;
            }
            out << '\n';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", report_.mean_macro_f1);
        out << "cv " << report_.folds.size() << ' ' << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", report_.mean_accuracy);
        out << ' ' << buf << '\n';
    }

    static UsefulnessModel read(std::istream& in) {
        auto lines = read_lines(in);
        if (lines.size() < 2 + kLabelCount || lines[0] != "mics-usefulness-model 1" ||
            lines[1] != "dims " + std::to_string(kFeatureDims)) {
            throw ParseError(1, "not a usefulness model file");
        }
        Weights w{};
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            auto fields = split_whitespace(lines[2 + c]);
            if (fields.size() != kFeatureDims + 2 || fields[0] != "class" || fields[1] != std::to_string(c)) {
                throw ParseError(3 + c, "bad class weight line");
            }
            for (std::size_t j = 0; j < kFeatureDims; ++j) {
                try {
                    w[c][j] = std::stod(fields[2 + j]);
                } catch (const std::exception&) {
                    throw ParseError(3 + c, "bad weight");
                }
            }
        }
        ClassifierReport report;
        if (lines.size() > 2 + kLabelCount) {
            auto fields = split_whitespace(lines[2 + kLabelCount]);
            if (fields.size() == 4 && fields[0] == "cv") {
                report.mean_macro_f1 = std::stod(fields[2]);
                report.mean_accuracy = std::stod(fields[3]);
            }
        }
        return UsefulnessModel(w, std::move(report));
    }

  private:
    Weights weights_{};
    ClassifierReport report_;
    bool trained_ = false;
};

namespace detail {

/// Full-batch gradient descent on the softmax cross-entropy with an L2
/// penalty (bias excluded), starting from zero weights.
inline UsefulnessModel::Weights fit_softmax(const std::vector<std::array<double, kFeatureDims>>& xs,
                                            const std::vector<int>& ys, const TrainingOptions& opt) {
    UsefulnessModel::Weights w{};
    const double n = static_cast<double>(xs.size());
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        UsefulnessModel::Weights grad{};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::array<double, kLabelCount> z{};
            double zmax = -INFINITY;
            for (std::size_t c = 0; c < kLabelCount; ++c) {
                double s = 0.0;
                for (std::size_t j = 0; j < kFeatureDims; ++j) {
                    s += w[c][j] * xs[i][j];
                }
                z[c] = s;
                zmax = std::max(zmax, s);
            }
            double denom = 0.0;
            for (auto& v : z) {
                v = std::exp(v - zmax);
                denom += v;
            }
            for (std::size_t c = 0; c < kLabelCount; ++c) {
                const double residual = z[c] / denom - (static_cast<int>(c) == ys[i] ? 1.0 : 0.0);
                for (std::size_t j = 0; j < kFeatureDims; ++j) {
                    grad[c][j] += residual * xs[i][j];
                }
            }
        }
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            for (std::size_t j = 0; j < kFeatureDims; ++j) {
                const double penalty = j + 1 == kFeatureDims ? 0.0 : opt.l2 * w[c][j];
                w[c][j] -= opt.learning_rate * (grad[c][j] / n + penalty);
            }
        }
    }
    return w;
}

}  // namespace detail

/// Stratified k-fold evaluation followed by a final fit on all examples.
inline std::pair<UsefulnessModel, ClassifierReport> train(const std::vector<AnnotatedExample>& examples,
                                                          const TrainingOptions& options = {},
                                                          const UsefulnessLexicons& lex = default_usefulness_lexicons()) {
    std::vector<std::array<double, kFeatureDims>> xs;
    std::vector<int> ys;
    xs.reserve(examples.size());
    for (const auto& e : examples) {
        xs.push_back(encode(extract_features(e.query, e.question, e.answer, lex)));
        ys.push_back(to_int(e.label));
    }
    const auto folds = eval::stratified_kfold_split(ys, options.folds, options.seed);

    ClassifierReport report;
    for (const auto& fold : folds) {
        std::vector<std::array<double, kFeatureDims>> train_x;
        std::vector<int> train_y;
        for (auto i : fold.train) {
            train_x.push_back(xs[i]);
            train_y.push_back(ys[i]);
        }
        const UsefulnessModel model(detail::fit_softmax(train_x, train_y, options));
        std::vector<int> truth;
        std::vector<int> predicted;
        for (auto i : fold.test) {
            truth.push_back(ys[i]);
            const auto s = model.scores(xs[i]);
            predicted.push_back(static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin()));
        }
        report.folds.push_back(eval::macro_f1_and_accuracy(truth, predicted));
    }
    for (const auto& f : report.folds) {
        report.mean_macro_f1 += f.macro_f1;
        report.mean_accuracy += f.accuracy;
    }
    report.mean_macro_f1 /= static_cast<double>(report.folds.size());
    report.mean_accuracy /= static_cast<double>(report.folds.size());

    return {UsefulnessModel(detail::fit_softmax(xs, ys, options), report), report};
}

inline UsefulnessLabel classify(const UsefulnessModel& model, const std::string& query, const std::string& question,
                                const std::string& answer, const UsefulnessLexicons& lex = default_usefulness_lexicons()) {
    if (!model.trained()) {
        fail(ErrorCode::contract, "usefulness model is not trained");
    }
    return model.predict(extract_features(query, question, answer, lex));
}

/// Backend contract for the usefulness decision.
class UsefulnessClassifier {
  public:
    virtual ~UsefulnessClassifier() = default;

    [[nodiscard]] virtual std::string identity() const = 0;
    [[nodiscard]] virtual bool is_serial() const { return false; }
    [[nodiscard]] virtual UsefulnessLabel classify(const std::string& query, const std::string& question,
                                                   const std::string& answer) const = 0;
};

class LinearUsefulnessClassifier final : public UsefulnessClassifier {
  public:
    explicit LinearUsefulnessClassifier(UsefulnessModel model, UsefulnessLexicons lex = default_usefulness_lexicons())
        : model_(std::move(model)), lex_(std::move(lex)) {
        if (!model_.trained()) {
            fail(ErrorCode::contract, "usefulness model is not trained");
        }
    }

    [[nodiscard]] std::string identity() const override { return "builtin-linear"; }

    [[nodiscard]] UsefulnessLabel classify(const std::string& query, const std::string& question,
                                           const std::string& answer) const override {
        return mics::classify(model_, query, question, answer, lex_);
    }

    [[nodiscard]] const UsefulnessModel& model() const noexcept { return model_; }

  private:
    UsefulnessModel model_;
    UsefulnessLexicons lex_;
};

/// u''_q for a given usefulness label. Label 0 returns `resolved` exactly.
inline std::string dispatch_expansion(UsefulnessLabel label, const std::string& resolved, const std::string& question,
                                      const std::string& answer, const RewriteBackend& expander) {
    if (trim(resolved).empty()) {
        fail(ErrorCode::invalid_arguments, "resolved query is empty");
    }
    switch (label) {
    case UsefulnessLabel::neither: return resolved;
    case UsefulnessLabel::question: return expand(expander, resolved, question, std::nullopt);
    case UsefulnessLabel::answer: return expand(expander, resolved, std::nullopt, answer);
    case UsefulnessLabel::both: return expand(expander, resolved, question, answer);
    }
    fail(ErrorCode::invalid_arguments, "unknown usefulness label");
}

}  // namespace mics
