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


#include <map>
#include <memory>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mics/reranker.hpp"
#include "support/expect_error.hpp"
#include "support/oracles.hpp"

namespace {

using Ids = std::vector<std::string>;

/// Scores each passage by a fixed table keyed on its id.
class TableScorer final : public mics::PointwiseScorer {
  public:
    explicit TableScorer(std::map<std::string, double> table) : table_(std::move(table)) {}
    [[nodiscard]] std::string identity() const override { return "table"; }
    [[nodiscard]] std::vector<double> score(const std::string&, std::span<const mics::Passage> passages) const override {
        std::vector<double> out;
        for (const auto& p : passages) {
            out.push_back(table_.at(p.id));
        }
        return out;
    }

  private:
    std::map<std::string, double> table_;
};

/// Preferences from a fixed matrix keyed on (a, b).
class MatrixPreferences final : public mics::PairwiseScorer {
  public:
    explicit MatrixPreferences(std::map<std::pair<std::string, std::string>, double> p) : p_(std::move(p)) {}
    [[nodiscard]] std::string identity() const override { return "matrix"; }
    [[nodiscard]] std::vector<double> prefer(const std::string&, std::span<const mics::PassagePair> pairs) const override {
        std::vector<double> out;
        for (const auto& pair : pairs) {
            out.push_back(p_.at({pair.a.id, pair.b.id}));
        }
        return out;
    }

  private:
    std::map<std::pair<std::string, std::string>, double> p_;
};

const std::map<std::string, std::string>& corpus() {
    static const std::map<std::string, std::string> c{{"a", "spiders eat insects"},
                                                      {"b", "tarantulas are big spiders"},
                                                      {"c", "the weather today"},
                                                      {"d", "tarantulas tarantulas"}};
    return c;
}

mics::RankedList first_stage() { return {{{"a", 9.0}, {"b", 8.0}, {"c", 7.0}, {"d", 6.0}}}; }

TEST(Pointwise, ReordersTheHeadOnly) {
    const TableScorer scorer({{"a", 0.1}, {"b", 0.9}, {"c", 0.5}});
    const auto out = mics::rerank_pointwise("q", first_stage(), mics::lookup_in(corpus()), scorer, 3);
    EXPECT_EQ(out.ids(), (Ids{"b", "c", "a", "d"}));
    EXPECT_EQ(out.entries[0].score, 0.9);
    EXPECT_EQ(out.entries[3].score, 6.0);
    EXPECT_TRUE(out.has_unique_ids());
}

TEST(Pointwise, DepthZeroAndEmptyInputAreIdentity) {
    const TableScorer scorer({});
    EXPECT_EQ(mics::rerank_pointwise("q", first_stage(), mics::lookup_in(corpus()), scorer, 0), first_stage());
    EXPECT_TRUE(mics::rerank_pointwise("q", {}, mics::lookup_in(corpus()), scorer, 10).empty());
}

TEST(Pointwise, MissingPassageIsNotFound) {
    const TableScorer scorer({{"zz", 1.0}});
    const mics::RankedList list{{{"zz", 1.0}}};
    EXPECT_MICS_ERROR(mics::rerank_pointwise("q", list, mics::lookup_in(corpus()), scorer, 5), mics::ErrorCode::not_found);
}

TEST(Pointwise, BadScoresAreBackendFailures) {
    const TableScorer nan_scorer({{"a", std::nan("")}, {"b", 1.0}});
    EXPECT_MICS_ERROR(mics::rerank_pointwise("q", first_stage(), mics::lookup_in(corpus()), nan_scorer, 2),
                      mics::ErrorCode::backend_unavailable);
}

TEST(Lexical, PrefersPassagesSharingRareQueryTerms) {
    const std::vector<mics::Passage> docs{{"a", "spiders eat insects"}, {"b", "tarantulas are big spiders"},
                                          {"c", "the weather today"}};
    auto index = std::make_shared<const mics::InvertedIndex>(mics::build_index(docs));
    const mics::LexicalPointwiseScorer lexical(index);
    const auto s = lexical.score("big tarantulas", docs);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_GT(s[1], s[0]);
    EXPECT_EQ(s[0], 0.0);
    EXPECT_EQ(s[2], 0.0);
    EXPECT_LE(s[1], 1.0);
    const mics::RankedList list{{{"a", 2.0}, {"b", 1.0}, {"c", 0.5}}};
    EXPECT_EQ(mics::rerank_pointwise("big tarantulas", list, mics::lookup_in(*index), lexical, 3).ids(),
              (Ids{"b", "a", "c"}));
}

TEST(Pairwise, SinglePairFollowsThePreference) {
    const MatrixPreferences p({{{"a", "b"}, 0.1}, {{"b", "a"}, 0.9}});
    const auto out = mics::rerank_pairwise("q", first_stage(), mics::lookup_in(corpus()), p, 2);
    EXPECT_EQ(out.ids(), (Ids{"b", "a", "c", "d"}));
    EXPECT_DOUBLE_EQ(out.entries[0].score, 0.9);
}

TEST(Pairwise, ThreeWayTotalsMatchTheOracle) {
    // c beats everyone, a beats b.
    const std::vector<std::vector<double>> m{{0.0, 0.7, 0.2}, {0.3, 0.0, 0.1}, {0.8, 0.9, 0.0}};
    const Ids ids{"a", "b", "c"};
    std::map<std::pair<std::string, std::string>, double> table;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i != j) {
                table[{ids[i], ids[j]}] = m[i][j];
            }
        }
    }
    const auto out = mics::rerank_pairwise("q", first_stage(), mics::lookup_in(corpus()), MatrixPreferences(table), 3);
    EXPECT_EQ(out.ids(), (Ids{"c", "a", "b", "d"}));
    const auto totals = oracle::preference_totals(m);
    EXPECT_NEAR(out.entries[0].score, totals[2], 1e-12);
    EXPECT_NEAR(out.entries[1].score, totals[0], 1e-12);
    EXPECT_NEAR(out.entries[2].score, totals[1], 1e-12);
}

TEST(Pairwise, ShortHeadsAreIdentity) {
    const MatrixPreferences p({});
    EXPECT_EQ(mics::rerank_pairwise("q", first_stage(), mics::lookup_in(corpus()), p, 1), first_stage());
    EXPECT_EQ(mics::rerank_pairwise("q", first_stage(), mics::lookup_in(corpus()), p, 0), first_stage());
    const mics::RankedList missing{{{"zz", 1.0}}};
    EXPECT_MICS_ERROR(mics::rerank_pairwise("q", missing, mics::lookup_in(corpus()), p, 5), mics::ErrorCode::not_found);
}

TEST(Pairwise, OutOfRangePreferenceIsABackendFailure) {
    const MatrixPreferences p({{{"a", "b"}, 1.5}, {{"b", "a"}, 0.0}});
    EXPECT_MICS_ERROR(mics::rerank_pairwise("q", first_stage(), mics::lookup_in(corpus()), p, 2),
                      mics::ErrorCode::backend_unavailable);
}

TEST(Logistic, SigmoidIsSymmetric) {
    for (double x : {0.0, 0.3, 1.0, 5.0, 40.0, 800.0}) {
        EXPECT_EQ(mics::symmetric_sigmoid(-x), 1.0 - mics::symmetric_sigmoid(x)) << x;
    }
    EXPECT_EQ(mics::symmetric_sigmoid(0.0), 0.5);
}

TEST(Logistic, PreferencesComplementAndFollowScores) {
    auto base = std::make_shared<const TableScorer>(std::map<std::string, double>{{"a", 0.2}, {"b", 1.4}, {"c", 0.9}});
    const mics::LogisticPairwiseScorer logistic(base);
    EXPECT_EQ(logistic.identity(), "logistic(table)");
    const auto out = mics::rerank_pairwise("q", first_stage(), mics::lookup_in(corpus()), logistic, 3);
    EXPECT_EQ(out.ids(), (Ids{"b", "c", "a", "d"}));
    const std::vector<mics::PassagePair> pairs{{{"a", ""}, {"b", ""}}, {{"b", ""}, {"a", ""}}};
    const auto p = logistic.prefer("q", pairs);
    EXPECT_DOUBLE_EQ(p[0] + p[1], 1.0);
}

TEST(Config, PairwiseDepthBoundedByPointwise) {
    EXPECT_NO_THROW((mics::RerankConfig{10, 10}.validate()));
    EXPECT_MICS_ERROR((mics::RerankConfig{5, 10}.validate()), mics::ErrorCode::invalid_arguments);
}

}  // namespace
