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


#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <gtest/gtest.h>

#include "mics/mics.hpp"
#include "support/expect_error.hpp"
#include "support/world.hpp"

namespace {

using mics::Mode;
using mics::Session;
using mics::SessionState;
using mics::UsefulnessLabel;

class Pipeline : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        world_ = new world::World(world::build());
        engine_ = new mics::Engine(world::engine(*world_));
    }
    static void TearDownTestSuite() {
        delete engine_;
        delete world_;
    }

    static const world::World& w() { return *world_; }
    static const mics::Engine& engine() { return *engine_; }

    static world::World* world_;
    static mics::Engine* engine_;
};

world::World* Pipeline::world_ = nullptr;
mics::Engine* Pipeline::engine_ = nullptr;

std::string first_query(int topic) {
    const auto tw = world::topic_words(topic);
    return "tell me about " + tw.c + " " + tw.a;
}

TEST(Modes, ParseAndPrint) {
    EXPECT_EQ(mics::parse_mode("mi_clf"), Mode::mi_clf);
    EXPECT_EQ(mics::parse_mode("No_Mi"), Mode::no_mi);
    EXPECT_EQ(mics::to_string(Mode::mi_all), "MI_ALL");
    EXPECT_MICS_ERROR(mics::parse_mode("sometimes"), mics::ErrorCode::invalid_arguments);
}

TEST(EngineSetup, NeedsAnIndex) {
    EXPECT_MICS_ERROR(mics::Engine(mics::EngineParts{}), mics::ErrorCode::config);
}

TEST_F(Pipeline, NoMiTurnRetrievesDirectly) {
    Session s("s", Mode::no_mi);
    auto reply = s.submit_query(engine(), first_query(3));
    ASSERT_TRUE(std::holds_alternative<mics::TurnResult>(reply));
    const auto& r = std::get<mics::TurnResult>(reply);
    EXPECT_EQ(r.query_state.resolved, first_query(3));
    EXPECT_EQ(r.query_state.expanded, r.query_state.resolved);
    EXPECT_FALSE(r.label.has_value());
    EXPECT_FALSE(r.question_asked.has_value());
    EXPECT_FALSE(r.ranking.empty());
    EXPECT_TRUE(r.ranking.has_unique_ids());
    EXPECT_EQ(r.trace.used.at("first_stage"), "bm25+rm3");
    EXPECT_EQ(r.trace.used.at("pointwise"), "lexical-tfidf");
    EXPECT_EQ(r.trace.used.at("pairwise"), "logistic(lexical-tfidf)");
    EXPECT_EQ(s.history().size(), 1u);
    EXPECT_EQ(s.state(), SessionState::awaiting_query);
    const auto& kept = s.history().turns()[0].system.passages();
    ASSERT_TRUE(kept.has_value());
    EXPECT_EQ(kept->size(), std::min<std::size_t>(r.ranking.size(), engine().params().history_passages));
}

TEST_F(Pipeline, SecondTurnIsResolvedAgainstTheFirst) {
    Session s("s", Mode::no_mi);
    s.submit_query(engine(), first_query(4));
    const auto tw = world::topic_words(4);
    const auto r = std::get<mics::TurnResult>(s.submit_query(engine(), "what else about " + tw.a));
    EXPECT_EQ(r.query_state.resolved, "what else about " + tw.a + " " + tw.c);
    EXPECT_EQ(s.history().size(), 2u);
    EXPECT_EQ(s.history().turns()[1].index, 2);
}

TEST_F(Pipeline, MixedInitiativeCycleAppendsTwoTurns) {
    Session s("s", Mode::mi_all);
    auto reply = s.submit_query(engine(), first_query(12));
    ASSERT_TRUE(std::holds_alternative<mics::ClarifyingQuestion>(reply));
    EXPECT_EQ(std::get<mics::ClarifyingQuestion>(reply).id, "Q12");
    EXPECT_EQ(s.state(), SessionState::awaiting_answer);
    EXPECT_TRUE(s.history().empty());

    const auto tw = world::topic_words(12);
    const auto r = s.submit_answer(engine(), "No, I want to know about " + tw.r1 + " " + tw.r2);
    EXPECT_EQ(r.query_state.label, UsefulnessLabel::both);
    EXPECT_FALSE(r.label.has_value());
    EXPECT_NE(r.query_state.expanded.find(tw.d1), std::string::npos);
    EXPECT_NE(r.query_state.expanded.find(tw.r1), std::string::npos);
    ASSERT_EQ(s.history().size(), 2u);
    EXPECT_EQ(s.history().turns()[0].system.kind(), mics::UtteranceKind::clarifying_question);
    EXPECT_EQ(s.history().turns()[1].user.kind(), mics::UtteranceKind::answer);
    EXPECT_EQ(s.state(), SessionState::awaiting_query);
    EXPECT_FALSE(s.pending().has_value());
}

TEST_F(Pipeline, ClassifierNoneKeepsTheResolvedQuery) {
    Session clf("a", Mode::mi_clf);
    clf.submit_query(engine(), first_query(2));
    const auto r = clf.submit_answer(engine(), "No.");
    EXPECT_EQ(r.label, UsefulnessLabel::neither);
    EXPECT_EQ(r.query_state.expanded, r.query_state.resolved);
    EXPECT_EQ(r.trace.used.at("classify"), "builtin-linear");

    Session plain("b", Mode::no_mi);
    const auto base = std::get<mics::TurnResult>(plain.submit_query(engine(), first_query(2)));
    EXPECT_EQ(r.ranking, base.ranking);
}

TEST_F(Pipeline, WrongStateFailsWithoutChangingTheSession) {
    Session no_mi("s", Mode::no_mi);
    EXPECT_MICS_ERROR(no_mi.submit_answer(engine(), "yes"), mics::ErrorCode::state);
    EXPECT_MICS_ERROR(no_mi.submit_query(engine(), "   "), mics::ErrorCode::invalid_arguments);
    EXPECT_TRUE(no_mi.history().empty());

    Session mi("m", Mode::mi_clf);
    EXPECT_MICS_ERROR(mi.submit_answer(engine(), "yes"), mics::ErrorCode::state);
    mi.submit_query(engine(), first_query(1));
    const auto pending = mi.pending()->question;
    EXPECT_MICS_ERROR(mi.submit_query(engine(), "another query"), mics::ErrorCode::state);
    EXPECT_MICS_ERROR(mi.submit_answer(engine(), ""), mics::ErrorCode::invalid_arguments);
    EXPECT_EQ(mi.state(), SessionState::awaiting_answer);
    EXPECT_EQ(mi.pending()->question, pending);
    EXPECT_TRUE(mi.history().empty());
}

TEST_F(Pipeline, RestoredSessionMustBeConsistent) {
    EXPECT_MICS_ERROR(Session("s", Mode::no_mi, mics::ConversationHistory("s"), SessionState::awaiting_answer, std::nullopt),
                      mics::ErrorCode::state);
    EXPECT_MICS_ERROR(Session("s", Mode::mi_all, mics::ConversationHistory("s"), SessionState::awaiting_answer, std::nullopt),
                      mics::ErrorCode::state);
}

TEST_F(Pipeline, MiClfWithoutClassifierIsAContractError) {
    mics::EngineParts parts;
    parts.index = std::make_shared<const mics::InvertedIndex>(mics::build_index(w().corpus));
    parts.pool = mics::QuestionPool(w().pool);
    const mics::Engine bare(std::move(parts));
    EXPECT_FALSE(bare.can_classify());
    Session s("s", Mode::mi_clf);
    s.submit_query(bare, first_query(0));
    EXPECT_MICS_ERROR(s.submit_answer(bare, "No."), mics::ErrorCode::contract);
    EXPECT_EQ(s.state(), SessionState::awaiting_answer);
}

TEST_F(Pipeline, BatchRunsAreByteIdentical) {
    for (auto mode : {Mode::no_mi, Mode::mi_all, Mode::mi_clf}) {
        const auto a = mics::run_batch(engine(), w().topics, mode);
        const auto b = mics::run_batch(engine(), w().topics, mode);
        EXPECT_EQ(mics::eval::write_run(a.records), mics::eval::write_run(b.records)) << mics::to_string(mode);
        EXPECT_EQ(a.metadata, b.metadata);
        EXPECT_EQ(a.metadata.size(), 2u * world::kTopics);
    }
}

TEST_F(Pipeline, AllNegativeAnswersReproduceNoMi) {
    auto topics = w().topics;
    for (auto& t : topics) {
        for (auto& a : t.answers) {
            a = "No.";
        }
    }
    const auto clf = mics::run_batch(engine(), topics, Mode::mi_clf, "x");
    const auto base = mics::run_batch(engine(), topics, Mode::no_mi, "x");
    EXPECT_EQ(mics::eval::write_run(clf.records), mics::eval::write_run(base.records));
    for (const auto& m : clf.metadata) {
        EXPECT_EQ(m.label, UsefulnessLabel::neither);
    }
}

TEST_F(Pipeline, BatchInputErrors) {
    auto topics = std::vector<mics::ScriptedTopic>{w().topics[0]};
    topics[0].answers[1].reset();
    EXPECT_NO_THROW(mics::run_batch(engine(), topics, Mode::no_mi));
    EXPECT_MICS_ERROR(mics::run_batch(engine(), topics, Mode::mi_all), mics::ErrorCode::input);

    mics::ConversationHistory h("odd");
    h = mics::append_turn(h, mics::Utterance::query("q"), mics::Utterance::clarifying_question("cq?"));
    h = mics::append_turn(h, mics::Utterance::answer("yes"), mics::Utterance::passage_list({}));
    EXPECT_MICS_ERROR(mics::run_batch(engine(), {mics::ScriptedTopic{h, {"a", "b"}}}, Mode::no_mi), mics::ErrorCode::input);
}

TEST_F(Pipeline, MetadataRows) {
    const auto run = mics::run_batch(engine(), {w().topics[0]}, Mode::mi_clf);
    std::ostringstream out;
    mics::write_metadata(out, run.metadata);
    std::istringstream in(out.str());
    const auto lines = mics::read_lines(in);
    ASSERT_EQ(lines.size(), 2u);
    const auto fields = mics::split(lines[0], '\t');
    ASSERT_EQ(fields.size(), 5u);
    EXPECT_EQ(fields[0], "T00");
    EXPECT_EQ(fields[1], "1");
    EXPECT_EQ(fields[2], "MI_CLF");
    EXPECT_EQ(fields[3], "0");
    EXPECT_NE(fields[4].find("classify=builtin-linear"), std::string::npos);

    const auto plain = mics::run_batch(engine(), {w().topics[0]}, Mode::no_mi);
    std::ostringstream out2;
    mics::write_metadata(out2, plain.metadata);
    EXPECT_NE(out2.str().find("\tNO_MI\t-\t"), std::string::npos);
}

TEST_F(Pipeline, RunRowsAreCanonical) {
    const auto run = mics::run_batch(engine(), w().topics, Mode::mi_all, "tag");
    std::istringstream lines(mics::eval::write_run(run.records));
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        EXPECT_TRUE(mics::eval::is_canonical_run_line(line)) << line;
        ++n;
    }
    EXPECT_EQ(n, run.records.size());
    EXPECT_EQ(run.turns.count("T19_2"), 1u);
}

TEST_F(Pipeline, SessionsRunConcurrently) {
    const auto serial = mics::run_batch(engine(), w().topics, Mode::mi_clf);
    std::vector<mics::TurnResult> results(world::kTopics);
    std::vector<std::thread> threads;
    for (int t = 0; t < world::kTopics; ++t) {
        threads.emplace_back([&, t] {
            Session s("s" + std::to_string(t), Mode::mi_clf);
            const auto& topic = w().topics[static_cast<std::size_t>(t)];
            s.submit_query(engine(), topic.history.turns()[0].user.text());
            results[static_cast<std::size_t>(t)] = s.submit_answer(engine(), *topic.answers[0]);
        });
    }
    for (auto& th : threads) {
        th.join();
    }
    for (int t = 0; t < world::kTopics; ++t) {
        EXPECT_EQ(results[static_cast<std::size_t>(t)].ranking,
                  serial.turns.at(mics::topic_turn_id(world::topic_id(t), 1)).ranking);
    }
}

TEST_F(Pipeline, UnreachableBackendDegradesToTheFallback) {
    mics::EngineParts parts;
    parts.index = std::make_shared<const mics::InvertedIndex>(mics::build_index(w().corpus));
    parts.pool = mics::QuestionPool(w().pool);
    parts.pointwise = std::make_shared<const mics::remote::RemotePointwiseScorer>("http://127.0.0.1:1/score", 0.5);
    parts.similarity = std::make_shared<const mics::remote::RemoteEmbeddingScorer>("http://127.0.0.1:1/embed", 0.5);
    const mics::Engine degraded(std::move(parts));

    Session s("s", Mode::mi_all);
    const auto q = std::get<mics::ClarifyingQuestion>(s.submit_query(degraded, first_query(5)));
    EXPECT_EQ(q.id, "Q05");
    const auto r = s.submit_answer(degraded, "No.");
    EXPECT_EQ(r.trace.used.at("pointwise"), "lexical-tfidf(degraded from remote-score(http://127.0.0.1:1/score))");
    EXPECT_EQ(r.trace.used.at("similarity"), "tfidf-cosine(degraded from remote-embed(http://127.0.0.1:1/embed))");

    Session ref("r", Mode::mi_all);
    ref.submit_query(engine(), first_query(5));
    EXPECT_EQ(r.ranking, ref.submit_answer(engine(), "No.").ranking);
}

TEST_F(Pipeline, Rm3CanBeSwitchedOff) {
    mics::EngineParts parts;
    parts.index = std::make_shared<const mics::InvertedIndex>(mics::build_index(w().corpus));
    parts.pool = mics::QuestionPool(w().pool);
    parts.params.rm3_enabled = false;
    parts.params.history_passages = 2;
    const mics::Engine plain(std::move(parts));
    Session s("s", Mode::no_mi);
    const auto r = std::get<mics::TurnResult>(s.submit_query(plain, first_query(7)));
    EXPECT_EQ(r.trace.used.at("first_stage"), "bm25");
    EXPECT_EQ(s.history().turns()[0].system.passages()->size(), 2u);
}

}  // namespace
