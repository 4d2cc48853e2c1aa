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


#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mics/conversation.hpp"
#include "support/expect_error.hpp"

namespace {

using mics::ConversationHistory;
using mics::Utterance;

TEST(AppendTurn, FirstTurnGetsIndexOne) {
    ConversationHistory h("t1");
    const auto next = mics::append_turn(h, Utterance::query("tell me about spiders"),
                                        Utterance::clarifying_question("Which spiders?"));
    EXPECT_TRUE(h.empty());  // the input is untouched
    ASSERT_EQ(next.size(), 1u);
    EXPECT_EQ(next.turns()[0].index, 1);
}

TEST(AppendTurn, ThirdTurnGetsIndexThree) {
    ConversationHistory h("t1");
    h = mics::append_turn(h, Utterance::query("q1"), Utterance::passage_list({}));
    h = mics::append_turn(h, Utterance::query("q2"), Utterance::clarifying_question("cq?"));
    h = mics::append_turn(h, Utterance::answer("yes"), Utterance::passage_list({}));
    ASSERT_EQ(h.size(), 3u);
    EXPECT_EQ(h.turns()[2].index, 3);
    EXPECT_EQ(h.last_query()->text(), "q2");
}

TEST(AppendTurn, RoleMismatchIsRejected) {
    EXPECT_MICS_ERROR(Utterance(mics::Role::system, mics::UtteranceKind::query, "x"), mics::ErrorCode::invalid_utterance);
    ConversationHistory h("t1");
    EXPECT_MICS_ERROR(mics::append_turn(h, Utterance::clarifying_question("cq?"), Utterance::passage_list({})),
                      mics::ErrorCode::invalid_utterance);
    EXPECT_MICS_ERROR(mics::append_turn(h, Utterance::query("q"), Utterance::answer("a")), mics::ErrorCode::invalid_utterance);
}

TEST(AppendTurn, OrderingRulesAreEnforced) {
    ConversationHistory h("t1");
    EXPECT_MICS_ERROR(mics::append_turn(h, Utterance::answer("yes"), Utterance::passage_list({})),
                      mics::ErrorCode::invalid_utterance);
    h = mics::append_turn(h, Utterance::query("q1"), Utterance::clarifying_question("cq?"));
    EXPECT_MICS_ERROR(mics::append_turn(h, Utterance::query("q2"), Utterance::passage_list({})),
                      mics::ErrorCode::invalid_utterance);
}

TEST(Utterance, InvariantsHold) {
    EXPECT_MICS_ERROR(Utterance::query("   "), mics::ErrorCode::invalid_utterance);
    EXPECT_MICS_ERROR(Utterance(mics::Role::system, mics::UtteranceKind::passage_list, ""),
                      mics::ErrorCode::invalid_utterance);
    EXPECT_NO_THROW(Utterance::passage_list({}));
}

TEST(Labels, IntegerAndNameMapping) {
    EXPECT_EQ(mics::to_string(mics::UsefulnessLabel::neither), "none");
    EXPECT_EQ(mics::to_string(mics::UsefulnessLabel::both), "both");
    EXPECT_EQ(mics::label_from_int(2), mics::UsefulnessLabel::answer);
    EXPECT_EQ(mics::label_from_int(4), std::nullopt);
    EXPECT_EQ(mics::to_int(mics::UsefulnessLabel::question), 1);
}

TEST(TopicFile, OneTopicTwoTurns) {
    std::istringstream in("t1\t1\tquery\tTell me about spiders.\tpassage_list\t\n"
                          "t1\t2\tquery\tHow big do they get?\tpassage_list\t\tNo.\n");
    const auto topics = mics::parse_topic_file(in);
    ASSERT_EQ(topics.size(), 1u);
    EXPECT_EQ(topics[0].history.size(), 2u);
    EXPECT_EQ(topics[0].answers[0], std::nullopt);
    EXPECT_EQ(topics[0].answers[1], "No.");
}

TEST(TopicFile, EmptyFileGivesNoTopics) {
    std::istringstream in("");
    EXPECT_TRUE(mics::parse_topic_file(in).empty());
}

TEST(TopicFile, NonContiguousTurnsNameTheLine) {
    std::istringstream in("t1\t1\tquery\tq\tpassage_list\t\nt1\t3\tquery\tq\tpassage_list\t\n");
    try {
        mics::parse_topic_file(in);
        FAIL() << "expected a parse error";
    } catch (const mics::ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.code(), mics::ErrorCode::parse);
    }
}

TEST(TopicFile, MalformedLines) {
    std::istringstream few("t1\t1\tquery\n");
    EXPECT_MICS_ERROR(mics::parse_topic_file(few), mics::ErrorCode::parse);
    std::istringstream kind("t1\t1\tbanana\tq\tpassage_list\t\n");
    EXPECT_MICS_ERROR(mics::parse_topic_file(kind), mics::ErrorCode::parse);
    std::istringstream index("t1\tone\tquery\tq\tpassage_list\t\n");
    EXPECT_MICS_ERROR(mics::parse_topic_file(index), mics::ErrorCode::parse);
    std::istringstream order("t1\t1\tanswer\tyes\tpassage_list\t\n");
    EXPECT_MICS_ERROR(mics::parse_topic_file(order), mics::ErrorCode::parse);
}

TEST(TopicFile, RepeatedTopicIsDuplicate) {
    std::istringstream in("t1\t1\tquery\tq\tpassage_list\t\n"
                          "t2\t1\tquery\tq\tpassage_list\t\n"
                          "t1\t2\tquery\tq\tpassage_list\t\n");
    EXPECT_MICS_ERROR(mics::parse_topic_file(in), mics::ErrorCode::duplicate_id);
}

TEST(TopicFile, RoundTripIsByteIdentical) {
    const std::string text = "t1\t1\tquery\tTell me about spiders.\tclarifying_question\tWhich spiders?\n"
                             "t1\t2\tanswer\tThe big ones\tpassage_list\t\n"
                             "t2\t1\tquery\tmaps\tpassage_list\t\tYes.\n";
    std::istringstream in(text);
    EXPECT_EQ(mics::serialize_topics(mics::parse_topic_file(in)), text);
}

}  // namespace
