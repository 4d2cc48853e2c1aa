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


#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <gtest/gtest.h>

#include "mics/mics.hpp"
#include "support/expect_error.hpp"

namespace {

namespace fs = std::filesystem;

mics::EngineConfig parse(const std::string& text, const fs::path& base = {}) {
    std::istringstream in(text);
    return mics::parse_config(in, base);
}

TEST(Config, DefaultsMatchTheRecommendedSettings) {
    const auto c = parse("index = x.idx\n");
    EXPECT_EQ(c.index, fs::path("x.idx"));
    EXPECT_EQ(c.mode, mics::Mode::no_mi);
    EXPECT_DOUBLE_EQ(c.params.bm25.k1, 0.95);
    EXPECT_DOUBLE_EQ(c.params.bm25.b, 0.45);
    EXPECT_TRUE(c.params.rm3_enabled);
    EXPECT_EQ(c.params.rm3.fb_docs, 10u);
    EXPECT_EQ(c.params.rm3.fb_terms, 10u);
    EXPECT_DOUBLE_EQ(c.params.rm3.lambda, 0.5);
    EXPECT_EQ(c.params.rerank.pointwise_depth, 1000u);
    EXPECT_EQ(c.params.rerank.pairwise_depth, 50u);
    EXPECT_EQ(c.run_id, "mics");
    EXPECT_FALSE(c.rewrite_endpoint);
}

TEST(Config, ParsesEveryKind) {
    const auto c = parse(
        "# comment\n"
        "index = a.idx   # trailing\n"
        "\n"
        "mode = MI_ALL\n"
        "bm25.k1 = 1.2\n"
        "rm3.enabled = off\n"
        "rerank.pairwise_depth = 20\n"
        "backend_serial = yes\n"
        "score_endpoint = http://127.0.0.1:9/score\n"
        "run_id = demo\n",
        "/etc/mics");
    EXPECT_EQ(c.index, fs::path("/etc/mics/a.idx"));
    EXPECT_EQ(c.mode, mics::Mode::mi_all);
    EXPECT_DOUBLE_EQ(c.params.bm25.k1, 1.2);
    EXPECT_FALSE(c.params.rm3_enabled);
    EXPECT_EQ(c.params.rerank.pairwise_depth, 20u);
    EXPECT_TRUE(c.backend_serial);
    EXPECT_EQ(c.score_endpoint, "http://127.0.0.1:9/score");
    EXPECT_EQ(c.run_id, "demo");
}

TEST(Config, AbsolutePathsAreKept) {
    EXPECT_EQ(parse("index = /tmp/a.idx\n", "/etc").index, fs::path("/tmp/a.idx"));
}

TEST(Config, MalformedLinesAreConfigErrors) {
    EXPECT_MICS_ERROR(parse("index\n"), mics::ErrorCode::config);
    EXPECT_MICS_ERROR(parse("index =\n"), mics::ErrorCode::config);
    EXPECT_MICS_ERROR(parse("colour = red\n"), mics::ErrorCode::config);
    EXPECT_MICS_ERROR(parse("bm25.k1 = fast\n"), mics::ErrorCode::config);
    EXPECT_MICS_ERROR(parse("rm3.fb_docs = 1.5\n"), mics::ErrorCode::config);
    EXPECT_MICS_ERROR(parse("rm3.enabled = maybe\n"), mics::ErrorCode::config);
    EXPECT_MICS_ERROR(parse("mode = sometimes\n"), mics::ErrorCode::invalid_arguments);
}

class ConfigValidate : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("mics_config_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
        std::ofstream(dir_ / "x.idx") << "";
    }
    void TearDown() override { fs::remove_all(dir_); }

    mics::EngineConfig valid() const {
        mics::EngineConfig c;
        c.index = dir_ / "x.idx";
        return c;
    }

    fs::path dir_;
};

TEST_F(ConfigValidate, AcceptsDefaults) { EXPECT_NO_THROW(valid().validate()); }

TEST_F(ConfigValidate, RejectsOutOfRangeSettings) {
    auto expect_bad = [&](auto change) {
        auto c = valid();
        change(c);
        EXPECT_MICS_ERROR(c.validate(), mics::ErrorCode::config);
    };
    expect_bad([](auto& c) { c.params.bm25.k1 = 0.0; });
    expect_bad([](auto& c) { c.params.bm25.b = 1.5; });
    expect_bad([](auto& c) { c.params.rm3.lambda = -0.1; });
    expect_bad([](auto& c) { c.params.rm3.fb_docs = 0; });
    expect_bad([](auto& c) { c.params.rm3.fb_terms = 0; });
    expect_bad([](auto& c) { c.params.rerank.pairwise_depth = 2000; });
    expect_bad([](auto& c) { c.params.rerank.pointwise_depth = 0; });
    expect_bad([](auto& c) { c.backend_timeout = 0.0; });
    expect_bad([](auto& c) { c.folds = 1; });
    expect_bad([](auto& c) { c.run_id = "two words"; });
    expect_bad([](auto& c) { c.index.clear(); });
}

TEST_F(ConfigValidate, MissingFilesAreNotFound) {
    auto c = valid();
    c.pool = dir_ / "nope.tsv";
    EXPECT_MICS_ERROR(c.validate(), mics::ErrorCode::not_found);
    c = valid();
    c.index = dir_ / "nope.idx";
    EXPECT_MICS_ERROR(c.validate(), mics::ErrorCode::not_found);
    EXPECT_MICS_ERROR(mics::load_config(dir_ / "nope.conf"), mics::ErrorCode::not_found);
}

TEST_F(ConfigValidate, BadEndpointFailsAtBuild) {
    std::ofstream(dir_ / "c.tsv") << "p1\tspiders spin webs\n";
    {
        std::ifstream in(dir_ / "c.tsv");
        std::ofstream out(dir_ / "x.idx", std::ios::binary);
        mics::build_index(mics::read_corpus(in)).write(out);
    }
    auto c = valid();
    c.rewrite_endpoint = "ftp://host/x";
    EXPECT_MICS_ERROR(mics::build_engine(c), mics::ErrorCode::config);
}

TEST(DemoConfig, BuildsAWorkingEngine) {
    const auto c = mics::load_config(fs::path(MICS_DATA_DIR) / "engine.conf");
    EXPECT_EQ(c.index, fs::path(MICS_DATA_DIR) / "demo.idx");
    EXPECT_EQ(c.mode, mics::Mode::mi_clf);
    const auto engine = mics::build_engine(c);
    EXPECT_TRUE(engine.can_classify());
    EXPECT_GT(engine.index().doc_count(), 0u);

    mics::Session s("demo", c.mode);
    const auto q = std::get<mics::ClarifyingQuestion>(s.submit_query(engine, "Tell me about tarantulas."));
    EXPECT_EQ(q.id, "q01");
    const auto r = s.submit_answer(engine, "No, I want to know how big they get.");
    ASSERT_FALSE(r.ranking.entries.empty());
    EXPECT_EQ(r.ranking.entries.front().id.substr(0, 2), "sp");
}

}  // namespace
