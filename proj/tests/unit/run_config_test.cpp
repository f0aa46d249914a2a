#include <gtest/gtest.h>

#include "wikimrc/run_config.hpp"

using namespace wikimrc;

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.window = 3;
  c.strategy = "c-div";
  c.p = 5;
  c.dev_entities = 12;
  c.learning_rate = 0.01;
  c.dump = "x.xml";
  auto back = config_from_json(nlohmann::json::parse(config_to_json(c).dump()));
  EXPECT_EQ(back, c);
}

TEST(RunConfig, PartialOverlaysBase) {
  RunConfig base;
  base.seed = 9;
  auto c = config_from_json(nlohmann::json::parse(R"({"n_ans": 3, "dev_entities": null})"), base);
  EXPECT_EQ(c.n_ans, 3u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_FALSE(c.dev_entities);
}

TEST(RunConfig, RejectsUnknownAndMistyped) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"windw": 2})")), InputError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"window": "two"})")), InputError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse("[1]")), InputError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), InputError);
}

TEST(RunConfig, BuilderAndDemoViews) {
  RunConfig c;
  c.window = 4;
  c.min_query_words = 12;
  c.strategy = "rel-top-p";
  c.p = 3;
  auto b = c.builder();
  EXPECT_EQ(b.window, 4u);
  EXPECT_EQ(b.query_min_words, 12u);
  EXPECT_EQ(b.strategy.kind, corpus::StrategyKind::RelevanceTopP);
  EXPECT_EQ(b.dev_definition_articles, 0u);
  c.strategy = "bogus";
  EXPECT_THROW(c.builder(), InputError);
  auto d = c.demo();
  EXPECT_EQ(d.examples, 50u);
  EXPECT_EQ(d.unanswerable, 20u);
}
