#include <gtest/gtest.h>

#include "wikimrc/metrics.hpp"

using namespace wikimrc;
using namespace wikimrc::metrics;
using tasks::Entity;

TEST(Normalize, SquadRules) {
  EXPECT_EQ(normalize_answer("The  Carolina Panthers!"), "carolina panthers");
  EXPECT_EQ(normalize_answer("an apple, a pear"), "apple pear");
  EXPECT_EQ(normalize_answer("Theory"), "theory");
  EXPECT_EQ(normalize_answer("..."), "");
}

TEST(Eqa, F1AndExactMatch) {
  EXPECT_DOUBLE_EQ(token_f1("Carolina Panthers", "the Carolina Panthers"), 1.0);
  // pred {denver, broncos, team}, gold {broncos}: P=1/3, R=1
  EXPECT_NEAR(token_f1("Denver Broncos team", "Broncos"), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(token_f1("x", "y"), 0.0);
  EXPECT_DOUBLE_EQ(token_f1("the", "a"), 1.0);  // both normalize to nothing
  EXPECT_DOUBLE_EQ(token_f1("the", "x"), 0.0);
  std::vector<std::string> golds{"Broncos", "Denver Broncos"};
  auto s = eqa_score("Denver Broncos", golds);
  EXPECT_DOUBLE_EQ(s.em, 1.0);
  EXPECT_DOUBLE_EQ(s.f1, 1.0);
  EXPECT_THROW(eqa_score("x", {}), InputError);
}

TEST(Ner, MicroCounts) {
  std::vector<Entity> pred{{0, 0, "LOC"}, {2, 3, "ORG"}, {5, 5, "PER"}, {5, 5, "PER"}};
  std::vector<Entity> gold{{0, 0, "LOC"}, {2, 3, "MISC"}, {7, 7, "PER"}};
  auto c = ner_counts(pred, gold);
  EXPECT_EQ(c.true_positive, 1u);
  EXPECT_EQ(c.predicted, 3u);  // duplicate collapsed
  EXPECT_EQ(c.gold, 3u);
  auto r = c.prf();
  EXPECT_NEAR(r.f1, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(ner_score({}, gold).f1, 0.0);
  EXPECT_EQ(ner_score({}, {}).precision, 0.0);
}

TEST(Cls, Accuracy) {
  std::vector<std::string> p{"A", "B", "C"}, g{"A", "C", "C"};
  EXPECT_NEAR(cls_score(p, g), 2.0 / 3.0, 1e-12);
  EXPECT_THROW(cls_score(p, std::vector<std::string>{"A"}), InputError);
}

TEST(Rationales, SheetAndFraction) {
  std::vector<Rationale> rs{{"a", {"good", "film"}, 0, 0, "Positive"}, {"b", {"bad", "plot", "."}, 0, 1, "Negative"}};
  auto sheet = rationale_report(rs);
  EXPECT_FALSE(sheet.fraction);
  EXPECT_EQ(sheet.sheet[1]["highlighted"], "[[bad plot]] .");
  EXPECT_TRUE(sheet.sheet[0]["reasonable"].is_null());
  auto rep = rationale_report(rs, std::map<std::string, bool>{{"a", true}, {"b", false}});
  ASSERT_TRUE(rep.fraction);
  EXPECT_DOUBLE_EQ(*rep.fraction, 0.5);
  EXPECT_THROW(rationale_report(rs, std::map<std::string, bool>{{"a", true}}), InputError);
  EXPECT_THROW(rationale_report(rs, std::map<std::string, bool>{{"a", true}, {"b", true}, {"z", true}}), InputError);
  rs.push_back(rs[0]);
  EXPECT_THROW(rationale_report(rs), InputError);
}

TEST(Report, DisplayIsPercent) {
  EvalReport r;
  r.task_kind = "ner";
  r.set("f1", 4.0 / 9.0);
  auto j = r.to_json();
  EXPECT_DOUBLE_EQ(j["display"]["f1"].get<double>(), 44.44);
  EXPECT_EQ(r.get("f1"), 4.0 / 9.0);
  EXPECT_EQ(r.get("em"), std::nullopt);
}
