#include <gtest/gtest.h>

#include "wikimrc/text.hpp"

using namespace wikimrc;
using Words = std::vector<std::string>;

TEST(Tokenize, PeelsTrailingPunctuation) {
  EXPECT_EQ(text::words("Syria on Friday."), (Words{"Syria", "on", "Friday", "."}));
  EXPECT_EQ(text::words("here, said Severn."), (Words{"here", ",", "said", "Severn", "."}));
  EXPECT_EQ(text::words("burning biofuel is:"), (Words{"burning", "biofuel", "is", ":"}));
}

TEST(Tokenize, BracketsStayAttached) {
  EXPECT_EQ(text::words("League (NFL) for"), (Words{"League", "(NFL)", "for"}));
}

TEST(Tokenize, SplitsClitics) {
  EXPECT_EQ(text::words("Polanski's best"), (Words{"Polanski", "'s", "best"}));
  EXPECT_EQ(text::words("don't"), (Words{"do", "n't"}));
}

TEST(Tokenize, KeepsAbbreviations) {
  EXPECT_EQ(text::words("Dr. Smith met J. Doe in the U.S."), (Words{"Dr.", "Smith", "met", "J.", "Doe", "in", "the", "U.S."}));
}

TEST(Tokenize, QuotesPeeled) {
  EXPECT_EQ(text::words("\"ORG\" ."), (Words{"\"", "ORG", "\"", "."}));
}

TEST(Tokenize, ByteOffsetsAndBase) {
  auto t = text::tokenize("ab, cd", 10);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].begin, 10u);
  EXPECT_EQ(t[0].end, 12u);
  EXPECT_EQ(t[1].text, ",");
  EXPECT_EQ(t[1].begin, 12u);
  EXPECT_EQ(t[2].begin, 14u);
}

TEST(Tokenize, ForcedBoundaries) {
  std::vector<std::size_t> cuts{8};
  auto t = text::tokenize("Silicon-based", 0, cuts);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].text, "Silicon-");
  EXPECT_EQ(t[1].text, "based");
}

TEST(Codepoints, RoundTrip) {
  std::string s = "a\xC3\xA9" "b\xE2\x88\x85" "c";  // a é b ∅ c
  EXPECT_EQ(text::byte_to_codepoint(s, 3), 2u);
  EXPECT_EQ(text::codepoint_to_byte(s, 4), 7u);
  auto table = text::codepoint_byte_table(s);
  EXPECT_EQ(table, (std::vector<std::size_t>{0, 1, 3, 4, 7, 8}));
}

TEST(Text, Helpers) {
  EXPECT_EQ(text::trim("  x y \n"), "x y");
  EXPECT_EQ(text::split_whitespace(" a  b\tc "), (Words{"a", "b", "c"}));
  Words w{"a", "b"};
  EXPECT_EQ(text::join(w), "a b");
  EXPECT_TRUE(text::iequals("Japan", "JAPAN"));
  EXPECT_FALSE(text::iequals("Japan", "Japa"));
  EXPECT_EQ(text::title_surface("Mercury (planet)"), "Mercury");
  EXPECT_EQ(text::title_surface("Ashford"), "Ashford");
}

TEST(Abbreviations, Rules) {
  auto r = text::AbbreviationRules::standard();
  EXPECT_TRUE(r.matches("Dr."));
  EXPECT_TRUE(r.matches("U.S."));
  EXPECT_FALSE(r.matches("Friday."));
  EXPECT_FALSE(text::AbbreviationRules::none().matches("J."));
}
