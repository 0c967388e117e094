#include "factalign/text.hpp"

#include <gtest/gtest.h>

using namespace factalign;

TEST(Utf8, DecodeEncodeRoundTrip) {
  const std::string s = "Straße über Ελλάδα";
  EXPECT_EQ(utf8::encode(utf8::decode(s)), s);
  EXPECT_EQ(utf8::length(s), 18u);
}

TEST(Utf8, MalformedBytesBecomeReplacementCharacters) {
  const std::string bad = std::string("a") + char(0xC3) + "b";
  const auto decoded = utf8::decode(bad);
  ASSERT_EQ(decoded.size(), 3u);
  EXPECT_EQ(decoded[1], U'�');
}

TEST(Utf8, SubstrCountsScalarsAndClamps) {
  EXPECT_EQ(utf8::substr("Größe", 1, 4), "röß");
  EXPECT_EQ(utf8::substr("abc", 2, 99), "c");
  EXPECT_EQ(utf8::substr("abc", 5, 9), "");
}

TEST(CaseFold, FoldsLatinGreekCyrillic) {
  EXPECT_EQ(casefold("ÄÖÜ Straße"), "äöü straße");
  EXPECT_EQ(casefold("ΑΒΓ"), "αβγ");
  EXPECT_EQ(casefold("ПРИВЕТ"), "привет");
  EXPECT_TRUE(is_upper(U'Ä'));
  EXPECT_FALSE(is_upper(U'ä'));
}

TEST(NormalizeLabel, TrimsFoldsAndCollapsesWhitespace) {
  EXPECT_EQ(normalize_label("  Anna \t  Müller\n"), "anna müller");
  EXPECT_EQ(normalize_label("   "), "");
}

TEST(Tokenize, KeepsInternalHyphensAndApostrophesWithOffsets) {
  const auto tokens = tokenize_words("Don't re-apply, Ärger!");
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(tokens[0].text, "Don't");
  EXPECT_EQ(tokens[1].text, "re-apply");
  EXPECT_EQ(tokens[2].text, "Ärger");
  EXPECT_EQ(tokens[2].folded, "ärger");
  EXPECT_EQ(tokens[2].span, (Span{16, 21}));
}

TEST(Tokenize, TrailingHyphenIsNotPartOfToken) {
  const auto tokens = tokenize_words("pre- and post");
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(tokens[0].text, "pre");
}

TEST(Stopwords, CoverEnglishAndGerman) {
  EXPECT_TRUE(is_stopword("the"));
  EXPECT_TRUE(is_stopword("und"));
  EXPECT_FALSE(is_stopword("passport"));
}
