#include <gtest/gtest.h>

#include "locaudit/text.hpp"

using namespace locaudit::text;

TEST(Utf8, RoundTripsMultiByteCodePoints) {
    const std::string s = "a\xC3\xA9\xE4\xB8\xAD\xF0\x9F\x98\x80";  // a é 中 😀
    const auto cps = decode_utf8(s);
    ASSERT_EQ(cps.size(), 4u);
    EXPECT_EQ(cps[1], U'é');
    EXPECT_EQ(cps[3], U'\U0001F600');
    EXPECT_EQ(encode_utf8(cps), s);
}

TEST(Utf8, InvalidBytesBecomeReplacementCharacter) {
    const auto cps = decode_utf8("a\xFF" "b\xC3");
    ASSERT_EQ(cps.size(), 4u);
    EXPECT_EQ(cps[1], U'�');
    EXPECT_EQ(cps[3], U'�');
}

TEST(Utf8, LengthCountsCodePoints) {
    EXPECT_EQ(length(""), 0u);
    EXPECT_EQ(length("한국어"), 3u);
}

TEST(Classes, UnicodeWhitespaceAndPunctuation) {
    EXPECT_TRUE(is_whitespace(U'　'));
    EXPECT_TRUE(is_whitespace(U' '));
    EXPECT_FALSE(is_whitespace(U'x'));
    EXPECT_TRUE(is_punctuation(U'،'));  // Arabic comma
    EXPECT_TRUE(is_punctuation(U'。'));
    EXPECT_TRUE(is_punctuation(U'-'));
    EXPECT_FALSE(is_punctuation(U'$'));  // symbol, not punctuation
    EXPECT_TRUE(is_alphabetic(U'한'));
    EXPECT_FALSE(is_alphabetic(U'7'));
}

TEST(FoldCase, FullCaseFolding) {
    EXPECT_EQ(fold_case(U'A'), U"a");
    EXPECT_EQ(fold_case(U'ß'), U"ss");
    EXPECT_EQ(fold_case(U'Σ'), U"σ");
    EXPECT_EQ(fold_case(U"İstanbul").substr(0, 1), U"i");
}

TEST(Whitespace, TrimCollapseSplit) {
    EXPECT_EQ(trim("　 hi \n"), "hi");
    EXPECT_EQ(collapse_whitespace("  a \t b\n\nc  "), "a b c");
    const auto parts = split_whitespace(" one two  three ");
    ASSERT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[1], "two");
    EXPECT_TRUE(split_whitespace("   ").empty());
}
