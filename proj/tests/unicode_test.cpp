#include <counsel/error.hpp>
#include <counsel/tokenize.hpp>
#include <counsel/unicode.hpp>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

namespace counsel {
namespace {

using ::testing::ElementsAre;

TEST(Utf8, AcceptsWellFormedText)
{
	EXPECT_FALSE(unicode::first_invalid_byte("plain ascii").has_value());
	EXPECT_FALSE(unicode::first_invalid_byte("心理咨询 😀").has_value());
	EXPECT_FALSE(unicode::first_invalid_byte("").has_value());
}

TEST(Utf8, ReportsOffsetOfFirstBadByte)
{
	EXPECT_EQ(unicode::first_invalid_byte("ab\xff"), 2u);
	EXPECT_EQ(unicode::first_invalid_byte("\xe5\xbf"), 0u); // truncated sequence
	EXPECT_EQ(unicode::first_invalid_byte("\xc0\x80"), 0u); // overlong NUL
	EXPECT_EQ(unicode::first_invalid_byte(std::string("a\0b", 3)), 1u);
}

TEST(Utf8, RequireValidThrowsEncodingError)
{
	try {
		unicode::require_valid_utf8("xyz\x80");
		FAIL() << "expected EncodingError";
	} catch (EncodingError const &e) {
		EXPECT_EQ(e.offset(), 3u);
	}
}

TEST(Utf8, CodePointsRoundTrip)
{
	std::string const text = "a中😀é";
	auto const cps = unicode::code_points(text);
	ASSERT_EQ(cps.size(), 4u);
	EXPECT_EQ(cps[1], U'中');
	EXPECT_EQ(cps[2], U'😀');
	std::string back;
	for (auto cp : cps)
		unicode::append_utf8(back, cp);
	EXPECT_EQ(back, text);
	EXPECT_EQ(unicode::scalar_count(text), 4u);
}

TEST(Unicode, ClassifiesPunctuationAndSpace)
{
	EXPECT_TRUE(unicode::is_punct(U'，'));
	EXPECT_TRUE(unicode::is_punct(U'!'));
	EXPECT_TRUE(unicode::is_punct(U'。'));
	EXPECT_FALSE(unicode::is_punct(U'中'));
	EXPECT_TRUE(unicode::is_space(U'　'));
	EXPECT_TRUE(unicode::is_space(U'\n'));
	EXPECT_FALSE(unicode::is_horizontal_space(U'\n'));
}

TEST(Unicode, NfcComposes)
{
	EXPECT_EQ(unicode::nfc("e\xcc\x81"), "\xc3\xa9");
	EXPECT_EQ(unicode::nfc("已经是NFC"), "已经是NFC");
}

TEST(Unicode, TrimStripsUnicodeWhitespace)
{
	EXPECT_EQ(unicode::trim("　 你好 \n"), "你好");
	EXPECT_EQ(unicode::trim(" \t "), "");
	EXPECT_EQ(unicode::trim("a b"), "a b");
}

TEST(Regex, ReplaceAllCountsMatches)
{
	unicode::Regex re("[0-9]+");
	std::string s = "a1b22c333";
	EXPECT_EQ(re.replace_all(s, "#"), 3u);
	EXPECT_EQ(s, "a#b#c#");
	EXPECT_TRUE(re.search("x9"));
	EXPECT_FALSE(re.search("xyz"));
}

TEST(Regex, BadPatternIsConfigError)
{
	EXPECT_THROW(unicode::Regex("(unclosed"), ConfigError);
}

TEST(Regex, CopiesAreIndependent)
{
	unicode::Regex a("b+");
	unicode::Regex b = a;
	std::string s = "abbbc";
	EXPECT_EQ(b.replace_all(s, ""), 1u);
	EXPECT_EQ(s, "ac");
	EXPECT_EQ(b.pattern(), a.pattern());
}

TEST(Tokenize, CharModeKeepsPunctuationDropsWhitespace)
{
	EXPECT_THAT(tokenize("我 好，\n吗", TokenizerMode::character), ElementsAre("我", "好", "，", "吗"));
	EXPECT_TRUE(tokenize(" \t\n", TokenizerMode::character).empty());
}

TEST(Tokenize, WordModeSegmentsLatinAndKeepsPunctuation)
{
	EXPECT_THAT(tokenize("hello, world!", TokenizerMode::word), ElementsAre("hello", ",", "world", "!"));
}

TEST(Tokenize, WordModeSegmentsChinese)
{
	auto const toks = tokenize("我很焦虑。", TokenizerMode::word);
	std::string joined;
	for (auto const &t : toks) {
		EXPECT_FALSE(t.empty());
		joined += t;
	}
	EXPECT_EQ(joined, "我很焦虑。");
	EXPECT_EQ(toks.back(), "。");
}

TEST(Tokenize, DetokenizeInvertsOnWhitespaceFreeText)
{
	auto const toks = tokenize("心理咨询", TokenizerMode::character);
	EXPECT_EQ(detokenize(toks, TokenizerMode::character), "心理咨询");
	EXPECT_EQ(detokenize({"a", "b"}, TokenizerMode::word), "a b");
}

TEST(Tokenize, ModeNames)
{
	EXPECT_EQ(parse_tokenizer_mode("char"), TokenizerMode::character);
	EXPECT_EQ(parse_tokenizer_mode("unicode"), TokenizerMode::word);
	EXPECT_EQ(to_string(TokenizerMode::character), "char");
	EXPECT_EQ(to_string(TokenizerMode::word), "unicode");
	EXPECT_THROW(parse_tokenizer_mode("bpe"), ConfigError);
}

} // namespace
} // namespace counsel
