#include <counsel/corpus.hpp>

#include "test_support.hpp"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <random>

namespace counsel {
namespace {

using testing::TempDir;
using ::testing::ElementsAre;

TEST(ParseCorpus, SplitsOnBlankLines)
{
	auto const c = parse_corpus("first\nline two\n\nsecond\n");
	EXPECT_THAT(texts_of(c), ElementsAre("first\nline two", "second"));
	EXPECT_EQ(c.samples[0].id, "0");
	EXPECT_EQ(c.samples[1].id, "1");
}

TEST(ParseCorpus, CollapsesRunsOfBlankLines)
{
	EXPECT_THAT(texts_of(parse_corpus("\n\na\n\n\n\nb\n\n\n")), ElementsAre("a", "b"));
}

TEST(ParseCorpus, NormalizesLineEndings)
{
	EXPECT_THAT(texts_of(parse_corpus("a\r\nb\r\n\r\nc\rd\r\r")), ElementsAre("a\nb", "c\nd"));
}

TEST(ParseCorpus, WhitespaceOnlyLineIsNotASeparator)
{
	EXPECT_THAT(texts_of(parse_corpus("a\n \nb\n")), ElementsAre("a\n \nb"));
}

TEST(ParseCorpus, EmptyInputGivesEmptyCorpus)
{
	EXPECT_TRUE(parse_corpus("").empty());
	EXPECT_TRUE(parse_corpus("\n\n\n").empty());
}

TEST(ParseCorpus, RejectsInvalidUtf8)
{
	EXPECT_THROW(parse_corpus("ok\n\nbad\xfe\n"), EncodingError);
}

TEST(SerializeCorpus, UsesOneBlankLineAndTrailingNewline)
{
	EXPECT_EQ(serialize_corpus(make_corpus({"a", "b\nc"})), "a\n\nb\nc\n");
	EXPECT_EQ(serialize_corpus(Corpus{}), "");
}

TEST(SerializeCorpus, RejectsTextThatWouldNotRoundTrip)
{
	EXPECT_THROW(serialize_corpus(make_corpus({"a\n\nb"})), FormatError);
	EXPECT_THROW(serialize_corpus(make_corpus({""})), FormatError);
	EXPECT_THROW(serialize_corpus(make_corpus({"a\r"})), FormatError);
	EXPECT_THROW(serialize_corpus(make_corpus({"\na"})), FormatError);
}

TEST(CorpusFile, ReadMissingFileIsIoError)
{
	TempDir dir;
	EXPECT_THROW(read_corpus(dir / "nope.txt"), IoError);
}

TEST(CorpusFile, CustomIdsUseSidecar)
{
	TempDir dir;
	auto c = make_corpus({"x", "y"});
	c.samples[0].id = "q-17";
	c.samples[1].id = "q-18";
	write_corpus(c, dir / "c.txt");
	EXPECT_TRUE(std::filesystem::exists(dir / "c.txt.ids"));
	EXPECT_EQ(read_corpus(dir / "c.txt"), c);

	write_corpus(make_corpus({"x"}), dir / "c.txt");
	EXPECT_FALSE(std::filesystem::exists(dir / "c.txt.ids"));
}

TEST(CorpusFile, SidecarCountMismatchIsFormatError)
{
	TempDir dir;
	write_file(dir / "c.txt", "a\n\nb\n");
	write_file(dir / "c.txt.ids", "only-one\n");
	EXPECT_THROW(read_corpus(dir / "c.txt"), FormatError);
}

TEST(CorpusProperty, WriteReadRoundTripOnRandomCorpora)
{
	TempDir dir;
	std::mt19937_64 rng(20240611);
	for (int round = 0; round < 200; ++round) {
		std::vector<std::string> texts;
		auto const n = testing::below(rng, 12);
		for (std::size_t i = 0; i < n; ++i)
			texts.push_back(testing::random_sample_text(rng));
		auto const c = make_corpus(texts);
		write_corpus(c, dir / "rt.txt");
		auto const back = read_corpus(dir / "rt.txt");
		ASSERT_EQ(back, c) << "round " << round;
		for (auto const &s : back.samples)
			ASSERT_EQ(s.text.find("\n\n"), std::string::npos);
	}
}

TEST(QA, SerializeFormat)
{
	EXPECT_EQ(serialize_qa({"q1", "a1", ""}), "Question: q1\nAnswer: a1");
}

TEST(QA, ParseExamples)
{
	auto const a = parse_qa("Question: q1\nAnswer: a1");
	EXPECT_EQ(a.question, "q1");
	EXPECT_EQ(a.answer, "a1");
	auto const b = parse_qa("Question: q\nAnswer: line1\nline2");
	EXPECT_EQ(b.answer, "line1\nline2");
	EXPECT_THROW(parse_qa("hello"), FormatError);
	EXPECT_THROW(parse_qa("Question: only a question"), FormatError);
}

TEST(QA, SplitsAtFirstAnswerLine)
{
	auto const qa = parse_qa("Question: q\nAnswer: one\nAnswer: two");
	EXPECT_EQ(qa.answer, "one\nAnswer: two");
}

TEST(QA, TrailingWhitespaceTrimmed)
{
	auto const qa = parse_qa("Question: q  \t\nAnswer: a \n");
	EXPECT_EQ(qa.question, "q");
	EXPECT_EQ(qa.answer, "a");
}

TEST(QAProperty, ParseInvertsSerialize)
{
	std::mt19937_64 rng(7);
	for (int i = 0; i < 500; ++i) {
		QAPair qa;
		qa.question = unicode::trim(testing::random_sample_text(rng, 20));
		qa.answer = unicode::trim(testing::random_sample_text(rng, 60));
		if (qa.question.empty() || qa.answer.empty() || qa.question.find('\n') != std::string::npos)
			continue;
		auto const back = parse_qa(serialize_qa(qa));
		ASSERT_EQ(back.question, qa.question);
		ASSERT_EQ(back.answer, qa.answer);
	}
}

} // namespace
} // namespace counsel
