#include <counsel/ingest/html.hpp>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

namespace counsel::html {
namespace {

using ::testing::ElementsAre;

std::vector<std::string> texts(Document const &doc, std::string_view selector)
{
	std::vector<std::string> out;
	for (auto n : select(doc, selector))
		out.push_back(text_content(doc, n));
	return out;
}

TEST(HtmlParse, BuildsTreeAndExtractsText)
{
	auto const doc = parse("<html><body><div class='q'>问 <b>一</b></div><div class=\"a\">答</div></body></html>");
	EXPECT_THAT(texts(doc, ".q"), ElementsAre("问 一"));
	EXPECT_THAT(texts(doc, "div.a"), ElementsAre("答"));
}

TEST(HtmlParse, DecodesEntities)
{
	auto const doc = parse("<p>a &amp; b &lt;c&gt; &#20320;&#x597D; &nbsp;x</p>");
	EXPECT_THAT(texts(doc, "p"), ElementsAre("a & b <c> 你好 x"));
}

TEST(HtmlParse, BlockElementsAndBreaksMakeLines)
{
	auto const doc = parse("<div id=x><p>one</p><p>two<br>three</p></div>");
	EXPECT_THAT(texts(doc, "#x"), ElementsAre("one\ntwo\nthree"));
}

TEST(HtmlParse, SkipsScriptStyleAndComments)
{
	auto const doc = parse("<div><script>var a = '<div>';</script><style>p{}</style><!-- c --><span>kept</span></div>");
	EXPECT_THAT(texts(doc, "div"), ElementsAre("kept"));
}

TEST(HtmlParse, ImplicitParagraphAndListClosing)
{
	auto const doc = parse("<ul><li>a<li>b</ul><p>x<p>y");
	EXPECT_THAT(texts(doc, "li"), ElementsAre("a", "b"));
	EXPECT_THAT(texts(doc, "p"), ElementsAre("x", "y"));
}

TEST(HtmlParse, VoidElementsNeedNoClose)
{
	auto const doc = parse("<div><img src=a.png><input type=text><span>t</span></div>");
	EXPECT_THAT(texts(doc, "div > span"), ElementsAre("t"));
}

TEST(HtmlParse, MalformedInputIsFormatError)
{
	EXPECT_THROW(parse("<div><span>x</div>"), FormatError);
	EXPECT_THROW(parse("<div>unclosed"), FormatError);
	EXPECT_THROW(parse("<div class='x>y</div>"), FormatError);
	EXPECT_THROW(parse("<div><!-- never ends</div>"), FormatError);
	EXPECT_THROW(parse("</span>"), FormatError);
}

TEST(HtmlSelect, Combinators)
{
	auto const doc = parse("<div class='post'><section><span class='t'>deep</span></section><span class='t'>direct</span></div>"
						   "<span class='t'>outside</span>");
	EXPECT_THAT(texts(doc, ".post .t"), ElementsAre("deep", "direct"));
	EXPECT_THAT(texts(doc, ".post > .t"), ElementsAre("direct"));
	EXPECT_THAT(texts(doc, "span.t"), ElementsAre("deep", "direct", "outside"));
}

TEST(HtmlSelect, AttributesAndGroups)
{
	auto const doc = parse("<a data-k='v'>1</a><a data-k='w'>2</a><b>3</b><i id=z>4</i>");
	EXPECT_THAT(texts(doc, "a[data-k=v]"), ElementsAre("1"));
	EXPECT_THAT(texts(doc, "a[data-k]"), ElementsAre("1", "2"));
	EXPECT_THAT(texts(doc, "b, #z"), ElementsAre("3", "4"));
}

TEST(HtmlSelect, ResultsAreInDocumentOrder)
{
	auto const doc = parse("<b>1</b><i>2</i><b>3</b>");
	EXPECT_THAT(texts(doc, "i, b"), ElementsAre("1", "2", "3"));
}

TEST(HtmlSelect, BadSelectorIsConfigError)
{
	EXPECT_THROW(parse_selector(""), ConfigError);
	EXPECT_THROW(parse_selector("div >"), ConfigError);
	EXPECT_THROW(parse_selector("a[unterminated"), ConfigError);
}

} // namespace
} // namespace counsel::html
