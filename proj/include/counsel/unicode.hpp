#ifndef COUNSEL_UNICODE_HPP
#define COUNSEL_UNICODE_HPP

// Thin UTF-8 helpers over ICU. Everything in the toolkit stores text as
// UTF-8 std::string; conversion to ICU's UTF-16 happens only inside here.

#include <counsel/error.hpp>

#include <unicode/brkiter.h>
#include <unicode/normalizer2.h>
#include <unicode/regex.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace counsel::unicode {

/// Byte offset of the first malformed sequence or NUL byte, if any.
inline std::optional<std::size_t> first_invalid_byte(std::string_view text)
{
	auto const *s = reinterpret_cast<uint8_t const *>(text.data());
	int32_t const length = static_cast<int32_t>(text.size());
	int32_t i = 0;
	while (i < length) {
		int32_t const start = i;
		UChar32 c;
		U8_NEXT(s, i, length, c);
		if (c < 0 || c == 0)
			return static_cast<std::size_t>(start);
	}
	return std::nullopt;
}

inline void require_valid_utf8(std::string_view text)
{
	if (auto offset = first_invalid_byte(text)) {
		auto const what = text[*offset] == '\0' ? "NUL byte" : "invalid UTF-8";
		throw EncodingError(what, *offset);
	}
}

/// Decodes valid UTF-8 into code points. Malformed input yields U+FFFD.
inline std::vector<char32_t> code_points(std::string_view text)
{
	std::vector<char32_t> out;
	out.reserve(text.size());
	auto const *s = reinterpret_cast<uint8_t const *>(text.data());
	int32_t const length = static_cast<int32_t>(text.size());
	int32_t i = 0;
	while (i < length) {
		UChar32 c;
		U8_NEXT(s, i, length, c);
		out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
	}
	return out;
}

inline std::size_t scalar_count(std::string_view text)
{
	std::size_t n = 0;
	for (char ch : text)
		if ((static_cast<unsigned char>(ch) & 0xC0) != 0x80)
			++n;
	return n;
}

inline void append_utf8(std::string &out, char32_t cp)
{
	uint8_t buf[U8_MAX_LENGTH];
	int32_t len = 0;
	UBool error = false;
	U8_APPEND(buf, len, U8_MAX_LENGTH, static_cast<UChar32>(cp), error);
	if (error)
		throw EncodingError("unencodable code point", 0);
	out.append(reinterpret_cast<char const *>(buf), static_cast<std::size_t>(len));
}

inline std::string to_utf8(char32_t cp)
{
	std::string out;
	append_utf8(out, cp);
	return out;
}

inline std::string to_utf8(icu::UnicodeString const &s)
{
	std::string out;
	s.toUTF8String(out);
	return out;
}

inline icu::UnicodeString from_utf8(std::string_view text)
{
	return icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
}

inline bool is_punct(char32_t cp) { return u_ispunct(static_cast<UChar32>(cp)); }
inline bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }
inline bool is_horizontal_space(char32_t cp) { return cp != U'\n' && is_space(cp); }

inline std::string nfc(std::string_view text)
{
	UErrorCode status = U_ZERO_ERROR;
	auto const *normalizer = icu::Normalizer2::getNFCInstance(status);
	if (U_FAILURE(status))
		throw ConfigError(std::string("ICU NFC unavailable: ") + u_errorName(status));
	auto const normalized = normalizer->normalize(from_utf8(text), status);
	if (U_FAILURE(status))
		throw EncodingError("NFC normalization failed", 0);
	return to_utf8(normalized);
}

/// Trims Unicode whitespace (including newlines) from both ends.
inline std::string trim(std::string_view text)
{
	auto const cps = code_points(text);
	std::size_t b = 0, e = cps.size();
	while (b < e && is_space(cps[b]))
		++b;
	while (e > b && is_space(cps[e - 1]))
		--e;
	if (b == 0 && e == cps.size())
		return std::string(text);
	std::string out;
	for (std::size_t i = b; i < e; ++i)
		append_utf8(out, cps[i]);
	return out;
}

/// Compiled ICU regular expression operating on UTF-8 strings.
class Regex {
public:
	explicit Regex(std::string pattern) : pattern_(std::move(pattern))
	{
		UErrorCode status = U_ZERO_ERROR;
		UParseError parse_error{};
		compiled_.reset(icu::RegexPattern::compile(from_utf8(pattern_), 0, parse_error, status));
		if (U_FAILURE(status)) {
			throw ConfigError("regular expression '" + pattern_ + "' does not compile (" +
							  u_errorName(status) + " at offset " + std::to_string(parse_error.offset) + ")");
		}
	}

	Regex(Regex const &other) : Regex(other.pattern_) {}
	Regex &operator=(Regex const &other)
	{
		if (this != &other)
			*this = Regex(other.pattern_);
		return *this;
	}
	Regex(Regex &&) noexcept = default;
	Regex &operator=(Regex &&) noexcept = default;

	std::string const &pattern() const noexcept { return pattern_; }

	bool search(std::string_view text) const
	{
		UErrorCode status = U_ZERO_ERROR;
		auto const input = from_utf8(text);
		std::unique_ptr<icu::RegexMatcher> m(compiled_->matcher(input, status));
		return U_SUCCESS(status) && m->find(status);
	}

	/// Replaces every non-empty match with `replacement` (literal). Returns the
	/// number of replacements made.
	std::size_t replace_all(std::string &text, std::string_view replacement) const
	{
		UErrorCode status = U_ZERO_ERROR;
		auto const input = from_utf8(text);
		std::unique_ptr<icu::RegexMatcher> m(compiled_->matcher(input, status));
		auto const repl = from_utf8(replacement);
		icu::UnicodeString out;
		int32_t last = 0;
		std::size_t count = 0;
		while (m->find(status) && U_SUCCESS(status)) {
			int32_t const s = m->start(status), e = m->end(status);
			if (e == s)
				continue;
			out.append(input, last, s - last);
			out.append(repl);
			last = e;
			++count;
		}
		if (count == 0)
			return 0;
		out.append(input, last, input.length() - last);
		text = to_utf8(out);
		return count;
	}

private:
	std::string pattern_;
	std::unique_ptr<icu::RegexPattern> compiled_;
};

/// Splits text at ICU word boundaries, dropping segments that are pure
/// whitespace. Punctuation marks come out as their own segments.
inline std::vector<std::string> word_segments(std::string_view text)
{
	std::vector<std::string> out;
	if (text.empty())
		return out;
	UErrorCode status = U_ZERO_ERROR;
	std::unique_ptr<icu::BreakIterator> it(icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
	if (U_FAILURE(status))
		throw ConfigError(std::string("ICU word break iterator unavailable: ") + u_errorName(status));
	auto const input = from_utf8(text);
	it->setText(input);
	int32_t start = it->first();
	for (int32_t end = it->next(); end != icu::BreakIterator::DONE; start = end, end = it->next()) {
		icu::UnicodeString piece(input, start, end - start);
		bool all_space = true;
		for (int32_t i = 0; i < piece.length();) {
			UChar32 c = piece.char32At(i);
			if (!u_isUWhiteSpace(c)) {
				all_space = false;
				break;
			}
			i += U16_LENGTH(c);
		}
		if (!all_space)
			out.push_back(to_utf8(piece));
	}
	return out;
}

} // namespace counsel::unicode

#endif
