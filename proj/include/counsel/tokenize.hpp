#ifndef COUNSEL_TOKENIZE_HPP
#define COUNSEL_TOKENIZE_HPP

#include <counsel/error.hpp>
#include <counsel/unicode.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace counsel {

/// `character`: one token per non-whitespace code point (the default for
/// Chinese text). `word`: ICU word segmentation with whitespace dropped.
enum class TokenizerMode { character, word };

inline std::string_view to_string(TokenizerMode mode)
{
	return mode == TokenizerMode::character ? "char" : "unicode";
}

inline TokenizerMode parse_tokenizer_mode(std::string_view name)
{
	if (name == "char" || name == "character")
		return TokenizerMode::character;
	if (name == "unicode" || name == "word" || name == "unicode-word")
		return TokenizerMode::word;
	throw ConfigError("unknown tokenizer '" + std::string(name) + "' (expected char or unicode)");
}

inline std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode)
{
	if (mode == TokenizerMode::word)
		return unicode::word_segments(text);
	std::vector<std::string> tokens;
	for (char32_t cp : unicode::code_points(text))
		if (!unicode::is_space(cp))
			tokens.push_back(unicode::to_utf8(cp));
	return tokens;
}

/// Inverse of tokenize up to whitespace: characters are concatenated, words
/// are joined by single spaces.
inline std::string detokenize(std::vector<std::string> const &tokens, TokenizerMode mode)
{
	std::string out;
	for (std::size_t i = 0; i < tokens.size(); ++i) {
		if (mode == TokenizerMode::word && i > 0)
			out += ' ';
		out += tokens[i];
	}
	return out;
}

} // namespace counsel

#endif
