#ifndef COUNSEL_CORPUS_HPP
#define COUNSEL_CORPUS_HPP

// Corpus files are UTF-8 with LF line endings. Samples are separated by
// exactly one blank line and the file ends with a single "\n". An optional
// sidecar "<corpus>.ids" holds one sample id per line.

#include <counsel/error.hpp>
#include <counsel/unicode.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace counsel {

enum class SampleSource { archive, psyqa_like, synthetic };

inline std::string_view to_string(SampleSource s)
{
	switch (s) {
	case SampleSource::archive: return "archive";
	case SampleSource::psyqa_like: return "psyqa-like";
	case SampleSource::synthetic: return "synthetic";
	}
	return "archive";
}

struct Sample {
	std::string id;
	std::string text;
	SampleSource source = SampleSource::archive;
	std::map<std::string, std::string> meta;
};

/// Why `text` cannot be stored as a sample, or empty when it can.
inline std::string sample_text_violation(std::string_view text)
{
	if (text.empty())
		return "sample text is empty";
	if (auto offset = unicode::first_invalid_byte(text))
		return "invalid UTF-8 or NUL at byte " + std::to_string(*offset);
	if (text.find('\r') != std::string_view::npos)
		return "sample text contains a carriage return";
	if (text.find("\n\n") != std::string_view::npos)
		return "sample text contains a blank line";
	if (text.front() == '\n' || text.back() == '\n')
		return "sample text starts or ends with a newline";
	return {};
}

struct Corpus {
	std::vector<Sample> samples;

	std::size_t size() const noexcept { return samples.size(); }
	bool empty() const noexcept { return samples.empty(); }

	/// Equality over what the file format persists: order, ids and text.
	friend bool operator==(Corpus const &a, Corpus const &b)
	{
		if (a.samples.size() != b.samples.size())
			return false;
		for (std::size_t i = 0; i < a.samples.size(); ++i)
			if (a.samples[i].id != b.samples[i].id || a.samples[i].text != b.samples[i].text)
				return false;
		return true;
	}
};

/// Builds a corpus from plain texts with ordinal ids.
inline Corpus make_corpus(std::vector<std::string> texts, SampleSource source = SampleSource::synthetic)
{
	Corpus c;
	c.samples.reserve(texts.size());
	for (std::size_t i = 0; i < texts.size(); ++i)
		c.samples.push_back(Sample{std::to_string(i), std::move(texts[i]), source, {}});
	return c;
}

inline std::vector<std::string> texts_of(Corpus const &c)
{
	std::vector<std::string> out;
	out.reserve(c.size());
	for (auto const &s : c.samples)
		out.push_back(s.text);
	return out;
}

/// Splits raw corpus bytes into samples. CRLF and lone CR become LF; runs
/// of blank lines are a single separator.
inline Corpus parse_corpus(std::string_view bytes)
{
	unicode::require_valid_utf8(bytes);

	std::string text;
	text.reserve(bytes.size());
	for (std::size_t i = 0; i < bytes.size(); ++i) {
		if (bytes[i] == '\r') {
			text += '\n';
			if (i + 1 < bytes.size() && bytes[i + 1] == '\n')
				++i;
		} else {
			text += bytes[i];
		}
	}

	Corpus corpus;
	std::string current;
	auto flush = [&] {
		if (!current.empty()) {
			corpus.samples.push_back(Sample{std::to_string(corpus.samples.size()), std::move(current), SampleSource::archive, {}});
			current.clear();
		}
	};
	std::size_t pos = 0;
	while (pos <= text.size()) {
		auto nl = text.find('\n', pos);
		if (nl == std::string::npos)
			nl = text.size();
		std::string_view line(text.data() + pos, nl - pos);
		if (line.empty()) {
			flush();
		} else {
			if (!current.empty())
				current += '\n';
			current += line;
		}
		pos = nl + 1;
	}
	flush();
	return corpus;
}

inline std::filesystem::path ids_sidecar(std::filesystem::path const &corpus_path)
{
	auto p = corpus_path;
	p += ".ids";
	return p;
}

inline std::string read_file(std::filesystem::path const &path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw IoError("cannot open '" + path.string() + "' for reading");
	std::ostringstream ss;
	ss << in.rdbuf();
	if (in.bad())
		throw IoError("read failed on '" + path.string() + "'");
	return ss.str();
}

inline void write_file(std::filesystem::path const &path, std::string_view bytes)
{
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out)
		throw IoError("cannot open '" + path.string() + "' for writing");
	out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
	out.flush();
	if (!out)
		throw IoError("write failed on '" + path.string() + "'");
}

inline Corpus read_corpus(std::filesystem::path const &path)
{
	std::error_code ec;
	if (!std::filesystem::is_regular_file(path, ec))
		throw IoError("corpus file '" + path.string() + "' does not exist");
	auto corpus = parse_corpus(read_file(path));

	auto const sidecar = ids_sidecar(path);
	if (std::filesystem::is_regular_file(sidecar, ec)) {
		std::istringstream ids(read_file(sidecar));
		std::string id;
		std::size_t i = 0;
		while (std::getline(ids, id)) {
			if (i >= corpus.size())
				throw FormatError("id sidecar '" + sidecar.string() + "' has more ids than the corpus has samples");
			corpus.samples[i++].id = id;
		}
		if (i != corpus.size())
			throw FormatError("id sidecar '" + sidecar.string() + "' has " + std::to_string(i) + " ids for " +
							  std::to_string(corpus.size()) + " samples");
	}
	return corpus;
}

inline std::string serialize_corpus(Corpus const &corpus)
{
	std::string out;
	for (std::size_t i = 0; i < corpus.size(); ++i) {
		auto const &s = corpus.samples[i];
		if (auto why = sample_text_violation(s.text); !why.empty())
			throw FormatError("sample '" + s.id + "': " + why);
		if (i > 0)
			out += "\n\n";
		out += s.text;
	}
	if (!corpus.empty())
		out += '\n';
	return out;
}

/// Writes the corpus; ids go to the sidecar only when they differ from the
/// ordinal default, and a stale sidecar is removed otherwise.
inline void write_corpus(Corpus const &corpus, std::filesystem::path const &path)
{
	auto const bytes = serialize_corpus(corpus);
	bool ordinal = true;
	std::string ids;
	for (std::size_t i = 0; i < corpus.size(); ++i) {
		auto const &id = corpus.samples[i].id;
		if (id.find('\n') != std::string::npos || id.find('\r') != std::string::npos)
			throw FormatError("sample id contains a line break");
		ordinal = ordinal && id == std::to_string(i);
		ids += id;
		ids += '\n';
	}
	write_file(path, bytes);
	auto const sidecar = ids_sidecar(path);
	if (!ordinal) {
		write_file(sidecar, ids);
	} else {
		std::error_code ec;
		std::filesystem::remove(sidecar, ec);
	}
}

// ---------------------------------------------------------------------------
// Question/answer framing

inline constexpr std::string_view question_marker = "Question: ";
inline constexpr std::string_view answer_marker = "Answer: ";

struct QAPair {
	std::string question;
	std::string answer;
	std::string id;

	friend bool operator==(QAPair const &, QAPair const &) = default;
};

inline std::string serialize_qa(QAPair const &qa)
{
	std::string out;
	out.reserve(question_marker.size() + qa.question.size() + answer_marker.size() + qa.answer.size() + 1);
	out += question_marker;
	out += qa.question;
	out += '\n';
	out += answer_marker;
	out += qa.answer;
	return out;
}

namespace detail {
inline std::string rtrim_ascii(std::string_view s)
{
	auto e = s.size();
	while (e > 0 && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n'))
		--e;
	return std::string(s.substr(0, e));
}
} // namespace detail

inline QAPair parse_qa(std::string_view text, std::string id = {})
{
	if (!text.starts_with(question_marker))
		throw FormatError("sample does not begin with \"Question: \"");
	std::string needle = "\n";
	needle += answer_marker;
	auto const at = text.find(needle, question_marker.size() - 1);
	if (at == std::string_view::npos)
		throw FormatError("sample has no line beginning with \"Answer: \"");

	QAPair qa;
	qa.id = std::move(id);
	qa.question = detail::rtrim_ascii(text.substr(question_marker.size(), at - question_marker.size()));
	qa.answer = detail::rtrim_ascii(text.substr(at + needle.size()));
	if (unicode::trim(qa.question).empty())
		throw FormatError("question is empty");
	if (unicode::trim(qa.answer).empty())
		throw FormatError("answer is empty");
	return qa;
}

inline QAPair parse_qa(Sample const &sample) { return parse_qa(sample.text, sample.id); }

} // namespace counsel

#endif
