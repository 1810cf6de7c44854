#ifndef COUNSEL_INGEST_HPP
#define COUNSEL_INGEST_HPP

// Offline extraction of samples from archived page exports.
//
// Each file under the archive root is handled by the first rule whose
// `source_glob` matches its root-relative path ('/'-separated; `*` and `?`
// stay within one path segment, `**` spans segments). Files are visited in
// lexicographic path order so the output corpus is reproducible.
//
// Modes:
//   html-selector  question/answer blocks picked by CSS selectors, paired by
//                  position in document order
//   json-path      values picked by `$.a.b[*].c`-style paths, paired by position
//   plaintext      the file is itself a blank-line separated corpus

#include <counsel/corpus.hpp>
#include <counsel/error.hpp>
#include <counsel/ingest/html.hpp>
#include <counsel/unicode.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace counsel::ingest {

enum class ExtractionMode { html_selector, json_path, plaintext };

inline ExtractionMode parse_mode(std::string_view s)
{
	if (s == "html-selector")
		return ExtractionMode::html_selector;
	if (s == "json-path")
		return ExtractionMode::json_path;
	if (s == "plaintext")
		return ExtractionMode::plaintext;
	throw ConfigError("unknown extraction mode '" + std::string(s) + "'");
}

inline std::string_view to_string(ExtractionMode m)
{
	switch (m) {
	case ExtractionMode::html_selector: return "html-selector";
	case ExtractionMode::json_path: return "json-path";
	case ExtractionMode::plaintext: return "plaintext";
	}
	return "plaintext";
}

struct ExtractionRule {
	std::string id;
	std::string source_glob;
	ExtractionMode mode = ExtractionMode::plaintext;
	std::string question_selector;
	std::string answer_selector;

	void validate() const
	{
		if (id.empty())
			throw ConfigError("extraction rule without an id");
		if (source_glob.empty())
			throw ConfigError("rule '" + id + "' has an empty source_glob");
		if (mode != ExtractionMode::plaintext && (question_selector.empty() || answer_selector.empty()))
			throw ConfigError("rule '" + id + "' needs question_selector and answer_selector in " +
							  std::string(to_string(mode)) + " mode");
		if (mode == ExtractionMode::html_selector) {
			html::parse_selector(question_selector);
			html::parse_selector(answer_selector);
		}
	}
};

inline void from_json(nlohmann::json const &j, ExtractionRule &r)
{
	r.id = j.at("id").get<std::string>();
	r.source_glob = j.at("source_glob").get<std::string>();
	r.mode = parse_mode(j.at("mode").get<std::string>());
	r.question_selector = j.value("question_selector", "");
	r.answer_selector = j.value("answer_selector", "");
}

inline void to_json(nlohmann::json &j, ExtractionRule const &r)
{
	j = {{"id", r.id},
		 {"source_glob", r.source_glob},
		 {"mode", to_string(r.mode)},
		 {"question_selector", r.question_selector},
		 {"answer_selector", r.answer_selector}};
}

inline std::vector<ExtractionRule> load_rules(std::filesystem::path const &path)
{
	nlohmann::json j;
	try {
		j = nlohmann::json::parse(read_file(path));
	} catch (nlohmann::json::exception const &e) {
		throw ConfigError("rules file '" + path.string() + "': " + e.what());
	}
	if (!j.is_array())
		throw ConfigError("rules file '" + path.string() + "' must hold a JSON array");
	std::vector<ExtractionRule> rules;
	try {
		rules = j.get<std::vector<ExtractionRule>>();
	} catch (nlohmann::json::exception const &e) {
		throw ConfigError("rules file '" + path.string() + "': " + e.what());
	}
	return rules;
}

struct Failure {
	std::string path;
	std::string reason;
};

struct IngestReport {
	std::size_t files_seen = 0;
	std::size_t records_seen = 0;
	std::size_t samples_emitted = 0;
	std::vector<Failure> failures;
};

inline void to_json(nlohmann::json &j, IngestReport const &r)
{
	j = {{"files_seen", r.files_seen}, {"records_seen", r.records_seen}, {"samples_emitted", r.samples_emitted}};
	auto &f = j["failures"] = nlohmann::json::array();
	for (auto const &x : r.failures)
		f.push_back({{"path", x.path}, {"reason", x.reason}});
}

/// Glob match over '/'-separated relative paths.
inline bool glob_match(std::string_view pattern, std::string_view path)
{
	if (pattern.empty())
		return path.empty();
	if (pattern.starts_with("**")) {
		auto rest = pattern.substr(2);
		if (rest.starts_with('/')) {
			// "**/" matches zero or more whole directories.
			auto const tail = rest.substr(1);
			if (glob_match(tail, path))
				return true;
			for (std::size_t i = 0; i < path.size(); ++i)
				if (path[i] == '/' && glob_match(tail, path.substr(i + 1)))
					return true;
			return false;
		}
		for (std::size_t i = 0; i <= path.size(); ++i)
			if (glob_match(rest, path.substr(i)))
				return true;
		return false;
	}
	if (pattern.front() == '*') {
		auto const rest = pattern.substr(1);
		for (std::size_t i = 0; i <= path.size(); ++i) {
			if (glob_match(rest, path.substr(i)))
				return true;
			if (i < path.size() && path[i] == '/')
				break;
		}
		return false;
	}
	if (path.empty())
		return false;
	if (pattern.front() == '?')
		return path.front() != '/' && glob_match(pattern.substr(1), path.substr(1));
	return pattern.front() == path.front() && glob_match(pattern.substr(1), path.substr(1));
}

/// Values selected by a path such as `$.threads[*].replies[0].body`.
inline std::vector<nlohmann::json const *> json_select(nlohmann::json const &root, std::string_view path)
{
	if (path.starts_with('$'))
		path.remove_prefix(1);
	std::vector<nlohmann::json const *> current{&root};
	auto bad = [&](std::string const &why) { return ConfigError("bad json path '" + std::string(path) + "': " + why); };
	std::size_t i = 0;
	while (i < path.size()) {
		std::vector<nlohmann::json const *> next;
		if (path[i] == '.') {
			++i;
			auto const start = i;
			while (i < path.size() && path[i] != '.' && path[i] != '[')
				++i;
			auto const key = std::string(path.substr(start, i - start));
			if (key.empty())
				throw bad("empty key");
			for (auto const *v : current)
				if (v->is_object() && v->contains(key))
					next.push_back(&(*v)[key]);
		} else if (path[i] == '[') {
			auto const close = path.find(']', i);
			if (close == std::string_view::npos)
				throw bad("unterminated '['");
			auto const inner = path.substr(i + 1, close - i - 1);
			i = close + 1;
			if (inner == "*") {
				for (auto const *v : current)
					if (v->is_array())
						for (auto const &e : *v)
							next.push_back(&e);
			} else {
				std::size_t index = 0;
				if (inner.empty() || !std::all_of(inner.begin(), inner.end(), [](char c) { return c >= '0' && c <= '9'; }))
					throw bad("index must be '*' or a number");
				for (char c : inner)
					index = index * 10 + static_cast<std::size_t>(c - '0');
				for (auto const *v : current)
					if (v->is_array() && index < v->size())
						next.push_back(&(*v)[index]);
			}
		} else {
			throw bad("expected '.' or '['");
		}
		current = std::move(next);
	}
	return current;
}

/// Folds whitespace within lines and drops empty lines so the result is a
/// valid sample body (possibly empty).
inline std::string tidy_text(std::string_view raw)
{
	std::string out, line;
	bool pending_space = false;
	auto end_line = [&] {
		if (!line.empty()) {
			if (!out.empty())
				out += '\n';
			out += line;
		}
		line.clear();
		pending_space = false;
	};
	for (char32_t cp : unicode::code_points(raw)) {
		if (cp == U'\n' || cp == U'\r') {
			end_line();
		} else if (unicode::is_space(cp)) {
			pending_space = !line.empty();
		} else if (cp != 0) {
			if (pending_space)
				line += ' ';
			pending_space = false;
			unicode::append_utf8(line, cp);
		}
	}
	end_line();
	return out;
}

namespace detail {

struct Extracted {
	std::vector<Sample> samples;
	std::vector<std::string> problems; // record-level failures within an otherwise readable file
	std::size_t records = 0;
};

inline void pair_up(Extracted &out, std::vector<std::string> const &questions, std::vector<std::string> const &answers)
{
	if (questions.size() != answers.size())
		throw FormatError(std::to_string(questions.size()) + " questions but " + std::to_string(answers.size()) + " answers");
	out.records = questions.size();
	for (std::size_t i = 0; i < questions.size(); ++i) {
		auto q = tidy_text(questions[i]);
		auto a = tidy_text(answers[i]);
		if (q.empty() || a.empty()) {
			out.problems.push_back("record " + std::to_string(i) + ": empty " + (q.empty() ? "question" : "answer"));
			continue;
		}
		Sample s;
		s.text = serialize_qa(QAPair{std::move(q), std::move(a), {}});
		s.source = SampleSource::psyqa_like;
		out.samples.push_back(std::move(s));
	}
}

inline Extracted extract(ExtractionRule const &rule, std::string const &bytes)
{
	Extracted out;
	switch (rule.mode) {
	case ExtractionMode::plaintext: {
		auto const blocks = parse_corpus(bytes);
		out.records = blocks.size();
		for (auto const &b : blocks.samples) {
			auto text = tidy_text(b.text);
			if (text.empty())
				continue;
			Sample s;
			s.text = std::move(text);
			out.samples.push_back(std::move(s));
		}
		break;
	}
	case ExtractionMode::html_selector: {
		auto const doc = html::parse(bytes);
		std::vector<std::string> qs, as;
		for (auto n : html::select(doc, rule.question_selector))
			qs.push_back(html::text_content(doc, n));
		for (auto n : html::select(doc, rule.answer_selector))
			as.push_back(html::text_content(doc, n));
		pair_up(out, qs, as);
		break;
	}
	case ExtractionMode::json_path: {
		unicode::require_valid_utf8(bytes);
		nlohmann::json doc;
		try {
			doc = nlohmann::json::parse(bytes);
		} catch (nlohmann::json::exception const &e) {
			throw FormatError(std::string("malformed JSON: ") + e.what());
		}
		auto strings = [](std::vector<nlohmann::json const *> const &values) {
			std::vector<std::string> out;
			for (auto const *v : values) {
				if (v->is_string())
					out.push_back(v->get<std::string>());
				else if (v->is_number())
					out.push_back(v->dump());
				else
					throw FormatError("selected value is not a string");
			}
			return out;
		};
		pair_up(out, strings(json_select(doc, rule.question_selector)), strings(json_select(doc, rule.answer_selector)));
		break;
	}
	}
	return out;
}

} // namespace detail

struct IngestResult {
	Corpus corpus;
	IngestReport report;
};

inline IngestResult ingest(std::vector<ExtractionRule> const &rules, std::filesystem::path const &archive_root)
{
	if (rules.empty())
		throw ConfigError("no extraction rules given");
	for (auto const &r : rules)
		r.validate();
	std::error_code ec;
	if (!std::filesystem::is_directory(archive_root, ec))
		throw IoError("archive root '" + archive_root.string() + "' is not a readable directory");

	std::vector<std::string> files;
	for (auto it = std::filesystem::recursive_directory_iterator(archive_root, ec);
		 !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
		if (it->is_regular_file(ec))
			files.push_back(std::filesystem::relative(it->path(), archive_root).generic_string());
	}
	if (ec)
		throw IoError("cannot walk archive '" + archive_root.string() + "': " + ec.message());
	std::sort(files.begin(), files.end());

	IngestResult result;
	for (auto const &rel : files) {
		auto const rule = std::find_if(rules.begin(), rules.end(), [&](auto const &r) { return glob_match(r.source_glob, rel); });
		if (rule == rules.end())
			continue;
		++result.report.files_seen;
		try {
			auto extracted = detail::extract(*rule, read_file(archive_root / rel));
			result.report.records_seen += extracted.records;
			for (auto &why : extracted.problems)
				result.report.failures.push_back({rel, std::move(why)});
			std::size_t ordinal = 0;
			for (auto &s : extracted.samples) {
				s.id = std::to_string(result.corpus.size());
				s.meta["origin"] = rel;
				s.meta["rule"] = rule->id;
				s.meta["record"] = std::to_string(ordinal++);
				result.corpus.samples.push_back(std::move(s));
			}
		} catch (Error const &e) {
			result.report.failures.push_back({rel, e.what()});
		}
	}
	result.report.samples_emitted = result.corpus.size();
	return result;
}

} // namespace counsel::ingest

#endif
