#ifndef COUNSEL_CLEAN_HPP
#define COUNSEL_CLEAN_HPP

// The corpus cleaning pipeline: seven rules, applied in a configurable order
// with per-rule accounting.
//
//   urls                 replace URL matches with a space, fold spaces, trim
//   mentions_timestamps  same for "@user" handles and post timestamps
//   punct                collapse runs of one repeated punctuation mark
//   t2s                  traditional -> simplified, character by character
//   ads                  drop samples containing an ad keyword (substring)
//   short                drop samples with fewer than min_chars code points
//   dedup                drop later copies of NFC+trim-equal samples
//
// Consecutive text rules in the order form one group that is applied to each
// sample until nothing changes, so a rule can never undo another's work and
// the whole pipeline is idempotent. Samples left empty by a text group are
// pruned and counted under "empty".

#include <counsel/corpus.hpp>
#include <counsel/error.hpp>
#include <counsel/unicode.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace counsel::clean {

enum class Rule { dedup, ads, short_samples, urls, mentions_timestamps, punct, t2s };

inline constexpr Rule all_rules[] = {Rule::dedup, Rule::ads, Rule::short_samples, Rule::urls,
									 Rule::mentions_timestamps, Rule::punct, Rule::t2s};

inline std::string_view to_string(Rule r)
{
	switch (r) {
	case Rule::dedup: return "dedup";
	case Rule::ads: return "ads";
	case Rule::short_samples: return "short";
	case Rule::urls: return "urls";
	case Rule::mentions_timestamps: return "mentions_timestamps";
	case Rule::punct: return "punct";
	case Rule::t2s: return "t2s";
	}
	return "?";
}

inline Rule parse_rule(std::string_view s)
{
	for (auto r : all_rules)
		if (to_string(r) == s)
			return r;
	throw ConfigError("unknown cleaning rule '" + std::string(s) + "'");
}

inline bool is_text_rule(Rule r)
{
	return r == Rule::urls || r == Rule::mentions_timestamps || r == Rule::punct || r == Rule::t2s;
}

inline std::vector<Rule> default_rule_order()
{
	return {Rule::urls, Rule::mentions_timestamps, Rule::punct, Rule::t2s, Rule::ads, Rule::short_samples, Rule::dedup};
}

inline std::string const default_url_pattern =
	R"((?:https?|ftp)://[A-Za-z0-9\-._~:/?#\[\]@!$&'()*+,;=%]+|www\.[A-Za-z0-9\-._~:/?#\[\]@!$&'()*+,;=%]+)";
inline std::string const default_mention_pattern = R"(@[\p{L}\p{N}_\-]+)";

inline std::vector<std::string> default_timestamp_patterns()
{
	return {
		R"(\d{4}[-/.]\d{1,2}[-/.]\d{1,2}(?:[ T]\d{1,2}:\d{2}(?::\d{2})?)?)",
		R"(\d{4}年\d{1,2}月\d{1,2}日(?:\s*\d{1,2}[:：]\d{2}(?:[:：]\d{2})?)?)",
		R"(\b\d{1,2}:\d{2}(?::\d{2})?\b)",
	};
}

// Not taken from any published list; replace with a curated one for real data.
inline std::vector<std::string> default_ad_keywords()
{
	return {"加微信", "加我微信", "微信号", "加V", "QQ群", "扫码关注", "扫描二维码", "代购", "淘宝店", "点击链接", "免费领取"};
}

/// Single-character traditional -> simplified mapping. Chains (a->b, b->c)
/// are resolved on construction so lookup is idempotent.
class T2sTable {
public:
	T2sTable() = default;

	static T2sTable from_pairs(std::vector<std::pair<char32_t, char32_t>> const &pairs)
	{
		std::unordered_map<char32_t, char32_t> raw;
		for (auto const &[from, to] : pairs)
			if (from != to)
				raw.emplace(from, to);
		T2sTable t;
		for (auto const &[from, to] : raw) {
			char32_t target = to;
			std::size_t hops = 0;
			for (auto it = raw.find(target); it != raw.end() && hops <= raw.size(); it = raw.find(target), ++hops)
				target = it->second;
			if (hops > raw.size() || target == from)
				continue; // cycle
			t.map_.emplace(from, target);
		}
		return t;
	}

	static T2sTable parse_tsv(std::string_view data, std::string const &origin = "t2s table")
	{
		std::vector<std::pair<char32_t, char32_t>> pairs;
		std::istringstream in{std::string(data)};
		std::string line;
		std::size_t lineno = 0;
		while (std::getline(in, line)) {
			++lineno;
			if (!line.empty() && line.back() == '\r')
				line.pop_back();
			if (line.empty() || line.front() == '#')
				continue;
			auto const tab = line.find('\t');
			if (tab == std::string::npos)
				throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected two tab-separated columns");
			auto const from = unicode::code_points(std::string_view(line).substr(0, tab));
			auto const to = unicode::code_points(std::string_view(line).substr(tab + 1));
			if (from.size() != 1 || to.size() != 1)
				throw ConfigError(origin + ":" + std::to_string(lineno) + ": both columns must be single characters");
			pairs.emplace_back(from[0], to[0]);
		}
		return from_pairs(pairs);
	}

	static T2sTable load(std::filesystem::path const &path) { return parse_tsv(read_file(path), path.string()); }

	std::size_t size() const noexcept { return map_.size(); }
	bool contains(char32_t c) const { return map_.contains(c); }

	char32_t lookup(char32_t c) const
	{
		auto it = map_.find(c);
		return it == map_.end() ? c : it->second;
	}

	std::vector<std::pair<char32_t, char32_t>> entries() const { return {map_.begin(), map_.end()}; }

private:
	std::unordered_map<char32_t, char32_t> map_;
};

struct CleaningConfig {
	std::vector<std::string> ad_keywords = default_ad_keywords();
	std::size_t min_chars = 150;
	std::string mention_pattern = default_mention_pattern;
	std::vector<std::string> timestamp_patterns = default_timestamp_patterns();
	std::string url_pattern = default_url_pattern;
	T2sTable t2s_table;
	std::vector<Rule> rule_order = default_rule_order();

	void validate() const
	{
		std::unordered_set<int> seen;
		for (auto r : rule_order)
			if (!seen.insert(static_cast<int>(r)).second)
				throw ConfigError("rule '" + std::string(to_string(r)) + "' appears twice in rule_order");
		for (auto const &k : ad_keywords)
			if (k.empty())
				throw ConfigError("empty ad keyword");
	}
};

/// Reads a JSON cleaning config. `t2s_table_file` is resolved relative to
/// the config file's directory; an inline `t2s_table` object is also accepted.
inline CleaningConfig parse_config(nlohmann::json const &j, std::filesystem::path const &base_dir = {})
{
	CleaningConfig c;
	try {
		if (!j.is_object())
			throw ConfigError("cleaning config must be a JSON object");
		if (j.contains("ad_keywords"))
			c.ad_keywords = j["ad_keywords"].get<std::vector<std::string>>();
		if (j.contains("min_chars")) {
			auto const v = j["min_chars"].get<long long>();
			if (v < 0)
				throw ConfigError("min_chars must be >= 0");
			c.min_chars = static_cast<std::size_t>(v);
		}
		if (j.contains("mention_pattern"))
			c.mention_pattern = j["mention_pattern"].get<std::string>();
		if (j.contains("timestamp_patterns"))
			c.timestamp_patterns = j["timestamp_patterns"].get<std::vector<std::string>>();
		if (j.contains("url_pattern"))
			c.url_pattern = j["url_pattern"].get<std::string>();
		if (j.contains("t2s_table_file"))
			c.t2s_table = T2sTable::load(base_dir / j["t2s_table_file"].get<std::string>());
		if (j.contains("t2s_table")) {
			std::vector<std::pair<char32_t, char32_t>> pairs;
			for (auto const &[k, v] : j["t2s_table"].items()) {
				auto const from = unicode::code_points(k);
				auto const to = unicode::code_points(v.get<std::string>());
				if (from.size() != 1 || to.size() != 1)
					throw ConfigError("t2s_table entries must map single characters");
				pairs.emplace_back(from[0], to[0]);
			}
			auto merged = c.t2s_table.entries();
			merged.insert(merged.end(), pairs.begin(), pairs.end());
			c.t2s_table = T2sTable::from_pairs(merged);
		}
		if (j.contains("rule_order")) {
			c.rule_order.clear();
			for (auto const &r : j["rule_order"])
				c.rule_order.push_back(parse_rule(r.get<std::string>()));
		}
	} catch (nlohmann::json::exception const &e) {
		throw ConfigError(std::string("cleaning config: ") + e.what());
	}
	c.validate();
	return c;
}

inline CleaningConfig load_config(std::filesystem::path const &path)
{
	nlohmann::json j;
	try {
		j = nlohmann::json::parse(read_file(path));
	} catch (nlohmann::json::exception const &e) {
		throw ConfigError("cleaning config '" + path.string() + "': " + e.what());
	}
	return parse_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Text transforms

namespace detail {

/// Folds runs of horizontal whitespace to one ASCII space, drops spaces
/// next to line breaks, merges consecutive line breaks and trims the ends.
inline std::string fold_spaces(std::string_view text)
{
	std::string out;
	bool space = false, newline = false;
	for (char32_t cp : unicode::code_points(text)) {
		if (cp == U'\n') {
			newline = true;
			space = false;
			continue;
		}
		if (unicode::is_space(cp)) {
			space = true;
			continue;
		}
		if (!out.empty()) {
			if (newline)
				out += '\n';
			else if (space)
				out += ' ';
		}
		space = newline = false;
		unicode::append_utf8(out, cp);
	}
	return out;
}

} // namespace detail

inline std::string strip_urls(std::string text, unicode::Regex const &url_pattern)
{
	if (url_pattern.replace_all(text, " ") == 0)
		return text;
	return detail::fold_spaces(text);
}

inline std::string strip_urls(std::string text, std::string const &url_pattern = default_url_pattern)
{
	return strip_urls(std::move(text), unicode::Regex(url_pattern));
}

inline std::string strip_mentions_timestamps(std::string text, unicode::Regex const &mention,
											 std::vector<unicode::Regex> const &timestamps)
{
	std::size_t hits = mention.replace_all(text, " ");
	for (auto const &ts : timestamps)
		hits += ts.replace_all(text, " ");
	if (hits == 0)
		return text;
	return detail::fold_spaces(text);
}

inline std::string strip_mentions_timestamps(std::string text, std::string const &mention_pattern,
											 std::vector<std::string> const &timestamp_patterns)
{
	std::vector<unicode::Regex> ts;
	for (auto const &p : timestamp_patterns)
		ts.emplace_back(p);
	return strip_mentions_timestamps(std::move(text), unicode::Regex(mention_pattern), ts);
}

inline std::string collapse_punct(std::string_view text)
{
	std::string out;
	out.reserve(text.size());
	char32_t prev = 0;
	bool prev_punct = false;
	for (char32_t cp : unicode::code_points(text)) {
		bool const punct = unicode::is_punct(cp);
		if (punct && prev_punct && cp == prev)
			continue;
		unicode::append_utf8(out, cp);
		prev = cp;
		prev_punct = punct;
	}
	return out;
}

inline std::string t2s(std::string_view text, T2sTable const &table)
{
	if (table.size() == 0)
		return std::string(text);
	std::string out;
	out.reserve(text.size());
	for (char32_t cp : unicode::code_points(text))
		unicode::append_utf8(out, table.lookup(cp));
	return out;
}

// ---------------------------------------------------------------------------
// Sample filters

inline std::string dedup_key(std::string_view text) { return unicode::nfc(unicode::trim(text)); }

inline Corpus dedup(Corpus corpus)
{
	std::unordered_set<std::string> seen;
	Corpus out;
	for (auto &s : corpus.samples)
		if (seen.insert(dedup_key(s.text)).second)
			out.samples.push_back(std::move(s));
	return out;
}

inline bool contains_ad(std::string_view text, std::vector<std::string> const &keywords)
{
	for (auto const &k : keywords)
		if (!k.empty() && text.find(k) != std::string_view::npos)
			return true;
	return false;
}

inline Corpus filter_ads(Corpus corpus, std::vector<std::string> const &keywords)
{
	Corpus out;
	for (auto &s : corpus.samples)
		if (!contains_ad(s.text, keywords))
			out.samples.push_back(std::move(s));
	return out;
}

inline Corpus filter_short(Corpus corpus, std::size_t min_chars)
{
	Corpus out;
	for (auto &s : corpus.samples)
		if (unicode::scalar_count(s.text) >= min_chars)
			out.samples.push_back(std::move(s));
	return out;
}

// ---------------------------------------------------------------------------
// Pipeline

struct RuleCounts {
	std::size_t samples_removed = 0;
	std::size_t samples_modified = 0;

	friend bool operator==(RuleCounts const &, RuleCounts const &) = default;
};

struct CleaningReport {
	std::size_t input_count = 0;
	std::size_t output_count = 0;
	std::map<std::string, RuleCounts> rules; // keyed by rule id, plus "empty"

	std::size_t total_removed() const
	{
		std::size_t n = 0;
		for (auto const &[_, c] : rules)
			n += c.samples_removed;
		return n;
	}

	std::size_t total_modified() const
	{
		std::size_t n = 0;
		for (auto const &[_, c] : rules)
			n += c.samples_modified;
		return n;
	}

	RuleCounts counts(std::string const &rule) const
	{
		auto it = rules.find(rule);
		return it == rules.end() ? RuleCounts{} : it->second;
	}

	friend bool operator==(CleaningReport const &, CleaningReport const &) = default;
};

inline void to_json(nlohmann::json &j, CleaningReport const &r)
{
	j = {{"input_count", r.input_count}, {"output_count", r.output_count}};
	auto &rules = j["rules"] = nlohmann::json::object();
	for (auto const &[name, c] : r.rules)
		rules[name] = {{"samples_removed", c.samples_removed}, {"samples_modified", c.samples_modified}};
}

struct CleaningResult {
	Corpus corpus;
	CleaningReport report;
};

/// Runs the configured rules. Throws ConfigError on invalid config and
/// FormatError if the report arithmetic ever fails to balance.
class Pipeline {
public:
	explicit Pipeline(CleaningConfig config)
		: config_(std::move(config)), url_(config_.url_pattern), mention_(config_.mention_pattern)
	{
		config_.validate();
		for (auto const &p : config_.timestamp_patterns)
			timestamps_.emplace_back(p);
	}

	CleaningConfig const &config() const noexcept { return config_; }

	std::string apply(Rule rule, std::string const &text) const
	{
		switch (rule) {
		case Rule::urls: return strip_urls(text, url_);
		case Rule::mentions_timestamps: return strip_mentions_timestamps(text, mention_, timestamps_);
		case Rule::punct: return collapse_punct(text);
		case Rule::t2s: return t2s(text, config_.t2s_table);
		default: return text;
		}
	}

	CleaningResult run(Corpus corpus) const
	{
		CleaningResult result;
		auto &report = result.report;
		report.input_count = corpus.size();
		for (auto r : config_.rule_order)
			report.rules[std::string(to_string(r))];

		auto const &order = config_.rule_order;
		for (std::size_t i = 0; i < order.size();) {
			if (is_text_rule(order[i])) {
				std::size_t j = i;
				while (j < order.size() && is_text_rule(order[j]))
					++j;
				corpus = run_text_group({order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(j)},
										std::move(corpus), report);
				i = j;
				continue;
			}
			auto const before = corpus.size();
			switch (order[i]) {
			case Rule::ads: corpus = filter_ads(std::move(corpus), config_.ad_keywords); break;
			case Rule::short_samples: corpus = filter_short(std::move(corpus), config_.min_chars); break;
			case Rule::dedup: corpus = dedup(std::move(corpus)); break;
			default: break;
			}
			report.rules[std::string(to_string(order[i]))].samples_removed += before - corpus.size();
			++i;
		}

		report.output_count = corpus.size();
		if (report.output_count != report.input_count - report.total_removed())
			throw FormatError("cleaning report does not balance");
		result.corpus = std::move(corpus);
		return result;
	}

private:
	Corpus run_text_group(std::vector<Rule> const &group, Corpus corpus, CleaningReport &report) const
	{
		constexpr int max_rounds = 16;
		std::vector<char> touched(group.size());
		Corpus out;
		std::size_t emptied = 0;
		for (auto &sample : corpus.samples) {
			std::fill(touched.begin(), touched.end(), 0);
			for (int round = 0; round < max_rounds; ++round) {
				bool changed = false;
				for (std::size_t g = 0; g < group.size(); ++g) {
					auto next = apply(group[g], sample.text);
					if (next != sample.text) {
						sample.text = std::move(next);
						touched[g] = 1;
						changed = true;
					}
				}
				if (!changed)
					break;
			}
			for (std::size_t g = 0; g < group.size(); ++g)
				report.rules[std::string(to_string(group[g]))].samples_modified += touched[g];
			if (unicode::trim(sample.text).empty()) {
				++emptied;
				continue;
			}
			out.samples.push_back(std::move(sample));
		}
		report.rules["empty"].samples_removed += emptied;
		return out;
	}

	CleaningConfig config_;
	unicode::Regex url_;
	unicode::Regex mention_;
	std::vector<unicode::Regex> timestamps_;
};

inline CleaningResult run_pipeline(Corpus corpus, CleaningConfig const &config)
{
	return Pipeline(config).run(std::move(corpus));
}

} // namespace counsel::clean

#endif
