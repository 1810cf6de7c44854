#ifndef COUNSEL_ANALYZE_HPP
#define COUNSEL_ANALYZE_HPP

#include <counsel/corpus.hpp>
#include <counsel/error.hpp>
#include <counsel/tokenize.hpp>
#include <counsel/unicode.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace counsel::analyze {

/// Sample-length profile in characters (code points). Everything except
/// `count` is absent for an empty corpus.
struct LengthStats {
	std::size_t count = 0;
	std::optional<double> mean, std;
	std::optional<std::size_t> min, p25, p50, p70, max;
};

/// Nearest-rank percentile: the ceil(percent/100 * n)-th smallest value
/// (1-based), clamped to the first. `sorted` must be non-empty and ascending.
inline std::size_t nearest_rank(std::vector<std::size_t> const &sorted, unsigned percent)
{
	auto const n = sorted.size();
	auto rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
	rank = std::clamp<std::size_t>(rank, 1, n);
	return sorted[rank - 1];
}

inline LengthStats length_stats_of(std::vector<std::size_t> lengths)
{
	LengthStats s;
	s.count = lengths.size();
	if (lengths.empty())
		return s;
	std::sort(lengths.begin(), lengths.end());
	double sum = 0;
	for (auto l : lengths)
		sum += static_cast<double>(l);
	double const mean = sum / static_cast<double>(lengths.size());
	double ss = 0;
	for (auto l : lengths) {
		double const d = static_cast<double>(l) - mean;
		ss += d * d;
	}
	s.mean = mean;
	s.std = std::sqrt(ss / static_cast<double>(lengths.size()));
	s.min = lengths.front();
	s.p25 = nearest_rank(lengths, 25);
	s.p50 = nearest_rank(lengths, 50);
	s.p70 = nearest_rank(lengths, 70);
	s.max = lengths.back();
	return s;
}

inline LengthStats length_stats(Corpus const &corpus)
{
	std::vector<std::size_t> lengths;
	lengths.reserve(corpus.size());
	for (auto const &s : corpus.samples)
		lengths.push_back(unicode::scalar_count(s.text));
	return length_stats_of(std::move(lengths));
}

inline void to_json(nlohmann::json &j, LengthStats const &s)
{
	j = {{"count", s.count}};
	auto put = [&](char const *key, auto const &v) { j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
	put("mean", s.mean);
	put("std", s.std);
	put("min", s.min);
	put("p25", s.p25);
	put("p50", s.p50);
	put("p70", s.p70);
	put("max", s.max);
}

struct FreqEntry {
	std::string token;
	std::size_t count = 0;

	friend bool operator==(FreqEntry const &, FreqEntry const &) = default;
};

struct FreqTable {
	std::vector<FreqEntry> entries;
	std::size_t stopwords_removed = 0;
	std::size_t total_tokens = 0;
	std::size_t distinct_tokens = 0; // before top_k truncation
};

inline void to_json(nlohmann::json &j, FreqTable const &t)
{
	j = {{"stopwords_removed", t.stopwords_removed}, {"total_tokens", t.total_tokens}, {"distinct_tokens", t.distinct_tokens}};
	auto &e = j["entries"] = nlohmann::json::array();
	for (auto const &x : t.entries)
		e.push_back({{"token", x.token}, {"count", x.count}});
}

inline std::set<std::string> parse_stopwords(std::string_view data)
{
	std::set<std::string> out;
	std::istringstream in{std::string(data)};
	std::string line;
	while (std::getline(in, line)) {
		if (!line.empty() && line.back() == '\r')
			line.pop_back();
		auto w = unicode::trim(line);
		if (!w.empty())
			out.insert(std::move(w));
	}
	return out;
}

inline std::set<std::string> load_stopwords(std::filesystem::path const &path)
{
	auto const data = read_file(path);
	unicode::require_valid_utf8(data);
	return parse_stopwords(data);
}

/// Token frequencies after stop-word removal, sorted by count descending and
/// then token ascending (byte order), truncated to `top_k`.
inline FreqTable word_freq(Corpus const &corpus, std::set<std::string> const &stopwords, TokenizerMode tokenizer,
						   std::size_t top_k)
{
	if (top_k < 1)
		throw ConfigError("top_k must be >= 1");
	FreqTable table;
	std::unordered_map<std::string, std::size_t> counts;
	for (auto const &s : corpus.samples) {
		for (auto &tok : tokenize(s.text, tokenizer)) {
			++table.total_tokens;
			if (stopwords.contains(tok))
				++table.stopwords_removed;
			else
				++counts[std::move(tok)];
		}
	}
	table.distinct_tokens = counts.size();
	table.entries.reserve(counts.size());
	for (auto &[tok, n] : counts)
		table.entries.push_back({tok, n});
	std::sort(table.entries.begin(), table.entries.end(), [](FreqEntry const &a, FreqEntry const &b) {
		return a.count != b.count ? a.count > b.count : a.token < b.token;
	});
	if (table.entries.size() > top_k)
		table.entries.resize(top_k);
	return table;
}

inline FreqTable word_freq(Corpus const &corpus, std::set<std::string> const &stopwords, std::string_view tokenizer,
						   std::size_t top_k)
{
	return word_freq(corpus, stopwords, parse_tokenizer_mode(tokenizer), top_k);
}

} // namespace counsel::analyze

#endif
