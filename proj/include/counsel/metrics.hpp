#ifndef COUNSEL_METRICS_HPP
#define COUNSEL_METRICS_HPP

// Intrinsic evaluation of generated answers. ROUGE-L and Distinct-n are
// reported on a 0-100 scale.

#include <counsel/corpus.hpp>
#include <counsel/error.hpp>
#include <counsel/lm/backend.hpp>
#include <counsel/tokenize.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

namespace counsel::metrics {

/// Sum that does not depend on the order values were produced in, so that
/// reports are invariant to item order bit for bit.
inline double order_free_sum(std::vector<double> values)
{
	std::sort(values.begin(), values.end());
	double sum = 0;
	for (double v : values)
		sum += v;
	return sum;
}

/// Corpus-level perplexity: exp(-(1/N) * sum of token log-probabilities),
/// N being the token count (EOS included) pooled over all texts.
inline double perplexity(lm::LmBackend const &backend, std::vector<std::string> const &texts)
{
	if (!backend.capabilities().can_score)
		throw CapabilityError("backend '" + backend.name() + "' cannot score text");
	std::vector<double> logprobs;
	for (auto const &t : texts)
		for (auto const &ts : lm::token_logprobs(backend, t))
			logprobs.push_back(ts.logprob);
	if (logprobs.empty())
		throw EmptyInput("perplexity needs at least one token");
	auto const n = static_cast<double>(logprobs.size());
	return std::exp(-order_free_sum(std::move(logprobs)) / n);
}

template <typename T>
std::size_t lcs_length(std::vector<T> const &a, std::vector<T> const &b)
{
	if (a.empty() || b.empty())
		return 0;
	std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
	for (std::size_t i = 1; i <= a.size(); ++i) {
		for (std::size_t j = 1; j <= b.size(); ++j)
			cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
		std::swap(prev, cur);
	}
	return prev[b.size()];
}

/// ROUGE-L F1 over token sequences, x100. Two empty sequences score 100.
template <typename T>
double rouge_l_tokens(std::vector<T> const &reference, std::vector<T> const &prediction)
{
	if (reference.empty() && prediction.empty())
		return 100.0;
	auto const lcs = static_cast<double>(lcs_length(reference, prediction));
	if (lcs == 0)
		return 0.0;
	double const recall = lcs / static_cast<double>(reference.size());
	double const precision = lcs / static_cast<double>(prediction.size());
	return 100.0 * 2.0 * recall * precision / (recall + precision);
}

inline double rouge_l(std::string_view reference, std::string_view prediction, TokenizerMode mode = TokenizerMode::character)
{
	return rouge_l_tokens(tokenize(reference, mode), tokenize(prediction, mode));
}

/// d(r) = |unique n-grams| / |n-grams| for one response (0 without n-grams).
template <typename T>
double distinct_ratio(std::vector<T> const &tokens, std::size_t n)
{
	if (n < 1 || tokens.size() < n)
		return 0.0;
	std::set<std::vector<T>> unique;
	std::size_t const total = tokens.size() - n + 1;
	for (std::size_t i = 0; i < total; ++i)
		unique.emplace(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
	return static_cast<double>(unique.size()) / static_cast<double>(total);
}

enum class DistinctAggregation { per_response_mean, pooled };

inline std::string_view to_string(DistinctAggregation a)
{
	return a == DistinctAggregation::pooled ? "pooled" : "per-response-mean";
}

/// Distinct-n x100. Per-response mode averages d(r) over responses; pooled
/// mode counts unique n-grams across all responses over all n-grams.
inline double distinct_n(std::vector<std::string> const &predictions, std::size_t n, TokenizerMode mode = TokenizerMode::character,
						 DistinctAggregation aggregation = DistinctAggregation::per_response_mean)
{
	if (predictions.empty())
		throw EmptyInput("distinct-n needs at least one prediction");
	if (n != 1 && n != 2)
		throw ConfigError("distinct-n supports n = 1 or 2");
	if (aggregation == DistinctAggregation::per_response_mean) {
		std::vector<double> ratios;
		for (auto const &p : predictions)
			ratios.push_back(distinct_ratio(tokenize(p, mode), n));
		return 100.0 * order_free_sum(std::move(ratios)) / static_cast<double>(predictions.size());
	}
	std::set<std::vector<std::string>> unique;
	std::size_t total = 0;
	for (auto const &p : predictions) {
		auto const toks = tokenize(p, mode);
		for (std::size_t i = 0; i + n <= toks.size(); ++i, ++total)
			unique.emplace(toks.begin() + static_cast<std::ptrdiff_t>(i), toks.begin() + static_cast<std::ptrdiff_t>(i + n));
	}
	return total == 0 ? 0.0 : 100.0 * static_cast<double>(unique.size()) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Prediction sets and reports

struct PredictionItem {
	std::string id;
	std::string question;
	std::string reference;
	std::string prediction;
};

struct PredictionSet {
	std::vector<PredictionItem> items;
};

inline PredictionSet parse_predictions(std::string_view jsonl, std::string const &origin = "predictions")
{
	unicode::require_valid_utf8(jsonl);
	PredictionSet set;
	std::set<std::string> ids;
	std::istringstream in{std::string(jsonl)};
	std::string line;
	std::size_t lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		if (unicode::trim(line).empty())
			continue;
		try {
			auto const j = nlohmann::json::parse(line);
			PredictionItem item;
			item.id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
			item.question = j.value("question", "");
			item.reference = j.at("reference").get<std::string>();
			item.prediction = j.at("prediction").get<std::string>();
			if (!ids.insert(item.id).second)
				throw FormatError(origin + ":" + std::to_string(lineno) + ": duplicate id '" + item.id + "'");
			set.items.push_back(std::move(item));
		} catch (nlohmann::json::exception const &e) {
			throw FormatError(origin + ":" + std::to_string(lineno) + ": " + e.what());
		}
	}
	return set;
}

inline PredictionSet load_predictions(std::filesystem::path const &path)
{
	return parse_predictions(read_file(path), path.string());
}

struct EvalOptions {
	TokenizerMode tokenizer = TokenizerMode::character;
	DistinctAggregation distinct = DistinctAggregation::per_response_mean;
};

struct MetricReport {
	std::optional<double> perplexity;
	double rouge_l = 0;
	double distinct1 = 0;
	double distinct2 = 0;
	std::size_t n_items = 0;
	EvalOptions options;
	std::string scoring_backend;
};

inline void to_json(nlohmann::json &j, MetricReport const &r)
{
	j = {{"n_items", r.n_items},
		 {"perplexity", r.perplexity ? nlohmann::json(*r.perplexity) : nlohmann::json(nullptr)},
		 {"rouge_l", r.rouge_l},
		 {"distinct1", r.distinct1},
		 {"distinct2", r.distinct2},
		 {"conventions",
		  {{"rouge_variant", "ROUGE-L F1 x100"},
		   {"tokenizer", to_string(r.options.tokenizer)},
		   {"distinct_aggregation", to_string(r.options.distinct)},
		   {"distinct_scale", "x100"},
		   {"perplexity_text", "reference"},
		   {"perplexity_pooling", "corpus-level token pooling, EOS counted"},
		   {"scoring_backend", r.scoring_backend.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.scoring_backend)}}}};
}

/// ROUGE-L is the mean of per-item scores, Distinct-n is computed over the
/// predictions, perplexity over the references when a scorer is given.
inline MetricReport evaluate(PredictionSet const &set, lm::LmBackend const *scorer = nullptr, EvalOptions options = {})
{
	if (set.items.empty())
		throw EmptyInput("prediction set is empty");
	MetricReport r;
	r.options = options;
	r.n_items = set.items.size();
	std::vector<std::string> predictions, references;
	std::vector<double> rouge;
	for (auto const &item : set.items) {
		rouge.push_back(rouge_l(item.reference, item.prediction, options.tokenizer));
		predictions.push_back(item.prediction);
		references.push_back(item.reference);
	}
	r.rouge_l = order_free_sum(std::move(rouge)) / static_cast<double>(set.items.size());
	r.distinct1 = distinct_n(predictions, 1, options.tokenizer, options.distinct);
	r.distinct2 = distinct_n(predictions, 2, options.tokenizer, options.distinct);
	if (scorer) {
		r.perplexity = perplexity(*scorer, references);
		r.scoring_backend = scorer->name();
	}
	return r;
}

} // namespace counsel::metrics

#endif
