#ifndef COUNSEL_LM_NGRAM_HPP
#define COUNSEL_LM_NGRAM_HPP

// Add-k smoothed n-gram model.
//
// Every sample is tokenized, truncated, padded with n-1 BOS symbols and
// terminated with EOS; the model counts (context, next) events where the
// context is the previous n-1 tokens. With V the set of predictable tokens
// (the vocabulary minus BOS),
//
//     p(w | ctx) = (count(ctx, w) + k) / (count(ctx) + k * |V|)
//
// which sums to one over V for every context, seen or not.

#include <counsel/corpus.hpp>
#include <counsel/error.hpp>
#include <counsel/lm/backend.hpp>
#include <counsel/tokenize.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace counsel::lm {

inline constexpr std::string_view bos_token = "<s>";
inline constexpr std::string_view eos_token = "</s>";
inline constexpr std::string_view unk_token = "<unk>";
inline constexpr int ngram_format_version = 1;

using TokenId = std::uint32_t;

struct NgramParams {
	int order = 3;
	double k = 0.01;
	TokenizerMode tokenizer = TokenizerMode::character;
	std::size_t max_tokens_per_sample = 1000;
};

class NgramModel final : public LmBackend {
public:
	struct ContextCounts {
		std::uint64_t total = 0;
		std::map<TokenId, std::uint64_t> next;

		friend bool operator==(ContextCounts const &, ContextCounts const &) = default;
	};
	using Context = std::vector<TokenId>;

	/// Counts n-gram events over `corpus`. Throws EmptyCorpus when no sample
	/// yields a token and ConfigError on invalid parameters.
	static NgramModel train(Corpus const &corpus, NgramParams const &params)
	{
		if (params.order < 1)
			throw ConfigError("n-gram order must be >= 1");
		if (!(params.k > 0) || !std::isfinite(params.k))
			throw ConfigError("add-k constant must be > 0");
		if (params.max_tokens_per_sample < 1)
			throw ConfigError("max_tokens_per_sample must be >= 1");

		std::vector<std::vector<std::string>> streams;
		streams.reserve(corpus.size());
		std::size_t total = 0;
		for (auto const &s : corpus.samples) {
			auto toks = tokenize(s.text, params.tokenizer);
			if (toks.size() > params.max_tokens_per_sample)
				toks.resize(params.max_tokens_per_sample);
			total += toks.size();
			streams.push_back(std::move(toks));
		}
		if (total == 0)
			throw EmptyCorpus("training corpus has no tokens");

		NgramModel m;
		m.params_ = params;
		std::vector<std::string> vocab{std::string(bos_token), std::string(eos_token), std::string(unk_token)};
		for (auto const &st : streams)
			vocab.insert(vocab.end(), st.begin(), st.end());
		std::sort(vocab.begin(), vocab.end());
		vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
		m.set_vocab(std::move(vocab));

		for (auto const &st : streams) {
			Context ctx(static_cast<std::size_t>(params.order - 1), m.bos_);
			auto step = [&](TokenId next) {
				auto &cc = m.counts_[ctx];
				++cc.total;
				++cc.next[next];
				if (!ctx.empty()) {
					ctx.erase(ctx.begin());
					ctx.push_back(next);
				}
			};
			for (auto const &tok : st)
				step(m.index_.at(tok));
			step(m.eos_);
		}
		return m;
	}

	static NgramModel train(Corpus const &corpus, int order, double k, TokenizerMode mode, std::size_t max_tokens_per_sample)
	{
		return train(corpus, NgramParams{order, k, mode, max_tokens_per_sample});
	}

	// -- LmBackend ----------------------------------------------------------

	std::string name() const override { return "ngram"; }
	Capabilities capabilities() const override { return {true, true}; }

	std::vector<TokenScore> score(std::string_view text) const override
	{
		std::vector<TokenScore> out;
		auto ids = to_ids(tokenize(text, params_.tokenizer));
		ids.push_back(eos_);
		Context ctx(static_cast<std::size_t>(params_.order - 1), bos_);
		for (auto id : ids) {
			out.push_back({vocab_[id], std::log(probability(ctx, id))});
			advance(ctx, id);
		}
		return out;
	}

	std::string continue_prompt(GenerationRequest const &req) const override
	{
		req.validate();
		Context ctx(static_cast<std::size_t>(params_.order - 1), bos_);
		for (auto id : to_ids(tokenize(serialize_prompt(req.question), params_.tokenizer)))
			advance(ctx, id);

		std::mt19937_64 rng(req.seed);
		std::vector<std::string> generated;
		for (std::size_t step = 0; step < req.max_new_tokens; ++step) {
			auto const next = req.temperature == 0.0 ? argmax_next(ctx, step == 0) : sample_next(ctx, step == 0, req.temperature, rng);
			if (next == eos_)
				break;
			generated.push_back(vocab_[next]);
			advance(ctx, next);
		}
		return detokenize(generated, params_.tokenizer);
	}

	// -- Model queries ------------------------------------------------------

	NgramParams const &params() const noexcept { return params_; }
	int order() const noexcept { return params_.order; }
	double k() const noexcept { return params_.k; }
	TokenizerMode tokenizer() const noexcept { return params_.tokenizer; }

	/// Full vocabulary including BOS, EOS and UNK, sorted by byte order.
	std::vector<std::string> const &vocab() const noexcept { return vocab_; }
	/// |V|: tokens the model can predict (everything but BOS).
	std::size_t predictive_vocab_size() const noexcept { return vocab_.size() - 1; }
	std::map<Context, ContextCounts> const &counts() const noexcept { return counts_; }

	TokenId bos() const noexcept { return bos_; }
	TokenId eos() const noexcept { return eos_; }
	TokenId unk() const noexcept { return unk_; }

	TokenId id_of(std::string_view token) const
	{
		auto it = index_.find(std::string(token));
		return it == index_.end() ? unk_ : it->second;
	}

	std::string const &token_of(TokenId id) const { return vocab_.at(id); }

	std::vector<TokenId> to_ids(std::vector<std::string> const &tokens) const
	{
		std::vector<TokenId> ids;
		ids.reserve(tokens.size());
		for (auto const &t : tokens)
			ids.push_back(id_of(t));
		return ids;
	}

	std::uint64_t count(Context const &ctx, TokenId next) const
	{
		auto it = counts_.find(ctx);
		if (it == counts_.end())
			return 0;
		auto jt = it->second.next.find(next);
		return jt == it->second.next.end() ? 0 : jt->second;
	}

	std::uint64_t context_total(Context const &ctx) const
	{
		auto it = counts_.find(ctx);
		return it == counts_.end() ? 0 : it->second.total;
	}

	double probability(Context const &ctx, TokenId next) const
	{
		if (next == bos_)
			return 0.0;
		double const num = static_cast<double>(count(ctx, next)) + params_.k;
		double const den = static_cast<double>(context_total(ctx)) + params_.k * static_cast<double>(predictive_vocab_size());
		return num / den;
	}

	double probability(std::vector<std::string> const &ctx, std::string_view next) const
	{
		return probability(to_ids(ctx), id_of(next));
	}

	void advance(Context &ctx, TokenId next) const
	{
		if (ctx.empty())
			return;
		ctx.erase(ctx.begin());
		ctx.push_back(next);
	}

	/// Tokens eligible for generation: everything predictable except UNK,
	/// and except EOS on the first step so answers are never empty.
	bool can_emit(TokenId id, bool first_step) const
	{
		return id != bos_ && id != unk_ && !(first_step && id == eos_);
	}

	TokenId argmax_next(Context const &ctx, bool first_step) const
	{
		// Probabilities in one context are monotone in counts, so the argmax
		// is the most frequent continuation; ties go to the smaller token.
		TokenId best = eos_;
		std::uint64_t best_count = 0;
		bool found = false;
		if (auto it = counts_.find(ctx); it != counts_.end()) {
			for (auto const &[id, n] : it->second.next) {
				if (!can_emit(id, first_step))
					continue;
				if (!found || n > best_count) {
					best = id;
					best_count = n;
					found = true;
				}
			}
		}
		if (found)
			return best;
		// Unseen context: uniform, so the smallest eligible token wins.
		for (TokenId id = 0; id < vocab_.size(); ++id)
			if (can_emit(id, first_step))
				return id;
		return eos_;
	}

	TokenId sample_next(Context const &ctx, bool first_step, double temperature, std::mt19937_64 &rng) const
	{
		std::vector<double> weights(vocab_.size(), 0.0);
		double max_log = -INFINITY;
		for (TokenId id = 0; id < vocab_.size(); ++id) {
			if (!can_emit(id, first_step))
				continue;
			weights[id] = std::log(probability(ctx, id)) / temperature;
			max_log = std::max(max_log, weights[id]);
		}
		double sum = 0;
		for (TokenId id = 0; id < vocab_.size(); ++id) {
			weights[id] = can_emit(id, first_step) ? std::exp(weights[id] - max_log) : 0.0;
			sum += weights[id];
		}
		// 53 random bits -> [0, 1); std distributions are not portable.
		double const u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * sum;
		double acc = 0;
		TokenId last = eos_;
		for (TokenId id = 0; id < vocab_.size(); ++id) {
			if (weights[id] == 0.0)
				continue;
			acc += weights[id];
			last = id;
			if (u < acc)
				return id;
		}
		return last;
	}

	// -- Persistence --------------------------------------------------------

	nlohmann::json to_json() const
	{
		nlohmann::json j;
		j["format_version"] = ngram_format_version;
		j["n"] = params_.order;
		j["k"] = params_.k;
		j["tokenizer_mode"] = to_string(params_.tokenizer);
		j["vocab_size"] = vocab_.size();
		j["max_tokens_per_sample"] = params_.max_tokens_per_sample;
		j["vocab"] = vocab_;
		auto &counts = j["counts"] = nlohmann::json::array();
		for (auto const &[ctx, cc] : counts_) {
			auto next = nlohmann::json::array();
			for (auto const &[id, n] : cc.next)
				next.push_back({id, n});
			counts.push_back({{"context", ctx}, {"next", std::move(next)}});
		}
		return j;
	}

	static NgramModel from_json(nlohmann::json const &j)
	{
		NgramModel m;
		try {
			if (j.at("format_version").get<int>() != ngram_format_version)
				throw FormatError("unsupported model format_version " + j.at("format_version").dump());
			m.params_.order = j.at("n").get<int>();
			m.params_.k = j.at("k").get<double>();
			m.params_.tokenizer = parse_tokenizer_mode(j.at("tokenizer_mode").get<std::string>());
			m.params_.max_tokens_per_sample = j.value("max_tokens_per_sample", std::size_t{1000});
			if (m.params_.order < 1 || !(m.params_.k > 0))
				throw FormatError("model header has invalid n or k");
			auto vocab = j.at("vocab").get<std::vector<std::string>>();
			if (vocab.size() != j.at("vocab_size").get<std::size_t>())
				throw FormatError("vocab_size does not match vocabulary");
			if (!std::is_sorted(vocab.begin(), vocab.end()) || std::adjacent_find(vocab.begin(), vocab.end()) != vocab.end())
				throw FormatError("vocabulary must be sorted and unique");
			m.set_vocab(std::move(vocab));
			for (auto const &entry : j.at("counts")) {
				auto ctx = entry.at("context").get<Context>();
				if (ctx.size() != static_cast<std::size_t>(m.params_.order - 1))
					throw FormatError("context length does not match model order");
				ContextCounts cc;
				for (auto const &pair : entry.at("next")) {
					auto const id = pair.at(0).get<TokenId>();
					auto const n = pair.at(1).get<std::uint64_t>();
					if (id >= m.vocab_.size() || n < 1)
						throw FormatError("count entry out of range");
					cc.next[id] = n;
					cc.total += n;
				}
				for (auto id : ctx)
					if (id >= m.vocab_.size())
						throw FormatError("context token out of range");
				m.counts_.emplace(std::move(ctx), std::move(cc));
			}
		} catch (nlohmann::json::exception const &e) {
			throw FormatError(std::string("model file: ") + e.what());
		} catch (ConfigError const &e) {
			throw FormatError(std::string("model file: ") + e.what());
		}
		return m;
	}

	void save(std::filesystem::path const &path) const { write_file(path, to_json().dump() + "\n"); }

	static NgramModel load(std::filesystem::path const &path)
	{
		nlohmann::json j;
		try {
			j = nlohmann::json::parse(read_file(path));
		} catch (nlohmann::json::exception const &e) {
			throw FormatError("model file '" + path.string() + "': " + e.what());
		}
		return from_json(j);
	}

	friend bool operator==(NgramModel const &a, NgramModel const &b)
	{
		return a.params_.order == b.params_.order && a.params_.k == b.params_.k && a.params_.tokenizer == b.params_.tokenizer &&
			   a.vocab_ == b.vocab_ && a.counts_ == b.counts_;
	}

private:
	NgramModel() = default;

	void set_vocab(std::vector<std::string> vocab)
	{
		vocab_ = std::move(vocab);
		index_.clear();
		for (TokenId i = 0; i < vocab_.size(); ++i)
			index_.emplace(vocab_[i], i);
		auto need = [&](std::string_view t) {
			auto it = index_.find(std::string(t));
			if (it == index_.end())
				throw FormatError("vocabulary lacks reserved token " + std::string(t));
			return it->second;
		};
		bos_ = need(bos_token);
		eos_ = need(eos_token);
		unk_ = need(unk_token);
	}

	NgramParams params_;
	std::vector<std::string> vocab_;
	std::unordered_map<std::string, TokenId> index_;
	std::map<Context, ContextCounts> counts_;
	TokenId bos_ = 0, eos_ = 0, unk_ = 0;
};

inline NgramModel train_ngram(Corpus const &corpus, int n, double k, TokenizerMode mode, std::size_t max_tokens_per_sample)
{
	return NgramModel::train(corpus, n, k, mode, max_tokens_per_sample);
}

} // namespace counsel::lm

#endif
