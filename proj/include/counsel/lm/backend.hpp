#ifndef COUNSEL_LM_BACKEND_HPP
#define COUNSEL_LM_BACKEND_HPP

#include <counsel/corpus.hpp>
#include <counsel/error.hpp>
#include <counsel/unicode.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace counsel::lm {

class GenerationError : public Error {
public:
	explicit GenerationError(std::string const &message) : Error("GenerationError", message) {}
};

struct Capabilities {
	bool can_score = false;
	bool can_generate = false;
};

struct TokenScore {
	std::string token;
	double logprob = 0; // natural log
};

struct GenerationRequest {
	std::string question;
	std::size_t max_new_tokens = 200;
	double temperature = 0.0;
	std::uint64_t seed = 0;

	void validate() const
	{
		if (max_new_tokens < 1)
			throw InputError("max_new_tokens must be >= 1");
		if (!(temperature >= 0.0))
			throw InputError("temperature must be >= 0");
	}
};

struct GenerationResponse {
	std::string answer;
	std::int64_t latency_ms = 0;
	std::string backend;
};

/// The prompt the models are trained to continue: "Question: <q>\nAnswer:".
inline std::string serialize_prompt(std::string_view question)
{
	std::string out;
	out += question_marker;
	out += question;
	out += "\nAnswer:";
	return out;
}

/// Drops a leading "Answer:" marker (if the backend echoed one) and
/// surrounding whitespace.
inline std::string strip_answer_marker(std::string_view text)
{
	auto t = unicode::trim(text);
	std::string_view view = t;
	if (view.starts_with("Answer:"))
		return unicode::trim(view.substr(7));
	return t;
}

/// A swappable model module: something that can score text, continue a
/// prompt, or both.
class LmBackend {
public:
	virtual ~LmBackend() = default;

	virtual std::string name() const = 0;
	virtual Capabilities capabilities() const = 0;

	/// Per-token natural-log probabilities of `text`, ending with EOS.
	virtual std::vector<TokenScore> score(std::string_view) const
	{
		throw CapabilityError("backend '" + name() + "' cannot score text");
	}

	/// Raw continuation for the request. Callers go through lm::generate,
	/// which validates the request, strips the marker and times the call.
	virtual std::string continue_prompt(GenerationRequest const &) const
	{
		throw CapabilityError("backend '" + name() + "' cannot generate");
	}

	virtual bool healthy() const { return true; }
};

inline std::vector<TokenScore> token_logprobs(LmBackend const &backend, std::string_view text)
{
	if (!backend.capabilities().can_score)
		throw CapabilityError("backend '" + backend.name() + "' cannot score text");
	return backend.score(text);
}

inline GenerationResponse generate(LmBackend const &backend, GenerationRequest const &req)
{
	if (!backend.capabilities().can_generate)
		throw CapabilityError("backend '" + backend.name() + "' cannot generate");
	req.validate();
	auto const start = std::chrono::steady_clock::now();
	GenerationResponse resp;
	resp.answer = strip_answer_marker(backend.continue_prompt(req));
	resp.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
	resp.backend = backend.name();
	if (resp.answer.empty())
		throw GenerationError("backend '" + backend.name() + "' produced an empty answer");
	return resp;
}

// Wire format shared by the remote client and the model endpoint.

inline void to_json(nlohmann::json &j, GenerationRequest const &r)
{
	j = {{"question", r.question}, {"max_new_tokens", r.max_new_tokens}, {"temperature", r.temperature}, {"seed", r.seed}};
}

inline void from_json(nlohmann::json const &j, GenerationRequest &r)
{
	r.question = j.at("question").get<std::string>();
	r.max_new_tokens = j.value("max_new_tokens", r.max_new_tokens);
	r.temperature = j.value("temperature", r.temperature);
	r.seed = j.value("seed", r.seed);
}

inline void to_json(nlohmann::json &j, GenerationResponse const &r)
{
	j = {{"answer", r.answer}, {"latency_ms", r.latency_ms}};
	if (!r.backend.empty())
		j["backend"] = r.backend;
}

} // namespace counsel::lm

#endif
