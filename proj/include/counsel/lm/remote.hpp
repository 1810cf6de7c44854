#ifndef COUNSEL_LM_REMOTE_HPP
#define COUNSEL_LM_REMOTE_HPP

// Client for a model server speaking the toolkit's JSON protocol:
//
//   POST /api/generate  {"question", "max_new_tokens", "temperature", "seed"}
//     200 -> {"answer": string, "latency_ms": int}
//     4xx/5xx -> {"error": string}

#include <counsel/error.hpp>
#include <counsel/http.hpp>
#include <counsel/lm/backend.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <string>

namespace counsel::lm {

struct Endpoint {
	std::string scheme_host_port; // e.g. "http://127.0.0.1:8090"
	std::string path = "/api/generate";

	/// Splits "http://host:port/some/path" into origin and path.
	static Endpoint parse(std::string const &url)
	{
		auto const scheme_end = url.find("://");
		if (scheme_end == std::string::npos)
			throw ConfigError("endpoint URL '" + url + "' lacks a scheme");
		if (url.compare(0, scheme_end, "http") != 0)
			throw ConfigError("endpoint URL '" + url + "': only http is supported (terminate TLS in a proxy)");
		auto const path_start = url.find('/', scheme_end + 3);
		Endpoint e;
		e.scheme_host_port = url.substr(0, path_start);
		if (path_start != std::string::npos && path_start + 1 < url.size())
			e.path = url.substr(path_start);
		return e;
	}
};

/// Sends one generation request. Throws RemoteError on transport failure,
/// timeout, non-2xx status or a malformed body.
inline GenerationResponse remote_generate(std::string const &endpoint_url, GenerationRequest const &req,
										  std::chrono::milliseconds timeout = std::chrono::seconds(30))
{
	auto const ep = Endpoint::parse(endpoint_url);
	httplib::Client cli(ep.scheme_host_port);
	auto const secs = static_cast<time_t>(timeout.count() / 1000);
	auto const usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
	cli.set_connection_timeout(secs, usecs);
	cli.set_read_timeout(secs, usecs);
	cli.set_write_timeout(secs, usecs);

	auto res = cli.Post(ep.path, nlohmann::json(req).dump(), "application/json");
	if (!res) {
		auto const err = res.error();
		bool const timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
		throw RemoteError("request to " + endpoint_url + " failed: " + httplib::to_string(err) +
							  (timed_out ? " (timeout after " + std::to_string(timeout.count()) + " ms)" : ""),
						  0, timed_out);
	}
	if (res->status < 200 || res->status >= 300) {
		std::string detail = res->body;
		try {
			auto const j = nlohmann::json::parse(res->body);
			if (j.contains("error"))
				detail = j["error"].get<std::string>();
		} catch (std::exception const &) {
		}
		throw RemoteError("model server returned HTTP " + std::to_string(res->status) + ": " + detail, res->status);
	}
	GenerationResponse out;
	try {
		auto const j = nlohmann::json::parse(res->body);
		out.answer = j.at("answer").get<std::string>();
		out.latency_ms = j.value("latency_ms", std::int64_t{0});
		out.backend = j.value("backend", std::string("remote"));
	} catch (nlohmann::json::exception const &e) {
		throw RemoteError(std::string("malformed response body: ") + e.what(), res->status);
	}
	if (out.latency_ms < 0)
		throw RemoteError("malformed response body: negative latency_ms", res->status);
	return out;
}

class RemoteBackend final : public LmBackend {
public:
	explicit RemoteBackend(std::string endpoint_url, std::chrono::milliseconds timeout = std::chrono::seconds(30))
		: url_(std::move(endpoint_url)), timeout_(timeout)
	{
		Endpoint::parse(url_);
	}

	std::string name() const override { return "remote"; }
	Capabilities capabilities() const override { return {false, true}; }
	std::string const &url() const noexcept { return url_; }

	std::string continue_prompt(GenerationRequest const &req) const override
	{
		return remote_generate(url_, req, timeout_).answer;
	}

	/// Reachable when the server answers anything at all on /api/health.
	bool healthy() const override
	{
		auto const ep = Endpoint::parse(url_);
		httplib::Client cli(ep.scheme_host_port);
		cli.set_connection_timeout(1, 0);
		cli.set_read_timeout(2, 0);
		return static_cast<bool>(cli.Get("/api/health"));
	}

private:
	std::string url_;
	std::chrono::milliseconds timeout_;
};

} // namespace counsel::lm

#endif
