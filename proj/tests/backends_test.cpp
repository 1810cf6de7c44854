#include <counsel/lm/remote.hpp>
#include <counsel/lm/simple_backends.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

namespace counsel::lm {
namespace {

TEST(Prompt, SerializationAndMarkerStripping)
{
	EXPECT_EQ(serialize_prompt("睡不着怎么办"), "Question: 睡不着怎么办\nAnswer:");
	EXPECT_EQ(strip_answer_marker("  Answer: 早点休息 \n"), "早点休息");
	EXPECT_EQ(strip_answer_marker("早点休息"), "早点休息");
}

TEST(RequestValidation, RejectsBadParameters)
{
	EXPECT_THROW((GenerationRequest{"q", 0, 0.0, 0}.validate()), InputError);
	EXPECT_THROW((GenerationRequest{"q", 5, -1.0, 0}.validate()), InputError);
	EXPECT_NO_THROW((GenerationRequest{"q", 1, 0.0, 0}.validate()));
}

TEST(RequestWire, RoundTripsThroughJson)
{
	GenerationRequest const r{"你好", 17, 0.7, 99};
	auto const back = nlohmann::json(r).get<GenerationRequest>();
	EXPECT_EQ(back.question, r.question);
	EXPECT_EQ(back.max_new_tokens, 17u);
	EXPECT_DOUBLE_EQ(back.temperature, 0.7);
	EXPECT_EQ(back.seed, 99u);
	auto const defaults = nlohmann::json{{"question", "x"}}.get<GenerationRequest>();
	EXPECT_EQ(defaults.max_new_tokens, GenerationRequest{}.max_new_tokens);
}

TEST(TemplateBackend, AnswersAnyQuestionButCannotScore)
{
	TemplateBackend const b;
	auto const r = generate(b, {"任何问题", 10, 0.0, 0});
	EXPECT_EQ(r.answer, TemplateBackend::default_answer());
	EXPECT_EQ(r.backend, "template");
	EXPECT_THROW(token_logprobs(b, "abc"), CapabilityError);
	EXPECT_EQ(generate(TemplateBackend("固定"), {"q", 1, 0.0, 0}).answer, "固定");
}

TEST(TemplateBackend, EmptyAnswerIsAGenerationError)
{
	EXPECT_THROW(generate(TemplateBackend("  "), {"q", 1, 0.0, 0}), GenerationError);
}

TEST(UniformBackend, ScoresEveryTokenAtOneOverV)
{
	UniformBackend const b(50);
	auto const s = token_logprobs(b, "心理 咨询");
	ASSERT_EQ(s.size(), 5u); // 4 characters + EOS
	for (auto const &t : s)
		EXPECT_DOUBLE_EQ(t.logprob, -std::log(50.0));
	EXPECT_THROW(generate(b, {"q", 1, 0.0, 0}), CapabilityError);
	EXPECT_THROW(UniformBackend(0), ConfigError);
}

TEST(Endpoint, Parsing)
{
	auto const e = Endpoint::parse("http://127.0.0.1:8090");
	EXPECT_EQ(e.scheme_host_port, "http://127.0.0.1:8090");
	EXPECT_EQ(e.path, "/api/generate");
	auto const p = Endpoint::parse("http://host:1/v1/gen");
	EXPECT_EQ(p.scheme_host_port, "http://host:1");
	EXPECT_EQ(p.path, "/v1/gen");
	EXPECT_THROW(Endpoint::parse("127.0.0.1:8090"), ConfigError);
	EXPECT_THROW(Endpoint::parse("https://x"), ConfigError);
}

/// In-process model server whose behaviour each test chooses.
class MockServer {
public:
	explicit MockServer(httplib::Server::Handler handler)
	{
		server_.Post("/api/generate", std::move(handler));
		server_.Get("/api/health", [](httplib::Request const &, httplib::Response &res) { res.set_content("{}", "application/json"); });
		port_ = server_.bind_to_any_port("127.0.0.1");
		thread_ = std::thread([this] { server_.listen_after_bind(); });
		server_.wait_until_ready();
	}
	~MockServer()
	{
		server_.stop();
		thread_.join();
	}
	std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
	httplib::Server server_;
	int port_ = 0;
	std::thread thread_;
};

TEST(RemoteBackend, SendsTheProtocolAndReadsTheAnswer)
{
	nlohmann::json seen;
	MockServer server([&](httplib::Request const &req, httplib::Response &res) {
		seen = nlohmann::json::parse(req.body);
		res.set_content(nlohmann::json{{"answer", "Answer: 回声 " + seen["question"].get<std::string>()}, {"latency_ms", 3}}.dump(),
						"application/json");
	});
	RemoteBackend const b(server.url(), std::chrono::seconds(5));
	auto const r = generate(b, {"失眠", 12, 0.5, 7});
	EXPECT_EQ(r.answer, "回声 失眠");
	EXPECT_EQ(r.backend, "remote");
	EXPECT_EQ(seen["question"], "失眠");
	EXPECT_EQ(seen["max_new_tokens"], 12);
	EXPECT_EQ(seen["seed"], 7);
	EXPECT_TRUE(b.healthy());

	auto const raw = remote_generate(server.url(), {"q", 1, 0.0, 0});
	EXPECT_EQ(raw.latency_ms, 3);
}

TEST(RemoteBackend, ServerErrorCarriesStatusAndMessage)
{
	MockServer server([](httplib::Request const &, httplib::Response &res) {
		res.status = 500;
		res.set_content(R"({"error":"model crashed"})", "application/json");
	});
	try {
		remote_generate(server.url(), {"q", 1, 0.0, 0});
		FAIL() << "expected RemoteError";
	} catch (RemoteError const &e) {
		EXPECT_EQ(e.status(), 500);
		EXPECT_FALSE(e.timed_out());
		EXPECT_NE(std::string(e.what()).find("model crashed"), std::string::npos);
	}
}

TEST(RemoteBackend, MalformedBodiesAreRemoteErrors)
{
	for (std::string body : {"not json", R"({"text":"x"})", R"({"answer":5})", R"({"answer":"x","latency_ms":-1})"}) {
		MockServer server([body](httplib::Request const &, httplib::Response &res) { res.set_content(body, "application/json"); });
		EXPECT_THROW(remote_generate(server.url(), {"q", 1, 0.0, 0}), RemoteError) << body;
	}
}

TEST(RemoteBackend, SlowServerTimesOut)
{
	std::atomic<bool> release{false};
	MockServer server([&](httplib::Request const &, httplib::Response &res) {
		for (int i = 0; i < 300 && !release; ++i)
			std::this_thread::sleep_for(std::chrono::milliseconds(10));
		res.set_content(R"({"answer":"late"})", "application/json");
	});
	auto const start = std::chrono::steady_clock::now();
	try {
		remote_generate(server.url(), {"q", 1, 0.0, 0}, std::chrono::milliseconds(200));
		FAIL() << "expected RemoteError";
	} catch (RemoteError const &e) {
		EXPECT_TRUE(e.timed_out());
		EXPECT_EQ(e.status(), 0);
	}
	release = true;
	EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(2));
}

TEST(RemoteBackend, UnreachableServer)
{
	int const port = testing::free_port();
	RemoteBackend const b("http://127.0.0.1:" + std::to_string(port), std::chrono::milliseconds(500));
	EXPECT_THROW(generate(b, {"q", 1, 0.0, 0}), RemoteError);
	EXPECT_FALSE(b.healthy());
}

} // namespace
} // namespace counsel::lm
