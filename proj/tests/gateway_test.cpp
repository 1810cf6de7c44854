#include <counsel/gateway.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <future>

namespace counsel::gateway {
namespace {

using nlohmann::json;
using testing::TempDir;

/// Sleeps before answering; optionally counts concurrent calls.
class SlowBackend final : public lm::LmBackend {
public:
	explicit SlowBackend(std::chrono::milliseconds delay) : delay_(delay) {}
	std::string name() const override { return "slow"; }
	lm::Capabilities capabilities() const override { return {false, true}; }
	std::string continue_prompt(lm::GenerationRequest const &req) const override
	{
		auto const now = ++active_;
		auto seen = peak_.load();
		while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
		}
		std::this_thread::sleep_for(delay_);
		--active_;
		return "回答：" + req.question;
	}
	int peak() const { return peak_; }

private:
	std::chrono::milliseconds delay_;
	mutable std::atomic<int> active_{0}, peak_{0};
};

class BrokenBackend final : public lm::LmBackend {
public:
	explicit BrokenBackend(int mode) : mode_(mode) {}
	std::string name() const override { return "broken"; }
	lm::Capabilities capabilities() const override { return {false, true}; }
	std::string continue_prompt(lm::GenerationRequest const &) const override
	{
		if (mode_ == 0)
			throw RemoteError("connection refused");
		if (mode_ == 1)
			throw RemoteError("read timed out", 0, true);
		return "   ";
	}
	bool healthy() const override { return false; }

private:
	int mode_;
};

class GatewayTest : public ::testing::Test {
protected:
	GatewayConfig config() const
	{
		GatewayConfig c;
		c.port = 0;
		c.data_dir = dir_.path() / "var";
		c.request_timeout = std::chrono::seconds(5);
		return c;
	}

	Gateway &start(GatewayConfig c = {}, std::shared_ptr<lm::LmBackend> backend = nullptr)
	{
		if (c.port != 0)
			c = config();
		gw_.reset();
		gw_ = std::make_unique<Gateway>(std::move(c), std::move(backend));
		gw_->start();
		client_ = std::make_unique<httplib::Client>("127.0.0.1", gw_->port());
		client_->set_read_timeout(20, 0);
		return *gw_;
	}

	void restart()
	{
		auto c = gw_->config();
		gw_.reset();
		start(c);
	}

	httplib::Result post(std::string const &path, std::string const &body, httplib::Headers headers = {})
	{
		return client_->Post(path, headers, body, "application/json");
	}
	httplib::Result post(std::string const &path, json const &body, httplib::Headers headers = {})
	{
		return post(path, body.dump(), std::move(headers));
	}
	httplib::Result get(std::string const &path) { return client_->Get(path); }

	std::size_t lines_in(std::string const &leaf) const
	{
		std::ifstream in(dir_.path() / "var" / leaf);
		std::size_t n = 0;
		for (std::string line; std::getline(in, line);) {
			EXPECT_TRUE(json::accept(line)) << line;
			++n;
		}
		return n;
	}

	std::string ask_ok(std::string const &q)
	{
		auto r = post("/api/ask", json{{"question", q}});
		EXPECT_TRUE(r);
		EXPECT_EQ(r->status, 200) << r->body;
		return json::parse(r->body)["answer_id"];
	}

	TempDir dir_;
	std::unique_ptr<Gateway> gw_;
	std::unique_ptr<httplib::Client> client_;
};

TEST_F(GatewayTest, HealthReportsBackend)
{
	start(config());
	auto r = get("/api/health");
	ASSERT_TRUE(r);
	EXPECT_EQ(r->status, 200);
	auto const j = json::parse(r->body);
	EXPECT_EQ(j["status"], "ok");
	EXPECT_EQ(j["backend"], "template");
	EXPECT_GE(j["uptime_s"].get<double>(), 0.0);
	EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(GatewayTest, HealthIs503WhenBackendIsDown)
{
	start(config(), std::make_shared<BrokenBackend>(0));
	auto r = get("/api/health");
	ASSERT_TRUE(r);
	EXPECT_EQ(r->status, 503);
	EXPECT_EQ(json::parse(r->body)["status"], "unavailable");
}

TEST_F(GatewayTest, AskReturnsAnswerQuicklyAndIsRetrievable)
{
	start(config());
	auto const t0 = std::chrono::steady_clock::now();
	auto r = post("/api/ask", json{{"question", "最近总是失眠，怎么办？"}});
	auto const elapsed = std::chrono::steady_clock::now() - t0;
	ASSERT_TRUE(r);
	ASSERT_EQ(r->status, 200);
	EXPECT_LT(elapsed, std::chrono::seconds(2));
	auto const j = json::parse(r->body);
	EXPECT_EQ(j["answer_id"], "ans-1");
	EXPECT_EQ(j["answer"], lm::TemplateBackend::default_answer());
	EXPECT_EQ(j["backend"], "template");
	EXPECT_GE(j["latency_ms"].get<int>(), 0);

	auto g = get("/api/ask/ans-1");
	ASSERT_TRUE(g);
	EXPECT_EQ(g->status, 200);
	auto const rec = json::parse(g->body);
	EXPECT_EQ(rec["question"], "最近总是失眠，怎么办？");
	EXPECT_EQ(rec["answer"], j["answer"]);
	EXPECT_EQ(get("/api/ask/ans-99")->status, 404);
	EXPECT_EQ(lines_in("asks.jsonl"), 1u);
}

TEST_F(GatewayTest, AskValidation)
{
	auto c = config();
	c.max_question_chars = 5;
	start(c);
	EXPECT_EQ(post("/api/ask", std::string("{not json"))->status, 400);
	EXPECT_EQ(post("/api/ask", std::string("[1,2]"))->status, 400);
	EXPECT_EQ(post("/api/ask", json{{"q", "x"}})->status, 400);
	EXPECT_EQ(post("/api/ask", json{{"question", 5}})->status, 400);
	EXPECT_EQ(post("/api/ask", json{{"question", "  \n "}})->status, 400);
	EXPECT_EQ(post("/api/ask", json{{"question", "六个字的问题"}})->status, 400);
	EXPECT_EQ(post("/api/ask", std::string("{\"question\":\"\xff\"}"))->status, 400);
	auto r = post("/api/ask", json{{"question", ""}});
	EXPECT_TRUE(json::parse(r->body).contains("error"));
	EXPECT_EQ(post("/api/ask", json{{"question", "五个字问题"}})->status, 200);
	EXPECT_EQ(lines_in("asks.jsonl"), 1u);
}

TEST_F(GatewayTest, PreflightIsAnswered)
{
	start(config());
	auto r = client_->Options("/api/ask");
	ASSERT_TRUE(r);
	EXPECT_EQ(r->status, 204);
	EXPECT_NE(r->get_header_value("Access-Control-Allow-Headers").find("X-Rater-Token"), std::string::npos);
}

json scores(int h, int f, int r, int l) { return {{"helpfulness", h}, {"fluency", f}, {"relevance", r}, {"logic", l}}; }

TEST_F(GatewayTest, RateAppendsExactlyOneLine)
{
	start(config());
	auto const id = ask_ok("焦虑");
	auto body = scores(4, 5, 3, 4);
	body["answer_id"] = id;
	auto r = post("/api/rate", body, {{"X-Rater-Token", "tok-1"}});
	ASSERT_EQ(r->status, 200) << r->body;
	auto const j = json::parse(r->body);
	EXPECT_EQ(j["ok"], true);
	EXPECT_EQ(j["rater_token"], "tok-1");
	EXPECT_EQ(j["superseded"], false);
	EXPECT_EQ(lines_in("ratings.jsonl"), 1u);

	body["helpfulness"] = 2;
	r = post("/api/rate", body, {{"X-Rater-Token", "tok-1"}});
	EXPECT_EQ(json::parse(r->body)["superseded"], true);
	EXPECT_EQ(lines_in("ratings.jsonl"), 2u);
	EXPECT_EQ(gw_->ratings().size(), 1u);
	EXPECT_EQ(gw_->ratings().snapshot()[0].score(humaneval::Metric::helpfulness), 2);

	body["rater_token"] = "tok-2";
	EXPECT_EQ(json::parse(post("/api/rate", body)->body)["rater_token"], "tok-2");
	body.erase("rater_token");
	auto const anon = json::parse(post("/api/rate", body)->body)["rater_token"].get<std::string>();
	EXPECT_TRUE(anon.starts_with("anon-")) << anon;
	EXPECT_EQ(lines_in("ratings.jsonl"), 4u);
}

TEST_F(GatewayTest, RateRejectsBadInput)
{
	start(config());
	auto const id = ask_ok("焦虑");
	auto with = [&](json b) {
		b["answer_id"] = id;
		return b;
	};
	EXPECT_EQ(post("/api/rate", with(scores(0, 3, 3, 3)))->status, 422);
	EXPECT_EQ(post("/api/rate", with(scores(3, 3, 3, 6)))->status, 422);
	auto missing = with(scores(3, 3, 3, 3));
	missing.erase("logic");
	EXPECT_EQ(post("/api/rate", missing)->status, 422);
	auto fractional = with(scores(3, 3, 3, 3));
	fractional["fluency"] = 3.5;
	EXPECT_EQ(post("/api/rate", fractional)->status, 422);
	EXPECT_EQ(post("/api/rate", scores(3, 3, 3, 3))->status, 422);
	auto unknown = scores(3, 3, 3, 3);
	unknown["answer_id"] = "ans-404";
	EXPECT_EQ(post("/api/rate", unknown)->status, 404);
	EXPECT_EQ(post("/api/rate", std::string("nope"))->status, 400);
	EXPECT_EQ(lines_in("ratings.jsonl"), 0u);
}

TEST_F(GatewayTest, RecordsSurviveRestart)
{
	start(config());
	auto const id = ask_ok("我该怎么调节情绪");
	auto body = scores(5, 5, 5, 5);
	body["answer_id"] = id;
	ASSERT_EQ(post("/api/rate", body, {{"X-Rater-Token", "t"}})->status, 200);

	restart();
	auto g = get("/api/ask/" + id);
	ASSERT_EQ(g->status, 200);
	EXPECT_EQ(json::parse(g->body)["question"], "我该怎么调节情绪");
	EXPECT_EQ(ask_ok("第二个问题"), "ans-2");
	EXPECT_EQ(json::parse(post("/api/rate", body, {{"X-Rater-Token", "t"}})->body)["superseded"], true);
}

TEST_F(GatewayTest, CorruptLogRefusesToStart)
{
	auto c = config();
	std::filesystem::create_directories(c.data_dir);
	std::ofstream(c.data_dir / "asks.jsonl") << "{\"answer_id\":\"ans-1\",\"question\":\"q\",\"answer\":\"a\"}\n{broken\n";
	EXPECT_THROW(Gateway{c}, FormatError);
}

TEST_F(GatewayTest, GenerationFailuresMapToStatuses)
{
	start(config(), std::make_shared<BrokenBackend>(0));
	EXPECT_EQ(post("/api/ask", json{{"question", "q"}})->status, 503);
	start(config(), std::make_shared<BrokenBackend>(1));
	EXPECT_EQ(post("/api/ask", json{{"question", "q"}})->status, 504);
	start(config(), std::make_shared<BrokenBackend>(2));
	EXPECT_EQ(post("/api/ask", json{{"question", "q"}})->status, 502);
	EXPECT_EQ(lines_in("asks.jsonl"), 0u);
}

TEST_F(GatewayTest, RemoteBackendDownGives503)
{
	int const port = testing::free_port();
	auto c = config();
	c.backend.kind = BackendKind::remote;
	c.backend.url = "http://127.0.0.1:" + std::to_string(port) + "/api/generate";
	c.request_timeout = std::chrono::milliseconds(1500);
	start(c);
	EXPECT_EQ(post("/api/ask", json{{"question", "q"}})->status, 503);
	EXPECT_EQ(get("/api/health")->status, 503);
}

TEST_F(GatewayTest, GatewayCanServeAsRemoteModelForAnother)
{
	start(config());
	auto const upstream_port = gw_->port();
	auto upstream = std::move(gw_);
	auto c = config();
	c.data_dir = dir_.path() / "front";
	c.backend.kind = BackendKind::remote;
	c.backend.url = "http://127.0.0.1:" + std::to_string(upstream_port) + "/api/generate";
	start(c);
	auto r = post("/api/ask", json{{"question", "你好"}});
	ASSERT_EQ(r->status, 200) << r->body;
	EXPECT_EQ(json::parse(r->body)["answer"], lm::TemplateBackend::default_answer());
	EXPECT_EQ(json::parse(r->body)["backend"], "remote");
	EXPECT_EQ(get("/api/health")->status, 200);
	upstream->stop();
}

TEST_F(GatewayTest, GenerateEndpointValidates)
{
	start(config());
	auto r = post("/api/generate", json{{"question", "q"}, {"max_new_tokens", 5}});
	ASSERT_EQ(r->status, 200);
	EXPECT_FALSE(json::parse(r->body)["answer"].get<std::string>().empty());
	EXPECT_EQ(post("/api/generate", json{{"question", "q"}, {"max_new_tokens", 0}})->status, 400);
	EXPECT_EQ(post("/api/generate", json{{"question", "q"}, {"temperature", -1}})->status, 400);
	EXPECT_EQ(post("/api/generate", json{{"max_new_tokens", 3}})->status, 400);
}

TEST_F(GatewayTest, SlowGenerationTimesOutAndOverflowIsRejected)
{
	auto c = config();
	c.request_timeout = std::chrono::milliseconds(300);
	c.max_concurrent = 1;
	c.max_queue = 0;
	start(c, std::make_shared<SlowBackend>(std::chrono::milliseconds(1500)));
	auto first = std::async(std::launch::async, [&] {
		httplib::Client cli("127.0.0.1", gw_->port());
		return cli.Post("/api/ask", json{{"question", "a"}}.dump(), "application/json")->status;
	});
	std::this_thread::sleep_for(std::chrono::milliseconds(100));
	EXPECT_EQ(post("/api/ask", json{{"question", "b"}})->status, 503);
	EXPECT_EQ(first.get(), 504);
	// The timed-out generation still holds the only slot.
	EXPECT_EQ(post("/api/ask", json{{"question", "c"}})->status, 503);
	EXPECT_EQ(lines_in("asks.jsonl"), 0u);
}

TEST_F(GatewayTest, ConcurrentAsksCompleteOrAreRejectedWithIntactLogs)
{
	auto c = config();
	c.max_concurrent = 4;
	c.max_queue = 16;
	c.http_threads = 64;
	auto backend = std::make_shared<SlowBackend>(std::chrono::milliseconds(50));
	start(c, backend);
	std::vector<std::future<int>> calls;
	for (int i = 0; i < 50; ++i)
		calls.push_back(std::async(std::launch::async, [&, i] {
			httplib::Client cli("127.0.0.1", gw_->port());
			cli.set_read_timeout(20, 0);
			auto r = cli.Post("/api/ask", json{{"question", "问题" + std::to_string(i)}}.dump(), "application/json");
			if (!r)
				ADD_FAILURE() << httplib::to_string(r.error());
			return r ? r->status : -1;
		}));
	std::size_t ok = 0;
	for (auto &f : calls) {
		auto const status = f.get();
		EXPECT_TRUE(status == 200 || status == 503) << status;
		ok += status == 200;
	}
	EXPECT_GT(ok, 0u);
	EXPECT_LE(backend->peak(), 4);
	EXPECT_EQ(lines_in("asks.jsonl"), ok);
	EXPECT_EQ(gw_->asks().size(), ok);
	restart();
	EXPECT_EQ(gw_->asks().size(), ok);
}

// -- Evaluation sessions ------------------------------------------------------

humaneval::EvalSession demo_session()
{
	humaneval::SessionSpec spec;
	spec.session_id = "s1";
	spec.mode = humaneval::Mode::blended;
	spec.n_raters = 2;
	spec.seed = 5;
	for (int i = 0; i < 4; ++i) {
		auto const id = "q" + std::to_string(i);
		spec.questions.push_back({id, "问题" + std::to_string(i)});
		spec.answers[humaneval::Origin::system_a][id] = "模型回答" + std::to_string(i);
		spec.answers[humaneval::Origin::ground_truth][id] = "真实回答" + std::to_string(i);
	}
	return humaneval::build_session(spec);
}

TEST_F(GatewayTest, EvalSessionViewsAreBlinded)
{
	start(config());
	gw_->put_session(demo_session());
	auto all = get("/api/eval/session/s1");
	ASSERT_EQ(all->status, 200);
	EXPECT_EQ(json::parse(all->body)["items"].size(), 8u);
	auto mine = get("/api/eval/session/s1?rater=rater-1");
	ASSERT_EQ(mine->status, 200);
	auto const view = json::parse(mine->body);
	EXPECT_EQ(view["items"].size(), 4u);
	EXPECT_TRUE(view["rated_item_ids"].empty());
	for (auto const *body : {&all->body, &mine->body}) {
		EXPECT_EQ(body->find("origin"), std::string::npos);
		EXPECT_EQ(body->find("ground_truth"), std::string::npos);
		EXPECT_EQ(body->find("system"), std::string::npos);
	}
	EXPECT_EQ(get("/api/eval/session/s1?rater=ghost")->status, 404);
	EXPECT_EQ(get("/api/eval/session/nope")->status, 404);
}

TEST_F(GatewayTest, EvalSubmitAggregateAndClose)
{
	start(config());
	auto const s = demo_session();
	gw_->put_session(s);
	EXPECT_EQ(get("/api/eval/session/s1/aggregate")->status, 422);

	auto submit = [&](std::string const &rater, std::string const &item, json sc) {
		sc["session_id"] = "s1";
		sc["rater_id"] = rater;
		sc["item_id"] = item;
		return post("/api/eval/submit", sc)->status;
	};
	for (auto const &[rater, items] : s.assignment)
		for (auto const &item : items) {
			bool const truth = s.find(item)->origin == humaneval::Origin::ground_truth;
			EXPECT_EQ(submit(rater, item, truth ? scores(5, 5, 4, 4) : scores(3, 4, 3, 2)), 200);
		}
	EXPECT_EQ(lines_in("eval_ratings.jsonl"), 8u);
	auto const first = s.assignment.at("rater-1").front();
	EXPECT_EQ(submit("rater-1", first, scores(9, 1, 1, 1)), 422);
	EXPECT_EQ(submit("rater-1", "s1-99", scores(1, 1, 1, 1)), 404);
	auto incomplete = scores(1, 1, 1, 1);
	incomplete["item_id"] = first;
	EXPECT_EQ(post("/api/eval/submit", incomplete)->status, 422);
	auto wrong_session = scores(1, 1, 1, 1);
	wrong_session.update({{"session_id", "zz"}, {"rater_id", "r"}, {"item_id", first}});
	EXPECT_EQ(post("/api/eval/submit", wrong_session)->status, 404);

	auto view = json::parse(get("/api/eval/session/s1?rater=rater-1")->body);
	EXPECT_EQ(view["rated_item_ids"].size(), 4u);

	auto agg = get("/api/eval/session/s1/aggregate");
	ASSERT_EQ(agg->status, 200);
	auto const table = json::parse(agg->body);
	ASSERT_EQ(table["rows"].size(), 4u);
	EXPECT_EQ(table["rows"][0]["text"], (json{"3.00", "5.00"}));
	EXPECT_EQ(table["rows"][3]["text"], (json{"2.00", "4.00"}));

	ASSERT_EQ(post("/api/eval/session/s1/close", std::string("{}"))->status, 200);
	EXPECT_EQ(submit("rater-1", first, scores(1, 1, 1, 1)), 409);
	EXPECT_EQ(post("/api/eval/session/nope/close", std::string("{}"))->status, 404);

	restart();
	EXPECT_TRUE(gw_->session("s1")->closed);
	EXPECT_EQ(gw_->eval_ratings().size(), 8u);
	EXPECT_EQ(submit("rater-2", s.assignment.at("rater-2").front(), scores(1, 1, 1, 1)), 409);
}

// -- Building blocks ------------------------------------------------------------

TEST(GenerationGateTest, AdmitsQueuesAndRejects)
{
	auto gate = std::make_shared<GenerationGate>(1, 1);
	auto const far = std::chrono::steady_clock::now() + std::chrono::seconds(5);
	auto [o1, s1] = gate->enter(far);
	EXPECT_EQ(o1, GenerationGate::Outcome::entered);
	EXPECT_EQ(gate->active(), 1u);

	auto waiter = std::async(std::launch::async, [&] { return gate->enter(far); });
	std::this_thread::sleep_for(std::chrono::milliseconds(50));
	auto [o3, s3] = gate->enter(far);
	EXPECT_EQ(o3, GenerationGate::Outcome::queue_full);
	EXPECT_FALSE(s3);
	EXPECT_EQ(gate->rejected(), 1u);

	s1.release();
	auto [o2, s2] = waiter.get();
	EXPECT_EQ(o2, GenerationGate::Outcome::entered);
	EXPECT_EQ(gate->active(), 1u);

	auto [o4, s4] = gate->enter(std::chrono::steady_clock::now() + std::chrono::milliseconds(30));
	EXPECT_EQ(o4, GenerationGate::Outcome::timed_out);
	s2.release();
	EXPECT_EQ(gate->active(), 0u);
}

TEST(GenerationGateTest, ServesWaitersInArrivalOrder)
{
	auto gate = std::make_shared<GenerationGate>(1, 8);
	auto const far = std::chrono::steady_clock::now() + std::chrono::seconds(5);
	auto [o, holder] = gate->enter(far);
	std::mutex m;
	std::vector<int> order;
	std::vector<std::thread> threads;
	for (int i = 0; i < 5; ++i) {
		threads.emplace_back([&, i] {
			auto [oi, slot] = gate->enter(far);
			std::lock_guard lock(m);
			order.push_back(i);
		});
		std::this_thread::sleep_for(std::chrono::milliseconds(30));
	}
	holder.release();
	for (auto &t : threads)
		t.join();
	EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
	EXPECT_EQ(gate->active(), 0u);
}

TEST(GatewayConfigTest, ParsesKeysAndResolvesPaths)
{
	auto const c = parse_config(json::parse(R"({
		"bind": "0.0.0.0:9000",
		"backend": {"kind": "ngram", "model": "models/m.json"},
		"request_timeout_ms": 1500, "max_concurrent": 3, "max_queue": 7,
		"max_question_chars": 100, "http_threads": 5, "sync_logs": false,
		"data_dir": "state", "static_dir": "/srv/ui",
		"generation": {"max_new_tokens": 64, "temperature": 0.8, "seed": 3}
	})"),
								"/etc/counsel");
	EXPECT_EQ(c.host, "0.0.0.0");
	EXPECT_EQ(c.port, 9000);
	EXPECT_EQ(c.backend.kind, BackendKind::ngram);
	EXPECT_EQ(c.backend.model_path, "/etc/counsel/models/m.json");
	EXPECT_EQ(c.request_timeout, std::chrono::milliseconds(1500));
	EXPECT_EQ(c.max_concurrent, 3u);
	EXPECT_EQ(c.max_queue, 7u);
	EXPECT_EQ(c.max_question_chars, 100u);
	EXPECT_EQ(c.http_threads, 5u);
	EXPECT_FALSE(c.sync_logs);
	EXPECT_EQ(c.data_dir, "/etc/counsel/state");
	EXPECT_EQ(*c.static_dir, "/srv/ui");
	EXPECT_EQ(c.generation.max_new_tokens, 64u);
	EXPECT_DOUBLE_EQ(c.generation.temperature, 0.8);
	EXPECT_EQ(c.generation.seed, 3u);
}

TEST(GatewayConfigTest, Errors)
{
	EXPECT_THROW(parse_config(json::parse(R"({"backend":{"kind":"gpt"}})")), ConfigError);
	EXPECT_THROW(parse_config(json::parse(R"({"backend":{"kind":"remote"}})")), ConfigError);
	EXPECT_THROW(parse_config(json::parse(R"({"bind":"localhost"})")), ConfigError);
	EXPECT_THROW(parse_config(json::parse(R"({"bind":"h:port"})")), ConfigError);
	EXPECT_THROW(parse_config(json::parse(R"({"max_queue":"many"})")), ConfigError);
	GatewayConfig c;
	c.max_concurrent = 0;
	EXPECT_THROW(c.validate(), ConfigError);
	c = {};
	c.request_timeout = std::chrono::milliseconds(0);
	EXPECT_THROW(c.validate(), ConfigError);
	c = {};
	c.backend.kind = BackendKind::ngram;
	EXPECT_THROW(c.validate(), ConfigError);
}

TEST(GatewayConfigTest, LoadAppliesEnvironmentOverrides)
{
	TempDir dir;
	write_file(dir / "gw.json", R"({"bind":"127.0.0.1:8080","data_dir":"d"})");
	::setenv("COUNSEL_BIND", "127.0.0.1:0", 1);
	::setenv("COUNSEL_DATA_DIR", "/tmp/elsewhere", 1);
	auto const c = load_config(dir / "gw.json");
	::unsetenv("COUNSEL_BIND");
	::unsetenv("COUNSEL_DATA_DIR");
	EXPECT_EQ(c.port, 0);
	EXPECT_EQ(c.data_dir, "/tmp/elsewhere");
	EXPECT_EQ(load_config(dir / "gw.json").data_dir, dir.path() / "d");
	write_file(dir / "bad.json", "{");
	EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
}

TEST(AskStoreTest, ContinuesNumberingAfterReplay)
{
	TempDir dir;
	{
		AskStore s(dir / "a.jsonl", false);
		EXPECT_EQ(s.add("q1", "a1", "template", 1).answer_id, "ans-1");
		EXPECT_EQ(s.add("q2", "a2", "template", 1).answer_id, "ans-2");
	}
	AskStore s(dir / "a.jsonl", false);
	EXPECT_EQ(s.size(), 2u);
	EXPECT_EQ(s.find("ans-2")->answer, "a2");
	EXPECT_EQ(s.add("q3", "a3", "template", 1).answer_id, "ans-3");
	EXPECT_FALSE(s.find("ans-9"));
}

} // namespace
} // namespace counsel::gateway
