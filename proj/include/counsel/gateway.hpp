#ifndef COUNSEL_GATEWAY_HPP
#define COUNSEL_GATEWAY_HPP

// HTTP gateway: question answering against a configured backend, public
// answer ratings, blinded evaluation sessions, and the model-server protocol.
//
// Endpoints (JSON bodies, UTF-8):
//   POST /api/ask                         {question} -> {answer_id, answer, latency_ms, backend}
//   GET  /api/ask/{answer_id}             stored AskRecord
//   POST /api/rate                        {answer_id, helpfulness, fluency, relevance, logic} -> {ok}
//   GET  /api/eval/session/{id}[?rater=]  rater-facing items (no origins)
//   POST /api/eval/submit                 {session_id, rater_id, item_id, <4 scores>} -> {ok}
//   GET  /api/eval/session/{id}/aggregate metric x origin means
//   POST /api/eval/session/{id}/close     stop accepting submissions
//   POST /api/generate                    model-server protocol (see lm/remote.hpp)
//   GET  /api/health                      {status, backend, uptime_s}
//
// Persistence is one JSONL event log per record type in the data directory:
// asks.jsonl, ratings.jsonl, eval_ratings.jsonl; sessions live in
// sessions/<id>.json.

#include <counsel/error.hpp>
#include <counsel/event_log.hpp>
#include <counsel/http.hpp>
#include <counsel/humaneval.hpp>
#include <counsel/lm/backend.hpp>
#include <counsel/lm/ngram.hpp>
#include <counsel/lm/remote.hpp>
#include <counsel/lm/simple_backends.hpp>
#include <counsel/unicode.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <thread>

namespace counsel::gateway {

using namespace std::chrono_literals;

// -- Configuration ------------------------------------------------------------

enum class BackendKind { ngram, template_answer, remote };

struct BackendConfig {
	BackendKind kind = BackendKind::template_answer;
	std::filesystem::path model_path; // ngram
	std::string url;                  // remote, e.g. http://127.0.0.1:9000/api/generate
};

struct GatewayConfig {
	std::string host = "127.0.0.1";
	int port = 8080; // 0 picks a free port
	BackendConfig backend;
	std::chrono::milliseconds request_timeout = 30s;
	std::size_t max_concurrent = 1;
	std::size_t max_queue = 16;
	std::size_t max_question_chars = 2000;
	std::size_t http_threads = 16;
	std::filesystem::path data_dir = "var";
	std::optional<std::filesystem::path> static_dir;
	bool sync_logs = true;
	lm::GenerationRequest generation; // question ignored; other fields are defaults

	void validate() const
	{
		if (request_timeout.count() <= 0)
			throw ConfigError("request_timeout_ms must be > 0");
		if (max_concurrent < 1)
			throw ConfigError("max_concurrent must be >= 1");
		if (http_threads < 1)
			throw ConfigError("http_threads must be >= 1");
		if (port < 0 || port > 65535)
			throw ConfigError("port out of range");
		if (backend.kind == BackendKind::ngram && backend.model_path.empty())
			throw ConfigError("ngram backend needs a model path");
		if (backend.kind == BackendKind::remote && backend.url.empty())
			throw ConfigError("remote backend needs a url");
		generation.validate();
	}
};

inline void apply_bind(GatewayConfig &c, std::string const &bind)
{
	auto const colon = bind.rfind(':');
	if (colon == std::string::npos)
		throw ConfigError("bind address '" + bind + "' must be host:port");
	c.host = bind.substr(0, colon);
	try {
		c.port = std::stoi(bind.substr(colon + 1));
	} catch (std::exception const &) {
		throw ConfigError("bind address '" + bind + "' has a bad port");
	}
}

/// Reads the gateway config. Relative paths resolve against `base_dir`.
inline GatewayConfig parse_config(nlohmann::json const &j, std::filesystem::path const &base_dir = {})
{
	GatewayConfig c;
	auto resolve = [&](std::string const &p) { return std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base_dir / p; };
	try {
		if (j.contains("bind"))
			apply_bind(c, j["bind"].get<std::string>());
		if (j.contains("backend")) {
			auto const &b = j["backend"];
			auto const kind = b.at("kind").get<std::string>();
			if (kind == "ngram") {
				c.backend.kind = BackendKind::ngram;
				c.backend.model_path = resolve(b.at("model").get<std::string>());
			} else if (kind == "template") {
				c.backend.kind = BackendKind::template_answer;
			} else if (kind == "remote") {
				c.backend.kind = BackendKind::remote;
				c.backend.url = b.at("url").get<std::string>();
			} else {
				throw ConfigError("unknown backend kind '" + kind + "'");
			}
		}
		if (j.contains("request_timeout_ms"))
			c.request_timeout = std::chrono::milliseconds(j["request_timeout_ms"].get<long long>());
		c.max_concurrent = j.value("max_concurrent", c.max_concurrent);
		c.max_queue = j.value("max_queue", c.max_queue);
		c.max_question_chars = j.value("max_question_chars", c.max_question_chars);
		c.http_threads = j.value("http_threads", c.http_threads);
		c.sync_logs = j.value("sync_logs", c.sync_logs);
		if (j.contains("data_dir"))
			c.data_dir = resolve(j["data_dir"].get<std::string>());
		if (j.contains("static_dir"))
			c.static_dir = resolve(j["static_dir"].get<std::string>());
		if (j.contains("generation")) {
			auto const &g = j["generation"];
			c.generation.max_new_tokens = g.value("max_new_tokens", c.generation.max_new_tokens);
			c.generation.temperature = g.value("temperature", c.generation.temperature);
			c.generation.seed = g.value("seed", c.generation.seed);
		}
	} catch (nlohmann::json::exception const &e) {
		throw ConfigError(std::string("gateway config: ") + e.what());
	}
	return c;
}

/// COUNSEL_BIND (host:port) and COUNSEL_DATA_DIR override the config file.
inline void apply_env_overrides(GatewayConfig &c)
{
	if (char const *bind = std::getenv("COUNSEL_BIND"); bind && *bind)
		apply_bind(c, bind);
	if (char const *dir = std::getenv("COUNSEL_DATA_DIR"); dir && *dir)
		c.data_dir = dir;
}

inline GatewayConfig load_config(std::filesystem::path const &path)
{
	nlohmann::json j;
	try {
		j = nlohmann::json::parse(read_file(path));
	} catch (nlohmann::json::exception const &e) {
		throw ConfigError("gateway config '" + path.string() + "': " + e.what());
	}
	auto c = parse_config(j, path.parent_path());
	apply_env_overrides(c);
	c.validate();
	return c;
}

inline std::shared_ptr<lm::LmBackend> make_backend(BackendConfig const &b, std::chrono::milliseconds timeout)
{
	switch (b.kind) {
	case BackendKind::ngram: return std::make_shared<lm::NgramModel>(lm::NgramModel::load(b.model_path));
	case BackendKind::template_answer: return std::make_shared<lm::TemplateBackend>();
	case BackendKind::remote: return std::make_shared<lm::RemoteBackend>(b.url, timeout);
	}
	throw ConfigError("unknown backend");
}

// -- Bounded generation concurrency -------------------------------------------

/// At most `max_active` holders; up to `max_waiting` callers queue in FIFO
/// order, anyone beyond that is turned away immediately.
class GenerationGate : public std::enable_shared_from_this<GenerationGate> {
public:
	enum class Outcome { entered, queue_full, timed_out };

	class Slot {
	public:
		Slot() = default;
		explicit Slot(std::shared_ptr<GenerationGate> gate) : gate_(std::move(gate)) {}
		Slot(Slot &&) noexcept = default;
		Slot &operator=(Slot &&other) noexcept
		{
			release();
			gate_ = std::move(other.gate_);
			return *this;
		}
		~Slot() { release(); }

		explicit operator bool() const noexcept { return static_cast<bool>(gate_); }

		void release()
		{
			if (gate_)
				std::exchange(gate_, nullptr)->leave();
		}

	private:
		std::shared_ptr<GenerationGate> gate_;
	};

	GenerationGate(std::size_t max_active, std::size_t max_waiting) : max_active_(max_active), max_waiting_(max_waiting) {}

	std::pair<Outcome, Slot> enter(std::chrono::steady_clock::time_point deadline)
	{
		std::unique_lock lock(mutex_);
		if (active_ < max_active_ && waiting_.empty()) {
			++active_;
			return {Outcome::entered, Slot(shared_from_this())};
		}
		if (waiting_.size() >= max_waiting_) {
			++rejected_;
			return {Outcome::queue_full, Slot()};
		}
		Waiter me;
		auto const it = waiting_.insert(waiting_.end(), &me);
		bool const granted = me.cv.wait_until(lock, deadline, [&] { return me.granted; });
		if (!granted) {
			waiting_.erase(it);
			return {Outcome::timed_out, Slot()};
		}
		return {Outcome::entered, Slot(shared_from_this())};
	}

	std::size_t active() const
	{
		std::lock_guard lock(mutex_);
		return active_;
	}

	std::size_t rejected() const
	{
		std::lock_guard lock(mutex_);
		return rejected_;
	}

private:
	struct Waiter {
		std::condition_variable cv;
		bool granted = false;
	};

	void leave()
	{
		std::lock_guard lock(mutex_);
		if (!waiting_.empty()) {
			// Hand the slot straight to the oldest waiter; active_ is unchanged.
			Waiter *next = waiting_.front();
			waiting_.pop_front();
			next->granted = true;
			next->cv.notify_one();
		} else {
			--active_;
		}
	}

	mutable std::mutex mutex_;
	std::size_t max_active_;
	std::size_t max_waiting_;
	std::size_t active_ = 0;
	std::size_t rejected_ = 0;
	std::list<Waiter *> waiting_;
};

// -- Ask records --------------------------------------------------------------

struct AskRecord {
	std::string answer_id;
	std::string question;
	std::string answer;
	std::string backend;
	std::int64_t latency_ms = 0;
	std::int64_t created_at_ms = 0;
};

inline nlohmann::json to_json(AskRecord const &r)
{
	return {{"answer_id", r.answer_id}, {"question", r.question},	  {"answer", r.answer},
			{"backend", r.backend},		{"latency_ms", r.latency_ms}, {"created_at_ms", r.created_at_ms}};
}

/// Replayed from asks.jsonl at startup; every record is on disk before
/// `add` returns.
class AskStore {
public:
	explicit AskStore(std::filesystem::path const &log_path, bool sync = true)
	{
		replay_log(log_path, [&](nlohmann::json const &j) {
			AskRecord r;
			try {
				r.answer_id = j.at("answer_id").get<std::string>();
				r.question = j.at("question").get<std::string>();
				r.answer = j.at("answer").get<std::string>();
				r.backend = j.value("backend", "");
				r.latency_ms = j.value("latency_ms", std::int64_t{0});
				r.created_at_ms = j.value("created_at_ms", std::int64_t{0});
			} catch (nlohmann::json::exception const &e) {
				throw FormatError(log_path.string() + ": bad ask record: " + e.what());
			}
			if (auto n = sequence_of(r.answer_id))
				next_ = std::max(next_, *n + 1);
			records_[r.answer_id] = std::move(r);
		});
		log_ = std::make_unique<EventLog>(log_path, sync);
	}

	AskRecord add(std::string question, std::string answer, std::string backend, std::int64_t latency_ms)
	{
		std::unique_lock lock(mutex_);
		AskRecord r{"ans-" + std::to_string(next_), std::move(question), std::move(answer), std::move(backend), latency_ms,
					humaneval::now_ms()};
		log_->append(to_json(r));
		++next_;
		records_[r.answer_id] = r;
		return r;
	}

	std::optional<AskRecord> find(std::string const &id) const
	{
		std::shared_lock lock(mutex_);
		auto it = records_.find(id);
		if (it == records_.end())
			return std::nullopt;
		return it->second;
	}

	bool contains(std::string const &id) const
	{
		std::shared_lock lock(mutex_);
		return records_.contains(id);
	}

	std::size_t size() const
	{
		std::shared_lock lock(mutex_);
		return records_.size();
	}

private:
	static std::optional<std::uint64_t> sequence_of(std::string const &id)
	{
		if (!id.starts_with("ans-") || id.size() == 4)
			return std::nullopt;
		std::uint64_t n = 0;
		for (char c : id.substr(4)) {
			if (c < '0' || c > '9')
				return std::nullopt;
			n = n * 10 + static_cast<std::uint64_t>(c - '0');
		}
		return n;
	}

	mutable std::shared_mutex mutex_;
	std::map<std::string, AskRecord> records_;
	std::unique_ptr<EventLog> log_;
	std::uint64_t next_ = 1;
};

// -- The server ---------------------------------------------------------------

class Gateway {
public:
	/// Loads the backend and replays all logs; throws on bad config, an
	/// unloadable model or a corrupt log.
	explicit Gateway(GatewayConfig config, std::shared_ptr<lm::LmBackend> backend = nullptr)
		: config_(std::move(config)), started_(std::chrono::steady_clock::now())
	{
		config_.validate();
		backend_ = backend ? std::move(backend) : make_backend(config_.backend, config_.request_timeout);
		gate_ = std::make_shared<GenerationGate>(config_.max_concurrent, config_.max_queue);
		std::filesystem::create_directories(config_.data_dir / "sessions");
		load_sessions();
		asks_ = std::make_unique<AskStore>(config_.data_dir / "asks.jsonl", config_.sync_logs);
		ratings_ = std::make_unique<humaneval::RatingStore>(
			config_.data_dir / "ratings.jsonl", [this](std::string const &id) { return asks_->contains(id); }, config_.sync_logs);
		eval_ratings_ = std::make_unique<humaneval::RatingStore>(
			config_.data_dir / "eval_ratings.jsonl", [this](std::string const &id) { return find_session_of_item(id).has_value(); },
			config_.sync_logs);
		routes();
	}

	Gateway(Gateway const &) = delete;
	Gateway &operator=(Gateway const &) = delete;

	~Gateway() { stop(); }

	/// Binds and serves on a background thread. Returns the bound port.
	int start()
	{
		if (config_.port == 0)
			port_ = server_.bind_to_any_port(config_.host);
		else
			port_ = server_.bind_to_port(config_.host, config_.port) ? config_.port : -1;
		if (port_ < 0)
			throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
		thread_ = std::thread([this] { server_.listen_after_bind(); });
		server_.wait_until_ready();
		return port_;
	}

	/// Binds and serves on the calling thread until stop().
	void run()
	{
		if (!server_.listen(config_.host, config_.port))
			throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
	}

	void stop()
	{
		server_.stop();
		if (thread_.joinable())
			thread_.join();
	}

	int port() const noexcept { return port_; }
	GatewayConfig const &config() const noexcept { return config_; }
	lm::LmBackend const &backend() const noexcept { return *backend_; }
	AskStore const &asks() const noexcept { return *asks_; }
	humaneval::RatingStore const &ratings() const noexcept { return *ratings_; }
	humaneval::RatingStore const &eval_ratings() const noexcept { return *eval_ratings_; }

	/// Adds (or replaces) a session and persists it under sessions/.
	void put_session(humaneval::EvalSession session)
	{
		auto const id = session.session_id;
		humaneval::save_session(session, session_path(id));
		std::unique_lock lock(sessions_mutex_);
		sessions_[id] = std::make_shared<humaneval::EvalSession const>(std::move(session));
	}

	std::shared_ptr<humaneval::EvalSession const> session(std::string const &id) const
	{
		std::shared_lock lock(sessions_mutex_);
		auto it = sessions_.find(id);
		return it == sessions_.end() ? nullptr : it->second;
	}

private:
	struct HttpError {
		int status;
		std::string message;
	};

	std::filesystem::path session_path(std::string const &id) const
	{
		if (id.empty() || id.find_first_of("/\\") != std::string::npos || id.starts_with('.'))
			throw InputError("bad session id '" + id + "'");
		return config_.data_dir / "sessions" / (id + ".json");
	}

	void load_sessions()
	{
		std::vector<std::filesystem::path> files;
		for (auto const &e : std::filesystem::directory_iterator(config_.data_dir / "sessions"))
			if (e.is_regular_file() && e.path().extension() == ".json")
				files.push_back(e.path());
		std::sort(files.begin(), files.end());
		for (auto const &f : files) {
			auto s = humaneval::load_session(f);
			auto const id = s.session_id;
			sessions_[id] = std::make_shared<humaneval::EvalSession const>(std::move(s));
		}
	}

	std::optional<std::string> find_session_of_item(std::string const &item_id) const
	{
		std::shared_lock lock(sessions_mutex_);
		for (auto const &[id, s] : sessions_)
			if (s->find(item_id))
				return id;
		return std::nullopt;
	}

	static void reply(httplib::Response &res, int status, nlohmann::json const &body)
	{
		res.status = status;
		res.set_content(body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json; charset=utf-8");
	}

	static void reply_error(httplib::Response &res, int status, std::string const &message, std::string const &kind = {})
	{
		nlohmann::json body{{"error", message}};
		if (!kind.empty())
			body["kind"] = kind;
		reply(res, status, body);
	}

	static nlohmann::json parse_body(httplib::Request const &req)
	{
		if (unicode::first_invalid_byte(req.body))
			throw HttpError{400, "request body is not valid UTF-8"};
		try {
			auto j = nlohmann::json::parse(req.body);
			if (!j.is_object())
				throw HttpError{400, "request body must be a JSON object"};
			return j;
		} catch (nlohmann::json::exception const &e) {
			throw HttpError{400, std::string("malformed JSON: ") + e.what()};
		}
	}

	template <typename Handler>
	httplib::Server::Handler guarded(Handler handler)
	{
		return [handler = std::move(handler)](httplib::Request const &req, httplib::Response &res) {
			try {
				handler(req, res);
			} catch (HttpError const &e) {
				reply_error(res, e.status, e.message);
			} catch (Error const &e) {
				reply_error(res, 500, e.what(), e.kind());
			} catch (std::exception const &e) {
				reply_error(res, 500, e.what());
			}
		};
	}

	/// Runs one generation under the gate and the request deadline.
	lm::GenerationResponse run_generation(lm::GenerationRequest req)
	{
		auto const deadline = std::chrono::steady_clock::now() + config_.request_timeout;
		auto [outcome, slot] = gate_->enter(deadline);
		if (outcome == GenerationGate::Outcome::queue_full)
			throw HttpError{503, "generation queue is full, retry later"};
		if (outcome == GenerationGate::Outcome::timed_out)
			throw HttpError{504, "timed out waiting for a generation slot"};

		struct Shared {
			std::mutex m;
			std::condition_variable cv;
			bool done = false;
			std::optional<lm::GenerationResponse> value;
			std::exception_ptr error;
		};
		auto shared = std::make_shared<Shared>();
		// The worker owns the slot: on timeout the caller leaves but the
		// backend stays busy until the worker really finishes.
		std::thread([shared, backend = backend_, req = std::move(req), slot = std::move(slot)]() mutable {
			std::optional<lm::GenerationResponse> value;
			std::exception_ptr error;
			try {
				value = lm::generate(*backend, req);
			} catch (...) {
				error = std::current_exception();
			}
			slot.release();
			std::lock_guard lock(shared->m);
			shared->value = std::move(value);
			shared->error = error;
			shared->done = true;
			shared->cv.notify_all();
		}).detach();

		std::unique_lock lock(shared->m);
		if (!shared->cv.wait_until(lock, deadline, [&] { return shared->done; }))
			throw HttpError{504, "generation timed out after " + std::to_string(config_.request_timeout.count()) + " ms"};
		if (shared->error) {
			try {
				std::rethrow_exception(shared->error);
			} catch (RemoteError const &e) {
				throw HttpError{e.timed_out() ? 504 : 503, std::string("backend unavailable: ") + e.what()};
			} catch (CapabilityError const &e) {
				throw HttpError{503, e.what()};
			} catch (lm::GenerationError const &e) {
				throw HttpError{502, e.what()};
			} catch (InputError const &e) {
				throw HttpError{400, e.what()};
			}
		}
		return std::move(*shared->value);
	}

	static humaneval::RatingRecord parse_scores(nlohmann::json const &body, std::string rater, std::string item)
	{
		nlohmann::json j = body;
		j["rater_id"] = std::move(rater);
		j["item_id"] = std::move(item);
		try {
			auto r = humaneval::rating_from_json(j);
			r.timestamp_ms = humaneval::now_ms();
			return r;
		} catch (RangeError const &e) {
			throw HttpError{422, e.what()};
		} catch (InputError const &e) {
			throw HttpError{422, e.what()};
		}
	}

	static std::string fresh_rater_token()
	{
		static std::mutex m;
		static std::mt19937_64 rng{std::random_device{}()};
		std::lock_guard lock(m);
		char buf[32];
		std::snprintf(buf, sizeof buf, "anon-%016llx", static_cast<unsigned long long>(rng()));
		return buf;
	}

	void routes()
	{
		server_.new_task_queue = [n = config_.http_threads] { return new httplib::ThreadPool(n); };
		server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
									 {"Access-Control-Allow-Headers", "Content-Type, X-Rater-Token"},
									 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
		server_.Options(R"(/api/.*)", [](httplib::Request const &, httplib::Response &res) { res.status = 204; });
		if (config_.static_dir)
			server_.set_mount_point("/", config_.static_dir->string());

		server_.Get("/api/health", guarded([this](httplib::Request const &, httplib::Response &res) {
			bool const ok = backend_->healthy();
			auto const uptime = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
			reply(res, ok ? 200 : 503,
				  {{"status", ok ? "ok" : "unavailable"}, {"backend", backend_->name()}, {"uptime_s", uptime}});
		}));

		server_.Post("/api/ask", guarded([this](httplib::Request const &req, httplib::Response &res) {
			auto const body = parse_body(req);
			if (!body.contains("question") || !body["question"].is_string())
				throw HttpError{400, "field 'question' (string) is required"};
			auto const question = unicode::trim(body["question"].get<std::string>());
			if (question.empty())
				throw HttpError{400, "question is empty"};
			if (unicode::scalar_count(question) > config_.max_question_chars)
				throw HttpError{400, "question exceeds " + std::to_string(config_.max_question_chars) + " characters"};
			auto greq = config_.generation;
			greq.question = question;
			auto const gen = run_generation(std::move(greq));
			auto const rec = asks_->add(question, gen.answer, gen.backend, gen.latency_ms);
			reply(res, 200, {{"answer_id", rec.answer_id}, {"answer", rec.answer}, {"latency_ms", rec.latency_ms}, {"backend", rec.backend}});
		}));

		server_.Get(R"(/api/ask/([^/]+))", guarded([this](httplib::Request const &req, httplib::Response &res) {
			auto rec = asks_->find(req.matches[1]);
			if (!rec)
				throw HttpError{404, "unknown answer_id"};
			reply(res, 200, to_json(*rec));
		}));

		server_.Post("/api/rate", guarded([this](httplib::Request const &req, httplib::Response &res) {
			auto const body = parse_body(req);
			if (!body.contains("answer_id") || !body["answer_id"].is_string())
				throw HttpError{422, "field 'answer_id' (string) is required"};
			auto const answer_id = body["answer_id"].get<std::string>();
			if (!asks_->contains(answer_id))
				throw HttpError{404, "unknown answer_id '" + answer_id + "'"};
			std::string token = req.get_header_value("X-Rater-Token");
			if (token.empty() && body.contains("rater_token") && body["rater_token"].is_string())
				token = body["rater_token"].get<std::string>();
			if (token.empty())
				token = fresh_rater_token();
			auto const record = parse_scores(body, token, answer_id);
			bool const superseded = ratings_->record(record);
			reply(res, 200, {{"ok", true}, {"rater_token", token}, {"superseded", superseded}});
		}));

		server_.Get(R"(/api/eval/session/([^/]+))", guarded([this](httplib::Request const &req, httplib::Response &res) {
			auto const s = session(req.matches[1]);
			if (!s)
				throw HttpError{404, "unknown session"};
			std::optional<std::string> rater;
			if (req.has_param("rater"))
				rater = req.get_param_value("rater");
			nlohmann::json view;
			try {
				view = humaneval::rater_view(*s, rater);
			} catch (UnknownItem const &e) {
				throw HttpError{404, e.what()};
			}
			if (rater) {
				auto const done = eval_ratings_->rated_items(*rater);
				auto &acked = view["rated_item_ids"] = nlohmann::json::array();
				for (auto const &item : view["items"])
					if (done.contains(item["item_id"].get<std::string>()))
						acked.push_back(item["item_id"]);
			}
			reply(res, 200, view);
		}));

		server_.Post("/api/eval/submit", guarded([this](httplib::Request const &req, httplib::Response &res) {
			auto const body = parse_body(req);
			for (char const *key : {"session_id", "rater_id", "item_id"})
				if (!body.contains(key) || !body[key].is_string())
					throw HttpError{422, std::string("field '") + key + "' (string) is required"};
			auto const s = session(body["session_id"].get<std::string>());
			if (!s)
				throw HttpError{404, "unknown session"};
			auto const item_id = body["item_id"].get<std::string>();
			if (!s->find(item_id))
				throw HttpError{404, "item '" + item_id + "' is not in this session"};
			if (s->closed)
				throw HttpError{409, "session is closed"};
			auto const record = parse_scores(body, body["rater_id"].get<std::string>(), item_id);
			bool superseded = false;
			try {
				superseded = humaneval::record_rating(*eval_ratings_, *s, record);
			} catch (SessionClosed const &e) {
				throw HttpError{409, e.what()};
			}
			reply(res, 200, {{"ok", true}, {"superseded", superseded}});
		}));

		server_.Get(R"(/api/eval/session/([^/]+)/aggregate)", guarded([this](httplib::Request const &req, httplib::Response &res) {
			auto const s = session(req.matches[1]);
			if (!s)
				throw HttpError{404, "unknown session"};
			try {
				reply(res, 200, humaneval::aggregate_to_json(humaneval::aggregate(*eval_ratings_, *s)));
			} catch (EmptyStore const &e) {
				throw HttpError{422, e.what()};
			}
		}));

		server_.Post(R"(/api/eval/session/([^/]+)/close)", guarded([this](httplib::Request const &req, httplib::Response &res) {
			auto const s = session(req.matches[1]);
			if (!s)
				throw HttpError{404, "unknown session"};
			auto closed = *s;
			closed.closed = true;
			put_session(std::move(closed));
			reply(res, 200, {{"ok", true}, {"closed", true}});
		}));

		server_.Post("/api/generate", guarded([this](httplib::Request const &req, httplib::Response &res) {
			auto const body = parse_body(req);
			lm::GenerationRequest greq;
			try {
				greq = body.get<lm::GenerationRequest>();
				greq.validate();
			} catch (nlohmann::json::exception const &e) {
				throw HttpError{400, std::string("bad generation request: ") + e.what()};
			} catch (InputError const &e) {
				throw HttpError{400, e.what()};
			}
			reply(res, 200, nlohmann::json(run_generation(std::move(greq))));
		}));
	}

	GatewayConfig config_;
	std::chrono::steady_clock::time_point started_;
	std::shared_ptr<lm::LmBackend> backend_;
	std::shared_ptr<GenerationGate> gate_;
	std::unique_ptr<AskStore> asks_;
	std::unique_ptr<humaneval::RatingStore> ratings_;
	std::unique_ptr<humaneval::RatingStore> eval_ratings_;
	mutable std::shared_mutex sessions_mutex_;
	std::map<std::string, std::shared_ptr<humaneval::EvalSession const>> sessions_;
	httplib::Server server_;
	std::thread thread_;
	int port_ = -1;
};

} // namespace counsel::gateway

#endif
