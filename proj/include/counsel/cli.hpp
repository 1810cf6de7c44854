#ifndef COUNSEL_CLI_HPP
#define COUNSEL_CLI_HPP

// Command-line front end. dispatch() parses argv, runs one subcommand and
// returns the process exit code: 0 success, 1 usage error, 2 runtime error.
// Each primary output gets a <output>.manifest.json beside it.

#include <counsel/analyze.hpp>
#include <counsel/clean.hpp>
#include <counsel/corpus.hpp>
#include <counsel/error.hpp>
#include <counsel/gateway.hpp>
#include <counsel/humaneval.hpp>
#include <counsel/ingest.hpp>
#include <counsel/lm/backend.hpp>
#include <counsel/lm/ngram.hpp>
#include <counsel/lm/remote.hpp>
#include <counsel/lm/simple_backends.hpp>
#include <counsel/metrics.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <pthread.h>
#include <signal.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#ifndef COUNSEL_VERSION
#define COUNSEL_VERSION "0.0.0"
#endif

namespace counsel::cli {

namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_runtime = 2;

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes)
{
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char c : bytes) {
		h ^= c;
		h *= 0x100000001b3ULL;
	}
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
	return buf;
}

struct RunManifest {
	std::string subcommand;
	std::string config_hash;
	std::vector<std::string> inputs;
	std::vector<std::string> outputs;
	std::string tool_version = COUNSEL_VERSION;
	double wall_time_s = 0;
	std::uint64_t seed = 0;
};

inline nlohmann::json to_json(RunManifest const &m)
{
	return {{"subcommand", m.subcommand}, {"config_hash", m.config_hash}, {"inputs", m.inputs},	{"outputs", m.outputs},
			{"tool_version", m.tool_version}, {"wall_time_s", m.wall_time_s}, {"seed", m.seed}};
}

inline fs::path manifest_path(fs::path const &output) { return fs::path(output.string() + ".manifest.json"); }

/// Effective settings of one run: option values plus the bytes of any
/// config files they name. The hash depends on nothing else.
struct RunConfig {
	nlohmann::json options = nlohmann::json::object();
	std::vector<fs::path> config_files;

	std::string hash() const
	{
		std::string material = options.dump();
		for (auto const &f : config_files) {
			material += '\0';
			material += read_file(f);
		}
		return fnv1a_hex(material);
	}
};

struct Globals {
	bool json = false;
	bool quiet = false;
	std::uint64_t seed = 0;
};

class Runner {
public:
	Runner(std::ostream &out, std::ostream &err) : out_(out), err_(err) {}

	int dispatch(std::vector<std::string> const &args)
	{
		CLI::App app{"Counselling QA toolkit: corpus preparation, n-gram baseline, evaluation and serving", "counsel"};
		app.set_version_flag("--version", COUNSEL_VERSION);
		app.require_subcommand(1);
		app.fallthrough();
		app.add_flag("--json", globals_.json, "Print errors as single-line JSON on stderr");
		app.add_flag("--quiet", globals_.quiet, "Suppress progress output");
		app.add_option("--seed", globals_.seed, "Seed for every randomized step")->capture_default_str();

		std::function<void()> action;
		add_ingest(app, action);
		add_clean(app, action);
		add_analyze(app, action);
		add_train(app, action);
		add_generate(app, action);
		add_eval_intrinsic(app, action);
		add_eval_human(app, action);
		add_serve(app, action);

		for (std::size_t i = 0; i < args.size(); ++i) {
			auto const &a = args[i];
			if (a == "--seed") {
				++i;
				continue;
			}
			if (a == "--json")
				globals_.json = true;
			if (a.starts_with('-'))
				continue;
			if (!app.get_subcommand_no_throw(a)) {
				report("UsageError", "unknown subcommand '" + a + "'");
				if (!globals_.json)
					err_ << app.help();
				return exit_usage;
			}
			break;
		}

		std::vector<char const *> argv{"counsel"};
		for (auto const &a : args)
			argv.push_back(a.c_str());
		try {
			app.parse(static_cast<int>(argv.size()), argv.data());
		} catch (CLI::CallForHelp const &) {
			out_ << app.help();
			return exit_ok;
		} catch (CLI::CallForAllHelp const &) {
			out_ << app.help("", CLI::AppFormatMode::All);
			return exit_ok;
		} catch (CLI::CallForVersion const &) {
			out_ << COUNSEL_VERSION << '\n';
			return exit_ok;
		} catch (CLI::ParseError const &e) {
			report("UsageError", e.what());
			if (!globals_.json)
				err_ << app.help();
			return exit_usage;
		}

		try {
			action();
			return exit_ok;
		} catch (UsageError const &e) {
			report("UsageError", e.what());
			return exit_usage;
		} catch (Error const &e) {
			report(e.kind(), e.what());
			return exit_runtime;
		} catch (nlohmann::json::exception const &e) {
			report("FormatError", e.what());
			return exit_runtime;
		} catch (std::exception const &e) {
			report("Error", e.what());
			return exit_runtime;
		}
	}

private:
	struct UsageError : std::runtime_error {
		using std::runtime_error::runtime_error;
	};

	void report(std::string const &kind, std::string const &message)
	{
		if (globals_.json)
			err_ << nlohmann::json{{"error", message}, {"kind", kind}}.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)
				 << '\n';
		else
			err_ << "counsel: " << message << '\n';
	}

	void info(std::string const &line)
	{
		if (!globals_.quiet)
			out_ << line << '\n';
	}

	void write_manifest(std::string const &subcommand, RunConfig const &config, std::vector<std::string> inputs,
						std::vector<std::string> outputs, std::chrono::steady_clock::time_point started)
	{
		RunManifest m;
		m.subcommand = subcommand;
		m.config_hash = config.hash();
		m.inputs = std::move(inputs);
		m.outputs = std::move(outputs);
		m.seed = globals_.seed;
		m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
		write_file(manifest_path(m.outputs.front()), to_json(m).dump(2) + "\n");
	}

	static void write_json(fs::path const &path, nlohmann::json const &j)
	{
		write_file(path, j.dump(2, ' ', false, nlohmann::json::error_handler_t::strict) + "\n");
	}

	// -- ingest -----------------------------------------------------------------

	void add_ingest(CLI::App &app, std::function<void()> &action)
	{
		auto *sub = app.add_subcommand("ingest", "Extract QA samples from an offline archive");
		auto o = std::make_shared<std::tuple<std::string, std::string, std::string, std::string>>();
		auto &[rules, archive, outp, report] = *o;
		sub->add_option("--rules", rules, "JSON array of extraction rules")->required();
		sub->add_option("--archive", archive, "Archive root directory")->required();
		sub->add_option("--out", outp, "Output corpus")->required();
		sub->add_option("--report", report, "Ingest report JSON (default <out>.report.json)");
		sub->callback([this, o, &action] {
			action = [this, o] {
				auto const &[rules, archive, outp, report_opt] = *o;
				auto const started = std::chrono::steady_clock::now();
				auto const report = report_opt.empty() ? outp + ".report.json" : report_opt;
				auto result = ingest::ingest(ingest::load_rules(rules), archive);
				write_corpus(result.corpus, outp);
				write_json(report, result.report);
				RunConfig cfg;
				cfg.config_files.push_back(rules);
				write_manifest("ingest", cfg, {rules, archive}, {outp, report}, started);
				info("ingest: " + std::to_string(result.report.files_seen) + " files, " +
					 std::to_string(result.report.samples_emitted) + " samples, " +
					 std::to_string(result.report.failures.size()) + " failures");
			};
		});
	}

	// -- clean ------------------------------------------------------------------

	void add_clean(CLI::App &app, std::function<void()> &action)
	{
		auto *sub = app.add_subcommand("clean", "Apply the cleaning rules to a corpus");
		auto o = std::make_shared<std::array<std::string, 4>>();
		sub->add_option("--config", (*o)[0], "Cleaning config JSON")->required();
		sub->add_option("--in", (*o)[1], "Input corpus")->required();
		sub->add_option("--out", (*o)[2], "Output corpus")->required();
		sub->add_option("--report", (*o)[3], "Cleaning report JSON")->required();
		sub->callback([this, o, &action] {
			action = [this, o] {
				auto const &[config, in, outp, report] = *o;
				auto const started = std::chrono::steady_clock::now();
				auto result = clean::run_pipeline(read_corpus(in), clean::load_config(config));
				write_corpus(result.corpus, outp);
				write_json(report, result.report);
				RunConfig cfg;
				cfg.config_files.push_back(config);
				write_manifest("clean", cfg, {config, in}, {outp, report}, started);
				info("clean: " + std::to_string(result.report.input_count) + " -> " + std::to_string(result.report.output_count) +
					 " samples");
			};
		});
	}

	// -- analyze ----------------------------------------------------------------

	void add_analyze(CLI::App &app, std::function<void()> &action)
	{
		struct Opts {
			std::string in, stopwords, tokenizer = "unicode", outp;
			std::size_t top_k = 100;
		};
		auto o = std::make_shared<Opts>();
		auto *sub = app.add_subcommand("analyze", "Sample-length statistics and word frequencies");
		sub->add_option("--in", o->in, "Input corpus")->required();
		sub->add_option("--stopwords", o->stopwords, "Stopword list, one token per line");
		sub->add_option("--tokenizer", o->tokenizer, "unicode or char")->capture_default_str();
		sub->add_option("--top-k", o->top_k, "Number of frequency entries")->capture_default_str();
		sub->add_option("--out", o->outp, "Output JSON")->required();
		sub->callback([this, o, &action] {
			action = [this, o] {
				auto const started = std::chrono::steady_clock::now();
				auto const mode = parse_tokenizer_mode(o->tokenizer);
				auto const corpus = read_corpus(o->in);
				std::set<std::string> stop;
				if (!o->stopwords.empty())
					stop = analyze::load_stopwords(o->stopwords);
				auto const stats = analyze::length_stats(corpus);
				nlohmann::json j{{"length_stats", stats},
								 {"word_freq", analyze::word_freq(corpus, stop, mode, o->top_k)},
								 {"tokenizer", to_string(mode)}};
				write_json(o->outp, j);
				RunConfig cfg;
				cfg.options = {{"tokenizer", to_string(mode)}, {"top_k", o->top_k}};
				std::vector<std::string> inputs{o->in};
				if (!o->stopwords.empty()) {
					cfg.config_files.push_back(o->stopwords);
					inputs.push_back(o->stopwords);
				}
				write_manifest("analyze", cfg, inputs, {o->outp}, started);
				info("analyze: " + std::to_string(stats.count) + " samples");
			};
		});
	}

	// -- train-ngram ------------------------------------------------------------

	void add_train(CLI::App &app, std::function<void()> &action)
	{
		struct Opts {
			std::string in, outp, tokenizer = "char";
			int order = 3;
			double k = 0.01;
			std::size_t max_tokens = 1000;
		};
		auto o = std::make_shared<Opts>();
		auto *sub = app.add_subcommand("train-ngram", "Train an add-k smoothed n-gram model");
		sub->add_option("--in", o->in, "Training corpus")->required();
		sub->add_option("--out", o->outp, "Model file (JSON)")->required();
		sub->add_option("--order,-n", o->order, "n-gram order")->capture_default_str();
		sub->add_option("--k", o->k, "Add-k smoothing constant")->capture_default_str();
		sub->add_option("--tokenizer", o->tokenizer, "char or unicode")->capture_default_str();
		sub->add_option("--max-tokens", o->max_tokens, "Per-sample token cap")->capture_default_str();
		sub->callback([this, o, &action] {
			action = [this, o] {
				auto const started = std::chrono::steady_clock::now();
				auto const mode = parse_tokenizer_mode(o->tokenizer);
				auto const model = lm::NgramModel::train(read_corpus(o->in), o->order, o->k, mode, o->max_tokens);
				model.save(o->outp);
				RunConfig cfg;
				cfg.options = {{"order", o->order}, {"k", o->k}, {"tokenizer", to_string(mode)}, {"max_tokens", o->max_tokens}};
				write_manifest("train-ngram", cfg, {o->in}, {o->outp}, started);
				info("train-ngram: |V| = " + std::to_string(model.predictive_vocab_size()));
			};
		});
	}

	// -- generate ---------------------------------------------------------------

	struct BackendOpts {
		std::string model;
		std::string remote;
		bool use_template = false;
		long long timeout_ms = 30000;
	};

	static void add_backend_options(CLI::App *sub, BackendOpts &b)
	{
		auto *m = sub->add_option("--model", b.model, "n-gram model file");
		auto *r = sub->add_option("--remote", b.remote, "Model server URL (http://host:port/api/generate)");
		auto *t = sub->add_flag("--template", b.use_template, "Use the fixed template backend");
		m->excludes(r)->excludes(t);
		r->excludes(t);
		sub->add_option("--timeout-ms", b.timeout_ms, "Remote request timeout")->capture_default_str();
	}

	static std::shared_ptr<lm::LmBackend> make_backend(BackendOpts const &b)
	{
		if (!b.model.empty())
			return std::make_shared<lm::NgramModel>(lm::NgramModel::load(b.model));
		if (!b.remote.empty())
			return std::make_shared<lm::RemoteBackend>(b.remote, std::chrono::milliseconds(b.timeout_ms));
		if (b.use_template)
			return std::make_shared<lm::TemplateBackend>();
		throw UsageError("choose a backend: --model, --remote or --template");
	}

	void add_generate(CLI::App &app, std::function<void()> &action)
	{
		struct Opts {
			BackendOpts backend;
			std::string question, in, outp;
			int max_new_tokens = 200;
			double temperature = 0;
		};
		auto o = std::make_shared<Opts>();
		auto *sub = app.add_subcommand("generate", "Answer questions with a backend");
		add_backend_options(sub, o->backend);
		auto *q = sub->add_option("--question", o->question, "Single question; the answer goes to --out or stdout");
		auto *i = sub->add_option("--in", o->in, "QA corpus; writes a prediction JSONL to --out");
		q->excludes(i);
		sub->add_option("--out", o->outp, "Output file");
		sub->add_option("--max-new-tokens", o->max_new_tokens, "Generation length cap")->capture_default_str();
		sub->add_option("--temperature", o->temperature, "0 = greedy")->capture_default_str();
		sub->callback([this, o, &action] {
			action = [this, o] {
				auto const started = std::chrono::steady_clock::now();
				if (o->question.empty() == o->in.empty())
					throw UsageError("generate needs exactly one of --question or --in");
				if (!o->in.empty() && o->outp.empty())
					throw UsageError("generate --in needs --out");
				if (o->max_new_tokens < 1)
					throw UsageError("--max-new-tokens must be >= 1");
				auto const backend = make_backend(o->backend);
				lm::GenerationRequest req;
				req.max_new_tokens = o->max_new_tokens;
				req.temperature = o->temperature;
				req.seed = globals_.seed;

				RunConfig cfg;
				cfg.options = {{"backend", backend->name()}, {"remote", o->backend.remote}, {"max_new_tokens", o->max_new_tokens},
							   {"temperature", o->temperature}, {"seed", globals_.seed}};
				if (!o->backend.model.empty())
					cfg.config_files.push_back(o->backend.model);

				if (!o->question.empty()) {
					req.question = o->question;
					auto const answer = lm::generate(*backend, req).answer;
					if (o->outp.empty()) {
						out_ << answer << '\n';
						return;
					}
					write_file(o->outp, answer + "\n");
					write_manifest("generate", cfg, {}, {o->outp}, started);
					return;
				}

				auto const corpus = read_corpus(o->in);
				std::string jsonl;
				for (auto const &s : corpus.samples) {
					auto const qa = parse_qa(s);
					req.question = qa.question;
					auto const answer = lm::generate(*backend, req).answer;
					jsonl += nlohmann::json{{"id", s.id}, {"question", qa.question}, {"reference", qa.answer}, {"prediction", answer}}
								 .dump() +
							 "\n";
				}
				write_file(o->outp, jsonl);
				std::vector<std::string> inputs{o->in};
				if (!o->backend.model.empty())
					inputs.push_back(o->backend.model);
				write_manifest("generate", cfg, inputs, {o->outp}, started);
				info("generate: " + std::to_string(corpus.size()) + " predictions");
			};
		});
	}

	// -- eval-intrinsic ---------------------------------------------------------

	void add_eval_intrinsic(CLI::App &app, std::function<void()> &action)
	{
		struct Opts {
			std::string pred, model, outp, tokenizer = "char", distinct = "per-response-mean";
		};
		auto o = std::make_shared<Opts>();
		auto *sub = app.add_subcommand("eval-intrinsic", "Perplexity, ROUGE-L and Distinct-1/2 over predictions");
		sub->add_option("--pred", o->pred, "Prediction JSONL")->required();
		sub->add_option("--model", o->model, "n-gram model used to score references (perplexity)");
		sub->add_option("--out", o->outp, "Report JSON")->required();
		sub->add_option("--tokenizer", o->tokenizer, "char or unicode")->capture_default_str();
		sub->add_option("--distinct", o->distinct, "per-response-mean or pooled")->capture_default_str();
		sub->callback([this, o, &action] {
			action = [this, o] {
				auto const started = std::chrono::steady_clock::now();
				metrics::EvalOptions opts;
				opts.tokenizer = parse_tokenizer_mode(o->tokenizer);
				if (o->distinct == "pooled")
					opts.distinct = metrics::DistinctAggregation::pooled;
				else if (o->distinct != "per-response-mean")
					throw UsageError("--distinct must be per-response-mean or pooled");
				auto const set = metrics::load_predictions(o->pred);
				std::optional<lm::NgramModel> model;
				if (!o->model.empty())
					model = lm::NgramModel::load(o->model);
				auto const report = metrics::evaluate(set, model ? &*model : nullptr, opts);
				write_json(o->outp, report);
				RunConfig cfg;
				cfg.options = {{"tokenizer", to_string(opts.tokenizer)}, {"distinct", to_string(opts.distinct)}};
				std::vector<std::string> inputs{o->pred};
				if (!o->model.empty()) {
					cfg.config_files.push_back(o->model);
					inputs.push_back(o->model);
				}
				write_manifest("eval-intrinsic", cfg, inputs, {o->outp}, started);
				info("eval-intrinsic: " + std::to_string(report.n_items) + " items");
			};
		});
	}

	// -- eval-human -------------------------------------------------------------

	void add_eval_human(CLI::App &app, std::function<void()> &action)
	{
		auto *group = app.add_subcommand("eval-human", "Blinded human rating sessions");
		group->require_subcommand(1);

		struct BuildOpts {
			std::string system_a, system_b, mode = "pairwise", session_id, outp, label_a, label_b, label_truth = "Ground Truth";
			std::size_t raters = 1, overlap = 0;
		};
		auto b = std::make_shared<BuildOpts>();
		auto *build = group->add_subcommand("build", "Build a session from prediction files");
		build->add_option("--system-a", b->system_a, "Prediction JSONL of the first system")->required();
		build->add_option("--system-b", b->system_b, "Prediction JSONL of the second system");
		build->add_option("--mode", b->mode, "pairwise or blended")->capture_default_str();
		build->add_option("--session-id", b->session_id, "Session id")->required();
		build->add_option("--raters", b->raters, "Number of raters")->capture_default_str();
		build->add_option("--overlap", b->overlap, "Questions shown to every rater")->capture_default_str();
		build->add_option("--label-a", b->label_a, "Report label of system A");
		build->add_option("--label-b", b->label_b, "Report label of system B");
		build->add_option("--label-truth", b->label_truth, "Report label of the ground truth")->capture_default_str();
		build->add_option("--out", b->outp, "Session file")->required();
		build->callback([this, b, &action] {
			action = [this, b] {
				auto const started = std::chrono::steady_clock::now();
				humaneval::SessionSpec spec;
				spec.session_id = b->session_id;
				spec.mode = humaneval::parse_mode(b->mode);
				spec.n_raters = b->raters;
				spec.overlap = b->overlap;
				spec.seed = globals_.seed;
				auto const a = metrics::load_predictions(b->system_a);
				for (auto const &item : a.items) {
					spec.questions.push_back({item.id, item.question});
					spec.answers[humaneval::Origin::system_a][item.id] = item.prediction;
					if (spec.mode == humaneval::Mode::blended)
						spec.answers[humaneval::Origin::ground_truth][item.id] = item.reference;
				}
				if (!b->system_b.empty())
					for (auto const &item : metrics::load_predictions(b->system_b).items)
						spec.answers[humaneval::Origin::system_b][item.id] = item.prediction;
				if (!b->label_a.empty())
					spec.origin_labels[humaneval::Origin::system_a] = b->label_a;
				if (!b->label_b.empty())
					spec.origin_labels[humaneval::Origin::system_b] = b->label_b;
				if (spec.mode == humaneval::Mode::blended)
					spec.origin_labels[humaneval::Origin::ground_truth] = b->label_truth;
				auto const session = humaneval::build_session(spec);
				humaneval::save_session(session, b->outp);
				RunConfig cfg;
				cfg.options = {{"mode", b->mode},
							   {"session_id", b->session_id},
							   {"raters", b->raters},
							   {"overlap", b->overlap},
							   {"seed", globals_.seed}};
				std::vector<std::string> inputs{b->system_a};
				if (!b->system_b.empty())
					inputs.push_back(b->system_b);
				for (auto const &f : inputs)
					cfg.config_files.push_back(f);
				write_manifest("eval-human build", cfg, inputs, {b->outp}, started);
				info("eval-human build: " + std::to_string(session.items.size()) + " items for " + std::to_string(b->raters) +
					 " raters");
			};
		});

		struct ExportOpts {
			std::string session, rater, outp;
		};
		auto e = std::make_shared<ExportOpts>();
		auto *exp = group->add_subcommand("export", "Write the rater-facing view of a session (no origins)");
		exp->add_option("--session", e->session, "Session file")->required();
		exp->add_option("--rater", e->rater, "Only this rater's items");
		exp->add_option("--out", e->outp, "Output JSON")->required();
		exp->callback([this, e, &action] {
			action = [this, e] {
				auto const started = std::chrono::steady_clock::now();
				auto const session = humaneval::load_session(e->session);
				std::optional<std::string> rater;
				if (!e->rater.empty())
					rater = e->rater;
				write_json(e->outp, humaneval::rater_view(session, rater));
				RunConfig cfg;
				cfg.options = {{"rater", e->rater}};
				cfg.config_files.push_back(e->session);
				write_manifest("eval-human export", cfg, {e->session}, {e->outp}, started);
			};
		});

		struct AggOpts {
			std::string session, ratings, outp, format = "json";
		};
		auto g = std::make_shared<AggOpts>();
		auto *agg = group->add_subcommand("aggregate", "Mean rating per metric and origin");
		agg->add_option("--session", g->session, "Session file")->required();
		agg->add_option("--ratings", g->ratings, "Ratings log (JSONL)")->required();
		agg->add_option("--out", g->outp, "Output file")->required();
		agg->add_option("--format", g->format, "json or text")->capture_default_str();
		agg->callback([this, g, &action] {
			action = [this, g] {
				auto const started = std::chrono::steady_clock::now();
				if (g->format != "json" && g->format != "text")
					throw UsageError("--format must be json or text");
				auto const session = humaneval::load_session(g->session);
				auto const table = humaneval::aggregate(humaneval::read_ratings(g->ratings), session);
				if (g->format == "json")
					write_json(g->outp, humaneval::aggregate_to_json(table));
				else
					write_file(g->outp, humaneval::aggregate_to_text(table));
				RunConfig cfg;
				cfg.options = {{"format", g->format}};
				cfg.config_files = {g->session, g->ratings};
				write_manifest("eval-human aggregate", cfg, {g->session, g->ratings}, {g->outp}, started);
				if (!globals_.quiet)
					out_ << humaneval::aggregate_to_text(table);
			};
		});

		auto c = std::make_shared<std::string>();
		auto *close = group->add_subcommand("close", "Stop accepting ratings for a session");
		close->add_option("--session", *c, "Session file")->required();
		close->callback([this, c, &action] {
			action = [this, c] {
				auto session = humaneval::load_session(*c);
				session.closed = true;
				humaneval::save_session(session, *c);
				info("eval-human close: " + session.session_id + " closed");
			};
		});
	}

	// -- serve ------------------------------------------------------------------

	void add_serve(CLI::App &app, std::function<void()> &action)
	{
		struct Opts {
			std::string config, bind, data_dir;
		};
		auto o = std::make_shared<Opts>();
		auto *sub = app.add_subcommand("serve", "Run the HTTP gateway until SIGINT/SIGTERM");
		sub->add_option("--config", o->config, "Gateway config JSON")->required();
		sub->add_option("--bind", o->bind, "host:port, overrides config and COUNSEL_BIND");
		sub->add_option("--data-dir", o->data_dir, "Overrides config and COUNSEL_DATA_DIR");
		sub->callback([this, o, &action] {
			action = [this, o] {
				auto config = gateway::load_config(o->config);
				if (!o->bind.empty())
					gateway::apply_bind(config, o->bind);
				if (!o->data_dir.empty())
					config.data_dir = o->data_dir;
				config.validate();

				// Block the stop signals before any thread exists so that
				// only sigwait below receives them.
				sigset_t stop_signals, previous;
				sigemptyset(&stop_signals);
				sigaddset(&stop_signals, SIGINT);
				sigaddset(&stop_signals, SIGTERM);
				pthread_sigmask(SIG_BLOCK, &stop_signals, &previous);
				int received = 0;
				{
					gateway::Gateway gw(config);
					int const port = gw.start();
					out_ << "listening on http://" << config.host << ':' << port << " backend=" << gw.backend().name()
						 << " data_dir=" << config.data_dir.string() << std::endl;
					sigwait(&stop_signals, &received);
					gw.stop();
				}
				pthread_sigmask(SIG_SETMASK, &previous, nullptr);
				info("serve: stopped on signal " + std::to_string(received));
			};
		});
	}

	std::ostream &out_;
	std::ostream &err_;
	Globals globals_;
};

inline int dispatch(std::vector<std::string> const &args, std::ostream &out = std::cout, std::ostream &err = std::cerr)
{
	return Runner(out, err).dispatch(args);
}

} // namespace counsel::cli

#endif
