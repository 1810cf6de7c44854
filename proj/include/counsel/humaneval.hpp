#ifndef COUNSEL_HUMANEVAL_HPP
#define COUNSEL_HUMANEVAL_HPP

// Human rating protocol: blinded rating sessions in two modes, a durable
// rating store, and aggregation into a metric x origin table.
//
//   pairwise  every question shows one answer from each of two systems
//   blended   model answers and ground-truth answers are mixed together
//
// Each displayed answer is rated 1-5 on helpfulness, fluency, relevance and
// logic. Raters never see where an answer came from: rater-facing payloads
// are built by rater_view(), which has no access path to the origin.

#include <counsel/error.hpp>
#include <counsel/event_log.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace counsel::humaneval {

enum class Origin { system_a, system_b, ground_truth };
enum class Mode { pairwise, blended };
enum class Metric { helpfulness, fluency, relevance, logic };

inline constexpr std::array<Metric, 4> all_metrics{Metric::helpfulness, Metric::fluency, Metric::relevance, Metric::logic};
inline constexpr std::array<Origin, 3> all_origins{Origin::system_a, Origin::system_b, Origin::ground_truth};

inline std::string_view to_string(Origin o)
{
	switch (o) {
	case Origin::system_a: return "systemA";
	case Origin::system_b: return "systemB";
	case Origin::ground_truth: return "ground_truth";
	}
	return "?";
}

inline Origin parse_origin(std::string_view s)
{
	for (auto o : all_origins)
		if (to_string(o) == s)
			return o;
	throw InputError("unknown origin '" + std::string(s) + "'");
}

inline std::string_view to_string(Mode m) { return m == Mode::pairwise ? "pairwise" : "blended"; }

inline Mode parse_mode(std::string_view s)
{
	if (s == "pairwise")
		return Mode::pairwise;
	if (s == "blended")
		return Mode::blended;
	throw InputError("unknown session mode '" + std::string(s) + "'");
}

inline std::string_view to_string(Metric m)
{
	switch (m) {
	case Metric::helpfulness: return "helpfulness";
	case Metric::fluency: return "fluency";
	case Metric::relevance: return "relevance";
	case Metric::logic: return "logic";
	}
	return "?";
}

inline std::string_view display_name(Metric m)
{
	switch (m) {
	case Metric::helpfulness: return "Helpfulness";
	case Metric::fluency: return "Fluency";
	case Metric::relevance: return "Relevance";
	case Metric::logic: return "Logic";
	}
	return "?";
}

struct EvalItem {
	std::string item_id;
	std::string session_id;
	std::string question_id;
	std::string question;
	std::string displayed_answer;
	std::size_t group = 0; // position of the question in display order
	Origin origin = Origin::system_a;
};

struct EvalSession {
	std::string session_id;
	Mode mode = Mode::pairwise;
	std::vector<EvalItem> items;
	std::map<std::string, std::vector<std::string>> assignment; // rater id -> item ids
	std::uint64_t seed = 0;
	std::size_t overlap = 0;
	bool closed = false;
	std::map<Origin, std::string> origin_labels;

	EvalItem const *find(std::string_view item_id) const
	{
		for (auto const &i : items)
			if (i.item_id == item_id)
				return &i;
		return nullptr;
	}

	std::vector<Origin> origins() const
	{
		std::set<Origin> present;
		for (auto const &i : items)
			present.insert(i.origin);
		return {present.begin(), present.end()};
	}

	std::string label(Origin o) const
	{
		auto it = origin_labels.find(o);
		return it == origin_labels.end() ? std::string(to_string(o)) : it->second;
	}
};

// -- Session construction ---------------------------------------------------

struct Question {
	std::string id;
	std::string text;
};

struct SessionSpec {
	std::string session_id;
	Mode mode = Mode::pairwise;
	std::vector<Question> questions;
	std::map<Origin, std::map<std::string, std::string>> answers; // origin -> question id -> answer
	std::size_t n_raters = 1;
	std::size_t overlap = 0;
	std::uint64_t seed = 0;
	std::map<Origin, std::string> origin_labels;
};

namespace detail {

/// Uniform integer in [0, bound) by rejection; portable across standard
/// libraries unlike std::uniform_int_distribution.
inline std::uint64_t uniform_below(std::mt19937_64 &rng, std::uint64_t bound)
{
	std::uint64_t const limit = UINT64_MAX - UINT64_MAX % bound;
	std::uint64_t x;
	do
		x = rng();
	while (x >= limit);
	return x % bound;
}

template <typename T>
void shuffle(std::vector<T> &v, std::mt19937_64 &rng)
{
	for (std::size_t i = v.size(); i > 1; --i)
		std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

inline std::string pad(std::size_t n, std::size_t width)
{
	auto s = std::to_string(n);
	return s.size() >= width ? s : std::string(width - s.size(), '0') + s;
}

} // namespace detail

/// Builds a blinded session. Display order is shuffled with `seed`; the
/// first `overlap` questions (in display order) go to every rater and the
/// rest are dealt round-robin.
inline EvalSession build_session(SessionSpec const &spec)
{
	if (spec.questions.empty())
		throw InputError("no questions given");
	if (spec.n_raters < 1)
		throw InputError("need at least one rater");
	if (spec.overlap > spec.questions.size())
		throw InputError("overlap exceeds the number of questions");

	std::vector<Origin> origins;
	for (auto const &[o, _] : spec.answers)
		origins.push_back(o);
	if (spec.mode == Mode::pairwise) {
		std::vector<Origin> systems;
		for (auto o : origins)
			if (o != Origin::ground_truth)
				systems.push_back(o);
		if (systems.size() != 2 || origins.size() != 2)
			throw InputError("pairwise sessions need answers from exactly systemA and systemB");
	} else {
		bool const has_truth = spec.answers.contains(Origin::ground_truth);
		if (!has_truth || origins.size() < 2)
			throw InputError("blended sessions need ground-truth answers and at least one system");
	}

	std::set<std::string> qids;
	for (auto const &q : spec.questions)
		if (!qids.insert(q.id).second)
			throw InputError("duplicate question id '" + q.id + "'");
	for (auto const &q : spec.questions)
		for (auto o : origins) {
			auto const &by_q = spec.answers.at(o);
			auto it = by_q.find(q.id);
			if (it == by_q.end() || it->second.empty())
				throw InputError("question '" + q.id + "' has no " + std::string(to_string(o)) + " answer");
		}

	std::mt19937_64 rng(spec.seed);
	std::vector<std::size_t> q_order(spec.questions.size());
	for (std::size_t i = 0; i < q_order.size(); ++i)
		q_order[i] = i;
	detail::shuffle(q_order, rng);

	struct Pending {
		std::size_t group;
		std::size_t question;
		Origin origin;
	};
	std::vector<Pending> pending;
	for (std::size_t g = 0; g < q_order.size(); ++g) {
		std::vector<Origin> within = origins;
		if (spec.mode == Mode::pairwise)
			detail::shuffle(within, rng);
		for (auto o : within)
			pending.push_back({g, q_order[g], o});
	}
	if (spec.mode == Mode::blended)
		detail::shuffle(pending, rng);

	EvalSession s;
	s.session_id = spec.session_id.empty() ? "session-" + std::to_string(spec.seed) : spec.session_id;
	s.mode = spec.mode;
	s.seed = spec.seed;
	s.overlap = spec.overlap;
	s.origin_labels = spec.origin_labels;
	std::size_t const width = std::to_string(pending.size()).size();
	std::map<std::size_t, std::vector<std::string>> items_by_group;
	for (std::size_t i = 0; i < pending.size(); ++i) {
		auto const &p = pending[i];
		auto const &q = spec.questions[p.question];
		EvalItem item;
		item.item_id = s.session_id + "-" + detail::pad(i, width);
		item.session_id = s.session_id;
		item.question_id = q.id;
		item.question = q.text;
		item.displayed_answer = spec.answers.at(p.origin).at(q.id);
		item.group = p.group;
		item.origin = p.origin;
		items_by_group[p.group].push_back(item.item_id);
		s.items.push_back(std::move(item));
	}

	std::vector<std::string> raters;
	for (std::size_t r = 0; r < spec.n_raters; ++r)
		raters.push_back("rater-" + std::to_string(r + 1));
	for (auto const &r : raters)
		s.assignment[r];
	std::size_t dealt = 0;
	for (std::size_t g = 0; g < q_order.size(); ++g) {
		auto const &ids = items_by_group[g];
		if (g < spec.overlap) {
			for (auto const &r : raters)
				s.assignment[r].insert(s.assignment[r].end(), ids.begin(), ids.end());
		} else {
			auto &target = s.assignment[raters[dealt++ % raters.size()]];
			target.insert(target.end(), ids.begin(), ids.end());
		}
	}
	// Keep each rater's list in display order.
	std::map<std::string, std::size_t> position;
	for (std::size_t i = 0; i < s.items.size(); ++i)
		position[s.items[i].item_id] = i;
	for (auto &[_, ids] : s.assignment)
		std::sort(ids.begin(), ids.end(), [&](auto const &a, auto const &b) { return position[a] < position[b]; });
	return s;
}

// -- Serialization ----------------------------------------------------------

/// Full session record for storage; includes origins. Never send to raters.
inline nlohmann::json session_to_json(EvalSession const &s)
{
	nlohmann::json j;
	j["session_id"] = s.session_id;
	j["mode"] = to_string(s.mode);
	j["seed"] = s.seed;
	j["overlap"] = s.overlap;
	j["closed"] = s.closed;
	auto &labels = j["origin_labels"] = nlohmann::json::object();
	for (auto const &[o, l] : s.origin_labels)
		labels[std::string(to_string(o))] = l;
	auto &items = j["items"] = nlohmann::json::array();
	for (auto const &i : s.items)
		items.push_back({{"item_id", i.item_id},
						 {"question_id", i.question_id},
						 {"question", i.question},
						 {"answer", i.displayed_answer},
						 {"group", i.group},
						 {"origin", to_string(i.origin)}});
	j["assignment"] = s.assignment;
	return j;
}

inline EvalSession session_from_json(nlohmann::json const &j)
{
	EvalSession s;
	try {
		s.session_id = j.at("session_id").get<std::string>();
		s.mode = parse_mode(j.at("mode").get<std::string>());
		s.seed = j.value("seed", std::uint64_t{0});
		s.overlap = j.value("overlap", std::size_t{0});
		s.closed = j.value("closed", false);
		if (j.contains("origin_labels"))
			for (auto const &[k, v] : j["origin_labels"].items())
				s.origin_labels[parse_origin(k)] = v.get<std::string>();
		std::set<std::string> ids;
		for (auto const &ij : j.at("items")) {
			EvalItem i;
			i.item_id = ij.at("item_id").get<std::string>();
			i.session_id = s.session_id;
			i.question_id = ij.value("question_id", "");
			i.question = ij.at("question").get<std::string>();
			i.displayed_answer = ij.at("answer").get<std::string>();
			i.group = ij.value("group", std::size_t{0});
			i.origin = parse_origin(ij.at("origin").get<std::string>());
			if (!ids.insert(i.item_id).second)
				throw FormatError("duplicate item id '" + i.item_id + "' in session");
			s.items.push_back(std::move(i));
		}
		if (j.contains("assignment"))
			s.assignment = j["assignment"].get<std::map<std::string, std::vector<std::string>>>();
		for (auto const &[rater, assigned] : s.assignment)
			for (auto const &id : assigned)
				if (!ids.contains(id))
					throw FormatError("rater '" + rater + "' is assigned unknown item '" + id + "'");
	} catch (nlohmann::json::exception const &e) {
		throw FormatError(std::string("session file: ") + e.what());
	} catch (InputError const &e) {
		throw FormatError(std::string("session file: ") + e.what());
	}
	return s;
}

inline EvalSession load_session(std::filesystem::path const &path)
{
	try {
		return session_from_json(nlohmann::json::parse(read_file(path)));
	} catch (nlohmann::json::exception const &e) {
		throw FormatError("session file '" + path.string() + "': " + e.what());
	}
}

inline void save_session(EvalSession const &s, std::filesystem::path const &path)
{
	write_file(path, session_to_json(s).dump(2) + "\n");
}

/// What a rater sees: questions and answers with opaque ids, no origin. With
/// a rater id only that rater's assigned items are listed.
inline nlohmann::json rater_view(EvalSession const &s, std::optional<std::string> const &rater = std::nullopt)
{
	std::set<std::string> allowed;
	if (rater) {
		auto it = s.assignment.find(*rater);
		if (it == s.assignment.end())
			throw UnknownItem("rater '" + *rater + "' is not part of session '" + s.session_id + "'");
		allowed.insert(it->second.begin(), it->second.end());
	}
	nlohmann::json j;
	j["session_id"] = s.session_id;
	j["mode"] = to_string(s.mode);
	j["closed"] = s.closed;
	auto &items = j["items"] = nlohmann::json::array();
	for (auto const &i : s.items) {
		if (rater && !allowed.contains(i.item_id))
			continue;
		items.push_back({{"item_id", i.item_id},
						 {"question_id", i.question_id},
						 {"question", i.question},
						 {"answer", i.displayed_answer},
						 {"group", i.group}});
	}
	if (rater)
		j["rater_id"] = *rater;
	j["metrics"] = nlohmann::json::array();
	for (auto m : all_metrics)
		j["metrics"].push_back(to_string(m));
	j["scale"] = {{"min", 1}, {"max", 5}};
	return j;
}

// -- Ratings ------------------------------------------------------------------

struct RatingRecord {
	std::string rater_id;
	std::string item_id;
	std::array<int, 4> scores{}; // indexed by Metric
	std::int64_t timestamp_ms = 0;

	int score(Metric m) const { return scores[static_cast<std::size_t>(m)]; }

	void validate() const
	{
		if (rater_id.empty())
			throw InputError("rating without rater_id");
		if (item_id.empty())
			throw InputError("rating without item_id");
		for (auto m : all_metrics)
			if (score(m) < 1 || score(m) > 5)
				throw RangeError(std::string(to_string(m)) + " score " + std::to_string(score(m)) + " is outside 1-5");
	}

	friend bool operator==(RatingRecord const &, RatingRecord const &) = default;
};

inline nlohmann::json rating_to_json(RatingRecord const &r)
{
	nlohmann::json j{{"rater_id", r.rater_id}, {"item_id", r.item_id}, {"timestamp_ms", r.timestamp_ms}};
	for (auto m : all_metrics)
		j[std::string(to_string(m))] = r.score(m);
	return j;
}

/// Parses a rating; scores must be integers. Missing or non-integer scores
/// raise InputError, out-of-range ones RangeError.
inline RatingRecord rating_from_json(nlohmann::json const &j)
{
	RatingRecord r;
	auto str = [&](char const *key) {
		if (!j.contains(key) || !j[key].is_string())
			throw InputError(std::string("missing string field '") + key + "'");
		return j[key].get<std::string>();
	};
	r.rater_id = str("rater_id");
	r.item_id = str("item_id");
	for (auto m : all_metrics) {
		auto const key = std::string(to_string(m));
		if (!j.contains(key) || !j[key].is_number_integer())
			throw InputError("missing or non-integer score '" + key + "'");
		auto const v = j[key].get<long long>();
		r.scores[static_cast<std::size_t>(m)] = static_cast<int>(std::clamp<long long>(v, -1000, 1000));
	}
	if (j.contains("timestamp_ms") && j["timestamp_ms"].is_number_integer())
		r.timestamp_ms = j["timestamp_ms"].get<std::int64_t>();
	r.validate();
	return r;
}

inline std::int64_t now_ms()
{
	return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

/// Durable rating store over an append-only event log. State is the replay
/// of the log: the latest rating per (rater, item) wins, and a replacement
/// is logged with `"supersedes": true`.
class RatingStore {
public:
	using ItemCheck = std::function<bool(std::string const &item_id)>;

	/// Replays `log_path`; when `item_exists` is given every replayed rating
	/// must refer to a known item (FormatError otherwise).
	explicit RatingStore(std::filesystem::path log_path, ItemCheck item_exists = {}, bool sync = true)
		: item_exists_(std::move(item_exists))
	{
		replay_log(log_path, [&](nlohmann::json const &j) {
			RatingRecord r;
			try {
				r = rating_from_json(j);
			} catch (Error const &e) {
				throw FormatError(log_path.string() + ": invalid rating event: " + e.what());
			}
			if (item_exists_ && !item_exists_(r.item_id))
				throw FormatError(log_path.string() + ": rating refers to unknown item '" + r.item_id + "'");
			apply(r);
		});
		log_ = std::make_unique<EventLog>(std::move(log_path), sync);
	}

	/// Validates and persists a rating. Returns true when it replaced an
	/// earlier rating by the same rater for the same item.
	bool record(RatingRecord const &r)
	{
		r.validate();
		if (item_exists_ && !item_exists_(r.item_id))
			throw UnknownItem("unknown item '" + r.item_id + "'");
		std::unique_lock lock(mutex_);
		bool const supersedes = index_.contains({r.rater_id, r.item_id});
		auto event = rating_to_json(r);
		if (supersedes)
			event["supersedes"] = true;
		log_->append(event);
		apply(r);
		if (supersedes)
			++supersessions_;
		return supersedes;
	}

	std::vector<RatingRecord> snapshot() const
	{
		std::shared_lock lock(mutex_);
		return ratings_;
	}

	std::size_t size() const
	{
		std::shared_lock lock(mutex_);
		return ratings_.size();
	}

	std::size_t supersessions() const
	{
		std::shared_lock lock(mutex_);
		return supersessions_;
	}

	std::set<std::string> rated_items(std::string const &rater_id) const
	{
		std::shared_lock lock(mutex_);
		std::set<std::string> out;
		for (auto const &r : ratings_)
			if (r.rater_id == rater_id)
				out.insert(r.item_id);
		return out;
	}

	std::filesystem::path const &path() const { return log_->path(); }

private:
	void apply(RatingRecord const &r)
	{
		auto const key = std::make_pair(r.rater_id, r.item_id);
		if (auto it = index_.find(key); it != index_.end()) {
			ratings_[it->second] = r;
		} else {
			index_.emplace(key, ratings_.size());
			ratings_.push_back(r);
		}
	}

	ItemCheck item_exists_;
	std::unique_ptr<EventLog> log_;
	mutable std::shared_mutex mutex_;
	std::vector<RatingRecord> ratings_;
	std::map<std::pair<std::string, std::string>, std::size_t> index_;
	std::size_t supersessions_ = 0;
};

/// Replays a ratings log without opening it for writing. Later ratings by
/// the same rater for the same item replace earlier ones.
inline std::vector<RatingRecord> read_ratings(std::filesystem::path const &log_path)
{
	std::vector<RatingRecord> out;
	std::map<std::pair<std::string, std::string>, std::size_t> index;
	replay_log(log_path, [&](nlohmann::json const &j) {
		RatingRecord r;
		try {
			r = rating_from_json(j);
		} catch (Error const &e) {
			throw FormatError(log_path.string() + ": invalid rating event: " + e.what());
		}
		auto const key = std::make_pair(r.rater_id, r.item_id);
		if (auto it = index.find(key); it != index.end()) {
			out[it->second] = r;
		} else {
			index.emplace(key, out.size());
			out.push_back(r);
		}
	});
	return out;
}

/// Records a rating for a session item, enforcing session membership and the
/// open/closed lifecycle.
inline bool record_rating(RatingStore &store, EvalSession const &session, RatingRecord const &r)
{
	if (session.closed)
		throw SessionClosed("session '" + session.session_id + "' is closed");
	r.validate();
	if (!session.find(r.item_id))
		throw UnknownItem("item '" + r.item_id + "' is not in session '" + session.session_id + "'");
	return store.record(r);
}

// -- Aggregation --------------------------------------------------------------

struct AggregateTable {
	std::string session_id;
	std::vector<Origin> columns;
	std::vector<std::string> column_labels;
	// means[metric][column], rounded to two decimals
	std::array<std::vector<double>, 4> means;
	std::vector<std::size_t> counts; // ratings per column

	double mean(Metric m, Origin o) const
	{
		for (std::size_t c = 0; c < columns.size(); ++c)
			if (columns[c] == o)
				return means[static_cast<std::size_t>(m)][c];
		throw InputError("origin not in table");
	}
};

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

/// Mean score per (origin, metric) over the session's ratings. Every origin
/// in the session needs at least one rating.
inline AggregateTable aggregate(std::vector<RatingRecord> const &ratings, EvalSession const &session)
{
	AggregateTable t;
	t.session_id = session.session_id;
	t.columns = session.origins();
	std::map<Origin, std::size_t> column;
	for (std::size_t c = 0; c < t.columns.size(); ++c) {
		column[t.columns[c]] = c;
		t.column_labels.push_back(session.label(t.columns[c]));
	}
	std::vector<std::array<long long, 4>> sums(t.columns.size(), {0, 0, 0, 0});
	t.counts.assign(t.columns.size(), 0);
	std::map<std::string, Origin> origin_of;
	for (auto const &i : session.items)
		origin_of[i.item_id] = i.origin;
	for (auto const &r : ratings) {
		auto it = origin_of.find(r.item_id);
		if (it == origin_of.end())
			continue;
		auto const c = column.at(it->second);
		++t.counts[c];
		for (auto m : all_metrics)
			sums[c][static_cast<std::size_t>(m)] += r.score(m);
	}
	for (std::size_t c = 0; c < t.columns.size(); ++c)
		if (t.counts[c] == 0)
			throw EmptyStore("no ratings for " + std::string(to_string(t.columns[c])) + " in session '" + session.session_id + "'");
	for (auto m : all_metrics) {
		auto &row = t.means[static_cast<std::size_t>(m)];
		for (std::size_t c = 0; c < t.columns.size(); ++c)
			row.push_back(round2(static_cast<double>(sums[c][static_cast<std::size_t>(m)]) / static_cast<double>(t.counts[c])));
	}
	return t;
}

inline AggregateTable aggregate(RatingStore const &store, EvalSession const &session)
{
	return aggregate(store.snapshot(), session);
}

inline std::string format_2dp(double x)
{
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.2f", x);
	return buf;
}

/// Rows are metrics, columns are origins, as in the published rating tables.
inline nlohmann::json aggregate_to_json(AggregateTable const &t)
{
	nlohmann::json j;
	j["session_id"] = t.session_id;
	j["columns"] = nlohmann::json::array();
	for (std::size_t c = 0; c < t.columns.size(); ++c)
		j["columns"].push_back({{"origin", to_string(t.columns[c])}, {"label", t.column_labels[c]}, {"ratings", t.counts[c]}});
	auto &rows = j["rows"] = nlohmann::json::array();
	for (auto m : all_metrics) {
		nlohmann::json row{{"metric", display_name(m)}};
		auto &values = row["values"] = nlohmann::json::array();
		auto &text = row["text"] = nlohmann::json::array();
		for (double v : t.means[static_cast<std::size_t>(m)]) {
			values.push_back(v);
			text.push_back(format_2dp(v));
		}
		rows.push_back(std::move(row));
	}
	return j;
}

inline std::string aggregate_to_text(AggregateTable const &t)
{
	std::string out = "Rating Metrics";
	for (auto const &l : t.column_labels)
		out += " | " + l;
	out += '\n';
	for (auto m : all_metrics) {
		out += display_name(m);
		for (double v : t.means[static_cast<std::size_t>(m)])
			out += " | " + format_2dp(v);
		out += '\n';
	}
	return out;
}

} // namespace counsel::humaneval

#endif
