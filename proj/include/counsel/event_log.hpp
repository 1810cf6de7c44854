#ifndef COUNSEL_EVENT_LOG_HPP
#define COUNSEL_EVENT_LOG_HPP

// Append-only JSONL event log. Each event is written with a single write(2)
// on an O_APPEND descriptor while holding the log's mutex, so concurrent
// appenders never interleave within a line.

#include <counsel/corpus.hpp>
#include <counsel/error.hpp>

#include <nlohmann/json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>

namespace counsel {

class EventLog {
public:
	explicit EventLog(std::filesystem::path path, bool sync = true) : path_(std::move(path)), sync_(sync)
	{
		if (path_.has_parent_path())
			std::filesystem::create_directories(path_.parent_path());
		fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
		if (fd_ < 0)
			throw IoError("cannot open event log '" + path_.string() + "': " + std::strerror(errno));
	}

	EventLog(EventLog const &) = delete;
	EventLog &operator=(EventLog const &) = delete;

	~EventLog()
	{
		if (fd_ >= 0)
			::close(fd_);
	}

	std::filesystem::path const &path() const noexcept { return path_; }

	void append(nlohmann::json const &event)
	{
		auto line = event.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
		line += '\n';
		std::lock_guard lock(mutex_);
		std::size_t written = 0;
		while (written < line.size()) {
			auto const n = ::write(fd_, line.data() + written, line.size() - written);
			if (n < 0) {
				if (errno == EINTR)
					continue;
				throw IoError("append to '" + path_.string() + "' failed: " + std::strerror(errno));
			}
			written += static_cast<std::size_t>(n);
		}
		if (sync_ && ::fdatasync(fd_) != 0)
			throw IoError("fdatasync on '" + path_.string() + "' failed: " + std::strerror(errno));
	}

private:
	std::filesystem::path path_;
	bool sync_;
	int fd_ = -1;
	std::mutex mutex_;
};

struct ReplayStats {
	std::size_t events = 0;
	std::size_t corrupt_lines = 0;
};

/// Feeds every event of a log to `visit` in file order. A missing file is an
/// empty log. Corrupt lines throw unless `tolerate_corruption` is set, in
/// which case they are counted and skipped.
inline ReplayStats replay_log(std::filesystem::path const &path, std::function<void(nlohmann::json const &)> const &visit,
							  bool tolerate_corruption = false)
{
	ReplayStats stats;
	std::error_code ec;
	if (!std::filesystem::exists(path, ec))
		return stats;
	std::istringstream in(read_file(path));
	std::string line;
	std::size_t lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		if (line.empty())
			continue;
		nlohmann::json j;
		try {
			j = nlohmann::json::parse(line);
		} catch (nlohmann::json::exception const &e) {
			if (!tolerate_corruption)
				throw FormatError(path.string() + ":" + std::to_string(lineno) + ": corrupt event: " + e.what());
			++stats.corrupt_lines;
			continue;
		}
		++stats.events;
		visit(j);
	}
	return stats;
}

} // namespace counsel

#endif
