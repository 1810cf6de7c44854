#ifndef COUNSEL_ERROR_HPP
#define COUNSEL_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace counsel {

/// Base of every error raised by the toolkit. `kind()` is a stable short
/// name used in machine-readable diagnostics (`--json`) and HTTP bodies.
class Error : public std::runtime_error {
public:
	Error(std::string kind, std::string const &message)
		: std::runtime_error(message), kind_(std::move(kind)) {}

	std::string const &kind() const noexcept { return kind_; }

private:
	std::string kind_;
};

#define COUNSEL_DEFINE_ERROR(Name)                                              \
	class Name : public Error {                                                 \
	public:                                                                     \
		explicit Name(std::string const &message) : Error(#Name, message) {}    \
	};

COUNSEL_DEFINE_ERROR(IoError)
COUNSEL_DEFINE_ERROR(FormatError)
COUNSEL_DEFINE_ERROR(ConfigError)
COUNSEL_DEFINE_ERROR(CapabilityError)
COUNSEL_DEFINE_ERROR(EmptyInput)
COUNSEL_DEFINE_ERROR(EmptyCorpus)
COUNSEL_DEFINE_ERROR(EmptyStore)
COUNSEL_DEFINE_ERROR(InputError)
COUNSEL_DEFINE_ERROR(RangeError)
COUNSEL_DEFINE_ERROR(UnknownItem)
COUNSEL_DEFINE_ERROR(SessionClosed)

#undef COUNSEL_DEFINE_ERROR

class EncodingError : public Error {
public:
	EncodingError(std::string const &what, std::size_t offset)
		: Error("EncodingError", what + " at byte offset " + std::to_string(offset)),
		  offset_(offset) {}

	std::size_t offset() const noexcept { return offset_; }

private:
	std::size_t offset_;
};

/// Transport or protocol failure talking to a remote model server.
/// `status()` is the HTTP status when one was received, 0 otherwise.
class RemoteError : public Error {
public:
	RemoteError(std::string const &message, int status = 0, bool timed_out = false)
		: Error("RemoteError", message), status_(status), timed_out_(timed_out) {}

	int status() const noexcept { return status_; }
	bool timed_out() const noexcept { return timed_out_; }

private:
	int status_;
	bool timed_out_;
};

} // namespace counsel

#endif
