#pragma once

#include <stdexcept>
#include <string>

namespace bsim {

// Failure class, mapped onto CLI exit codes (usage/schema = 1, numerical = 2).
enum class ErrorKind { usage, numerical, io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_usage(const std::string& what) { throw Error(ErrorKind::usage, what); }
[[noreturn]] inline void fail_numerical(const std::string& what) { throw Error(ErrorKind::numerical, what); }
[[noreturn]] inline void fail_io(const std::string& what) { throw Error(ErrorKind::io, what); }

} // namespace bsim
