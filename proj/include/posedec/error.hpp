#pragma once

#include <stdexcept>
#include <string>

namespace posedec {

// Error categories map onto CLI exit codes: validation -> 1, io/format -> 2.
enum class ErrorKind { validation, io, format };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& message) {
    throw Error(ErrorKind::validation, message);
}

[[noreturn]] inline void fail_io(const std::string& message) {
    throw Error(ErrorKind::io, message);
}

[[noreturn]] inline void fail_format(const std::string& message) {
    throw Error(ErrorKind::format, message);
}

}  // namespace posedec
