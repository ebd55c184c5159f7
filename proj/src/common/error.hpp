#pragma once

#include <stdexcept>
#include <string>

namespace ouro {

enum class ErrorCode {
    invalid_argument,
    not_found,
    conflict,   // target already terminal, double close, ...
    config,
    io,
    parse,
    cancelled,
    timeout,
    transport,
    script,
    internal,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace ouro
