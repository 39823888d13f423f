#pragma once

#include <stdexcept>
#include <string>

namespace surerag {

enum class ErrorCode {
    invalid_argument = 1,
    parse = 2,
    invariant = 3,
    io = 4,
    missing_pair = 5,
    stage = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace surerag
