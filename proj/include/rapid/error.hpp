#pragma once

#include <stdexcept>
#include <string>

namespace rapid {

/// Library error. `code()` is a short stable tag ("shape", "bad-eta", ...)
/// that callers and tests can match on; `what()` carries the detail.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

inline void require(bool cond, const char* code, const std::string& detail) {
    if (!cond) throw Error(code, detail);
}

} // namespace rapid
