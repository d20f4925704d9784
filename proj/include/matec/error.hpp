#pragma once

#include <stdexcept>
#include <string>

namespace matec {

// Base exception for all engine errors. `code` is a stable machine-readable
// identifier (e.g. "UnknownTemplate") used by the HTTP layer for problem
// documents and by callers that branch on error kind.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace matec
