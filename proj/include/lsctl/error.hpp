#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsctl {

enum class ErrorCode {
    MalformedInstance,
    MalformedSolution,
    CyclicSolution,
    InvalidMove,
    InvalidAction,
    InvalidConfig,
    ParseError,
    IoError,
    ShapeMismatch,
    NotRecorded,
    Divergence,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace lsctl
