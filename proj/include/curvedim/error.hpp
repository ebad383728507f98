#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curvedim {

enum class ErrorKind {
    Parse,
    GridMismatch,
    InsufficientSample,
    InvalidArgument,
    Bounds,
    Validation,
    Conditioning,
    NumericalFailure,
    Nonstationary,
    Domain,
    DegenerateDay,
    MissingOpening,
    UndefinedAutocorrelation,
    Io,
};

/// Machine-readable name, e.g. "insufficient-sample".
std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view kind_name() const noexcept { return error_kind_name(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace curvedim
