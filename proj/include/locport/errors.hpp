#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace locport {

enum class ErrorCode {
    FileNotFound,
    MalformedCsv,
    NonPositivePrice,
    TooFewObservations,
    WrongReturnKind,
    BadProbabilities,
    BadBlockSpec,
    UnknownVariable,
    TooManyBinaries,
    DimensionMismatch,
    InvalidConfig,
    InfeasibleAtMu0,
    EmptySet,
    FractionalSolution,
    BadBeta,
    ZeroVariance,
    TooShort,
    Empty,
    ParseError,
    SolverFailure,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure carries a stable code so callers
/// (and the CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// CSV parse failure at a 1-based physical line.
class MalformedCsv : public Error {
public:
    MalformedCsv(std::size_t line, const std::string& what)
        : Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace locport
