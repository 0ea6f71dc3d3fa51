#pragma once

#include <cstddef>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace matprod {

enum class ErrorKind {
    StripViolation,
    BranchError,
    EmptyStrip,
    SlowDecay,
    NonConvergent,
    ParameterOutOfRange,
    DimensionMismatch,
    QuadratureFailure,
    DegenerateParameter,
    DegenerateSpectrum,
    NegativeWeight,
    SingularDraw,
    McmcNotWarm,
    ParseError,
    SemanticError
};

inline const char* to_string(ErrorKind k)
{
    switch (k) {
    case ErrorKind::StripViolation: return "StripViolation";
    case ErrorKind::BranchError: return "BranchError";
    case ErrorKind::EmptyStrip: return "EmptyStrip";
    case ErrorKind::SlowDecay: return "SlowDecay";
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::DegenerateParameter: return "DegenerateParameter";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::SingularDraw: return "SingularDraw";
    case ErrorKind::McmcNotWarm: return "McmcNotWarm";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SemanticError: return "SemanticError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& what)
        : Error(ErrorKind::ParseError, what + " at offset " + std::to_string(offset)),
          offset_(offset), expected_(std::move(expected))
    {
    }

    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

class SemanticError : public Error {
public:
    SemanticError(std::size_t offset, const std::string& what)
        : Error(ErrorKind::SemanticError, what + " at offset " + std::to_string(offset)), offset_(offset)
    {
    }

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// true for errors caused by bad input rather than numerics
inline bool is_config_error(ErrorKind k)
{
    return k == ErrorKind::ParseError || k == ErrorKind::SemanticError ||
           k == ErrorKind::ParameterOutOfRange || k == ErrorKind::DimensionMismatch;
}

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink& warning_sink()
{
    static WarningSink sink = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
    return sink;
}

inline void warn(const std::string& m)
{
    if (warning_sink())
        warning_sink()(m);
}

} // namespace matprod
