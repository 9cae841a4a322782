#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace samod {

/// Integral seconds; all schedule arithmetic is done in this unit.
using Seconds = std::int64_t;

inline constexpr Seconds kSecondsPerDay = 86400;

/// Selects between the OpenMP kernel and its serial reference.
enum class Execution { serial, parallel };

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document. Carries the offending line (1-based, 0 if
/// unknown) and the field path when one applies.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
        : Error(what), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class BuildError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace samod
