#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ptrack {

/// Base of every error raised by the library. All derive from
/// std::runtime_error so callers can catch broadly.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A malformed line in a line-oriented input. `line()` is 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Structural problem with a whole input (e.g. missing header).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A value outside the range declared by the input's own header.
class RangeError : public ParseError {
public:
    using ParseError::ParseError;
};

/// A record that is well-formed but contradicts itself.
class ConsistencyError : public ParseError {
public:
    using ParseError::ParseError;
};

/// Invalid argument to a library operation.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Two detections claim the same participant in one frame.
class AmbiguityError : public Error {
public:
    using Error::Error;
};

/// Invalid filterbank or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ptrack
