#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace covlab {

/// Invalid configuration: inconsistent sizes, out-of-range levels, unknown keys.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid runtime input such as a dimension mismatch.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input; carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Rejection sampling hit its draw cap before collecting enough points in a set.
class MassTooSmallError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An exhaustive computation was asked to run past its size cap.
class SizeCapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace covlab
