#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xssguard {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid generator vocabulary, hyperparameters or CLI configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Precondition violated by the data itself (single class, empty input, k too large).
class DomainError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `line` is 1-based and counts the header row.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace xssguard
