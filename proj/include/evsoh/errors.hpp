#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evsoh {

// Base of every error raised by the library. Callers that only care about
// "the pipeline refused this input" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// A spec or model parameter violates one of its invariants.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Trace or config text that cannot be interpreted.
class FormatError : public Error {
public:
    using Error::Error;
};

class OrderingError : public Error {
public:
    OrderingError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class SynchronizationError : public Error {
public:
    using Error::Error;
};

// The charge never crossed the requested cut-off voltage. On a healthy pack
// this means the window is misconfigured; on a pack with a weak cell it is the
// premature cut-off symptom and no SOH can be computed.
class WindowNotCoveredError : public Error {
public:
    using Error::Error;
};

class WindowUnreachableError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// Numerically inconsistent data, e.g. a cumulative capacity that goes backwards.
class DataError : public Error {
public:
    using Error::Error;
};

class SignConventionError : public Error {
public:
    using Error::Error;
};

class ReferenceError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& file, int line, const std::string& what)
        : Error(file + (line > 0 ? ":" + std::to_string(line) : std::string{}) + ": " + what),
          file_(file),
          line_(line) {}
    const std::string& file() const noexcept { return file_; }
    int line() const noexcept { return line_; }

private:
    std::string file_;
    int line_;
};

}  // namespace evsoh
