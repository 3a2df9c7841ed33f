#pragma once

#include <stdexcept>
#include <string>

namespace cavat {

// Every error the library raises derives from Error so callers can catch the
// family in one place.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InvalidSeed : public Error {
public:
    using Error::Error;
};

class InvalidDistribution : public Error {
public:
    using Error::Error;
};

class UndefinedMetric : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class GenerationFailure : public Error {
public:
    using Error::Error;
};

/// Raised when a tensor picks up a NaN or infinity. Carries the tensor name.
class NumericalFailure : public Error {
public:
    NumericalFailure(std::string tensor, const std::string& what)
        : Error(what + " (tensor '" + tensor + "')"), tensor_(std::move(tensor)) {}

    const std::string& tensor() const noexcept { return tensor_; }

private:
    std::string tensor_;
};

/// Malformed input file. `line` is 1-based; 0 means the error is not tied to a line.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

}  // namespace cavat
