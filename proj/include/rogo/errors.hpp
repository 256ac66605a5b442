#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rogo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument: shape mismatch, non-finite entries, out-of-range labels.
class InvalidInput : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Raised when an operation needs a nonempty subspace and got an empty one.
class EmptySpaceError : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, std::size_t iterations)
        : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}

    std::size_t iterations() const noexcept { return iterations_; }

private:
    std::size_t iterations_;
};

class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), path_(path), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

class LookupError : public Error {
public:
    using Error::Error;
};

/// A data or output file could not be opened.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace rogo
