#pragma once

#include <stdexcept>
#include <string>

namespace glue {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Dimension mismatch in an array operation; message names the op and the offending shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; carries file path and, when known, the 1-based row number.
class ParseError : public Error {
public:
    ParseError(const std::string& path, long row, const std::string& what)
        : Error(row >= 0 ? path + ":" + std::to_string(row) + ": " + what
                         : path + ": " + what),
          path_(path),
          row_(row) {}

    const std::string& path() const noexcept { return path_; }
    long row() const noexcept { return row_; }

private:
    std::string path_;
    long row_;
};

/// Invalid or inconsistent configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite value or numerically degenerate input where finite data is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Filesystem / IO failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace glue
