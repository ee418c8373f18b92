#pragma once

#include <stdexcept>
#include <string>

namespace osteorad {

/// Failure category; doubles as the CLI exit code.
enum class ErrorKind : int {
    Config = 2,
    Data = 3,
    Numeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// Thrown when a region mask has no foreground pixels.
class EmptyRegionError : public DataError {
public:
    explicit EmptyRegionError(const std::string& what) : DataError(what) {}
};

}  // namespace osteorad
