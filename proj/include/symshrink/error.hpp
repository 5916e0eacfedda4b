#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace symshrink {

// Base of every library error. `exit_code` is the CLI status the error maps to.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, int exit_code = 2)
        : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

// Bad arguments, violated preconditions, malformed configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, 2) {}
};

class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, std::uint64_t matrix_hash = 0)
        : Error(what, 3), matrix_hash_(matrix_hash) {}
    std::uint64_t matrix_hash() const noexcept { return matrix_hash_; }

private:
    std::uint64_t matrix_hash_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what, 4) {}
};

}  // namespace symshrink
