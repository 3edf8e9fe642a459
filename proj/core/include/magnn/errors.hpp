#pragma once

#include <stdexcept>
#include <string>

namespace magnn {

// Bad user input: malformed files, unknown keys, out-of-range settings.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed data rows, bad magic bytes, truncated containers.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// An API precondition was violated by the caller.
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Numeric failure at runtime: non-finite values, degenerate data.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace magnn
