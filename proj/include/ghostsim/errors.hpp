#pragma once

#include <stdexcept>
#include <string>

namespace ghostsim {

/// Invalid or inconsistent configuration (bad parameters, schema violations,
/// sampling-adequacy failures). CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure at runtime (aliased propagation kernel, non-convergent
/// fit on required data). CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ghostsim
