#pragma once

#include <stdexcept>
#include <string>

namespace mtc {

/// Invalid configuration values (densities, fractions, orders, ...).
/// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A training run went numerically bad (non-finite loss or gradient).
class TrainError : public std::runtime_error {
public:
    explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mtc
