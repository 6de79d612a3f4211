#pragma once

#include <stdexcept>
#include <string>

namespace emgf {

/// Incompatible tensor shapes; the message names both operands.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (dataset records, trees, tables).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN, divergence, or a failed numeric check.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or command-line usage.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace emgf
