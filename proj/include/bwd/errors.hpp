#pragma once

#include <stdexcept>
#include <string>

namespace bwd {

/// Malformed or out-of-contract input data (exit status 2 in the CLI).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The noise scale estimate collapsed to zero (exit status 3 in the CLI).
class ZeroVarianceError : public std::runtime_error {
public:
    explicit ZeroVarianceError(const std::string& where)
        : std::runtime_error("zero variance: " + where) {}
};

/// Invalid parameters passed to a library call (exit status 1 in the CLI).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace bwd
