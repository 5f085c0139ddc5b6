#pragma once

#include <stdexcept>
#include <string>

namespace latdiag {

// Error classes map 1:1 onto CLI exit codes (2/3/4).

// Bad arguments, unknown flags, out-of-range options.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (parse failures, shape mismatches,
// non-finite values, unreadable/unwritable files).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures arising during computation (degenerate inputs to an estimator,
// diverging training, singular systems).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace latdiag
