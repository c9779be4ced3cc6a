#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sfclust {

/// Base class of all library errors. The CLI maps every Error to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file contents (message carries file name and line number).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Inconsistent data: duplicate keys, misaligned rosters, out-of-range values.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or unknown configuration key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or violated numeric preconditions (e.g. non-PSD covariance).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Numerically singular linear system.
class ConditioningError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Raised when a coefficient update meets a cluster with no members.
/// The fit driver catches this and re-seeds the offending clusters.
class EmptyClusterError : public Error {
public:
    EmptyClusterError(const std::string& msg, std::vector<int> clusters)
        : Error(msg), clusters_(std::move(clusters)) {}

    const std::vector<int>& clusters() const { return clusters_; }

private:
    std::vector<int> clusters_;
};

}  // namespace sfclust
