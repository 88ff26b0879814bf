#pragma once

#include <stdexcept>
#include <string>

namespace cvbell {

/// Base class for numeric failures raised by the library. Argument
/// validation failures use std::invalid_argument instead.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The coarse-graining grid would need more cells than the configured budget.
class GridTooLarge : public NumericError {
public:
    using NumericError::NumericError;
};

/// Panel quadrature needed more panels than allowed.
class QuadratureBudgetExceeded : public NumericError {
public:
    using NumericError::NumericError;
};

/// The truncated Fock sum did not reach its relative tail tolerance.
class TruncationNotConverged : public NumericError {
public:
    using NumericError::NumericError;
};

/// A probability vector or matrix failed its validity preconditions.
class InvalidDistribution : public NumericError {
public:
    using NumericError::NumericError;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

}  // namespace detail
}  // namespace cvbell
