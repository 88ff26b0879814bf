#pragma once

#include <cmath>
#include <vector>

#include <boost/math/constants/constants.hpp>

namespace cvbell {

/// Normalized Hermite functions
///
///     h_n(x) = H_n(x) exp(-x^2/2) / sqrt(sqrt(pi) 2^n n!),
///
/// i.e. the harmonic-oscillator eigenfunctions <x|n>. They are produced by
/// the three-term recurrence
///
///     h_{n+1} = sqrt(2/(n+1)) x h_n - sqrt(n/(n+1)) h_{n-1},
///
/// which never forms H_n or n! and so stays finite for n in the thousands.
/// |h_n(x)| <= pi^{-1/4} for every n and x.
template <class Real = double>
class HermiteFunctions {
public:
    explicit HermiteFunctions(const Real& x) : x_(x) {
        using std::exp;
        using std::sqrt;
        const Real pi = boost::math::constants::pi<Real>();
        current_ = exp(-x * x / 2) / sqrt(sqrt(pi));
        previous_ = 0;
    }

    /// h_n(x) for the current order n.
    [[nodiscard]] const Real& value() const noexcept { return current_; }
    [[nodiscard]] int order() const noexcept { return n_; }

    /// Advances n -> n+1.
    void advance() {
        using std::sqrt;
        const Real np1 = n_ + 1;
        Real next = (sqrt(Real(2) / np1) * x_) * current_ - sqrt(Real(n_) / np1) * previous_;
        previous_ = std::move(current_);
        current_ = std::move(next);
        ++n_;
    }

private:
    Real x_;
    Real current_;
    Real previous_;
    int n_ = 0;
};

/// Table h_0(x) ... h_{n_max}(x).
template <class Real = double>
std::vector<Real> hermite_functions(const Real& x, int n_max) {
    std::vector<Real> out;
    out.reserve(static_cast<std::size_t>(n_max) + 1);
    HermiteFunctions<Real> seq(x);
    for (int n = 0; n <= n_max; ++n) {
        out.push_back(seq.value());
        if (n < n_max) seq.advance();
    }
    return out;
}

}  // namespace cvbell
