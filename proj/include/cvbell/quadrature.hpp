#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include <boost/math/quadrature/gauss.hpp>

namespace cvbell {

/// Full (both signs) Gauss-Legendre rule on [-1, 1] with an even number of
/// nodes, unpacked from Boost's half-rule tables.
template <std::size_t N>
struct GaussLegendre {
    static_assert(N % 2 == 0, "only even orders are unpacked");
    std::array<double, N> nodes{};
    std::array<double, N> weights{};

    GaussLegendre() {
        using rule = boost::math::quadrature::gauss<double, N>;
        const auto& x = rule::abscissa();
        const auto& w = rule::weights();
        for (std::size_t i = 0; i < N / 2; ++i) {
            nodes[N / 2 - 1 - i] = -x[i];
            weights[N / 2 - 1 - i] = w[i];
            nodes[N / 2 + i] = x[i];
            weights[N / 2 + i] = w[i];
        }
    }

    static const GaussLegendre& instance() {
        static const GaussLegendre rule;
        return rule;
    }
};

/// Standard normal lower-tail probability Phi(x).
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

/// P(lo < Z < hi) for standard normal Z, keeping relative accuracy in both tails.
inline double normal_interval(double lo, double hi) {
    if (lo >= 0) return 0.5 * (std::erfc(lo * M_SQRT1_2) - std::erfc(hi * M_SQRT1_2));
    if (hi <= 0) return 0.5 * (std::erfc(-hi * M_SQRT1_2) - std::erfc(-lo * M_SQRT1_2));
    return 1.0 - 0.5 * (std::erfc(hi * M_SQRT1_2) + std::erfc(-lo * M_SQRT1_2));
}

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            carry_ += (sum_ - t) + x;
        else
            carry_ += (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

}  // namespace cvbell
