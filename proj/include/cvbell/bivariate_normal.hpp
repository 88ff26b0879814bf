#pragma once

// Standard bivariate normal probabilities after A. Genz, "Numerical computation
// of rectangular bivariate and trivariate normal and t probabilities",
// Statistics and Computing 14 (2004): Gauss-Legendre integration of the
// correlation-integral (Plackett) representation, with the Drezner-Wesolowsky
// asymptotic expansion for |rho| >= 0.925. Absolute accuracy is about 1e-15.

#include <algorithm>
#include <cmath>
#include <span>
#include <tuple>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>

#include "cvbell/quadrature.hpp"

namespace cvbell {

namespace detail {

struct HalfRule {
    std::span<const double> x;
    std::span<const double> w;
};

template <std::size_t N>
HalfRule half_rule() {
    using rule = boost::math::quadrature::gauss<double, N>;
    return {std::span<const double>(rule::abscissa().data(), N / 2),
            std::span<const double>(rule::weights().data(), N / 2)};
}

inline HalfRule genz_rule(double abs_rho) {
    if (abs_rho < 0.3) return half_rule<6>();
    if (abs_rho < 0.75) return half_rule<12>();
    return half_rule<20>();
}

}  // namespace detail

/// P(X > h, Y > k) for a standard bivariate normal with correlation rho.
/// one_minus_rho2 = 1 - rho^2 may be supplied when it is known more accurately
/// than rho itself (|rho| close to 1).
inline double bivariate_normal_upper(double h, double k, double rho, double one_minus_rho2) {
    constexpr double two_pi = 2.0 * M_PI;
    const double abs_rho = std::fabs(rho);
    const auto rule = detail::genz_rule(abs_rho);
    double hk = h * k;
    double bvn = 0.0;

    if (abs_rho < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(rho);
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            for (const double sgn : {-1.0, 1.0}) {
                const double sn = std::sin(asr * (sgn * rule.x[i] + 1.0) / 2.0);
                bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        bvn = bvn * asr / (2.0 * two_pi) + normal_cdf(-h) * normal_cdf(-k);
        return std::clamp(bvn, 0.0, 1.0);
    }

    if (rho < 0) {
        k = -k;
        hk = -hk;
    }
    if (abs_rho < 1.0) {
        const double as = one_minus_rho2;
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        const double lead = -(bs / as + hk) / 2.0;
        if (lead > -700.0)
            bvn = a * std::exp(lead) *
                  (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hk / 2.0) * std::sqrt(two_pi) * normal_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            for (const double sgn : {-1.0, 1.0}) {
                const double xs = std::pow(a * (sgn * rule.x[i] + 1.0), 2);
                const double rs = std::sqrt(1.0 - xs);
                const double e = -(bs / xs + hk) / 2.0;
                if (e > -100.0)
                    bvn += a * rule.w[i] * std::exp(e) *
                           (std::exp(-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))) / rs -
                            (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / two_pi;
    }
    if (rho > 0) {
        bvn += normal_cdf(-std::max(h, k));
    } else {
        bvn = -bvn;
        if (k > h) {
            if (h < 0)
                bvn += normal_cdf(k) - normal_cdf(h);
            else
                bvn += normal_cdf(-h) - normal_cdf(-k);
        }
    }
    return std::clamp(bvn, 0.0, 1.0);
}

inline double bivariate_normal_upper(double h, double k, double rho) {
    return bivariate_normal_upper(h, k, rho, (1.0 - rho) * (1.0 + rho));
}

/// P(x_lo < X < x_hi, y_lo < Y < y_hi) for a standard bivariate normal.
/// The rectangle is first reflected towards the positive quadrant (flipping
/// the sign of rho per reflected axis) so the four orthant terms stay small.
inline double bivariate_normal_rectangle(double x_lo, double x_hi, double y_lo, double y_hi,
                                         double rho, double one_minus_rho2) {
    if (x_lo + x_hi < 0) {
        std::tie(x_lo, x_hi) = std::pair(-x_hi, -x_lo);
        rho = -rho;
    }
    if (y_lo + y_hi < 0) {
        std::tie(y_lo, y_hi) = std::pair(-y_hi, -y_lo);
        rho = -rho;
    }
    const double p = bivariate_normal_upper(x_lo, y_lo, rho, one_minus_rho2) -
                     bivariate_normal_upper(x_hi, y_lo, rho, one_minus_rho2) -
                     bivariate_normal_upper(x_lo, y_hi, rho, one_minus_rho2) +
                     bivariate_normal_upper(x_hi, y_hi, rho, one_minus_rho2);
    return std::max(p, 0.0);
}

}  // namespace cvbell
