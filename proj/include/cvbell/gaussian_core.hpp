#pragma once

// Quadrature statistics of the two-mode squeezed vacuum (TMSV)
//
//     |TMSV> = (1/cosh r) sum_n tanh^n(r) |n,n>
//
// under homodyne measurement of a_theta = (a^+ e^{i theta} + a e^{-i theta})/sqrt 2
// on mode A and b_phi likewise on mode B. The joint density depends on the
// local-oscillator phases only through phi_sum = theta + phi:
//
//     p(a, b) = exp(-(a^2 + b^2) v + 2 a b w) / (pi |1 - t^2| cosh^2 r),
//     t = exp(-i phi_sum) tanh r.
//
// Everything here is templated on the scalar type so the truncated Fock sum
// can be evaluated in extended precision when it is used as an oracle.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/fpclassify.hpp>

#include "cvbell/errors.hpp"
#include "cvbell/hermite.hpp"

namespace cvbell {

/// Squeezing parameter of the TMSV state. r = 0 is the vacuum (product state).
template <class Real = double>
class TmsvParams {
public:
    explicit TmsvParams(Real r) : r_(std::move(r)) {
        if (!(r_ >= 0) || !boost::math::isfinite(r_))
            throw std::invalid_argument("TmsvParams: squeezing r must be finite and >= 0");
    }

    [[nodiscard]] const Real& r() const noexcept { return r_; }
    [[nodiscard]] Real tanh_r() const { using std::tanh; return tanh(r_); }
    [[nodiscard]] Real cosh_r() const { using std::cosh; return cosh(r_); }
    [[nodiscard]] Real cosh_2r() const { using std::cosh; return cosh(2 * r_); }
    [[nodiscard]] Real sinh_2r() const { using std::sinh; return sinh(2 * r_); }
    /// 1/cosh^2 r = 1 - tanh^2 r without the cancellation.
    [[nodiscard]] Real sech2_r() const {
        const Real c = cosh_r();
        return 1 / (c * c);
    }
    /// Standard deviation of either single-mode quadrature, sqrt(cosh(2r)/2).
    [[nodiscard]] Real quadrature_sigma() const { using std::sqrt; return sqrt(cosh_2r() / 2); }

private:
    Real r_;
};

/// Local-oscillator phases (radians) of the two homodyne detectors.
template <class Real = double>
struct PhaseSettings {
    Real theta{};
    Real phi{};

    [[nodiscard]] Real phi_sum() const { return theta + phi; }
};

/// Coefficients of the closed-form joint quadrature density.
///
/// v - w and v + w are carried separately: one of them is O(e^{-2r}) while v
/// and |w| are O(e^{2r}), so forming it from v and w loses most digits.
template <class Real = double>
struct JointGaussianCoefficients {
    Real v;
    Real w;
    Real v_minus_w;
    Real v_plus_w;
    Real abs_one_minus_t2;  ///< |1 - t^2|
    Real norm_z;            ///< pi |1 - t^2| cosh^2 r
    Real r;
    Real phi_sum;

    /// v^2 - w^2, evaluated as (v - w)(v + w).
    [[nodiscard]] Real determinant() const { return v_minus_w * v_plus_w; }

    /// Correlation coefficient of (a, b); also the regression slope of b on a.
    [[nodiscard]] Real correlation() const { return w / v; }

    /// Marginal standard deviation of a (and of b): sqrt(v / (2 (v^2 - w^2))).
    [[nodiscard]] Real marginal_sigma() const {
        using std::sqrt;
        return sqrt(v / (2 * determinant()));
    }

    /// Standard deviation of b given a: sqrt(1 / (2 v)).
    [[nodiscard]] Real conditional_sigma() const {
        using std::sqrt;
        return sqrt(1 / (2 * v));
    }
};

template <class Real>
JointGaussianCoefficients<Real> coefficients(const TmsvParams<Real>& state, const Real& phi_sum) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    const Real t = state.tanh_r();
    const Real t2 = t * t;
    const Real sech2 = state.sech2_r();
    const Real s = sin(phi_sum);
    const Real c = cos(phi_sum);
    const Real half_s = sin(phi_sum / 2);
    const Real half_c = cos(phi_sum / 2);

    // |1 - t^2|^2 = 1 + tanh^4 - 2 tanh^2 cos 2phi = sech^4 + 4 tanh^2 sin^2 phi
    const Real om2 = sech2 * sech2 + 4 * t2 * s * s;
    const Real om = sqrt(om2);
    // 1 + t^2 -+ 2 t cos phi = (1 - t)^2 + 4 t {sin, cos}^2(phi/2), with 1 - t = sech^2 / (1 + t)
    const Real one_minus_t = sech2 / (1 + t);
    const Real gap_minus = one_minus_t * one_minus_t + 4 * t * half_s * half_s;
    const Real gap_plus = one_minus_t * one_minus_t + 4 * t * half_c * half_c;

    JointGaussianCoefficients<Real> out{
        sech2 * (1 + t2) / om2,
        2 * t * c * sech2 / om2,
        sech2 * gap_minus / om2,
        sech2 * gap_plus / om2,
        om,
        boost::math::constants::pi<Real>() * om / sech2,
        state.r(),
        phi_sum,
    };
    return out;
}

template <class Real>
JointGaussianCoefficients<Real> coefficients(const TmsvParams<Real>& state,
                                             const PhaseSettings<Real>& settings) {
    return coefficients(state, settings.phi_sum());
}

/// Exponent -(a^2 + b^2) v + 2 a b w written as a sum of non-positive terms.
template <class Real>
Real joint_exponent(const JointGaussianCoefficients<Real>& k, const Real& a, const Real& b) {
    const Real ss = a * a + b * b;
    if (k.w >= 0) {
        const Real d = a - b;
        return -k.v_minus_w * ss - k.w * d * d;
    }
    const Real d = a + b;
    return -k.v_plus_w * ss + k.w * d * d;
}

template <class Real>
Real joint_pdf(const JointGaussianCoefficients<Real>& k, const Real& a, const Real& b) {
    using std::exp;
    return exp(joint_exponent(k, a, b)) / k.norm_z;
}

template <class Real>
Real log_joint_pdf(const JointGaussianCoefficients<Real>& k, const Real& a, const Real& b) {
    using std::log;
    return joint_exponent(k, a, b) - log(k.norm_z);
}

/// Single-mode quadrature density exp(-b^2 / cosh 2r) / sqrt(pi cosh 2r); phase independent.
template <class Real>
Real marginal_pdf(const TmsvParams<Real>& state, const Real& b) {
    using std::exp;
    using std::sqrt;
    const Real c2 = state.cosh_2r();
    return exp(-b * b / c2) / sqrt(boost::math::constants::pi<Real>() * c2);
}

template <class Real = double>
struct DifferentialEntropies {
    Real s_joint;
    Real s_marginal;
    Real s_conditional;
};

/// Closed-form differential entropies (nats) of the joint Gaussian, its
/// marginal and the conditional. Diagnostic only: the Bell functional uses
/// discrete entropies of binned distributions.
template <class Real>
DifferentialEntropies<Real> differential_entropies(const TmsvParams<Real>& state, const Real& phi_sum) {
    using std::log;
    const Real pi = boost::math::constants::pi<Real>();
    const auto k = coefficients(state, phi_sum);
    const Real s_marginal = log(pi * boost::math::constants::e<Real>() * state.cosh_2r()) / 2;
    const Real s_joint = 1 + log(pi) - log(k.determinant()) / 2;
    return {s_joint, s_marginal, s_joint - s_marginal};
}

template <class Real>
DifferentialEntropies<Real> differential_entropies(const TmsvParams<Real>& state,
                                                   const PhaseSettings<Real>& settings) {
    return differential_entropies(state, settings.phi_sum());
}

/// Complex amplitude with components in Real (std::complex is unspecified for
/// non-builtin scalar types).
template <class Real = double>
struct Amplitude {
    Real re;
    Real im;

    [[nodiscard]] Real norm_sq() const { return re * re + im * im; }
    [[nodiscard]] std::complex<double> to_complex() const {
        return {static_cast<double>(re), static_cast<double>(im)};
    }
};

inline constexpr int kDefaultFockOrder = 300;
inline constexpr double kFockTailTolerance = 1e-12;

/// Truncated Fock expansion of <a_theta| <b_phi | TMSV>:
///
///     (1/cosh r) sum_{n=0}^{n_max} tanh^n(r) e^{-i n (theta+phi)} h_n(a) h_n(b).
///
/// Throws TruncationNotConverged when the envelope of the first omitted term,
/// tanh^{n_max+1}(r) / (sqrt(pi) cosh r), exceeds 1e-12 of the partial sum.
template <class Real>
Amplitude<Real> fock_amplitude(const TmsvParams<Real>& state, const Real& theta, const Real& phi,
                               const Real& a, const Real& b, int n_max = kDefaultFockOrder) {
    using std::abs;
    using std::cos;
    using std::exp;
    using std::sin;
    using std::sqrt;
    detail::require(n_max >= 0, "fock_amplitude: n_max must be >= 0");
    detail::require(state.r() <= 5, "fock_amplitude: r must be <= 5");

    const Real pi = boost::math::constants::pi<Real>();
    const Real t = state.tanh_r();
    const Real phase = theta + phi;
    const Real c1 = cos(phase);
    const Real s1 = sin(phase);
    const Real sqrt2 = sqrt(Real(2));

    // h_n(a), h_n(b) advanced together so the recurrence coefficients are shared.
    const Real h0 = 1 / sqrt(sqrt(pi));
    Real ha = h0 * exp(-a * a / 2), ha_prev = 0;
    Real hb = h0 * exp(-b * b / 2), hb_prev = 0;
    Real tn = 1;                 // tanh^n r
    Real cn = 1, sn = 0;         // cos(n phase), sin(n phase)
    Real sum_re = 0, sum_im = 0;
    Real sqrt_n = 0;             // sqrt(n)
    for (int n = 0;; ++n) {
        const Real term = tn * ha * hb;
        sum_re += term * cn;
        sum_im -= term * sn;
        if (n == n_max) break;

        const Real sqrt_np1 = sqrt(Real(n + 1));
        Real ha_next = (sqrt2 * a * ha - sqrt_n * ha_prev) / sqrt_np1;
        Real hb_next = (sqrt2 * b * hb - sqrt_n * hb_prev) / sqrt_np1;
        ha_prev = std::move(ha);
        ha = std::move(ha_next);
        hb_prev = std::move(hb);
        hb = std::move(hb_next);
        sqrt_n = sqrt_np1;

        tn *= t;
        Real c_next = cn * c1 - sn * s1;
        sn = sn * c1 + cn * s1;
        cn = std::move(c_next);
    }

    const Real cr = state.cosh_r();
    Amplitude<Real> out{sum_re / cr, sum_im / cr};
    const Real tail = tn * t / (sqrt(pi) * cr);
    if (tail > kFockTailTolerance * sqrt(out.norm_sq()))
        throw TruncationNotConverged("fock_amplitude: tail exceeds 1e-12 of the sum at n_max = " +
                                     std::to_string(n_max));
    return out;
}

namespace detail {

template <class Real>
struct Cplx {
    Real re;
    Real im;
};

template <class Real>
Cplx<Real> mul(const Cplx<Real>& x, const Cplx<Real>& y) {
    return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
}

template <class Real>
Cplx<Real> div(const Cplx<Real>& x, const Cplx<Real>& y) {
    const Real d = y.re * y.re + y.im * y.im;
    return {(x.re * y.re + x.im * y.im) / d, (x.im * y.re - x.re * y.im) / d};
}

/// Principal square root for Re z > 0.
template <class Real>
Cplx<Real> sqrt_right_half(const Cplx<Real>& z) {
    using std::sqrt;
    const Real mod = sqrt(z.re * z.re + z.im * z.im);
    const Real re = sqrt((mod + z.re) / 2);
    return {re, z.im / (2 * re)};
}

}  // namespace detail

/// Closed form of <a_theta| <b_phi | TMSV> obtained by summing the Fock
/// series with Mehler's formula:
///
///     exp(-(a^2+b^2)/2) exp([2abt - (a^2+b^2) t^2] / (1 - t^2)) / (sqrt(pi) sqrt(1 - t^2) cosh r)
template <class Real>
Amplitude<Real> closed_form_amplitude(const TmsvParams<Real>& state, const Real& theta,
                                      const Real& phi, const Real& a, const Real& b) {
    using detail::Cplx;
    using std::cos;
    using std::exp;
    using std::sin;
    using std::sqrt;
    const Real pi = boost::math::constants::pi<Real>();
    const Real t = state.tanh_r();
    const Real t2 = t * t;
    const Real phase = theta + phi;
    const Real sp = sin(phase);

    const Cplx<Real> tc{t * cos(phase), -t * sp};
    const Cplx<Real> tsq{t2 * cos(2 * phase), -t2 * sin(2 * phase)};
    // 1 - t^2 with Re = sech^2 r + 2 tanh^2 r sin^2(phase)
    const Cplx<Real> one_minus_tsq{state.sech2_r() + 2 * t2 * sp * sp, -tsq.im};

    const Real ss = a * a + b * b;
    const Cplx<Real> num{2 * a * b * tc.re - ss * tsq.re, 2 * a * b * tc.im - ss * tsq.im};
    const Cplx<Real> expo = detail::div(num, one_minus_tsq);
    const Real mag = exp(-ss / 2 + expo.re);
    const Cplx<Real> e{mag * cos(expo.im), mag * sin(expo.im)};

    const Cplx<Real> root = detail::sqrt_right_half(one_minus_tsq);
    const Real scale = sqrt(pi) * state.cosh_r();
    const Cplx<Real> denom{root.re * scale, root.im * scale};
    const Cplx<Real> out = detail::div(e, denom);
    return {out.re, out.im};
}

}  // namespace cvbell
