#pragma once

// Entropic Bell functional for two settings per site,
//
//     D = S(A|B') + S(B'|A') + S(A'|B) - S(A|B) >= 0   (local realism),
//
// evaluated on coarse-grained homodyne statistics of the TMSV state. With the
// symmetric geometry theta' = theta - 2 delta/3, phi = -theta + delta,
// phi' = -theta + delta/3 the functional reduces to 3 S_QM(delta/3) - S_QM(delta).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "cvbell/coarse_grain.hpp"
#include "cvbell/entropy.hpp"
#include "cvbell/errors.hpp"
#include "cvbell/gaussian_core.hpp"
#include "cvbell/nelder_mead.hpp"
#include "cvbell/parallel.hpp"

namespace cvbell {

/// Local-oscillator phases for A, A' (mode A) and B, B' (mode B).
struct MeasurementAngles {
    double theta = 0.0;
    double theta_prime = 0.0;
    double phi = 0.0;
    double phi_prime = 0.0;
};

/// The symmetric one-parameter family of settings; theta is a free base angle.
struct AngleGeometry {
    double theta = 0.0;
    double delta = 0.0;

    [[nodiscard]] MeasurementAngles angles() const {
        return {theta, theta - 2.0 * delta / 3.0, -theta + delta, -theta + delta / 3.0};
    }
};

struct BellOptions {
    double tail_epsilon = kDefaultTailEpsilon;
    JointOptions joint{};
};

struct BellEvaluation {
    double d_qm = 0.0;
    double term_ab_prime = 0.0;       ///< S(A|B')
    double term_bprime_aprime = 0.0;  ///< S(B'|A')
    double term_aprime_b = 0.0;       ///< S(A'|B)
    double term_ab = 0.0;             ///< S(A|B)
    double r = 0.0;
    double delta = std::numeric_limits<double>::quiet_NaN();  ///< NaN unless built from an AngleGeometry
    double delta_bin = 0.0;
    double tail_epsilon = kDefaultTailEpsilon;
    int l_max = 0;
    RectangleMethod method = RectangleMethod::PanelQuadrature;
    MeasurementAngles angles{};

    [[nodiscard]] bool violates() const noexcept { return d_qm < 0.0; }
};

namespace detail {

struct SettingJoints {
    EntropyTerms ab_prime, aprime_bprime, aprime_b, ab;
    int l_max = 0;
};

inline SettingJoints four_joints(const TmsvParams<double>& state, const MeasurementAngles& an,
                                 double delta_bin, const BellOptions& options) {
    const auto grid = make_grid(state, delta_bin, options.tail_epsilon, options.joint.cell_budget);
    auto terms = [&](double phi_sum) {
        return conditional_entropy(binned_joint(coefficients(state, phi_sum), grid, options.joint));
    };
    return {terms(an.theta + an.phi_prime), terms(an.theta_prime + an.phi_prime),
            terms(an.theta_prime + an.phi), terms(an.theta + an.phi), grid.l_max};
}

}  // namespace detail

/// Full four-term evaluation for arbitrary angles; each term comes from its
/// own binned joint distribution (rows A-type, columns B-type).
inline BellEvaluation evaluate_general(const TmsvParams<double>& state, const MeasurementAngles& angles,
                                       double delta_bin, const BellOptions& options = {}) {
    const auto j = detail::four_joints(state, angles, delta_bin, options);
    BellEvaluation out;
    out.term_ab_prime = j.ab_prime.s_conditional;
    out.term_bprime_aprime = j.aprime_bprime.s_conditional_b_given_a();
    out.term_aprime_b = j.aprime_b.s_conditional;
    out.term_ab = j.ab.s_conditional;
    out.d_qm = out.term_ab_prime + out.term_bprime_aprime + out.term_aprime_b - out.term_ab;
    out.r = state.r();
    out.delta_bin = delta_bin;
    out.tail_epsilon = options.tail_epsilon;
    out.l_max = j.l_max;
    out.method = options.joint.method;
    out.angles = angles;
    return out;
}

inline BellEvaluation evaluate(const TmsvParams<double>& state, const AngleGeometry& geometry,
                               double delta_bin, const BellOptions& options = {}) {
    auto out = evaluate_general(state, geometry.angles(), delta_bin, options);
    out.delta = geometry.delta;
    return out;
}

/// Mutual-information form: S(A;B') + S(A';B') + S(A';B) - S(A;B) - S(A') - S(B').
/// Positive values violate the local-realist bound.
inline double evaluate_mutual_info(const TmsvParams<double>& state, const MeasurementAngles& angles,
                                   double delta_bin, const BellOptions& options = {}) {
    const auto j = detail::four_joints(state, angles, delta_bin, options);
    const double lhs = j.ab_prime.mutual_information() + j.aprime_bprime.mutual_information() +
                       j.aprime_b.mutual_information() - j.ab.mutual_information();
    const double rhs = j.aprime_bprime.s_marginal_a + j.aprime_bprime.s_marginal_b;
    return lhs - rhs;
}

/// 3 S_QM(delta/3) - S_QM(delta): the symmetric-geometry value of D from two
/// joints instead of four.
inline double d_qm_reduced(const TmsvParams<double>& state, double delta, double delta_bin,
                           const BellOptions& options = {}) {
    const auto grid = make_grid(state, delta_bin, options.tail_epsilon, options.joint.cell_budget);
    auto s = [&](double phi_sum) {
        return conditional_entropy(binned_joint(coefficients(state, phi_sum), grid, options.joint)).s_conditional;
    };
    const double third = s(delta / 3.0);
    const double full = delta == 0.0 ? third : s(delta);
    return 3.0 * third - full;
}

/// Dense table of D over r (rows) and a second axis (columns): either the
/// angle delta at fixed bin width, or the bin width at delta = 0.
struct ScanResult {
    enum class Axis { Delta, DeltaBin };

    Axis column_axis = Axis::Delta;
    std::vector<double> r_values;
    std::vector<double> column_values;
    double fixed_delta = 0.0;      ///< used when column_axis == DeltaBin
    double fixed_delta_bin = 0.0;  ///< used when column_axis == Delta
    double tail_epsilon = kDefaultTailEpsilon;
    RectangleMethod method = RectangleMethod::PanelQuadrature;
    std::vector<double> d_qm;  ///< r-major

    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return d_qm[i * column_values.size() + j]; }
    [[nodiscard]] double delta_at(std::size_t j) const {
        return column_axis == Axis::Delta ? column_values[j] : fixed_delta;
    }
    [[nodiscard]] double delta_bin_at(std::size_t j) const {
        return column_axis == Axis::DeltaBin ? column_values[j] : fixed_delta_bin;
    }
    [[nodiscard]] double min() const { return *std::min_element(d_qm.begin(), d_qm.end()); }
};

namespace detail {

inline BellOptions serial(BellOptions options) {
    options.joint.threads = 1;
    return options;
}

inline void require_axis(const std::vector<double>& axis, const char* what) {
    require(!axis.empty(), std::string(what) + ": axis must be non-empty");
    for (const double x : axis) require(std::isfinite(x), std::string(what) + ": non-finite axis value");
}

}  // namespace detail

/// D(r, delta) on a grid at fixed bin width; cells are evaluated in parallel.
inline ScanResult scan(const std::vector<double>& r_values, const std::vector<double>& delta_values,
                       double delta_bin, const BellOptions& options = {}) {
    detail::require_axis(r_values, "scan");
    detail::require_axis(delta_values, "scan");
    ScanResult out;
    out.column_axis = ScanResult::Axis::Delta;
    out.r_values = r_values;
    out.column_values = delta_values;
    out.fixed_delta_bin = delta_bin;
    out.tail_epsilon = options.tail_epsilon;
    out.method = options.joint.method;
    out.d_qm.assign(r_values.size() * delta_values.size(), 0.0);
    const auto inner = detail::serial(options);
    parallel_for(out.d_qm.size(), [&](std::size_t k) {
        const std::size_t i = k / delta_values.size(), j = k % delta_values.size();
        out.d_qm[k] = d_qm_reduced(TmsvParams<double>(r_values[i]), delta_values[j], delta_bin, inner);
    });
    return out;
}

/// D(r, delta_bin) at delta = 0, where D = 2 S_QM(0).
inline ScanResult scan_fig2(const std::vector<double>& r_values, const std::vector<double>& delta_bin_values,
                            const BellOptions& options = {}) {
    detail::require_axis(r_values, "scan_fig2");
    detail::require_axis(delta_bin_values, "scan_fig2");
    ScanResult out;
    out.column_axis = ScanResult::Axis::DeltaBin;
    out.r_values = r_values;
    out.column_values = delta_bin_values;
    out.fixed_delta = 0.0;
    out.tail_epsilon = options.tail_epsilon;
    out.method = options.joint.method;
    out.d_qm.assign(r_values.size() * delta_bin_values.size(), 0.0);
    const auto inner = detail::serial(options);
    parallel_for(out.d_qm.size(), [&](std::size_t k) {
        const std::size_t i = k / delta_bin_values.size(), j = k % delta_bin_values.size();
        out.d_qm[k] = d_qm_reduced(TmsvParams<double>(r_values[i]), 0.0, delta_bin_values[j], inner);
    });
    return out;
}

/// n evenly spaced points from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
};

struct MinimizeOptions {
    std::size_t grid_r = 48;
    std::size_t grid_delta = 48;
    /// Extra delta seeds delta_lo + span * 10^x, x evenly spaced over
    /// [log10(log_delta_min_fraction), log10(1/grid_delta)].
    std::size_t log_delta_points = 16;
    double log_delta_min_fraction = 1e-5;
    std::size_t top_starts = 8;
    NelderMeadOptions simplex{};
    BellOptions bell{};
};

struct MinimizationResult {
    double r = 0.0;
    double delta = 0.0;
    double delta_bin = 0.0;
    double d_min = 0.0;
    double grid_min = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
    Bounds r_bounds{};
    Bounds delta_bounds{};
    std::vector<double> r_grid;
    std::vector<double> delta_grid;
};

/// Global minimum of D(r, delta) at fixed bin width: a dense start grid
/// (with log-spaced delta points piling up at delta_lo, where D can be very
/// sharp), then simplex refinement from the best grid cells.
inline MinimizationResult minimize(Bounds r_bounds, Bounds delta_bounds, double delta_bin,
                                   const MinimizeOptions& options = {}) {
    detail::require(r_bounds.lo >= 0 && r_bounds.lo <= r_bounds.hi, "minimize: invalid r bounds");
    detail::require(delta_bounds.lo <= delta_bounds.hi, "minimize: invalid delta bounds");
    detail::require(options.grid_r >= 1 && options.grid_delta >= 1, "minimize: empty start grid");
    const auto inner = detail::serial(options.bell);

    MinimizationResult out;
    out.delta_bin = delta_bin;
    out.r_bounds = r_bounds;
    out.delta_bounds = delta_bounds;
    out.r_grid = linspace(r_bounds.lo, r_bounds.hi, options.grid_r);
    out.delta_grid = linspace(delta_bounds.lo, delta_bounds.hi, options.grid_delta);
    const double span = delta_bounds.hi - delta_bounds.lo;
    if (span > 0 && options.log_delta_points > 0 && options.grid_delta > 1) {
        const auto exps = linspace(std::log10(options.log_delta_min_fraction),
                                   std::log10(1.0 / static_cast<double>(options.grid_delta)),
                                   options.log_delta_points);
        for (const double x : exps) out.delta_grid.push_back(delta_bounds.lo + span * std::pow(10.0, x));
        std::sort(out.delta_grid.begin(), out.delta_grid.end());
        out.delta_grid.erase(std::unique(out.delta_grid.begin(), out.delta_grid.end()), out.delta_grid.end());
    }

    auto objective = [&](double r, double delta) {
        return d_qm_reduced(TmsvParams<double>(r), delta, delta_bin, inner);
    };

    const std::size_t nr = out.r_grid.size(), nd = out.delta_grid.size();
    std::vector<double> grid_values(nr * nd);
    parallel_for(grid_values.size(), [&](std::size_t k) {
        grid_values[k] = objective(out.r_grid[k / nd], out.delta_grid[k % nd]);
    });
    out.evaluations = grid_values.size();

    std::vector<std::size_t> order(grid_values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return grid_values[a] < grid_values[b]; });
    out.grid_min = grid_values[order.front()];
    out.r = out.r_grid[order.front() / nd];
    out.delta = out.delta_grid[order.front() % nd];
    out.d_min = out.grid_min;

    const std::size_t starts = std::min(options.top_starts, order.size());
    std::vector<NelderMeadResult> runs(starts);
    const std::array<double, 2> lower{r_bounds.lo, delta_bounds.lo};
    const std::array<double, 2> upper{r_bounds.hi, delta_bounds.hi};
    parallel_for(starts, [&](std::size_t s) {
        const std::size_t k = order[s];
        const std::size_t i = k / nd, j = k % nd;
        const double step_r = nr > 1 ? out.r_grid[std::min(i + 1, nr - 1)] - out.r_grid[i == nr - 1 ? i - 1 : i]
                                     : 0.0;
        const double step_d = nd > 1 ? out.delta_grid[std::min(j + 1, nd - 1)] -
                                           out.delta_grid[j == nd - 1 ? j - 1 : j]
                                     : 0.0;
        const std::array<double, 2> step{step_r, step_d};
        runs[s] = nelder_mead([&](std::span<const double> x) { return objective(x[0], x[1]); },
                              {out.r_grid[i], out.delta_grid[j]}, step, lower, upper, options.simplex);
    });

    bool any_run = false;
    for (const auto& run : runs) {
        out.evaluations += run.evaluations;
        if (run.f < out.d_min || (!any_run && run.f <= out.d_min)) {
            out.d_min = run.f;
            out.r = run.x[0];
            out.delta = run.x[1];
            out.converged = run.converged;
            any_run = true;
        }
    }
    return out;
}

}  // namespace cvbell
