#pragma once

// Coarse-grained quadrature measurement: outcomes are binned into windows of
// width delta centred on l * delta, l = -L..L. Bin probabilities of the
// marginal come from erf differences; bins of the joint density are
// integrated either by panel quadrature over the conditional Gaussian or by
// bivariate-normal rectangle probabilities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "cvbell/bivariate_normal.hpp"
#include "cvbell/errors.hpp"
#include "cvbell/gaussian_core.hpp"
#include "cvbell/parallel.hpp"
#include "cvbell/quadrature.hpp"

namespace cvbell {

inline constexpr double kDefaultTailEpsilon = 1e-12;
inline constexpr double kDefaultCellBudget = 4e8;
inline constexpr std::size_t kDefaultMaxPanels = 4'000'000;

/// Bins l = -l_max..l_max of width delta, bin l covering [l delta - delta/2, l delta + delta/2].
struct CoarseGrid {
    double delta = 1.0;
    int l_max = 0;
    double tail_epsilon = kDefaultTailEpsilon;

    [[nodiscard]] int size() const noexcept { return 2 * l_max + 1; }
    [[nodiscard]] std::size_t index(int l) const noexcept { return static_cast<std::size_t>(l + l_max); }
    [[nodiscard]] double center(int l) const noexcept { return l * delta; }
    /// Edge i = 0..size(); bin l lies between edges index(l) and index(l) + 1.
    [[nodiscard]] double edge(int i) const noexcept { return (i - l_max - 0.5) * delta; }
    [[nodiscard]] double lower(int l) const noexcept { return edge(l + l_max); }
    [[nodiscard]] double upper(int l) const noexcept { return edge(l + l_max + 1); }
    /// Half-width of the covered interval, (L + 1/2) delta.
    [[nodiscard]] double reach() const noexcept { return (l_max + 0.5) * delta; }
};

/// Smallest k with erfc(k / sqrt 2) < tail_epsilon / 2 (two-sided Gaussian tail).
inline double coverage_multiplier(double tail_epsilon) {
    double k = M_SQRT2 * boost::math::erfc_inv(tail_epsilon / 2);
    while (std::erfc(k * M_SQRT1_2) >= tail_epsilon / 2) k = std::nextafter(k, INFINITY);
    return k;
}

/// Smallest L whose window (L + 1/2) delta reaches k sigma_max, so each
/// marginal loses less than tail_epsilon and the joint less than 2 tail_epsilon.
inline CoarseGrid make_grid(const TmsvParams<double>& state, double delta,
                            double tail_epsilon = kDefaultTailEpsilon,
                            double cell_budget = kDefaultCellBudget) {
    detail::require(delta > 0 && std::isfinite(delta), "make_grid: delta must be > 0");
    detail::require(tail_epsilon > 0 && tail_epsilon <= 1e-6,
                    "make_grid: tail_epsilon must lie in (0, 1e-6]");
    const double reach = coverage_multiplier(tail_epsilon) * state.quadrature_sigma();
    const double l_real = std::max(0.0, std::ceil(reach / delta - 0.5));
    const double cells = (2 * l_real + 1) * (2 * l_real + 1);
    if (!(cells <= cell_budget))
        throw GridTooLarge("make_grid: " + std::to_string(cells) + " cells exceed the budget of " +
                           std::to_string(cell_budget) + " (delta " + std::to_string(delta) +
                           ", r " + std::to_string(state.r()) + ")");
    auto l_max = static_cast<int>(l_real);
    // Guard against the ceil landing one short through rounding.
    while ((l_max + 0.5) * delta < reach) ++l_max;
    return {delta, l_max, tail_epsilon};
}

/// Probability of bin m of the single-mode marginal N(0, cosh(2r)/2).
inline double bin_prob_1d(const TmsvParams<double>& state, const CoarseGrid& grid, int m) {
    detail::require(std::abs(m) <= grid.l_max, "bin_prob_1d: bin index out of range");
    const double sigma = state.quadrature_sigma();
    return normal_interval(grid.lower(m) / sigma, grid.upper(m) / sigma);
}

struct BinnedDistribution1D {
    CoarseGrid grid;
    std::vector<double> probs;
    double captured_mass = 0.0;

    [[nodiscard]] double at(int m) const { return probs.at(grid.index(m)); }
};

namespace detail {

/// Sums a symmetric index range in order of increasing |index|.
template <class At>
double sum_by_increasing_magnitude(int l_max, At&& at) {
    CompensatedSum sum;
    sum.add(at(0));
    for (int a = 1; a <= l_max; ++a) {
        sum.add(at(-a));
        sum.add(at(a));
    }
    return sum.value();
}

}  // namespace detail

inline BinnedDistribution1D binned_marginal(const TmsvParams<double>& state, const CoarseGrid& grid) {
    BinnedDistribution1D out{grid, std::vector<double>(static_cast<std::size_t>(grid.size())), 0.0};
    for (int m = -grid.l_max; m <= grid.l_max; ++m) out.probs[grid.index(m)] = bin_prob_1d(state, grid, m);
    out.captured_mass =
        detail::sum_by_increasing_magnitude(grid.l_max, [&](int m) { return out.probs[grid.index(m)]; });
    return out;
}

enum class RectangleMethod { PanelQuadrature, RectangleCdf };

inline const char* to_string(RectangleMethod m) {
    return m == RectangleMethod::PanelQuadrature ? "panel-quadrature" : "rectangle-cdf";
}

namespace detail {

/// Beyond this many standard deviations a Gaussian factor is below the
/// smallest subnormal double.
inline constexpr double kGaussianCutoff = 38.5;
inline constexpr double kTransitionHalfWidth = 12.0;
inline constexpr int kPanelOrder = 16;

/// Integration of a bin of a as   int p_a(a) P(b in [e_i, e_{i+1}] | a) da,
/// with a ~ N(0, sigma_a^2) and b | a ~ N(kappa a, sigma_c^2).
struct PanelGeometry {
    double sigma_a;
    double kappa;
    double sigma_c;
    double tau;      ///< a-distance over which P(b < e | a) switches: sigma_c / |kappa|
    double coarse_h; ///< min(delta, sigma_a) / 4
    double fine_h;   ///< panel width inside transition zones

    PanelGeometry(const JointGaussianCoefficients<double>& k, double delta)
        : sigma_a(k.marginal_sigma()),
          kappa(k.correlation()),
          sigma_c(k.conditional_sigma()),
          tau(kappa == 0.0 ? INFINITY : sigma_c / std::fabs(kappa)),
          coarse_h(std::min(delta, sigma_a) / 4.0),
          fine_h(std::min(coarse_h, tau / 2.0)) {}

    [[nodiscard]] bool needs_refinement() const noexcept { return fine_h < coarse_h; }
};

struct Nodes {
    std::vector<double> a;
    std::vector<double> weight;  ///< Gauss-Legendre weight times the density of a
};

/// Gauss-Legendre nodes covering [a_lo, a_hi] (clipped to the support of p_a):
/// coarse panels everywhere, fine panels within 12 tau of every a where one of
/// the b edges in [edge_lo, edge_hi] sits at the conditional mean.
inline void build_nodes(const PanelGeometry& g, double a_lo, double a_hi, double edge_first,
                        double edge_step, int edge_count, std::size_t max_panels, Nodes& out) {
    out.a.clear();
    out.weight.clear();
    const double clip = kGaussianCutoff * g.sigma_a;
    const double lo = std::max(a_lo, -clip);
    const double hi = std::min(a_hi, clip);
    if (!(lo < hi)) return;

    std::vector<std::pair<double, double>> zones;
    if (g.needs_refinement()) {
        const double pad = kTransitionHalfWidth * g.tau;
        // Edges e with e / kappa in [lo - pad, hi + pad].
        double e_lo = g.kappa * (lo - pad);
        double e_hi = g.kappa * (hi + pad);
        if (e_lo > e_hi) std::swap(e_lo, e_hi);
        const int i_lo = std::max(0, static_cast<int>(std::ceil((e_lo - edge_first) / edge_step)));
        const int i_hi = std::min(edge_count - 1, static_cast<int>(std::floor((e_hi - edge_first) / edge_step)));
        for (int i = i_lo; i <= i_hi; ++i) {
            const double c = (edge_first + i * edge_step) / g.kappa;
            const double z_lo = std::max(lo, c - pad);
            const double z_hi = std::min(hi, c + pad);
            if (z_lo < z_hi) zones.emplace_back(z_lo, z_hi);
        }
        std::sort(zones.begin(), zones.end());
        std::vector<std::pair<double, double>> merged;
        for (const auto& z : zones) {
            if (!merged.empty() && z.first <= merged.back().second)
                merged.back().second = std::max(merged.back().second, z.second);
            else
                merged.push_back(z);
        }
        zones = std::move(merged);
    }

    const auto& rule = GaussLegendre<kPanelOrder>::instance();
    const double density_scale = 1.0 / (std::sqrt(2.0 * M_PI) * g.sigma_a);
    const double inv_two_var = 1.0 / (2.0 * g.sigma_a * g.sigma_a);
    std::size_t panels = 0;
    auto emit_segment = [&](double s_lo, double s_hi, double h) {
        if (!(s_lo < s_hi)) return;
        const auto n = static_cast<std::size_t>(std::ceil((s_hi - s_lo) / h));
        panels += n;
        if (panels > max_panels)
            throw QuadratureBudgetExceeded("panel quadrature: more than " + std::to_string(max_panels) +
                                           " panels for one bin row");
        const double width = (s_hi - s_lo) / static_cast<double>(n);
        for (std::size_t p = 0; p < n; ++p) {
            const double p_lo = s_lo + static_cast<double>(p) * width;
            const double mid = p_lo + width / 2.0;
            const double half = width / 2.0;
            for (int q = 0; q < kPanelOrder; ++q) {
                const double a = mid + half * rule.nodes[q];
                out.a.push_back(a);
                out.weight.push_back(half * rule.weights[q] * density_scale * std::exp(-a * a * inv_two_var));
            }
        }
    };

    double cursor = lo;
    for (const auto& [z_lo, z_hi] : zones) {
        emit_segment(cursor, z_lo, g.coarse_h);
        emit_segment(z_lo, z_hi, g.fine_h);
        cursor = z_hi;
    }
    emit_segment(cursor, hi, g.coarse_h);
}

/// Gaussian tail value at an edge: the lower tail Phi(z) for z <= 0 and the
/// upper tail 1 - Phi(z) for z > 0, so neither loses relative accuracy.
struct Tail {
    double value;
    bool upper;
};

inline Tail edge_tail(double z) {
    if (z <= 0) return {0.5 * std::erfc(-z * M_SQRT1_2), false};
    return {0.5 * std::erfc(z * M_SQRT1_2), true};
}

/// P(z_lo < Z < z_hi) from the tails at both ends.
inline double tail_interval(const Tail& lo, const Tail& hi) {
    if (!lo.upper && !hi.upper) return hi.value - lo.value;
    if (lo.upper && hi.upper) return lo.value - hi.value;
    return 1.0 - lo.value - hi.value;
}

}  // namespace detail

/// Probability of the cell (l, m): a in bin l, b in bin m.
inline double bin_prob_2d(const JointGaussianCoefficients<double>& coeffs, const CoarseGrid& grid, int l,
                          int m, RectangleMethod method = RectangleMethod::PanelQuadrature,
                          std::size_t max_panels = kDefaultMaxPanels) {
    detail::require(std::abs(l) <= grid.l_max && std::abs(m) <= grid.l_max,
                    "bin_prob_2d: bin index out of range");
    const double a_lo = grid.lower(l), a_hi = grid.upper(l);
    const double b_lo = grid.lower(m), b_hi = grid.upper(m);

    if (method == RectangleMethod::RectangleCdf) {
        const double sigma = coeffs.marginal_sigma();
        const double one_minus_rho2 = coeffs.determinant() / (coeffs.v * coeffs.v);
        return bivariate_normal_rectangle(a_lo / sigma, a_hi / sigma, b_lo / sigma, b_hi / sigma,
                                          coeffs.correlation(), one_minus_rho2);
    }

    const detail::PanelGeometry g(coeffs, grid.delta);
    detail::Nodes nodes;
    detail::build_nodes(g, a_lo, a_hi, b_lo, grid.delta, 2, max_panels, nodes);
    double sum = 0.0;
    for (std::size_t j = 0; j < nodes.a.size(); ++j) {
        const double mu = g.kappa * nodes.a[j];
        sum += nodes.weight[j] * normal_interval((b_lo - mu) / g.sigma_c, (b_hi - mu) / g.sigma_c);
    }
    return sum;
}

/// Joint bin probabilities, row-major over (l, m) with l the A bin (rows)
/// and m the B bin (columns).
struct BinnedDistribution2D {
    CoarseGrid grid;
    std::vector<double> probs;
    double captured_mass = 0.0;
    double r = 0.0;
    double phi_sum = 0.0;
    RectangleMethod method = RectangleMethod::PanelQuadrature;

    [[nodiscard]] int size() const noexcept { return grid.size(); }
    [[nodiscard]] double at(int l, int m) const {
        return probs[grid.index(l) * static_cast<std::size_t>(size()) + grid.index(m)];
    }
    /// Distribution of A: sums over m for each l.
    [[nodiscard]] std::vector<double> row_marginal() const {
        const auto n = static_cast<std::size_t>(size());
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            CompensatedSum s;
            for (std::size_t j = 0; j < n; ++j) s.add(probs[i * n + j]);
            out[i] = s.value();
        }
        return out;
    }
    /// Distribution of B: sums over l for each m.
    [[nodiscard]] std::vector<double> column_marginal() const {
        const auto n = static_cast<std::size_t>(size());
        std::vector<double> out(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            CompensatedSum s;
            for (std::size_t i = 0; i < n; ++i) s.add(probs[i * n + j]);
            out[j] = s.value();
        }
        return out;
    }
};

struct JointOptions {
    RectangleMethod method = RectangleMethod::PanelQuadrature;
    std::size_t max_panels = kDefaultMaxPanels;
    double cell_budget = kDefaultCellBudget;
    unsigned threads = 0;  ///< 0: thread_count()
};

namespace detail {

inline void fill_row_panel(const JointGaussianCoefficients<double>& coeffs, const CoarseGrid& grid, int l,
                           std::size_t max_panels, std::span<double> row) {
    const PanelGeometry g(coeffs, grid.delta);
    const int n_cells = grid.size();
    const int n_edges = n_cells + 1;
    const double edge_first = grid.edge(0);
    Nodes nodes;
    build_nodes(g, grid.lower(l), grid.upper(l), edge_first, grid.delta, n_edges, max_panels, nodes);
    std::fill(row.begin(), row.end(), 0.0);

    const double band = kGaussianCutoff * g.sigma_c;
    std::vector<Tail> tails(static_cast<std::size_t>(n_edges));
    for (std::size_t j = 0; j < nodes.a.size(); ++j) {
        const double mu = g.kappa * nodes.a[j];
        // Edges inside the band where the conditional CDF is not exactly 0 or 1.
        const int i_lo = std::max(0, static_cast<int>(std::ceil((mu - band - edge_first) / grid.delta)));
        const int i_hi =
            std::min(n_edges - 1, static_cast<int>(std::floor((mu + band - edge_first) / grid.delta)));
        for (int i = i_lo; i <= i_hi; ++i)
            tails[static_cast<std::size_t>(i)] = edge_tail((grid.edge(i) - mu) / g.sigma_c);
        auto tail_at = [&](int i) -> Tail {
            if (i < i_lo) return {0.0, false};
            if (i > i_hi) return {0.0, true};
            return tails[static_cast<std::size_t>(i)];
        };
        const int k_lo = std::max(0, i_lo - 1);
        const int k_hi = std::min(n_cells - 1, i_hi);
        const double w = nodes.weight[j];
        for (int k = k_lo; k <= k_hi; ++k)
            row[static_cast<std::size_t>(k)] += w * tail_interval(tail_at(k), tail_at(k + 1));
    }
}

}  // namespace detail

inline BinnedDistribution2D binned_joint(const JointGaussianCoefficients<double>& coeffs,
                                         const CoarseGrid& grid, const JointOptions& options = {}) {
    const auto n = static_cast<std::size_t>(grid.size());
    if (!(static_cast<double>(n) * static_cast<double>(n) <= options.cell_budget))
        throw GridTooLarge("binned_joint: grid of " + std::to_string(n) + "^2 cells exceeds the budget");
    BinnedDistribution2D out;
    out.grid = grid;
    out.r = coeffs.r;
    out.phi_sum = coeffs.phi_sum;
    out.method = options.method;
    out.probs.assign(n * n, 0.0);

    const unsigned threads = options.threads == 0 ? thread_count() : options.threads;
    parallel_for(
        n,
        [&](std::size_t i) {
            const int l = static_cast<int>(i) - grid.l_max;
            std::span<double> row(out.probs.data() + i * n, n);
            if (options.method == RectangleMethod::PanelQuadrature) {
                detail::fill_row_panel(coeffs, grid, l, options.max_panels, row);
            } else {
                for (std::size_t j = 0; j < n; ++j)
                    row[j] = bin_prob_2d(coeffs, grid, l, static_cast<int>(j) - grid.l_max,
                                         RectangleMethod::RectangleCdf);
            }
        },
        threads);

    CompensatedSum mass;
    for (int al = 0; al <= grid.l_max; ++al) {
        for (int am = 0; am <= grid.l_max; ++am) {
            for (const int l : {al, -al}) {
                for (const int m : {am, -am}) {
                    mass.add(out.at(l, m));
                    if (am == 0) break;
                }
                if (al == 0) break;
            }
        }
    }
    out.captured_mass = mass.value();
    return out;
}

inline BinnedDistribution2D binned_joint(const TmsvParams<double>& state, double phi_sum, double delta,
                                         double tail_epsilon = kDefaultTailEpsilon,
                                         const JointOptions& options = {}) {
    const auto grid = make_grid(state, delta, tail_epsilon, options.cell_budget);
    return binned_joint(coefficients(state, phi_sum), grid, options);
}

}  // namespace cvbell
