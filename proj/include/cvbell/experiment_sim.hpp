#pragma once

// Finite-shot simulation of the homodyne Bell test: exact Gaussian quadrature
// pairs, binned exactly as the analytic distributions, with plug-in entropy
// estimates and a bootstrap error bar.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "cvbell/bell.hpp"
#include "cvbell/errors.hpp"
#include "cvbell/gaussian_core.hpp"
#include "cvbell/parallel.hpp"

namespace cvbell {

struct QuadraturePair {
    double a = 0.0;
    double b = 0.0;
};

struct ShotBatch {
    std::vector<QuadraturePair> pairs;
    double r = 0.0;
    double phi_sum = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    [[nodiscard]] std::size_t size() const noexcept { return pairs.size(); }
};

namespace detail {

// splitmix64 finaliser; used as a stateless counter-based generator.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

/// Uniform on (0, 1].
constexpr double unit_open_zero(std::uint64_t bits) noexcept {
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

/// Two independent standard normals for shot i of a stream (Box-Muller).
inline std::array<double, 2> normal_pair(std::uint64_t key, std::uint64_t shot) noexcept {
    const double u1 = unit_open_zero(mix64(key ^ mix64(2 * shot)));
    const double u2 = unit_open_zero(mix64(key ^ mix64(2 * shot + 1)));
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

inline constexpr std::size_t kShotBlock = 1 << 16;

}  // namespace detail

/// n i.i.d. draws of (a, b) with inverse covariance 2 [[v, -w], [-w, v]].
/// Shot i depends only on (seed, stream, i), so any block decomposition
/// gives the same batch.
inline ShotBatch sample_pairs(const TmsvParams<double>& state, double phi_sum, std::size_t n,
                              std::uint64_t seed, std::uint64_t stream = 0) {
    detail::require(n >= 1, "sample_pairs: n must be >= 1");
    const auto k = coefficients(state, phi_sum);
    const double det = k.determinant();
    // Cholesky factor of the covariance [[v, w], [w, v]] / (2 det).
    const double l11 = std::sqrt(k.v / (2.0 * det));
    const double l21 = k.w / std::sqrt(2.0 * det * k.v);
    const double l22 = 1.0 / std::sqrt(2.0 * k.v);

    ShotBatch out;
    out.r = state.r();
    out.phi_sum = phi_sum;
    out.seed = seed;
    out.stream = stream;
    out.pairs.resize(n);
    const auto key = detail::stream_key(seed, stream);
    const std::size_t blocks = (n + detail::kShotBlock - 1) / detail::kShotBlock;
    parallel_for(blocks, [&](std::size_t blk) {
        const std::size_t end = std::min(n, (blk + 1) * detail::kShotBlock);
        for (std::size_t i = blk * detail::kShotBlock; i < end; ++i) {
            const auto z = detail::normal_pair(key, i);
            out.pairs[i] = {l11 * z[0], l21 * z[0] + l22 * z[1]};
        }
    });
    return out;
}

/// Bin index l = round(x / delta_bin), matching the analytic grid.
inline long bin_index(double x, double delta_bin) { return static_cast<long>(std::floor(x / delta_bin + 0.5)); }

/// Occupied cells of a binned batch with compact row/column ids.
struct CellCounts {
    std::vector<std::size_t> counts;
    std::vector<std::size_t> row_id;
    std::vector<std::size_t> col_id;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t total = 0;
};

inline CellCounts count_cells(const ShotBatch& batch, double delta_bin) {
    detail::require(delta_bin > 0 && std::isfinite(delta_bin), "count_cells: delta_bin must be positive");
    std::vector<std::pair<long, long>> cells(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        cells[i] = {bin_index(batch.pairs[i].a, delta_bin), bin_index(batch.pairs[i].b, delta_bin)};
    std::sort(cells.begin(), cells.end());

    auto compact = [](std::vector<long> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    std::vector<long> ls, ms;
    ls.reserve(cells.size());
    ms.reserve(cells.size());
    for (const auto& [l, m] : cells) {
        ls.push_back(l);
        ms.push_back(m);
    }
    const auto row_keys = compact(std::move(ls));
    const auto col_keys = compact(std::move(ms));
    auto id = [](const std::vector<long>& keys, long x) {
        return static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), x) - keys.begin());
    };

    CellCounts out;
    out.rows = row_keys.size();
    out.cols = col_keys.size();
    out.total = cells.size();
    for (std::size_t i = 0; i < cells.size();) {
        std::size_t j = i;
        while (j < cells.size() && cells[j] == cells[i]) ++j;
        out.counts.push_back(j - i);
        out.row_id.push_back(id(row_keys, cells[i].first));
        out.col_id.push_back(id(col_keys, cells[i].second));
        i = j;
    }
    return out;
}

/// Plug-in entropy of a count vector in nats, optionally with the
/// Miller-Madow term (K - 1) / 2n, K = number of occupied bins.
inline double plugin_entropy(const std::vector<std::size_t>& counts, std::size_t total, bool miller_madow) {
    if (total == 0) return 0.0;
    const double n = static_cast<double>(total);
    double h = 0.0;
    std::size_t occupied = 0;
    for (const auto c : counts) {
        if (c == 0) continue;
        ++occupied;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    if (miller_madow && occupied > 0) h += static_cast<double>(occupied - 1) / (2.0 * n);
    return h;
}

/// Estimated joint and marginal entropies of one setting's counts.
inline EntropyTerms estimate_terms(const CellCounts& cells, const std::vector<std::size_t>& counts,
                                   bool miller_madow) {
    std::vector<std::size_t> rows(cells.rows, 0), cols(cells.cols, 0);
    std::size_t total = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        rows[cells.row_id[k]] += counts[k];
        cols[cells.col_id[k]] += counts[k];
        total += counts[k];
    }
    EntropyTerms t;
    t.s_joint = plugin_entropy(counts, total, miller_madow);
    t.s_marginal_a = plugin_entropy(rows, total, miller_madow);
    t.s_marginal_b = plugin_entropy(cols, total, miller_madow);
    t.s_conditional = t.s_joint - t.s_marginal_b;
    return t;
}

struct EmpiricalOptions {
    bool miller_madow = true;
    std::size_t bootstrap_resamples = 200;
};

struct EmpiricalEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::array<double, 4> terms{};  ///< S(A|B'), S(B'|A'), S(A'|B), S(A|B)
    std::size_t n_per_setting = 0;
    std::uint64_t seed = 0;
};

namespace detail {

// Setting order: (A, B'), (A', B'), (A', B), (A, B).
inline double combine(const std::array<EntropyTerms, 4>& t, std::array<double, 4>* parts = nullptr) {
    const std::array<double, 4> p{t[0].s_conditional, t[1].s_conditional_b_given_a(), t[2].s_conditional,
                                  t[3].s_conditional};
    if (parts) *parts = p;
    return p[0] + p[1] + p[2] - p[3];
}

/// Multinomial resample of the observed cell counts.
inline std::vector<std::size_t> multinomial(const std::vector<std::size_t>& counts, std::size_t total,
                                            std::mt19937_64& rng) {
    std::vector<std::size_t> out(counts.size(), 0);
    std::size_t left = total, mass_left = total;
    for (std::size_t k = 0; k < counts.size() && left > 0; ++k) {
        if (k + 1 == counts.size()) {
            out[k] = left;
            break;
        }
        const double p = std::min(1.0, static_cast<double>(counts[k]) / static_cast<double>(mass_left));
        std::binomial_distribution<std::size_t> draw(left, p);
        out[k] = draw(rng);
        left -= out[k];
        mass_left -= counts[k];
    }
    return out;
}

}  // namespace detail

/// D estimated from n_per_setting simulated shots in each of the four
/// settings of the symmetric geometry. Each setting draws from its own stream.
inline EmpiricalEstimate empirical_d_qm(const TmsvParams<double>& state, const AngleGeometry& geometry,
                                        double delta_bin, std::size_t n_per_setting, std::uint64_t seed,
                                        const EmpiricalOptions& options = {}) {
    detail::require(n_per_setting >= 1000, "empirical_d_qm: n_per_setting must be >= 1000");
    const auto an = geometry.angles();
    const std::array<double, 4> sums{an.theta + an.phi_prime, an.theta_prime + an.phi_prime,
                                     an.theta_prime + an.phi, an.theta + an.phi};
    std::array<CellCounts, 4> cells;
    for (std::size_t s = 0; s < 4; ++s)
        cells[s] = count_cells(sample_pairs(state, sums[s], n_per_setting, seed, s), delta_bin);

    std::array<EntropyTerms, 4> terms;
    for (std::size_t s = 0; s < 4; ++s) terms[s] = estimate_terms(cells[s], cells[s].counts, options.miller_madow);

    EmpiricalEstimate out;
    out.estimate = detail::combine(terms, &out.terms);
    out.n_per_setting = n_per_setting;
    out.seed = seed;

    const std::size_t b_count = options.bootstrap_resamples;
    if (b_count < 2) return out;
    std::vector<double> boot(b_count);
    parallel_for(b_count, [&](std::size_t b) {
        std::mt19937_64 rng(detail::mix64(detail::stream_key(seed, 0xb007ULL) ^ b));
        std::array<EntropyTerms, 4> t;
        for (std::size_t s = 0; s < 4; ++s)
            t[s] = estimate_terms(cells[s], detail::multinomial(cells[s].counts, cells[s].total, rng),
                                  options.miller_madow);
        boot[b] = detail::combine(t);
    });
    double mean = 0.0;
    for (const double x : boot) mean += x;
    mean /= static_cast<double>(b_count);
    double var = 0.0;
    for (const double x : boot) var += (x - mean) * (x - mean);
    out.std_error = std::sqrt(var / static_cast<double>(b_count - 1));
    return out;
}

}  // namespace cvbell
