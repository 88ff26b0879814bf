#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace cvbell {

struct NelderMeadOptions {
    double x_tol = 1e-4;  ///< simplex diameter in parameter units
    double f_tol = 1e-5;  ///< spread of objective values over the simplex
    std::size_t max_evals = 400;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimisation inside a box; trial points are
/// clamped onto the box. Deterministic for a deterministic objective.
template <class Objective>
NelderMeadResult nelder_mead(Objective&& f, std::vector<double> start, std::span<const double> step,
                             std::span<const double> lower, std::span<const double> upper,
                             const NelderMeadOptions& options = {}) {
    const std::size_t n = start.size();
    NelderMeadResult out;
    auto clamp = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    };
    auto eval = [&](const std::vector<double>& x) {
        ++out.evaluations;
        return f(std::span<const double>(x));
    };

    std::vector<std::vector<double>> simplex(n + 1, start);
    clamp(simplex[0]);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = simplex[i + 1];
        v[i] += step[i];
        if (v[i] > upper[i]) v[i] = simplex[0][i] - step[i];
        clamp(v);
    }
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = i + 1; j <= n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += std::pow(simplex[i][k] - simplex[j][k], 2);
                d = std::max(d, std::sqrt(s));
            }
        return d;
    };

    auto blend = [&](const std::vector<double>& base, const std::vector<double>& toward, double t) {
        std::vector<double> x(n);
        for (std::size_t k = 0; k < n; ++k) x[k] = base[k] + t * (toward[k] - base[k]);
        clamp(x);
        return x;
    };

    for (;;) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

        if (diameter() < options.x_tol && values[worst] - values[best] < options.f_tol) {
            out.converged = true;
            break;
        }
        if (out.evaluations >= options.max_evals) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);

        const auto reflected = blend(centroid, simplex[worst], -1.0);
        const double f_r = eval(reflected);
        if (f_r < values[best]) {
            const auto expanded = blend(centroid, simplex[worst], -2.0);
            const double f_e = eval(expanded);
            if (f_e < f_r) {
                simplex[worst] = expanded;
                values[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_r;
            }
            continue;
        }
        if (f_r < values[second]) {
            simplex[worst] = reflected;
            values[worst] = f_r;
            continue;
        }
        const bool outside = f_r < values[worst];
        const auto contracted = outside ? blend(centroid, reflected, 0.5) : blend(centroid, simplex[worst], 0.5);
        const double f_c = eval(contracted);
        if (f_c < std::min(f_r, values[worst])) {
            simplex[worst] = contracted;
            values[worst] = f_c;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            simplex[i] = blend(simplex[best], simplex[i], 0.5);
            values[i] = eval(simplex[i]);
        }
    }

    const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    out.x = simplex[best];
    out.f = values[best];
    return out;
}

}  // namespace cvbell
