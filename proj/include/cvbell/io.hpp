#pragma once

// CSV and JSON serialisation for scans, evaluations, minimisations, binned
// distributions and simulated shot records.

#include <cmath>
#include <charconv>
#include <limits>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "cvbell/bell.hpp"
#include "cvbell/coarse_grain.hpp"
#include "cvbell/experiment_sim.hpp"
#include "cvbell/version.hpp"

namespace cvbell::io {

using nlohmann::json;

/// Shortest round-tripping decimal form.
inline std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline json provenance(double tail_epsilon, RectangleMethod method) {
    return {{"version", kVersion}, {"tail_epsilon", tail_epsilon}, {"method", to_string(method)}};
}

/// Grid index bound L used for one (r, Delta) cell.
inline int grid_l(double r, double delta_bin, double tail_epsilon) {
    return make_grid(TmsvParams<double>(r), delta_bin, tail_epsilon, std::numeric_limits<double>::infinity()).l_max;
}

// ---- scans -----------------------------------------------------------------

inline constexpr const char* kScanHeader = "r,delta,Delta,d_qm";

/// Long format, one row per cell, r-major.
inline void write_scan_csv(std::ostream& os, const ScanResult& scan, bool header = true) {
    if (header) os << kScanHeader << '\n';
    for (std::size_t i = 0; i < scan.r_values.size(); ++i)
        for (std::size_t j = 0; j < scan.column_values.size(); ++j)
            os << num(scan.r_values[i]) << ',' << num(scan.delta_at(j)) << ',' << num(scan.delta_bin_at(j)) << ','
               << num(scan.at(i, j)) << '\n';
}

inline json to_json(const ScanResult& scan) {
    json cells = json::array();
    for (std::size_t i = 0; i < scan.r_values.size(); ++i)
        for (std::size_t j = 0; j < scan.column_values.size(); ++j)
            cells.push_back({{"r", scan.r_values[i]},
                             {"delta", scan.delta_at(j)},
                             {"Delta", scan.delta_bin_at(j)},
                             {"d_qm", scan.at(i, j)},
                             {"grid_L", grid_l(scan.r_values[i], scan.delta_bin_at(j), scan.tail_epsilon)}});
    return {{"kind", scan.column_axis == ScanResult::Axis::Delta ? "scan" : "scan_fig2"},
            {"provenance", provenance(scan.tail_epsilon, scan.method)},
            {"min_d_qm", scan.min()},
            {"cells", std::move(cells)}};
}

// ---- single evaluations ----------------------------------------------------

inline json to_json(const BellEvaluation& e) {
    json out = {{"kind", "eval"},
                {"r", e.r},
                {"Delta", e.delta_bin},
                {"d_qm", e.d_qm},
                {"terms",
                 {{"S(A|B')", e.term_ab_prime},
                  {"S(B'|A')", e.term_bprime_aprime},
                  {"S(A'|B)", e.term_aprime_b},
                  {"S(A|B)", e.term_ab}}},
                {"angles",
                 {{"theta", e.angles.theta},
                  {"theta_prime", e.angles.theta_prime},
                  {"phi", e.angles.phi},
                  {"phi_prime", e.angles.phi_prime}}},
                {"violation", e.violates()},
                {"provenance", provenance(e.tail_epsilon, e.method)}};
    out["delta"] = std::isnan(e.delta) ? json(nullptr) : json(e.delta);
    out["provenance"]["grid_L"] = e.l_max;
    return out;
}

inline void write_eval_text(std::ostream& os, const BellEvaluation& e) {
    os << "r        " << num(e.r) << '\n'
       << "delta    " << num(e.delta) << '\n'
       << "Delta    " << num(e.delta_bin) << '\n'
       << "S(A|B')  " << num(e.term_ab_prime) << '\n'
       << "S(B'|A') " << num(e.term_bprime_aprime) << '\n'
       << "S(A'|B)  " << num(e.term_aprime_b) << '\n'
       << "S(A|B)   " << num(e.term_ab) << '\n'
       << "d_qm     " << num(e.d_qm) << (e.violates() ? "  (violation)" : "") << '\n'
       << "grid L=" << e.l_max << " tail_epsilon=" << num(e.tail_epsilon) << " method=" << to_string(e.method)
       << '\n';
}

inline void write_eval_csv(std::ostream& os, const BellEvaluation& e) {
    os << kScanHeader << '\n'
       << num(e.r) << ',' << num(e.delta) << ',' << num(e.delta_bin) << ',' << num(e.d_qm) << '\n';
}

// ---- minimisation ----------------------------------------------------------

inline json to_json(const MinimizationResult& m, double tail_epsilon, RectangleMethod method) {
    json out = {{"kind", "minimize"},
                {"r", m.r},
                {"delta", m.delta},
                {"delta_over_pi", m.delta / M_PI},
                {"Delta", m.delta_bin},
                {"d_min", m.d_min},
                {"grid_min", m.grid_min},
                {"evaluations", m.evaluations},
                {"converged", m.converged},
                {"r_bounds", {m.r_bounds.lo, m.r_bounds.hi}},
                {"delta_bounds", {m.delta_bounds.lo, m.delta_bounds.hi}},
                {"provenance", provenance(tail_epsilon, method)}};
    out["provenance"]["grid_L"] = grid_l(m.r, m.delta_bin, tail_epsilon);
    return out;
}

inline void write_minimize_text(std::ostream& os, const MinimizationResult& m) {
    os << "d_min    " << num(m.d_min) << '\n'
       << "r*       " << num(m.r) << '\n'
       << "delta*   " << num(m.delta) << " (" << num(m.delta / M_PI) << " pi)\n"
       << "Delta    " << num(m.delta_bin) << '\n'
       << "grid min " << num(m.grid_min) << '\n'
       << "evals    " << m.evaluations << (m.converged ? "" : "  (simplex not converged)") << '\n';
}

inline void write_minimize_csv(std::ostream& os, const MinimizationResult& m) {
    os << kScanHeader << '\n'
       << num(m.r) << ',' << num(m.delta) << ',' << num(m.delta_bin) << ',' << num(m.d_min) << '\n';
}

// ---- distributions and shots -----------------------------------------------

inline void write_dist_csv(std::ostream& os, const BinnedDistribution2D& d) {
    os << "l,m,p\n";
    for (int l = -d.grid.l_max; l <= d.grid.l_max; ++l)
        for (int m = -d.grid.l_max; m <= d.grid.l_max; ++m) os << l << ',' << m << ',' << num(d.at(l, m)) << '\n';
}

inline void write_shots_csv(std::ostream& os, const ShotBatch& batch) {
    os << "a,b\n";
    for (const auto& p : batch.pairs) os << num(p.a) << ',' << num(p.b) << '\n';
}

inline json to_json(const EmpiricalEstimate& e, double r, double delta, double delta_bin) {
    return {{"kind", "sample"},
            {"r", r},
            {"delta", delta},
            {"Delta", delta_bin},
            {"n_per_setting", e.n_per_setting},
            {"seed", e.seed},
            {"estimate", e.estimate},
            {"std_error", e.std_error},
            {"terms", e.terms},
            {"provenance", {{"version", kVersion}}}};
}

}  // namespace cvbell::io
