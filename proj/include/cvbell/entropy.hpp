#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvbell/coarse_grain.hpp"
#include "cvbell/errors.hpp"
#include "cvbell/quadrature.hpp"

namespace cvbell {

/// Bins below this probability contribute exactly zero to entropy sums.
inline constexpr double kProbabilityFloor = 1e-300;
/// Accepted total mass: a binned distribution may be short by its tail loss.
inline constexpr double kMassSlackLow = 1e-6;
inline constexpr double kMassSlackHigh = 1e-10;

/// Shannon entropy -sum p ln p in nats, with 0 ln 0 = 0. The distribution
/// is used as given (no renormalisation).
inline double shannon(std::span<const double> probs) {
    CompensatedSum mass;
    for (const double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw InvalidDistribution("shannon: negative or non-finite probability " + std::to_string(p));
        mass.add(p);
    }
    const double total = mass.value();
    if (total < 1.0 - kMassSlackLow || total > 1.0 + kMassSlackHigh)
        throw InvalidDistribution("shannon: total probability " + std::to_string(total) +
                                  " outside [1 - 1e-6, 1 + 1e-10]");
    CompensatedSum h;
    for (const double p : probs)
        if (p >= kProbabilityFloor) h.add(-p * std::log(p));
    return h.value();
}

/// Row-major joint probabilities P(A = row, B = column).
struct ProbabilityMatrix {
    std::span<const double> probs;
    std::size_t rows = 0;
    std::size_t cols = 0;

    [[nodiscard]] std::vector<double> row_marginal() const {
        std::vector<double> out(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            CompensatedSum s;
            for (std::size_t j = 0; j < cols; ++j) s.add(probs[i * cols + j]);
            out[i] = s.value();
        }
        return out;
    }
    [[nodiscard]] std::vector<double> column_marginal() const {
        std::vector<double> out(cols, 0.0);
        for (std::size_t j = 0; j < cols; ++j) {
            CompensatedSum s;
            for (std::size_t i = 0; i < rows; ++i) s.add(probs[i * cols + j]);
            out[j] = s.value();
        }
        return out;
    }
};

inline ProbabilityMatrix as_matrix(const BinnedDistribution2D& joint) {
    const auto n = static_cast<std::size_t>(joint.size());
    return {joint.probs, n, n};
}

/// Entropies of one joint distribution and its own marginals (nats).
/// s_conditional = S(A|B) = S(A,B) - S(B).
struct EntropyTerms {
    double s_joint = 0.0;
    double s_marginal_a = 0.0;
    double s_marginal_b = 0.0;
    double s_conditional = 0.0;

    /// S(B|A) = S(A,B) - S(A).
    [[nodiscard]] double s_conditional_b_given_a() const { return s_joint - s_marginal_a; }
    [[nodiscard]] double mutual_information() const { return s_marginal_a + s_marginal_b - s_joint; }
};

inline EntropyTerms conditional_entropy(const ProbabilityMatrix& joint) {
    if (joint.probs.size() != joint.rows * joint.cols)
        throw InvalidDistribution("conditional_entropy: matrix shape does not match data");
    EntropyTerms t;
    t.s_joint = shannon(joint.probs);
    t.s_marginal_a = shannon(joint.row_marginal());
    t.s_marginal_b = shannon(joint.column_marginal());
    t.s_conditional = t.s_joint - t.s_marginal_b;
    return t;
}

inline EntropyTerms conditional_entropy(const BinnedDistribution2D& joint) {
    return conditional_entropy(as_matrix(joint));
}

/// S(A;B) = S(A) + S(B) - S(A,B).
inline double mutual_information(const ProbabilityMatrix& joint) {
    return conditional_entropy(joint).mutual_information();
}

inline double mutual_information(const BinnedDistribution2D& joint) {
    return mutual_information(as_matrix(joint));
}

/// Discretised conditional entropy S(A_theta | B_phi) of the TMSV state as a
/// function of phi_sum = theta + phi.
inline double s_qm(const TmsvParams<double>& state, double phi_sum, double delta,
                   double tail_epsilon = kDefaultTailEpsilon, const JointOptions& options = {}) {
    return conditional_entropy(binned_joint(state, phi_sum, delta, tail_epsilon, options)).s_conditional;
}

}  // namespace cvbell
