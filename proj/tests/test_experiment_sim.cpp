#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "cvbell/experiment_sim.hpp"
#include "cvbell/io.hpp"

using namespace cvbell;

namespace {

struct Moments {
    double mean_a = 0, mean_b = 0, var_a = 0, var_b = 0, corr = 0;
};

Moments moments(const ShotBatch& batch) {
    Moments m;
    const double n = static_cast<double>(batch.size());
    for (const auto& p : batch.pairs) {
        m.mean_a += p.a / n;
        m.mean_b += p.b / n;
    }
    double cab = 0;
    for (const auto& p : batch.pairs) {
        m.var_a += (p.a - m.mean_a) * (p.a - m.mean_a) / n;
        m.var_b += (p.b - m.mean_b) * (p.b - m.mean_b) / n;
        cab += (p.a - m.mean_a) * (p.b - m.mean_b) / n;
    }
    m.corr = cab / std::sqrt(m.var_a * m.var_b);
    return m;
}

}  // namespace

TEST(SamplePairs, MomentsMatchTheState) {
    const std::size_t n = 200'000;
    const double tol = 4.0 / std::sqrt(static_cast<double>(n));
    const auto zero = moments(sample_pairs(TmsvParams<double>(0.0), 0.0, n, 42));
    EXPECT_NEAR(zero.corr, 0.0, tol);

    const TmsvParams<double> s(1.0);
    const auto batch = sample_pairs(s, 0.0, n, 42);
    const auto m = moments(batch);
    const double sigma = s.quadrature_sigma();
    EXPECT_NEAR(m.corr, std::tanh(2.0), tol);
    EXPECT_NEAR(m.corr, 0.9640, 1e-3);
    EXPECT_NEAR(m.mean_a, 0.0, 5 * sigma / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(m.mean_b, 0.0, 5 * sigma / std::sqrt(static_cast<double>(n)));
    // Var of the sample variance of a Gaussian is 2 sigma^4 / n.
    EXPECT_NEAR(m.var_b, s.cosh_2r() / 2, 5 * std::sqrt(2.0 / n) * sigma * sigma);
    EXPECT_EQ(batch.seed, 42u);
    EXPECT_DOUBLE_EQ(batch.r, 1.0);
}

TEST(SamplePairs, DeterministicAndStreamSeparated) {
    const TmsvParams<double> s(1.2);
    const auto a = sample_pairs(s, 0.4, 100'000, 9);
    const auto b = sample_pairs(s, 0.4, 100'000, 9);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a.pairs[i].a, b.pairs[i].a);
        ASSERT_EQ(a.pairs[i].b, b.pairs[i].b);
    }
    const auto other = sample_pairs(s, 0.4, 10, 9, 1);
    EXPECT_NE(other.pairs[0].a, a.pairs[0].a);
    // A prefix is the prefix of the longer batch.
    const auto shorter = sample_pairs(s, 0.4, 1000, 9);
    EXPECT_EQ(shorter.pairs[999].a, a.pairs[999].a);
    EXPECT_THROW(sample_pairs(s, 0.4, 0, 9), std::invalid_argument);
}

TEST(PluginEntropy, MillerMadowAddsBiasTerm) {
    const std::vector<std::size_t> counts{50, 50, 0};
    EXPECT_NEAR(plugin_entropy(counts, 100, false), std::log(2.0), 1e-15);
    EXPECT_NEAR(plugin_entropy(counts, 100, true), std::log(2.0) + 1.0 / 200.0, 1e-15);
}

TEST(CountCells, BinsMatchAnalyticGrid) {
    ShotBatch batch;
    batch.pairs = {{0.49, -0.51}, {0.51, -0.49}, {-1.6, 2.4}, {0.49, -0.51}};
    const auto c = count_cells(batch, 1.0);
    EXPECT_EQ(c.total, 4u);
    EXPECT_EQ(c.counts.size(), 3u);
    EXPECT_EQ(c.rows, 3u);  // l in {-2, 0, 1}
    EXPECT_EQ(c.cols, 3u);  // m in {-1, 0, 2}
    EXPECT_EQ(bin_index(0.5, 1.0), 1);
    EXPECT_EQ(bin_index(-0.5, 1.0), 0);
}

TEST(EmpiricalDQm, ProductStateConsistentWithNonViolation) {
    const auto est = empirical_d_qm(TmsvParams<double>(0.0), {0.0, 0.5}, 1.0, 20'000, 3);
    EXPECT_GE(est.estimate, -3 * est.std_error);
    EXPECT_GT(est.std_error, 0.0);
}

TEST(EmpiricalDQm, AgreesWithAnalyticValue) {
    const TmsvParams<double> s(1.817);
    const AngleGeometry g{0.0, 0.213 * M_PI};
    const double analytic = evaluate(s, g, 6.0).d_qm;
    const auto est = empirical_d_qm(s, g, 6.0, 200'000, 11);
    EXPECT_NEAR(est.estimate, analytic, 4 * est.std_error);
    EXPECT_NEAR(est.estimate, est.terms[0] + est.terms[1] + est.terms[2] - est.terms[3], 1e-12);
    EXPECT_THROW(empirical_d_qm(s, g, 6.0, 999, 1), std::invalid_argument);
}

TEST(EmpiricalDQm, ErrorShrinksWithShots) {
    const TmsvParams<double> s(1.0);
    const AngleGeometry g{0.0, 0.5};
    const double analytic = evaluate(s, g, 2.0).d_qm;
    EmpiricalOptions fast;
    fast.bootstrap_resamples = 0;
    std::vector<double> small, large;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        small.push_back(std::fabs(empirical_d_qm(s, g, 2.0, 2'000, seed, fast).estimate - analytic));
        large.push_back(std::fabs(empirical_d_qm(s, g, 2.0, 200'000, seed, fast).estimate - analytic));
    }
    std::sort(small.begin(), small.end());
    std::sort(large.begin(), large.end());
    EXPECT_LT(large[5], small[5]);
}

TEST(EmpiricalDQm, MillerMadowReducesJointEntropyBias) {
    const TmsvParams<double> s(1.0);
    const auto exact = conditional_entropy(binned_joint(s, 0.0, 0.5)).s_joint;
    double plain = 0, corrected = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto cells = count_cells(sample_pairs(s, 0.0, 1'000, seed), 0.5);
        plain += estimate_terms(cells, cells.counts, false).s_joint / 40;
        corrected += estimate_terms(cells, cells.counts, true).s_joint / 40;
    }
    EXPECT_LT(plain, exact);
    EXPECT_LT(std::fabs(corrected - exact), std::fabs(plain - exact));
}

TEST(ShotsCsv, HeaderAndRows) {
    std::ostringstream os;
    io::write_shots_csv(os, sample_pairs(TmsvParams<double>(0.5), 0.0, 3, 1));
    const auto text = os.str();
    EXPECT_EQ(text.rfind("a,b\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
