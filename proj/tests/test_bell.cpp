#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cvbell/bell.hpp"

using namespace cvbell;

namespace {

// tests/oracles/reference.py
constexpr double kDHeadline = 0.35406585130260992062;   // r=1.817, delta=0.213 pi, Delta=6
constexpr double kDSecond = 0.34077024620298004952;     // r=1.915, delta=0.098 pi, Delta=3.5
constexpr double kDModerate = 1.1866046130280498202;    // r=1, delta=pi/2, Delta=2

}  // namespace

TEST(AngleGeometry, PairSums) {
    const AngleGeometry g{0.37, 0.9};
    const auto a = g.angles();
    EXPECT_NEAR(a.theta + a.phi_prime, 0.3, 1e-15);
    EXPECT_NEAR(a.theta_prime + a.phi_prime, -0.3, 1e-15);
    EXPECT_NEAR(a.theta_prime + a.phi, 0.3, 1e-15);
    EXPECT_NEAR(a.theta + a.phi, 0.9, 1e-15);
}

TEST(Evaluate, MatchesOracleValues) {
    EXPECT_NEAR(evaluate(TmsvParams<double>(1.817), {0.0, 0.213 * M_PI}, 6.0).d_qm, kDHeadline, 1e-11);
    EXPECT_NEAR(evaluate(TmsvParams<double>(1.915), {0.0, 0.098 * M_PI}, 3.5).d_qm, kDSecond, 1e-11);
    EXPECT_NEAR(evaluate(TmsvParams<double>(1.0), {0.0, M_PI / 2}, 2.0).d_qm, kDModerate, 1e-11);
}

TEST(Evaluate, TermsAndReduction) {
    const TmsvParams<double> s(1.817);
    const auto e = evaluate(s, {0.0, 0.213 * M_PI}, 6.0);
    EXPECT_NEAR(e.d_qm, e.term_ab_prime + e.term_bprime_aprime + e.term_aprime_b - e.term_ab, 1e-12);
    const double third = s_qm(s, 0.213 * M_PI / 3, 6.0);
    EXPECT_NEAR(e.term_ab_prime, third, 1e-10);
    EXPECT_NEAR(e.term_bprime_aprime, third, 1e-10);
    EXPECT_NEAR(e.term_aprime_b, third, 1e-10);
    EXPECT_NEAR(e.term_ab, s_qm(s, 0.213 * M_PI, 6.0), 1e-10);
    EXPECT_EQ(e.l_max, 4);
    EXPECT_DOUBLE_EQ(e.delta, 0.213 * M_PI);
}

TEST(Evaluate, ProductStateDoesNotViolate) {
    const TmsvParams<double> s(0.0);
    for (const double delta : {0.0, 0.7, 2.5}) {
        const auto e = evaluate(s, {0.0, delta}, 1.0);
        const double sa = conditional_entropy(binned_joint(s, 0.0, 1.0)).s_marginal_a;
        EXPECT_NEAR(e.d_qm, 2 * sa, 1e-10);
        EXPECT_FALSE(e.violates());
    }
    const auto all_zero = evaluate_general(s, MeasurementAngles{}, 1.0);
    EXPECT_GE(all_zero.d_qm, 0.0);
}

TEST(EvaluateGeneral, ConsistentWithGeometry) {
    const TmsvParams<double> s(1.5);
    const AngleGeometry g{0.3, 0.2 * M_PI};
    EXPECT_NEAR(evaluate_general(s, g.angles(), 4.0).d_qm, evaluate(s, g, 4.0).d_qm, 1e-10);
    EXPECT_NEAR(evaluate(TmsvParams<double>(1.817), {0.0, 0.213 * M_PI}, 6.0).d_qm,
                evaluate(TmsvParams<double>(1.817), {1.1, 0.213 * M_PI}, 6.0).d_qm, 1e-10);
}

TEST(EvaluateGeneral, ReductionIdentityOnRandomPoints) {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> ur(0.0, 2.5), ud(-M_PI, M_PI), ub(1.0, 10.0), ut(-2.0, 2.0);
    for (int i = 0; i < 20; ++i) {
        const TmsvParams<double> s(ur(rng));
        const double delta = ud(rng), bin = ub(rng);
        EXPECT_NEAR(evaluate(s, {ut(rng), delta}, bin).d_qm, d_qm_reduced(s, delta, bin), 1e-10);
        EXPECT_NEAR(d_qm_reduced(s, delta, bin), d_qm_reduced(s, -delta, bin), 1e-10);
    }
}

TEST(MutualInfo, IdentityWithD) {
    const AngleGeometry g{0.0, 0.213 * M_PI};
    const TmsvParams<double> s(1.817);
    const double d = evaluate(s, g, 6.0).d_qm;
    EXPECT_NEAR(evaluate_mutual_info(s, g.angles(), 6.0), -d, 1e-10);

    const TmsvParams<double> s0(0.0);
    const auto j = conditional_entropy(binned_joint(s0, 0.0, 6.0));
    EXPECT_NEAR(evaluate_mutual_info(s0, g.angles(), 6.0), -(j.s_marginal_a + j.s_marginal_b), 1e-10);
}

TEST(Boundary, DeltaZeroIsTwiceSqm) {
    for (const double r : {0.0, 1.0, 2.5})
        for (const double bin : {1.0, 3.0, 10.0}) {
            const TmsvParams<double> s(r);
            const double d = evaluate(s, {0.0, 0.0}, bin).d_qm;
            EXPECT_NEAR(d, 2 * s_qm(s, 0.0, bin), 1e-12);
            EXPECT_GE(d, 0.0);
        }
}

TEST(Scan, ShapeOrderAndDeterminism) {
    const std::vector<double> rs{0.0, 1.0, 1.8}, ds{0.0, 0.5, 1.0, 2.0};
    const auto a = scan(rs, ds, 3.0);
    ASSERT_EQ(a.d_qm.size(), rs.size() * ds.size());
    for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = 0; j < ds.size(); ++j) {
            EXPECT_EQ(a.at(i, j), d_qm_reduced(TmsvParams<double>(rs[i]), ds[j], 3.0));
            EXPECT_EQ(a.delta_bin_at(j), 3.0);
        }
    EXPECT_EQ(a.d_qm, scan(rs, ds, 3.0).d_qm);
    EXPECT_THROW(scan({}, ds, 3.0), std::invalid_argument);
}

TEST(Scan, NoViolationAtUnitBins) {
    const auto res = scan(linspace(0.0, 2.0, 41), linspace(0.0, M_PI, 65), 1.0);
    EXPECT_GE(res.min(), 0.0);
}

TEST(ScanFig2, NonNegativeAndMonotoneInBinWidth) {
    const auto res = scan_fig2({0.0, 1.0, 2.0}, {1.0, 3.0, 6.0, 10.0});
    EXPECT_GE(res.min(), 0.0);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(res.delta_at(j), 0.0);
    EXPECT_GT(res.at(0, 0), 0.0);
    for (std::size_t j = 0; j + 1 < 4; ++j) EXPECT_GT(res.at(2, j), res.at(2, j + 1));
}

TEST(Minimize, SoundnessOnSmallBox) {
    MinimizeOptions opt;
    opt.grid_r = 8;
    opt.grid_delta = 8;
    opt.log_delta_points = 4;
    opt.top_starts = 3;
    const auto res = minimize({0.5, 2.0}, {0.1, 2.0}, 2.0, opt);
    EXPECT_LE(res.d_min, res.grid_min);
    EXPECT_GE(res.r, 0.5);
    EXPECT_LE(res.r, 2.0);
    EXPECT_GE(res.delta, 0.1);
    EXPECT_LE(res.delta, 2.0);
    EXPECT_NEAR(d_qm_reduced(TmsvParams<double>(res.r), res.delta, 2.0), res.d_min, 1e-10);
    const auto again = minimize({0.5, 2.0}, {0.1, 2.0}, 2.0, opt);
    EXPECT_EQ(again.d_min, res.d_min);
    EXPECT_EQ(again.r, res.r);
    EXPECT_THROW(minimize({2.0, 1.0}, {0.0, 1.0}, 2.0, opt), std::invalid_argument);
}

TEST(NelderMead, FindsQuadraticMinimumInBox) {
    auto f = [](std::span<const double> x) { return std::pow(x[0] - 0.3, 2) + 4 * std::pow(x[1] + 0.2, 2); };
    const std::array<double, 2> step{0.5, 0.5}, lo{-1, -1}, hi{1, 1};
    const auto res = nelder_mead(f, {0.9, 0.9}, step, lo, hi, {1e-8, 1e-12, 2000});
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(res.x[0], 0.3, 1e-6);
    EXPECT_NEAR(res.x[1], -0.2, 1e-6);
    const std::array<double, 2> lo2{0.5, -1};
    const auto clamped = nelder_mead(f, {0.9, 0.9}, step, lo2, hi, {1e-8, 1e-12, 2000});
    EXPECT_NEAR(clamped.x[0], 0.5, 1e-6);
}
