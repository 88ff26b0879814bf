#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "cvbell/gaussian_core.hpp"

using namespace cvbell;

namespace {

double rel(double a, double b) { return std::fabs(a / b - 1.0); }

double integrate(auto f, double lo, double hi) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
}

}  // namespace

TEST(TmsvParams, RejectsNegativeOrNonFiniteR) {
    EXPECT_THROW(TmsvParams<double>(-0.1), std::invalid_argument);
    EXPECT_THROW(TmsvParams<double>(NAN), std::invalid_argument);
    EXPECT_NO_THROW(TmsvParams<double>(0.0));
    const TmsvParams<double> s(1.3);
    EXPECT_GE(s.cosh_2r(), 1.0);
    EXPECT_LT(s.tanh_r(), 1.0);
}

TEST(Coefficients, VacuumLimit) {
    for (const double ph : {0.0, 0.7, 3.0}) {
        const auto k = coefficients(TmsvParams<double>(0.0), ph);
        EXPECT_DOUBLE_EQ(k.v, 1.0);
        EXPECT_DOUBLE_EQ(k.w, 0.0);
        EXPECT_NEAR(k.norm_z, M_PI, 1e-15);
    }
}

TEST(Coefficients, InPhaseMatchesHyperbolicForm) {
    const auto k = coefficients(TmsvParams<double>(1.0), 0.0);
    EXPECT_LT(rel(k.v, std::cosh(2.0)), 1e-12);
    EXPECT_LT(rel(k.w, std::sinh(2.0)), 1e-12);
    EXPECT_NEAR(k.v, 3.7622, 1e-4);
    EXPECT_NEAR(k.w, 3.6269, 1e-4);
    EXPECT_LT(rel(k.v_minus_w, std::exp(-2.0)), 1e-12);
}

TEST(Coefficients, QuadraturePhaseKillsCrossTerm) {
    const auto k = coefficients(TmsvParams<double>(1.0), M_PI / 2);
    EXPECT_NEAR(k.w, 0.0, 1e-15);
}

TEST(Coefficients, InvariantsOnRandomSettings) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ur(0.0, 4.0), up(0.0, 2 * M_PI);
    for (int i = 0; i < 500; ++i) {
        const TmsvParams<double> s(ur(rng));
        const double ph = up(rng);
        const auto k = coefficients(s, ph);
        ASSERT_GT(k.v, 0.0);
        ASSERT_GT(k.determinant(), 0.0);
        EXPECT_LT(rel(M_PI / std::sqrt(k.determinant()), k.norm_z), 1e-12);
        const double t = s.tanh_r();
        EXPECT_LT(rel(k.abs_one_minus_t2, std::sqrt(1 + std::pow(t, 4) - 2 * t * t * std::cos(2 * ph))), 1e-12);
        EXPECT_NEAR(k.correlation(), std::tanh(2 * s.r()) * std::cos(ph), 1e-12)
            << "r=" << s.r() << " phi=" << ph;
    }
}

TEST(Coefficients, DependOnlyOnPhaseSum) {
    const TmsvParams<double> s(1.4);
    const auto a = coefficients(s, PhaseSettings<double>{0.2, 0.9});
    const auto b = coefficients(s, PhaseSettings<double>{1.0, 0.1});
    EXPECT_DOUBLE_EQ(a.v, b.v);
    EXPECT_DOUBLE_EQ(a.w, b.w);
    EXPECT_DOUBLE_EQ(joint_pdf(a, 0.3, -1.2), joint_pdf(b, 0.3, -1.2));
}

TEST(JointPdf, Examples) {
    EXPECT_NEAR(joint_pdf(coefficients(TmsvParams<double>(0.0), 0.0), 0.0, 0.0), 1.0 / M_PI, 1e-16);
    const TmsvParams<double> s(1.0);
    const double t = std::tanh(1.0), c = std::cosh(1.0);
    const double expected = std::exp(-2 * std::cosh(2.0) + 2 * std::sinh(2.0)) / (M_PI * (1 - t * t) * c * c);
    EXPECT_LT(rel(joint_pdf(coefficients(s, 0.0), 1.0, 1.0), expected), 1e-12);
}

TEST(JointPdf, SymmetriesAndReflection) {
    const TmsvParams<double> s(1.2);
    for (const double x : {0.1, 0.9, 2.2}) {
        const auto k = coefficients(s, x);
        const auto kneg = coefficients(s, -x);
        const auto kwrap = coefficients(s, 2 * M_PI - x);
        const auto kref = coefficients(s, M_PI - x);
        EXPECT_NEAR(kref.v, k.v, 1e-12 * k.v);
        EXPECT_NEAR(kref.w, -k.w, 1e-12 * k.v);
        for (const auto& [a, b] : {std::pair{0.4, -1.1}, {2.0, 1.5}, {-0.3, 0.0}}) {
            const double p = joint_pdf(k, a, b);
            EXPECT_GT(p, 0.0);
            EXPECT_LT(rel(joint_pdf(k, b, a), p), 1e-14);
            EXPECT_LT(rel(joint_pdf(kneg, a, b), p), 1e-12);
            EXPECT_LT(rel(joint_pdf(kwrap, a, b), p), 1e-12);
            EXPECT_LT(rel(joint_pdf(kref, a, -b), p), 1e-12);
        }
    }
}

TEST(JointPdf, FactorizesAtZeroSqueezing) {
    const TmsvParams<double> s(0.0);
    const auto k = coefficients(s, 0.4);
    for (const double a : {-2.0, 0.0, 1.3})
        for (const double b : {-0.5, 0.7})
            EXPECT_LT(rel(joint_pdf(k, a, b), marginal_pdf(s, a) * marginal_pdf(s, b)), 1e-14);
}

TEST(JointPdf, LogMatchesPdf) {
    const auto k = coefficients(TmsvParams<double>(2.0), 0.3);
    EXPECT_LT(rel(std::exp(log_joint_pdf(k, 1.0, 0.5)), joint_pdf(k, 1.0, 0.5)), 1e-13);
    // deep tail stays finite in log form
    EXPECT_TRUE(std::isfinite(log_joint_pdf(k, 40.0, -40.0)));
}

TEST(MarginalPdf, Examples) {
    EXPECT_NEAR(marginal_pdf(TmsvParams<double>(0.0), 0.0), 1.0 / std::sqrt(M_PI), 1e-16);
    EXPECT_LT(rel(marginal_pdf(TmsvParams<double>(1.0), 0.0), 1.0 / std::sqrt(M_PI * std::cosh(2.0))), 1e-14);
    for (const double r : {0.0, 1.0, 2.0}) {
        const TmsvParams<double> s(r);
        const double sig = s.quadrature_sigma();
        EXPECT_NEAR(integrate([&](double b) { return marginal_pdf(s, b); }, -40 * sig, 40 * sig), 1.0, 1e-12);
    }
}

TEST(MarginalPdf, IsTheIntegralOfTheJoint) {
    for (const double r : {0.0, 1.0, 2.0}) {
        const TmsvParams<double> s(r);
        const auto k = coefficients(s, 0.0);
        const double sig = k.marginal_sigma();
        for (const double b : {0.0, 1.0, 3.0}) {
            const double mu = k.correlation() * b;
            const double got =
                integrate([&](double a) { return joint_pdf(k, a, b); }, mu - 12 * k.conditional_sigma(),
                          mu + 12 * k.conditional_sigma());
            EXPECT_NEAR(got, marginal_pdf(s, b), 1e-9) << "r=" << r << " b=" << b << " sigma=" << sig;
        }
    }
}

TEST(DifferentialEntropies, Examples) {
    const double half_ln_pie = 0.5 * std::log(M_PI * M_E);
    const auto e0 = differential_entropies(TmsvParams<double>(0.0), 0.0);
    EXPECT_NEAR(e0.s_marginal, half_ln_pie, 1e-14);
    EXPECT_NEAR(e0.s_joint, 2 * half_ln_pie, 1e-14);
    EXPECT_NEAR(e0.s_conditional, half_ln_pie, 1e-14);

    const auto e1 = differential_entropies(TmsvParams<double>(1.0), 0.0);
    EXPECT_NEAR(e1.s_conditional, 0.5 * std::log(M_PI * M_E / std::cosh(2.0)), 1e-12);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ur(0.0, 3.0), up(0.0, 2 * M_PI);
    for (int i = 0; i < 100; ++i) {
        const auto e = differential_entropies(TmsvParams<double>(ur(rng)), up(rng));
        EXPECT_LE(e.s_joint, 2 * e.s_marginal + 1e-12);
    }
}

TEST(Hermite, LowOrdersAndBound) {
    const double c = std::pow(M_PI, -0.25);
    for (const double x : {-1.5, 0.0, 0.7, 3.0}) {
        const auto h = hermite_functions(x, 2);
        const double g = c * std::exp(-x * x / 2);
        EXPECT_NEAR(h[0], g, 1e-15);
        EXPECT_NEAR(h[1], std::sqrt(2.0) * x * g, 1e-15);
        EXPECT_NEAR(h[2], (2 * x * x - 1) / std::sqrt(2.0) * g, 1e-15);
    }
    for (const double x : {0.0, 5.0, 10.0}) {
        const auto h = hermite_functions(x, 1000);
        for (const double v : h) {
            ASSERT_TRUE(std::isfinite(v));
            ASSERT_LE(std::fabs(v), c + 1e-12);
        }
    }
}

TEST(Hermite, Orthonormal) {
    auto inner = [](int m, int n) {
        return integrate([&](double x) { return hermite_functions(x, std::max(m, n))[m] *
                                                hermite_functions(x, std::max(m, n))[n]; },
                         -20.0, 20.0);
    };
    EXPECT_NEAR(inner(5, 5), 1.0, 1e-12);
    EXPECT_NEAR(inner(30, 30), 1.0, 1e-12);
    EXPECT_NEAR(inner(4, 7), 0.0, 1e-12);
}

TEST(FockAmplitude, VacuumHasOnlyGroundTerm) {
    const TmsvParams<double> s(0.0);
    const auto f = fock_amplitude(s, 0.4, -1.0, 0.8, -0.3, 0);
    EXPECT_NEAR(f.re, std::exp(-(0.64 + 0.09) / 2) / std::sqrt(M_PI), 1e-15);
    EXPECT_NEAR(f.im, 0.0, 1e-16);
}

TEST(FockAmplitude, SquaredModulusMatchesJointPdf) {
    // Double precision: restricted to points where the sum is not dominated
    // by cancellation. The full grid including r = 2 runs in MPFR in the
    // acceptance binary.
    int used = 0;
    for (const double r : {0.5, 1.0})
        for (const double ph : {0.0, 0.1, M_PI / 2, M_PI}) {
            const TmsvParams<double> s(r);
            const auto k = coefficients(s, ph);
            for (int i = 0; i < 10; ++i)
                for (int j = 0; j < 10; ++j) {
                    const double a = -4 + 8.0 * i / 9, b = -4 + 8.0 * j / 9;
                    const double pdf = joint_pdf(k, a, b);
                    if (pdf < 1e-6) continue;
                    const auto f = fock_amplitude(s, 1.0, ph - 1.0, a, b);
                    EXPECT_LT(rel(f.norm_sq(), pdf), 1e-8) << r << ' ' << ph << ' ' << a << ' ' << b;
                    ++used;
                }
        }
    EXPECT_GT(used, 200);
}

TEST(FockAmplitude, MatchesClosedForm) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ur(0.0, 1.2), ua(-3.0, 3.0), up(-M_PI, M_PI);
    for (int i = 0; i < 200; ++i) {
        const TmsvParams<double> s(ur(rng));
        const double th = up(rng), ph = up(rng), a = ua(rng), b = ua(rng);
        const auto f = fock_amplitude(s, th, ph, a, b);
        const auto c = closed_form_amplitude(s, th, ph, a, b);
        EXPECT_NEAR(f.re, c.re, 1e-8);
        EXPECT_NEAR(f.im, c.im, 1e-8);
    }
}

TEST(FockAmplitude, ReportsTruncationAndBadArguments) {
    EXPECT_THROW(fock_amplitude(TmsvParams<double>(2.0), 0.0, 0.0, 0.5, 0.5, 300), TruncationNotConverged);
    EXPECT_NO_THROW(fock_amplitude(TmsvParams<double>(2.0), 0.0, 0.0, 0.5, 0.5, 2000));
    EXPECT_THROW(fock_amplitude(TmsvParams<double>(1.0), 0.0, 0.0, 0.5, 0.5, -1), std::invalid_argument);
    EXPECT_THROW(fock_amplitude(TmsvParams<double>(5.5), 0.0, 0.0, 0.5, 0.5), std::invalid_argument);
}
