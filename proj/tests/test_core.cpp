#include <gtest/gtest.h>

#include <tipscan/scenarios.hpp>
#include <tipscan/system.hpp>

#include <cmath>
#include <random>

using namespace tipscan;

namespace {

// Probe-point Jacobian comparison: relative error in the max norm.
double rel_jac_error(const MapSystem& sys, const Vec& x, const Vec& l) {
    MapSystem fd = sys;
    fd.jacobian = nullptr;
    const Mat a = jacobian_at(sys, x, l), b = jacobian_at(fd, x, l);
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Linalg, SpectralRadiusSmallCases) {
    Mat a(1, 1);
    a << 0.5;
    EXPECT_DOUBLE_EQ(spectral_radius(a), 0.5);
    Mat rot(2, 2);
    rot << 0, -1, 1, 0;
    EXPECT_NEAR(spectral_radius(rot), 1.0, 1e-12);
    Mat diag = Mat::Zero(3, 3);
    diag.diagonal() << 0.2, -3.0, 1.5;
    EXPECT_NEAR(spectral_radius(diag), 3.0, 1e-12);
}

TEST(Linalg, SpectralRadiusAgainstEigenSolver) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int k = 0; k < 200; ++k) {
        const int n = 1 + k % 3;
        Mat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = u(rng);
        const Eigen::MatrixXd D = A;
        const double ref = Eigen::EigenSolver<Eigen::MatrixXd>(D).eigenvalues().cwiseAbs().maxCoeff();
        EXPECT_NEAR(spectral_radius(A), ref, 1e-9 * std::max(1.0, ref)) << A;
    }
}

TEST(Linalg, SpectralRadiusScalesWithScalar) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 200; ++k) {
        Mat A(2, 2);
        A << u(rng), u(rng), u(rng), u(rng);
        const double c = u(rng);
        EXPECT_NEAR(spectral_radius(Mat(c * A)), std::abs(c) * spectral_radius(A), 1e-12);
    }
}

TEST(Linalg, RejectsLargeMatrices) {
    EXPECT_THROW(spectral_radius(Mat::Identity(4, 4)), UnsupportedDimension);
}

TEST(Linalg, MaxRealPart) {
    Mat A(2, 2);
    A << -1, 5, 0, -2;
    EXPECT_NEAR(max_real_part(A), -1.0, 1e-12);
}

TEST(Shift, ClampsExactlyToLimits) {
    for (const auto& sh : {ParameterShift::tanh_shift(2.0, 0.9), ParameterShift::sech_power(3.0, 10),
                           ParameterShift::sech_tanh(1.0, 0.4), ParameterShift::tanh_shift(2.5, -2.0)}) {
        EXPECT_EQ(sh.value(-sh.saturation()), sh.limit_minus());
        EXPECT_EQ(sh.value(sh.saturation() + 3.0), sh.limit_plus());
        EXPECT_EQ(sh.derivative(sh.saturation() * 1.5)(0), 0.0);
        for (double f = 2.0; f <= 6.0; f += 0.5) {
            EXPECT_LT((sh.value(-f * sh.saturation()) - sh.limit_minus()).norm(), 1e-8);
            EXPECT_LT((sh.value(f * sh.saturation()) - sh.limit_plus()).norm(), 1e-8);
        }
        // raw formula is continuous with the clamp at the saturation edge
        EXPECT_LT((sh.raw(sh.saturation() * 0.999999) - sh.limit_plus()).norm(), 1e-8);
        EXPECT_LT((sh.raw(-sh.saturation() * 0.999999) - sh.limit_minus()).norm(), 1e-8);
    }
}

TEST(Shift, SechPowerNeverOverflows) {
    const auto sh = ParameterShift::sech_power(3.0, 10);
    for (double s = -19.9; s < 20; s += 0.1) EXPECT_TRUE(std::isfinite(sh.value(s)(0)));
    EXPECT_DOUBLE_EQ(sh.value(0.0)(0), 3.0);
    EXPECT_THROW(ParameterShift::sech_power(1.0, 3), Error);
}

TEST(Shift, DerivativeMatchesClosedForm) {
    const auto sh = ParameterShift::tanh_shift(2.0, 0.9);
    for (double s = -3; s <= 3; s += 0.25) {
        const double ch = std::cosh(s);
        EXPECT_NEAR(sh.derivative(s)(0), 0.9 / (ch * ch), 1e-8);
    }
}

TEST(RateConfig, Validates) {
    EXPECT_NO_THROW((RateConfig{0.5, -10, 10}.validate()));
    EXPECT_THROW((RateConfig{0.0, -10, 10}.validate()), Error);
    EXPECT_THROW((RateConfig{0.5, 0, 10}.validate()), Error);
}

TEST(Step, LogisticZeroIsFixedAtSaturatedIndex) {
    const auto sys = systems::logistic();
    const auto sh = ParameterShift::tanh_shift(2.0, 0.9);
    EXPECT_EQ(step(sys, sh, 0.5, 100, scalar_vec(0.0))(0), 0.0);
}

TEST(Step, FbsConstructedPoints) {
    const auto sys = systems::fbs();
    const auto sh = ParameterShift::sech_power(3.0, 10);
    EXPECT_EQ(step(sys, sh, 2.0, 0, scalar_vec(0.0))(0), 6.0);
    EXPECT_EQ(step(sys, sh, 2.0, 15, scalar_vec(6.0))(0), 7.5);
}

TEST(Step, OverflowCarriesIndex) {
    MapSystem blow = systems::logistic();
    blow.evaluator = [](const Vec& x, const Vec&) { return scalar_vec(x(0) * 1e300 * 1e300); };
    try {
        step(blow, ParameterShift::constant(scalar_vec(1.0)), 1.0, -7, scalar_vec(1.0));
        FAIL() << "expected overflow";
    } catch (const NumericalOverflow& e) {
        EXPECT_EQ(e.index(), -7);
    }
}

TEST(Jacobian, LogisticVertex) {
    const auto J = jacobian_at(systems::logistic(), scalar_vec(0.5), scalar_vec(2.0));
    EXPECT_EQ(J(0, 0), 0.0);
}

TEST(Jacobian, RtipValues) {
    const auto sys = systems::rtip();
    EXPECT_DOUBLE_EQ(jacobian_at(sys, scalar_vec(0.3), scalar_vec(0.3))(0, 0), 2.0);
    // 2(1 - 3u^2)/(1 + u^2)^3 at u = 1
    EXPECT_DOUBLE_EQ(jacobian_at(sys, scalar_vec(1.25), scalar_vec(0.25))(0, 0), -0.5);
}

TEST(Jacobian, IkedaMatchesSymbolicOracle) {
    // symbolic differentiation, R = 0.9, phi = 1, p = 6 (a does not enter)
    struct Probe {
        double x, y;
        double j[4];
    };
    const Probe probes[] = {
        {0.3, -0.7, {-1.5711181100360456, 1.9926978323681652, -0.97667380434337359, 0.72318927876131633}},
        {2.96977068, 5.02741115, {0.46256059594265414, -0.90981060191218444, 0.61927261281453994, 0.53307439836064630}},
        {1.0, 1.0, {0.84767449000903394, 1.1187263010548150, 0.90080406248413647, 2.1444000240925694}},
    };
    const auto sys = systems::ikeda();
    for (const auto& p : probes) {
        const Mat J = jacobian_at(sys, vec({p.x, p.y}), scalar_vec(0.5));
        EXPECT_NEAR(J(0, 0), p.j[0], 1e-12);
        EXPECT_NEAR(J(0, 1), p.j[1], 1e-12);
        EXPECT_NEAR(J(1, 0), p.j[2], 1e-12);
        EXPECT_NEAR(J(1, 1), p.j[3], 1e-12);
    }
}

TEST(Jacobian, AnalyticAgreesWithFiniteDifferences) {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-3, 3), lam(0.0, 4.0);
    for (const auto& sys : {systems::logistic(), systems::rtip(), systems::fbs(), systems::ikeda()}) {
        ASSERT_TRUE(sys.has_jacobian());
        for (int k = 0; k < 100; ++k) {
            Vec x(sys.dimension);
            for (int i = 0; i < sys.dimension; ++i) x(i) = u(rng);
            EXPECT_LE(rel_jac_error(sys, x, scalar_vec(lam(rng))), 1e-5) << sys.name << " at " << x.transpose();
        }
    }
}

TEST(Jacobian, FiniteDifferenceStepFormula) {
    EXPECT_DOUBLE_EQ(detail::fd_step(0.1), std::sqrt(std::numeric_limits<double>::epsilon()));
    EXPECT_DOUBLE_EQ(detail::fd_step(-100.0), 100.0 * std::sqrt(std::numeric_limits<double>::epsilon()));
}

TEST(Evaluator, Deterministic) {
    const auto sys = systems::ikeda();
    const Vec x = vec({0.123, -4.56});
    const Vec a = sys(x, scalar_vec(1.7)), b = sys(x, scalar_vec(1.7));
    EXPECT_EQ(a(0), b(0));
    EXPECT_EQ(a(1), b(1));
}
