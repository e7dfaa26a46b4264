#include <gtest/gtest.h>

#include <tipscan/paths.hpp>
#include <tipscan/scenarios.hpp>

#include <cmath>

using namespace tipscan;

namespace {

const double kC = std::sqrt(std::sqrt(2.0) - 1.0);

double max_residual(const MapSystem& sys, const ParameterShift& sh, const Path& p) {
    double m = 0.0;
    for (const auto& smp : p.samples) m = std::max(m, (sys(smp.x, sh.value(smp.s)) - smp.x).norm());
    return m;
}

}  // namespace

TEST(Continuation, LogisticMatchesClosedForm) {
    const auto sys = systems::logistic();
    const auto sh = ParameterShift::tanh_shift(2.0, 0.9);
    const auto p = continue_path(sys, sh, 0.0, scalar_vec(0.5), -40, 40, 0.05);
    for (const auto& smp : p.samples) EXPECT_NEAR(smp.x(0), 1.0 - 1.0 / sh.value(smp.s)(0), 1e-10) << smp.s;
    ASSERT_TRUE(p.x_minus && p.x_plus);
    // Newton stops at residual 1e-12; |f' - 1| = 0.1 at lambda_- gives 1e-11 in x
    EXPECT_NEAR((*p.x_minus)(0), 1.0 - 1.0 / 1.1, 1e-10);
    EXPECT_NEAR((*p.x_plus)(0), 1.0 - 1.0 / 2.9, 1e-10);
    EXPECT_EQ(p.stability, Stability::Stable);
    EXPECT_EQ(classify_stability(p), Stability::Stable);
    // rho = |2 - Lambda(s)|
    for (const auto& smp : p.samples) EXPECT_NEAR(smp.rho, std::abs(2.0 - sh.value(smp.s)(0)), 1e-9);
}

TEST(Continuation, RtipThreeBranches) {
    const auto sys = systems::rtip();
    const auto sh = ParameterShift::tanh_shift(0.0, 1.0);
    const auto X = continue_path(sys, sh, 0.0, scalar_vec(kC), -40, 40, 0.05, "X");
    const auto Y = continue_path(sys, sh, 0.0, scalar_vec(0.0), -40, 40, 0.05, "Y");
    const auto Z = continue_path(sys, sh, 0.0, scalar_vec(-kC), -40, 40, 0.05, "Z");
    for (const auto& smp : X.samples) EXPECT_NEAR(smp.x(0), std::tanh(smp.s) + kC, 1e-10);
    // off-sample values carry the cubic Hermite error, O(ds^4)
    for (double s = -5; s <= 5; s += 0.37) {
        EXPECT_NEAR(X.at(s)(0), std::tanh(s) + kC, 1e-7);
        EXPECT_NEAR(Y.at(s)(0), std::tanh(s), 1e-7);
        EXPECT_NEAR(Z.at(s)(0), std::tanh(s) - kC, 1e-7);
    }
    EXPECT_EQ(X.stability, Stability::Stable);
    EXPECT_EQ(Y.stability, Stability::Unstable);
    EXPECT_EQ(Z.stability, Stability::Stable);
    EXPECT_NEAR(Y.samples.front().rho, 2.0, 1e-9);
    EXPECT_NEAR((*X.x_plus)(0), 1.0 + kC, 1e-12);
}

TEST(Continuation, IkedaLargestBranch) {
    const auto sc = builtin("ikeda");
    const auto p = continue_path(sc.map, sc.shift, sc.paths[0].s, sc.paths[0].x, -40, 40, 0.05);
    ASSERT_TRUE(p.x_minus);
    EXPECT_NEAR((*p.x_minus)(0), 2.9698, 5e-5);
    EXPECT_NEAR((*p.x_minus)(1), 5.0274, 5e-5);
    EXPECT_EQ(p.stability, Stability::Stable);
}

TEST(Continuation, IkedaMiddleBranchIsSaddle) {
    const auto sc = builtin("ikeda");
    const auto& seed = sc.paths[1];
    const auto p = continue_path(sc.map, sc.shift, seed.s, seed.x, seed.s_lo, seed.s_hi, 0.05, "Y");
    EXPECT_NE(p.stability, Stability::Stable);
    for (const auto& smp : p.samples) EXPECT_GT(smp.rho, 1.0);
}

TEST(Continuation, ResidualInvariant) {
    for (const auto& id : builtin_ids()) {
        const auto sc = builtin(id);
        for (const auto& seed : sc.paths) {
            const auto p = continue_path(sc.map, sc.shift, seed.s, seed.x, seed.s_lo, seed.s_hi, sc.ds, seed.id);
            EXPECT_LE(max_residual(sc.map, sc.shift, p), 1e-9) << id << "/" << seed.id;
            EXPECT_EQ(p.stability, seed.expected) << id << "/" << seed.id;
        }
    }
}

TEST(Continuation, GridRefinementStable) {
    for (const auto& id : {"logistic", "rtip1d", "ikeda"}) {
        const auto sc = builtin(id);
        const auto& seed = sc.paths[0];
        const auto coarse = continue_path(sc.map, sc.shift, seed.s, seed.x, seed.s_lo, seed.s_hi, 0.1);
        const auto fine = continue_path(sc.map, sc.shift, seed.s, seed.x, seed.s_lo, seed.s_hi, 0.05);
        for (const auto& smp : coarse.samples) EXPECT_LT((fine.at(smp.s) - smp.x).norm(), 1e-8) << id << " s=" << smp.s;
    }
}

TEST(Continuation, LimitConsistency) {
    for (const auto& id : builtin_ids()) {
        const auto sc = builtin(id);
        const auto& seed = sc.paths[0];
        const auto p = continue_path(sc.map, sc.shift, seed.s, seed.x, seed.s_lo, seed.s_hi, sc.ds);
        ASSERT_GE(p.s_hi(), 2 * sc.shift.saturation());
        ASSERT_TRUE(p.x_plus);
        EXPECT_LE((p.samples.back().x - *p.x_plus).norm(), 1e-6) << id;
    }
}

TEST(Continuation, ConsecutiveSamplesContinuous) {
    const auto sc = builtin("rtip1d");
    const auto p = continue_path(sc.map, sc.shift, 0.0, scalar_vec(kC), -40, 40, 0.05);
    for (std::size_t i = 1; i < p.samples.size(); ++i) {
        const double ds = p.samples[i].s - p.samples[i - 1].s;
        const double slope = std::max(p.samples[i].tangent.norm(), p.samples[i - 1].tangent.norm());
        EXPECT_LE((p.samples[i].x - p.samples[i - 1].x).norm(), 10 * ds * slope + 1e-9);
    }
}

TEST(Continuation, FoldIsReported) {
    // x + x^2 + lambda has fixed points only for lambda <= 0
    MapSystem fold;
    fold.name = "fold";
    fold.evaluator = [](const Vec& x, const Vec& l) { return scalar_vec(x(0) + x(0) * x(0) + l(0)); };
    const auto sh = ParameterShift::tanh_shift(0.0, 1.0);
    EXPECT_THROW(continue_path(fold, sh, -20, scalar_vec(-1.0), -20, 20, 0.05), NumericalError);
}

TEST(Continuation, BadSeedRejected) {
    EXPECT_THROW(continue_path(systems::logistic(), ParameterShift::tanh_shift(2.0, 0.9), 0.0, scalar_vec(0.5), -1, 1,
                               0.0),
                 Error);
}

TEST(Classify, MixedWhenLimitsDisagree) {
    Path p;
    p.samples = {{0.0, scalar_vec(0.0), 0.5, scalar_vec(0.0)}, {1.0, scalar_vec(0.0), 1.5, scalar_vec(0.0)}};
    EXPECT_EQ(classify_stability(p), Stability::Mixed);
    p.samples[1].rho = 0.9;
    p.rho_plus = 1.2;
    EXPECT_EQ(classify_stability(p), Stability::Mixed);
    p.rho_plus = 0.3;
    EXPECT_EQ(classify_stability(p), Stability::Stable);
}

TEST(FixedPoints, IkedaNormOrderAndStability) {
    const auto sys = systems::ikeda();
    const auto fps = find_fixed_points(sys, scalar_vec(0.5), -8, 8, 41);
    ASSERT_EQ(fps.size(), 3u);
    EXPECT_GT(fps[0].x.norm(), fps[1].x.norm());
    EXPECT_GT(fps[1].x.norm(), fps[2].x.norm());
    EXPECT_TRUE(fps[0].stable());
    EXPECT_FALSE(fps[1].stable());
    EXPECT_TRUE(fps[2].stable());
    // the saddle: one eigenvalue inside, one outside the unit circle
    const auto ev = eigenvalues(jacobian_at(sys, fps[1].x, scalar_vec(0.5)));
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_LT(std::min(std::abs(ev[0]), std::abs(ev[1])), 1.0);
    EXPECT_GT(std::max(std::abs(ev[0]), std::abs(ev[1])), 1.0);
}
