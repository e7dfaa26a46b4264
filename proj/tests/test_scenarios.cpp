#include <gtest/gtest.h>

#include <tipscan/scenarios.hpp>

#include <cmath>

using namespace tipscan;

TEST(Builtin, UnknownId) { EXPECT_THROW(builtin("henon"), UnknownScenario); }

TEST(Builtin, AllPopulated) {
    for (const auto& id : builtin_ids()) {
        const auto sc = builtin(id);
        EXPECT_EQ(sc.id, id);
        EXPECT_FALSE(sc.paths.empty());
        EXPECT_FALSE(sc.plus_points.empty());
        EXPECT_FALSE(sc.r_grid.empty());
        EXPECT_TRUE(std::is_sorted(sc.r_grid.begin(), sc.r_grid.end()));
        for (const auto& g : sc.golden) {
            if (const auto* v = std::get_if<GoldenValue>(&g.check)) {
                EXPECT_GT(v->tol, 0.0) << g.name;
            }
        }
    }
}

TEST(Builtin, IkedaParameters) {
    const auto sc = builtin("ikeda");
    EXPECT_DOUBLE_EQ(sc.shift.limit_minus()(0), 4.5);
    EXPECT_DOUBLE_EQ(sc.shift.limit_plus()(0), 0.5);
    // R = 0.9, phi = 1, p = 6: at z = 0 the map is z -> a
    const Vec z = sc.map(vec({0.0, 0.0}), scalar_vec(0.5));
    EXPECT_DOUBLE_EQ(z(0), 0.5);
    EXPECT_DOUBLE_EQ(z(1), 0.0);
    // |f(z) - a| = R |z|
    const Vec w = vec({1.3, -0.4});
    EXPECT_NEAR((sc.map(w, scalar_vec(0.0))).norm(), 0.9 * w.norm(), 1e-14);
    // theta at |z|^2 = 2 is 1 - 6/3 = -1
    const Vec u = sc.map(vec({1.0, 1.0}), scalar_vec(0.0));
    EXPECT_NEAR(u(0), 0.9 * (std::cos(-1.0) - std::sin(-1.0)), 1e-14);
    EXPECT_NEAR(u(1), 0.9 * (std::sin(-1.0) + std::cos(-1.0)), 1e-14);
}

TEST(Builtin, IkedaFixedPointPattern) {
    const auto pr = prepare(builtin("ikeda"));
    ASSERT_EQ(pr.plus_points.size(), 3u);
    EXPECT_EQ(pr.plus_points[0].first, "X+");
    EXPECT_EQ(pr.plus_points[1].first, "Y+");
    EXPECT_EQ(pr.plus_points[2].first, "Z+");
    EXPECT_GT(pr.plus_points[0].second.x.norm(), pr.plus_points[1].second.x.norm());
    EXPECT_GT(pr.plus_points[1].second.x.norm(), pr.plus_points[2].second.x.norm());
    EXPECT_TRUE(pr.plus_points[0].second.stable());
    EXPECT_FALSE(pr.plus_points[1].second.stable());
    EXPECT_TRUE(pr.plus_points[2].second.stable());
    ASSERT_EQ(pr.attractors.size(), 2u);
}

TEST(Builtin, RtipLimits) {
    const auto pr = prepare(builtin("rtip1d"));
    const double c = std::sqrt(-1.0 + std::sqrt(2.0));
    EXPECT_NEAR((*pr.path("X")->x_plus)(0), 1 + c, 1e-12);
    EXPECT_NEAR((*pr.path("Y")->x_plus)(0), 1.0, 1e-12);
    EXPECT_NEAR((*pr.path("Z")->x_plus)(0), 1 - c, 1e-12);
}

TEST(Builtin, LogisticFixedPointFormula) {
    const auto sc = builtin("logistic");
    for (double l = 1.05; l < 3.0; l += 0.1) {
        auto x = solve_fixed_point(sc.map, scalar_vec(l), scalar_vec(0.5));
        ASSERT_TRUE(x);
        EXPECT_NEAR((*x)(0), 1 - 1 / l, 1e-12);
        EXPECT_LT(spectral_radius(jacobian_at(sc.map, *x, scalar_vec(l))), 1.0);
    }
}

TEST(Golden, EveryBuiltinPasses) {
    for (const auto& id : builtin_ids()) {
        const auto sc = builtin(id);
        const auto pr = prepare(sc);
        for (const auto& res : check_golden(sc, pr)) EXPECT_TRUE(res.pass) << id << ": " << res.name << " " << res.detail;
    }
}

TEST(Reparametrization, EndpointsAndSlopes) {
    const Reparametrization rho{-3.25, 0.7, 0.4};
    EXPECT_EQ(rho(0.0), rho.u);
    EXPECT_EQ(rho(rho.r), rho.v);
    EXPECT_EQ(rho(-5.0), -5.0 + rho.u);
    EXPECT_NEAR(rho(5.0), 5.0 + rho.v - rho.r, 1e-14);
    // one-sided differences carry h rho''/2 with rho'' = 6 ((v - u) / r - 1) / r at the bridge ends
    const double h = 1e-9;
    EXPECT_NEAR((rho(h) - rho(0.0)) / h, 1.0, 1e-6);
    EXPECT_NEAR((rho(rho.r) - rho(rho.r - h)) / h, 1.0, 1e-6);
    EXPECT_NEAR(rho.slope(1e-12), 1.0, 1e-9);
    EXPECT_NEAR(rho.slope(rho.r - 1e-12), 1.0, 1e-9);
}

TEST(Reparametrization, MonotoneOnBridge) {
    for (double u : {-20.0, -1.0, 0.0})
        for (double gap : {0.2, 1.0, 20.0})
            for (double frac : {0.01, 0.5, 0.99}) {
                const Reparametrization rho{u, u + gap, frac * gap};
                double prev = rho(0.0);
                for (int k = 1; k <= 1000; ++k) {
                    const double s = rho.r * k / 1000.0;
                    EXPECT_GT(rho.slope(s), 0.0);
                    const double now = rho(s);
                    EXPECT_GT(now, prev);
                    prev = now;
                }
                // analytic slope matches finite differences
                for (double t : {0.1, 0.5, 0.8}) {
                    const double s = t * rho.r, h = 1e-6 * rho.r;
                    EXPECT_NEAR((rho(s + h) - rho(s - h)) / (2 * h), rho.slope(s), 1e-5 * std::max(1.0, rho.slope(s)));
                }
            }
}

TEST(TippingShift, LimitsPreservedAndWindowChecked) {
    const auto sh = ParameterShift::tanh_shift(0.0, 1.0);
    const auto t = construct_tipping_shift(sh, -20.0, 0.0, 0.1);
    EXPECT_EQ(t.limit_minus(), sh.limit_minus());
    EXPECT_EQ(t.limit_plus(), sh.limit_plus());
    EXPECT_EQ(t.value(0.0), sh.value(-20.0));
    EXPECT_EQ(t.value(0.1), sh.value(0.0));
    EXPECT_LT((t.raw(t.saturation() - 1e-9) - sh.limit_plus()).norm(), 1e-8);
    EXPECT_LT((t.raw(-t.saturation() + 1e-9) - sh.limit_minus()).norm(), 1e-8);
    EXPECT_THROW(construct_tipping_shift(sh, 0.0, 1.0, 1.0), InvalidWindow);
    EXPECT_THROW(construct_tipping_shift(sh, 0.0, 1.0, 2.0), InvalidWindow);
    EXPECT_THROW(construct_tipping_shift(sh, 1.0, 0.0, 0.1), InvalidWindow);
}

TEST(TippingShift, RtipWindowForcesTipping) {
    const auto sc = builtin("rtip1d");
    const auto pr = prepare(sc);
    std::vector<double> grid;
    for (double s = -20; s <= 20 + 1e-12; s += 0.5) grid.push_back(s);
    const auto win = find_tipping_window(sc.map, sc.shift, pr.tracked, pr.others, grid);
    ASSERT_TRUE(win);
    const auto [u, v] = *win;
    EXPECT_LT(u, v);
    int tipped = 0;
    for (double r : {0.05, 0.1, 0.2}) {
        if (!(r < v - u)) continue;
        const auto sh = construct_tipping_shift(sc.shift, u, v, r);
        const auto p = tipping_path(sc.map, sh, pr.tracked, u, v, r);
        const auto verdict = verdict_at(sc.map, sh, p, r, pr.attractors);
        tipped += verdict.kind == VerdictKind::TipsTo && verdict.attractor_id == "Z+";
    }
    EXPECT_GE(tipped, 1);
}

TEST(TippingShift, NoWindowWhenFbsHolds) {
    const auto sc = builtin("fbs1d");
    const auto pr = prepare(sc);
    EXPECT_FALSE(find_tipping_window(sc.map, sc.shift, pr.tracked, pr.others, {-2, -1, -0.5, 0, 0.5, 1, 2}));
}

TEST(TippingShift, PathFollowsReparametrizedBranch) {
    const auto sc = builtin("rtip1d");
    const auto pr = prepare(sc);
    const double u = -20.0, v = 0.0, r = 0.05;
    const auto sh = construct_tipping_shift(sc.shift, u, v, r);
    const auto p = tipping_path(sc.map, sh, pr.tracked, u, v, r);
    const Reparametrization rho{u, v, r};
    EXPECT_EQ(p.stability, Stability::Stable);
    EXPECT_NEAR((*p.x_plus)(0), (*pr.tracked.x_plus)(0), 1e-14);
    for (const auto& smp : p.samples) {
        EXPECT_LT((sc.map(smp.x, sh.value(smp.s)) - smp.x).norm(), 1e-11) << smp.s;
        EXPECT_NEAR(smp.x(0), pr.tracked.at(rho(smp.s))(0), 1e-6) << smp.s;
    }
    EXPECT_THROW(tipping_path(sc.map, sh, pr.tracked, u, v, r, 0.0), Error);
}
