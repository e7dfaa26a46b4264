#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "basins.hpp"
#include "errors.hpp"
#include "flow.hpp"
#include "linalg.hpp"
#include "paths.hpp"
#include "pullback.hpp"
#include "system.hpp"

namespace tipscan {

// ---------------------------------------------------------------------------
// Built-in functional families
// ---------------------------------------------------------------------------
namespace systems {

/// f(x, l) = l x (1 - x)
inline MapSystem logistic() {
    MapSystem m;
    m.name = "logistic";
    m.evaluator = [](const Vec& x, const Vec& l) { return scalar_vec(l(0) * x(0) * (1.0 - x(0))); };
    m.jacobian = [](const Vec& x, const Vec& l) {
        Mat J(1, 1);
        J(0, 0) = l(0) * (1.0 - 2.0 * x(0));
        return J;
    };
    return m;
}

/// f(x, l) = amp (x - l) / (1 + (x - l)^2)^2 + l
inline MapSystem rtip(double amp = 2.0) {
    MapSystem m;
    m.name = "rtip";
    m.evaluator = [amp](const Vec& x, const Vec& l) {
        const double u = x(0) - l(0), q = 1.0 + u * u;
        return scalar_vec(amp * u / (q * q) + l(0));
    };
    m.jacobian = [amp](const Vec& x, const Vec& l) {
        const double u = x(0) - l(0), q = 1.0 + u * u;
        Mat J(1, 1);
        J(0, 0) = amp * (1.0 - 3.0 * u * u) / (q * q * q);
        return J;
    };
    return m;
}

/// f(x, l) = c ((x - l)^2 - (x - l)) + l
inline MapSystem fbs(double c = 0.25) {
    MapSystem m;
    m.name = "fbs";
    m.evaluator = [c](const Vec& x, const Vec& l) {
        const double u = x(0) - l(0);
        return scalar_vec(c * (u * u - u) + l(0));
    };
    m.jacobian = [c](const Vec& x, const Vec& l) {
        Mat J(1, 1);
        J(0, 0) = c * (2.0 * (x(0) - l(0)) - 1.0);
        return J;
    };
    return m;
}

/// Real form of z -> a + R exp(i (phi - p / (1 + |z|^2))) z, parameter a.
inline MapSystem ikeda(double R = 0.9, double phi = 1.0, double p = 6.0) {
    MapSystem m;
    m.name = "ikeda";
    m.dimension = 2;
    m.evaluator = [=](const Vec& v, const Vec& a) {
        const double x = v(0), y = v(1);
        const double th = phi - p / (1.0 + x * x + y * y);
        const double c = std::cos(th), s = std::sin(th);
        return vec({a(0) + R * (x * c - y * s), R * (x * s + y * c)});
    };
    m.jacobian = [=](const Vec& v, const Vec&) {
        const double x = v(0), y = v(1);
        const double q = 1.0 + x * x + y * y;
        const double th = phi - p / q;
        const double c = std::cos(th), s = std::sin(th);
        const double thx = 2.0 * p * x / (q * q), thy = 2.0 * p * y / (q * q);
        const double u = x * c - y * s;  // d/dth of (x s + y c)
        const double w = -x * s - y * c; // d/dth of (x c - y s)
        Mat J(2, 2);
        J(0, 0) = R * (c + w * thx);
        J(0, 1) = R * (-s + w * thy);
        J(1, 0) = R * (s + u * thx);
        J(1, 1) = R * (c + u * thy);
        return J;
    };
    return m;
}

}  // namespace systems

namespace flows {

/// dx/dt = -(x - l - r1)(x - l - r2)(x - l - r3)
inline VectorField cubic(double r1 = 0.0, double r2 = 1.0, double r3 = 2.0) {
    VectorField vf;
    vf.name = "cubicflow";
    vf.evaluator = [=](const Vec& x, const Vec& l) {
        const double u = x(0) - l(0);
        return scalar_vec(-(u - r1) * (u - r2) * (u - r3));
    };
    vf.jacobian = [=](const Vec& x, const Vec& l) {
        const double u = x(0) - l(0);
        Mat J(1, 1);
        J(0, 0) = -((u - r2) * (u - r3) + (u - r1) * (u - r3) + (u - r1) * (u - r2));
        return J;
    };
    return vf;
}

}  // namespace flows

// ---------------------------------------------------------------------------
// Reparametrized shifts that force tipping
// ---------------------------------------------------------------------------

/// rho(s) = s + u for s <= 0, s + v - r for s >= r, cubic Hermite with unit end slopes between.
struct Reparametrization {
    double u = 0, v = 1, r = 0.5;

    double operator()(double s) const {
        if (s <= 0.0) return u + s;
        if (s >= r) return v + (s - r);
        const double t = s / r, t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * u + (t3 - 2 * t2 + t) * r + (-2 * t3 + 3 * t2) * v + (t3 - t2) * r;
    }

    /// 1 + 6 t (1 - t) ((v - u) / r - 1) on the bridge, 1 outside.
    double slope(double s) const {
        if (s <= 0.0 || s >= r) return 1.0;
        const double t = s / r;
        return 1.0 + 6.0 * t * (1.0 - t) * ((v - u) / r - 1.0);
    }
};

/// Lambda o rho, jumping from Lambda(u) to Lambda(v) within one rate step.
inline ParameterShift construct_tipping_shift(const ParameterShift& shift, double u, double v, double r) {
    if (!(u < v)) throw InvalidWindow("tipping window requires u < v");
    if (!(r > 0.0 && r < v - u)) throw InvalidWindow("tipping window requires 0 < r < v - u");
    const Reparametrization rho{u, v, r};
    // minimum bridge slope, at the midpoint
    if (!(rho.slope(0.5 * r) > 0.0)) throw InvalidWindow("bridge would not be monotone");
    const double sat = shift.saturation() + std::max(std::abs(u), std::abs(v - r));
    return ParameterShift(
        shift.name() + "@reparam", [shift, rho](double s) { return shift.value(rho(s)); }, shift.limit_minus(),
        shift.limit_plus(), sat);
}

/// The branch s -> X(rho(s)) for the shift built by construct_tipping_shift. Continuation across
/// the bridge can jump branches when the bridge is narrower than ds, so X o rho is sampled directly,
/// Newton-polished, with extra samples on the bridge.
inline Path tipping_path(const MapSystem& sys, const ParameterShift& tipping_shift, const Path& path, double u,
                         double v, double r, double ds = 0.05, const ContinuationOptions& opt = {}) {
    if (!(ds > 0.0)) throw Error("tipping_path: ds must be positive");
    const Reparametrization rho{u, v, r};
    const detail::ZeroProblem zp{sys, path.kind};
    const double sat = tipping_shift.saturation();
    std::vector<double> grid;
    for (long k = static_cast<long>(std::floor(-sat / ds)); k * ds < 0.0; ++k) grid.push_back(k * ds);
    for (int k = 0; k < 32; ++k) grid.push_back(r * k / 32.0);
    for (long k = 0; r + k * ds <= sat + ds; ++k) grid.push_back(r + k * ds);

    Path out;
    out.id = path.id;
    out.kind = path.kind;
    out.x_minus = path.x_minus;
    out.x_plus = path.x_plus;
    out.rho_minus = path.rho_minus;
    out.rho_plus = path.rho_plus;
    out.ds = ds;
    out.saturation = sat;
    for (double s : grid) {
        const Vec lambda = tipping_shift.value(s);
        const auto x = zp.solve(lambda, path.at(rho(s)), opt);
        if (!x) throw NewtonDivergence(s, "tipping_path");
        out.samples.push_back({s, *x, zp.indicator(*x, lambda), zp.tangent(tipping_shift, s, *x)});
    }
    out.stability = detail::classify(out);
    return out;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

struct PathSeed {
    std::string id;
    double s = 0.0;
    Vec x;
    Stability expected = Stability::Stable;
    double s_lo = -40.0;
    double s_hi = 40.0;
};

/// Named fixed point of the frozen map at lambda_+ (seed for Newton).
struct LimitSeed {
    std::string id;
    Vec x;
};

enum class Source { Literature, Computed, ClosedForm };

inline const char* to_string(Source s) {
    switch (s) {
        case Source::Literature: return "literature";
        case Source::Computed: return "computed";
        case Source::ClosedForm: return "closed-form";
    }
    return "?";
}

struct Scenario;
struct Prepared;

struct GoldenValue {
    std::function<Vec(const Scenario&, const Prepared&)> measure;
    Vec expected;
    double tol = 0.0;
};

struct GoldenVerdict {
    double r = 0.0;
    VerdictKind kind = VerdictKind::Tracks;
    std::string attractor;
};

struct Golden {
    std::string name;
    Source source = Source::Computed;
    std::variant<GoldenValue, GoldenVerdict> check;
};

struct Scenario {
    std::string id;
    std::string description;
    MapSystem map;
    std::optional<VectorField> flow;
    ParameterShift shift;
    std::vector<PathSeed> paths;  // paths[0] is the tracked path
    std::vector<LimitSeed> plus_points;
    std::vector<double> r_grid;
    double ds = 0.05;
    IntegratorSpec integrator;
    std::optional<InflowingFamily> inflowing;
    std::vector<Golden> golden;
};

/// Continued paths and named end-state attractors of a scenario.
struct Prepared {
    Path tracked;
    std::vector<Path> others;
    std::optional<Path> flow_path;
    std::vector<Attractor> attractors;  // stable fixed points at lambda_+
    std::vector<std::pair<std::string, FixedPoint>> plus_points;

    const Path* path(const std::string& id) const {
        if (tracked.id == id) return &tracked;
        for (const auto& p : others)
            if (p.id == id) return &p;
        return nullptr;
    }
};

inline Prepared prepare(const Scenario& sc, const ContinuationOptions& opt = {}) {
    if (sc.paths.empty()) throw ScenarioError("scenario " + sc.id + " has no path seeds");
    Prepared pr;
    bool first = true;
    for (const auto& seed : sc.paths) {
        Path p = continue_path(sc.map, sc.shift, seed.s, seed.x, seed.s_lo, seed.s_hi, sc.ds, seed.id, opt);
        if (first)
            pr.tracked = std::move(p);
        else
            pr.others.push_back(std::move(p));
        first = false;
    }
    if (sc.flow) {
        const auto& seed = sc.paths.front();
        pr.flow_path = continue_flow_path(*sc.flow, sc.shift, seed.s, seed.x, seed.s_lo, seed.s_hi, sc.ds, seed.id, opt);
    }
    for (const auto& ls : sc.plus_points) {
        auto x = solve_fixed_point(sc.map, sc.shift.limit_plus(), ls.x, opt);
        if (!x) throw ScenarioError("no fixed point near seed " + ls.id + " at lambda_+");
        FixedPoint fp{*x, spectral_radius(jacobian_at(sc.map, *x, sc.shift.limit_plus()))};
        if (fp.stable()) pr.attractors.push_back({ls.id, fp.x});
        pr.plus_points.emplace_back(ls.id, fp);
    }
    return pr;
}

struct GoldenResult {
    std::string name;
    Source source;
    bool pass = false;
    std::string detail;
};

inline std::vector<GoldenResult> check_golden(const Scenario& sc, const Prepared& pr,
                                              const PullbackOptions& popt = {}, const TrackingOptions& topt = {}) {
    std::vector<GoldenResult> out;
    for (const auto& g : sc.golden) {
        GoldenResult res{g.name, g.source, false, {}};
        try {
            if (const auto* gv = std::get_if<GoldenValue>(&g.check)) {
                const Vec got = gv->measure(sc, pr);
                const double err = (got - gv->expected).norm();
                res.pass = got.size() == gv->expected.size() && err <= gv->tol;
                std::ostringstream os;
                os << "error " << err << " (tol " << gv->tol << ")";
                res.detail = os.str();
            } else {
                const auto& gd = std::get<GoldenVerdict>(g.check);
                const auto v = verdict_at(sc.map, sc.shift, pr.tracked, gd.r, pr.attractors, popt, topt);
                res.pass = v.kind == gd.kind && v.attractor_id == gd.attractor;
                res.detail = std::string("got ") + to_string(v.kind) + " " + v.attractor_id;
            }
        } catch (const Error& e) {
            res.detail = e.what();
        }
        out.push_back(res);
    }
    return out;
}

namespace detail {

inline Golden verdict_golden(std::string name, Source src, double r, VerdictKind k, std::string att = {}) {
    return {std::move(name), src, GoldenVerdict{r, k, std::move(att)}};
}

inline Golden limit_golden(std::string name, Source src, std::string path_id, bool plus, Vec expected, double tol) {
    return {std::move(name), src,
            GoldenValue{[path_id, plus](const Scenario&, const Prepared& pr) {
                            const Path* p = pr.path(path_id);
                            if (!p) throw ScenarioError("no path " + path_id);
                            const auto& lim = plus ? p->x_plus : p->x_minus;
                            if (!lim) throw ScenarioError("path " + path_id + " has no limit");
                            return *lim;
                        },
                        std::move(expected), tol}};
}

inline Scenario logistic_scenario() {
    Scenario sc;
    sc.id = "logistic";
    sc.description = "logistic map l x (1 - x) with Lambda(s) = 2 + 0.9 tanh(s)";
    sc.map = systems::logistic();
    sc.shift = ParameterShift::tanh_shift(2.0, 0.9);
    sc.paths = {{"X", 0.0, scalar_vec(0.5), Stability::Stable}};
    sc.plus_points = {{"X+", scalar_vec(0.65)}};
    sc.r_grid = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};

    const double lo = (1.0 - 1.0 / 1.1) - 0.05;
    auto hi = [shift = sc.shift](double s) {
        const double l = shift.value(s)(0);
        return std::max(1.0 - 1.0 / l + 0.05, l / 4.0 + 0.01);
    };
    InflowingFamily fam;
    fam.center = [lo, hi](double s) { return scalar_vec(0.5 * (lo + hi(s))); };
    fam.radius = [lo, hi](double s) { return 0.5 * (hi(s) - lo); };
    for (int k = -400; k <= 400; ++k) fam.s_grid.push_back(0.1 * k);
    sc.inflowing = fam;

    sc.golden = {
        limit_golden("X_- = 1 - 1/1.1", Source::ClosedForm, "X", false, scalar_vec(1.0 - 1.0 / 1.1), 1e-10),
        limit_golden("X_+ = 1 - 1/2.9", Source::ClosedForm, "X", true, scalar_vec(1.0 - 1.0 / 2.9), 1e-10),
        verdict_golden("tracks at r=0.05", Source::Computed, 0.05, VerdictKind::Tracks),
        verdict_golden("tracks at r=5", Source::Computed, 5.0, VerdictKind::Tracks),
    };
    return sc;
}

inline Scenario rtip_scenario() {
    const double c = std::sqrt(std::sqrt(2.0) - 1.0);
    Scenario sc;
    sc.id = "rtip1d";
    sc.description = "2(x-l)/(1+(x-l)^2)^2 + l with Lambda(s) = tanh(s)";
    sc.map = systems::rtip();
    sc.shift = ParameterShift::tanh_shift(0.0, 1.0);
    sc.paths = {{"X", 0.0, scalar_vec(c), Stability::Stable},
                {"Y", 0.0, scalar_vec(0.0), Stability::Unstable},
                {"Z", 0.0, scalar_vec(-c), Stability::Stable}};
    sc.plus_points = {{"X+", scalar_vec(1.0 + c)}, {"Y+", scalar_vec(1.0)}, {"Z+", scalar_vec(1.0 - c)}};
    for (int k = 2; k <= 12; ++k) sc.r_grid.push_back(0.05 * k);
    sc.golden = {
        limit_golden("X_+ = 1 + sqrt(sqrt2 - 1)", Source::Literature, "X", true, scalar_vec(1.0 + c), 1e-10),
        limit_golden("Z_+ = 1 - sqrt(sqrt2 - 1)", Source::Literature, "Z", true, scalar_vec(1.0 - c), 1e-10),
        limit_golden("Y_+ = 1", Source::Literature, "Y", true, scalar_vec(1.0), 1e-10),
        verdict_golden("tracks at r=0.2", Source::Literature, 0.2, VerdictKind::Tracks),
        verdict_golden("tips to Z+ at r=0.5", Source::Literature, 0.5, VerdictKind::TipsTo, "Z+"),
    };
    return sc;
}

inline Scenario fbs_scenario() {
    Scenario sc;
    sc.id = "fbs1d";
    sc.description = "0.25((x-l)^2-(x-l)) + l with Lambda(s) = 3 sech(s^10)";
    sc.map = systems::fbs();
    sc.shift = ParameterShift::sech_power(3.0, 10);
    sc.paths = {{"X", 0.0, scalar_vec(3.0), Stability::Stable}, {"Y", 0.0, scalar_vec(8.0), Stability::Unstable}};
    sc.plus_points = {{"X+", scalar_vec(0.0)}};
    sc.r_grid = {0.5, 1.0, 2.0, 5.0};
    sc.golden = {
        verdict_golden("tracks at r=0.5", Source::Computed, 0.5, VerdictKind::Tracks),
        verdict_golden("diverges at r=2", Source::Literature, 2.0, VerdictKind::Diverged),
        {"Z1 = 6, Z2 = 7.5", Source::Literature,
         GoldenValue{[](const Scenario& s, const Prepared& p) {
                         const auto lim = large_rate_limit(s.map, s.shift, p.tracked);
                         return vec({lim.z1(0), lim.z2(0)});
                     },
                     vec({6.0, 7.5}), 1e-12}},
    };
    return sc;
}

inline Scenario cubicflow_scenario() {
    Scenario sc;
    sc.id = "cubicflow";
    sc.description = "time-1 map of dx/dt = -(x-l)(x-l-1)(x-l-2), Lambda(s) = sech(s) + 0.4 tanh(s)";
    sc.flow = flows::cubic();
    sc.map = time_one_map(*sc.flow, sc.integrator.h);
    sc.shift = ParameterShift::sech_tanh(1.0, 0.4);
    sc.paths = {{"X", 0.0, scalar_vec(3.0), Stability::Stable},
                {"Y", 0.0, scalar_vec(2.0), Stability::Unstable},
                {"Z", 0.0, scalar_vec(1.0), Stability::Stable}};
    sc.plus_points = {{"X+", scalar_vec(2.4)}, {"Y+", scalar_vec(1.4)}, {"Z+", scalar_vec(0.4)}};
    sc.r_grid = {0.05, 0.5, 1.0, 3.0};
    sc.golden = {
        limit_golden("X_- = 1.6", Source::Literature, "X", false, scalar_vec(1.6), 1e-9),
        verdict_golden("map tips to Z+ at r=3", Source::Literature, 3.0, VerdictKind::TipsTo, "Z+"),
        verdict_golden("map tracks at r=0.05", Source::Computed, 0.05, VerdictKind::Tracks),
    };
    return sc;
}

inline Scenario ikeda_scenario() {
    Scenario sc;
    sc.id = "ikeda";
    sc.description = "Ikeda map R=0.9, phi=1, p=6 with a(s) = 5/2 - 2 tanh(s)";
    sc.map = systems::ikeda(0.9, 1.0, 6.0);
    sc.shift = ParameterShift::tanh_shift(2.5, -2.0);
    const double sat = sc.shift.saturation();

    const auto minus = find_fixed_points(sc.map, sc.shift.limit_minus(), -8.0, 8.0, 41);
    const auto plus = find_fixed_points(sc.map, sc.shift.limit_plus(), -8.0, 8.0, 41);
    if (minus.empty() || plus.size() != 3) throw ScenarioError("ikeda: unexpected fixed point count");
    sc.paths = {{"X", -sat, minus.front().x, Stability::Stable},
                {"Y", sat, plus[1].x, Stability::Unstable, 1.0, 40.0},
                {"Z", sat, plus[2].x, Stability::Stable, 2.0, 40.0}};
    sc.plus_points = {{"X+", plus[0].x}, {"Y+", plus[1].x}, {"Z+", plus[2].x}};
    sc.r_grid = {0.05, 0.2, 0.5, 1.0, 2.0, 5.0};
    sc.golden = {
        limit_golden("X_- ~ (2.9698, 5.0274)", Source::Literature, "X", false, vec({2.9698, 5.0274}), 1e-4),
        verdict_golden("tips to Z+ at r=2", Source::Literature, 2.0, VerdictKind::TipsTo, "Z+"),
        verdict_golden("tracks at r=0.05", Source::Computed, 0.05, VerdictKind::Tracks),
    };
    return sc;
}

}  // namespace detail

inline const std::vector<std::string>& builtin_ids() {
    static const std::vector<std::string> ids{"logistic", "rtip1d", "fbs1d", "cubicflow", "ikeda"};
    return ids;
}

inline Scenario builtin(const std::string& id) {
    if (id == "logistic") return detail::logistic_scenario();
    if (id == "rtip1d") return detail::rtip_scenario();
    if (id == "fbs1d") return detail::fbs_scenario();
    if (id == "cubicflow") return detail::cubicflow_scenario();
    if (id == "ikeda") return detail::ikeda_scenario();
    throw UnknownScenario(id);
}

/// First (u, v) on the grid with X(u) captured by another stable path's basin at v.
inline std::optional<std::pair<double, double>> find_tipping_window(const MapSystem& sys,
                                                                    const ParameterShift& shift, const Path& path,
                                                                    const std::vector<Path>& others,
                                                                    const std::vector<double>& s_grid,
                                                                    const BasinOptions& opt = {}) {
    const auto rep = check_forward_basin_stability(sys, shift, path, s_grid, 0.0, others, opt);
    if (!rep.center_violation || rep.center_violation->label.kind != BasinLabel::Kind::Attractor)
        return std::nullopt;
    return std::make_pair(rep.center_violation->s1, rep.center_violation->s2);
}

}  // namespace tipscan
