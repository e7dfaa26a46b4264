#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "paths.hpp"
#include "pullback.hpp"
#include "system.hpp"

namespace tipscan {

/// Autonomous vector field dx/dt = f(x, lambda).
struct VectorField {
    std::string name;
    int dimension = 1;
    int param_dimension = 1;
    MapSystem::Evaluator evaluator;
    MapSystem::Jacobian jacobian;  // optional

    Vec operator()(const Vec& x, const Vec& lambda) const { return evaluator(x, lambda); }

    /// Same callables viewed as a rule; used for equilibrium continuation.
    MapSystem as_rule() const { return {name, dimension, param_dimension, evaluator, jacobian}; }
};

struct IntegratorSpec {
    double h = 1e-2;
    double ode_tol = 1e-7;
};

namespace detail {

template <class ParamAt>
Vec rk4(const VectorField& vf, ParamAt&& param_at, Vec x, double t0, double t1, double h) {
    if (!(h > 0.0) || !(t1 > t0)) throw Error("integrate requires h > 0 and t1 > t0");
    const double span = t1 - t0;
    const auto full = static_cast<long>(std::floor(span / h * (1.0 + 1e-13)));
    const long steps = (t0 + static_cast<double>(full) * h < t1) ? full + 1 : full;
    for (long k = 0; k < steps; ++k) {
        const double t = t0 + static_cast<double>(k) * h;
        const double dt = (k == steps - 1) ? t1 - t : h;
        const Vec l0 = param_at(t), lm = param_at(t + dt / 2), l1 = param_at(t + dt);
        const Vec k1 = vf(x, l0);
        const Vec k2 = vf(x + dt / 2 * k1, lm);
        const Vec k3 = vf(x + dt / 2 * k2, lm);
        const Vec k4 = vf(x + dt * k3, l1);
        x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!all_finite(x)) throw NumericalOverflow(k, "RK4 state of " + vf.name);
    }
    return x;
}

}  // namespace detail

/// Classical fixed-step RK4 at frozen lambda; the last step is shortened to land on t1.
inline Vec integrate(const VectorField& vf, const Vec& lambda, const Vec& x0, double t0, double t1, double h) {
    return detail::rk4(vf, [&](double) -> const Vec& { return lambda; }, x0, t0, t1, h);
}

/// RK4 with the parameter driven continuously as Lambda(r t).
inline Vec integrate(const VectorField& vf, const ParameterShift& shift, double r, const Vec& x0, double t0,
                     double t1, double h) {
    return detail::rk4(vf, [&](double t) { return shift.value(r * t); }, x0, t0, t1, h);
}

/// x -> Phi_lambda(1, x): one time unit of the flow with lambda held fixed.
inline MapSystem time_one_map(const VectorField& vf, double h = 1e-2) {
    MapSystem m;
    m.name = vf.name + "/time1";
    m.dimension = vf.dimension;
    m.param_dimension = vf.param_dimension;
    m.evaluator = [vf, h](const Vec& x, const Vec& lambda) { return integrate(vf, lambda, x, 0.0, 1.0, h); };
    return m;
}

/// Continues equilibria of the vector field; stability judged by eigenvalue real parts.
inline Path continue_flow_path(const VectorField& vf, const ParameterShift& shift, double seed_s, const Vec& seed_x,
                               double s_lo, double s_hi, double ds, const std::string& id = "X",
                               const ContinuationOptions& opt = {}) {
    return detail::continue_branch({vf.as_rule(), PathKind::Flow}, shift, id, seed_s, seed_x, s_lo, s_hi, ds, opt);
}

/// Continuous pullback attractor x^r(t), recorded at integer times t_start..t_end.
struct FlowOrbit {
    double r = 0.0;
    long t_start = 0;
    std::vector<Vec> states;
    IntegratorSpec integrator;
    PullbackOrbit::Diagnostics diagnostics;
    double step_halving_error = 0.0;  // terminal-state change when h is halved

    long t_end() const { return t_start + static_cast<long>(states.size()) - 1; }
    double t(std::size_t i) const { return static_cast<double>(t_start + static_cast<long>(i)); }
};

struct FlowOptions {
    IntegratorSpec integrator;
    bool verify_step_halving = true;
};

namespace detail {

inline std::vector<Vec> flow_run(const VectorField& vf, const ParameterShift& shift, double r, long t0,
                                 const Vec& x0, long t_end, double h, double escape_radius) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(std::max(0L, t_end - t0 + 1)));
    Vec x = x0;
    out.push_back(x);
    for (long t = t0; t < t_end; ++t) {
        if (x.norm() > escape_radius) break;
        x = integrate(vf, shift, r, x, static_cast<double>(t), static_cast<double>(t + 1), h);
        out.push_back(x);
    }
    return out;
}

}  // namespace detail

/// Same washout/doubling protocol as the map pullback, applied to the shift-driven flow.
inline FlowOrbit flow_pullback(const VectorField& vf, const ParameterShift& shift, const Path& flow_path, double r,
                               std::optional<long> t_max = std::nullopt, const PullbackOptions& popt = {},
                               const FlowOptions& fopt = {}) {
    if (!(r > 0.0)) throw Error("rate must be positive");
    if (flow_path.kind != PathKind::Flow || flow_path.stability != Stability::Stable || !flow_path.x_minus)
        throw Error("flow pullback requires a stable flow path with an X_- limit");
    const long t_end = t_max.value_or(default_horizon(shift, r, popt));
    const double h = fopt.integrator.h;
    auto run = [&](long t0, const Vec& seed) {
        return detail::flow_run(vf, shift, r, t0, seed, t_end, h, popt.escape_radius);
    };
    auto res = detail::washout(run, *flow_path.x_minus, default_start(shift, r, popt), r, popt);

    FlowOrbit orbit;
    orbit.r = r;
    orbit.t_start = res.n_start;
    orbit.states = std::move(res.states);
    orbit.integrator = fopt.integrator;
    orbit.diagnostics = res.diag;
    orbit.diagnostics.escaped = orbit.t_end() < t_end;
    if (fopt.verify_step_halving) {
        const auto fine = detail::flow_run(vf, shift, r, orbit.t_start, *flow_path.x_minus, t_end, h / 2,
                                           popt.escape_radius);
        orbit.step_halving_error = fine.size() == orbit.states.size()
                                       ? (fine.back() - orbit.states.back()).norm()
                                       : INFINITY;
    }
    return orbit;
}

inline TrackingVerdict classify_flow(const FlowOrbit& orbit, const Path& flow_path,
                                     const std::vector<Attractor>& attractors, const TrackingOptions& opt = {}) {
    return detail::classify_states(
        orbit.states, [&](std::size_t i) { return orbit.r * orbit.t(i); },
        orbit.r * static_cast<double>(orbit.t_end()), flow_path, attractors, opt);
}

struct FlowMapRow {
    double r = 0.0;
    std::optional<TrackingVerdict> flow;
    std::optional<TrackingVerdict> map;
    std::string flow_error;
    std::string map_error;

    bool disagree() const {
        if (!flow || !map) return true;
        return flow->kind != map->kind || flow->attractor_id != map->attractor_id;
    }
};

/// Pullback verdicts of the shift-driven flow and of its frozen-per-step time-1 map, per rate.
inline std::vector<FlowMapRow> compare_flow_map(const VectorField& vf, const ParameterShift& shift,
                                                const MapSystem& time_one, const Path& map_path,
                                                const Path& flow_path, const std::vector<Attractor>& attractors,
                                                const std::vector<double>& r_grid, const PullbackOptions& popt = {},
                                                const TrackingOptions& topt = {}, const FlowOptions& fopt = {},
                                                int jobs = 1) {
    std::vector<FlowMapRow> rows(r_grid.size());
    detail::parallel_for(r_grid.size(), jobs, [&](std::size_t i) {
        const double r = r_grid[i];
        rows[i].r = r;
        try {
            rows[i].flow = classify_flow(flow_pullback(vf, shift, flow_path, r, std::nullopt, popt, fopt),
                                         flow_path, attractors, topt);
        } catch (const Error& e) {
            rows[i].flow_error = e.what();
        }
        try {
            rows[i].map = verdict_at(time_one, shift, map_path, r, attractors, popt, topt);
        } catch (const Error& e) {
            rows[i].map_error = e.what();
        }
    });
    return rows;
}

}  // namespace tipscan
