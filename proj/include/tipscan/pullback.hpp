#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "paths.hpp"
#include "system.hpp"

namespace tipscan {

/// Direction of the washout perturbation added to the second seed.
enum class SeedProtocol { Standard, Negated, Axis };

inline const char* to_string(SeedProtocol p) {
    switch (p) {
        case SeedProtocol::Standard: return "standard";
        case SeedProtocol::Negated: return "negated";
        case SeedProtocol::Axis: return "axis";
    }
    return "?";
}

inline std::optional<SeedProtocol> parse_seed_protocol(const std::string& s) {
    if (s == "standard") return SeedProtocol::Standard;
    if (s == "negated") return SeedProtocol::Negated;
    if (s == "axis") return SeedProtocol::Axis;
    return std::nullopt;
}

struct PullbackOptions {
    double pullback_tol = 1e-10;
    double perturbation = 1e-4;
    int max_doublings = 6;
    long min_start_steps = 32;  // |n_start| floor so fast rates still get a washout run-in
    double horizon_factor = 3.0;  // r * n_max >= horizon_factor * saturation
    long settle_steps = 500;      // extra frozen-parameter steps after the horizon
    double escape_radius = 1e6;
    SeedProtocol protocol = SeedProtocol::Standard;
};

/// The computed local pullback attractor {x_n^r} on [n_start, n_end].
struct PullbackOrbit {
    double r = 0.0;
    long n_start = 0;
    std::vector<Vec> states;

    struct Diagnostics {
        long n_start_used = 0;
        long n_conv = 0;            // seeds agree at every index >= n_conv
        double washout_error = 0.0; // max seed disagreement past n_conv
        int doublings = 0;
        bool escaped = false;       // iteration stopped at the escape radius
    } diagnostics;

    long n_end() const { return n_start + static_cast<long>(states.size()) - 1; }
    bool contains(long n) const { return n >= n_start && n <= n_end(); }
    const Vec& at(long n) const { return states.at(static_cast<std::size_t>(n - n_start)); }
    double s(long n) const { return r * static_cast<double>(n); }
};

enum class VerdictKind { Tracks, TipsTo, Diverged, Undecided };

inline const char* to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::Tracks: return "TRACKS";
        case VerdictKind::TipsTo: return "TIPS_TO";
        case VerdictKind::Diverged: return "DIVERGED";
        case VerdictKind::Undecided: return "UNDECIDED";
    }
    return "?";
}

struct Attractor {
    std::string id;
    Vec x;
};

struct TrackingVerdict {
    VerdictKind kind = VerdictKind::Undecided;
    std::string attractor_id;  // set for TIPS_TO
    double sup_track_error = 0.0;
    Vec final_state;

    /// Anything but TRACKS counts as rate-induced tipping.
    bool tipped() const { return kind != VerdictKind::Tracks; }
};

struct TrackingOptions {
    double eps_track = 1e-3;
    bool scale_by_amplitude = true;  // eps_track *= max(1, path amplitude)
    long tail_window = 50;
    double escape_radius = 1e6;
};

/// Forward iteration from x0 at index n0 up to n_end, stopping after the first state
/// beyond escape_radius. Throws NumericalOverflow on non-finite states.
inline std::vector<Vec> iterate(const MapSystem& sys, const ParameterShift& shift, double r, long n0,
                                const Vec& x0, long n_end, double escape_radius = INFINITY) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(std::max(0L, n_end - n0 + 1)));
    Vec x = x0;
    out.push_back(x);
    for (long n = n0; n < n_end; ++n) {
        if (x.norm() > escape_radius) break;
        x = step(sys, shift, r, n, x);
        out.push_back(x);
    }
    return out;
}

/// phi(n1, n0, y): the state at n1 of the solution with y_{n0} = y.
inline Vec evolve(const MapSystem& sys, const ParameterShift& shift, double r, long n1, long n0, const Vec& y) {
    if (n1 < n0) throw Error("evolve requires n0 <= n1");
    Vec x = y;
    for (long n = n0; n < n1; ++n) x = step(sys, shift, r, n, x);
    return x;
}

/// Smallest horizon with r * n_max >= horizon_factor * saturation, plus settle steps.
inline long default_horizon(const ParameterShift& shift, double r, const PullbackOptions& opt = {}) {
    return static_cast<long>(std::ceil(opt.horizon_factor * shift.saturation() / r)) + opt.settle_steps;
}

inline long default_start(const ParameterShift& shift, double r, const PullbackOptions& opt = {}) {
    return -std::max(static_cast<long>(std::ceil(shift.saturation() / r)), opt.min_start_steps);
}

namespace detail {

inline Vec seed_perturbation(long dim, const PullbackOptions& opt) {
    Vec p = Vec::Zero(dim);
    switch (opt.protocol) {
        case SeedProtocol::Standard: p.setConstant(opt.perturbation / std::sqrt(double(dim))); break;
        case SeedProtocol::Negated: p.setConstant(-opt.perturbation / std::sqrt(double(dim))); break;
        case SeedProtocol::Axis: p(0) = opt.perturbation; break;
    }
    return p;
}

inline double state_gap(const Vec& a, const Vec& b) {
    return (a - b).norm() / std::max(1.0, a.norm());
}

struct WashoutResult {
    std::vector<Vec> states;
    long n_start = 0;
    PullbackOrbit::Diagnostics diag;
};

// Two-seed, start-doubling washout protocol. run(n0, seed) must return states for
// indices n0, n0+1, ... (possibly truncated at escape).
template <class Runner>
WashoutResult washout(Runner&& run, const Vec& x_minus, long first_start, double r, const PullbackOptions& opt) {
    const Vec pert = seed_perturbation(x_minus.size(), opt);
    long n_start = first_start;
    for (int attempt = 0; attempt <= opt.max_doublings; ++attempt, n_start *= 2) {
        std::vector<Vec> a = run(n_start, x_minus);
        std::vector<Vec> b = run(n_start, Vec(x_minus + pert));
        const std::size_t common = std::min(a.size(), b.size());

        // earliest k such that every index >= k agrees
        std::size_t k = common;
        double worst = 0.0;
        while (k > 0) {
            const double g = state_gap(a[k - 1], b[k - 1]);
            if (!(g < opt.pullback_tol)) break;
            worst = std::max(worst, g);
            --k;
        }
        const long n_conv = n_start + static_cast<long>(k);
        if (k == common || n_conv > 0) continue;

        // deeper start must reproduce the trajectory on [n_conv, n_end]
        const long deeper = 2 * n_start;
        std::vector<Vec> c = run(deeper, x_minus);
        const auto off = static_cast<std::size_t>(n_start - deeper);
        bool stable = c.size() >= off + k;
        for (std::size_t i = k; stable && i < a.size() && off + i < c.size(); ++i)
            stable = state_gap(a[i], c[off + i]) < opt.pullback_tol;
        if (!stable) continue;

        WashoutResult res;
        res.n_start = n_start;
        res.diag.n_start_used = n_start;
        res.diag.n_conv = n_conv;
        res.diag.washout_error = worst;
        res.diag.doublings = attempt;
        res.states = std::move(a);
        return res;
    }
    throw SeedNotWashingOut(r, n_start / 2);
}

// Shared classifier over a sampled trajectory; s_of(i) gives the shift argument of state i.
template <class SOf>
TrackingVerdict classify_states(const std::vector<Vec>& states, SOf&& s_of, double s_end, const Path& path,
                                const std::vector<Attractor>& attractors, const TrackingOptions& opt) {
    TrackingVerdict v;
    if (states.empty()) return v;
    v.final_state = states.back();
    for (std::size_t i = 0; i < states.size(); ++i)
        v.sup_track_error = std::max(v.sup_track_error, (states[i] - path.at(s_of(i))).norm());

    for (const auto& x : states) {
        if (!(x.norm() <= opt.escape_radius)) {
            v.kind = VerdictKind::Diverged;
            return v;
        }
    }
    const auto tail = static_cast<std::size_t>(opt.tail_window);
    if (states.size() < tail || s_end < path.saturation || !path.x_plus) return v;

    const double eps = opt.eps_track * (opt.scale_by_amplitude ? std::max(1.0, path.amplitude()) : 1.0);
    auto held = [&](const Vec& target) {
        for (std::size_t i = states.size() - tail; i < states.size(); ++i)
            if (!((states[i] - target).norm() < eps)) return false;
        return true;
    };
    if (held(*path.x_plus)) {
        v.kind = VerdictKind::Tracks;
        return v;
    }
    for (const auto& a : attractors) {
        if (held(a.x)) {
            v.kind = VerdictKind::TipsTo;
            v.attractor_id = a.id;
            return v;
        }
    }
    return v;
}

}  // namespace detail

/// Local pullback attractor to X_- by forward iteration from a saturated start.
///
/// Seeds x_{n_start} = X_- and X_- + perturbation must agree to pullback_tol from some
/// n_conv <= 0 onward, and a start twice as deep must reproduce the trajectory;
/// otherwise |n_start| is doubled (at most max_doublings times).
inline PullbackOrbit compute_pullback(const MapSystem& sys, const ParameterShift& shift, const Path& path, double r,
                                      std::optional<long> n_max = std::nullopt,
                                      const PullbackOptions& opt = {}) {
    if (!(r > 0.0)) throw Error("rate must be positive");
    if (path.stability != Stability::Stable) throw Error("pullback requires a stable path");
    if (!path.x_minus) throw Error("path has no X_- limit");
    const long n_end = n_max.value_or(default_horizon(shift, r, opt));
    if (n_end <= 0) throw Error("n_max must be positive");

    auto run = [&](long n0, const Vec& seed) { return iterate(sys, shift, r, n0, seed, n_end, opt.escape_radius); };
    auto res = detail::washout(run, *path.x_minus, default_start(shift, r, opt), r, opt);

    PullbackOrbit orbit;
    orbit.r = r;
    orbit.n_start = res.n_start;
    orbit.states = std::move(res.states);
    orbit.diagnostics = res.diag;
    orbit.diagnostics.escaped = orbit.n_end() < n_end;
    return orbit;
}

inline TrackingVerdict classify_tracking(const PullbackOrbit& orbit, const Path& path,
                                         const std::vector<Attractor>& attractors,
                                         const TrackingOptions& opt = {}) {
    return detail::classify_states(
        orbit.states, [&](std::size_t i) { return orbit.s(orbit.n_start + static_cast<long>(i)); },
        orbit.s(orbit.n_end()), path, attractors, opt);
}

struct RateRow {
    double r = 0.0;
    std::optional<TrackingVerdict> verdict;
    std::string error;  // set when the rate failed numerically
};

/// Pullback + classification for one rate.
inline TrackingVerdict verdict_at(const MapSystem& sys, const ParameterShift& shift, const Path& path, double r,
                                  const std::vector<Attractor>& attractors, const PullbackOptions& popt = {},
                                  const TrackingOptions& topt = {}) {
    return classify_tracking(compute_pullback(sys, shift, path, r, std::nullopt, popt), path, attractors, topt);
}

inline std::vector<RateRow> rate_scan(const MapSystem& sys, const ParameterShift& shift, const Path& path,
                                      const std::vector<double>& r_grid, const std::vector<Attractor>& attractors,
                                      const PullbackOptions& popt = {}, const TrackingOptions& topt = {},
                                      int jobs = 1) {
    if (!std::is_sorted(r_grid.begin(), r_grid.end())) throw Error("rate grid must be ascending");
    std::vector<RateRow> rows(r_grid.size());
    detail::parallel_for(r_grid.size(), jobs, [&](std::size_t i) {
        rows[i].r = r_grid[i];
        try {
            rows[i].verdict = verdict_at(sys, shift, path, r_grid[i], attractors, popt, topt);
        } catch (const Error& e) {
            rows[i].error = e.what();
        }
    });
    return rows;
}

struct RateInterval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

/// Bisection for a TRACKS -> non-TRACKS transition inside [r_lo, r_hi].
///
/// Tipping need not be monotone in r; the result is one transition within the
/// bracket, not a global critical rate.
inline RateInterval critical_rate(const MapSystem& sys, const ParameterShift& shift, const Path& path, double r_lo,
                                  double r_hi, double tol_r, const std::vector<Attractor>& attractors,
                                  const PullbackOptions& popt = {}, const TrackingOptions& topt = {}) {
    if (!(tol_r > 0.0)) throw InvalidBracket("tolerance must be positive");
    auto tracks = [&](double r) { return !verdict_at(sys, shift, path, r, attractors, popt, topt).tipped(); };
    if (!(r_lo > 0.0 && r_lo < r_hi)) throw InvalidBracket("bracket must satisfy 0 < r_lo < r_hi");
    if (!tracks(r_lo)) throw InvalidBracket("no endpoint tracking at r_lo");
    if (tracks(r_hi)) throw InvalidBracket("endpoint tracking at r_hi");
    RateInterval iv{r_lo, r_hi};
    while (iv.width() > tol_r) {
        const double mid = 0.5 * (iv.lo + iv.hi);
        (tracks(mid) ? iv.lo : iv.hi) = mid;
    }
    return iv;
}

struct LargeRateLimit {
    Vec z1;  // f(X_-, Lambda(0))
    Vec z2;  // f(Z1, lambda_+)
};

inline LargeRateLimit large_rate_limit(const MapSystem& sys, const ParameterShift& shift, const Path& path) {
    if (path.stability != Stability::Stable || !path.x_minus) throw Error("large-rate limit requires a stable path");
    LargeRateLimit lim;
    lim.z1 = sys(*path.x_minus, shift.value(0.0));
    if (!all_finite(lim.z1)) throw NumericalOverflow(1, "Z1");
    lim.z2 = sys(lim.z1, shift.limit_plus());
    if (!all_finite(lim.z2)) throw NumericalOverflow(2, "Z2");
    return lim;
}

struct LargeRateReport {
    LargeRateLimit limit;
    struct Row {
        double r = 0.0;
        // |x_{-1}-X_-|, |x_0-X_-|, |x_1-Z1|, |x_2-Z2|
        std::array<double, 4> errors{};
        std::string error;
    };
    std::vector<Row> rows;
    std::array<bool, 4> non_increasing{true, true, true, true};

    bool converging() const {
        return std::all_of(non_increasing.begin(), non_increasing.end(), [](bool b) { return b; });
    }
};

/// Checks that x_{-1}, x_0 -> X_-, x_1 -> Z1 and x_2 -> Z2 along an ascending list of large rates.
inline LargeRateReport verify_large_rate(const MapSystem& sys, const ParameterShift& shift, const Path& path,
                                         const std::vector<double>& r_list, const PullbackOptions& opt = {}) {
    LargeRateReport rep;
    rep.limit = large_rate_limit(sys, shift, path);
    const Vec& xm = *path.x_minus;
    for (double r : r_list) {
        LargeRateReport::Row row;
        row.r = r;
        row.errors.fill(INFINITY);
        try {
            const auto orbit = compute_pullback(sys, shift, path, r, std::nullopt, opt);
            const std::array<std::pair<long, const Vec*>, 4> probes{
                {{-1, &xm}, {0, &xm}, {1, &rep.limit.z1}, {2, &rep.limit.z2}}};
            for (std::size_t k = 0; k < probes.size(); ++k)
                if (orbit.contains(probes[k].first))
                    row.errors[k] = (orbit.at(probes[k].first) - *probes[k].second).norm();
        } catch (const Error& e) {
            row.error = e.what();
        }
        if (!rep.rows.empty())
            for (std::size_t k = 0; k < 4; ++k)
                rep.non_increasing[k] = rep.non_increasing[k] && row.errors[k] <= rep.rows.back().errors[k];
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace tipscan
