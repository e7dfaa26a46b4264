#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "system.hpp"

namespace tipscan {

enum class Stability { Stable, Unstable, Mixed };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Mixed: return "mixed";
    }
    return "?";
}

/// Which stability criterion a branch is judged by: spectral radius < 1 for maps,
/// largest eigenvalue real part < 0 for flows.
enum class PathKind { Map, Flow };

struct PathSample {
    double s = 0.0;
    Vec x;
    double rho = 0.0;  // spectral radius (Map) or max Re(eig) (Flow)
    Vec tangent;       // dX/ds from the implicit function theorem
};

struct ContinuationOptions {
    double newton_tol = 1e-12;
    int max_newton_iterations = 50;
    int max_halvings = 10;
    double continuity_factor = 10.0;
    double continuity_floor = 1e-9;
};

/// A continued branch of frozen-parameter equilibria s -> X(s).
struct Path {
    std::string id;
    PathKind kind = PathKind::Map;
    std::vector<PathSample> samples;
    std::optional<Vec> x_minus;
    std::optional<Vec> x_plus;
    std::optional<double> rho_minus;
    std::optional<double> rho_plus;
    Stability stability = Stability::Mixed;
    double ds = 0.0;
    double saturation = 20.0;

    double s_lo() const { return samples.front().s; }
    double s_hi() const { return samples.back().s; }
    int dimension() const { return static_cast<int>(samples.front().x.size()); }

    /// True when X(s) is known at s, either sampled or through a saturated limit.
    bool covers(double s) const {
        if (samples.empty()) return false;
        if (s >= s_lo() && s <= s_hi()) return true;
        if (s < s_lo()) return x_minus.has_value() && s_lo() <= -saturation;
        return x_plus.has_value() && s_hi() >= saturation;
    }

    /// X(s) by cubic Hermite interpolation between samples; limits outside the sampled range.
    Vec at(double s) const {
        if (s <= s_lo()) return (s < s_lo() && x_minus) ? *x_minus : samples.front().x;
        if (s >= s_hi()) return (s > s_hi() && x_plus) ? *x_plus : samples.back().x;
        auto it = std::upper_bound(samples.begin(), samples.end(), s,
                                   [](double v, const PathSample& p) { return v < p.s; });
        const PathSample& b = *it;
        const PathSample& a = *(it - 1);
        const double h = b.s - a.s;
        const double t = (s - a.s) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * a.x + h10 * h * a.tangent + h01 * b.x + h11 * h * b.tangent;
    }

    /// max_s |X(s) - X(s_lo)|, used to scale tracking tolerances.
    double amplitude() const {
        const Vec& ref = x_minus ? *x_minus : samples.front().x;
        double m = 0.0;
        for (const auto& p : samples) m = std::max(m, (p.x - ref).norm());
        if (x_plus) m = std::max(m, (*x_plus - ref).norm());
        return m;
    }
};

namespace detail {

template <class Residual, class ResidualJacobian>
std::optional<Vec> newton(Residual&& F, ResidualJacobian&& JF, Vec x, const ContinuationOptions& opt) {
    for (int it = 0; it <= opt.max_newton_iterations; ++it) {
        const Vec r = F(x);
        if (!all_finite(r)) return std::nullopt;
        if (r.norm() <= opt.newton_tol) return x;
        if (it == opt.max_newton_iterations) break;
        const Mat J = JF(x);
        if (!all_finite(J)) return std::nullopt;
        Eigen::FullPivLU<Mat> lu(J);
        if (!lu.isInvertible()) return std::nullopt;
        x -= lu.solve(r);
        if (!all_finite(x)) return std::nullopt;
    }
    return std::nullopt;
}

// Equilibrium problem for either a map (f(x) - x = 0) or a vector field (f(x) = 0).
struct ZeroProblem {
    MapSystem rule;
    PathKind kind = PathKind::Map;

    Vec residual(const Vec& x, const Vec& lambda) const {
        Vec r = rule(x, lambda);
        if (kind == PathKind::Map) r -= x;
        return r;
    }
    Mat residual_jacobian(const Vec& x, const Vec& lambda) const {
        Mat J = jacobian_at(rule, x, lambda);
        if (kind == PathKind::Map) J -= Mat::Identity(J.rows(), J.cols());
        return J;
    }
    double indicator(const Vec& x, const Vec& lambda) const {
        const Mat J = jacobian_at(rule, x, lambda);
        return kind == PathKind::Map ? spectral_radius(J) : max_real_part(J);
    }
    double threshold() const { return kind == PathKind::Map ? 1.0 : 0.0; }

    std::optional<Vec> solve(const Vec& lambda, const Vec& x0, const ContinuationOptions& opt) const {
        return newton([&](const Vec& x) { return residual(x, lambda); },
                      [&](const Vec& x) { return residual_jacobian(x, lambda); }, x0, opt);
    }

    Vec tangent(const ParameterShift& shift, double s, const Vec& x) const {
        const Vec lambda = shift.value(s);
        const Vec dl = shift.derivative(s);
        if (dl.isZero(0.0)) return Vec::Zero(x.size());
        const Mat Jl = parameter_jacobian(rule, x, lambda);
        Eigen::FullPivLU<Mat> lu(residual_jacobian(x, lambda));
        return -lu.solve(Jl * dl);
    }
};

inline Stability classify(const Path& path) {
    const double thr = path.kind == PathKind::Map ? 1.0 : 0.0;
    bool all_below = true, all_above = true;
    auto visit = [&](double rho) {
        all_below = all_below && rho < thr;
        all_above = all_above && rho > thr;
    };
    for (const auto& p : path.samples) visit(p.rho);
    if (path.rho_minus) visit(*path.rho_minus);
    if (path.rho_plus) visit(*path.rho_plus);
    if (all_below) return Stability::Stable;
    if (all_above) return Stability::Unstable;
    return Stability::Mixed;
}

// Walks from `from` to each of `targets` in order, halving the sub-step on failure.
inline std::vector<PathSample> walk(const ZeroProblem& prob, const ParameterShift& shift, PathSample from,
                                    const std::vector<double>& targets, const ContinuationOptions& opt) {
    std::vector<PathSample> out;
    out.reserve(targets.size());
    for (double target : targets) {
        int halvings = 0;
        double step = target - from.s;
        while (from.s != target) {
            const double s_next = (std::abs(step) >= std::abs(target - from.s)) ? target : from.s + step;
            auto x = prob.solve(shift.value(s_next), from.x, opt);
            bool ok = x.has_value();
            bool jumped = false;
            double jump = 0.0, bound = 0.0;
            Vec tan;
            if (ok) {
                tan = prob.tangent(shift, s_next, *x);
                jump = (*x - from.x).norm();
                bound = opt.continuity_factor * std::abs(s_next - from.s) *
                            std::max(from.tangent.norm(), tan.norm()) +
                        opt.continuity_floor;
                jumped = jump > bound;
                ok = !jumped;
            }
            if (!ok) {
                if (++halvings > opt.max_halvings) {
                    if (jumped) throw BranchJump(s_next, jump, bound);
                    throw NewtonDivergence(s_next, "step halving exhausted");
                }
                step = (s_next - from.s) / 2.0;
                continue;
            }
            from.s = s_next;
            from.x = *x;
            from.tangent = tan;
            halvings = 0;
            step = target - from.s;
        }
        from.rho = prob.indicator(from.x, shift.value(from.s));
        out.push_back(from);
    }
    return out;
}

inline Path continue_branch(const ZeroProblem& prob, const ParameterShift& shift, const std::string& id,
                            double seed_s, const Vec& seed_x, double s_lo, double s_hi, double ds,
                            const ContinuationOptions& opt) {
    if (!(ds > 0.0)) throw Error("continuation step ds must be positive");
    if (!(s_lo <= seed_s && seed_s <= s_hi)) throw Error("seed s outside continuation range");
    if (seed_x.size() != prob.rule.dimension) throw Error("seed dimension mismatch");

    auto x0 = prob.solve(shift.value(seed_s), seed_x, opt);
    if (!x0) throw NewtonDivergence(seed_s, "seed did not converge");
    PathSample seed{seed_s, *x0, prob.indicator(*x0, shift.value(seed_s)), prob.tangent(shift, seed_s, *x0)};

    // grid: seed_s + k ds clipped to [s_lo, s_hi], plus the interval endpoints
    std::vector<double> up, down;
    for (long k = 1;; ++k) {
        const double s = seed_s + static_cast<double>(k) * ds;
        if (s >= s_hi) break;
        up.push_back(s);
    }
    if (s_hi > seed_s) up.push_back(s_hi);
    for (long k = 1;; ++k) {
        const double s = seed_s - static_cast<double>(k) * ds;
        if (s <= s_lo) break;
        down.push_back(s);
    }
    if (s_lo < seed_s) down.push_back(s_lo);

    auto upper = walk(prob, shift, seed, up, opt);
    auto lower = walk(prob, shift, seed, down, opt);

    Path path;
    path.id = id;
    path.kind = prob.kind;
    path.ds = ds;
    path.saturation = shift.saturation();
    path.samples.assign(lower.rbegin(), lower.rend());
    path.samples.push_back(seed);
    path.samples.insert(path.samples.end(), upper.begin(), upper.end());

    if (path.s_lo() <= -shift.saturation()) {
        auto xm = prob.solve(shift.limit_minus(), path.samples.front().x, opt);
        if (!xm) throw NewtonDivergence(-INFINITY, "limit at lambda_-");
        path.x_minus = *xm;
        path.rho_minus = prob.indicator(*xm, shift.limit_minus());
    }
    if (path.s_hi() >= shift.saturation()) {
        auto xp = prob.solve(shift.limit_plus(), path.samples.back().x, opt);
        if (!xp) throw NewtonDivergence(INFINITY, "limit at lambda_+");
        path.x_plus = *xp;
        path.rho_plus = prob.indicator(*xp, shift.limit_plus());
    }
    path.stability = classify(path);
    return path;
}

}  // namespace detail

/// Continues a branch of fixed points of f(., Lambda(s)) over [s_lo, s_hi] from a seed.
///
/// Each grid point is Newton-solved from the previous solution; a failed or
/// discontinuous step is halved up to max_halvings times. Limits X_- / X_+ are
/// solved at lambda_-/lambda_+ when the range reaches the saturated tails.
inline Path continue_path(const MapSystem& sys, const ParameterShift& shift, double seed_s, const Vec& seed_x,
                          double s_lo, double s_hi, double ds, const std::string& id = "X",
                          const ContinuationOptions& opt = {}) {
    return detail::continue_branch({sys, PathKind::Map}, shift, id, seed_s, seed_x, s_lo, s_hi, ds, opt);
}

inline Stability classify_stability(const Path& path) {
    if (path.samples.empty()) throw Error("path has no samples");
    return detail::classify(path);
}

/// Newton solve for a fixed point of the frozen map f(., lambda).
inline std::optional<Vec> solve_fixed_point(const MapSystem& sys, const Vec& lambda, const Vec& guess,
                                            const ContinuationOptions& opt = {}) {
    return detail::ZeroProblem{sys, PathKind::Map}.solve(lambda, guess, opt);
}

struct FixedPoint {
    Vec x;
    double rho = 0.0;
    bool stable() const { return rho < 1.0; }
};

/// Fixed points of a 1-D or 2-D frozen map found by Newton from a uniform grid of
/// starts over [lo, hi]^dim, deduplicated and ordered by decreasing norm.
inline std::vector<FixedPoint> find_fixed_points(const MapSystem& sys, const Vec& lambda, double lo, double hi,
                                                 int per_axis = 41, double dedup = 1e-7) {
    if (sys.dimension < 1 || sys.dimension > 2) throw UnsupportedDimension(sys.dimension);
    std::vector<FixedPoint> found;
    auto consider = [&](const Vec& start) {
        auto x = solve_fixed_point(sys, lambda, start);
        if (!x) return;
        for (const auto& f : found)
            if ((f.x - *x).norm() < dedup) return;
        found.push_back({*x, spectral_radius(jacobian_at(sys, *x, lambda))});
    };
    const double step = (hi - lo) / (per_axis - 1);
    for (int i = 0; i < per_axis; ++i) {
        if (sys.dimension == 1) {
            consider(scalar_vec(lo + i * step));
            continue;
        }
        for (int j = 0; j < per_axis; ++j) consider(vec({lo + i * step, lo + j * step}));
    }
    std::sort(found.begin(), found.end(), [](const FixedPoint& a, const FixedPoint& b) {
        return a.x.norm() > b.x.norm();
    });
    return found;
}

}  // namespace tipscan
