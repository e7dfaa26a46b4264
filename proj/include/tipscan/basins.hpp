#pragma once

#include <algorithm>
#include <array>
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

struct BasinOptions {
    long budget = 10000;
    long hold_window = 20;
    double eps = 1e-6;
    double escape_radius = 1e6;
};

/// Outcome of iterating a point under a frozen map.
struct BasinLabel {
    enum class Kind { Attractor, Diverged, Undecided } kind = Kind::Undecided;
    int index = -1;  // into the attractor list when kind == Attractor
    std::string id;

    bool operator==(const BasinLabel& o) const { return kind == o.kind && index == o.index; }
    bool operator!=(const BasinLabel& o) const { return !(*this == o); }

    std::string name() const {
        switch (kind) {
            case Kind::Attractor: return id;
            case Kind::Diverged: return "DIVERGED";
            case Kind::Undecided: return "UNDECIDED";
        }
        return "?";
    }
    /// Raster code: attractor index, -1 diverged, -2 undecided.
    int code() const { return kind == Kind::Attractor ? index : (kind == Kind::Diverged ? -1 : -2); }
};

/// Iterates x under f(., lambda) until it holds inside an attractor's eps-ball for
/// hold_window consecutive steps, escapes, or the budget runs out.
inline BasinLabel membership(const MapSystem& sys, const Vec& lambda, const Vec& x0,
                             const std::vector<Attractor>& attractors, const BasinOptions& opt = {}) {
    Vec x = x0;
    int current = -1;
    long held = 0;
    for (long it = 0; it <= opt.budget; ++it) {
        if (!all_finite(x) || x.norm() > opt.escape_radius) return {BasinLabel::Kind::Diverged, -1, {}};
        int inside = -1;
        for (std::size_t a = 0; a < attractors.size(); ++a) {
            if ((x - attractors[a].x).norm() < opt.eps) {
                inside = static_cast<int>(a);
                break;
            }
        }
        if (inside >= 0 && inside == current) {
            if (++held >= opt.hold_window) return {BasinLabel::Kind::Attractor, inside, attractors[inside].id};
        } else {
            current = inside;
            held = inside >= 0 ? 1 : 0;
            if (held >= opt.hold_window) return {BasinLabel::Kind::Attractor, inside, attractors[inside].id};
        }
        if (it < opt.budget) x = sys(x, lambda);
    }
    return {};
}

/// Bisection on [a, b] (1-D maps) for the point where the membership label changes.
inline double boundary_1d(const MapSystem& sys, const Vec& lambda, double a, double b, double tol,
                          const std::vector<Attractor>& attractors, const BasinOptions& opt = {}) {
    if (sys.dimension != 1) throw UnsupportedDimension(sys.dimension);
    if (!(tol > 0.0)) throw Error("boundary tolerance must be positive");
    auto label = [&](double x) { return membership(sys, lambda, scalar_vec(x), attractors, opt); };
    const BasinLabel la = label(a);
    if (la == label(b)) throw SameLabel("both ends of [" + std::to_string(a) + ", " + std::to_string(b) +
                                        "] share label " + la.name());
    while (std::abs(b - a) > tol) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        (label(mid) == la ? a : b) = mid;
    }
    return 0.5 * (a + b);
}

struct Region2D {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
};

/// Labels of cell centers on an nx-by-ny grid; row j (y) major, column i (x) minor.
struct BasinGrid {
    Region2D region;
    int nx = 1, ny = 1;
    Vec lambda;
    std::vector<std::string> attractor_ids;
    std::vector<BasinLabel> labels;

    double cell_x(int i) const { return region.x0 + (i + 0.5) * (region.x1 - region.x0) / nx; }
    double cell_y(int j) const { return region.y0 + (j + 0.5) * (region.y1 - region.y0) / ny; }
    const BasinLabel& label(int i, int j) const { return labels[static_cast<std::size_t>(j) * nx + i]; }
};

inline BasinGrid basin_grid_2d(const MapSystem& sys, const Vec& lambda, const Region2D& region, int nx, int ny,
                               const std::vector<Attractor>& attractors, const BasinOptions& opt = {},
                               int jobs = 1) {
    if (sys.dimension != 2) throw UnsupportedDimension(sys.dimension);
    if (nx < 1 || ny < 1) throw Error("basin grid resolution must be positive");
    BasinGrid g;
    g.region = region;
    g.nx = nx;
    g.ny = ny;
    g.lambda = lambda;
    for (const auto& a : attractors) g.attractor_ids.push_back(a.id);
    g.labels.resize(static_cast<std::size_t>(nx) * ny);
    detail::parallel_for(g.labels.size(), jobs, [&](std::size_t k) {
        const int i = static_cast<int>(k % nx), j = static_cast<int>(k / nx);
        g.labels[k] = membership(sys, lambda, vec({g.cell_x(i), g.cell_y(j)}), attractors, opt);
    });
    return g;
}

namespace detail {

// Points on the sphere of radius rad around c: 2 points in 1-D, `count` on a circle in 2-D,
// the 2*dim axis points otherwise.
inline std::vector<Vec> sphere_points(const Vec& c, double rad, int count) {
    std::vector<Vec> pts;
    const auto dim = c.size();
    if (dim == 2) {
        for (int k = 0; k < count; ++k) {
            const double th = 2.0 * M_PI * k / count;
            pts.push_back(c + rad * vec({std::cos(th), std::sin(th)}));
        }
        return pts;
    }
    for (Eigen::Index d = 0; d < dim; ++d) {
        Vec e = Vec::Zero(dim);
        e(d) = rad;
        pts.push_back(c + e);
        pts.push_back(c - e);
    }
    return pts;
}

}  // namespace detail

struct FbsReport {
    bool holds = true;
    long pairs_checked = 0;
    struct Violation {
        double s1 = 0, s2 = 0;
        Vec witness;
        BasinLabel label;
        bool center = false;  // the path point itself, not only its margin ball, left the basin
    };
    std::optional<Violation> violation;
    std::optional<Violation> center_violation;  // first (s1, s2) with X(s1) itself outside
};

/// Checks closure{X(s1): s1 < s2} in B(X(s2), Lambda(s2)) on a grid, approximating
/// the closure by margin balls around the sampled points.
///
/// `others` are further stable paths whose points at s2 compete as attractors; the
/// first violation and the first pair where X(s1) itself is captured elsewhere are reported.
inline FbsReport check_forward_basin_stability(const MapSystem& sys, const ParameterShift& shift, const Path& path,
                                               const std::vector<double>& s_grid, double margin,
                                               const std::vector<Path>& others = {},
                                               const BasinOptions& opt = {}) {
    FbsReport rep;
    std::vector<Vec> points;
    points.reserve(s_grid.size());
    for (double s : s_grid) points.push_back(path.at(s));
    for (std::size_t j = 0; j < s_grid.size(); ++j) {
        const double s2 = s_grid[j];
        const Vec lambda = shift.value(s2);
        std::vector<Attractor> atts{{path.id, points[j]}};
        for (const auto& o : others)
            if (o.stability == Stability::Stable && o.covers(s2)) atts.push_back({o.id, o.at(s2)});
        for (std::size_t i = 0; i < j; ++i) {
            ++rep.pairs_checked;
            const BasinLabel c = membership(sys, lambda, points[i], atts, opt);
            if (c.kind != BasinLabel::Kind::Attractor || c.index != 0) {
                FbsReport::Violation v{s_grid[i], s2, points[i], c, true};
                if (!rep.center_violation) rep.center_violation = v;
                if (!rep.violation) rep.violation = v;
                rep.holds = false;
                continue;
            }
            if (rep.violation) continue;
            for (const Vec& p : detail::sphere_points(points[i], margin, 8)) {
                const BasinLabel l = membership(sys, lambda, p, atts, opt);
                if (l.kind != BasinLabel::Kind::Attractor || l.index != 0) {
                    rep.violation = FbsReport::Violation{s_grid[i], s2, p, l, false};
                    rep.holds = false;
                    break;
                }
            }
        }
        if (rep.center_violation) break;
    }
    return rep;
}

/// Nested ball family K(s) = B(center(s), radius(s)) sampled on a grid.
struct InflowingFamily {
    std::function<Vec(double)> center;
    std::function<double(double)> radius;
    std::vector<double> s_grid;
};

struct InflowReport {
    struct Condition {
        bool pass = true;
        std::string witness;
    };
    // nesting, forward invariance, X_- / X_+ interior, K_+ inside the basin of X_+
    std::array<Condition, 4> conditions;
    bool all_pass() const {
        return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.pass; });
    }
};

namespace detail {

// Boundary samples plus three interior shells and the center.
inline std::vector<Vec> ball_samples(const Vec& c, double rad, int boundary_samples) {
    std::vector<Vec> pts;
    if (c.size() == 1) {
        const int n = std::max(boundary_samples, 2) * 16;
        for (int k = 0; k <= n; ++k) pts.push_back(c + scalar_vec(rad * (-1.0 + 2.0 * k / n)));
        return pts;
    }
    for (double f : {1.0, 0.75, 0.5, 0.25}) {
        auto ring = sphere_points(c, f * rad, boundary_samples);
        pts.insert(pts.end(), ring.begin(), ring.end());
    }
    pts.push_back(c);
    return pts;
}

inline std::string fmt_s(double s) { return std::to_string(s); }

}  // namespace detail

/// Checks the four forward-inflowing conditions for a ball family.
///
/// Only certifies: a failing family says nothing about other families.
inline InflowReport check_inflowing(const MapSystem& sys, const ParameterShift& shift, const InflowingFamily& fam,
                                    const Vec& x_minus, const Vec& x_plus, int boundary_samples = 64,
                                    const BasinOptions& opt = {}) {
    if (fam.s_grid.size() < 2) throw Error("inflowing family needs at least two grid points");
    if (!std::is_sorted(fam.s_grid.begin(), fam.s_grid.end())) throw Error("family grid must be ascending");
    InflowReport rep;
    const double slack = 1e-12;

    for (std::size_t i = 0; i + 1 < fam.s_grid.size(); ++i) {
        const double a = fam.s_grid[i], b = fam.s_grid[i + 1];
        if ((fam.center(b) - fam.center(a)).norm() + fam.radius(a) > fam.radius(b) + slack) {
            rep.conditions[0] = {false, "K(" + detail::fmt_s(a) + ") not inside K(" + detail::fmt_s(b) + ")"};
            break;
        }
    }
    for (double s : fam.s_grid) {
        const Vec c = fam.center(s);
        const double rad = fam.radius(s);
        const Vec lambda = shift.value(s);
        bool ok = true;
        for (const Vec& p : detail::ball_samples(c, rad, boundary_samples)) {
            if (!((sys(p, lambda) - c).norm() < rad)) {
                rep.conditions[1] = {false, "f(K(" + detail::fmt_s(s) + ")) leaves K at x=" +
                                                detail::fmt_s(p(0))};
                ok = false;
                break;
            }
        }
        if (!ok) break;
    }
    const double s_first = fam.s_grid.front(), s_last = fam.s_grid.back();
    if (!((x_minus - fam.center(s_first)).norm() < fam.radius(s_first)))
        rep.conditions[2] = {false, "X_- not interior to K_-"};
    else if (!((x_plus - fam.center(s_last)).norm() < fam.radius(s_last)))
        rep.conditions[2] = {false, "X_+ not interior to K_+"};

    const std::vector<Attractor> target{{"X+", x_plus}};
    for (const Vec& p : detail::ball_samples(fam.center(s_last), fam.radius(s_last), boundary_samples)) {
        const BasinLabel l = membership(sys, shift.limit_plus(), p, target, opt);
        if (l.kind != BasinLabel::Kind::Attractor) {
            rep.conditions[3] = {false, "K_+ point x=" + detail::fmt_s(p(0)) + " labelled " + l.name()};
            break;
        }
    }
    return rep;
}

}  // namespace tipscan
