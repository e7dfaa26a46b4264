#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "errors.hpp"
#include "linalg.hpp"

namespace tipscan {

/// Autonomous rule x -> f(x, lambda) with dimension metadata.
///
/// Evaluators must be pure: the same (state, params) always yields the same bits.
struct MapSystem {
    using Evaluator = std::function<Vec(const Vec&, const Vec&)>;
    using Jacobian = std::function<Mat(const Vec&, const Vec&)>;

    std::string name;
    int dimension = 1;
    int param_dimension = 1;
    Evaluator evaluator;
    Jacobian jacobian;  // optional; finite differences are used when empty

    Vec operator()(const Vec& x, const Vec& lambda) const { return evaluator(x, lambda); }
    bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

/// Smooth parameter shift s -> Lambda(s) with limits lambda_-/lambda_+.
///
/// value() returns the limits exactly once |s| >= saturation(); raw() is the unclamped
/// formula, kept for checking that clamping is consistent with the limits.
class ParameterShift {
public:
    using Fn = std::function<Vec(double)>;

    ParameterShift() = default;
    ParameterShift(std::string name, Fn raw, Vec limit_minus, Vec limit_plus, double saturation = 20.0)
        : name_(std::move(name)),
          raw_(std::move(raw)),
          minus_(std::move(limit_minus)),
          plus_(std::move(limit_plus)),
          saturation_(saturation) {
        if (!(saturation_ > 0.0)) throw Error("shift saturation must be positive");
        if (minus_.size() != plus_.size()) throw Error("shift limits differ in dimension");
    }

    Vec value(double s) const {
        if (s <= -saturation_) return minus_;
        if (s >= saturation_) return plus_;
        return raw_(s);
    }
    Vec operator()(double s) const { return value(s); }
    Vec raw(double s) const { return raw_(s); }

    /// Central difference of the clamped value; exactly zero in the saturated tails.
    Vec derivative(double s) const {
        if (s <= -saturation_ || s >= saturation_) return Vec::Zero(minus_.size());
        const double h = 1e-6 * std::max(1.0, std::abs(s));
        return (value(s + h) - value(s - h)) / (2.0 * h);
    }

    const std::string& name() const { return name_; }
    const Vec& limit_minus() const { return minus_; }
    const Vec& limit_plus() const { return plus_; }
    double saturation() const { return saturation_; }
    int dimension() const { return static_cast<int>(minus_.size()); }

    static ParameterShift constant(const Vec& lambda, double saturation = 20.0) {
        return ParameterShift("constant", [lambda](double) { return lambda; }, lambda, lambda, saturation);
    }

    /// base + amplitude * tanh(s)
    static ParameterShift tanh_shift(double base, double amplitude, double saturation = 20.0) {
        return ParameterShift(
            "tanh", [=](double s) { return scalar_vec(base + amplitude * std::tanh(s)); },
            scalar_vec(base - amplitude), scalar_vec(base + amplitude), saturation);
    }

    /// amplitude * sech(s^power), power a positive even integer so both limits are 0.
    static ParameterShift sech_power(double amplitude, int power, double saturation = 20.0) {
        if (power <= 0 || power % 2 != 0) throw Error("sech_power requires a positive even power");
        return ParameterShift(
            "sech_power",
            [=](double s) { return scalar_vec(amplitude * sech(std::pow(s, power))); },
            scalar_vec(0.0), scalar_vec(0.0), saturation);
    }

    /// a * sech(s) + b * tanh(s)
    static ParameterShift sech_tanh(double a, double b, double saturation = 20.0) {
        return ParameterShift(
            "sech_tanh", [=](double s) { return scalar_vec(a * sech(s) + b * std::tanh(s)); },
            scalar_vec(-b), scalar_vec(b), saturation);
    }

    /// sech without overflowing cosh for large arguments.
    static double sech(double t) {
        const double e = std::exp(-std::abs(t));
        return 2.0 * e / (1.0 + e * e);
    }

private:
    std::string name_;
    Fn raw_;
    Vec minus_;
    Vec plus_;
    double saturation_ = 20.0;
};

/// Rate and index window for x_{n+1} = f(x_n, Lambda(r n)).
struct RateConfig {
    double r = 1.0;
    long n_min = -1;
    long n_max = 1;

    void validate() const {
        if (!(r > 0.0)) throw Error("rate must be positive");
        if (!(n_min < 0 && n_max > 0)) throw Error("index window must satisfy n_min < 0 < n_max");
    }
};

/// One step of the nonautonomous map at index n.
inline Vec step(const MapSystem& sys, const ParameterShift& shift, double r, long n, const Vec& x) {
    Vec next = sys(x, shift.value(r * static_cast<double>(n)));
    if (!all_finite(next)) throw NumericalOverflow(n, "map output from " + sys.name);
    return next;
}

namespace detail {

inline double fd_step(double xi) {
    return std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(xi));
}

template <class F>
Mat central_difference(F&& f, const Vec& x, Eigen::Index rows) {
    Mat J(rows, x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = fd_step(x(i));
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        J.col(i) = (f(xp) - f(xm)) / (xp(i) - xm(i));
    }
    return J;
}

}  // namespace detail

/// D_x f(x, lambda): analytic when supplied, central differences otherwise.
inline Mat jacobian_at(const MapSystem& sys, const Vec& x, const Vec& lambda) {
    if (x.size() != sys.dimension) throw Error("state dimension mismatch for " + sys.name);
    Mat J = sys.has_jacobian()
                ? sys.jacobian(x, lambda)
                : detail::central_difference([&](const Vec& y) { return sys(y, lambda); }, x, sys.dimension);
    if (!all_finite(J)) throw NumericalOverflow(0, "jacobian of " + sys.name);
    return J;
}

/// D_lambda f(x, lambda) by central differences.
inline Mat parameter_jacobian(const MapSystem& sys, const Vec& x, const Vec& lambda) {
    return detail::central_difference([&](const Vec& l) { return sys(x, l); }, lambda, sys.dimension);
}

}  // namespace tipscan
