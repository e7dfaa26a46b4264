#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace tipscan {

/// Largest state/parameter dimension the small-vector types hold without allocating.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

inline Vec vec(std::initializer_list<double> values) {
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

inline Vec scalar_vec(double x) {
    Vec v(1);
    v(0) = x;
    return v;
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

namespace detail {

// Roots of x^2 + b x + c, avoiding cancellation for real roots.
inline std::vector<std::complex<double>> quadratic_roots(double b, double c) {
    const double disc = b * b / 4.0 - c;
    if (disc >= 0.0) {
        const double q = -(b / 2.0 + std::copysign(std::sqrt(disc), b));
        if (q == 0.0) return {0.0, 0.0};
        return {q, c / q};
    }
    const double im = std::sqrt(-disc);
    return {{-b / 2.0, im}, {-b / 2.0, -im}};
}

// Roots of x^3 + a x^2 + b x + c.
inline std::vector<std::complex<double>> cubic_roots(double a, double b, double c) {
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double shift = -a / 3.0;
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    std::vector<std::complex<double>> roots;
    if (disc < 0.0) {
        // three distinct real roots
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots.emplace_back(m * std::cos(theta - 2.0 * M_PI * k / 3.0) + shift, 0.0);
        return roots;
    }
    const double sq = std::sqrt(disc);
    const double u = std::cbrt(-q / 2.0 + sq);
    const double v = std::cbrt(-q / 2.0 - sq);
    const double real = u + v + shift;
    roots.emplace_back(real, 0.0);
    // remaining pair from deflation: x^2 + (a + real) x + (-c / real) or via Vieta
    const double bb = a + real;
    const double cc = b + real * bb;
    auto rest = quadratic_roots(bb, cc);
    roots.insert(roots.end(), rest.begin(), rest.end());
    return roots;
}

}  // namespace detail

/// Eigenvalues of a square matrix of size 1..3 (closed-form characteristic roots).
inline std::vector<std::complex<double>> eigenvalues(const Mat& A) {
    const auto n = A.rows();
    if (A.cols() != n || n < 1) throw UnsupportedDimension(n);
    switch (n) {
        case 1:
            return {A(0, 0)};
        case 2: {
            const double tr = A(0, 0) + A(1, 1);
            const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
            return detail::quadratic_roots(-tr, det);
        }
        case 3: {
            const double tr = A.trace();
            const double minors = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0) + A(0, 0) * A(2, 2) -
                                  A(0, 2) * A(2, 0) + A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
            const double det = A.determinant();
            return detail::cubic_roots(-tr, minors, -det);
        }
        default:
            throw UnsupportedDimension(n);
    }
}

/// max |eigenvalue|. For 2x2 complex pairs this is sqrt(det), exact up to rounding.
inline double spectral_radius(const Mat& A) {
    if (A.rows() == 2 && A.cols() == 2) {
        const double tr = A(0, 0) + A(1, 1);
        const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
        if (tr * tr / 4.0 - det < 0.0) return std::sqrt(det);
    }
    double rho = 0.0;
    for (const auto& z : eigenvalues(A)) rho = std::max(rho, std::abs(z));
    return rho;
}

/// Largest real part over the eigenvalues (flow stability indicator).
inline double max_real_part(const Mat& A) {
    double m = -INFINITY;
    for (const auto& z : eigenvalues(A)) m = std::max(m, z.real());
    return m;
}

}  // namespace tipscan
