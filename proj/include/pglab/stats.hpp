#pragma once

#include <cmath>
#include <limits>

#include "pglab/errors.hpp"

namespace pglab {

namespace detail {

// Continued fraction for the incomplete beta function, modified Lentz method.
inline double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw ValueError("incomplete beta: continued fraction failed to converge");
}

}  // namespace detail

// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValueError("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw ValueError("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
    return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Two-sided p-value for a Student-t statistic with df degrees of freedom.
inline double t_test_p(double t, double df) {
    if (!(df > 0.0)) throw ValueError("t_test_p: df must be positive");
    if (std::isnan(t)) throw ValueError("t_test_p: t is NaN");
    if (std::isinf(t)) return 0.0;
    const double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

// Upper-tail p-value for an F statistic with (df1, df2) degrees of freedom.
inline double f_test_p(double f, double df1, double df2) {
    if (!(df1 > 0.0) || !(df2 > 0.0)) throw ValueError("f_test_p: degrees of freedom must be positive");
    if (std::isnan(f)) throw ValueError("f_test_p: F is NaN");
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    const double x = df2 / (df2 + df1 * f);
    return incomplete_beta(df2 / 2.0, df1 / 2.0, x);
}

}  // namespace pglab
