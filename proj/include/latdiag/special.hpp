#pragma once

#include <cmath>
#include <limits>

#include "latdiag/error.hpp"

namespace latdiag::special {

// Digamma via upward recurrence into the asymptotic region, then the
// Bernoulli expansion. Absolute accuracy ~1e-14 for x > 0.
inline double digamma(double x) {
    if (!(x > 0.0)) throw NumericError("digamma: argument must be positive");
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // ln x - 1/(2x) - sum B_2n / (2n x^2n)
    double series = inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                    inv2 * (1.0 / 252.0 -
                    inv2 * (1.0 / 240.0 -
                    inv2 * (1.0 / 132.0 -
                    inv2 * (691.0 / 32760.0))))));
    return result + std::log(x) - 0.5 * inv - series;
}

namespace detail {

// Continued fraction for the incomplete beta function, modified Lentz method.
inline double beta_cont_frac(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-15;
    constexpr int kMaxIter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
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
    throw NumericError("incomplete beta: continued fraction did not converge");
}

} // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double ibeta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw NumericError("ibeta: a and b must be positive");
    }
    if (x < 0.0 || x > 1.0) throw NumericError("ibeta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_cont_frac(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

// Student-t CDF, P(T <= t) with df degrees of freedom.
inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw NumericError("student_t_cdf: df must be positive");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double x = df / (df + t * t);
    const double tail = 0.5 * ibeta(0.5 * df, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

// Two-sided p-value for a t statistic: P(|T| >= |t|).
inline double student_t_two_sided_p(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return ibeta(0.5 * df, 0.5, df / (df + t * t));
}

// Inverse CDF by bisection on the monotone CDF. Accuracy well below 1e-10.
inline double student_t_quantile(double p, double df) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw NumericError("student_t_quantile: p must lie in (0, 1)");
    }
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -student_t_quantile(1.0 - p, df);
    double lo = 0.0, hi = 1.0;
    while (student_t_cdf(hi, df) < p) {
        hi *= 2.0;
        if (hi > 1e12) throw NumericError("student_t_quantile: quantile out of range");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (student_t_cdf(mid, df) < p) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace latdiag::special
