#pragma once
// Special functions behind the confidence measure: log-gamma, log-beta,
// log-binomial coefficients and the regularized incomplete beta function.
//
// Everything here is a pure function of its arguments.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "cgv/error.hpp"

namespace cgv::specialfn {

struct SpecialFnConfig {
    double rel_tolerance = 1e-14;  // continued-fraction stopping criterion
    int max_iterations = 10000;

    void validate() const {
        if (!(rel_tolerance > 0.0) || !std::isfinite(rel_tolerance)) {
            throw DomainError("SpecialFnConfig.rel_tolerance must be positive and finite");
        }
        if (max_iterations < 100) {
            throw DomainError("SpecialFnConfig.max_iterations must be at least 100");
        }
    }
};

namespace detail {

inline std::string fmt_args(double x) { return std::to_string(x); }

inline double lgamma_threadsafe(double x) {
#if defined(__GLIBC__) || defined(__APPLE__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!std::isfinite(x) || x <= 0.0) {
        throw DomainError("log_gamma: argument must be positive and finite, got " + detail::fmt_args(x));
    }
    return detail::lgamma_threadsafe(x);
}

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
inline double log_beta(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0) {
        throw DomainError("log_beta: parameters must be positive and finite");
    }
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

/// ln C(n, k). Exact integer arithmetic for n <= 20, log-gamma otherwise.
inline double log_binomial(std::int64_t n, std::int64_t k) {
    if (n < 0 || k < 0 || k > n) {
        throw DomainError("log_binomial: require 0 <= k <= n, got n=" + std::to_string(n) +
                          " k=" + std::to_string(k));
    }
    if (n <= 20) {
        // C(20, 10) = 184756; every intermediate fits in 64 bits.
        const std::int64_t kk = k < n - k ? k : n - k;
        std::uint64_t c = 1;
        for (std::int64_t j = 1; j <= kk; ++j) {
            c = c * static_cast<std::uint64_t>(n - kk + j) / static_cast<std::uint64_t>(j);
        }
        return std::log(static_cast<double>(c));
    }
    return log_gamma(static_cast<double>(n) + 1.0) - log_gamma(static_cast<double>(k) + 1.0) -
           log_gamma(static_cast<double>(n - k) + 1.0);
}

namespace detail {

inline constexpr double kStirlingMin = 15.0;

// ln Gamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2] for z >= kStirlingMin.
// Truncation error of the series is below 3e-16 there.
inline double stirling_correction(double z) {
    const double r = 1.0 / z;
    const double r2 = r * r;
    return r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))));
}

// ln[x^a (1-x)^b / B(a, b)] for 0 < x < 1.
//
// Naively this subtracts log-gamma values of order a ln a, which costs
// absolute accuracy once a or b reaches the hundreds. Large parameters go
// through Stirling's formula instead, with the leading terms grouped so that
// they cancel analytically near the mode x = a / (a + b).
inline double log_beta_prefactor(double x, double a, double b) {
    const double log_x = std::log(x);
    const double log_1mx = std::log1p(-x);
    const double s = a + b;
    if (a >= kStirlingMin && b >= kStirlingMin) {
        // x (a+b) / a = 1 + d and (1-x)(a+b) / b = 1 - a d / b
        const double d = std::fma(x, s, -a) / a;
        const double delta = stirling_correction(a) + stirling_correction(b) - stirling_correction(s);
        return a * std::log1p(d) + b * std::log1p(-a * d / b) + 0.5 * std::log(a * b / s) -
               0.5 * std::log(2.0 * M_PI) - delta;
    }
    if (a >= kStirlingMin || b >= kStirlingMin) {
        // `small` pairs with log_u, `large` with log_v
        const bool a_small = a < b;
        const double small = a_small ? a : b;
        const double large = a_small ? b : a;
        const double log_u = a_small ? log_x : log_1mx;
        const double log_v = a_small ? log_1mx : log_x;
        return small * (log_u + std::log(s)) + large * log_v + (large - 0.5) * std::log1p(small / large) - small -
               log_gamma(small) - stirling_correction(large) + stirling_correction(s);
    }
    return a * log_x + b * log_1mx - log_beta(a, b);
}

// Continued fraction for I_x(a,b) evaluated with the modified Lentz scheme.
// Converges rapidly for x < (a+1)/(a+b+2).
//
// Runs in long double: when one parameter is large the recurrence loses
// roughly log10(a+b) digits to rounding, which in double would exceed the
// 1e-12 budget beyond a+b ~ 1e4.
inline double beta_continued_fraction(double a_in, double b_in, double x_in, const SpecialFnConfig& cfg) {
    using real = long double;
    constexpr real tiny = 1e-300L;
    const real a = a_in;
    const real b = b_in;
    const real x = x_in;
    const real qab = a + b;
    const real qap = a + 1.0L;
    const real qam = a - 1.0L;

    real c = 1.0L;
    real d = 1.0L - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0L / d;
    real h = d;

    for (int m = 1; m <= cfg.max_iterations; ++m) {
        const real md = static_cast<real>(m);
        const real m2 = 2.0L * md;

        // even step
        real aa = md * (b - md) * x / ((qam + m2) * (a + m2));
        d = 1.0L + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0L + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0L / d;
        h *= d * c;

        // odd step
        aa = -(a + md) * (qab + md) * x / ((a + m2) * (qap + m2));
        d = 1.0L + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0L + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0L / d;
        const real del = d * c;
        h *= del;
        if (std::fabs(del - 1.0L) <= cfg.rel_tolerance) {
            return static_cast<double>(h);
        }
    }
    throw ConvergenceError("reg_inc_beta: continued fraction did not converge within " +
                           std::to_string(cfg.max_iterations) + " iterations (a=" + std::to_string(a_in) +
                           ", b=" + std::to_string(b_in) + ", x=" + std::to_string(x_in) + ")");
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b), i.e. the Beta(a, b) CDF at x.
///
/// The continued fraction is applied directly when x < (a+1)/(a+b+2) and to
/// the reflected form 1 - I_{1-x}(b, a) otherwise. The prefactor
/// x^a (1-x)^b / B(a,b) is assembled in log space so large pseudo-counts do
/// not underflow. Throws ConvergenceError rather than returning a truncated
/// value.
inline double reg_inc_beta(double x, double a, double b, const SpecialFnConfig& cfg = {}) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
        throw DomainError("reg_inc_beta: x must lie in [0, 1], got " + std::to_string(x));
    }
    if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0) {
        throw DomainError("reg_inc_beta: parameters must be positive and finite");
    }
    cfg.validate();
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double front = std::exp(detail::log_beta_prefactor(x, a, b));

    double result = 0.0;
    if (x < (a + 1.0) / (a + b + 2.0)) {
        result = front * detail::beta_continued_fraction(a, b, x, cfg) / a;
    } else {
        result = 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x, cfg) / b;
    }
    if (result < 0.0) return 0.0;
    if (result > 1.0) return 1.0;
    return result;
}

}  // namespace cgv::specialfn
