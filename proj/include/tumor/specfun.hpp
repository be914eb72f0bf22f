#pragma once

/**
 * @file specfun.hpp
 * @brief Ratios of modified Bessel functions of half-integer order.
 *
 * The radial and perturbation dynamics only ever need
 *
 *     P_n(r) = I_{n+3/2}(r) / (r I_{n+1/2}(r)),   n = 0, 1, 2, ...
 *
 * so everything here works with ratios. Three evaluation branches:
 *   - r < kSeriesSwitch: power series of I_nu, ratio of two hypergeometric sums;
 *   - r large compared with n^2: the (terminating) Hankel expansion of I_{n+1/2};
 *   - otherwise: continued fraction for I_{nu+1}/I_nu (modified Lentz).
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tumor/errors.hpp"

namespace tumor::specfun {

inline constexpr int kDefaultNMax = 64;
inline constexpr double kSeriesSwitch = 1e-3;

namespace detail {

inline void require_positive(double r, const char* who) {
    if (!std::isfinite(r) || r <= 0.0) {
        throw DomainError(std::string(who) + ": argument must be finite and positive");
    }
}

inline void require_order(int n, int n_max, const char* who) {
    if (n < 0) {
        throw DomainError(std::string(who) + ": order must be nonnegative");
    }
    if (n > n_max) {
        throw CapabilityError(std::string(who) + ": order " + std::to_string(n) +
                              " exceeds n_max = " + std::to_string(n_max));
    }
}

// S_nu(z) = sum_k z^k / (k! (nu+1)_k) with z = r^2/4, and dS/dz.
struct SeriesValue {
    double s;
    double ds_dz;
};

inline SeriesValue hypergeometric_sum(double nu, double z) {
    // u_k = z^{k-1} / (k! (nu+1)_k), so term_k = z u_k
    double u = 1.0 / (nu + 1.0);
    double s = 1.0 + z * u;
    double ds = u;
    for (int k = 2; k < 200; ++k) {
        u *= z / (k * (nu + k));
        s += z * u;
        ds += k * u;
        if (k * u < std::numeric_limits<double>::epsilon() * 1e-3 * ds) break;
    }
    return {s, ds};
}

// I_{n+1/2}(r) sqrt(2 pi r) e^{-r} without the e^{-2r} tail:
// sum_{k=0}^{n} (-1)^k (n+k)! / (k! (n-k)!) (2r)^{-k}.
inline double hankel_sum(int n, double r) {
    double term = 1.0;
    double s = 1.0;
    for (int k = 1; k <= n; ++k) {
        term *= -static_cast<double>(n + k) * static_cast<double>(n - k + 1) / (2.0 * r * k);
        s += term;
    }
    return s;
}

inline bool use_hankel(int n, double r) {
    return r > 40.0 && r > static_cast<double>(n + 1) * static_cast<double>(n + 2);
}

}  // namespace detail

/// I_{nu+1}(r) / I_nu(r) for nu >= 0, r > 0, by the continued fraction
/// 1/(2(nu+1)/r + 1/(2(nu+2)/r + ...)). Needs roughly r iterations for large r.
inline double bessel_ratio(double nu, double r) {
    detail::require_positive(r, "bessel_ratio");
    if (!(nu >= 0.0)) throw DomainError("bessel_ratio: order must be nonnegative");

    constexpr double tiny = 1e-300;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    double f = tiny;
    double c = f;
    double d = 0.0;
    const long max_iter = 1000 + static_cast<long>(20.0 * (r + nu));
    for (long k = 1; k <= max_iter; ++k) {
        const double b = 2.0 * (nu + static_cast<double>(k)) / r;
        d = b + d;
        if (d == 0.0) d = tiny;
        c = b + 1.0 / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < eps) return f;
    }
    throw AccuracyError("bessel_ratio: continued fraction did not converge");
}

/// I_{n+3/2}(r) / I_{n+1/2}(r), branch-selected.
inline double half_integer_ratio(int n, double r) {
    if (r < kSeriesSwitch) {
        const double nu = n + 0.5;
        const double z = 0.25 * r * r;
        return r / (2.0 * n + 3.0) * detail::hypergeometric_sum(nu + 1.0, z).s /
               detail::hypergeometric_sum(nu, z).s;
    }
    if (detail::use_hankel(n, r)) {
        return detail::hankel_sum(n + 1, r) / detail::hankel_sum(n, r);
    }
    return bessel_ratio(n + 0.5, r);
}

/// P_0(r) = coth(r)/r - 1/r^2.
inline double p0(double r) {
    detail::require_positive(r, "p0");
    if (r < 1.0) {
        // closed form cancels ~ 1/r^2 digits here
        const double z = 0.25 * r * r;
        return detail::hypergeometric_sum(1.5, z).s / (3.0 * detail::hypergeometric_sum(0.5, z).s);
    }
    return 1.0 / (r * std::tanh(r)) - 1.0 / (r * r);
}

/// P_n(r) = I_{n+3/2}(r) / (r I_{n+1/2}(r)); 0 < P_n <= 1/(2n+3).
inline double pn(int n, double r, int n_max = kDefaultNMax) {
    detail::require_order(n, n_max, "pn");
    detail::require_positive(r, "pn");
    if (r < kSeriesSwitch) {
        const double nu = n + 0.5;
        const double z = 0.25 * r * r;
        return detail::hypergeometric_sum(nu + 1.0, z).s /
               ((2.0 * n + 3.0) * detail::hypergeometric_sum(nu, z).s);
    }
    return half_integer_ratio(n, r) / r;
}

/// dP_n/dr. From (d/dr - nu/r) I_nu = I_{nu+1}:
///   P_n' = [1 - (2n+3) P_n - r^2 P_n^2] / r.
/// Below r = 1 the bracket cancels, so the series is differentiated instead.
inline double pn_derivative(int n, double r, int n_max = kDefaultNMax) {
    detail::require_order(n, n_max, "pn_derivative");
    detail::require_positive(r, "pn_derivative");
    if (r < 1.0) {
        const double nu = n + 0.5;
        const double z = 0.25 * r * r;
        const auto lo = detail::hypergeometric_sum(nu, z);
        const auto hi = detail::hypergeometric_sum(nu + 1.0, z);
        const double d_dz = (hi.ds_dz * lo.s - hi.s * lo.ds_dz) / (lo.s * lo.s);
        return d_dz * 0.5 * r / (2.0 * n + 3.0);
    }
    if (n == 0) {
        const double s = std::sinh(r);
        return -1.0 / (r * r * std::tanh(r)) - 1.0 / (r * s * s) + 2.0 / (r * r * r);
    }
    const double p = pn(n, r, n_max);
    return (1.0 - (2.0 * n + 3.0) * p - r * r * p * p) / r;
}

/// Unique r > 0 with P_0(r) = y, for y in (0, 1/3).
inline double p0_inverse(double y) {
    if (!std::isfinite(y) || y <= 0.0 || y >= 1.0 / 3.0) {
        throw DomainError("p0_inverse: argument must lie in (0, 1/3)");
    }
    double lo = 1e-8;
    double hi = std::max(10.0, 3.0 / y);
    if (p0(lo) <= y) return lo;

    double r = 0.5 * (lo + hi);
    for (int iter = 0; iter < 500; ++iter) {
        const double f = p0(r) - y;
        if (f == 0.0) return r;
        if (f > 0.0) {
            lo = r;
        } else {
            hi = r;
        }
        const double df = pn_derivative(0, r);
        double next = r - f / df;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - r) <= 4.0 * std::numeric_limits<double>::epsilon() * r) return next;
        r = next;
    }
    return r;
}

}  // namespace tumor::specfun
