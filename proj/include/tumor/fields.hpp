#pragma once

/**
 * @file fields.hpp
 * @brief Nutrient and pressure fields of the periodic radial tumor, their
 *        boundary derivatives, spherical harmonics and first-order perturbed
 *        surfaces.
 *
 *     sigma*(r, t) = Phi(t) (sinh r / r) R* / sinh R*
 *     p*(r, t)     = gamma/R* + (mu sigma~/6)(r^2 - R*^2) + mu (Phi - sigma*)
 */

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "tumor/errors.hpp"
#include "tumor/periodic.hpp"
#include "tumor/specfun.hpp"
#include "tumor/stability.hpp"

namespace tumor {

namespace detail {

inline constexpr double kLogSinhSwitch = 30.0;

/// (R / r) sinh r / sinh R for 0 <= r <= R, exactly 1 at r = R.
inline double sinh_ratio(double r, double R) {
    if (r == R) return 1.0;
    if (R > kLogSinhSwitch) {
        // sinh r / sinh R = e^{r-R} (1 - e^{-2r}) / (1 - e^{-2R})
        const double num = r == 0.0 ? 2.0 * std::exp(-R) : std::exp(r - R) * (-std::expm1(-2.0 * r)) / r;
        return R * num / (-std::expm1(-2.0 * R));
    }
    const double shr = r == 0.0 ? 1.0 : std::sinh(r) / r;
    return shr * R / std::sinh(R);
}

/// log of i_n(r) = I_{n+1/2}(r) / sqrt(r) up to an n-dependent constant:
/// (sinh r / r) prod_{k<n} r P_k(r).
inline double log_spherical_i(int n, double r) {
    double v = r > kLogSinhSwitch ? r - std::log(2.0 * r) + std::log1p(-std::exp(-2.0 * r))
                                  : std::log(std::sinh(r) / r);
    for (int k = 0; k < n; ++k) v += std::log(r * specfun::pn(k, r));
    return v;
}

/// i_n(r) / i_n(R) for 0 <= r <= R.
inline double spherical_i_ratio(int n, double r, double R) {
    if (r == R) return 1.0;
    if (r == 0.0) return n == 0 ? sinh_ratio(0.0, R) : 0.0;
    return std::exp(log_spherical_i(n, r) - log_spherical_i(n, R));
}

inline void require_inside(const char* who, double r, double R) {
    if (!(r >= 0.0 && r <= R)) {
        throw DomainError(std::string(who) + ": r must lie in [0, R*(t)]");
    }
}

}  // namespace detail

/// Nutrient concentration inside the tumor; equals Phi(t) on the boundary.
inline double sigma_star(const PeriodicSolution& orbit, double r, double t) {
    const double R = orbit(t);
    detail::require_inside("sigma_star", r, R);
    const double phi = orbit.params().schedule(t);
    return r == R ? phi : phi * detail::sinh_ratio(r, R);
}

/// Pressure inside the tumor; equals gamma / R*(t) on the boundary.
inline double p_star(const PeriodicSolution& orbit, double r, double t) {
    const double R = orbit(t);
    detail::require_inside("p_star", r, R);
    const auto& p = orbit.params();
    return p.gamma / R + p.mu * p.sigma_tilde / 6.0 * (r * r - R * R) +
           p.mu * (p.schedule(t) - sigma_star(orbit, r, t));
}

struct BoundaryDerivatives {
    double dsigma_dr;
    double d2sigma_dr2;
    double dp_dr;
    double d2p_dr2;
};

/// Radial derivatives of sigma* and p* at r = R*(t).
inline BoundaryDerivatives boundary_derivatives(const PeriodicSolution& orbit, double t) {
    const auto& p = orbit.params();
    const double R = orbit(t);
    const double phi = p.schedule(t);
    const double P0 = specfun::p0(R);
    const double dR = rhs(p, t, R);
    return {phi * R * P0, phi * (1.0 - 2.0 * P0), -dR, -dR / R - p.mu * phi * R * R * P0 * specfun::pn(1, R)};
}

/// Second form of d2p/dr2 at the boundary: mu sigma~/3 - mu Phi (1 - 2 P_0).
inline double d2p_dr2_alternative(const PeriodicSolution& orbit, double t) {
    const auto& p = orbit.params();
    return p.mu * p.sigma_tilde / 3.0 - p.mu * p.schedule(t) * (1.0 - 2.0 * specfun::p0(orbit(t)));
}

/// Orthonormal associated Legendre function without the Condon-Shortley phase,
/// sqrt((2n+1)/(4 pi) (n-m)!/(n+m)!) P_n^m(cos theta), for 0 <= m <= n.
inline double normalized_legendre(int n, int m, double theta) {
    const double z = std::cos(theta);
    const double s = std::sin(theta);
    double pmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
    for (int k = 1; k <= m; ++k) pmm *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
    if (n == m) return pmm;
    double prev = pmm;
    double cur = z * std::sqrt(2.0 * m + 3.0) * pmm;
    for (int l = m + 2; l <= n; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
        const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                   (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        const double next = a * (z * cur - b * prev);
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Y_{n,m}(theta, phi) = (-1)^m sqrt((2n+1)(n-m)!/(2 (n+m)!)) P_n^m(cos theta) e^{i m phi} / sqrt(2 pi),
/// P_n^m by Rodrigues' formula; Y_{n,-m} = (-1)^m conj(Y_{n,m}).
inline std::complex<double> spherical_harmonic(int n, int m, double theta, double phi) {
    if (n < 0) throw DomainError("spherical_harmonic: degree must be nonnegative");
    if (std::abs(m) > n) throw DomainError("spherical_harmonic: need |m| <= n");
    if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
        throw DomainError("spherical_harmonic: theta must lie in [0, pi]");
    }
    const int am = std::abs(m);
    const double sign = (am % 2 == 0) ? 1.0 : -1.0;
    const std::complex<double> y = sign * normalized_legendre(n, am, theta) * std::polar(1.0, am * phi);
    return m >= 0 ? y : sign * std::conj(y);
}

struct SurfaceMode {
    int n;
    int m;
    double amplitude;  ///< rho_{n,m} at the orbit start

    void validate() const {
        if (n < 0 || std::abs(m) > n) throw DomainError("SurfaceMode: need n >= 0 and |m| <= n");
    }
};

struct AngularGrid {
    int n_theta = 33;  ///< theta_i = pi i / (n_theta - 1)
    int n_phi = 64;    ///< phi_j = 2 pi j / n_phi
};

struct SurfaceSamples {
    std::vector<double> theta;
    std::vector<double> phi;
    std::vector<double> radius;
    double base_radius = 0.0;
    double max_deviation = 0.0;  ///< max |r - R*(t)| over the grid
    std::string warning;
};

/// r(theta, phi) = R*(t) + eps Re sum rho_{n,m}(t) Y_{n,m}, to first order in eps.
inline SurfaceSamples perturbed_surface(const PeriodicSolution& orbit, const std::vector<SurfaceMode>& modes,
                                        double epsilon, double t, const AngularGrid& grid = {}) {
    if (grid.n_theta < 2 || grid.n_phi < 1) throw DomainError("perturbed_surface: grid too small");
    if (!std::isfinite(epsilon)) throw DomainError("perturbed_surface: epsilon must be finite");
    std::vector<double> rho;
    for (const auto& mode : modes) {
        mode.validate();
        rho.push_back(evolve_mode(orbit, mode.n, mode.m, mode.amplitude, t));
    }
    SurfaceSamples out;
    out.base_radius = orbit(t);
    double max_rho = 0.0;
    for (int i = 0; i < grid.n_theta; ++i) {
        const double theta = std::numbers::pi * i / (grid.n_theta - 1);
        for (int j = 0; j < grid.n_phi; ++j) {
            const double phi = 2.0 * std::numbers::pi * j / grid.n_phi;
            std::complex<double> sum = 0.0;
            for (std::size_t k = 0; k < modes.size(); ++k) {
                sum += rho[k] * spherical_harmonic(modes[k].n, modes[k].m, theta, phi);
            }
            max_rho = std::max(max_rho, std::abs(sum.real()));
            out.theta.push_back(theta);
            out.phi.push_back(phi);
            out.radius.push_back(out.base_radius + epsilon * sum.real());
        }
    }
    out.max_deviation = std::abs(epsilon) * max_rho;
    if (out.max_deviation > 0.1 * orbit.r_min()) {
        out.warning = "perturbation exceeds 10% of R_min; first-order surface is not reliable";
    }
    return out;
}

/// Nutrient perturbation profile w_{n,m}(r, t) for amplitude rho at time t.
inline double w_profile(const PeriodicSolution& orbit, int n, double rho, double r, double t) {
    const double R = orbit(t);
    detail::require_inside("w_profile", r, R);
    return -boundary_derivatives(orbit, t).dsigma_dr * detail::spherical_i_ratio(n, r, R) * rho;
}

/// Pressure perturbation profile q_{n,m}(r, t) for amplitude rho at time t.
inline double q_profile(const PeriodicSolution& orbit, int n, double rho, double r, double t) {
    const double R = orbit(t);
    detail::require_inside("q_profile", r, R);
    const auto& p = orbit.params();
    const auto bd = boundary_derivatives(orbit, t);
    const double bracket =
        (n * (n + 1) / 2.0 - 1.0) * p.gamma * rho / (R * R) - bd.dp_dr * rho - p.mu * bd.dsigma_dr * rho;
    return std::pow(r / R, n) * bracket + p.mu * bd.dsigma_dr * detail::spherical_i_ratio(n, r, R) * rho;
}

/// dq_{n,m}/dr at r = R*(t) in closed form:
/// { n/R [gamma/R^2 (n(n+1)/2 - 1) + dR/dt] + mu Phi R^2 P_0 P_n } rho.
inline double q_boundary_slope(const PeriodicSolution& orbit, int n, double rho, double t) {
    const auto& p = orbit.params();
    const double R = orbit(t);
    const double dR = rhs(p, t, R);
    return (n / R * (p.gamma / (R * R) * (n * (n + 1) / 2.0 - 1.0) + dR) +
            p.mu * p.schedule(t) * R * R * specfun::p0(R) * specfun::pn(n, R)) *
           rho;
}

struct FieldSample {
    double r;
    double t;
    double sigma;
    double p;
};

/// sigma* and p* on n_r radii r = R*(t) i / (n_r - 1) at n_t times spanning one period.
inline std::vector<FieldSample> sample_fields(const PeriodicSolution& orbit, int n_r, int n_t) {
    if (n_r < 2 || n_t < 1) throw DomainError("sample_fields: need n_r >= 2 and n_t >= 1");
    std::vector<FieldSample> out;
    out.reserve(static_cast<std::size_t>(n_r) * n_t);
    for (int j = 0; j < n_t; ++j) {
        const double t = orbit.t0() + orbit.period() * j / n_t;
        const double R = orbit(t);
        for (int i = 0; i < n_r; ++i) {
            const double r = i == n_r - 1 ? R : R * i / (n_r - 1);
            out.push_back({r, t, sigma_star(orbit, r, t), p_star(orbit, r, t)});
        }
    }
    return out;
}

}  // namespace tumor
