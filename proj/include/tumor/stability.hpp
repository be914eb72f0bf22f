#pragma once

/**
 * @file stability.hpp
 * @brief Linear stability of the periodic radial solution under spherical
 *        harmonic surface perturbations rho_{n,m}(t) Y_{n,m}.
 *
 * Each mode evolves as
 *
 *     rho(t) = rho(0) (R*(0)/R*(t))^{n-1} exp(-int_0^t g_n),
 *     g_n    = gamma n (n(n+1)/2 - 1) / R*^3 - mu Phi R*^2 P_0 (P_1 - P_n),
 *
 * so the per-period envelope is exp(-Lambda_n T) with Lambda_n the mean of g_n.
 * Splitting int g_n = A_n - mu B_n gives the threshold theta_n = A_n / B_n.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "tumor/errors.hpp"
#include "tumor/periodic.hpp"
#include "tumor/quadrature.hpp"
#include "tumor/specfun.hpp"

namespace tumor {

inline constexpr int kGaussNodesPerSegment = 8;
inline constexpr double kMarginalBand = 1e-8;

namespace detail {

inline const quad::GaussRule& segment_rule() {
    static const quad::GaussRule rule = quad::gauss_legendre(kGaussNodesPerSegment);
    return rule;
}

/// int_{t0}^{t0 + tau} f(t, R*(t)) dt, segment by segment on the stored orbit.
template <typename F>
double orbit_integral(const PeriodicSolution& orbit, F&& f, double tau) {
    const auto& rule = segment_rule();
    auto g = [&](double t) { return f(t, orbit(t)); };
    const double h = orbit.period() / orbit.segments();
    double total = 0.0;
    int i = 0;
    for (; i < orbit.segments() && (i + 1) * h <= tau; ++i) {
        total += quad::integrate(rule, g, orbit.node_time(i), orbit.node_time(i + 1));
    }
    if (i < orbit.segments() && tau > i * h) {
        total += quad::integrate(rule, g, orbit.node_time(i), orbit.t0() + tau);
    }
    return total;
}

inline double surface_weight(int n) { return n * (n * (n + 1) / 2.0 - 1.0); }

}  // namespace detail

/// Period integrals A_n = gamma n(n(n+1)/2 - 1) int R*^-3 and
/// B_n = int Phi R*^2 P_0 (P_1 - P_n), so that Lambda_n(mu) = (A_n - mu B_n) / T.
struct ModeIntegrals {
    int n;
    double surface;        ///< A_n
    double proliferation;  ///< B_n
    double period;

    double lambda(double mu) const { return (surface - mu * proliferation) / period; }
};

struct ModeExponent {
    int n;
    double lambda_bar;          ///< mean decay rate over a period
    double floquet_multiplier;  ///< exp(-lambda_bar T)
};

inline ModeIntegrals mode_integrals(const PeriodicSolution& orbit, int n) {
    if (n < 0) throw DomainError("mode_integrals: mode index must be nonnegative");
    const auto& params = orbit.params();
    const double T = orbit.period();
    ModeIntegrals mi{n, 0.0, 0.0, T};
    // n = 1: both integrands vanish identically
    if (n == 1) return mi;
    if (n >= 2) {
        mi.surface = params.gamma * detail::surface_weight(n) *
                     detail::orbit_integral(orbit, [](double, double r) { return 1.0 / (r * r * r); }, T);
    }
    mi.proliferation = detail::orbit_integral(
        orbit,
        [&](double t, double r) {
            return params.schedule(t) * r * r * specfun::p0(r) * (specfun::pn(1, r) - specfun::pn(n, r));
        },
        T);
    return mi;
}

inline ModeExponent mode_exponent(const PeriodicSolution& orbit, int n) {
    const double lam = mode_integrals(orbit, n).lambda(orbit.params().mu);
    return {n, lam, std::exp(-lam * orbit.period())};
}

/// theta_n = A_n / B_n: mode n decays iff mu < theta_n.
inline double theta_n(const PeriodicSolution& orbit, int n) {
    if (n < 2) throw DomainError("theta_n: defined for n >= 2 (theta_0 = theta_1 = infinity)");
    const auto mi = mode_integrals(orbit, n);
    if (!(mi.proliferation > 0.0)) throw AccuracyError("theta_n: nonpositive denominator");
    return mi.surface / mi.proliferation;
}

/// rho_{n,m}(t) from rho_{n,m}(t0) = rho0, where t0 is the start of the
/// orbit's stored period. Independent of m.
inline double evolve_mode(const PeriodicSolution& orbit, int n, int m, double rho0, double t) {
    if (n < 0) throw DomainError("evolve_mode: mode index must be nonnegative");
    if (std::abs(m) > n) throw DomainError("evolve_mode: need |m| <= n");
    const double elapsed = t - orbit.t0();
    if (!(elapsed >= 0.0)) throw DomainError("evolve_mode: t must not precede the orbit start");
    if (n == 1) return rho0;

    const double T = orbit.period();
    double k = std::floor(elapsed / T);
    double tau = elapsed - k * T;
    if (tau >= T * (1.0 - 1e-14)) {
        k += 1.0;
        tau = 0.0;
    }
    const auto& params = orbit.params();
    const double mu = params.mu;
    const double weight = params.gamma * detail::surface_weight(n);
    double exponent = k * T * mode_integrals(orbit, n).lambda(mu);
    if (tau > 0.0) {
        exponent += detail::orbit_integral(
            orbit,
            [&](double s, double r) {
                return weight / (r * r * r) -
                       mu * params.schedule(s) * r * r * specfun::p0(r) * (specfun::pn(1, r) - specfun::pn(n, r));
            },
            tau);
    }
    const double prefactor = std::pow(orbit.r_star0() / orbit(t), n - 1);
    return rho0 * prefactor * std::exp(-exponent);
}

struct DecayBoundReport {
    double delta_hat = 0.0;        ///< min_n Lambda_n / (n^3 + 1)
    int worst_n = 0;
    double delta_candidate = 0.0;  ///< (1 - mu/theta_2) gamma / (4 R_max^3)
    double theta2 = 0.0;
    bool all_positive = true;
    bool passed = false;           ///< delta_hat >= (1 - slack) delta_candidate and all Lambda_n > 0
    std::vector<ModeExponent> exponents;
};

/// Checks Lambda_n >= delta (n^3 + 1) over n in [n_lo, n_hi] in the stable regime.
inline DecayBoundReport mode_decay_bound_check(const PeriodicSolution& orbit, int n_lo = 2, int n_hi = 32,
                                               double slack = 0.05) {
    if (n_lo < 2 || n_hi < n_lo) throw DomainError("mode_decay_bound_check: need 2 <= n_lo <= n_hi");
    const auto& params = orbit.params();
    DecayBoundReport rep;
    rep.theta2 = theta_n(orbit, 2);
    if (!(params.mu < rep.theta2)) {
        throw DomainError("mode_decay_bound_check: requires mu < theta_2 (stable regime)");
    }
    rep.delta_candidate = (1.0 - params.mu / rep.theta2) * params.gamma / (4.0 * std::pow(orbit.r_max(), 3));
    rep.delta_hat = std::numeric_limits<double>::infinity();
    for (int n = n_lo; n <= n_hi; ++n) {
        const auto e = mode_exponent(orbit, n);
        rep.exponents.push_back(e);
        if (!(e.lambda_bar > 0.0)) rep.all_positive = false;
        const double ratio = e.lambda_bar / (std::pow(n, 3) + 1.0);
        if (ratio < rep.delta_hat) {
            rep.delta_hat = ratio;
            rep.worst_n = n;
        }
    }
    rep.passed = rep.all_positive && rep.delta_hat >= (1.0 - slack) * rep.delta_candidate;
    return rep;
}

struct MuStar {
    double value;                          ///< theta_2 on the orbit at the given mu
    std::optional<double> self_consistent; ///< root of mu = theta_2(mu), when requested
    double self_consistent_residual = 0.0; ///< |mu - theta_2(mu)| at that root
};

/// theta_2 at the given mu, and optionally the fixed point mu = theta_2(mu).
inline MuStar mu_star(const ModelParams& params, bool self_consistent = false,
                      const PeriodicOptions& popt = {}) {
    MuStar out{theta_n(find_periodic(params, popt), 2), std::nullopt, 0.0};
    if (!self_consistent) return out;

    constexpr double lo_limit = 1e-6, hi_limit = 1e6;
    auto h = [&](double mu) {
        try {
            return mu - theta_n(find_periodic(params.with_mu(mu), popt), 2);
        } catch (const AccuracyError& e) {
            throw NoThreshold("mu_star: no root of mu = theta_2(mu) before the orbit solver broke down at mu = " +
                              std::to_string(mu) + " (" + e.what() + ")");
        } catch (const StiffnessError& e) {
            throw NoThreshold("mu_star: no root of mu = theta_2(mu) before the orbit solver broke down at mu = " +
                              std::to_string(mu) + " (" + e.what() + ")");
        }
    };

    // geometric bracket search outward from the given mu
    double a = std::clamp(params.mu, lo_limit, hi_limit);
    double ha = h(a);
    double b = a;
    double hb = ha;
    const double step = 4.0;
    while ((ha > 0.0) == (hb > 0.0)) {
        if (ha > 0.0) {
            if (a <= lo_limit) throw NoThreshold("mu_star: no root of mu = theta_2(mu) in [1e-6, 1e6]");
            b = a;
            hb = ha;
            a = std::max(lo_limit, a / step);
            ha = h(a);
        } else {
            if (b >= hi_limit) throw NoThreshold("mu_star: no root of mu = theta_2(mu) in [1e-6, 1e6]");
            a = b;
            ha = hb;
            b = std::min(hi_limit, b * step);
            hb = h(b);
        }
    }
    if (ha == 0.0) {
        out.self_consistent = a;
        return out;
    }
    if (hb == 0.0) {
        out.self_consistent = b;
        return out;
    }
    std::uintmax_t iters = 100;
    const auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(x, y); };
    const auto [x, y] = boost::math::tools::toms748_solve(h, a, b, ha, hb, tol, iters);
    const double hx = h(x);
    const double hy = h(y);
    const double root = std::abs(hx) <= std::abs(hy) ? x : y;
    out.self_consistent = root;
    out.self_consistent_residual = std::min(std::abs(hx), std::abs(hy));
    if (out.self_consistent_residual > 1e-8 * root) {
        throw AccuracyError("mu_star: self-consistent residual above 1e-8 relative");
    }
    return out;
}

enum class StabilityVerdict { LinearlyStable, LinearlyUnstable, Marginal };

inline const char* to_string(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::LinearlyStable: return "LinearlyStable";
        case StabilityVerdict::LinearlyUnstable: return "LinearlyUnstable";
        default: return "Marginal";
    }
}

/// Stable iff mu < theta_2 outside a relative band kMarginalBand around it.
inline StabilityVerdict stability_verdict(double mu, double theta2) {
    if (std::abs(mu - theta2) <= kMarginalBand * theta2) return StabilityVerdict::Marginal;
    return mu < theta2 ? StabilityVerdict::LinearlyStable : StabilityVerdict::LinearlyUnstable;
}

struct StabilityReport {
    ModelParams params;
    PeriodicSolution orbit;
    std::vector<double> thresholds;  ///< theta_n, n = 2..n_max
    double mu_star;                  ///< theta_2 at params.mu
    std::optional<double> self_consistent_mu_star;
    std::vector<ModeExponent> exponents;  ///< n = 0..n_max
    StabilityVerdict verdict;
    bool thresholds_increasing = true;
    /// Neutral translation modes (n = 1) neither grow nor decay; stability
    /// here is stated modulo them.
    std::string translation_note = "n = 1 modes are neutral translations and are excluded from the verdict";
};

inline StabilityReport analyze_stability(const ModelParams& params, int n_max = 32, bool self_consistent = false,
                                         const PeriodicOptions& popt = {}) {
    if (n_max < 2) throw DomainError("analyze_stability: n_max must be at least 2");
    auto orbit = find_periodic(params, popt);
    std::vector<double> thresholds;
    std::vector<ModeExponent> exponents;
    const double mu = params.mu;
    for (int n = 0; n <= n_max; ++n) {
        const auto mi = mode_integrals(orbit, n);
        const double lam = mi.lambda(mu);
        exponents.push_back({n, lam, std::exp(-lam * mi.period)});
        if (n >= 2) {
            if (!(mi.proliferation > 0.0)) throw AccuracyError("analyze_stability: nonpositive denominator");
            thresholds.push_back(mi.surface / mi.proliferation);
        }
    }
    StabilityReport rep{params, std::move(orbit), thresholds, thresholds.front(), std::nullopt, exponents,
                        stability_verdict(mu, thresholds.front())};
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > thresholds[i - 1])) rep.thresholds_increasing = false;
    }
    if (self_consistent) rep.self_consistent_mu_star = mu_star(params, true, popt).self_consistent;
    return rep;
}

}  // namespace tumor
