#pragma once

/**
 * @file radial.hpp
 * @brief Radially symmetric tumor: the radius ODE
 *
 *     dR/dt = mu R [Phi(t) P_0(R) - sigma_tilde / 3],
 *
 * its numerical solution, and the extinction/persistence classification.
 */

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tumor/dopri.hpp"
#include "tumor/errors.hpp"
#include "tumor/nutrient.hpp"
#include "tumor/specfun.hpp"

namespace tumor {

struct ModelParams {
    double mu;           ///< proliferation / Darcy coefficient, > 0
    double sigma_tilde;  ///< proliferation threshold concentration, >= 0
    double gamma;        ///< cell adhesiveness (surface tension), > 0
    NutrientSchedule schedule;

    void validate() const {
        if (!std::isfinite(mu) || mu <= 0.0) throw InvalidParams("mu must be finite and positive");
        if (!std::isfinite(gamma) || gamma <= 0.0) throw InvalidParams("gamma must be finite and positive");
        if (!std::isfinite(sigma_tilde) || sigma_tilde < 0.0) {
            throw InvalidParams("sigma_tilde must be finite and nonnegative");
        }
    }

    double period() const { return schedule.period(); }

    ModelParams with_mu(double m) const {
        ModelParams p = *this;
        p.mu = m;
        return p;
    }
    ModelParams with_sigma_tilde(double s) const {
        ModelParams p = *this;
        p.sigma_tilde = s;
        return p;
    }
};

/// A solution R(t) of the radius ODE.
using Trajectory = DenseSolution;

enum class RadialVerdict { Extinction, Persistence };

inline const char* to_string(RadialVerdict v) {
    return v == RadialVerdict::Extinction ? "Extinction" : "Persistence";
}

namespace detail {

// Odd extension in R (P_0 is even), so trial stages that overshoot below zero
// stay finite; the integrator rejects such steps anyway.
inline double radial_rhs_any_sign(const ModelParams& p, double t, double r) {
    if (r == 0.0) return 0.0;
    return p.mu * r * (p.schedule(t) * specfun::p0(std::abs(r)) - p.sigma_tilde / 3.0);
}

}  // namespace detail

/// mu R [Phi(t) P_0(R) - sigma_tilde/3]; exactly 0 at R = 0.
inline double rhs(const ModelParams& params, double t, double radius) {
    if (!(radius >= 0.0)) throw DomainError("rhs: radius must be nonnegative");
    return detail::radial_rhs_any_sign(params, t, radius);
}

/// d(rhs)/dR = mu [Phi (P_0 + R P_0') - sigma_tilde/3].
inline double rhs_radius_derivative(const ModelParams& params, double t, double radius) {
    if (!(radius > 0.0)) throw DomainError("rhs_radius_derivative: radius must be positive");
    return params.mu * (params.schedule(t) * (specfun::p0(radius) + radius * specfun::pn_derivative(0, radius)) -
                        params.sigma_tilde / 3.0);
}

/// Solve the radius ODE on [t0, t1]. Times in `stops` become exact nodes.
inline Trajectory integrate(const ModelParams& params, double r0, double t0, double t1,
                            const Tolerances& tol = {}, std::span<const double> stops = {}) {
    params.validate();
    if (!std::isfinite(r0) || r0 <= 0.0) throw DomainError("integrate: R0 must be positive");
    if (!(t1 > t0)) throw DomainError("integrate: need t1 > t0");
    auto f = [&params](double t, double r) { return detail::radial_rhs_any_sign(params, t, r); };
    return dopri45(f, r0, t0, t1, tol, stops, /*keep_positive=*/true);
}

/// Extinction iff sigma_tilde >= mean(Phi). The means are closed-form, so the
/// comparison is exact; the tie goes to Extinction.
inline RadialVerdict classify_radial(const ModelParams& params) {
    params.validate();
    return params.sigma_tilde >= params.schedule.mean() ? RadialVerdict::Extinction
                                                         : RadialVerdict::Persistence;
}

struct ExtinctionReport {
    std::vector<double> period_radii;  ///< R(kT), k = 0..n_periods
    bool non_increasing = true;        ///< R((k+1)T) <= R(kT) up to integrator tolerance
    bool growth_cap_ok = true;         ///< R(t) <= R(kT) exp(mu (Phi* - sigma~)+ T / 3) inside each period
    bool decay_bound_ok = true;        ///< R(kT) <= R0 exp(k T mu (mean - sigma~) / 3)
    double max_cap_ratio = 0.0;        ///< max of R(t) / [R(kT) exp(...)] seen
    double final_radius = 0.0;
    std::vector<std::string> flags;
    Trajectory trajectory;
};

/// Long integration in the extinction regime, checking the per-period
/// monotonicity and the within-period growth cap.
inline ExtinctionReport extinction_diagnostics(const ModelParams& params, double r0, int n_periods,
                                               const Tolerances& tol = {}) {
    params.validate();
    if (classify_radial(params) != RadialVerdict::Extinction) {
        throw DomainError("extinction_diagnostics: requires sigma_tilde >= mean supply");
    }
    if (n_periods < 1) throw DomainError("extinction_diagnostics: n_periods must be positive");

    const double T = params.period();
    std::vector<double> stops;
    for (int k = 1; k <= n_periods; ++k) stops.push_back(k * T);

    ExtinctionReport rep;
    rep.trajectory = integrate(params, r0, 0.0, n_periods * T, tol, stops);
    const auto& traj = rep.trajectory;

    // slack for accumulated integration error
    const double slack = 1.0 + 100.0 * tol.rtol;
    const double cap = std::exp(params.mu * std::max(0.0, params.schedule.max() - params.sigma_tilde) * T / 3.0);
    const double decay = params.mu * (params.schedule.mean() - params.sigma_tilde) / 3.0;

    rep.period_radii.push_back(r0);
    for (int k = 1; k <= n_periods; ++k) {
        const double rk = traj(k * T);
        if (rk > rep.period_radii.back() * slack) rep.non_increasing = false;
        if (rk > r0 * std::exp(decay * k * T) * slack) rep.decay_bound_ok = false;
        rep.period_radii.push_back(rk);
    }

    // nodes and segment midpoints against the cap of the period they start in
    auto check_cap = [&](double t) {
        const int k = std::min(n_periods - 1, static_cast<int>(std::floor(t / T)));
        const double limit = rep.period_radii[k] * cap;
        rep.max_cap_ratio = std::max(rep.max_cap_ratio, traj(t) / limit);
    };
    for (std::size_t i = 0; i < traj.size(); ++i) {
        check_cap(traj.times()[i]);
        if (i + 1 < traj.size()) check_cap(0.5 * (traj.times()[i] + traj.times()[i + 1]));
    }
    rep.growth_cap_ok = rep.max_cap_ratio <= slack;
    rep.final_radius = rep.period_radii.back();
    if (!rep.non_increasing) rep.flags.push_back("R(kT) increased beyond integrator tolerance");
    if (!rep.growth_cap_ok) rep.flags.push_back("within-period growth cap exceeded");
    if (!rep.decay_bound_ok) rep.flags.push_back("exponential decay bound exceeded");
    return rep;
}

}  // namespace tumor
