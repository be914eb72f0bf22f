#pragma once

/**
 * @file periodic.hpp
 * @brief The unique positive T-periodic radius R*(t) for sigma_tilde < mean(Phi).
 *
 * R*(t0) is the fixed point of the Poincare map F(R0) = R(t0 + T), searched in
 * the invariant interval [x_bar, x2] with
 *
 *     x2    = P_0^{-1}(sigma~ / (3 Phi*)),
 *     x_bar = P_0^{-1}(sigma~ / (3 mean)) exp(-mu (Phi* - sigma~) T / 3),
 *
 * where F(x_bar) >= x_bar and F(x2) <= x2.
 */

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tumor/errors.hpp"
#include "tumor/quadrature.hpp"
#include "tumor/radial.hpp"
#include "tumor/specfun.hpp"

namespace tumor {

struct Bracket {
    double x_bar;
    double x2;
    bool capped = false;  ///< x2 was capped because sigma~ / (3 Phi*) < kBracketFloor
    std::string warning;
};

inline constexpr double kBracketFloor = 1e-6;

namespace detail {

inline void require_persistence(const ModelParams& params, const char* who) {
    params.validate();
    if (params.sigma_tilde >= params.schedule.mean()) {
        throw NoPeriodicSolution(std::string(who) +
                                 ": no positive periodic solution (sigma_tilde >= mean nutrient supply)");
    }
    if (params.sigma_tilde <= 0.0) {
        throw NoPeriodicSolution(std::string(who) +
                                 ": no positive periodic solution (sigma_tilde = 0 gives unbounded growth)");
    }
}

// Lower bound of R on [t, t+T] is R0 exp(-mu sigma~ T / 3); tie atol to it so
// the error control stays relative for tiny radii.
inline Tolerances map_tolerances(const ModelParams& params, double r0, double rtol) {
    const double floor_factor = std::exp(-params.mu * params.sigma_tilde * params.period() / 3.0);
    Tolerances tol;
    tol.rtol = rtol;
    tol.atol = std::max(1e-300, 1e-3 * rtol * r0 * floor_factor);
    return tol;
}

}  // namespace detail

/// Invariant interval of the Poincare map.
inline Bracket bracket(const ModelParams& params) {
    detail::require_persistence(params, "bracket");
    const double sig = params.sigma_tilde;
    const auto& s = params.schedule;
    const double shrink = std::exp(-params.mu * (s.max() - sig) * params.period() / 3.0);

    Bracket br;
    const double y2 = sig / (3.0 * s.max());
    if (y2 < kBracketFloor) {
        br.x2 = specfun::p0_inverse(kBracketFloor);
        br.capped = true;
        br.warning = "upper bracket capped at P_0^{-1}(1e-6); expanded on demand";
    } else {
        br.x2 = specfun::p0_inverse(y2);
    }
    const double y_mean = sig / (3.0 * s.mean());
    br.x_bar = std::max(1e-300, specfun::p0_inverse(std::max(y_mean, kBracketFloor * 1e-6)) * shrink);
    if (br.capped) br.x_bar = std::min(br.x_bar, 0.5 * br.x2);
    return br;
}

/// F(R0) = R(t0 + T) for the solution with R(t0) = R0.
inline double poincare_map(const ModelParams& params, double r0, double t0 = 0.0, double rtol = 1e-12) {
    params.validate();
    if (!std::isfinite(r0) || r0 <= 0.0) throw DomainError("poincare_map: R0 must be positive");
    return integrate(params, r0, t0, t0 + params.period(), detail::map_tolerances(params, r0, rtol)).back();
}

struct PeriodicOptions {
    double tol = 1e-11;     ///< relative fixed-point residual |F(R*) - R*| / R*
    int segments = 1024;    ///< Hermite segments stored per period
    double t0 = 0.0;        ///< phase at which the period starts
    double rtol = 1e-12;    ///< integrator tolerance for map evaluations
};

/// One period of R*(t), stored as values and exact slopes on a uniform grid
/// and evaluated by cubic Hermite interpolation with wrap-around.
class PeriodicSolution {
public:
    PeriodicSolution(ModelParams params, Bracket br, double t0, std::vector<double> radii,
                     std::vector<double> slopes, double residual)
        : params_(std::move(params)), bracket_(std::move(br)), t0_(t0), radii_(std::move(radii)),
          slopes_(std::move(slopes)), residual_(residual) {
        h_ = params_.period() / segments();
        find_extrema();
    }

    const ModelParams& params() const { return params_; }
    const Bracket& bracket() const { return bracket_; }
    double period() const { return params_.period(); }
    double t0() const { return t0_; }
    int segments() const { return static_cast<int>(radii_.size()) - 1; }
    double r_star0() const { return radii_.front(); }
    double r_min() const { return r_min_; }
    double r_max() const { return r_max_; }
    double residual() const { return residual_; }

    /// Grid node i in [0, segments]: time t0 + i T / segments.
    double node_time(int i) const { return t0_ + i * h_; }
    double node_value(int i) const { return radii_[i]; }

    /// R*(t) for any t, through t -> t0 + ((t - t0) mod T).
    double operator()(double t) const {
        const double tau = reduce(t);
        const int i = std::min(segments() - 1, static_cast<int>(tau / h_));
        const double s = (tau - i * h_) / h_;
        if (s == 0.0) return radii_[i];
        const double s2 = s * s;
        const double s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * radii_[i] + (s3 - 2 * s2 + s) * h_ * slopes_[i] +
               (-2 * s3 + 3 * s2) * radii_[i + 1] + (s3 - s2) * h_ * slopes_[i + 1];
    }

    /// dR*/dt from the ODE itself, exact on the orbit.
    double derivative(double t) const { return rhs(params_, t, (*this)(t)); }

    /// (t - t0) mod T in [0, T).
    double reduce(double t) const {
        const double T = period();
        double tau = std::fmod(t - t0_, T);
        if (tau < 0.0) tau += T;
        if (tau >= T) tau = 0.0;
        return tau;
    }

private:
    void find_extrema() {
        const auto [lo, hi] = std::minmax_element(radii_.begin(), radii_.end());
        r_min_ = *lo;
        r_max_ = *hi;
        auto refine = [&](std::ptrdiff_t i, double sign) {
            const double a = t0_ + (static_cast<double>(i) - 1) * h_;
            const double b = t0_ + (static_cast<double>(i) + 1) * h_;
            return sign * quad::golden_section_max([&](double t) { return sign * (*this)(t); }, a, b).second;
        };
        r_max_ = std::max(r_max_, refine(hi - radii_.begin(), +1.0));
        r_min_ = std::min(r_min_, refine(lo - radii_.begin(), -1.0));
    }

    ModelParams params_;
    Bracket bracket_;
    double t0_;
    std::vector<double> radii_;
    std::vector<double> slopes_;
    double residual_;
    double h_ = 0.0;
    double r_min_ = 0.0;
    double r_max_ = 0.0;
};

/// Fixed point of the Poincare map by bisection on G = F - id over the
/// bracket, then secant polish; stores one dense period.
inline PeriodicSolution find_periodic(const ModelParams& params, const PeriodicOptions& opt = {}) {
    detail::require_persistence(params, "find_periodic");
    if (opt.segments < 2) throw DomainError("find_periodic: need at least 2 segments");
    if (!(opt.tol > 0.0)) throw DomainError("find_periodic: tolerance must be positive");

    Bracket br = bracket(params);
    auto G = [&](double x) { return poincare_map(params, x, opt.t0, opt.rtol) - x; };
    // sign conditions hold exactly; allow for integrator error
    const double slack = 1e3 * opt.rtol;

    double lo = br.x_bar;
    double hi = br.x2;
    double g_lo = G(lo);
    double g_hi = G(hi);
    if (br.capped) {
        for (int i = 0; i < 200 && g_hi > 0.0; ++i) {
            lo = hi;
            g_lo = g_hi;
            hi *= 2.0;
            g_hi = G(hi);
        }
        for (int i = 0; i < 200 && g_lo < 0.0; ++i) {
            hi = lo;
            g_hi = g_lo;
            lo *= 0.5;
            g_lo = G(lo);
        }
        br.x_bar = std::min(br.x_bar, lo);
        br.x2 = std::max(br.x2, hi);
    }
    if (g_lo < -slack * lo || g_hi > slack * hi) {
        throw AccuracyError("find_periodic: bracket sign condition violated (G(x_bar) = " + std::to_string(g_lo) +
                            ", G(x2) = " + std::to_string(g_hi) + ")");
    }

    double root;
    if (std::abs(g_hi) <= opt.tol * hi) {
        root = hi;
    } else if (std::abs(g_lo) <= opt.tol * lo) {
        root = lo;
    } else {
        // bisection down to a narrow bracket
        while (hi - lo > 1e-6 * hi) {
            const double mid = 0.5 * (lo + hi);
            const double gm = G(mid);
            if (gm > 0.0) {
                lo = mid;
                g_lo = gm;
            } else {
                hi = mid;
                g_hi = gm;
            }
        }
        // secant polish, kept inside the bracket
        double x0 = lo, g0 = g_lo, x1 = hi, g1 = g_hi;
        root = std::abs(g0) < std::abs(g1) ? x0 : x1;
        double g_root = std::min(std::abs(g0), std::abs(g1));
        for (int it = 0; it < 50 && g_root > 1e-15 * root; ++it) {
            if (g1 == g0) break;
            double x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
            if (!(x2 >= lo && x2 <= hi)) x2 = 0.5 * (lo + hi);
            const double g2 = G(x2);
            if (g2 > 0.0) {
                lo = std::max(lo, x2);
            } else {
                hi = std::min(hi, x2);
            }
            if (std::abs(g2) < g_root) {
                root = x2;
                g_root = std::abs(g2);
            }
            if (x2 == x1) break;
            x0 = x1;
            g0 = g1;
            x1 = x2;
            g1 = g2;
        }
    }

    // dense period from R*(t0)
    const double T = params.period();
    std::vector<double> stops(opt.segments);
    for (int i = 1; i <= opt.segments; ++i) stops[i - 1] = opt.t0 + i * T / opt.segments;
    const auto traj =
        integrate(params, root, opt.t0, opt.t0 + T, detail::map_tolerances(params, root, opt.rtol), stops);
    std::vector<double> radii(opt.segments + 1);
    std::vector<double> slopes(opt.segments + 1);
    radii[0] = root;
    slopes[0] = rhs(params, opt.t0, root);
    for (int i = 1; i <= opt.segments; ++i) {
        radii[i] = traj(stops[i - 1]);
        slopes[i] = rhs(params, stops[i - 1], radii[i]);
    }
    const double residual = std::abs(radii.back() - root);
    if (residual > opt.tol * root) {
        throw AccuracyError("find_periodic: fixed-point residual " + std::to_string(residual) + " (R* = " + std::to_string(root) + ")" +
                            " above tolerance");
    }
    return PeriodicSolution(params, std::move(br), opt.t0, std::move(radii), std::move(slopes), residual);
}

/// Number of sign changes of F(R0) - R0 on n log-spaced points of [lo, hi].
inline int count_fixed_point_crossings(const ModelParams& params, double lo, double hi, int n = 50) {
    int changes = 0;
    double prev = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        const double g = poincare_map(params, x) - x;
        if (i > 0 && ((g > 0.0) != (prev > 0.0))) ++changes;
        prev = g;
    }
    return changes;
}

struct ConvergenceFit {
    double delta_hat = 0.0;    ///< fitted rate: |R(kT) - R*(kT)| ~ C exp(-delta t)
    double c_hat = 0.0;        ///< fitted prefactor C
    double r_squared = 0.0;    ///< linearity of log|R(kT) - R*| against k
    int periods_used = 0;
    double delta_bound = 0.0;  ///< mu Phi_* M_min R_min min(1, R0 / R*(0))
    double m_min = 0.0;        ///< min of -P_0' over the radius range visited
    bool one_sided = true;     ///< R(t) - R*(t) kept its initial sign
    std::vector<double> gaps;  ///< |R(kT) - R*(0)|, k = 0..n_periods
};

struct ConvergenceOptions {
    double skip_fraction = 0.1;    ///< leading fraction of periods left out of the fit (transient)
    double noise_floor = 1e-9;     ///< relative gap below which periods are unusable
    double bound_slack = 0.05;     ///< fitted rate must reach (1 - slack) delta_bound
};

/// Exponential approach of R(t) to R*(t) from R(t0) = r0.
inline ConvergenceFit convergence_rate(const PeriodicSolution& orbit, double r0, int n_periods,
                                       const ConvergenceOptions& opt = {}) {
    const ModelParams& params = orbit.params();
    const double rs = orbit.r_star0();
    const double T = orbit.period();
    if (!(r0 > 0.0)) throw DomainError("convergence_rate: R0 must be positive");
    if (std::abs(r0 - rs) <= opt.noise_floor * rs) {
        throw InsufficientData("convergence_rate: R0 is on the periodic orbit; rate undefined");
    }

    std::vector<double> stops;
    for (int k = 1; k <= n_periods; ++k) stops.push_back(orbit.t0() + k * T);
    Tolerances tol = detail::map_tolerances(params, std::min(r0, rs), 1e-12);
    const auto traj = integrate(params, r0, orbit.t0(), orbit.t0() + n_periods * T, tol, stops);

    ConvergenceFit fit;
    const double sign = r0 > rs ? 1.0 : -1.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (sign * (traj.values()[i] - orbit(traj.times()[i])) <= 0.0) {
            // below the noise floor the sign is meaningless
            if (std::abs(traj.values()[i] - orbit(traj.times()[i])) > opt.noise_floor * rs) fit.one_sided = false;
        }
    }

    const int skip = static_cast<int>(opt.skip_fraction * n_periods);
    std::vector<double> ks, logs;
    fit.gaps.push_back(std::abs(r0 - rs));
    for (int k = 1; k <= n_periods; ++k) {
        const double gap = std::abs(traj(orbit.t0() + k * T) - rs);
        fit.gaps.push_back(gap);
        if (k >= skip && gap > opt.noise_floor * rs) {
            ks.push_back(k * T);
            logs.push_back(std::log(gap));
        }
    }
    if (ks.size() < 4) {
        throw InsufficientData("convergence_rate: fewer than 4 periods above the noise floor");
    }
    const double n = static_cast<double>(ks.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sx += ks[i];
        sy += logs[i];
        sxx += ks[i] * ks[i];
        sxy += ks[i] * logs[i];
        syy += logs[i] * logs[i];
    }
    const double cov = n * sxy - sx * sy;
    const double slope = cov / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    fit.delta_hat = -slope;
    fit.c_hat = std::exp(intercept);
    fit.r_squared = cov * cov / ((n * sxx - sx * sx) * (n * syy - sy * sy));
    fit.periods_used = static_cast<int>(ks.size());

    // M_min over the radius range the comparison argument visits
    const double ratio = r0 / rs;
    const double a = orbit.r_min() * std::min(1.0, ratio);
    const double b = orbit.r_max() * std::max(1.0, ratio);
    double m_min = std::min(-specfun::pn_derivative(0, a), -specfun::pn_derivative(0, b));
    for (int i = 1; i < 2000; ++i) {
        m_min = std::min(m_min, -specfun::pn_derivative(0, a + (b - a) * i / 2000.0));
    }
    fit.m_min = m_min;
    fit.delta_bound = params.mu * params.schedule.min() * m_min * orbit.r_min() * std::min(1.0, ratio);
    if (fit.delta_hat < (1.0 - opt.bound_slack) * fit.delta_bound) {
        throw AccuracyError("convergence_rate: fitted rate " + std::to_string(fit.delta_hat) +
                            " below the proven lower bound " + std::to_string(fit.delta_bound));
    }
    return fit;
}

}  // namespace tumor
