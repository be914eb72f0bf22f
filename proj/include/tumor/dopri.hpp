#pragma once

/**
 * @file dopri.hpp
 * @brief Adaptive Dormand-Prince 5(4) integrator for scalar ODEs with
 *        cubic-Hermite dense output.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tumor/errors.hpp"

namespace tumor {

struct Tolerances {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 20'000'000;
};

/// Accepted nodes (t_i, y_i, y'_i) of a scalar solution, interpolated by cubic
/// Hermite polynomials between nodes. Immutable once built.
class DenseSolution {
public:
    DenseSolution() = default;
    DenseSolution(std::vector<double> t, std::vector<double> y, std::vector<double> dy, long steps,
                  long rejected)
        : t_(std::move(t)), y_(std::move(y)), dy_(std::move(dy)), steps_(steps), rejected_(rejected) {}

    const std::vector<double>& times() const { return t_; }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& slopes() const { return dy_; }
    long steps() const { return steps_; }
    long rejected_steps() const { return rejected_; }
    double t_begin() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    double front() const { return y_.front(); }
    double back() const { return y_.back(); }
    std::size_t size() const { return t_.size(); }

    /// Interpolated value; exact at nodes. Throws outside [t_begin, t_end].
    double operator()(double t) const {
        const std::size_t i = segment(t);
        if (t == t_[i]) return y_[i];
        if (t == t_[i + 1]) return y_[i + 1];
        return hermite(i, t);
    }

    /// Derivative of the interpolant.
    double derivative(double t) const {
        const std::size_t i = segment(t);
        const double h = t_[i + 1] - t_[i];
        const double s = (t - t_[i]) / h;
        const double dh00 = 6 * s * s - 6 * s;
        const double dh10 = 3 * s * s - 4 * s + 1;
        const double dh01 = -dh00;
        const double dh11 = 3 * s * s - 2 * s;
        return (dh00 * y_[i] + dh01 * y_[i + 1]) / h + dh10 * dy_[i] + dh11 * dy_[i + 1];
    }

    /// Index i with t in [t_i, t_{i+1}].
    std::size_t segment(double t) const {
        if (t_.size() < 2 || t < t_.front() || t > t_.back()) {
            throw DomainError("DenseSolution: t outside the integrated span");
        }
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - t_.begin());
        i = (i == 0) ? 0 : i - 1;
        return std::min(i, t_.size() - 2);
    }

private:
    double hermite(std::size_t i, double t) const {
        const double h = t_[i + 1] - t_[i];
        const double s = (t - t_[i]) / h;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return h00 * y_[i] + h10 * h * dy_[i] + h01 * y_[i + 1] + h11 * h * dy_[i + 1];
    }

    std::vector<double> t_;
    std::vector<double> y_;
    std::vector<double> dy_;
    long steps_ = 0;
    long rejected_ = 0;
};

/// Integrate y' = f(t, y) from (t0, y0) to t1 > t0.
///
/// Every time in `stops` inside (t0, t1] becomes a node exactly. With
/// `keep_positive`, a step that produces y <= 0 is rejected and retried smaller.
template <typename F>
DenseSolution dopri45(F&& f, double y0, double t0, double t1, const Tolerances& tol,
                      std::span<const double> stops = {}, bool keep_positive = false) {
    // Dormand-Prince tableau
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    if (!(t1 > t0)) throw DomainError("dopri45: need t1 > t0");
    if (!(tol.rtol > 0.0) || !(tol.atol > 0.0)) throw DomainError("dopri45: tolerances must be positive");

    std::vector<double> ts{t0}, ys{y0}, dys;
    double t = t0;
    double y = y0;
    double k1 = f(t, y);
    dys.push_back(k1);

    std::vector<double> targets;
    for (double s : stops) {
        if (s > t0 && s < t1) targets.push_back(s);
    }
    std::sort(targets.begin(), targets.end());
    targets.push_back(t1);
    std::size_t next = 0;

    // initial step from the scale of y and y'
    const double span = t1 - t0;
    const double sc0 = tol.atol + tol.rtol * std::abs(y0);
    const double d0 = std::abs(y0) / sc0;
    const double d1 = std::abs(k1) / sc0;
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    h = std::min({h, span, tol.max_step});

    long steps = 0;
    long rejected = 0;
    bool last_rejected = false;
    while (next < targets.size()) {
        const double target = targets[next];
        bool lands = false;
        const double h_free = h;
        if (t + h >= target || target - (t + h) < 1e-12 * std::abs(target)) {
            h = target - t;
            lands = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            throw StiffnessError("dopri45: step size underflow at t = " + std::to_string(t));
        }
        if (++steps > tol.max_steps) {
            throw StiffnessError("dopri45: step budget exhausted at t = " + std::to_string(t));
        }

        const double k2 = f(t + c2 * h, y + h * a21 * k1);
        const double k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        const double k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double t_new = lands ? target : t + h;
        const double k7 = f(t_new, y_new);

        const double err_abs = std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
        const double scale = tol.atol + tol.rtol * std::max(std::abs(y), std::abs(y_new));
        const double err = err_abs / scale;

        if (!std::isfinite(y_new) || err > 1.0 || (keep_positive && y_new <= 0.0)) {
            ++rejected;
            last_rejected = true;
            const double factor = (keep_positive && y_new <= 0.0) || !std::isfinite(err)
                                      ? 0.25
                                      : std::max(0.2, 0.9 * std::pow(err, -0.2));
            h *= factor;
            continue;
        }

        t = t_new;
        y = y_new;
        k1 = k7;
        ts.push_back(t);
        ys.push_back(y);
        dys.push_back(k7);
        if (lands) ++next;

        double grow = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
        if (last_rejected) grow = std::min(grow, 1.0);
        last_rejected = false;
        h = h * grow;
        if (lands) h = std::max(h, h_free);
        h = std::min(h, tol.max_step);
    }
    return DenseSolution(std::move(ts), std::move(ys), std::move(dys), steps - rejected, rejected);
}

}  // namespace tumor
