#pragma once

/**
 * @file nutrient.hpp
 * @brief T-periodic, continuous, strictly positive external nutrient supply Phi(t).
 *
 * Evaluation always reduces t modulo the period first (std::fmod is exact),
 * so Phi(t + T) == Phi(t) whenever t + T is representable.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tumor/errors.hpp"
#include "tumor/quadrature.hpp"

namespace tumor {

struct ScheduleStats {
    double mean;
    double max;
    double min;
};

class NutrientSchedule {
public:
    struct Constant {
        double value;
    };
    /// mean + amplitude * sin(2 pi t / T)
    struct Sinusoid {
        double mean;
        double amplitude;
    };
    /// a0 + sum_k cos_k cos(2 pi k t / T) + sin_k sin(2 pi k t / T), k = 1..K
    struct Fourier {
        double a0;
        std::vector<double> cos_coeffs;
        std::vector<double> sin_coeffs;
    };
    /// Periodic linear interpolation through (t_i, v_i), t_0 = 0, t_last = T, v_0 = v_last.
    struct Table {
        std::vector<double> times;
        std::vector<double> values;
    };
    using Form = std::variant<Constant, Sinusoid, Fourier, Table>;

    static constexpr int kSampleCount = 4096;

    static NutrientSchedule constant(double value, double period) {
        return NutrientSchedule(Constant{value}, period);
    }
    static NutrientSchedule sinusoid(double mean, double amplitude, double period) {
        return NutrientSchedule(Sinusoid{mean, amplitude}, period);
    }
    static NutrientSchedule fourier(double a0, std::vector<double> cos_coeffs,
                                    std::vector<double> sin_coeffs, double period) {
        return NutrientSchedule(Fourier{a0, std::move(cos_coeffs), std::move(sin_coeffs)}, period);
    }
    static NutrientSchedule table(std::vector<std::pair<double, double>> points, double period) {
        Table tab;
        for (const auto& [t, v] : points) {
            tab.times.push_back(t);
            tab.values.push_back(v);
        }
        return NutrientSchedule(std::move(tab), period);
    }

    NutrientSchedule(Form form, double period) : form_(std::move(form)), period_(period) {
        if (!std::isfinite(period_) || period_ <= 0.0) {
            throw InvalidSchedule(form_name() + ": period must be finite and positive");
        }
        validate();
        stats_ = compute_stats();
        if (!(stats_.min > 0.0)) {
            throw InvalidSchedule(form_name() + ": supply must be strictly positive (min sample " +
                                  std::to_string(stats_.min) + ")");
        }
    }

    double period() const { return period_; }
    const Form& form() const { return form_; }
    const ScheduleStats& stats() const { return stats_; }
    double mean() const { return stats_.mean; }
    double max() const { return stats_.max; }
    double min() const { return stats_.min; }

    std::string form_name() const {
        return std::visit(
            [](const auto& f) -> std::string {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Constant>) return "constant";
                if constexpr (std::is_same_v<T, Sinusoid>) return "sinusoid";
                if constexpr (std::is_same_v<T, Fourier>) return "fourier";
                if constexpr (std::is_same_v<T, Table>) return "table";
            },
            form_);
    }

    /// Phi(t).
    double operator()(double t) const { return eval_reduced(reduce(t)); }

    /// t mod T in [0, T).
    double reduce(double t) const {
        double tau = std::fmod(t, period_);
        if (tau < 0.0) tau += period_;
        if (tau >= period_) tau = 0.0;
        return tau;
    }

    /// Adaptive Gauss-Kronrod mean, independent of the closed forms.
    double mean_by_quadrature(double abs_tol = 1e-13) const {
        auto f = [this](double t) { return eval_reduced(t); };
        double integral = 0.0;
        if (const auto* tab = std::get_if<Table>(&form_)) {
            // kinks at the knots: integrate piece by piece
            for (std::size_t i = 0; i + 1 < tab->times.size(); ++i) {
                integral += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                    f, tab->times[i], tab->times[i + 1], 15, abs_tol);
            }
        } else {
            integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                f, 0.0, period_, 20, abs_tol);
        }
        return integral / period_;
    }

private:
    double eval_reduced(double tau) const {
        const double omega = 2.0 * std::numbers::pi / period_;
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Constant>) {
                    return f.value;
                } else if constexpr (std::is_same_v<T, Sinusoid>) {
                    return f.mean + f.amplitude * std::sin(omega * tau);
                } else if constexpr (std::is_same_v<T, Fourier>) {
                    double v = f.a0;
                    for (std::size_t k = 0; k < f.cos_coeffs.size(); ++k) {
                        v += f.cos_coeffs[k] * std::cos(omega * (k + 1.0) * tau);
                    }
                    for (std::size_t k = 0; k < f.sin_coeffs.size(); ++k) {
                        v += f.sin_coeffs[k] * std::sin(omega * (k + 1.0) * tau);
                    }
                    return v;
                } else {
                    const auto it = std::upper_bound(f.times.begin(), f.times.end(), tau);
                    const auto i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
                        it - f.times.begin() - 1, 0, static_cast<std::ptrdiff_t>(f.times.size()) - 2));
                    const double w = (tau - f.times[i]) / (f.times[i + 1] - f.times[i]);
                    return f.values[i] + w * (f.values[i + 1] - f.values[i]);
                }
            },
            form_);
    }

    void validate() const {
        auto all_finite = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
        };
        const std::string name = form_name();
        if (const auto* c = std::get_if<Constant>(&form_)) {
            if (!std::isfinite(c->value)) throw InvalidSchedule(name + ": value must be finite");
        } else if (const auto* s = std::get_if<Sinusoid>(&form_)) {
            if (!std::isfinite(s->mean) || !std::isfinite(s->amplitude)) {
                throw InvalidSchedule(name + ": coefficients must be finite");
            }
        } else if (const auto* f = std::get_if<Fourier>(&form_)) {
            if (!std::isfinite(f->a0) || !all_finite(f->cos_coeffs) || !all_finite(f->sin_coeffs)) {
                throw InvalidSchedule(name + ": coefficients must be finite");
            }
        } else if (const auto* tab = std::get_if<Table>(&form_)) {
            if (tab->times.size() < 2 || tab->times.size() != tab->values.size()) {
                throw InvalidSchedule(name + ": need at least two (t, value) points");
            }
            if (!all_finite(tab->times) || !all_finite(tab->values)) {
                throw InvalidSchedule(name + ": points must be finite");
            }
            if (tab->times.front() != 0.0 || tab->times.back() != period_) {
                throw InvalidSchedule(name + ": points must span exactly [0, period]");
            }
            for (std::size_t i = 1; i < tab->times.size(); ++i) {
                if (!(tab->times[i] > tab->times[i - 1])) {
                    throw InvalidSchedule(name + ": times must be strictly increasing");
                }
            }
            if (tab->values.front() != tab->values.back()) {
                throw InvalidSchedule(name + ": first and last values must agree (continuity)");
            }
        }
    }

    ScheduleStats compute_stats() const {
        return std::visit(
            [&](const auto& f) -> ScheduleStats {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Constant>) {
                    return {f.value, f.value, f.value};
                } else if constexpr (std::is_same_v<T, Sinusoid>) {
                    const double b = std::abs(f.amplitude);
                    return {f.mean, f.mean + b, f.mean - b};
                } else if constexpr (std::is_same_v<T, Fourier>) {
                    return {f.a0, sampled_extremum(+1.0), sampled_extremum(-1.0)};
                } else {
                    double area = 0.0;
                    for (std::size_t i = 0; i + 1 < f.times.size(); ++i) {
                        area += 0.5 * (f.values[i] + f.values[i + 1]) * (f.times[i + 1] - f.times[i]);
                    }
                    const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
                    return {area / period_, *hi, *lo};
                }
            },
            form_);
    }

    // sign = +1 for the max, -1 for the min
    double sampled_extremum(double sign) const {
        const double h = period_ / kSampleCount;
        int best = 0;
        double best_val = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < kSampleCount; ++i) {
            const double v = sign * eval_reduced(i * h);
            if (v > best_val) {
                best_val = v;
                best = i;
            }
        }
        // the sampled best bounds a local extremum within one sample on either side
        auto g = [&](double t) { return sign * eval_reduced(reduce(t)); };
        const auto [x, v] = quad::golden_section_max(g, (best - 1) * h, (best + 1) * h);
        return sign * std::max(v, best_val);
    }

    Form form_;
    double period_;
    ScheduleStats stats_{};
};

}  // namespace tumor
