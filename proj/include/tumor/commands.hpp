#pragma once

/**
 * @file commands.hpp
 * @brief simulate / periodic / stability / sweep commands and their CSV and
 *        JSON artifacts.
 *
 * CSV: comma separated, header row, LF endings, doubles with 17 significant
 * digits. JSON: keys in insertion order.
 */

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "tumor/config.hpp"
#include "tumor/fields.hpp"
#include "tumor/periodic.hpp"
#include "tumor/radial.hpp"
#include "tumor/stability.hpp"

namespace tumor::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kValidationFailure = 2 };

inline std::string num(double v) { return fmt::format("{:.17g}", v); }

/// Rows of already-formatted cells, written as CSV.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<std::string> row) {
        if (row.size() != header_.size()) throw std::logic_error("CsvTable: row width mismatch");
        rows_.push_back(std::move(row));
    }
    void add_numbers(const std::vector<double>& row) {
        std::vector<std::string> cells;
        for (double v : row) cells.push_back(num(v));
        add(std::move(cells));
    }

    std::string str() const {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::filesystem::path prepare_output_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec || !std::filesystem::is_directory(p)) {
        throw ConfigError("output directory '" + dir + "' cannot be created");
    }
    return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

inline Json model_json(const ModelParams& p) {
    const auto& s = p.schedule;
    return Json{{"mu", p.mu},
                {"sigma_tilde", p.sigma_tilde},
                {"gamma", p.gamma},
                {"schedule",
                 {{"form", s.form_name()}, {"period", s.period()}, {"mean", s.mean()}, {"max", s.max()},
                  {"min", s.min()}}}};
}

inline PeriodicOptions periodic_options(const RunConfig& cfg) {
    PeriodicOptions opt;
    opt.segments = cfg.periodic.segments;
    opt.t0 = cfg.periodic.phase;
    return opt;
}

inline void announce(const std::filesystem::path& p) { fmt::print("wrote {}\n", p.string()); }

// ---------------------------------------------------------------- simulate

inline int cmd_simulate(const RunConfig& cfg) {
    const auto dir = prepare_output_dir(cfg.output_dir);
    const auto& p = cfg.params;
    const auto& opt = cfg.simulate;
    const double T = p.period();
    const int n_samples = opt.n_periods * opt.samples_per_period;
    std::vector<double> stops;
    for (int i = 1; i <= n_samples; ++i) stops.push_back(T * i / opt.samples_per_period);

    const auto verdict = classify_radial(p);
    Json summary{{"command", "simulate"}, {"model", model_json(p)}, {"verdict", to_string(verdict)},
                 {"r0", opt.r0},          {"n_periods", opt.n_periods}};

    DenseSolution traj;
    std::vector<double> period_radii;
    if (verdict == RadialVerdict::Extinction) {
        const auto rep = extinction_diagnostics(p, opt.r0, opt.n_periods, cfg.tol);
        period_radii = rep.period_radii;
        traj = rep.trajectory;
        summary["extinction"] = Json{{"non_increasing", rep.non_increasing},
                                     {"growth_cap_ok", rep.growth_cap_ok},
                                     {"decay_bound_ok", rep.decay_bound_ok},
                                     {"max_cap_ratio", rep.max_cap_ratio},
                                     {"flags", rep.flags}};
    } else {
        traj = integrate(p, opt.r0, 0.0, opt.n_periods * T, cfg.tol, stops);
        for (int k = 0; k <= opt.n_periods; ++k) period_radii.push_back(traj(k * T));
    }
    summary["final_radius"] = traj.back();
    summary["steps"] = traj.steps();
    summary["rejected_steps"] = traj.rejected_steps();

    CsvTable samples({"t", "R"});
    samples.add_numbers({0.0, opt.r0});
    for (double t : stops) samples.add_numbers({t, traj(t)});
    CsvTable periods({"k", "t", "R"});
    for (std::size_t k = 0; k < period_radii.size(); ++k) {
        periods.add({std::to_string(k), num(k * T), num(period_radii[k])});
    }

    write_text(dir / "trajectory.csv", samples.str());
    write_text(dir / "periods.csv", periods.str());
    write_text(dir / "simulate.json", json_text(summary));
    for (const char* f : {"trajectory.csv", "periods.csv", "simulate.json"}) announce(dir / f);
    fmt::print("verdict: {}\n", to_string(verdict));
    return kOk;
}

// ---------------------------------------------------------------- periodic

inline int cmd_periodic(const RunConfig& cfg) {
    const auto dir = prepare_output_dir(cfg.output_dir);
    const auto orbit = find_periodic(cfg.params, periodic_options(cfg));
    const auto& br = orbit.bracket();

    Json summary{{"command", "periodic"},        {"model", model_json(cfg.params)},
                 {"R_star0", orbit.r_star0()},   {"R_min", orbit.r_min()},
                 {"R_max", orbit.r_max()},       {"residual", orbit.residual()},
                 {"phase", orbit.t0()},          {"segments", orbit.segments()},
                 {"x_bar", br.x_bar},            {"x2", br.x2},
                 {"bracket_capped", br.capped}};
    if (!br.warning.empty()) summary["warning"] = br.warning;

    Json conv = Json::array();
    for (double factor : cfg.periodic.convergence.r0_factors) {
        Json entry{{"r0_factor", factor}, {"r0", factor * orbit.r_star0()}};
        try {
            const auto fit = convergence_rate(orbit, factor * orbit.r_star0(), cfg.periodic.convergence.n_periods);
            entry["delta_hat"] = fit.delta_hat;
            entry["C_hat"] = fit.c_hat;
            entry["r_squared"] = fit.r_squared;
            entry["delta_bound"] = fit.delta_bound;
            entry["M_min"] = fit.m_min;
            entry["periods_used"] = fit.periods_used;
            entry["one_sided"] = fit.one_sided;
        } catch (const InsufficientData& e) {
            entry["error"] = e.what();
        }
        conv.push_back(entry);
    }
    if (!conv.empty() && conv[0].contains("delta_hat")) {
        summary["delta_hat"] = conv[0]["delta_hat"];
        summary["delta_bound"] = conv[0]["delta_bound"];
    }
    summary["convergence"] = conv;

    CsvTable csv({"t", "R_star"});
    for (int i = 0; i <= orbit.segments(); ++i) csv.add_numbers({orbit.node_time(i), orbit.node_value(i)});
    write_text(dir / "orbit.csv", csv.str());
    announce(dir / "orbit.csv");

    if (const auto& g = cfg.periodic.fields) {
        CsvTable fields({"r", "t", "sigma", "p"});
        for (const auto& s : sample_fields(orbit, g->n_r, g->n_t)) fields.add_numbers({s.r, s.t, s.sigma, s.p});
        write_text(dir / "fields.csv", fields.str());
        announce(dir / "fields.csv");
    }
    if (const auto& s = cfg.periodic.surface) {
        const auto surf = perturbed_surface(orbit, s->modes, s->epsilon, s->t, s->grid);
        CsvTable table({"theta", "phi", "r"});
        for (std::size_t i = 0; i < surf.radius.size(); ++i) {
            table.add_numbers({surf.theta[i], surf.phi[i], surf.radius[i]});
        }
        write_text(dir / "surface.csv", table.str());
        announce(dir / "surface.csv");
        summary["surface"] = Json{{"t", s->t}, {"epsilon", s->epsilon}, {"max_deviation", surf.max_deviation}};
        if (!surf.warning.empty()) {
            summary["surface"]["warning"] = surf.warning;
            fmt::print(stderr, "warning: {}\n", surf.warning);
        }
    }
    write_text(dir / "periodic.json", json_text(summary));
    announce(dir / "periodic.json");
    fmt::print("R*(0) = {}  residual = {:.3g}\n", num(orbit.r_star0()), orbit.residual());
    return kOk;
}

// ---------------------------------------------------------------- stability

inline Json stability_json(const StabilityReport& rep, const std::optional<double>& self_consistent,
                           const std::string& self_consistent_error) {
    const auto& p = rep.params;
    Json j{{"command", "stability"},
           {"mu", p.mu},
           {"sigma_tilde", p.sigma_tilde},
           {"gamma", p.gamma},
           {"T", p.period()},
           {"schedule", model_json(p)["schedule"]},
           {"R_star0", rep.orbit.r_star0()},
           {"mu_star", rep.mu_star}};
    if (self_consistent) j["self_consistent_mu_star"] = *self_consistent;
    if (!self_consistent_error.empty()) j["self_consistent_error"] = self_consistent_error;
    j["thresholds"] = rep.thresholds;
    j["thresholds_increasing"] = rep.thresholds_increasing;
    Json ex = Json::array();
    for (const auto& e : rep.exponents) {
        ex.push_back(Json{{"n", e.n}, {"lambda_bar", e.lambda_bar}, {"multiplier", e.floquet_multiplier}});
    }
    j["exponents"] = ex;
    j["verdict"] = to_string(rep.verdict);
    j["note"] = rep.translation_note;
    return j;
}

inline std::string stability_csv(const StabilityReport& rep) {
    CsvTable csv({"n", "theta_n", "lambda_n", "multiplier"});
    for (const auto& e : rep.exponents) {
        const std::string theta = e.n < 2 ? "inf" : num(rep.thresholds[e.n - 2]);
        csv.add({std::to_string(e.n), theta, num(e.lambda_bar), num(e.floquet_multiplier)});
    }
    return csv.str();
}

inline int cmd_stability(const RunConfig& cfg) {
    const auto dir = prepare_output_dir(cfg.output_dir);
    const auto popt = periodic_options(cfg);
    const auto rep = analyze_stability(cfg.params, cfg.stability.n_max, false, popt);
    std::optional<double> sc;
    std::string sc_error;
    if (cfg.stability.self_consistent) {
        try {
            sc = mu_star(cfg.params, true, popt).self_consistent;
        } catch (const NoThreshold& e) {
            sc_error = e.what();
        }
    }
    write_text(dir / "stability.json", json_text(stability_json(rep, sc, sc_error)));
    write_text(dir / "stability.csv", stability_csv(rep));
    announce(dir / "stability.json");
    announce(dir / "stability.csv");
    fmt::print("verdict: {}  (mu = {}, theta_2 = {})\n", to_string(rep.verdict), num(cfg.params.mu),
               num(rep.mu_star));
    return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepRow {
    double mu = 0.0;
    double sigma_tilde = 0.0;
    std::string verdict;  ///< Extinction, LinearlyStable, LinearlyUnstable, Marginal or Error
    std::optional<double> r_star0;
    std::optional<double> theta2;
    std::optional<double> lambda2;
    std::optional<double> min_lambda;  ///< min of Lambda_n over 2 <= n <= n_max
    std::string error;
};

inline SweepRow sweep_point(const ModelParams& base, double mu, double sigma_tilde, int n_max,
                            const PeriodicOptions& popt) {
    SweepRow row;
    row.mu = mu;
    row.sigma_tilde = sigma_tilde;
    try {
        const auto p = base.with_mu(mu).with_sigma_tilde(sigma_tilde);
        if (classify_radial(p) == RadialVerdict::Extinction) {
            row.verdict = "Extinction";
            return row;
        }
        const auto orbit = find_periodic(p, popt);
        row.r_star0 = orbit.r_star0();
        row.theta2 = theta_n(orbit, 2);
        double min_lambda = std::numeric_limits<double>::infinity();
        for (int n = 2; n <= n_max; ++n) {
            const double lam = mode_exponent(orbit, n).lambda_bar;
            if (n == 2) row.lambda2 = lam;
            min_lambda = std::min(min_lambda, lam);
        }
        row.min_lambda = min_lambda;
        row.verdict = to_string(stability_verdict(mu, *row.theta2));
    } catch (const std::exception& e) {
        row.verdict = "Error";
        row.error = e.what();
    }
    return row;
}

/// Grid points in order sigma_tilde (outer) then mu (inner), computed by up to
/// `workers` threads; the result order never depends on scheduling.
inline std::vector<SweepRow> run_sweep(const RunConfig& cfg) {
    if (!cfg.sweep) throw ConfigError("sweep: section missing from config");
    const auto& sw = *cfg.sweep;
    const std::vector<double> mus = sw.mu.empty() ? std::vector<double>{cfg.params.mu} : sw.mu;
    const std::vector<double> sigmas =
        sw.sigma_tilde.empty() ? std::vector<double>{cfg.params.sigma_tilde} : sw.sigma_tilde;
    std::vector<std::pair<double, double>> points;
    for (double s : sigmas) {
        for (double m : mus) points.emplace_back(m, s);
    }
    std::vector<SweepRow> rows(points.size());
    const auto popt = periodic_options(cfg);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            rows[i] = sweep_point(cfg.params, points[i].first, points[i].second, sw.n_max, popt);
        }
    };
    const int n_threads = std::max(1, std::min<int>(cfg.workers, static_cast<int>(points.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < n_threads; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    CsvTable csv({"mu", "sigma_tilde", "verdict", "R_star0", "theta_2", "lambda_2", "min_lambda", "error"});
    for (const auto& r : rows) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        csv.add({num(r.mu), num(r.sigma_tilde), r.verdict, opt(r.r_star0), opt(r.theta2), opt(r.lambda2),
                 opt(r.min_lambda), err});
    }
    return csv.str();
}

inline Json sweep_json(const RunConfig& cfg, const std::vector<SweepRow>& rows) {
    const auto ok = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.error.empty(); });
    Json j{{"command", "sweep"},
           {"model", model_json(cfg.params)},
           {"n_max", cfg.sweep->n_max},
           {"points", rows.size()},
           {"succeeded", ok},
           {"failed", static_cast<std::ptrdiff_t>(rows.size()) - ok}};
    return j;
}

inline int cmd_sweep(const RunConfig& cfg) {
    const auto dir = prepare_output_dir(cfg.output_dir);
    const auto rows = run_sweep(cfg);
    write_text(dir / "sweep.csv", sweep_csv(rows));
    write_text(dir / "sweep.json", json_text(sweep_json(cfg, rows)));
    announce(dir / "sweep.csv");
    announce(dir / "sweep.json");
    const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.error.empty(); });
    for (const auto& r : rows) {
        if (!r.error.empty()) fmt::print(stderr, "row mu={} sigma_tilde={}: {}\n", num(r.mu), num(r.sigma_tilde), r.error);
    }
    return any_ok ? kOk : kRuntimeFailure;
}

}  // namespace tumor::cli
