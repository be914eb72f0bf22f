#pragma once

/**
 * @file config.hpp
 * @brief YAML run configuration for the command-line driver.
 *
 * Schema (version 1):
 *
 *     version: 1
 *     model:      {mu, sigma_tilde, gamma}
 *     schedule:   {form: constant|sinusoid|fourier|table, period, ...}
 *                   constant: value
 *                   sinusoid: mean, amplitude
 *                   fourier:  a0, cos: [...], sin: [...]
 *                   table:    points: [[t, value], ...]
 *     tolerances: {rtol, atol}
 *     simulate:   {r0, n_periods, samples_per_period}
 *     periodic:   {segments, phase, convergence: {r0_factors, n_periods},
 *                  fields: {n_r, n_t}, surface: {epsilon, t, n_theta, n_phi, modes: [[n, m, amplitude], ...]}}
 *     stability:  {n_max, self_consistent}
 *     sweep:      {mu: grid, sigma_tilde: grid, n_max}
 *     output:     {dir}
 *
 * A grid is either a list of values or {start, stop, count, scale: linear|log}.
 */

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "tumor/errors.hpp"
#include "tumor/fields.hpp"
#include "tumor/nutrient.hpp"
#include "tumor/radial.hpp"

namespace tumor::cli {

inline constexpr int kConfigVersion = 1;

struct SimulateOptions {
    double r0 = 1.0;
    int n_periods = 20;
    int samples_per_period = 64;
};

struct ConvergenceSpec {
    std::vector<double> r0_factors{0.5, 2.0};
    int n_periods = 200;
};

struct FieldGridSpec {
    int n_r = 17;
    int n_t = 16;
};

struct SurfaceSpec {
    double epsilon = 0.01;
    double t = 0.0;
    AngularGrid grid{};
    std::vector<SurfaceMode> modes;
};

struct PeriodicSection {
    int segments = 1024;
    double phase = 0.0;
    ConvergenceSpec convergence{};
    std::optional<FieldGridSpec> fields;
    std::optional<SurfaceSpec> surface;
};

struct StabilitySection {
    int n_max = 32;
    bool self_consistent = false;
};

struct SweepSection {
    std::vector<double> mu;           ///< empty means the model mu only
    std::vector<double> sigma_tilde;  ///< empty means the model sigma_tilde only
    int n_max = 8;
};

struct RunConfig {
    ModelParams params;
    Tolerances tol{};
    SimulateOptions simulate{};
    PeriodicSection periodic{};
    StabilitySection stability{};
    std::optional<SweepSection> sweep;
    std::string output_dir = "out";
    int workers = 1;
};

namespace detail {

template <typename T>
T get(const YAML::Node& node, const std::string& key, const std::string& where) {
    const auto v = node[key];
    if (!v) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + ": key '" + key + "' has the wrong type");
    }
}

template <typename T>
T get_or(const YAML::Node& node, const std::string& key, T fallback, const std::string& where) {
    if (!node || !node[key]) return fallback;
    return get<T>(node, key, where);
}

inline void require_positive(double v, const std::string& what) {
    if (!std::isfinite(v) || v <= 0.0) throw ConfigError(what + " must be finite and positive");
}

inline void require_count(int v, int min, const std::string& what) {
    if (v < min) throw ConfigError(what + " must be at least " + std::to_string(min));
}

inline NutrientSchedule parse_schedule(const YAML::Node& node) {
    if (!node || !node.IsMap()) throw ConfigError("schedule: section missing");
    const std::string where = "schedule";
    const auto form = get<std::string>(node, "form", where);
    const auto period = get<double>(node, "period", where);
    if (form == "constant") return NutrientSchedule::constant(get<double>(node, "value", where), period);
    if (form == "sinusoid") {
        return NutrientSchedule::sinusoid(get<double>(node, "mean", where), get<double>(node, "amplitude", where),
                                          period);
    }
    if (form == "fourier") {
        return NutrientSchedule::fourier(get<double>(node, "a0", where),
                                         get_or<std::vector<double>>(node, "cos", {}, where),
                                         get_or<std::vector<double>>(node, "sin", {}, where), period);
    }
    if (form == "table") {
        std::vector<std::pair<double, double>> pts;
        for (const auto& row : get<std::vector<std::vector<double>>>(node, "points", where)) {
            if (row.size() != 2) throw ConfigError("schedule: table points must be [t, value] pairs");
            pts.emplace_back(row[0], row[1]);
        }
        return NutrientSchedule::table(std::move(pts), period);
    }
    throw ConfigError("schedule: unknown form '" + form + "' (constant, sinusoid, fourier, table)");
}

inline std::vector<double> parse_grid(const YAML::Node& node, const std::string& name) {
    std::vector<double> grid;
    if (!node) return grid;
    if (node.IsSequence()) {
        try {
            grid = node.as<std::vector<double>>();
        } catch (const YAML::Exception&) {
            throw ConfigError("sweep." + name + ": grid entries must be numbers");
        }
    } else if (node.IsMap()) {
        const std::string where = "sweep." + name;
        const auto start = get<double>(node, "start", where);
        const auto stop = get<double>(node, "stop", where);
        const auto count = get<int>(node, "count", where);
        const auto scale = get_or<std::string>(node, "scale", "linear", where);
        require_count(count, 1, where + ".count");
        if (scale != "linear" && scale != "log") throw ConfigError(where + ".scale must be linear or log");
        if (scale == "log" && !(start > 0.0 && stop > 0.0)) throw ConfigError(where + ": log grid needs positive ends");
        for (int i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            grid.push_back(scale == "log" ? start * std::pow(stop / start, f) : start + f * (stop - start));
        }
    } else {
        throw ConfigError("sweep." + name + ": grid must be a list or {start, stop, count, scale}");
    }
    if (grid.empty()) throw ConfigError("sweep." + name + ": grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw ConfigError("sweep." + name + ": grid entries must be finite");
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ConfigError("sweep." + name + ": grid must be strictly increasing");
        }
    }
    return grid;
}

}  // namespace detail

/// Tolerances may be overridden after parsing; recheck them.
inline void validate_tolerances(const RunConfig& cfg) {
    detail::require_positive(cfg.tol.rtol, "tolerances.rtol");
    detail::require_positive(cfg.tol.atol, "tolerances.atol");
    if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
}

/// Parse and validate a configuration document.
inline RunConfig parse_config(const YAML::Node& root) {
    using namespace detail;
    if (!root || !root.IsMap()) throw ConfigError("config: top level must be a mapping");
    const int version = get<int>(root, "version", "config");
    if (version != kConfigVersion) {
        throw ConfigError("config: unsupported version " + std::to_string(version) + " (expected " +
                          std::to_string(kConfigVersion) + ")");
    }

    const auto model = root["model"];
    if (!model) throw ConfigError("model: section missing");
    RunConfig cfg{ModelParams{get<double>(model, "mu", "model"), get<double>(model, "sigma_tilde", "model"),
                              get<double>(model, "gamma", "model"), parse_schedule(root["schedule"])}};
    cfg.params.validate();

    if (const auto t = root["tolerances"]) {
        cfg.tol.rtol = get_or<double>(t, "rtol", cfg.tol.rtol, "tolerances");
        cfg.tol.atol = get_or<double>(t, "atol", cfg.tol.atol, "tolerances");
    }

    if (const auto s = root["simulate"]) {
        cfg.simulate.r0 = get_or<double>(s, "r0", cfg.simulate.r0, "simulate");
        cfg.simulate.n_periods = get_or<int>(s, "n_periods", cfg.simulate.n_periods, "simulate");
        cfg.simulate.samples_per_period =
            get_or<int>(s, "samples_per_period", cfg.simulate.samples_per_period, "simulate");
    }
    require_positive(cfg.simulate.r0, "simulate.r0");
    require_count(cfg.simulate.n_periods, 1, "simulate.n_periods");
    require_count(cfg.simulate.samples_per_period, 1, "simulate.samples_per_period");

    if (const auto p = root["periodic"]) {
        auto& ps = cfg.periodic;
        ps.segments = get_or<int>(p, "segments", ps.segments, "periodic");
        ps.phase = get_or<double>(p, "phase", ps.phase, "periodic");
        if (const auto c = p["convergence"]) {
            ps.convergence.r0_factors =
                get_or<std::vector<double>>(c, "r0_factors", ps.convergence.r0_factors, "periodic.convergence");
            ps.convergence.n_periods = get_or<int>(c, "n_periods", ps.convergence.n_periods, "periodic.convergence");
        }
        if (const auto f = p["fields"]) {
            FieldGridSpec g;
            g.n_r = get_or<int>(f, "n_r", g.n_r, "periodic.fields");
            g.n_t = get_or<int>(f, "n_t", g.n_t, "periodic.fields");
            require_count(g.n_r, 2, "periodic.fields.n_r");
            require_count(g.n_t, 1, "periodic.fields.n_t");
            ps.fields = g;
        }
        if (const auto s = p["surface"]) {
            SurfaceSpec spec;
            spec.epsilon = get_or<double>(s, "epsilon", spec.epsilon, "periodic.surface");
            spec.t = get_or<double>(s, "t", spec.t, "periodic.surface");
            spec.grid.n_theta = get_or<int>(s, "n_theta", spec.grid.n_theta, "periodic.surface");
            spec.grid.n_phi = get_or<int>(s, "n_phi", spec.grid.n_phi, "periodic.surface");
            require_count(spec.grid.n_theta, 2, "periodic.surface.n_theta");
            require_count(spec.grid.n_phi, 1, "periodic.surface.n_phi");
            for (const auto& row : get<std::vector<std::vector<double>>>(s, "modes", "periodic.surface")) {
                if (row.size() != 3) throw ConfigError("periodic.surface: modes must be [n, m, amplitude]");
                SurfaceMode mode{static_cast<int>(row[0]), static_cast<int>(row[1]), row[2]};
                if (mode.n != row[0] || mode.m != row[1] || mode.n < 0 || std::abs(mode.m) > mode.n) {
                    throw ConfigError("periodic.surface: mode indices need integer n >= 0 and |m| <= n");
                }
                spec.modes.push_back(mode);
            }
            ps.surface = spec;
        }
    }
    require_count(cfg.periodic.segments, 2, "periodic.segments");
    require_count(cfg.periodic.convergence.n_periods, 4, "periodic.convergence.n_periods");
    for (double f : cfg.periodic.convergence.r0_factors) require_positive(f, "periodic.convergence.r0_factors");

    if (const auto s = root["stability"]) {
        cfg.stability.n_max = get_or<int>(s, "n_max", cfg.stability.n_max, "stability");
        cfg.stability.self_consistent = get_or<bool>(s, "self_consistent", false, "stability");
    }
    require_count(cfg.stability.n_max, 2, "stability.n_max");

    if (const auto s = root["sweep"]) {
        SweepSection sw;
        sw.mu = parse_grid(s["mu"], "mu");
        sw.sigma_tilde = parse_grid(s["sigma_tilde"], "sigma_tilde");
        if (sw.mu.empty() && sw.sigma_tilde.empty()) {
            throw ConfigError("sweep: empty grid (give mu and/or sigma_tilde)");
        }
        for (double m : sw.mu) require_positive(m, "sweep.mu entries");
        for (double s2 : sw.sigma_tilde) {
            if (s2 < 0.0) throw ConfigError("sweep.sigma_tilde entries must be nonnegative");
        }
        sw.n_max = get_or<int>(s, "n_max", sw.n_max, "sweep");
        require_count(sw.n_max, 2, "sweep.n_max");
        cfg.sweep = sw;
    }

    if (const auto o = root["output"]) cfg.output_dir = get_or<std::string>(o, "dir", cfg.output_dir, "output");
    validate_tolerances(cfg);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ConfigError("config: cannot read '" + path + "'");
    } catch (const YAML::Exception& e) {
        throw ConfigError("config: YAML syntax error in '" + path + "': " + e.what());
    }
    return parse_config(root);
}

inline RunConfig parse_config_string(const std::string& text) {
    try {
        return parse_config(YAML::Load(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(std::string("config: YAML syntax error: ") + e.what());
    }
}

}  // namespace tumor::cli
