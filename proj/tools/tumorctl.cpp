// tumorctl: command-line driver for the periodic tumor model.

#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tumor/commands.hpp"

namespace {

using namespace tumor;
using namespace tumor::cli;

struct Overrides {
    std::string config;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<double> rtol;
    std::optional<double> atol;
    std::optional<int> n_max;
};

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = load_config(o.config);
    if (o.out) cfg.output_dir = *o.out;
    if (o.workers) cfg.workers = *o.workers;
    if (o.rtol) cfg.tol.rtol = *o.rtol;
    if (o.atol) cfg.tol.atol = *o.atol;
    if (o.n_max) {
        if (*o.n_max < 2) throw ConfigError("--n-max must be at least 2");
        cfg.stability.n_max = *o.n_max;
        if (cfg.sweep) cfg.sweep->n_max = *o.n_max;
    }
    validate_tolerances(cfg);
    return cfg;
}

int fail(int code, const char* kind, const std::exception& e) {
    fmt::print(stderr, "error ({}): {}\n", kind, e.what());
    return code;
}

// Validation problems exit with 2, solver and numerical failures with 1.
int guarded(const std::function<int()>& body, bool orbit_required) {
    try {
        return body();
    } catch (const ConfigError& e) {
        return fail(kValidationFailure, "config", e);
    } catch (const InvalidSchedule& e) {
        return fail(kValidationFailure, "schedule", e);
    } catch (const InvalidParams& e) {
        return fail(kValidationFailure, "parameters", e);
    } catch (const NoPeriodicSolution& e) {
        return fail(orbit_required ? kValidationFailure : kRuntimeFailure, "no periodic solution", e);
    } catch (const std::exception& e) {
        return fail(kRuntimeFailure, "runtime", e);
    }
}

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("-c,--config", o.config, "YAML run configuration")->required();
    sub->add_option("-o,--out", o.out, "output directory (overrides output.dir)");
    sub->add_option("--tol-rtol", o.rtol, "integrator relative tolerance");
    sub->add_option("--tol-atol", o.atol, "integrator absolute tolerance");
    sub->add_option("-j,--workers", o.workers, "worker threads (used by sweep)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic tumor growth: radial dynamics, periodic orbits and shape stability"};
    app.require_subcommand(1);

    Overrides o;
    auto* simulate = app.add_subcommand("simulate", "integrate the radius ODE from simulate.r0");
    auto* periodic = app.add_subcommand("periodic", "compute the periodic orbit and convergence rates");
    auto* stability = app.add_subcommand("stability", "mode exponents, thresholds and verdict");
    auto* sweep = app.add_subcommand("sweep", "verdicts over a (sigma_tilde, mu) grid");
    for (auto* sub : {simulate, periodic, stability, sweep}) add_common(sub, o);
    stability->add_option("--n-max", o.n_max, "highest mode number");
    sweep->add_option("--n-max", o.n_max, "highest mode number");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kValidationFailure;
    }

    if (simulate->parsed()) return guarded([&] { return cmd_simulate(resolve(o)); }, false);
    if (periodic->parsed()) return guarded([&] { return cmd_periodic(resolve(o)); }, true);
    if (stability->parsed()) return guarded([&] { return cmd_stability(resolve(o)); }, true);
    return guarded([&] { return cmd_sweep(resolve(o)); }, true);
}
