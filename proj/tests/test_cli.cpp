#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "tumor/commands.hpp"

using namespace tumor;
using namespace tumor::cli;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"(
version: 1
model: {mu: 1.0, sigma_tilde: 0.9, gamma: 1.0}
schedule: {form: sinusoid, period: 1.0, mean: 1.0, amplitude: 0.5}
)";

RunConfig config(const std::string& extra = "", const std::string& base = kBase) {
    return parse_config_string(base + extra);
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("tumor_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, Defaults) {
    const auto cfg = config();
    EXPECT_EQ(cfg.params.mu, 1.0);
    EXPECT_EQ(cfg.params.schedule.form_name(), "sinusoid");
    EXPECT_EQ(cfg.periodic.segments, 1024);
    EXPECT_EQ(cfg.stability.n_max, 32);
    EXPECT_FALSE(cfg.sweep.has_value());
    EXPECT_EQ(cfg.output_dir, "out");
}

TEST(Config, AllScheduleForms) {
    const std::string head = "version: 1\nmodel: {mu: 1, sigma_tilde: 0.5, gamma: 1}\n";
    EXPECT_EQ(config("", head + "schedule: {form: constant, period: 2, value: 1.5}\n").params.schedule.mean(), 1.5);
    EXPECT_EQ(config("", head + "schedule: {form: fourier, period: 1, a0: 1, cos: [0.2], sin: [0.1, 0.1]}\n")
                  .params.schedule.form_name(),
              "fourier");
    EXPECT_EQ(config("", head + "schedule: {form: table, period: 1, points: [[0, 1], [0.5, 2], [1, 1]]}\n")
                  .params.schedule.form_name(),
              "table");
}

TEST(Config, RejectsVersionProblems) {
    EXPECT_THROW(parse_config_string("model: {mu: 1, sigma_tilde: 0.9, gamma: 1}\n"), ConfigError);
    EXPECT_THROW(parse_config_string(std::string(kBase).replace(1, 10, "version: 2")), ConfigError);
}

TEST(Config, RejectsBadDocuments) {
    EXPECT_THROW(parse_config_string("version: 1\nmodel: [1, 2\n"), ConfigError);
    EXPECT_THROW(parse_config_string("- 1\n- 2\n"), ConfigError);
    EXPECT_THROW(parse_config_string("version: 1\nmodel: {mu: 1, gamma: 1}\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/run.yaml"), ConfigError);
}

TEST(Config, UnknownScheduleForm) {
    const std::string text = "version: 1\nmodel: {mu: 1, sigma_tilde: 0.9, gamma: 1}\n"
                             "schedule: {form: square, period: 1}\n";
    EXPECT_THROW(parse_config_string(text), ConfigError);
}

TEST(Config, NegativeSupplyNamesForm) {
    const std::string text = "version: 1\nmodel: {mu: 1, sigma_tilde: 0.9, gamma: 1}\n"
                             "schedule: {form: sinusoid, period: 1, mean: 1, amplitude: 1.5}\n";
    try {
        parse_config_string(text);
        FAIL() << "expected InvalidSchedule";
    } catch (const InvalidSchedule& e) {
        EXPECT_NE(std::string(e.what()).find("sinusoid"), std::string::npos);
    }
}

TEST(Config, InvalidModelParameters) {
    const std::string sched = "schedule: {form: constant, period: 1, value: 1}\n";
    EXPECT_THROW(parse_config_string("version: 1\nmodel: {mu: -1, sigma_tilde: 0.9, gamma: 1}\n" + sched),
                 InvalidParams);
    EXPECT_THROW(parse_config_string("version: 1\nmodel: {mu: 1, sigma_tilde: 0.9, gamma: 0}\n" + sched),
                 InvalidParams);
}

TEST(Config, Tolerances) {
    EXPECT_EQ(config("tolerances: {rtol: 1.0e-8, atol: 1.0e-10}\n").tol.rtol, 1e-8);
    EXPECT_THROW(config("tolerances: {rtol: -1.0e-8}\n"), ConfigError);
    EXPECT_THROW(config("tolerances: {atol: 0}\n"), ConfigError);
    auto cfg = config();
    cfg.tol.rtol = 0.0;
    EXPECT_THROW(validate_tolerances(cfg), ConfigError);
}

TEST(Config, SweepGrids) {
    const auto cfg = config("sweep:\n  mu: {start: 1, stop: 100, count: 3, scale: log}\n  sigma_tilde: [0.5, 0.9]\n");
    ASSERT_TRUE(cfg.sweep.has_value());
    ASSERT_EQ(cfg.sweep->mu.size(), 3u);
    EXPECT_DOUBLE_EQ(cfg.sweep->mu[1], 10.0);
    EXPECT_EQ(cfg.sweep->sigma_tilde, (std::vector<double>{0.5, 0.9}));
    const auto lin = config("sweep:\n  mu: {start: 1, stop: 2, count: 5}\n");
    EXPECT_DOUBLE_EQ(lin.sweep->mu[2], 1.5);
    EXPECT_TRUE(lin.sweep->sigma_tilde.empty());
}

TEST(Config, EmptyGridIsRejected) {
    EXPECT_THROW(config("sweep:\n  mu: []\n"), ConfigError);
    EXPECT_THROW(config("sweep:\n  n_max: 4\n"), ConfigError);
    EXPECT_THROW(config("sweep:\n  mu: {start: 1, stop: 2, count: 0}\n"), ConfigError);
}

TEST(Config, GridMustIncrease) {
    EXPECT_THROW(config("sweep:\n  mu: [1, 3, 2]\n"), ConfigError);
    EXPECT_THROW(config("sweep:\n  mu: [1, 1]\n"), ConfigError);
    EXPECT_THROW(config("sweep:\n  mu: {start: 2, stop: 1, count: 3}\n"), ConfigError);
    EXPECT_THROW(config("sweep:\n  mu: [0, 1]\n"), ConfigError);
    EXPECT_THROW(config("sweep:\n  mu: {start: 0, stop: 1, count: 3, scale: log}\n"), ConfigError);
}

TEST(Config, SurfaceModes) {
    const auto cfg = config("periodic:\n  surface: {epsilon: 0.02, t: 1.5, modes: [[2, -1, 0.3], [4, 4, 1]]}\n");
    ASSERT_TRUE(cfg.periodic.surface.has_value());
    EXPECT_EQ(cfg.periodic.surface->modes.size(), 2u);
    EXPECT_EQ(cfg.periodic.surface->modes[0].m, -1);
    EXPECT_THROW(config("periodic:\n  surface: {modes: [[2, 3, 1]]}\n"), ConfigError);
    EXPECT_THROW(config("periodic:\n  surface: {modes: [[2.5, 0, 1]]}\n"), ConfigError);
    EXPECT_THROW(config("periodic:\n  surface: {modes: [[2, 0]]}\n"), ConfigError);
}

TEST(Config, CountsAreChecked) {
    EXPECT_THROW(config("simulate: {n_periods: 0}\n"), ConfigError);
    EXPECT_THROW(config("periodic: {segments: 1}\n"), ConfigError);
    EXPECT_THROW(config("stability: {n_max: 1}\n"), ConfigError);
    EXPECT_THROW(config("simulate: {r0: -2}\n"), ConfigError);
}

// ---------------------------------------------------------------- output

TEST(Output, SeventeenDigitsAndLineEndings) {
    CsvTable t({"a", "b"});
    t.add_numbers({0.1, 1.0 / 3.0});
    EXPECT_EQ(t.str(), "a,b\n0.10000000000000001,0.33333333333333331\n");
    EXPECT_THROW(t.add({"x"}), std::logic_error);
    EXPECT_EQ(std::stod(num(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Output, UnwritableDirectory) {
    TempDir tmp;
    fs::create_directories(tmp.path());
    std::ofstream(tmp.path() / "file") << "x";
    auto cfg = config();
    cfg.output_dir = (tmp.path() / "file" / "sub").string();
    EXPECT_THROW(cmd_simulate(cfg), ConfigError);
}

// ---------------------------------------------------------------- simulate

TEST(Simulate, PersistenceRun) {
    TempDir tmp;
    auto cfg = config("simulate: {r0: 1.0, n_periods: 5, samples_per_period: 8}\n");
    cfg.output_dir = tmp.str();
    EXPECT_EQ(cmd_simulate(cfg), kOk);
    const auto rows = read_csv(tmp.path() / "trajectory.csv");
    ASSERT_EQ(rows.size(), 1u + 41u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "R"}));
    EXPECT_EQ(std::stod(rows[8][0]), 7.0 / 8.0);
    const auto j = read_json(tmp.path() / "simulate.json");
    EXPECT_EQ(j["verdict"], "Persistence");
    EXPECT_FALSE(j.contains("extinction"));
}

TEST(Simulate, ExtinctionTableIsNonIncreasing) {
    TempDir tmp;
    auto cfg = config("simulate: {r0: 1.0, n_periods: 50, samples_per_period: 4}\n");
    cfg.params = cfg.params.with_sigma_tilde(1.0);
    cfg.output_dir = tmp.str();
    EXPECT_EQ(cmd_simulate(cfg), kOk);
    const auto j = read_json(tmp.path() / "simulate.json");
    EXPECT_EQ(j["verdict"], "Extinction");
    EXPECT_TRUE(j["extinction"]["non_increasing"].get<bool>());
    const auto rows = read_csv(tmp.path() / "periods.csv");
    ASSERT_EQ(rows.size(), 52u);
    for (std::size_t k = 2; k < rows.size(); ++k) EXPECT_LE(std::stod(rows[k][2]), std::stod(rows[k - 1][2]));
}

// ---------------------------------------------------------------- periodic

TEST(Periodic, ConstantSupplyOrbitIsFlat) {
    TempDir tmp;
    auto cfg = parse_config_string("version: 1\nmodel: {mu: 1, sigma_tilde: 0.9, gamma: 1}\n"
                                   "schedule: {form: constant, period: 1, value: 1}\n"
                                   "periodic: {segments: 64, convergence: {r0_factors: [], n_periods: 10}}\n");
    cfg.output_dir = tmp.str();
    EXPECT_EQ(cmd_periodic(cfg), kOk);
    const auto rows = read_csv(tmp.path() / "orbit.csv");
    ASSERT_EQ(rows.size(), 66u);
    const double r0 = std::stod(rows[1][1]);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NEAR(std::stod(rows[i][1]), r0, 1e-10 * r0);
}

TEST(Periodic, DefaultSummary) {
    TempDir tmp;
    auto cfg = config("periodic:\n  convergence: {r0_factors: [0.5, 2.0], n_periods: 60}\n  fields: {n_r: 5, n_t: 4}\n"
                      "  surface: {epsilon: 0.01, n_theta: 5, n_phi: 8, modes: [[2, 0, 1]]}\n");
    cfg.output_dir = tmp.str();
    EXPECT_EQ(cmd_periodic(cfg), kOk);
    const auto j = read_json(tmp.path() / "periodic.json");
    for (const char* key : {"R_star0", "R_min", "R_max", "residual", "delta_hat", "delta_bound"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_LE(j["residual"].get<double>(), 1e-11);
    EXPECT_LE(j["R_min"].get<double>(), j["R_star0"].get<double>());
    EXPECT_GE(j["delta_hat"].get<double>(), 0.95 * j["delta_bound"].get<double>());
    EXPECT_EQ(j["convergence"].size(), 2u);
    EXPECT_EQ(read_csv(tmp.path() / "fields.csv").size(), 21u);
    EXPECT_EQ(read_csv(tmp.path() / "surface.csv").size(), 41u);
}

TEST(Periodic, PhaseShiftReproducesOrbit) {
    TempDir a, b;
    auto cfg = config("periodic: {segments: 128, convergence: {r0_factors: []}}\n");
    cfg.output_dir = a.str();
    cmd_periodic(cfg);
    auto shifted = config("periodic: {segments: 128, phase: 0.37, convergence: {r0_factors: []}}\n");
    shifted.output_dir = b.str();
    cmd_periodic(shifted);
    const auto orbit = find_periodic(cfg.params);
    const auto rows = read_csv(b.path() / "orbit.csv");
    EXPECT_EQ(std::stod(rows[1][0]), 0.37);
    for (std::size_t i = 1; i < rows.size(); i += 7) {
        const double t = std::stod(rows[i][0]);
        EXPECT_NEAR(std::stod(rows[i][1]), orbit(t), 1e-9) << "t = " << t;
    }
}

TEST(Periodic, ExtinctionRegimeIsAPreconditionFailure) {
    TempDir tmp;
    auto cfg = config();
    cfg.params = cfg.params.with_sigma_tilde(1.2);
    cfg.output_dir = tmp.str();
    EXPECT_THROW(cmd_periodic(cfg), NoPeriodicSolution);
    EXPECT_THROW(cmd_stability(cfg), NoPeriodicSolution);
}

// ---------------------------------------------------------------- stability

TEST(Stability, VerdictsAndThresholdColumn) {
    for (double mu : {3.5, 14.0}) {
        TempDir tmp;
        auto cfg = config("stability: {n_max: 10}\n");
        cfg.params = cfg.params.with_mu(mu);
        cfg.params.gamma = 0.1;
        cfg.output_dir = tmp.str();
        EXPECT_EQ(cmd_stability(cfg), kOk);
        const auto j = read_json(tmp.path() / "stability.json");
        EXPECT_EQ(j["verdict"], mu < 7.0 ? "LinearlyStable" : "LinearlyUnstable");
        EXPECT_EQ(j["exponents"].size(), 11u);
        const auto rows = read_csv(tmp.path() / "stability.csv");
        ASSERT_EQ(rows.size(), 12u);
        EXPECT_EQ(rows[1][1], "inf");
        EXPECT_EQ(rows[2][2], "0");
        for (std::size_t i = 4; i < rows.size(); ++i) EXPECT_GT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));
    }
}

TEST(Stability, SelfConsistentThreshold) {
    TempDir tmp;
    auto cfg = parse_config_string("version: 1\nmodel: {mu: 1, sigma_tilde: 0.9, gamma: 1}\n"
                                   "schedule: {form: constant, period: 1, value: 1}\n"
                                   "stability: {n_max: 4, self_consistent: true}\n");
    cfg.output_dir = tmp.str();
    EXPECT_EQ(cmd_stability(cfg), kOk);
    const auto j = read_json(tmp.path() / "stability.json");
    EXPECT_NEAR(j["self_consistent_mu_star"].get<double>(), j["mu_star"].get<double>(), 1e-8);
}

// ---------------------------------------------------------------- sweep

TEST(Sweep, RowOrderAndDeterminism) {
    auto cfg = config("sweep:\n  mu: [1, 2, 4]\n  sigma_tilde: [0.8, 0.9]\n  n_max: 4\n");
    cfg.workers = 1;
    const auto serial = run_sweep(cfg);
    cfg.workers = 4;
    const auto parallel = run_sweep(cfg);
    ASSERT_EQ(serial.size(), 6u);
    EXPECT_EQ(serial[1].mu, 2.0);
    EXPECT_EQ(serial[1].sigma_tilde, 0.8);
    EXPECT_EQ(serial[3].sigma_tilde, 0.9);
    EXPECT_EQ(sweep_csv(serial), sweep_csv(parallel));
}

TEST(Sweep, SigmaGridFlipsAtMeanSupply) {
    const auto rows = run_sweep(config("sweep:\n  sigma_tilde: [0.9, 0.99, 1.0, 1.01]\n  n_max: 3\n"));
    EXPECT_NE(rows[1].verdict, "Extinction");
    EXPECT_TRUE(rows[1].r_star0.has_value());
    EXPECT_EQ(rows[2].verdict, "Extinction");
    EXPECT_FALSE(rows[2].r_star0.has_value());
    EXPECT_EQ(rows[3].verdict, "Extinction");
}

TEST(Sweep, MuGridFlipsAtThreshold) {
    auto cfg = config("sweep:\n  mu: [4, 6.5, 7.5, 10]\n  n_max: 3\n");
    cfg.params.gamma = 0.1;
    const auto rows = run_sweep(cfg);
    EXPECT_EQ(rows[1].verdict, "LinearlyStable");
    EXPECT_EQ(rows[2].verdict, "LinearlyUnstable");
    for (const auto& r : rows) EXPECT_EQ(*r.lambda2 > 0.0, r.verdict == "LinearlyStable");
}

TEST(Sweep, PartialFailuresAreRecordedPerRow) {
    TempDir tmp;
    auto cfg = config("sweep:\n  sigma_tilde: [0.9, 1.1]\n  n_max: 80\n");
    cfg.output_dir = tmp.str();
    EXPECT_EQ(cmd_sweep(cfg), kOk);
    const auto rows = read_csv(tmp.path() / "sweep.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1][2], "Error");
    EXPECT_FALSE(rows[1][7].empty());
    EXPECT_EQ(rows[2][2], "Extinction");
    EXPECT_EQ(read_json(tmp.path() / "sweep.json")["failed"], 1);
}

TEST(Sweep, AllRowsFailing) {
    TempDir tmp;
    auto cfg = config("sweep:\n  mu: [1, 2]\n  n_max: 80\n");
    cfg.output_dir = tmp.str();
    EXPECT_EQ(cmd_sweep(cfg), kRuntimeFailure);
}

TEST(Sweep, MissingSection) { EXPECT_THROW(run_sweep(config()), ConfigError); }
