#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "coopemit/experiments.hpp"
#include "coopemit/geometry.hpp"

using namespace coopemit;

namespace {

struct CliOptions {
    std::size_t n = 0;   // 0 picks the mode default
    double rbar_min = 0.03, rbar_max = 3.0;
    std::size_t rbar_points = 12;
    std::vector<double> rbar;
    double omega0 = 1e3, gammac = 1.3e4, gamma0 = 1.0;
    double omega_min = 0.0, omega_max = 0.0;
    std::size_t omega_points = 0;
    double gammac_min = 0.1, gammac_max = 1e6;
    std::size_t gammac_points = 29;
    bool zero_gammac_row = true;
    std::size_t configs = 100, trajectories = 200;
    std::uint64_t seed = 1;
    std::string tier = "auto";
    int workers = 1;
    std::string out = "-";
    std::string convention = "per_pair";
    std::string positions;
    double horizon = 0.0;
};

SweepSpec build_spec(SweepMode mode, const CliOptions& o) {
    SweepSpec s;
    s.mode = mode;
    s.n = o.n != 0 ? o.n : (mode == SweepMode::contour_n2 ? 2 : 6);
    s.r_bar_grid = !o.rbar.empty() ? o.rbar : log_grid(o.rbar_min, o.rbar_max, o.rbar_points);
    if (mode == SweepMode::contour_n2 && o.rbar.empty()) s.r_bar_grid = {0.1, 0.2, 0.3};
    s.omega0 = o.omega0;
    s.gamma_c = o.gammac;
    s.gamma0 = o.gamma0;
    s.n_configs = o.configs;
    s.n_traj = o.trajectories;
    s.master_seed = o.seed;
    s.tier_policy = tier_policy_from_string(o.tier);
    s.workers = o.workers;
    s.convention = separation_convention_from_string(o.convention);
    s.trajectory.horizon = o.horizon;

    if (mode == SweepMode::drive_sweep) {
        s.omega_grid = log_grid(o.omega_min > 0 ? o.omega_min : 1.0, o.omega_max > 0 ? o.omega_max : 1e4,
                                o.omega_points > 0 ? o.omega_points : 9);
        if (o.rbar.empty()) s.r_bar_grid = {0.2};
    }
    if (mode == SweepMode::contour_n2) {
        s.omega_grid = log_grid(o.omega_min > 0 ? o.omega_min : 0.1, o.omega_max > 0 ? o.omega_max : 1e5,
                                o.omega_points > 0 ? o.omega_points : 25);
        s.gamma_c_grid = log_grid(o.gammac_min, o.gammac_max, o.gammac_points);
        if (o.zero_gammac_row) s.gamma_c_grid.insert(s.gamma_c_grid.begin(), 0.0);
    }
    if (mode == SweepMode::single_config) {
        if (!o.positions.empty()) {
            std::ifstream in(o.positions);
            if (!in) throw std::runtime_error("cannot open " + o.positions);
            s.configuration = read_configuration(in);
            s.n = s.configuration->size();
        }
        if (o.rbar.empty()) s.r_bar_grid = {0.2};
    }
    return s;
}

void write_outputs(const SweepSpec& spec, const SweepResult& result, const std::string& out) {
    if (out == "-") {
        write_csv(std::cout, result.rows);
    } else {
        std::ofstream csv(out);
        if (!csv) throw std::runtime_error("cannot write " + out);
        write_csv(csv, result.rows);
        std::ofstream summary(out + ".summary.csv");
        write_summary_csv(summary, result.summary);
        std::ofstream meta(out + ".meta.json");
        write_metadata(meta, spec, result);
        if (spec.mode == SweepMode::contour_n2) {
            std::ofstream contour(out + ".contour.csv");
            write_contour_csv(contour, result.contour);
        }
    }
    std::size_t failed = 0;
    for (const auto& r : result.rows) failed += r.failed ? 1 : 0;
    std::fprintf(stderr, "%zu rows, %zu failed\n", result.rows.size(), failed);
    if (spec.mode == SweepMode::contour_n2) return;
    std::fprintf(stderr, "%12s %12s %12s %10s %10s %10s %5s\n", "r_bar", "omega0", "gamma_c", "mean_eta", "p16", "p84",
                 "ok");
    for (const auto& s : result.summary)
        std::fprintf(stderr, "%12.5g %12.5g %12.5g %10.6f %10.6f %10.6f %5zu\n", s.r_bar, s.omega0, s.gamma_c, s.mean_eta,
                     s.p16_eta, s.p84_eta, s.n_ok);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady-state cooperative enhancement of driven emitter ensembles"};
    app.set_config("--config", "", "key=value run configuration; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions o;
    app.add_option("--n", o.n, "Number of emitters (default 6, or 2 for contour-n2)");
    app.add_option("--rbar-min", o.rbar_min, "Smallest mean separation (lambda0)");
    app.add_option("--rbar-max", o.rbar_max, "Largest mean separation (lambda0)");
    app.add_option("--rbar-points", o.rbar_points, "Log-spaced separation points");
    app.add_option("--rbar", o.rbar, "Explicit separation values, overriding the log grid");
    app.add_option("--omega0", o.omega0, "Rabi frequency (Gamma)");
    app.add_option("--gammac", o.gammac, "Collective dephasing rate (Gamma)");
    app.add_option("--gamma0", o.gamma0, "Single-emitter linewidth");
    app.add_option("--omega-min", o.omega_min, "Drive grid lower bound");
    app.add_option("--omega-max", o.omega_max, "Drive grid upper bound");
    app.add_option("--omega-points", o.omega_points, "Drive grid points");
    app.add_option("--gammac-min", o.gammac_min, "Dephasing grid lower bound (contour)");
    app.add_option("--gammac-max", o.gammac_max, "Dephasing grid upper bound (contour)");
    app.add_option("--gammac-points", o.gammac_points, "Dephasing grid points (contour)");
    app.add_flag("--zero-gammac-row,!--no-zero-gammac-row", o.zero_gammac_row, "Add a gamma_c = 0 row to the contour");
    app.add_option("--configs", o.configs, "Random configurations per grid point");
    app.add_option("--trajectories", o.trajectories, "Trajectories per configuration");
    app.add_option("--seed", o.seed, "Master seed");
    app.add_option("--tier", o.tier, "auto, exact, rate, trajectory, analytic or approximate");
    app.add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", o.out, "CSV path, '-' for stdout");
    app.add_option("--convention", o.convention, "Mean-separation normalization: per_pair or per_emitter");
    app.add_option("--positions", o.positions, "Configuration file for the single subcommand")->check(CLI::ExistingFile);
    app.add_option("--horizon", o.horizon, "Trajectory horizon (0 selects 100/kappa)");

    const std::pair<const char*, SweepMode> commands[] = {
        {"sweep-separation", SweepMode::separation_sweep}, {"contour-n2", SweepMode::contour_n2},
        {"sweep-drive", SweepMode::drive_sweep},           {"sweep-circle", SweepMode::circle_sweep},
        {"single", SweepMode::single_config}};
    std::optional<SweepMode> chosen;
    for (const auto& [name, mode] : commands) {
        const SweepMode m = mode;
        app.add_subcommand(name)->callback([&chosen, m] { chosen = m; });
    }

    CLI11_PARSE(app, argc, argv);
    try {
        const SweepSpec spec = build_spec(*chosen, o);
        write_outputs(spec, run_sweep(spec), o.out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
