#pragma once

// Seeded sweep harness: configuration sampling, solver-tier selection, per-row
// solves on a worker pool, CSV emission and per-grid-point summaries.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coopemit/approx.hpp"
#include "coopemit/geometry.hpp"
#include "coopemit/steadystate.hpp"

namespace coopemit {

enum class SweepMode { separation_sweep, contour_n2, drive_sweep, circle_sweep, single_config };

enum class TierPolicy {
    automatic,    // analytic for n = 2, exact for n <= 6, then rate below r_bar 0.1 and trajectory above
    exact,
    rate,
    trajectory,
    analytic,
    approximate   // the large-n rule (rate / trajectory by r_bar) at any n
};

std::string_view to_string(SweepMode mode);
SweepMode sweep_mode_from_string(std::string_view name);
std::string_view to_string(TierPolicy policy);
TierPolicy tier_policy_from_string(std::string_view name);

/// Separation below which the automatic policy prefers the rate tier over trajectories.
inline constexpr double kRateTierMaxSeparation = 0.1;

struct SweepSpec {
    SweepMode mode = SweepMode::separation_sweep;
    std::size_t n = 6;
    std::vector<double> r_bar_grid;
    std::vector<double> omega_grid;     // drive sweep and contour
    std::vector<double> gamma_c_grid;   // contour
    double omega0 = 1e3;
    double gamma_c = 1.3e4;
    double gamma0 = 1.0;
    std::size_t n_configs = 100;
    std::size_t n_traj = 200;
    std::uint64_t master_seed = 1;
    TierPolicy tier_policy = TierPolicy::automatic;
    int workers = 1;
    SeparationConvention convention = SeparationConvention::per_pair;
    // single_config only: solve this configuration instead of sampling one.
    std::optional<EmitterConfiguration> configuration;
    SteadyStateOptions solver;
    TrajectoryOptions trajectory;   // its worker count is ignored; rows are the parallel unit
};

/// Throws std::invalid_argument when a grid the mode needs is empty or n_configs is zero.
void validate(const SweepSpec& spec);

struct SweepRow {
    SweepMode mode = SweepMode::separation_sweep;
    std::size_t n = 0;
    std::size_t grid_index = 0;
    std::size_t config_index = 0;
    std::uint64_t seed = 0;
    double r_bar = 0.0;
    double r12 = 0.0;            // NaN unless n = 2
    double omega0 = 0.0;
    double gamma_c = 0.0;
    double delta0 = 0.0;
    double g_bar = 0.0;
    double gamma_bar = 0.0;
    double chi = 0.0;
    SolverTier tier = SolverTier::exact;
    double sx = 0.0;
    double sx_ind = 0.0;
    double eta = 0.0;
    double error_metric = 0.0;   // residual for deterministic tiers, standard error of sx for trajectories
    bool failed = false;
    std::string error;
};

struct SummaryRow {
    std::size_t grid_index = 0;
    double r_bar = 0.0;
    double omega0 = 0.0;
    double gamma_c = 0.0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    double mean_eta = 0.0;
    double p16_eta = 0.0;
    double p84_eta = 0.0;
    double mean_g_bar = 0.0;
    double mean_chi = 0.0;
};

struct ContourSegment {
    double r_bar = 0.0;
    double omega_a = 0.0, gamma_c_a = 0.0;
    double omega_b = 0.0, gamma_c_b = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;         // sorted by (grid_index, config_index)
    std::vector<SummaryRow> summary;    // one per grid point
    std::vector<ContourSegment> contour;   // contour_n2 only
};

/// Tier the policy picks for an ensemble of n emitters at mean separation r_bar.
SolverTier resolve_tier(TierPolicy policy, std::size_t n, double r_bar);

/// Log-spaced grid with `points` values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t points);

/// Linear-interpolation percentile (q in [0, 100]) of unsorted data.
double percentile(std::vector<double> values, double q);

/// Solves one configuration under the spec's tier policy at the given drive and
/// dephasing. `seed` labels the row and seeds the trajectory tier. Solver
/// failures are captured in the row.
SweepRow solve_configuration(const SweepSpec& spec, const EmitterConfiguration& config, double omega0, double gamma_c,
                             std::uint64_t seed);

SweepResult run_separation_sweep(const SweepSpec& spec);
SweepResult run_contour_n2(const SweepSpec& spec);
SweepResult run_drive_sweep(const SweepSpec& spec);
SweepResult run_circle_sweep(const SweepSpec& spec);
SweepResult run_single(const SweepSpec& spec);

/// Dispatches on spec.mode.
SweepResult run_sweep(const SweepSpec& spec);

/// eta = 1 level set of one (omega0, gamma_c) panel, interpolated bilinearly in log coordinates.
/// `eta` is indexed [gamma_c index][omega index].
std::vector<ContourSegment> eta_contour(const std::vector<double>& omega_grid, const std::vector<double>& gamma_c_grid,
                                        const std::vector<std::vector<double>>& eta, double r_bar, double level = 1.0);

inline constexpr std::string_view kCsvHeader =
    "mode,n,config_index,seed,r_bar,r12,omega0,gamma_c,delta0,g_bar,gamma_bar,chi,tier,sx,sx_ind,eta,error_metric";

/// 17 significant digits; NaN is written as "nan".
std::string format_number(double value);

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);
void write_contour_csv(std::ostream& out, const std::vector<ContourSegment>& contour);
/// JSON run description: spec, band definition, generator name and per-row failures.
void write_metadata(std::ostream& out, const SweepSpec& spec, const SweepResult& result);

}  // namespace coopemit
