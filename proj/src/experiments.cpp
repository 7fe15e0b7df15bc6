#include "coopemit/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "coopemit/errors.hpp"
#include "coopemit/parallel.hpp"
#include "coopemit/rng.hpp"
#include "coopemit/two_emitter.hpp"

namespace coopemit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kTrajectoryStream = 0x7472616aULL;

struct Job {
    enum class Source { random, circle, fixed };
    Source source = Source::random;
    std::size_t grid_index = 0;
    std::size_t config_index = 0;
    std::uint64_t seed = 0;
    double r_bar = 0.0;
    double omega0 = 0.0;
    double gamma_c = 0.0;
};

EmitterConfiguration make_configuration(const SweepSpec& spec, const Job& job) {
    switch (job.source) {
        case Job::Source::random:
            return sample_random_configuration(spec.n, job.r_bar, job.seed, 1000, spec.convention);
        case Job::Source::circle:
            return circular_configuration(spec.n, job.r_bar, Vec3{0.0, 0.0, 1.0}, spec.convention);
        case Job::Source::fixed:
            break;
    }
    return *spec.configuration;
}

SweepRow failed_row(const SweepSpec& spec, const Job& job, const std::string& what) {
    SweepRow row;
    row.mode = spec.mode;
    row.n = spec.n;
    row.r_bar = job.r_bar;
    row.r12 = kNaN;
    row.omega0 = job.omega0;
    row.gamma_c = job.gamma_c;
    row.delta0 = optimal_detuning(job.omega0, spec.gamma0, job.gamma_c);
    row.sx_ind = independent_sx(spec.n, job.omega0, row.delta0, spec.gamma0, job.gamma_c);
    row.g_bar = row.gamma_bar = row.chi = kNaN;
    row.tier = resolve_tier(spec.tier_policy, spec.n, job.r_bar);
    row.sx = row.eta = row.error_metric = kNaN;
    row.failed = true;
    row.error = what;
    return row;
}

std::vector<SweepRow> run_jobs(const SweepSpec& spec, const std::vector<Job>& jobs) {
    std::vector<SweepRow> rows(jobs.size());
    parallel_for(jobs.size(), spec.workers, [&](std::size_t i) {
        const Job& job = jobs[i];
        SweepRow row;
        try {
            const EmitterConfiguration config = make_configuration(spec, job);
            row = solve_configuration(spec, config, job.omega0, job.gamma_c, job.seed);
        } catch (const std::exception& e) {
            row = failed_row(spec, job, e.what());
        }
        row.grid_index = job.grid_index;
        row.config_index = job.config_index;
        row.seed = job.seed;
        rows[i] = std::move(row);
    });
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.grid_index != b.grid_index ? a.grid_index < b.grid_index : a.config_index < b.config_index;
    });
    return rows;
}

std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows) {
    std::vector<SummaryRow> out;
    std::size_t begin = 0;
    while (begin < rows.size()) {
        std::size_t end = begin;
        while (end < rows.size() && rows[end].grid_index == rows[begin].grid_index) ++end;
        SummaryRow s;
        s.grid_index = rows[begin].grid_index;
        s.r_bar = rows[begin].r_bar;
        s.omega0 = rows[begin].omega0;
        s.gamma_c = rows[begin].gamma_c;
        std::vector<double> etas;
        double g_sum = 0.0, chi_sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const SweepRow& r = rows[i];
            if (r.failed || !std::isfinite(r.eta)) {
                ++s.n_failed;
                continue;
            }
            etas.push_back(r.eta);
            g_sum += r.g_bar;
            chi_sum += r.chi;
        }
        s.n_ok = etas.size();
        if (etas.empty()) {
            s.mean_eta = s.p16_eta = s.p84_eta = s.mean_g_bar = s.mean_chi = kNaN;
        } else {
            double sum = 0.0;
            for (double e : etas) sum += e;
            const auto count = static_cast<double>(etas.size());
            s.mean_eta = sum / count;
            s.mean_g_bar = g_sum / count;
            s.mean_chi = chi_sum / count;
            s.p16_eta = percentile(etas, 16.0);
            s.p84_eta = percentile(std::move(etas), 84.0);
        }
        out.push_back(s);
        begin = end;
    }
    return out;
}

SweepResult finish(const SweepSpec& spec, const std::vector<Job>& jobs) {
    SweepResult result;
    result.rows = run_jobs(spec, jobs);
    result.summary = summarize(result.rows);
    return result;
}

double two_emitter_residual(const TwoEmitterParams& params, const TwoEmitterSteadyState& state) {
    const TwoEmitterSystem sys = assemble_two_emitter_system(params);
    return (sys.mx * state.x + sys.x0).norm();
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

std::string_view tier_label(SolverTier tier) {
    switch (tier) {
        case SolverTier::exact: return "exact";
        case SolverTier::rate_equation: return "rate_equation";
        case SolverTier::trajectory: return "trajectory";
        case SolverTier::analytic_n2: return "analytic_n2";
    }
    return "exact";
}

}  // namespace

std::string_view to_string(SweepMode mode) {
    switch (mode) {
        case SweepMode::separation_sweep: return "separation_sweep";
        case SweepMode::contour_n2: return "contour_n2";
        case SweepMode::drive_sweep: return "drive_sweep";
        case SweepMode::circle_sweep: return "circle_sweep";
        case SweepMode::single_config: return "single_config";
    }
    return "separation_sweep";
}

SweepMode sweep_mode_from_string(std::string_view name) {
    for (auto m : {SweepMode::separation_sweep, SweepMode::contour_n2, SweepMode::drive_sweep, SweepMode::circle_sweep,
                   SweepMode::single_config})
        if (to_string(m) == name) return m;
    throw std::invalid_argument("unknown sweep mode: " + std::string(name));
}

std::string_view to_string(TierPolicy policy) {
    switch (policy) {
        case TierPolicy::automatic: return "auto";
        case TierPolicy::exact: return "exact";
        case TierPolicy::rate: return "rate";
        case TierPolicy::trajectory: return "trajectory";
        case TierPolicy::analytic: return "analytic";
        case TierPolicy::approximate: return "approximate";
    }
    return "auto";
}

TierPolicy tier_policy_from_string(std::string_view name) {
    if (name == "automatic") return TierPolicy::automatic;
    for (auto p : {TierPolicy::automatic, TierPolicy::exact, TierPolicy::rate, TierPolicy::trajectory,
                   TierPolicy::analytic, TierPolicy::approximate})
        if (to_string(p) == name) return p;
    throw std::invalid_argument("unknown tier policy: " + std::string(name));
}

void validate(const SweepSpec& spec) {
    require(spec.n >= 1, "sweep: n must be at least 1");
    require(spec.n_configs >= 1, "sweep: n_configs must be at least 1");
    require(spec.gamma0 > 0.0, "sweep: gamma0 must be positive");
    switch (spec.mode) {
        case SweepMode::separation_sweep:
        case SweepMode::circle_sweep:
            require(!spec.r_bar_grid.empty(), "sweep: r_bar grid is empty");
            break;
        case SweepMode::drive_sweep:
            require(!spec.r_bar_grid.empty(), "sweep: r_bar grid is empty");
            require(!spec.omega_grid.empty(), "sweep: omega grid is empty");
            break;
        case SweepMode::contour_n2:
            require(spec.n == 2, "contour: n must be 2");
            require(!spec.r_bar_grid.empty(), "sweep: r_bar grid is empty");
            require(!spec.omega_grid.empty(), "sweep: omega grid is empty");
            require(!spec.gamma_c_grid.empty(), "sweep: gamma_c grid is empty");
            break;
        case SweepMode::single_config:
            require(spec.configuration.has_value() || !spec.r_bar_grid.empty(),
                    "single: needs a configuration or an r_bar value");
            if (spec.configuration) require(spec.configuration->size() == spec.n, "single: configuration size differs from n");
            break;
    }
    if (spec.mode != SweepMode::circle_sweep && spec.mode != SweepMode::single_config &&
        spec.mode != SweepMode::contour_n2)
        require(spec.n >= 2, "sweep: random configurations need n >= 2");
}

SolverTier resolve_tier(TierPolicy policy, std::size_t n, double r_bar) {
    switch (policy) {
        case TierPolicy::exact: return SolverTier::exact;
        case TierPolicy::rate: return SolverTier::rate_equation;
        case TierPolicy::trajectory: return SolverTier::trajectory;
        case TierPolicy::analytic: return SolverTier::analytic_n2;
        case TierPolicy::automatic:
            if (n == 2) return SolverTier::analytic_n2;
            if (n <= kDefaultExactLimit) return SolverTier::exact;
            break;
        case TierPolicy::approximate:
            break;
    }
    return r_bar < kRateTierMaxSeparation ? SolverTier::rate_equation : SolverTier::trajectory;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0.0) || !(hi > 0.0)) throw std::invalid_argument("log_grid: bounds must be positive");
    if (points == 0) throw std::invalid_argument("log_grid: need at least one point");
    if (points == 1) return {lo};
    std::vector<double> out(points);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t k = 0; k < points; ++k)
        out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(points - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty sample");
    if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile: q outside [0, 100]");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * q / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

SweepRow solve_configuration(const SweepSpec& spec, const EmitterConfiguration& config, double omega0, double gamma_c,
                             std::uint64_t seed) {
    const std::size_t n = config.size();
    SweepRow row;
    row.mode = spec.mode;
    row.n = n;
    row.seed = seed;
    row.omega0 = omega0;
    row.gamma_c = gamma_c;
    row.r_bar = n >= 2 ? mean_separation(config, spec.convention) : 0.0;
    row.r12 = n == 2 ? config.distance(0, 1) : kNaN;

    const PairCoefficients coeffs = pair_coefficients(config, spec.gamma0);
    const EnsembleStats stats = ensemble_stats(config, coeffs);
    row.g_bar = stats.g_bar;
    row.gamma_bar = stats.gamma_bar;
    row.chi = stats.chi;
    row.delta0 = optimal_detuning(omega0, spec.gamma0, gamma_c);
    row.sx_ind = independent_sx(n, omega0, row.delta0, spec.gamma0, gamma_c);
    row.tier = resolve_tier(spec.tier_policy, n, row.r_bar);

    MasterEquationSpec me;
    me.drive.omega0 = omega0;
    me.drive.delta = row.delta0;
    me.gamma_c = gamma_c;
    me.coeffs = coeffs;

    auto solve_rate = [&] {
        const SteadyStateResult r = dressed_rate_steady_state(me, -1.0, spec.solver);
        row.tier = SolverTier::rate_equation;
        row.sx = r.sx;
        row.error_metric = r.residual;
    };

    try {
        switch (row.tier) {
            case SolverTier::analytic_n2: {
                if (n != 2) throw std::invalid_argument("analytic tier needs n = 2");
                TwoEmitterParams p;
                p.omega0 = omega0;
                p.delta = row.delta0;
                p.gamma0 = spec.gamma0;
                p.gamma_c = gamma_c;
                p.g12 = coeffs.g(0, 1);
                p.gamma12 = coeffs.gamma(0, 1);
                const TwoEmitterSteadyState s = steady_state_n2(p);
                row.sx = s.sx;
                row.error_metric = two_emitter_residual(p, s);
                break;
            }
            case SolverTier::exact: {
                const SteadyStateResult r = steady_state(me, spec.solver);
                row.sx = r.sx;
                row.error_metric = r.residual;
                break;
            }
            case SolverTier::rate_equation:
                solve_rate();
                break;
            case SolverTier::trajectory: {
                const EffectiveMESpec eff = effective_spec(me);
                const bool fallback = spec.tier_policy == TierPolicy::automatic ||
                                      spec.tier_policy == TierPolicy::approximate;
                if (fallback && !effective_validity(eff).ok) {
                    solve_rate();
                    break;
                }
                TrajectoryOptions opts = spec.trajectory;
                opts.workers = 1;
                const TrajectoryEstimate t =
                    trajectory_steady_sx(eff, spec.n_traj, rng::derive_seed(seed, kTrajectoryStream), opts);
                row.sx = t.mean_sx;
                row.error_metric = t.stderr;
                break;
            }
        }
        row.eta = row.sx / row.sx_ind;
    } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        row.sx = row.eta = row.error_metric = kNaN;
    }
    return row;
}

SweepResult run_separation_sweep(const SweepSpec& spec) {
    validate(spec);
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < spec.r_bar_grid.size(); ++i)
        for (std::size_t k = 0; k < spec.n_configs; ++k) {
            Job j;
            j.grid_index = i;
            j.config_index = k;
            j.seed = rng::derive_seed(spec.master_seed, k);
            j.r_bar = spec.r_bar_grid[i];
            j.omega0 = spec.omega0;
            j.gamma_c = spec.gamma_c;
            jobs.push_back(j);
        }
    return finish(spec, jobs);
}

SweepResult run_drive_sweep(const SweepSpec& spec) {
    validate(spec);
    std::vector<Job> jobs;
    const std::size_t w = spec.omega_grid.size();
    for (std::size_t i = 0; i < spec.r_bar_grid.size(); ++i)
        for (std::size_t o = 0; o < w; ++o)
            for (std::size_t k = 0; k < spec.n_configs; ++k) {
                Job j;
                j.grid_index = i * w + o;
                j.config_index = k;
                j.seed = rng::derive_seed(spec.master_seed, k);
                j.r_bar = spec.r_bar_grid[i];
                j.omega0 = spec.omega_grid[o];
                j.gamma_c = spec.gamma_c;
                jobs.push_back(j);
            }
    return finish(spec, jobs);
}

SweepResult run_circle_sweep(const SweepSpec& spec) {
    validate(spec);
    require(spec.n >= 2, "circle: n must be at least 2");
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < spec.r_bar_grid.size(); ++i) {
        Job j;
        j.source = Job::Source::circle;
        j.grid_index = i;
        j.seed = spec.master_seed;
        j.r_bar = spec.r_bar_grid[i];
        j.omega0 = spec.omega0;
        j.gamma_c = spec.gamma_c;
        jobs.push_back(j);
    }
    return finish(spec, jobs);
}

SweepResult run_single(const SweepSpec& spec) {
    validate(spec);
    Job j;
    j.omega0 = spec.omega0;
    j.gamma_c = spec.gamma_c;
    if (spec.configuration) {
        j.source = Job::Source::fixed;
        j.seed = spec.master_seed;
        j.r_bar = spec.n >= 2 ? mean_separation(*spec.configuration, spec.convention) : 0.0;
    } else {
        j.seed = rng::derive_seed(spec.master_seed, 0);
        j.r_bar = spec.r_bar_grid.front();
    }
    return finish(spec, {j});
}

SweepResult run_contour_n2(const SweepSpec& spec) {
    validate(spec);
    const std::size_t w = spec.omega_grid.size(), g = spec.gamma_c_grid.size();
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < spec.r_bar_grid.size(); ++p)
        for (std::size_t l = 0; l < g; ++l)
            for (std::size_t o = 0; o < w; ++o) {
                Job j;
                j.source = Job::Source::circle;
                j.grid_index = (p * g + l) * w + o;
                j.seed = spec.master_seed;
                j.r_bar = spec.r_bar_grid[p];
                j.omega0 = spec.omega_grid[o];
                j.gamma_c = spec.gamma_c_grid[l];
                jobs.push_back(j);
            }
    SweepResult result = finish(spec, jobs);
    for (std::size_t p = 0; p < spec.r_bar_grid.size(); ++p) {
        std::vector<std::vector<double>> eta(g, std::vector<double>(w, kNaN));
        for (std::size_t l = 0; l < g; ++l)
            for (std::size_t o = 0; o < w; ++o) eta[l][o] = result.rows[(p * g + l) * w + o].eta;
        const auto segs = eta_contour(spec.omega_grid, spec.gamma_c_grid, eta, spec.r_bar_grid[p]);
        result.contour.insert(result.contour.end(), segs.begin(), segs.end());
    }
    return result;
}

SweepResult run_sweep(const SweepSpec& spec) {
    switch (spec.mode) {
        case SweepMode::separation_sweep: return run_separation_sweep(spec);
        case SweepMode::contour_n2: return run_contour_n2(spec);
        case SweepMode::drive_sweep: return run_drive_sweep(spec);
        case SweepMode::circle_sweep: return run_circle_sweep(spec);
        case SweepMode::single_config: return run_single(spec);
    }
    throw std::invalid_argument("unknown sweep mode");
}

std::vector<ContourSegment> eta_contour(const std::vector<double>& omega_grid, const std::vector<double>& gamma_c_grid,
                                        const std::vector<std::vector<double>>& eta, double r_bar, double level) {
    struct Point {
        double omega, gamma_c;
    };
    // Position along an edge, interpolated in log coordinates when both ends are positive.
    auto along = [](double a, double b, double t) {
        if (a > 0.0 && b > 0.0) return std::exp(std::log(a) + t * (std::log(b) - std::log(a)));
        return a + t * (b - a);
    };
    std::vector<ContourSegment> out;
    for (std::size_t l = 0; l + 1 < gamma_c_grid.size(); ++l)
        for (std::size_t o = 0; o + 1 < omega_grid.size(); ++o) {
            // Corners counter-clockwise: (o,l) (o+1,l) (o+1,l+1) (o,l+1).
            const std::size_t co[4] = {o, o + 1, o + 1, o};
            const std::size_t cl[4] = {l, l, l + 1, l + 1};
            double f[4];
            bool finite = true;
            for (int c = 0; c < 4; ++c) {
                f[c] = eta[cl[c]][co[c]] - level;
                finite = finite && std::isfinite(f[c]);
            }
            if (!finite) continue;
            std::vector<Point> cross;
            for (int e = 0; e < 4; ++e) {
                const int a = e, b = (e + 1) % 4;
                if ((f[a] >= 0.0) == (f[b] >= 0.0)) continue;
                const double t = f[a] / (f[a] - f[b]);
                cross.push_back({along(omega_grid[co[a]], omega_grid[co[b]], t),
                                 along(gamma_c_grid[cl[a]], gamma_c_grid[cl[b]], t)});
            }
            if (cross.size() == 2) {
                out.push_back({r_bar, cross[0].omega, cross[0].gamma_c, cross[1].omega, cross[1].gamma_c});
            } else if (cross.size() == 4) {
                // Saddle: the bilinear center value decides which crossings connect.
                const double center = 0.25 * (f[0] + f[1] + f[2] + f[3]);
                const bool join01 = (center >= 0.0) != (f[0] >= 0.0);
                if (join01) {
                    out.push_back({r_bar, cross[0].omega, cross[0].gamma_c, cross[1].omega, cross[1].gamma_c});
                    out.push_back({r_bar, cross[2].omega, cross[2].gamma_c, cross[3].omega, cross[3].gamma_c});
                } else {
                    out.push_back({r_bar, cross[0].omega, cross[0].gamma_c, cross[3].omega, cross[3].gamma_c});
                    out.push_back({r_bar, cross[1].omega, cross[1].gamma_c, cross[2].omega, cross[2].gamma_c});
                }
            }
        }
    return out;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << kCsvHeader << '\n';
    for (const SweepRow& r : rows) {
        out << to_string(r.mode) << ',' << r.n << ',' << r.config_index << ',' << r.seed << ',' << format_number(r.r_bar)
            << ',' << format_number(r.r12) << ',' << format_number(r.omega0) << ',' << format_number(r.gamma_c) << ','
            << format_number(r.delta0) << ',' << format_number(r.g_bar) << ',' << format_number(r.gamma_bar) << ','
            << format_number(r.chi) << ',' << (r.failed ? "failed:" : "") << tier_label(r.tier) << ','
            << format_number(r.sx) << ',' << format_number(r.sx_ind) << ',' << format_number(r.eta) << ','
            << format_number(r.error_metric) << '\n';
    }
}

std::vector<SweepRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("read_csv: missing or unexpected header");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 17) throw std::runtime_error("read_csv: expected 17 fields in: " + line);
        auto num = [](const std::string& s) { return s == "nan" ? kNaN : std::stod(s); };
        SweepRow r;
        r.mode = sweep_mode_from_string(f[0]);
        r.n = std::stoul(f[1]);
        r.config_index = std::stoul(f[2]);
        r.seed = std::stoull(f[3]);
        r.r_bar = num(f[4]);
        r.r12 = num(f[5]);
        r.omega0 = num(f[6]);
        r.gamma_c = num(f[7]);
        r.delta0 = num(f[8]);
        r.g_bar = num(f[9]);
        r.gamma_bar = num(f[10]);
        r.chi = num(f[11]);
        std::string tier = f[12];
        if (tier.rfind("failed:", 0) == 0) {
            r.failed = true;
            tier = tier.substr(7);
        }
        r.tier = tier_from_string(tier);
        r.sx = num(f[13]);
        r.sx_ind = num(f[14]);
        r.eta = num(f[15]);
        r.error_metric = num(f[16]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
    out << "grid_index,r_bar,omega0,gamma_c,n_ok,n_failed,mean_eta,p16_eta,p84_eta,mean_g_bar,mean_chi\n";
    for (const SummaryRow& s : summary)
        out << s.grid_index << ',' << format_number(s.r_bar) << ',' << format_number(s.omega0) << ','
            << format_number(s.gamma_c) << ',' << s.n_ok << ',' << s.n_failed << ',' << format_number(s.mean_eta) << ','
            << format_number(s.p16_eta) << ',' << format_number(s.p84_eta) << ',' << format_number(s.mean_g_bar) << ','
            << format_number(s.mean_chi) << '\n';
}

void write_contour_csv(std::ostream& out, const std::vector<ContourSegment>& contour) {
    out << "r_bar,omega0_a,gamma_c_a,omega0_b,gamma_c_b\n";
    for (const ContourSegment& c : contour)
        out << format_number(c.r_bar) << ',' << format_number(c.omega_a) << ',' << format_number(c.gamma_c_a) << ','
            << format_number(c.omega_b) << ',' << format_number(c.gamma_c_b) << '\n';
}

void write_metadata(std::ostream& out, const SweepSpec& spec, const SweepResult& result) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(spec.mode);
    j["n"] = spec.n;
    j["r_bar_grid"] = spec.r_bar_grid;
    j["omega_grid"] = spec.omega_grid;
    j["gamma_c_grid"] = spec.gamma_c_grid;
    j["omega0"] = spec.omega0;
    j["gamma_c"] = spec.gamma_c;
    j["gamma0"] = spec.gamma0;
    j["n_configs"] = spec.n_configs;
    j["n_traj"] = spec.n_traj;
    j["master_seed"] = spec.master_seed;
    j["tier_policy"] = to_string(spec.tier_policy);
    j["separation_convention"] = to_string(spec.convention);
    j["band"] = "empirical 16th and 84th percentiles of eta over successful rows, linear interpolation";
    j["rng"] = rng::kGeneratorName;
    j["config_seed"] = "derive_seed(master_seed, config_index)";
    j["csv_columns"] = kCsvHeader;
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const SweepRow& r : result.rows)
        if (r.failed)
            failures.push_back({{"grid_index", r.grid_index},
                                {"config_index", r.config_index},
                                {"tier", tier_label(r.tier)},
                                {"error", r.error}});
    j["failures"] = failures;
    out << j.dump(2) << '\n';
}

}  // namespace coopemit
