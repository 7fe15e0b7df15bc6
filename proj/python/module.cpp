#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coopemit/approx.hpp"
#include "coopemit/errors.hpp"
#include "coopemit/experiments.hpp"
#include "coopemit/geometry.hpp"
#include "coopemit/steadystate.hpp"
#include "coopemit/two_emitter.hpp"

namespace py = pybind11;
using namespace coopemit;

namespace {

RMatrix positions_array(const EmitterConfiguration& c) {
    RMatrix out(static_cast<Eigen::Index>(c.size()), 3);
    for (std::size_t m = 0; m < c.size(); ++m) out.row(static_cast<Eigen::Index>(m)) = c.positions[m].transpose();
    return out;
}

EmitterConfiguration configuration_from(const RMatrix& positions, const Vec3& axis) {
    if (positions.cols() != 3) throw std::invalid_argument("positions must have shape (n, 3)");
    EmitterConfiguration c;
    for (Eigen::Index m = 0; m < positions.rows(); ++m) c.positions.push_back(positions.row(m).transpose());
    c.dipole_axis = axis.normalized();
    return c;
}

MasterEquationSpec make_spec(const EmitterConfiguration& c, double omega0, double gamma_c, std::optional<double> delta,
                             double gamma0) {
    MasterEquationSpec spec;
    spec.coeffs = pair_coefficients(c, gamma0);
    spec.drive.omega0 = omega0;
    spec.gamma_c = gamma_c;
    spec.drive.delta = delta ? *delta : optimal_detuning(omega0, gamma0, gamma_c);
    return spec;
}

template <class T>
std::string as_csv(const T& fn) {
    std::ostringstream out;
    fn(out);
    return out.str();
}

}  // namespace

PYBIND11_MODULE(_coopemit, m) {
    m.doc() = "Steady-state cooperative enhancement of driven two-level emitter ensembles";

    auto base = py::register_exception<Error>(m, "CoopemitError", PyExc_RuntimeError);
    py::register_exception<DegenerateConfiguration>(m, "DegenerateConfiguration", base.ptr());
    py::register_exception<SizeLimitExceeded>(m, "SizeLimitExceeded", base.ptr());
    py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
    py::register_exception<DegenerateSteadyState>(m, "DegenerateSteadyState", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
    py::register_exception<NonHermitianError>(m, "NonHermitianError", base.ptr());
    py::register_exception<ConditioningError>(m, "ConditioningError", base.ptr());
    py::register_exception<ValidityGateError>(m, "ValidityGateError", base.ptr());

    py::enum_<SeparationConvention>(m, "SeparationConvention")
        .value("per_emitter", SeparationConvention::per_emitter)
        .value("per_pair", SeparationConvention::per_pair);
    py::enum_<SolverTier>(m, "SolverTier")
        .value("exact", SolverTier::exact)
        .value("rate_equation", SolverTier::rate_equation)
        .value("trajectory", SolverTier::trajectory)
        .value("analytic_n2", SolverTier::analytic_n2);
    py::enum_<SweepMode>(m, "SweepMode")
        .value("separation_sweep", SweepMode::separation_sweep)
        .value("contour_n2", SweepMode::contour_n2)
        .value("drive_sweep", SweepMode::drive_sweep)
        .value("circle_sweep", SweepMode::circle_sweep)
        .value("single_config", SweepMode::single_config);
    py::enum_<TierPolicy>(m, "TierPolicy")
        .value("automatic", TierPolicy::automatic)
        .value("exact", TierPolicy::exact)
        .value("rate", TierPolicy::rate)
        .value("trajectory", TierPolicy::trajectory)
        .value("analytic", TierPolicy::analytic)
        .value("approximate", TierPolicy::approximate);

    py::class_<EmitterConfiguration>(m, "EmitterConfiguration")
        .def(py::init(&configuration_from), py::arg("positions"), py::arg("dipole_axis") = Vec3{0, 0, 1})
        .def_property_readonly("positions", &positions_array)
        .def_readonly("dipole_axis", &EmitterConfiguration::dipole_axis)
        .def("__len__", &EmitterConfiguration::size)
        .def("distance", &EmitterConfiguration::distance)
        .def("to_text", [](const EmitterConfiguration& c) { return as_csv([&](std::ostream& o) { write_configuration(o, c); }); })
        .def_static("from_text", [](const std::string& text) {
            std::istringstream in(text);
            return read_configuration(in);
        });

    py::class_<PairCoefficients>(m, "PairCoefficients")
        .def_readonly("g", &PairCoefficients::g)
        .def_readonly("gamma", &PairCoefficients::gamma)
        .def_readonly("xi", &PairCoefficients::xi)
        .def_readonly("cos_theta", &PairCoefficients::cos_theta)
        .def_readonly("gamma0", &PairCoefficients::gamma0);

    py::class_<EnsembleStats>(m, "EnsembleStats")
        .def_readonly("r_bar", &EnsembleStats::r_bar)
        .def_readonly("g_bar", &EnsembleStats::g_bar)
        .def_readonly("gamma_bar", &EnsembleStats::gamma_bar)
        .def_readonly("chi", &EnsembleStats::chi);

    m.def("dipole_coupling", &dipole_coupling, py::arg("xi"), py::arg("cos_theta"), py::arg("gamma0") = 1.0);
    m.def("correlated_emission", &correlated_emission, py::arg("xi"), py::arg("cos_theta"), py::arg("gamma0") = 1.0);
    m.def("mean_separation", &mean_separation, py::arg("config"), py::arg("convention") = SeparationConvention::per_emitter);
    m.def("sample_random_configuration", &sample_random_configuration, py::arg("n"), py::arg("r_bar"), py::arg("seed"),
          py::arg("max_redraws") = 1000, py::arg("convention") = SeparationConvention::per_emitter);
    m.def("circular_configuration", &circular_configuration, py::arg("n"), py::arg("r_bar"),
          py::arg("dipole_axis") = Vec3{0, 0, 1}, py::arg("convention") = SeparationConvention::per_emitter);
    m.def("pair_coefficients", &pair_coefficients, py::arg("config"), py::arg("gamma0") = 1.0);
    m.def("pair_dephasing_product", &pair_dephasing_product, py::arg("r12"), py::arg("gamma0") = 1.0);
    m.def("ensemble_stats", &ensemble_stats, py::arg("config"), py::arg("coeffs"));

    py::class_<SteadyStateResult>(m, "SteadyStateResult")
        .def_readonly("rho", &SteadyStateResult::rho)
        .def_readonly("sx", &SteadyStateResult::sx)
        .def_readonly("residual", &SteadyStateResult::residual)
        .def_readonly("operator_norm", &SteadyStateResult::operator_norm)
        .def_readonly("min_eigenvalue", &SteadyStateResult::min_eigenvalue)
        .def_readonly("tier", &SteadyStateResult::tier);

    m.def(
        "steady_state",
        [](const EmitterConfiguration& c, double omega0, double gamma_c, std::optional<double> delta, double gamma0) {
            return steady_state(make_spec(c, omega0, gamma_c, delta, gamma0));
        },
        py::arg("config"), py::arg("omega0"), py::arg("gamma_c"), py::arg("delta") = py::none(), py::arg("gamma0") = 1.0,
        "Exact steady state; delta defaults to the optimal detuning.");
    m.def(
        "rate_steady_state",
        [](const EmitterConfiguration& c, double omega0, double gamma_c, std::optional<double> delta, double gamma0,
           bool second_order) {
            return dressed_rate_steady_state(make_spec(c, omega0, gamma_c, delta, gamma0), -1.0, {}, second_order);
        },
        py::arg("config"), py::arg("omega0"), py::arg("gamma_c"), py::arg("delta") = py::none(), py::arg("gamma0") = 1.0,
        py::arg("second_order") = true);
    m.def(
        "effective_steady_state",
        [](const EmitterConfiguration& c, double omega0, double gamma_c, double gamma0) {
            return effective_steady_state(effective_spec(make_spec(c, omega0, gamma_c, std::nullopt, gamma0)));
        },
        py::arg("config"), py::arg("omega0"), py::arg("gamma_c"), py::arg("gamma0") = 1.0);

    py::class_<TrajectoryEstimate>(m, "TrajectoryEstimate")
        .def_readonly("mean_sx", &TrajectoryEstimate::mean_sx)
        .def_readonly("stderr", &TrajectoryEstimate::stderr)
        .def_readonly("n_traj", &TrajectoryEstimate::n_traj)
        .def_readonly("horizon", &TrajectoryEstimate::horizon)
        .def_readonly("jumps", &TrajectoryEstimate::jumps);
    m.def(
        "trajectory_steady_sx",
        [](const EmitterConfiguration& c, double omega0, double gamma_c, std::size_t n_traj, std::uint64_t seed, int workers,
           bool enforce_validity, double gamma0) {
            TrajectoryOptions opt;
            opt.workers = workers;
            opt.enforce_validity = enforce_validity;
            return trajectory_steady_sx(effective_spec(make_spec(c, omega0, gamma_c, std::nullopt, gamma0)), n_traj, seed,
                                        opt);
        },
        py::arg("config"), py::arg("omega0"), py::arg("gamma_c"), py::arg("n_traj") = 200, py::arg("seed") = 1,
        py::arg("workers") = 1, py::arg("enforce_validity") = true, py::arg("gamma0") = 1.0);

    m.def("independent_sx", &independent_sx, py::arg("n"), py::arg("omega0"), py::arg("delta"), py::arg("gamma0"),
          py::arg("gamma_c"));
    m.def("optimal_detuning", &optimal_detuning, py::arg("omega0"), py::arg("gamma0"), py::arg("gamma_c"));
    m.def("independent_sx_bound", &independent_sx_bound, py::arg("n"), py::arg("omega0"), py::arg("gamma0"),
          py::arg("gamma_c"));
    m.def("eta", &eta, py::arg("sx"), py::arg("n"), py::arg("omega0"), py::arg("gamma0"), py::arg("gamma_c"));
    m.def("kappa", &kappa, py::arg("omega0"), py::arg("gamma_c"), py::arg("delta0"));

    py::class_<TwoEmitterParams>(m, "TwoEmitterParams")
        .def(py::init<>())
        .def_readwrite("omega0", &TwoEmitterParams::omega0)
        .def_readwrite("delta", &TwoEmitterParams::delta)
        .def_readwrite("gamma0", &TwoEmitterParams::gamma0)
        .def_readwrite("gamma_c", &TwoEmitterParams::gamma_c)
        .def_readwrite("g12", &TwoEmitterParams::g12)
        .def_readwrite("gamma12", &TwoEmitterParams::gamma12);
    py::class_<TwoEmitterSteadyState>(m, "TwoEmitterSteadyState")
        .def_readonly("sx", &TwoEmitterSteadyState::sx)
        .def_readonly("x", &TwoEmitterSteadyState::x)
        .def_readonly("y", &TwoEmitterSteadyState::y)
        .def_readonly("collective", &TwoEmitterSteadyState::collective);
    m.def("two_emitter_params", &two_emitter_params, py::arg("r12"), py::arg("omega0"), py::arg("gamma_c"),
          py::arg("gamma0") = 1.0, py::arg("cos_theta") = 0.0);
    m.def("steady_state_n2", [](const TwoEmitterParams& p) { return steady_state_n2(p); }, py::arg("params"));
    m.def("eta_limit_large_dephasing", &eta_limit_large_dephasing, py::arg("chi"), py::arg("omega0"), py::arg("gamma0"),
          py::arg("gamma_c"), py::arg("collective") = false);
    m.def("eta_limit_no_dephasing", &eta_limit_no_dephasing, py::arg("chi"), py::arg("g_bar"), py::arg("omega0"),
          py::arg("gamma0"), py::arg("collective") = false);

    py::class_<SweepSpec>(m, "SweepSpec")
        .def(py::init<>())
        .def_readwrite("mode", &SweepSpec::mode)
        .def_readwrite("n", &SweepSpec::n)
        .def_readwrite("r_bar_grid", &SweepSpec::r_bar_grid)
        .def_readwrite("omega_grid", &SweepSpec::omega_grid)
        .def_readwrite("gamma_c_grid", &SweepSpec::gamma_c_grid)
        .def_readwrite("omega0", &SweepSpec::omega0)
        .def_readwrite("gamma_c", &SweepSpec::gamma_c)
        .def_readwrite("gamma0", &SweepSpec::gamma0)
        .def_readwrite("n_configs", &SweepSpec::n_configs)
        .def_readwrite("n_traj", &SweepSpec::n_traj)
        .def_readwrite("master_seed", &SweepSpec::master_seed)
        .def_readwrite("tier_policy", &SweepSpec::tier_policy)
        .def_readwrite("workers", &SweepSpec::workers)
        .def_readwrite("convention", &SweepSpec::convention)
        .def_readwrite("configuration", &SweepSpec::configuration);

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("grid_index", &SweepRow::grid_index)
        .def_readonly("config_index", &SweepRow::config_index)
        .def_readonly("seed", &SweepRow::seed)
        .def_readonly("r_bar", &SweepRow::r_bar)
        .def_readonly("r12", &SweepRow::r12)
        .def_readonly("omega0", &SweepRow::omega0)
        .def_readonly("gamma_c", &SweepRow::gamma_c)
        .def_readonly("delta0", &SweepRow::delta0)
        .def_readonly("g_bar", &SweepRow::g_bar)
        .def_readonly("gamma_bar", &SweepRow::gamma_bar)
        .def_readonly("chi", &SweepRow::chi)
        .def_readonly("tier", &SweepRow::tier)
        .def_readonly("sx", &SweepRow::sx)
        .def_readonly("sx_ind", &SweepRow::sx_ind)
        .def_readonly("eta", &SweepRow::eta)
        .def_readonly("error_metric", &SweepRow::error_metric)
        .def_readonly("failed", &SweepRow::failed)
        .def_readonly("error", &SweepRow::error);

    py::class_<SummaryRow>(m, "SummaryRow")
        .def_readonly("grid_index", &SummaryRow::grid_index)
        .def_readonly("r_bar", &SummaryRow::r_bar)
        .def_readonly("omega0", &SummaryRow::omega0)
        .def_readonly("gamma_c", &SummaryRow::gamma_c)
        .def_readonly("n_ok", &SummaryRow::n_ok)
        .def_readonly("n_failed", &SummaryRow::n_failed)
        .def_readonly("mean_eta", &SummaryRow::mean_eta)
        .def_readonly("p16_eta", &SummaryRow::p16_eta)
        .def_readonly("p84_eta", &SummaryRow::p84_eta)
        .def_readonly("mean_g_bar", &SummaryRow::mean_g_bar)
        .def_readonly("mean_chi", &SummaryRow::mean_chi);

    py::class_<ContourSegment>(m, "ContourSegment")
        .def_readonly("r_bar", &ContourSegment::r_bar)
        .def_readonly("omega_a", &ContourSegment::omega_a)
        .def_readonly("gamma_c_a", &ContourSegment::gamma_c_a)
        .def_readonly("omega_b", &ContourSegment::omega_b)
        .def_readonly("gamma_c_b", &ContourSegment::gamma_c_b);

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("rows", &SweepResult::rows)
        .def_readonly("summary", &SweepResult::summary)
        .def_readonly("contour", &SweepResult::contour)
        .def("to_csv", [](const SweepResult& r) { return as_csv([&](std::ostream& o) { write_csv(o, r.rows); }); })
        .def("summary_csv",
             [](const SweepResult& r) { return as_csv([&](std::ostream& o) { write_summary_csv(o, r.summary); }); })
        .def("contour_csv",
             [](const SweepResult& r) { return as_csv([&](std::ostream& o) { write_contour_csv(o, r.contour); }); });

    m.def("run_sweep", &run_sweep, py::arg("spec"), py::call_guard<py::gil_scoped_release>());
    m.def("log_grid", &log_grid, py::arg("lo"), py::arg("hi"), py::arg("points"));
    m.def("resolve_tier", &resolve_tier, py::arg("policy"), py::arg("n"), py::arg("r_bar"));
    m.def("metadata", [](const SweepSpec& spec, const SweepResult& r) {
        return as_csv([&](std::ostream& o) { write_metadata(o, spec, r); });
    });
    m.attr("CSV_HEADER") = std::string(kCsvHeader);
}
