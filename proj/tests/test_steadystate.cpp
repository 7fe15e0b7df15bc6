#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "coopemit/errors.hpp"
#include "coopemit/experiments.hpp"
#include "coopemit/steadystate.hpp"
#include "oracles.hpp"

using namespace coopemit;

namespace {

MasterEquationSpec uncoupled(std::size_t n, double omega0, double delta, double gamma_c, double gamma0 = 1.0) {
    MasterEquationSpec spec;
    const auto k = static_cast<Eigen::Index>(n);
    spec.coeffs.g = RMatrix::Zero(k, k);
    spec.coeffs.gamma = 0.5 * gamma0 * RMatrix::Identity(k, k);
    spec.coeffs.xi = RMatrix::Zero(k, k);
    spec.coeffs.cos_theta = RMatrix::Zero(k, k);
    spec.coeffs.gamma0 = gamma0;
    spec.drive.omega0 = omega0;
    spec.drive.delta = delta;
    spec.gamma_c = gamma_c;
    return spec;
}

// Golden-section search for the maximum of |independent_sx| over delta < 0.
double argmax_detuning(double omega0, double gamma_c) {
    auto f = [&](double d) { return std::abs(independent_sx(1, omega0, d, 1.0, gamma_c)); };
    double a = -10.0 * (1.0 + omega0 * std::sqrt(1.0 + gamma_c) + gamma_c), b = 0.0;
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a), d = a + r * (b - a);
    for (int it = 0; it < 200; ++it) {
        if (f(c) > f(d)) b = d; else a = c;
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("independent-emitter polarization") {
    CHECK(independent_sx(3, 5.0, 0.0, 1.0, 2.0) == 0.0);

    // Bound attained at the optimal detuning.
    for (double gc : {0.0, 1.0, 1.3e4})
        for (double w : {0.3, 10.0, 1e3}) {
            const double d0 = optimal_detuning(w, 1.0, gc);
            const double gp = 1.0 + 2.0 * gc;
            const double bound = 4.0 * w / std::sqrt(gp * (gp + 2.0 * w * w));
            CHECK(std::abs(independent_sx(4, w, d0, 1.0, gc)) == doctest::Approx(bound).epsilon(1e-12));
            CHECK(independent_sx(4, w, d0, 1.0, gc) < 0.0);
            CHECK(independent_sx_bound(4, w, 1.0, gc) == doctest::Approx(bound).epsilon(1e-12));
        }

    // 1000 / sqrt(26001 * 2026001)
    const double d0 = optimal_detuning(1e3, 1.0, 1.3e4);
    CHECK(std::abs(independent_sx(1, 1e3, d0, 1.0, 1.3e4)) == doctest::Approx(4.3570e-3).epsilon(1e-4));
}

TEST_CASE("bound holds over a dense detuning scan") {
    rng::Stream s(1);
    for (int trial = 0; trial < 200; ++trial) {
        const double w = std::exp(s.uniform(-3, 9)), gc = s.uniform(0, 1) < 0.2 ? 0.0 : std::exp(s.uniform(-3, 12));
        const double g0 = std::exp(s.uniform(-1, 1));
        const std::size_t n = 1 + s.next() % 8;
        const double bound = independent_sx_bound(n, w, g0, gc);
        const double scale = std::abs(optimal_detuning(w, g0, gc));
        for (int k = -400; k <= 400; ++k) {
            const double delta = scale * std::sinh(k / 80.0);
            REQUIRE(std::abs(independent_sx(n, w, delta, g0, gc)) <= bound * (1 + 1e-12));
        }
    }
}

TEST_CASE("optimal detuning") {
    CHECK(optimal_detuning(0.0, 1.0, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
    // Omega0^2 >> Gamma gamma_c >> Gamma^2: |Delta0| -> Omega0 sqrt(gamma_c / Gamma).
    CHECK(std::abs(optimal_detuning(1e7, 1.0, 1e4)) / (1e7 * 1e2) == doctest::Approx(1.0).epsilon(1e-4));
    for (double gc : {0.0, 2.0, 1.3e4})
        for (double w : {0.5, 30.0, 1e3}) {
            const double d0 = optimal_detuning(w, 1.0, gc);
            CHECK(argmax_detuning(w, gc) == doctest::Approx(d0).epsilon(1e-6));
        }
}

TEST_CASE("eta and force") {
    for (std::size_t n : {1, 2, 3}) {
        const double w = 40.0, gc = 100.0;
        const auto spec = uncoupled(n, w, optimal_detuning(w, 1.0, gc), gc);
        CHECK(eta(steady_state(spec).sx, n, w, 1.0, gc) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(eta(0.1, 2, 0.0, 1.0, 1.0), std::domain_error);

    CHECK(dipole_force(Vec3::Zero(), 3.0).norm() == 0.0);
    const Vec3 f = dipole_force(Vec3{1, 0, 0}, 2.0);
    CHECK(f.x() == doctest::Approx(-1.0));
    CHECK(f.y() == 0.0);
    const Vec3 grad{0.3, -0.2, 0.5};
    const double sx_ind = -0.04, e = 1.17;
    CHECK((dipole_force(grad, e * sx_ind) - e * dipole_force(grad, sx_ind)).norm() < 1e-15);
}

TEST_CASE("single emitter matches the independent formula") {
    rng::Stream s(2);
    for (int trial = 0; trial < 30; ++trial) {
        const double w = std::exp(s.uniform(-2, 7)), gc = std::exp(s.uniform(-2, 10)), delta = s.uniform(-1, 1) * 3 * std::abs(optimal_detuning(w, 1, gc));
        const auto r = steady_state(uncoupled(1, w, delta, gc));
        CHECK(r.sx == doctest::Approx(independent_sx(1, w, delta, 1.0, gc)).epsilon(1e-10));
    }
}

TEST_CASE("solved states are normalized, positive and annihilated") {
    rng::Stream s(3);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + s.next() % 4;
        auto spec = oracle::random_spec(n, s, std::exp(s.uniform(std::log(0.03), std::log(2.0))), s.uniform(0, 1) < 0.3 ? 0.0 : std::exp(s.uniform(0, 10)));
        spec.drive.omega0 = std::exp(s.uniform(-1, 7));
        spec.drive.delta = optimal_detuning(spec.drive.omega0, 1.0, spec.gamma_c);
        SteadyStateResult r;
        try {
            r = steady_state(spec);
        } catch (const DegenerateSteadyState&) {
            continue;
        }
        CHECK(std::abs(r.rho.trace() - 1.0) < 1e-10);
        CHECK((r.rho - r.rho.adjoint()).norm() < 1e-10);
        CHECK(r.min_eigenvalue >= -1e-8);
        CHECK(r.residual <= 1e-8 * r.operator_norm);
        CHECK(r.tier == SolverTier::exact);
    }
}

TEST_CASE("sector elimination and bordered sparse LU agree") {
    rng::Stream s(4);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + s.next() % 3;
        auto spec = oracle::random_spec(n, s, s.uniform(0.05, 1.0), s.uniform(0, 1e4));
        SteadyStateOptions a, b;
        a.method = SteadyStateMethod::sector_schur;
        b.method = SteadyStateMethod::sparse_lu;
        const auto ra = steady_state(spec, a), rb = steady_state(spec, b);
        CHECK((ra.rho - rb.rho).norm() < 1e-10);
    }
}

TEST_CASE("exact solve matches the dense kernel") {
    rng::Stream s(5);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 1 + s.next() % 3;
        auto spec = n == 1 ? uncoupled(1, s.uniform(0, 10), s.uniform(-10, 10), s.uniform(0, 50))
                           : oracle::random_spec(n, s, s.uniform(0.1, 1.0), s.uniform(0, 50));
        const CMatrix ref = oracle::steady_state(oracle::liouvillian(spec), Eigen::Index{1} << n);
        CHECK((steady_state(spec).rho - ref).norm() < 1e-9);
    }
}

TEST_CASE("no decay and no drive leaves a degenerate kernel") {
    auto spec = uncoupled(2, 0.0, 0.5, 3.0);
    spec.coeffs.gamma.setZero();
    CHECK_THROWS_AS(steady_state(spec), DegenerateSteadyState);
    SteadyStateOptions lu;
    lu.method = SteadyStateMethod::sparse_lu;
    CHECK_THROWS_AS(steady_state(spec, lu), DegenerateSteadyState);
}

TEST_CASE("slow but unique relaxation is not flagged as degenerate") {
    // Dense N = 6 cluster whose slowest mode is ~1e-4 Gamma against ||L|| ~ 8e5.
    MasterEquationSpec spec;
    spec.coeffs = pair_coefficients(
        sample_random_configuration(6, log_grid(0.03, 3.0, 12)[1], 16921333289596331312ull, 1000, SeparationConvention::per_pair));
    spec.drive.omega0 = 1e3;
    spec.gamma_c = 1.3e4;
    spec.drive.delta = optimal_detuning(1e3, 1.0, 1.3e4);
    const auto result = steady_state(spec);
    CHECK(result.sx / independent_sx(6, 1e3, spec.drive.delta, 1.0, 1.3e4) == doctest::Approx(1.0467).epsilon(1e-3));
    SteadyStateOptions strict;
    strict.degeneracy_tol = 1e-9;
    CHECK_THROWS_AS(steady_state(spec, strict), DegenerateSteadyState);
}

TEST_CASE("steady state agrees with long-time integration") {
    namespace ode = boost::numeric::odeint;
    using State = std::vector<double>;
    rng::Stream s(6);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t n = 2 + trial % 2;
        auto spec = oracle::random_spec(n, s, s.uniform(0.3, 1.0), s.uniform(0, 10));
        spec.drive.omega0 = s.uniform(0.5, 5.0);
        spec.drive.delta = s.uniform(-5.0, 5.0);
        const auto d = Eigen::Index{1} << n;

        Eigen::ComplexEigenSolver<CMatrix> es(oracle::liouvillian(spec), false);
        double slowest = 1e300;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            const double re = -es.eigenvalues()(k).real();
            if (re > 1e-9) slowest = std::min(slowest, re);
        }
        REQUIRE(slowest > 1e-3);

        auto rhs = [&](const State& x, State& dx, double) {
            CMatrix rho(d, d);
            for (Eigen::Index k = 0; k < d * d; ++k) rho.data()[k] = cplx(x[2 * k], x[2 * k + 1]);
            const CMatrix out = apply_liouvillian(spec, rho);
            for (Eigen::Index k = 0; k < d * d; ++k) {
                dx[2 * k] = out.data()[k].real();
                dx[2 * k + 1] = out.data()[k].imag();
            }
        };
        State x(static_cast<std::size_t>(2 * d * d), 0.0);
        x[2 * static_cast<std::size_t>(d * d - 1)] = 1.0;   // all ground
        ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-12, 1e-12), rhs, x, 0.0,
                                50.0 / slowest, 1e-3);
        CMatrix rho(d, d);
        for (Eigen::Index k = 0; k < d * d; ++k) rho.data()[k] = cplx(x[2 * k], x[2 * k + 1]);
        const double sx_t = expectation(0.5 * (rho + rho.adjoint()), spin_operators(n)->sx);
        CHECK(std::abs(steady_state(spec).sx - sx_t) <= 1e-6 * std::max(1.0, std::abs(sx_t)));
    }
}

TEST_CASE("tier names round trip") {
    for (auto t : {SolverTier::exact, SolverTier::rate_equation, SolverTier::trajectory, SolverTier::analytic_n2})
        CHECK(tier_from_string(to_string(t)) == t);
    CHECK_THROWS(tier_from_string("mean_field"));
}
