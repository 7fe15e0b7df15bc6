#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "coopemit/errors.hpp"
#include "coopemit/geometry.hpp"
#include "coopemit/steadystate.hpp"
#include "coopemit/two_emitter.hpp"
#include "oracles.hpp"

using namespace coopemit;

namespace {

MasterEquationSpec full_spec(const TwoEmitterParams& p) {
    MasterEquationSpec spec;
    spec.coeffs.g = RMatrix::Zero(2, 2);
    spec.coeffs.g(0, 1) = spec.coeffs.g(1, 0) = p.g12;
    spec.coeffs.gamma = RMatrix::Constant(2, 2, p.gamma12);
    spec.coeffs.gamma.diagonal().setConstant(0.5 * p.gamma0);
    spec.coeffs.xi = RMatrix::Zero(2, 2);
    spec.coeffs.cos_theta = RMatrix::Zero(2, 2);
    spec.coeffs.gamma0 = p.gamma0;
    spec.drive.omega0 = p.omega0;
    spec.drive.delta = p.delta;
    spec.gamma_c = p.gamma_c;
    return spec;
}

TwoEmitterParams random_params(rng::Stream& s) {
    TwoEmitterParams p;
    p.omega0 = std::exp(s.uniform(-2, 6));
    p.gamma_c = s.uniform(0, 1) < 0.25 ? 0.0 : std::exp(s.uniform(-3, 10));
    p.delta = s.uniform(0, 1) < 0.5 ? optimal_detuning(p.omega0, 1.0, p.gamma_c) : s.uniform(-50, 50);
    p.g12 = s.uniform(-20, 20);
    p.gamma12 = s.uniform(-0.45, 0.45);
    return p;
}

// Symmetric then antisymmetric coordinates as operators on the 4-dim space.
std::array<CMatrix, 15> coordinate_operators() {
    auto pauli = [](int m, char a) {
        const CMatrix sp = oracle::raising(static_cast<std::size_t>(m), 2), sm = oracle::lowering(static_cast<std::size_t>(m), 2);
        if (a == 'x') return CMatrix(sp + sm);
        if (a == 'y') return CMatrix(-kI * (sp - sm));
        return CMatrix(sp * sm - sm * sp);
    };
    auto two = [&](char a, char b) { return CMatrix(pauli(0, a) * pauli(1, b)); };
    return {pauli(0, 'x') + pauli(1, 'x'), pauli(0, 'y') + pauli(1, 'y'), pauli(0, 'z') + pauli(1, 'z'),
            two('x', 'x'),                 two('y', 'y'),                 two('z', 'z'),
            two('x', 'y') + two('y', 'x'), two('x', 'z') + two('z', 'x'), two('y', 'z') + two('z', 'y'),
            pauli(0, 'x') - pauli(1, 'x'), pauli(0, 'y') - pauli(1, 'y'), pauli(0, 'z') - pauli(1, 'z'),
            two('x', 'y') - two('y', 'x'), two('x', 'z') - two('z', 'x'), two('y', 'z') - two('z', 'y')};
}

double eta_n2(const TwoEmitterParams& p, double sx) { return eta(sx, 2, p.omega0, p.gamma0, p.gamma_c); }

}  // namespace

TEST_CASE("pair parameters") {
    const auto p = two_emitter_params(0.2, 10.0, 5.0);
    const double xi = 2 * kPi * 0.2;
    CHECK(p.g12 == doctest::Approx(oracle::g_pair(xi, 0.0)).epsilon(1e-12));
    CHECK(p.gamma12 == doctest::Approx(oracle::gamma_pair(xi, 0.0)).epsilon(1e-12));
    CHECK(p.delta == doctest::Approx(optimal_detuning(10.0, 1.0, 5.0)));
    CHECK_THROWS_AS(two_emitter_params(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("blocks reproduce the generator's action on averages") {
    const auto ops = coordinate_operators();
    rng::Stream s(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_params(s);
        const auto sys = assemble_two_emitter_system(p);
        CHECK(sys.coupling_leak < 1e-12 * std::max(1.0, sys.mx.cwiseAbs().maxCoeff()));
        const auto spec = full_spec(p);
        const CMatrix rho = oracle::random_density_matrix(4, s);
        const CMatrix drho = apply_liouvillian(spec, rho);
        Eigen::Matrix<double, 15, 1> avg, rate;
        for (int k = 0; k < 15; ++k) {
            avg(k) = (ops[static_cast<std::size_t>(k)] * rho).trace().real();
            rate(k) = (ops[static_cast<std::size_t>(k)] * drho).trace().real();
        }
        const Eigen::Matrix<double, 9, 1> dx = sys.mx * avg.head<9>() + sys.x0;
        const Eigen::Matrix<double, 6, 1> dy = sys.my * avg.tail<6>();
        const double scale = std::max(1.0, rate.cwiseAbs().maxCoeff());
        CHECK((dx - rate.head<9>()).cwiseAbs().maxCoeff() <= 1e-8 * scale);
        CHECK((dy - rate.tail<6>()).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    }
}

TEST_CASE("antisymmetric block is stable") {
    rng::Stream s(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto sys = assemble_two_emitter_system(random_params(s));
        Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(sys.my, false);
        CHECK(es.eigenvalues().real().maxCoeff() < 0.0);
        CHECK(std::abs(sys.my.determinant()) > 0.0);
    }
}

TEST_CASE("uncoupled pair is two single emitters") {
    TwoEmitterParams p;
    p.omega0 = 3.0;
    p.delta = -1.5;
    const auto sys = assemble_two_emitter_system(p);
    // One-body rows involve only one-body averages.
    CHECK(sys.mx.block<3, 6>(0, 3).cwiseAbs().maxCoeff() == 0.0);
    const auto r = steady_state_n2(p);
    CHECK(r.sx == doctest::Approx(independent_sx(2, 3.0, -1.5, 1.0, 0.0)).epsilon(1e-12));
    // Two-body averages factorize.
    CHECK(r.x(3) == doctest::Approx(0.25 * r.x(0) * r.x(0)).epsilon(1e-12));
    CHECK(r.x(5) == doctest::Approx(0.25 * r.x(2) * r.x(2)).epsilon(1e-12));
}

TEST_CASE("analytic steady state matches the full generator") {
    rng::Stream s(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_params(s);
        const auto r = steady_state_n2(p);
        const auto exact = steady_state(full_spec(p));
        CHECK(r.sx == doctest::Approx(exact.sx).epsilon(1e-8).scale(0.0));
        CHECK(r.y.norm() < 1e-10);
        CHECK(!r.collective);
    }
}

TEST_CASE("no drive gives no polarization") {
    auto p = two_emitter_params(0.15, 0.0, 7.0);
    CHECK(std::abs(steady_state_n2(p).sx) < 1e-14);
}

TEST_CASE("symmetric determinant is proportional to the collective gap") {
    auto p = two_emitter_params(0.2, 20.0, 30.0);
    double previous = 0.0;
    for (int k = 1; k <= 7; ++k) {
        const double gap = std::pow(10.0, -k);
        p.gamma12 = 0.5 - gap;
        const double ratio = assemble_two_emitter_system(p).mx.determinant() / gap;
        CHECK(std::isfinite(ratio));
        CHECK(std::abs(ratio) > 1e-6);
        if (k > 3) CHECK(ratio == doctest::Approx(previous).epsilon(1e-2));
        previous = ratio;
    }
    p.gamma12 = 0.5;
    CHECK(std::abs(assemble_two_emitter_system(p).mx.determinant()) < 1e-9 * std::abs(previous));
}

TEST_CASE("collective branch") {
    for (double g : {0.0, 0.8, -3.0})
        for (double gc : {0.0, 2.0, 1e3}) {
            TwoEmitterParams p;
            p.omega0 = 25.0;
            p.gamma_c = gc;
            p.delta = optimal_detuning(p.omega0, 1.0, gc);
            p.g12 = g;
            p.gamma12 = 0.5;
            const auto r = steady_state_n2(p);
            CHECK(r.collective);
            CHECK(std::isfinite(r.sx));
            // Triplet sector.
            CHECK(r.x(3) + r.x(4) + r.x(5) == doctest::Approx(1.0).epsilon(1e-10));

            TwoEmitterOptions cont;
            cont.sector = CollectiveSector::continuous;
            const double limit = steady_state_n2(p, cont).sx;
            auto q = p;
            q.gamma12 = 0.5 - 1e-6;
            CHECK(steady_state_n2(q).sx == doctest::Approx(limit).epsilon(1e-4));
        }
}

TEST_CASE("collective triplet branch matches evolution from the ground state") {
    for (double gc : {0.0, 3.0}) {
        TwoEmitterParams p;
        p.omega0 = 4.0;
        p.gamma_c = gc;
        p.delta = optimal_detuning(p.omega0, 1.0, gc);
        p.g12 = 0.4;
        p.gamma12 = 0.5;
        const auto spec = full_spec(p);

        // Evolution from |gg> never leaves the triplet, where the kernel is unique.
        CMatrix basis = CMatrix::Zero(4, 3);
        basis(0, 0) = 1.0;
        basis(1, 1) = basis(2, 1) = std::sqrt(0.5);
        basis(3, 2) = 1.0;
        CMatrix gen(9, 9);
        for (Eigen::Index k = 0; k < 9; ++k) {
            CMatrix unit = CMatrix::Zero(3, 3);
            unit(k % 3, k / 3) = 1.0;
            const CMatrix out = basis.adjoint() * apply_liouvillian(spec, basis * unit * basis.adjoint()) * basis;
            gen.col(k) = oracle::vec(out);
        }
        const CMatrix rho = basis * oracle::steady_state(gen, 3) * basis.adjoint();
        const double sx = expectation(rho, spin_operators(2)->sx);
        CHECK(steady_state_n2(p).sx == doctest::Approx(sx).epsilon(1e-9));
    }
}

TEST_CASE("large-dephasing limit") {
    for (double chi : {0.1, 0.5, 0.9}) {
        CHECK(eta_limit_large_dephasing(chi, std::sqrt(1 + chi), 1.0, 1e4, false) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(eta_limit_large_dephasing(chi, 2 * std::sqrt(1 + chi), 1.0, 1e4, false) > 1.0);
        CHECK(eta_limit_large_dephasing(chi, 0.5 * std::sqrt(1 + chi), 1.0, 1e4, false) < 1.0);
    }
    CHECK(eta_limit_large_dephasing(0.3, std::sqrt(2.0), 1.0, 50.0, true) == doctest::Approx(1.0).epsilon(1e-15));

    for (double r12 : {0.1, 0.2, 0.3}) {
        const auto p = two_emitter_params(r12, 10.0, 1e6);
        const double chi = 2.0 * p.gamma12;
        const double slope = (eta_n2(p, steady_state_n2(p).sx) - 1.0) * p.gamma_c;
        const double coefficient = (eta_limit_large_dephasing(chi, 10.0, 1.0, 1.0, false) - 1.0);
        CHECK(slope == doctest::Approx(coefficient).epsilon(0.02));
    }

    TwoEmitterParams c;
    c.omega0 = 10.0;
    c.gamma_c = 1e6;
    c.delta = optimal_detuning(c.omega0, 1.0, c.gamma_c);
    c.g12 = 0.7;
    c.gamma12 = 0.5;
    const double slope = (eta_n2(c, steady_state_n2(c).sx) - 1.0) * c.gamma_c;
    CHECK(slope == doctest::Approx(eta_limit_large_dephasing(1.0, 10.0, 1.0, 1.0, true) - 1.0).epsilon(0.02));
}

TEST_CASE("no-dephasing limit") {
    rng::Stream s(14);
    for (int trial = 0; trial < 100; ++trial) {
        const double chi = s.uniform(0, 1), g = s.uniform(0, 30), w = std::exp(s.uniform(-2, 10));
        CHECK(eta_limit_no_dephasing(chi, g, w, 1.0, false) < 1.0);
    }
    CHECK(eta_limit_no_dephasing(1.0, 2.0, 1e9, 1.0, true) == doctest::Approx(1.0 + 1.0 / 15.0).epsilon(1e-12));

    for (double r12 : {0.1, 0.2, 0.3}) {
        const auto p = two_emitter_params(r12, 1e4, 0.0);
        const double chi = 2.0 * p.gamma12, g = std::abs(p.g12);
        const double slope = (eta_n2(p, steady_state_n2(p).sx) - 1.0) * p.omega0 * p.omega0;
        const double coefficient = (eta_limit_no_dephasing(chi, g, 1.0, 1.0, false) - 1.0);
        CHECK(slope < 0.0);
        CHECK(slope == doctest::Approx(coefficient).epsilon(0.05));
    }

    TwoEmitterParams c;
    c.omega0 = 1e4;
    c.delta = optimal_detuning(c.omega0, 1.0, 0.0);
    c.g12 = 0.7;
    c.gamma12 = 0.5;
    CHECK(eta_n2(c, steady_state_n2(c).sx) - 1.0 == doctest::Approx(1.0 / 15.0).epsilon(1e-3));
}

TEST_CASE("cooperative enhancement needs both dephasing and drive") {
    for (double r12 : {0.1, 0.2, 0.3}) {
        for (double w : {0.1, 1.0, 10.0, 1e3, 1e5}) {
            const auto p = two_emitter_params(r12, w, 0.0);
            CHECK(eta_n2(p, steady_state_n2(p).sx) < 1.0);
        }
        for (double gc : {1e-2, 1.0, 1e3, 1e6}) {
            const auto p = two_emitter_params(r12, 0.5, gc);
            CHECK(eta_n2(p, steady_state_n2(p).sx) < 1.0);
        }
        const auto p = two_emitter_params(r12, 1e3, 1e3);
        CHECK(eta_n2(p, steady_state_n2(p).sx) > 1.0);
    }
}
