#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "coopemit/errors.hpp"
#include "coopemit/experiments.hpp"
#include "coopemit/geometry.hpp"
#include "coopemit/rng.hpp"
#include "oracles.hpp"

using namespace coopemit;

namespace {

double max_abs_diff(const RMatrix& a, const RMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

Eigen::Matrix3d rotation_about(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace

TEST_CASE("pair coefficients match the closed-form couplings") {
    rng::Stream s(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto cfg = sample_random_configuration(5, s.uniform(0.05, 2.0), s.next());
        const auto c = pair_coefficients(cfg);
        for (Eigen::Index m = 0; m < 5; ++m)
            for (Eigen::Index n = 0; n < 5; ++n) {
                if (m == n) continue;
                const Vec3 d = cfg.positions[static_cast<std::size_t>(m)] - cfg.positions[static_cast<std::size_t>(n)];
                const double xi = 2.0 * kPi * d.norm();
                const double ct = d.dot(cfg.dipole_axis) / d.norm();
                CHECK(c.g(m, n) == doctest::Approx(oracle::g_pair(xi, ct)).epsilon(1e-9));
                CHECK(c.gamma(m, n) == doctest::Approx(oracle::gamma_pair(xi, ct)).epsilon(1e-9));
                CHECK(c.xi(m, n) == doctest::Approx(xi).epsilon(1e-14));
            }
    }
}

TEST_CASE("correlated emission tends to gamma0/2 at short range") {
    for (double ct : {0.0, 0.3, 0.7, 1.0}) {
        CHECK(correlated_emission(1e-6, ct) == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(correlated_emission(1e-3, ct, 2.0) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("couplings decay in the far field") {
    for (double ct : {0.0, 0.5, 1.0}) {
        CHECK(std::abs(dipole_coupling(100.0, ct)) < 0.01);
        CHECK(std::abs(correlated_emission(100.0, ct)) < 0.01);
    }
}

TEST_CASE("near-field exchange is +(3/4)/xi^3 for dipoles normal to the pair axis") {
    for (double xi : {1e-3, 1e-2}) {
        const double lead = 0.75 / (xi * xi * xi);
        CHECK(dipole_coupling(xi, 0.0) > 0.0);
        CHECK(dipole_coupling(xi, 0.0) / lead == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("coefficient matrices are symmetric with fixed diagonals") {
    const auto cfg = sample_random_configuration(6, 0.2, 5);
    const auto c = pair_coefficients(cfg, 1.7);
    CHECK(max_abs_diff(c.g, c.g.transpose()) == 0.0);
    CHECK(max_abs_diff(c.gamma, c.gamma.transpose()) == 0.0);
    for (Eigen::Index m = 0; m < 6; ++m) {
        CHECK(c.g(m, m) == 0.0);
        CHECK(c.gamma(m, m) == 0.85);
    }
    for (Eigen::Index m = 0; m < 6; ++m)
        for (Eigen::Index n = 0; n < 6; ++n)
            if (m != n) CHECK(std::abs(c.gamma(m, n)) <= 0.85 + 1e-9);
}

TEST_CASE("gamma matrix is positive semidefinite for sampled configurations") {
    rng::Stream s(3);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(s.next() % 7);
        const auto cfg = sample_random_configuration(n, std::exp(s.uniform(std::log(0.01), std::log(5.0))), s.next());
        const auto c = pair_coefficients(cfg);
        Eigen::SelfAdjointEigenSolver<RMatrix> es(c.gamma);
        CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    }
}

TEST_CASE("pair coefficients are invariant under translation and rotation about the dipole axis") {
    rng::Stream s(17);
    for (int trial = 0; trial < 20; ++trial) {
        auto cfg = sample_random_configuration(5, s.uniform(0.05, 1.0), s.next());
        const auto ref = pair_coefficients(cfg);
        auto moved = cfg;
        const Vec3 shift{s.uniform(-3, 3), s.uniform(-3, 3), s.uniform(-3, 3)};
        const Eigen::Matrix3d rot = rotation_about(cfg.dipole_axis, s.uniform(0, 2 * kPi));
        for (auto& p : moved.positions) p = rot * p + shift;
        const auto c = pair_coefficients(moved);
        const double scale = std::max(ref.g.cwiseAbs().maxCoeff(), 1.0);
        CHECK(max_abs_diff(c.g, ref.g) <= 1e-12 * scale * 10);
        CHECK(max_abs_diff(c.gamma, ref.gamma) <= 1e-12);
    }
}

TEST_CASE("sampler hits the requested mean separation exactly") {
    const auto cfg = sample_random_configuration(2, 0.1, 7);
    CHECK(mean_separation(cfg) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(cfg.distance(0, 1) == doctest::Approx(0.2).epsilon(1e-12));

    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const auto c = sample_random_configuration(4, 0.37, seed);
        REQUIRE(std::abs(mean_separation(c) - 0.37) <= 1e-12 * 0.37);
    }
    const auto pp = sample_random_configuration(6, 0.2, 9, 1000, SeparationConvention::per_pair);
    CHECK(mean_separation(pp, SeparationConvention::per_pair) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(mean_separation(pp) == doctest::Approx(0.2 * 15.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("sampler is deterministic and centered") {
    const auto a = sample_random_configuration(6, 0.2, 42);
    const auto b = sample_random_configuration(6, 0.2, 42);
    const auto c = sample_random_configuration(6, 0.2, 43);
    bool identical = true, differs = false;
    Vec3 com = Vec3::Zero();
    for (std::size_t m = 0; m < 6; ++m) {
        identical = identical && (a.positions[m].array() == b.positions[m].array()).all();
        differs = differs || (a.positions[m] - c.positions[m]).norm() > 0.0;
        com += a.positions[m];
    }
    CHECK(identical);
    CHECK(differs);
    CHECK(com.norm() < 1e-14);
}

TEST_CASE("sampler enforces the minimum pair distance") {
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        const auto c = sample_random_configuration(8, 0.002, seed);
        for (std::size_t m = 0; m < 8; ++m)
            for (std::size_t n = 0; n < m; ++n) REQUIRE(c.distance(m, n) > kMinPairDistance);
    }
    CHECK_THROWS_AS(sample_random_configuration(40, 1e-4, 1, 20), DegenerateConfiguration);
    CHECK_THROWS_AS(sample_random_configuration(1, 0.2, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_random_configuration(3, 0.0, 1), std::invalid_argument);
}

TEST_CASE("square ring has chords in ratio 1:1:sqrt2") {
    const double r = 0.3;
    const auto cfg = circular_configuration(4, r);
    CHECK(mean_separation(cfg) == doctest::Approx(r).epsilon(1e-12));
    const double side = cfg.distance(0, 1);
    CHECK(cfg.distance(1, 2) == doctest::Approx(side).epsilon(1e-12));
    CHECK(cfg.distance(0, 2) / side == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK((4 * side + 2 * std::sqrt(2.0) * side) / 4.0 == doctest::Approx(r).epsilon(1e-12));
    const auto pp = circular_configuration(4, r, Vec3{0, 0, 1}, SeparationConvention::per_pair);
    CHECK(mean_separation(pp, SeparationConvention::per_pair) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("two-emitter ring is an antipodal pair normal to the dipoles") {
    const auto cfg = circular_configuration(2, 0.25, Vec3{1, 1, 0});
    CHECK(cfg.distance(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    const auto c = pair_coefficients(cfg);
    CHECK(std::abs(c.cos_theta(0, 1)) < 1e-12);
    CHECK((cfg.positions[0] + cfg.positions[1]).norm() < 1e-14);
}

TEST_CASE("six-emitter ring has circulant couplings") {
    const auto c = pair_coefficients(circular_configuration(6, 0.2));
    for (Eigen::Index m = 0; m < 6; ++m)
        for (Eigen::Index n = 0; n < 6; ++n) {
            CHECK(c.g(m, n) == doctest::Approx(c.g((m + 1) % 6, (n + 1) % 6)).epsilon(1e-10));
            CHECK(c.gamma(m, n) == doctest::Approx(c.gamma((m + 1) % 6, (n + 1) % 6)).epsilon(1e-10));
            CHECK(std::abs(c.cos_theta(m, n)) < 1e-12);
        }
}

TEST_CASE("pair dephasing product is locally minimal near 0.2 lambda0") {
    double best_r = 0.0, best = 1e300;
    for (int k = 0; k <= 4500; ++k) {
        const double r = 0.05 + 0.45 * k / 4500.0;
        const double v = pair_dephasing_product(r);
        if (v < best) {
            best = v;
            best_r = r;
        }
    }
    CHECK(best_r == doctest::Approx(0.2).epsilon(0.1));
    CHECK(std::abs(best_r - 0.2) <= 0.02);
    // Short range: g12 ~ (3/4)/xi^3 and 1 - 2 Gamma12 ~ xi^2/5, so the product grows as 3/(20 xi).
    for (double r : {1e-4, 1e-3}) {
        const double xi = 2 * kPi * r;
        CHECK(pair_dephasing_product(r) * xi == doctest::Approx(0.15).epsilon(1e-3));
    }
    CHECK(pair_dephasing_product(1e-4) > 9.9 * pair_dephasing_product(1e-3));
    // Far field: bounded by the 3/(4 xi) radiative envelope.
    const double xi10 = 2 * kPi * 10.0;
    CHECK(std::abs(pair_dephasing_product(10.0)) <= 0.75 / xi10 * (1 + 1 / xi10));
    CHECK(std::abs(pair_dephasing_product(10.0)) < 1.2e-2);
}

TEST_CASE("ensemble statistics") {
    SUBCASE("collective limit") {
        const auto cfg = sample_random_configuration(5, 1e-3, 2);
        const auto st = ensemble_stats(cfg, pair_coefficients(cfg));
        CHECK(st.chi == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(st.chi <= 1.0 + 1e-9);
    }
    SUBCASE("pair normalization") {
        const auto cfg = sample_random_configuration(2, 0.4, 3);
        const auto st = ensemble_stats(cfg, pair_coefficients(cfg));
        CHECK(st.r_bar == doctest::Approx(cfg.distance(0, 1) / 2).epsilon(1e-12));
    }
    SUBCASE("far separated") {
        const auto cfg = sample_random_configuration(6, 100.0, 4);
        const auto st = ensemble_stats(cfg, pair_coefficients(cfg));
        CHECK(st.g_bar < 1e-2);
        CHECK(st.chi < 1e-2);
    }
    SUBCASE("definitions use emitter 1 as reference") {
        const auto cfg = sample_random_configuration(4, 0.3, 5);
        const auto c = pair_coefficients(cfg);
        const auto st = ensemble_stats(cfg, c);
        CHECK(st.g_bar == doctest::Approx(std::abs(c.g(0, 1)) + std::abs(c.g(0, 2)) + std::abs(c.g(0, 3))));
        CHECK(st.gamma_bar == doctest::Approx((c.gamma(0, 1) + c.gamma(0, 2) + c.gamma(0, 3)) / 3));
        CHECK(st.chi == doctest::Approx(2 * st.gamma_bar));
    }
}

TEST_CASE("inset statistics: g_bar and chi fall with separation") {
    // Mean and 16-84 band of g_bar and chi over 1000 seeds at r_bar = 0.2, plus the trend across r_bar.
    std::vector<double> means_g, means_chi;
    for (double r : {0.03, 0.1, 0.2, 0.6, 2.0}) {
        std::vector<double> g, chi;
        for (std::uint64_t k = 0; k < 1000; ++k) {
            const auto cfg = sample_random_configuration(6, r, rng::derive_seed(1, k), 1000, SeparationConvention::per_pair);
            const auto st = ensemble_stats(cfg, pair_coefficients(cfg));
            g.push_back(st.g_bar);
            chi.push_back(st.chi);
        }
        double mg = 0, mc = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            mg += g[i] / 1000.0;
            mc += chi[i] / 1000.0;
        }
        CHECK(percentile(g, 16) <= percentile(g, 84));
        CHECK(percentile(chi, 16) <= mc);
        CHECK(mc <= percentile(chi, 84));
        means_g.push_back(percentile(g, 50));
        means_chi.push_back(mc);
    }
    for (std::size_t i = 1; i < means_g.size(); ++i) {
        CHECK(means_g[i] < means_g[i - 1]);
        CHECK(means_chi[i] < means_chi[i - 1]);
    }
    CHECK(means_chi.front() > 0.9);
    CHECK(means_chi.back() < 0.2);
}

TEST_CASE("configuration text round trip") {
    const auto cfg = sample_random_configuration(5, 0.3, 8);
    std::stringstream ss;
    write_configuration(ss, cfg);
    const auto back = read_configuration(ss);
    REQUIRE(back.size() == cfg.size());
    for (std::size_t m = 0; m < cfg.size(); ++m) CHECK((back.positions[m] - cfg.positions[m]).norm() == 0.0);
    CHECK((back.dipole_axis - cfg.dipole_axis).norm() < 1e-15);
}

TEST_CASE("separation convention names") {
    CHECK(separation_convention_from_string("per_pair") == SeparationConvention::per_pair);
    CHECK(separation_convention_from_string("per-emitter") == SeparationConvention::per_emitter);
    CHECK_THROWS(separation_convention_from_string("mean"));
}
