#pragma once

// Exact steady state of two emitters from the 15 equations of motion for the
// one- and two-body Pauli averages.
//
// Symmetric block X: [x1+x2, y1+y2, z1+z2, xx, yy, zz, xy+yx, xz+zx, yz+zy]
// Antisymmetric block Y: [x1-x2, y1-y2, z1-z2, xy-yx, xz-zx, yz-zy]
// where ab stands for <sigma_1^a sigma_2^b>.

#include <array>

#include "coopemit/types.hpp"

namespace coopemit {

struct TwoEmitterParams {
    double omega0 = 0.0;
    double delta = 0.0;
    double gamma0 = 1.0;
    double gamma_c = 0.0;
    double g12 = 0.0;       // signed exchange coupling
    double gamma12 = 0.0;   // correlated emission rate
};

/// Pair at separation r12 (units of lambda0) with dipoles at angle theta to the
/// pair axis, driven at the optimal detuning.
TwoEmitterParams two_emitter_params(double r12, double omega0, double gamma_c, double gamma0 = 1.0,
                                    double cos_theta = 0.0);

struct TwoEmitterSystem {
    Eigen::Matrix<double, 9, 9> mx;
    Eigen::Matrix<double, 9, 1> x0;
    Eigen::Matrix<double, 6, 6> my;
    TwoEmitterParams params;
    double coupling_leak = 0.0;   // largest |entry| coupling X and Y; zero up to rounding
};

TwoEmitterSystem assemble_two_emitter_system(const TwoEmitterParams& params);

/// How the collective case (Gamma12 = Gamma/2) fixes the conserved <sigma_1 . sigma_2>.
enum class CollectiveSector {
    triplet,     // evolution from the ground state, <sigma_1 . sigma_2> = 1
    continuous   // limit of the non-collective solution as Gamma12 -> Gamma/2
};

struct TwoEmitterOptions {
    double collective_tol = 1e-9;   // relative to Gamma
    CollectiveSector sector = CollectiveSector::triplet;
    double rcond_floor = 1e-14;
};

struct TwoEmitterSteadyState {
    double sx = 0.0;
    Eigen::Matrix<double, 9, 1> x;
    Eigen::Matrix<double, 6, 1> y;
    bool collective = false;

    /// The 15 averages, symmetric block first.
    std::array<double, 15> averages() const;
};

TwoEmitterSteadyState steady_state_n2(const TwoEmitterParams& params, const TwoEmitterOptions& options = {});

/// Asymptotic eta for gamma_c >> Gamma (first order in Gamma/gamma_c).
double eta_limit_large_dephasing(double chi, double omega0, double gamma0, double gamma_c, bool collective);

/// Asymptotic eta at gamma_c = 0 for Omega0 >> Gamma.
double eta_limit_no_dephasing(double chi, double g_bar, double omega0, double gamma0, bool collective);

}  // namespace coopemit
