#pragma once

// Approximate tiers for ensembles beyond the exact limit:
//  * secular rate equations in the eigenbasis of H_A + H_I;
//  * the effective master equation on the S^z block-diagonal (dark) subspace
//    left after eliminating the fast dephasing/detuning dynamics, unravelled
//    into quantum trajectories.

#include <cstdint>
#include <string>
#include <vector>

#include "coopemit/liouvillian.hpp"
#include "coopemit/steadystate.hpp"
#include "coopemit/types.hpp"

namespace coopemit {

/// Omega0^2 gamma_c / (gamma_c^2 + delta0^2). Requires gamma_c > 0.
double kappa(double omega0, double gamma_c, double delta0);

struct EffectiveMESpec {
    double kappa = 0.0;
    PairCoefficients coeffs;
    // Drive parameters of the underlying model, used to map back to <S^x>.
    double omega0 = 0.0;
    double gamma_c = 0.0;
    double delta0 = 0.0;

    std::size_t n() const { return coeffs.size(); }
};

/// Effective spec for a full model; the drive detuning is taken as delta0.
EffectiveMESpec effective_spec(const MasterEquationSpec& spec);

/// Jump operators of the effective generator: sqrt(2 lambda_j) c_j for the
/// eigenmodes of the Gamma matrix, then sqrt(kappa/2) S^+ and sqrt(kappa/2) S^-.
std::vector<SparseC> effective_jump_operators(const EffectiveMESpec& spec);

/// -(kappa/4)([S^-,[S^+,.]] + [S^+,[S^-,.]]) on the full 4^n space.
SparseC double_commutator_superop(std::size_t n, double kappa);

/// Lindblad generator -i[h,.] + sum_J D[J] restricted to the vec indices in `support`.
/// Contributions that leave the support are dropped.
Superoperator lindblad_on_support(const SparseC& h, const std::vector<SparseC>& jumps,
                                  std::vector<Eigen::Index> support);

/// Vec indices of the S^z block-diagonal entries, ascending.
std::vector<Eigen::Index> dark_support(std::size_t n);

/// Effective generator on the dark subspace.
Superoperator build_effective_generator(const EffectiveMESpec& spec);

/// First-order map from the dark-subspace <S^z> to the full <S^x>:
/// <S^x> = -Omega0 delta0 / (gamma_c^2 + delta0^2) <S^z>_mu.
double reconstruct_sx(double sz_dark, double omega0, double gamma_c, double delta0);

/// Steady state of the effective generator, returned with sx already reconstructed
/// and rho the dark-subspace state mu.
SteadyStateResult effective_steady_state(const EffectiveMESpec& spec, const SteadyStateOptions& options = {});

struct ValidityReport {
    bool ok = true;
    double g_bar = 0.0;
    double limit = 0.0;   // 0.1 min(gamma_c, |delta0|)
};

/// Checks that g_bar and |Omega0| stay below 0.1 min(gamma_c, |delta0|).
ValidityReport effective_validity(const EffectiveMESpec& spec);

struct TrajectoryOptions {
    double horizon = 0.0;    // <= 0 selects 100 / kappa
    double burn_in = -1.0;   // < 0 selects 10 / kappa
    int workers = 1;
    bool enforce_validity = true;
    int refine_levels = 18;  // step halvings used to locate a jump
};

struct TrajectoryEstimate {
    double mean_sx = 0.0;
    double stderr = 0.0;
    std::size_t n_traj = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    double mean_sz_dark = 0.0;
    std::uint64_t jumps = 0;
};

/// Monte-Carlo wave-function estimate of the steady <S^x>. Trajectories start in
/// the all-ground state; trajectory i draws from derive_seed(seed, i), so the
/// estimate does not depend on the worker count.
TrajectoryEstimate trajectory_steady_sx(const EffectiveMESpec& spec, std::size_t n_traj, std::uint64_t seed,
                                        const TrajectoryOptions& options = {});

struct RateEquationModel {
    RVector dressed_energies;
    RVector populations;
    RMatrix rate_matrix;          // W(k, l): rate l -> k, columns sum to zero
    double secular_tol = 0.0;
    std::vector<int> cluster;     // cluster label of each dressed state
    std::size_t coherent_clusters = 0;
    std::size_t fast_coherences = 0;     // inter-cluster coherences folded in at second order
    std::vector<std::string> warnings;   // near-degenerate dressed levels
    SteadyStateResult result;     // rho in the bare basis
};

/// Default secular tolerance 10 max(Gamma, kappa).
double default_secular_tol(const MasterEquationSpec& spec);

/// With `second_order` the coherences between clusters are not dropped but
/// adiabatically eliminated, which removes the O(gamma_c^2 / w^2) bias of the
/// plain secular populations. Without it the model is the Pauli rate equation.
RateEquationModel dressed_rate_model(const MasterEquationSpec& spec, double secular_tol = -1.0,
                                     const SteadyStateOptions& options = {}, bool second_order = true);

SteadyStateResult dressed_rate_steady_state(const MasterEquationSpec& spec, double secular_tol = -1.0,
                                            const SteadyStateOptions& options = {}, bool second_order = true);

}  // namespace coopemit
