#pragma once

#include <cstddef>
#include <string_view>

#include "coopemit/liouvillian.hpp"
#include "coopemit/types.hpp"

namespace coopemit {

enum class SolverTier { exact, rate_equation, trajectory, analytic_n2 };

std::string_view to_string(SolverTier tier);
SolverTier tier_from_string(std::string_view name);

enum class SteadyStateMethod {
    automatic,      // sector elimination when the generator allows it, sparse LU otherwise
    sparse_lu,      // trace-bordered sparse LU on the whole generator
    sector_schur    // dense Schur elimination over excitation-difference sectors
};

struct SteadyStateOptions {
    // Smallest singular value of the trace-bordered system, relative to ||L||,
    // below which the stationary state is considered non-unique.
    double degeneracy_tol = 1e-10;
    // Accepted ||L rho|| relative to ||L||.
    double residual_tol = 1e-8;
    int norm_iterations = 40;
    int shift_invert_iterations = 60;
    bool check_positivity = true;
    SteadyStateMethod method = SteadyStateMethod::automatic;
};

struct SteadyStateResult {
    CMatrix rho;
    double sx = 0.0;
    double residual = 0.0;        // ||L vec(rho)||_2
    double operator_norm = 0.0;   // power-iteration estimate of ||L||_2
    double min_eigenvalue = 0.0;  // of rho; NaN when not computed
    SolverTier tier = SolverTier::exact;
    bool used_fallback = false;
};

/// Largest singular value of `a`, by power iteration on a^H a.
double estimate_operator_norm(const SparseC& a, int iterations = 40);

/// Unique unit-trace stationary state of `op`. Throws DegenerateSteadyState when
/// the kernel is not one dimensional and ConvergenceError when neither the
/// bordered solve nor the shift-invert fallback reaches the residual target.
SteadyStateResult steady_state(const Superoperator& op, const SteadyStateOptions& options = {});

/// Builds the full generator of `spec` and solves it.
SteadyStateResult steady_state(const MasterEquationSpec& spec, const SteadyStateOptions& options = {});

/// <S^x> of n independent emitters.
double independent_sx(std::size_t n, double omega0, double delta, double gamma0, double gamma_c);

/// Detuning (negative root) at which |independent_sx| is largest.
double optimal_detuning(double omega0, double gamma0, double gamma_c);

/// |independent_sx| at the optimal detuning.
double independent_sx_bound(std::size_t n, double omega0, double gamma0, double gamma_c);

/// Collective <S^x> over the independent value, both taken at the optimal detuning.
double eta(double sx_collective, std::size_t n, double omega0, double gamma0, double gamma_c);

/// F = -(grad Omega / 2) <S^x>, with hbar = 1.
Vec3 dipole_force(const Vec3& grad_omega, double sx);

}  // namespace coopemit
