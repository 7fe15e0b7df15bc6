#pragma once

// Spin operators, Hamiltonian and master-equation generator on the 2^n
// dimensional emitter space.
//
// Conventions shared by every module:
//  * emitter 1 is the slowest varying tensor factor;
//  * each local basis is ordered {|e>, |g>}, with sigma^z|e> = +|e>;
//  * vec(rho) stacks columns, so vec(A rho B) = (B^T kron A) vec(rho).

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "coopemit/geometry.hpp"
#include "coopemit/types.hpp"

namespace coopemit {

/// Largest ensemble for which the full generator is assembled by default.
inline constexpr std::size_t kDefaultExactLimit = 6;

struct DriveParams {
    double omega0 = 0.0;            // Rabi frequency at the trap center
    double delta = 0.0;             // drive minus transition frequency
    std::optional<Vec3> grad_omega; // gradient of the Rabi frequency, for the force
};

struct MasterEquationSpec {
    DriveParams drive;
    double gamma_c = 0.0;
    PairCoefficients coeffs;

    std::size_t n() const { return coeffs.size(); }
};

/// Sparse spin operators for n emitters; built once per n and shared.
struct SpinOperators {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<SparseC> sigma_minus;
    std::vector<SparseC> sigma_plus;
    SparseC sx, sy, sz, s_plus, s_minus;
    std::vector<int> sz_diagonal;   // S^z eigenvalue of each basis state
    std::vector<int> excitations;   // number of excited emitters per basis state
};

std::shared_ptr<const SpinOperators> spin_operators(std::size_t n);

/// Generator of rho' = L rho restricted (optionally) to a subset of vec(rho) entries.
struct Superoperator {
    SparseC matrix;
    std::size_t hilbert_dim = 0;
    std::vector<Eigen::Index> support;   // retained vec indices; empty means all

    Eigen::Index size() const { return matrix.rows(); }
    bool restricted() const { return !support.empty(); }
};

CMatrix build_hamiltonian(const MasterEquationSpec& spec);
SparseC build_hamiltonian_sparse(const MasterEquationSpec& spec);

/// sum_{m != n} g_mn sigma_m^+ sigma_n^-.
SparseC interaction_hamiltonian(const PairCoefficients& coeffs);

/// sum_{mn} Gamma_mn sigma_m^+ sigma_n^-; the anti-Hermitian part of the
/// no-jump evolution is -i times this.
SparseC emission_operator(const PairCoefficients& coeffs);

// Superoperator building blocks, each acting on column-major vec(rho).
SparseC commutator_superop(const SparseC& h);         // rho -> -i[h, rho]
SparseC dissipator_superop(const SparseC& jump);      // rho -> J rho J^+ - {J^+ J, rho}/2
SparseC correlated_emission_superop(const PairCoefficients& coeffs);
SparseC collective_dephasing_superop(std::size_t n, double gamma_c);
SparseC left_multiply_superop(const SparseC& a);       // rho -> a rho
SparseC right_multiply_superop(const SparseC& b);      // rho -> rho b

/// Full generator. Throws SizeLimitExceeded above `exact_limit` emitters.
Superoperator build_liouvillian(const MasterEquationSpec& spec, std::size_t exact_limit = kDefaultExactLimit);

/// Matrix-free action of the full generator on a density matrix.
CMatrix apply_liouvillian(const MasterEquationSpec& spec, const CMatrix& rho);

/// Tr(O rho); throws NonHermitianError when the imaginary part exceeds 1e-8.
double expectation(const CMatrix& rho, const CMatrix& observable);
double expectation(const CMatrix& rho, const SparseC& observable);

CVector vectorize(const CMatrix& rho);
CMatrix unvectorize(const CVector& v, std::size_t dim);

/// Positions of the diagonal entries rho_ii inside vec(rho) or inside `op.support`.
std::vector<Eigen::Index> trace_positions(const Superoperator& op);

}  // namespace coopemit
