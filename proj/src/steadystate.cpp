#include "coopemit/steadystate.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "coopemit/errors.hpp"

namespace coopemit {

namespace {

using LU = Eigen::SparseLU<SparseC, Eigen::COLAMDOrdering<int>>;

CVector deterministic_start(Eigen::Index size) {
    CVector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = cplx(1.0 + 0.37 * std::sin(1.3 * i), 0.21 * std::cos(0.7 * i));
    return v.normalized();
}

// Row of `a` (restricted to `candidates`) with the smallest |a_rr| / sum_{c != r} |a_rc|.
Eigen::Index least_dominant_row(const SparseC& a, const std::vector<Eigen::Index>& candidates) {
    RVector off = RVector::Zero(a.rows());
    RVector diag = RVector::Zero(a.rows());
    for (Eigen::Index k = 0; k < a.outerSize(); ++k)
        for (SparseC::InnerIterator it(a, k); it; ++it) {
            if (it.row() == it.col())
                diag(it.row()) = std::abs(it.value());
            else
                off(it.row()) += std::abs(it.value());
        }
    Eigen::Index best = candidates.front();
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index r : candidates) {
        const double ratio = off(r) > 0.0 ? diag(r) / off(r) : std::numeric_limits<double>::infinity();
        if (ratio < best_ratio) {
            best_ratio = ratio;
            best = r;
        }
    }
    return best;
}

SparseC border_with_trace(const SparseC& a, Eigen::Index row, const std::vector<Eigen::Index>& trace, double scale) {
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(a.nonZeros()) + trace.size());
    for (Eigen::Index k = 0; k < a.outerSize(); ++k)
        for (SparseC::InnerIterator it(a, k); it; ++it)
            if (it.row() != row) t.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index c : trace) t.emplace_back(row, c, scale);
    SparseC out(a.rows(), a.cols());
    out.setFromTriplets(t.begin(), t.end());
    out.makeCompressed();
    return out;
}

// Smallest singular value of the factorized matrix, by inverse iteration on (A^H A).
double smallest_singular_value(LU& lu, Eigen::Index size) {
    CVector v = deterministic_start(size);
    double sigma = 0.0;
    for (int it = 0; it < 6; ++it) {
        CVector y = lu.solve(v);
        CVector z = lu.adjoint().solve(y);
        const double growth = z.norm();
        if (!std::isfinite(growth) || growth == 0.0) return 0.0;
        sigma = 1.0 / std::sqrt(growth);
        v = z / growth;
    }
    return sigma;
}

CVector embed(const Superoperator& op, const CVector& x) {
    if (!op.restricted()) return x;
    CVector full = CVector::Zero(static_cast<Eigen::Index>(op.hilbert_dim * op.hilbert_dim));
    for (std::size_t p = 0; p < op.support.size(); ++p) full(op.support[p]) = x(static_cast<Eigen::Index>(p));
    return full;
}

CVector restrict_to(const Superoperator& op, const CVector& full) {
    if (!op.restricted()) return full;
    CVector x(static_cast<Eigen::Index>(op.support.size()));
    for (std::size_t p = 0; p < op.support.size(); ++p) x(static_cast<Eigen::Index>(p)) = full(op.support[p]);
    return x;
}

// Normalizes to unit trace and Hermitizes; returns the vector on the operator's support.
CVector normalize_state(const Superoperator& op, const CVector& x, const std::vector<Eigen::Index>& trace) {
    cplx tr = 0.0;
    for (Eigen::Index t : trace) tr += x(t);
    if (std::abs(tr) == 0.0) throw ConvergenceError("steady_state: null vector has zero trace");
    CMatrix rho = unvectorize(embed(op, x / tr), op.hilbert_dim);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return restrict_to(op, vectorize(rho));
}

// Sector elimination. The generator only couples rho_pq blocks whose excitation
// difference d = exc(p) - exc(q) differs by at most one, and it commutes with
// rho -> rho^dagger, which maps sector d onto -d. Eliminating d = n..1 by Schur
// complements and folding d < 0 back through that symmetry leaves a dense
// system on the d = 0 sector only.
std::optional<CVector> solve_by_sectors(const Superoperator& op, double scale, const SteadyStateOptions& options) {
    const std::size_t dim = op.hilbert_dim;
    std::size_t n = 0;
    while ((std::size_t{1} << n) < dim) ++n;
    if ((std::size_t{1} << n) != dim || n == 0) return std::nullopt;
    const auto& exc = spin_operators(n)->excitations;
    const auto size = static_cast<Eigen::Index>(dim * dim);
    const int nn = static_cast<int>(n);

    std::vector<int> sector(static_cast<std::size_t>(size));
    std::vector<Eigen::Index> local(static_cast<std::size_t>(size));
    std::vector<std::vector<Eigen::Index>> members(n + 1);
    for (Eigen::Index v = 0; v < size; ++v) {
        const auto i = static_cast<std::size_t>(v % static_cast<Eigen::Index>(dim));
        const auto j = static_cast<std::size_t>(v / static_cast<Eigen::Index>(dim));
        const int d = exc[i] - exc[j];
        sector[static_cast<std::size_t>(v)] = d;
        if (d >= 0) {
            local[static_cast<std::size_t>(v)] = static_cast<Eigen::Index>(members[static_cast<std::size_t>(d)].size());
            members[static_cast<std::size_t>(d)].push_back(v);
        }
    }
    auto block_size = [&](int d) { return static_cast<Eigen::Index>(members[static_cast<std::size_t>(d)].size()); };

    // diag[d] = A(d,d), down[d] = A(d,d-1), up[d] = A(d,d+1).
    std::vector<CMatrix> diag(n + 1), down(n + 1), up(n + 1);
    for (int d = 0; d <= nn; ++d) {
        diag[static_cast<std::size_t>(d)] = CMatrix::Zero(block_size(d), block_size(d));
        if (d > 0) down[static_cast<std::size_t>(d)] = CMatrix::Zero(block_size(d), block_size(d - 1));
        if (d < nn) up[static_cast<std::size_t>(d)] = CMatrix::Zero(block_size(d), block_size(d + 1));
    }
    const SparseC& l = op.matrix;
    for (Eigen::Index k = 0; k < l.outerSize(); ++k)
        for (SparseC::InnerIterator it(l, k); it; ++it) {
            const int dr = sector[static_cast<std::size_t>(it.row())];
            const int dc = sector[static_cast<std::size_t>(it.col())];
            if (std::abs(dr - dc) > 1) {
                if (it.value() != cplx(0.0)) return std::nullopt;
                continue;
            }
            if (dr < 0 || dc < 0) continue;
            const Eigen::Index r = local[static_cast<std::size_t>(it.row())];
            const Eigen::Index c = local[static_cast<std::size_t>(it.col())];
            const auto ud = static_cast<std::size_t>(dr);
            if (dc == dr)
                diag[ud](r, c) += it.value();
            else if (dc == dr - 1)
                down[ud](r, c) += it.value();
            else
                up[ud](r, c) += it.value();
        }

    // x[d] = S_{d+1}^{-1} A(d+1,d), so that rho_{d+1} = -x[d] rho_d.
    std::vector<CMatrix> x(n);
    CMatrix schur = std::move(diag[n]);
    for (int d = nn; d >= 1; --d) {
        Eigen::PartialPivLU<CMatrix> lu(schur);
        if (!(lu.rcond() > std::numeric_limits<double>::epsilon())) return std::nullopt;
        auto& xd = x[static_cast<std::size_t>(d - 1)];
        xd = lu.solve(down[static_cast<std::size_t>(d)]);
        if (!xd.allFinite()) return std::nullopt;
        schur = std::move(diag[static_cast<std::size_t>(d - 1)]);
        schur.noalias() -= up[static_cast<std::size_t>(d - 1)] * xd;
    }

    // The d = 0 sector feels d = -1 through the mirror image of its d = +1 coupling.
    const auto& zero = members[0];
    const Eigen::Index m0 = block_size(0);
    if (n >= 1) {
        CMatrix fold = up[0] * x[0];
        std::vector<Eigen::Index> mirror(static_cast<std::size_t>(m0));
        for (Eigen::Index a = 0; a < m0; ++a) {
            const Eigen::Index v = zero[static_cast<std::size_t>(a)];
            const Eigen::Index i = v % static_cast<Eigen::Index>(dim), j = v / static_cast<Eigen::Index>(dim);
            mirror[static_cast<std::size_t>(a)] = local[static_cast<std::size_t>(j + static_cast<Eigen::Index>(dim) * i)];
        }
        // Note that schur already holds A00 - fold.
        for (Eigen::Index b = 0; b < m0; ++b)
            for (Eigen::Index a = 0; a < m0; ++a)
                schur(a, b) -= std::conj(fold(mirror[static_cast<std::size_t>(a)], mirror[static_cast<std::size_t>(b)]));
    }

    std::vector<Eigen::Index> trace;
    for (Eigen::Index a = 0; a < m0; ++a) {
        const Eigen::Index v = zero[static_cast<std::size_t>(a)];
        if (v % static_cast<Eigen::Index>(dim) == v / static_cast<Eigen::Index>(dim)) trace.push_back(a);
    }
    Eigen::Index row = trace.front();
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index r : trace) {
        const double d = std::abs(schur(r, r));
        const double off = schur.row(r).cwiseAbs().sum() - d;
        const double ratio = off > 0.0 ? d / off : std::numeric_limits<double>::infinity();
        if (ratio < best_ratio) {
            best_ratio = ratio;
            row = r;
        }
    }
    schur.row(row).setZero();
    for (Eigen::Index t : trace) schur(row, t) = scale;
    CVector rhs = CVector::Zero(m0);
    rhs(row) = scale;

    Eigen::PartialPivLU<CMatrix> lu0(schur);
    CVector probe = deterministic_start(m0);
    double sigma = 0.0;
    for (int it = 0; it < 6; ++it) {
        CVector z = lu0.adjoint().solve(lu0.solve(probe));
        const double growth = z.norm();
        if (!std::isfinite(growth) || growth == 0.0) {
            sigma = 0.0;
            break;
        }
        sigma = 1.0 / std::sqrt(growth);
        probe = z / growth;
    }
    if (sigma < options.degeneracy_tol * scale)
        throw DegenerateSteadyState("degenerate steady state: smallest singular value " + std::to_string(sigma) +
                                    " of the bordered generator is below tolerance");

    CVector rho0 = lu0.solve(rhs);
    rho0 += lu0.solve(rhs - schur * rho0);

    CVector full = CVector::Zero(size);
    CVector current = rho0;
    for (int d = 0; d <= nn; ++d) {
        const auto& idx = members[static_cast<std::size_t>(d)];
        for (std::size_t a = 0; a < idx.size(); ++a) {
            const Eigen::Index v = idx[a];
            full(v) = current(static_cast<Eigen::Index>(a));
            if (d > 0) {
                const Eigen::Index i = v % static_cast<Eigen::Index>(dim), j = v / static_cast<Eigen::Index>(dim);
                full(j + static_cast<Eigen::Index>(dim) * i) = std::conj(current(static_cast<Eigen::Index>(a)));
            }
        }
        if (d < nn) current = -(x[static_cast<std::size_t>(d)] * current);
    }
    return full;
}

}  // namespace

std::string_view to_string(SolverTier tier) {
    switch (tier) {
        case SolverTier::exact: return "exact";
        case SolverTier::rate_equation: return "rate";
        case SolverTier::trajectory: return "trajectory";
        case SolverTier::analytic_n2: return "analytic";
    }
    return "unknown";
}

SolverTier tier_from_string(std::string_view name) {
    if (name == "exact") return SolverTier::exact;
    if (name == "rate" || name == "rate_equation") return SolverTier::rate_equation;
    if (name == "trajectory") return SolverTier::trajectory;
    if (name == "analytic" || name == "analytic_n2") return SolverTier::analytic_n2;
    throw std::invalid_argument("unknown solver tier: " + std::string(name));
}

double estimate_operator_norm(const SparseC& a, int iterations) {
    if (a.rows() == 0) return 0.0;
    CVector v = deterministic_start(a.cols());
    double sigma = 0.0;
    for (int it = 0; it < iterations; ++it) {
        CVector w = a.adjoint() * (a * v);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        const double next = std::sqrt(nw);
        v = w / nw;
        if (it > 4 && std::abs(next - sigma) <= 1e-6 * next) return next;
        sigma = next;
    }
    return sigma;
}

SteadyStateResult steady_state(const Superoperator& op, const SteadyStateOptions& options) {
    const SparseC& l = op.matrix;
    const auto trace = trace_positions(op);
    if (trace.empty()) throw std::invalid_argument("steady_state: operator support holds no diagonal entries");

    SteadyStateResult result;
    result.tier = SolverTier::exact;
    result.operator_norm = estimate_operator_norm(l, options.norm_iterations);
    const double lnorm = result.operator_norm;
    const double scale = lnorm > 0.0 ? lnorm : 1.0;

    std::optional<CVector> sector;
    if (options.method != SteadyStateMethod::sparse_lu && !op.restricted()) {
        sector = solve_by_sectors(op, scale, options);
        if (!sector && options.method == SteadyStateMethod::sector_schur)
            throw std::invalid_argument("steady_state: operator is not block tridiagonal in excitation difference");
    }

    CVector x;
    if (sector) {
        x = normalize_state(op, *sector, trace);
    } else {
        const Eigen::Index row = least_dominant_row(l, trace);
        const SparseC bordered = border_with_trace(l, row, trace, scale);
        CVector rhs = CVector::Zero(l.rows());
        rhs(row) = scale;

        LU lu;
        lu.analyzePattern(bordered);
        lu.factorize(bordered);
        if (lu.info() != Eigen::Success)
            throw DegenerateSteadyState("degenerate steady state: trace-bordered generator is singular (" +
                                        lu.lastErrorMessage() + ")");
        const double sigma_min = smallest_singular_value(lu, bordered.rows());
        if (sigma_min < options.degeneracy_tol * scale)
            throw DegenerateSteadyState("degenerate steady state: smallest singular value " +
                                        std::to_string(sigma_min) + " of the bordered generator is below tolerance");
        x = lu.solve(rhs);
        for (int refine = 0; refine < 2; ++refine) x += lu.solve(rhs - bordered * x);
        x = normalize_state(op, x, trace);
    }
    double residual = (l * x).norm();

    if (!(residual <= options.residual_tol * lnorm)) {
        // Shift-invert iteration aimed at the zero eigenvalue.
        const double shift = -1e-9 * scale;
        SparseC shifted = l;
        for (Eigen::Index i = 0; i < l.rows(); ++i) shifted.coeffRef(i, i) -= shift;
        LU si;
        si.analyzePattern(shifted);
        si.factorize(shifted);
        if (si.info() != Eigen::Success) throw ConvergenceError("steady_state: shift-invert factorization failed");
        CVector v = x;
        for (int it = 0; it < options.shift_invert_iterations; ++it) {
            v = si.solve(v);
            v = normalize_state(op, v, trace);
            residual = (l * v).norm();
            if (residual <= options.residual_tol * lnorm) break;
        }
        if (!(residual <= options.residual_tol * lnorm))
            throw ConvergenceError("steady_state: residual " + std::to_string(residual) + " above tolerance " +
                                   std::to_string(options.residual_tol * lnorm));
        x = v;
        result.used_fallback = true;
    }

    result.residual = residual;
    result.rho = unvectorize(embed(op, x), op.hilbert_dim);
    std::size_t n = 0;
    while ((std::size_t{1} << n) < op.hilbert_dim) ++n;
    result.sx = expectation(result.rho, spin_operators(n)->sx);
    result.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    if (options.check_positivity) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(result.rho, Eigen::EigenvaluesOnly);
        result.min_eigenvalue = es.eigenvalues().minCoeff();
    }
    return result;
}

SteadyStateResult steady_state(const MasterEquationSpec& spec, const SteadyStateOptions& options) {
    return steady_state(build_liouvillian(spec), options);
}

double independent_sx(std::size_t n, double omega0, double delta, double gamma0, double gamma_c) {
    const double gp = gamma0 + 2.0 * gamma_c;
    return static_cast<double>(n) * 4.0 * delta * omega0 * gamma0 /
           (gamma0 * (4.0 * delta * delta + gp * gp) + 2.0 * omega0 * omega0 * gp);
}

double optimal_detuning(double omega0, double gamma0, double gamma_c) {
    const double gp = gamma0 + 2.0 * gamma_c;
    return -std::sqrt(gp * (gamma0 * gp + 2.0 * omega0 * omega0) / (4.0 * gamma0));
}

double independent_sx_bound(std::size_t n, double omega0, double gamma0, double gamma_c) {
    const double gp = gamma0 + 2.0 * gamma_c;
    return static_cast<double>(n) * std::abs(omega0) * gamma0 / std::sqrt(gamma0 * gp * (gamma0 * gp + 2.0 * omega0 * omega0));
}

double eta(double sx_collective, std::size_t n, double omega0, double gamma0, double gamma_c) {
    const double baseline = independent_sx(n, omega0, optimal_detuning(omega0, gamma0, gamma_c), gamma0, gamma_c);
    if (std::abs(baseline) < 1e-300) throw std::domain_error("eta: independent-emitter baseline vanishes");
    return sx_collective / baseline;
}

Vec3 dipole_force(const Vec3& grad_omega, double sx) { return -0.5 * sx * grad_omega; }

}  // namespace coopemit
