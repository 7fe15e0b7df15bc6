#include "coopemit/liouvillian.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "coopemit/errors.hpp"

namespace coopemit {

namespace {

using Triplet = Eigen::Triplet<cplx>;
using Triplets = std::vector<Triplet>;

// Bit of emitter m inside a basis index: 0 = excited, 1 = ground.
inline bool is_ground(std::size_t state, std::size_t m, std::size_t n) { return (state >> (n - 1 - m)) & 1U; }
inline std::size_t flip(std::size_t state, std::size_t m, std::size_t n) { return state ^ (std::size_t{1} << (n - 1 - m)); }

SparseC from_triplets(Eigen::Index rows, Eigen::Index cols, const Triplets& t) {
    SparseC out(rows, cols);
    out.setFromTriplets(t.begin(), t.end());
    out.makeCompressed();
    return out;
}

// Appends scale * (a kron b).
void kron_into(const SparseC& a, const SparseC& b, cplx scale, Triplets& out) {
    const Eigen::Index br = b.rows(), bc = b.cols();
    for (Eigen::Index ka = 0; ka < a.outerSize(); ++ka)
        for (SparseC::InnerIterator ia(a, ka); ia; ++ia)
            for (Eigen::Index kb = 0; kb < b.outerSize(); ++kb)
                for (SparseC::InnerIterator ib(b, kb); ib; ++ib)
                    out.emplace_back(ia.row() * br + ib.row(), ia.col() * bc + ib.col(), scale * ia.value() * ib.value());
}

// scale * (I kron a)
void left_into(const SparseC& a, cplx scale, Triplets& out) {
    const Eigen::Index d = a.rows();
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index k = 0; k < a.outerSize(); ++k)
            for (SparseC::InnerIterator it(a, k); it; ++it)
                out.emplace_back(j * d + it.row(), j * d + it.col(), scale * it.value());
}

// scale * (b^T kron I)
void right_into(const SparseC& b, cplx scale, Triplets& out) {
    const Eigen::Index d = b.rows();
    for (Eigen::Index k = 0; k < b.outerSize(); ++k)
        for (SparseC::InnerIterator it(b, k); it; ++it)
            // b^T has entry (col, row)
            for (Eigen::Index i = 0; i < d; ++i)
                out.emplace_back(it.col() * d + i, it.row() * d + i, scale * it.value());
}

void commutator_into(const SparseC& h, Triplets& out) {
    left_into(h, -kI, out);
    right_into(h, kI, out);
}

void correlated_emission_into(const PairCoefficients& coeffs, Triplets& out) {
    const std::size_t n = coeffs.size();
    const auto ops = spin_operators(n);
    const auto d = static_cast<Eigen::Index>(ops->dim);
    // 2 Gamma_mn sigma_m^- rho sigma_n^+: rho_kl -> rho_{k', l'} with m lowered in k, n lowered in l.
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t nn = 0; nn < n; ++nn) {
            const double rate = coeffs.gamma(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(nn));
            if (rate == 0.0) continue;
            for (std::size_t l = 0; l < ops->dim; ++l) {
                if (is_ground(l, nn, n)) continue;
                const std::size_t lp = flip(l, nn, n);
                for (std::size_t k = 0; k < ops->dim; ++k) {
                    if (is_ground(k, m, n)) continue;
                    const std::size_t kp = flip(k, m, n);
                    out.emplace_back(static_cast<Eigen::Index>(kp) + d * static_cast<Eigen::Index>(lp),
                                     static_cast<Eigen::Index>(k) + d * static_cast<Eigen::Index>(l), 2.0 * rate);
                }
            }
        }
    }
    const SparseC k_op = emission_operator(coeffs);
    left_into(k_op, -1.0, out);
    right_into(k_op, -1.0, out);
}

void dephasing_into(const SpinOperators& ops, double gamma_c, Triplets& out) {
    if (gamma_c == 0.0) return;
    const auto d = static_cast<Eigen::Index>(ops.dim);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) {
            const double diff = ops.sz_diagonal[static_cast<std::size_t>(i)] - ops.sz_diagonal[static_cast<std::size_t>(j)];
            if (diff != 0.0) out.emplace_back(i + d * j, i + d * j, -0.25 * gamma_c * diff * diff);
        }
}

std::shared_ptr<const SpinOperators> make_spin_operators(std::size_t n) {
    auto ops = std::make_shared<SpinOperators>();
    ops->n = n;
    ops->dim = std::size_t{1} << n;
    const auto d = static_cast<Eigen::Index>(ops->dim);
    ops->sz_diagonal.resize(ops->dim);
    ops->excitations.resize(ops->dim);
    for (std::size_t s = 0; s < ops->dim; ++s) {
        int exc = 0;
        for (std::size_t m = 0; m < n; ++m) exc += is_ground(s, m, n) ? 0 : 1;
        ops->excitations[s] = exc;
        ops->sz_diagonal[s] = 2 * exc - static_cast<int>(n);
    }
    Triplets sm_all, sp_all, sx, sy, sz;
    for (std::size_t m = 0; m < n; ++m) {
        Triplets sm, sp;
        for (std::size_t s = 0; s < ops->dim; ++s) {
            if (is_ground(s, m, n)) continue;
            const auto e = static_cast<Eigen::Index>(s);
            const auto g = static_cast<Eigen::Index>(flip(s, m, n));
            sm.emplace_back(g, e, 1.0);
            sp.emplace_back(e, g, 1.0);
            sx.emplace_back(g, e, 1.0);
            sx.emplace_back(e, g, 1.0);
            sy.emplace_back(g, e, kI);    // sigma^y = -i|e><g| + i|g><e|
            sy.emplace_back(e, g, -kI);
        }
        sm_all.insert(sm_all.end(), sm.begin(), sm.end());
        sp_all.insert(sp_all.end(), sp.begin(), sp.end());
        ops->sigma_minus.push_back(from_triplets(d, d, sm));
        ops->sigma_plus.push_back(from_triplets(d, d, sp));
    }
    for (std::size_t s = 0; s < ops->dim; ++s) {
        const auto i = static_cast<Eigen::Index>(s);
        sz.emplace_back(i, i, static_cast<double>(ops->sz_diagonal[s]));
    }
    ops->s_minus = from_triplets(d, d, sm_all);
    ops->s_plus = from_triplets(d, d, sp_all);
    ops->sx = from_triplets(d, d, sx);
    ops->sy = from_triplets(d, d, sy);
    ops->sz = from_triplets(d, d, sz);
    return ops;
}

// sum_{mn} c_mn sigma_m^+ sigma_n^- with c_mm included when `diagonal` is set.
SparseC exchange_operator(const RMatrix& c, bool diagonal) {
    const auto n = static_cast<std::size_t>(c.rows());
    const auto ops = spin_operators(n);
    const auto d = static_cast<Eigen::Index>(ops->dim);
    Triplets t;
    for (std::size_t s = 0; s < ops->dim; ++s) {
        for (std::size_t m = 0; m < n; ++m) {
            for (std::size_t k = 0; k < n; ++k) {
                const double v = c(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
                if (v == 0.0) continue;
                if (m == k) {
                    if (diagonal && !is_ground(s, m, n))
                        t.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), v);
                    continue;
                }
                // sigma_m^+ sigma_k^- needs k excited and m ground in the input state.
                if (is_ground(s, k, n) || !is_ground(s, m, n)) continue;
                const std::size_t out = flip(flip(s, k, n), m, n);
                t.emplace_back(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(s), v);
            }
        }
    }
    return from_triplets(d, d, t);
}

}  // namespace

std::shared_ptr<const SpinOperators> spin_operators(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::shared_ptr<const SpinOperators>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = make_spin_operators(n);
    return slot;
}

SparseC interaction_hamiltonian(const PairCoefficients& coeffs) { return exchange_operator(coeffs.g, false); }

SparseC emission_operator(const PairCoefficients& coeffs) { return exchange_operator(coeffs.gamma, true); }

SparseC build_hamiltonian_sparse(const MasterEquationSpec& spec) {
    const auto ops = spin_operators(spec.n());
    SparseC h = interaction_hamiltonian(spec.coeffs);
    h += cplx(0.5 * spec.drive.omega0) * ops->sx;
    h += cplx(-0.5 * spec.drive.delta) * ops->sz;
    h.makeCompressed();
    return h;
}

CMatrix build_hamiltonian(const MasterEquationSpec& spec) { return CMatrix(build_hamiltonian_sparse(spec)); }

SparseC commutator_superop(const SparseC& h) {
    Triplets t;
    commutator_into(h, t);
    return from_triplets(h.rows() * h.rows(), h.rows() * h.rows(), t);
}

SparseC dissipator_superop(const SparseC& jump) {
    const Eigen::Index d = jump.rows();
    const SparseC jdj = SparseC(jump.adjoint()) * jump;
    Triplets t;
    kron_into(SparseC(jump.conjugate()), jump, 1.0, t);
    left_into(jdj, -0.5, t);
    right_into(jdj, -0.5, t);
    return from_triplets(d * d, d * d, t);
}

SparseC correlated_emission_superop(const PairCoefficients& coeffs) {
    const auto d = static_cast<Eigen::Index>(std::size_t{1} << coeffs.size());
    Triplets t;
    correlated_emission_into(coeffs, t);
    return from_triplets(d * d, d * d, t);
}

SparseC collective_dephasing_superop(std::size_t n, double gamma_c) {
    const auto ops = spin_operators(n);
    const auto d = static_cast<Eigen::Index>(ops->dim);
    Triplets t;
    dephasing_into(*ops, gamma_c, t);
    return from_triplets(d * d, d * d, t);
}

SparseC left_multiply_superop(const SparseC& a) {
    Triplets t;
    left_into(a, 1.0, t);
    return from_triplets(a.rows() * a.rows(), a.rows() * a.rows(), t);
}

SparseC right_multiply_superop(const SparseC& b) {
    Triplets t;
    right_into(b, 1.0, t);
    return from_triplets(b.rows() * b.rows(), b.rows() * b.rows(), t);
}

Superoperator build_liouvillian(const MasterEquationSpec& spec, std::size_t exact_limit) {
    const std::size_t n = spec.n();
    if (n == 0) throw std::invalid_argument("build_liouvillian: empty ensemble");
    if (n > exact_limit)
        throw SizeLimitExceeded("build_liouvillian: n=" + std::to_string(n) + " exceeds the exact-size limit " +
                                std::to_string(exact_limit));
    if (spec.gamma_c < 0.0) throw std::invalid_argument("build_liouvillian: gamma_c must be non-negative");
    const auto ops = spin_operators(n);
    const auto d = static_cast<Eigen::Index>(ops->dim);

    Triplets t;
    t.reserve(static_cast<std::size_t>(d * d) * (4 * n + n * n + 2));
    commutator_into(build_hamiltonian_sparse(spec), t);
    correlated_emission_into(spec.coeffs, t);
    dephasing_into(*ops, spec.gamma_c, t);

    Superoperator op;
    op.hilbert_dim = ops->dim;
    op.matrix = from_triplets(d * d, d * d, t);
    return op;
}

CMatrix apply_liouvillian(const MasterEquationSpec& spec, const CMatrix& rho) {
    const std::size_t n = spec.n();
    const auto ops = spin_operators(n);
    const auto d = static_cast<Eigen::Index>(ops->dim);
    if (rho.rows() != d || rho.cols() != d)
        throw DimensionMismatch("apply_liouvillian: expected " + std::to_string(d) + "x" + std::to_string(d) +
                                " density matrix");

    // No-jump part with H_eff = H - iK.
    const SparseC h = build_hamiltonian_sparse(spec);
    const SparseC k = emission_operator(spec.coeffs);
    CMatrix out = -kI * (h * rho) + kI * (rho * h) - k * rho - rho * k;

    std::vector<CMatrix> lowered(n);
    for (std::size_t m = 0; m < n; ++m) lowered[m] = ops->sigma_minus[m] * rho;
    for (std::size_t nn = 0; nn < n; ++nn) {
        CMatrix acc = CMatrix::Zero(d, d);
        for (std::size_t m = 0; m < n; ++m) {
            const double rate = spec.coeffs.gamma(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(nn));
            if (rate != 0.0) acc += (2.0 * rate) * lowered[m];
        }
        out += acc * ops->sigma_plus[nn];
    }

    if (spec.gamma_c != 0.0) {
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index i = 0; i < d; ++i) {
                const double diff = ops->sz_diagonal[static_cast<std::size_t>(i)] - ops->sz_diagonal[static_cast<std::size_t>(j)];
                out(i, j) -= 0.25 * spec.gamma_c * diff * diff * rho(i, j);
            }
    }
    return out;
}

double expectation(const CMatrix& rho, const CMatrix& observable) {
    if (rho.rows() != observable.rows() || rho.cols() != observable.cols())
        throw DimensionMismatch("expectation: operator and state dimensions differ");
    const cplx value = (observable.cwiseProduct(rho.transpose())).sum();
    if (std::abs(value.imag()) > 1e-8)
        throw NonHermitianError("expectation: imaginary part " + std::to_string(value.imag()) +
                                " indicates non-Hermitian inputs");
    return value.real();
}

double expectation(const CMatrix& rho, const SparseC& observable) {
    if (rho.rows() != observable.rows() || rho.cols() != observable.cols())
        throw DimensionMismatch("expectation: operator and state dimensions differ");
    cplx value = 0.0;
    for (Eigen::Index k = 0; k < observable.outerSize(); ++k)
        for (SparseC::InnerIterator it(observable, k); it; ++it) value += it.value() * rho(it.col(), it.row());
    if (std::abs(value.imag()) > 1e-8)
        throw NonHermitianError("expectation: imaginary part " + std::to_string(value.imag()) +
                                " indicates non-Hermitian inputs");
    return value.real();
}

CVector vectorize(const CMatrix& rho) { return Eigen::Map<const CVector>(rho.data(), rho.size()); }

CMatrix unvectorize(const CVector& v, std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    if (v.size() != d * d) throw DimensionMismatch("unvectorize: length is not dim^2");
    return Eigen::Map<const CMatrix>(v.data(), d, d);
}

std::vector<Eigen::Index> trace_positions(const Superoperator& op) {
    const auto d = static_cast<Eigen::Index>(op.hilbert_dim);
    std::vector<Eigen::Index> out;
    if (!op.restricted()) {
        for (Eigen::Index i = 0; i < d; ++i) out.push_back(i + d * i);
        return out;
    }
    for (std::size_t p = 0; p < op.support.size(); ++p) {
        const Eigen::Index v = op.support[p];
        if (v % d == v / d) out.push_back(static_cast<Eigen::Index>(p));
    }
    return out;
}

}  // namespace coopemit
