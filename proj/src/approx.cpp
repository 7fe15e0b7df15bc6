#include "coopemit/approx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "coopemit/errors.hpp"
#include "coopemit/parallel.hpp"
#include "coopemit/rng.hpp"

namespace coopemit {

namespace {

using Triplets = std::vector<Eigen::Triplet<cplx>>;

constexpr double kMaxSecondOrderEntries = 1 << 24;

double g_bar_of(const PairCoefficients& c) {
    double s = 0.0;
    for (Eigen::Index k = 1; k < c.g.cols(); ++k) s += std::abs(c.g(0, k));
    return s;
}

// Eigenmodes of the Gamma matrix as jump operators sqrt(2 lambda) sum_m v_m sigma_m^-.
std::vector<SparseC> emission_jumps(const PairCoefficients& coeffs) {
    const std::size_t n = coeffs.size();
    const auto ops = spin_operators(n);
    Eigen::SelfAdjointEigenSolver<RMatrix> es(coeffs.gamma);
    std::vector<SparseC> out;
    const double floor = 1e-14 * std::max(coeffs.gamma0, es.eigenvalues().cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
        const double lambda = es.eigenvalues()(j);
        if (lambda <= floor) continue;
        SparseC c(static_cast<Eigen::Index>(ops->dim), static_cast<Eigen::Index>(ops->dim));
        for (std::size_t m = 0; m < n; ++m) {
            const double v = es.eigenvectors()(static_cast<Eigen::Index>(m), j);
            if (v != 0.0) c += cplx(v) * ops->sigma_minus[m];
        }
        c *= cplx(std::sqrt(2.0 * lambda));
        c.makeCompressed();
        out.push_back(std::move(c));
    }
    return out;
}

struct Sector {
    std::vector<std::size_t> states;
    CMatrix heff;
    double sz_value = 0.0;
    std::vector<CMatrix> propagators;   // exp(-i heff dt / 2^m)
};

struct SectorJump {
    int target = 0;      // sector after the jump
    CMatrix block;       // target x source
};

// Excitation-number sectors of the effective model together with its jumps.
struct SectorModel {
    std::vector<Sector> sectors;
    std::vector<std::vector<SectorJump>> jumps;   // jumps[k]: all jumps leaving sector k
    double dt = 0.0;
};

SectorModel build_sector_model(const EffectiveMESpec& spec, double horizon, int levels) {
    const std::size_t n = spec.n();
    const auto ops = spin_operators(n);
    const std::vector<SparseC> jump_ops = effective_jump_operators(spec);

    SectorModel model;
    model.sectors.resize(n + 1);
    std::vector<Eigen::Index> local(ops->dim);
    for (std::size_t s = 0; s < ops->dim; ++s) {
        auto& sec = model.sectors[static_cast<std::size_t>(ops->excitations[s])];
        local[s] = static_cast<Eigen::Index>(sec.states.size());
        sec.states.push_back(s);
    }

    SparseC k_op(static_cast<Eigen::Index>(ops->dim), static_cast<Eigen::Index>(ops->dim));
    for (const auto& j : jump_ops) k_op += SparseC(j.adjoint()) * j;
    const SparseC heff = interaction_hamiltonian(spec.coeffs) - cplx(0.0, 0.5) * k_op;

    double max_rate = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        auto& sec = model.sectors[k];
        const auto d = static_cast<Eigen::Index>(sec.states.size());
        sec.heff = CMatrix::Zero(d, d);
        sec.sz_value = 2.0 * static_cast<double>(k) - static_cast<double>(n);
        for (Eigen::Index c = 0; c < d; ++c)
            for (SparseC::InnerIterator it(heff, static_cast<Eigen::Index>(sec.states[static_cast<std::size_t>(c)])); it; ++it)
                sec.heff(local[static_cast<std::size_t>(it.row())], c) = it.value();
        const CMatrix decay = kI * (sec.heff - sec.heff.adjoint());   // equals K on the sector
        Eigen::SelfAdjointEigenSolver<CMatrix> es(decay, Eigen::EigenvaluesOnly);
        max_rate = std::max(max_rate, es.eigenvalues().maxCoeff());
    }
    model.dt = max_rate > 0.0 ? std::min(horizon, 1.0 / max_rate) : horizon;

    for (auto& sec : model.sectors) {
        double step = model.dt;
        for (int m = 0; m <= levels; ++m, step *= 0.5) sec.propagators.push_back((cplx(0.0, -step) * sec.heff).exp());
    }

    model.jumps.resize(n + 1);
    for (const auto& j : jump_ops) {
        for (std::size_t k = 0; k <= n; ++k) {
            const auto& src = model.sectors[k];
            // All effective jumps change the excitation number by exactly one.
            int target = -1;
            Triplets entries;
            for (std::size_t c = 0; c < src.states.size(); ++c)
                for (SparseC::InnerIterator it(j, static_cast<Eigen::Index>(src.states[c])); it; ++it) {
                    target = ops->excitations[static_cast<std::size_t>(it.row())];
                    entries.emplace_back(local[static_cast<std::size_t>(it.row())], static_cast<Eigen::Index>(c), it.value());
                }
            if (target < 0 || entries.empty()) continue;
            SectorJump sj;
            sj.target = target;
            sj.block = CMatrix::Zero(static_cast<Eigen::Index>(model.sectors[static_cast<std::size_t>(target)].states.size()),
                                     static_cast<Eigen::Index>(src.states.size()));
            for (const auto& e : entries) sj.block(e.row(), e.col()) += e.value();
            model.jumps[k].push_back(std::move(sj));
        }
    }
    return model;
}

struct TrajectoryOutcome {
    double mean_sz = 0.0;
    std::uint64_t jumps = 0;
};

TrajectoryOutcome run_trajectory(const SectorModel& model, std::size_t ground_sector, double burn_in, double horizon,
                                 std::uint64_t seed) {
    rng::Stream stream(seed);
    std::size_t k = ground_sector;
    CVector psi = CVector::Ones(1);
    double t = 0.0;
    double weighted = 0.0;
    TrajectoryOutcome out;
    const int levels = static_cast<int>(model.sectors[k].propagators.size()) - 1;

    auto accumulate = [&](double from, double to, double sz) {
        const double a = std::max(from, burn_in), b = std::min(to, horizon);
        if (b > a) weighted += (b - a) * sz;
    };

    double threshold = stream.uniform_open_low();
    while (t < horizon) {
        const Sector& sec = model.sectors[k];
        CVector next = sec.propagators[0] * psi;
        double norm2 = next.squaredNorm();
        if (!std::isfinite(norm2)) throw ConvergenceError("trajectory_steady_sx: non-finite norm during propagation");
        if (norm2 > threshold) {
            accumulate(t, t + model.dt, sec.sz_value);
            t += model.dt;
            psi = std::move(next);
            continue;
        }
        // The jump happens inside this step; walk forward with halved steps.
        double step = model.dt;
        for (int m = 1; m <= levels; ++m) {
            step *= 0.5;
            next = sec.propagators[static_cast<std::size_t>(m)] * psi;
            norm2 = next.squaredNorm();
            if (norm2 > threshold) {
                accumulate(t, t + step, sec.sz_value);
                t += step;
                psi = std::move(next);
            }
        }
        if (t >= horizon) break;

        const auto& options = model.jumps[k];
        if (options.empty()) throw ConvergenceError("trajectory_steady_sx: norm decays without an available jump");
        std::vector<CVector> candidates;
        std::vector<double> weights;
        candidates.reserve(options.size());
        for (const auto& j : options) {
            candidates.push_back(j.block * psi);
            weights.push_back(candidates.back().squaredNorm());
        }
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (!(total > 0.0)) throw ConvergenceError("trajectory_steady_sx: norm underflow before a jump could be resolved");
        double pick = stream.uniform() * total;
        std::size_t chosen = 0;
        while (chosen + 1 < weights.size() && pick >= weights[chosen]) pick -= weights[chosen++];
        psi = candidates[chosen] / std::sqrt(weights[chosen]);
        k = static_cast<std::size_t>(options[chosen].target);
        ++out.jumps;
        threshold = stream.uniform_open_low();
    }
    out.mean_sz = weighted / (horizon - burn_in);
    return out;
}

}  // namespace

double kappa(double omega0, double gamma_c, double delta0) {
    if (!(gamma_c > 0.0)) throw std::domain_error("kappa: gamma_c must be positive");
    return omega0 * omega0 * gamma_c / (gamma_c * gamma_c + delta0 * delta0);
}

EffectiveMESpec effective_spec(const MasterEquationSpec& spec) {
    EffectiveMESpec eff;
    eff.coeffs = spec.coeffs;
    eff.omega0 = spec.drive.omega0;
    eff.gamma_c = spec.gamma_c;
    eff.delta0 = spec.drive.delta;
    eff.kappa = kappa(spec.drive.omega0, spec.gamma_c, spec.drive.delta);
    return eff;
}

std::vector<SparseC> effective_jump_operators(const EffectiveMESpec& spec) {
    if (spec.kappa < 0.0) throw std::invalid_argument("effective_jump_operators: kappa must be non-negative");
    std::vector<SparseC> jumps = emission_jumps(spec.coeffs);
    if (spec.kappa > 0.0) {
        const auto ops = spin_operators(spec.n());
        const cplx a = std::sqrt(0.5 * spec.kappa);
        jumps.push_back(a * ops->s_plus);
        jumps.push_back(a * ops->s_minus);
    }
    return jumps;
}

SparseC double_commutator_superop(std::size_t n, double kappa_rate) {
    const auto ops = spin_operators(n);
    // [A,[B,.]] = A B . - A . B - B . A + . B A
    auto nested = [](const SparseC& a, const SparseC& b) {
        const SparseC ab = a * b, ba = b * a;
        SparseC out = left_multiply_superop(ab) + right_multiply_superop(ba);
        out -= SparseC(left_multiply_superop(a) * right_multiply_superop(b));
        out -= SparseC(left_multiply_superop(b) * right_multiply_superop(a));
        return out;
    };
    SparseC out = nested(ops->s_minus, ops->s_plus) + nested(ops->s_plus, ops->s_minus);
    out *= cplx(-0.25 * kappa_rate);
    out.makeCompressed();
    return out;
}

Superoperator lindblad_on_support(const SparseC& h, const std::vector<SparseC>& jumps, std::vector<Eigen::Index> support) {
    const Eigen::Index d = h.rows();
    std::sort(support.begin(), support.end());
    std::vector<Eigen::Index> position(static_cast<std::size_t>(d * d), -1);
    for (std::size_t p = 0; p < support.size(); ++p) position[static_cast<std::size_t>(support[p])] = static_cast<Eigen::Index>(p);

    SparseC k_op(d, d);
    for (const auto& j : jumps) k_op += SparseC(j.adjoint()) * j;
    // -i h rho - 1/2 K rho acts from the left, rho (i h - 1/2 K) from the right.
    const SparseC left = -kI * h - 0.5 * k_op;
    const SparseC right_t = SparseC((kI * h - 0.5 * k_op).transpose());
    std::vector<SparseC> conj_jumps;
    for (const auto& j : jumps) conj_jumps.push_back(j.conjugate());

    Triplets t;
    auto emit = [&](Eigen::Index row_i, Eigen::Index row_j, Eigen::Index col, cplx v) {
        const Eigen::Index r = position[static_cast<std::size_t>(row_i + d * row_j)];
        if (r >= 0) t.emplace_back(r, col, v);
    };
    for (std::size_t c = 0; c < support.size(); ++c) {
        const Eigen::Index v = support[c];
        const Eigen::Index i = v % d, j = v / d;
        const auto col = static_cast<Eigen::Index>(c);
        for (SparseC::InnerIterator it(left, i); it; ++it) emit(it.row(), j, col, it.value());
        // (rho B)_{i k} = rho_ij B_jk, read from column j of B^T.
        for (SparseC::InnerIterator it(right_t, j); it; ++it) emit(i, it.row(), col, it.value());
        for (std::size_t q = 0; q < jumps.size(); ++q)
            for (SparseC::InnerIterator a(jumps[q], i); a; ++a)
                for (SparseC::InnerIterator b(conj_jumps[q], j); b; ++b) emit(a.row(), b.row(), col, a.value() * b.value());
    }
    Superoperator op;
    op.hilbert_dim = static_cast<std::size_t>(d);
    op.matrix.resize(static_cast<Eigen::Index>(support.size()), static_cast<Eigen::Index>(support.size()));
    op.matrix.setFromTriplets(t.begin(), t.end());
    op.matrix.makeCompressed();
    op.support = std::move(support);
    return op;
}

std::vector<Eigen::Index> dark_support(std::size_t n) {
    const auto ops = spin_operators(n);
    const auto d = static_cast<Eigen::Index>(ops->dim);
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i)
            if (ops->excitations[static_cast<std::size_t>(i)] == ops->excitations[static_cast<std::size_t>(j)])
                out.push_back(i + d * j);
    return out;
}

Superoperator build_effective_generator(const EffectiveMESpec& spec) {
    return lindblad_on_support(interaction_hamiltonian(spec.coeffs), effective_jump_operators(spec), dark_support(spec.n()));
}

double reconstruct_sx(double sz_dark, double omega0, double gamma_c, double delta0) {
    return -omega0 * delta0 / (gamma_c * gamma_c + delta0 * delta0) * sz_dark;
}

SteadyStateResult effective_steady_state(const EffectiveMESpec& spec, const SteadyStateOptions& options) {
    SteadyStateResult r = steady_state(build_effective_generator(spec), options);
    const auto ops = spin_operators(spec.n());
    r.sx = reconstruct_sx(expectation(r.rho, ops->sz), spec.omega0, spec.gamma_c, spec.delta0);
    r.tier = SolverTier::trajectory;
    return r;
}

ValidityReport effective_validity(const EffectiveMESpec& spec) {
    ValidityReport rep;
    rep.g_bar = g_bar_of(spec.coeffs);
    rep.limit = 0.1 * std::min(spec.gamma_c, std::abs(spec.delta0));
    rep.ok = rep.g_bar <= rep.limit && std::abs(spec.omega0) <= rep.limit;
    return rep;
}

TrajectoryEstimate trajectory_steady_sx(const EffectiveMESpec& spec, std::size_t n_traj, std::uint64_t seed,
                                        const TrajectoryOptions& options) {
    if (n_traj < 2) throw std::invalid_argument("trajectory_steady_sx: need at least two trajectories");
    if (options.enforce_validity) {
        const ValidityReport rep = effective_validity(spec);
        if (!rep.ok)
            throw ValidityGateError("trajectory_steady_sx: g_bar=" + std::to_string(rep.g_bar) + ", Omega0=" +
                                    std::to_string(spec.omega0) + " exceed 0.1 min(gamma_c, |delta0|)=" +
                                    std::to_string(rep.limit));
    }
    const double rate = spec.kappa > 0.0 ? spec.kappa : spec.coeffs.gamma0;
    const double horizon = options.horizon > 0.0 ? options.horizon : 100.0 / rate;
    const double burn_in = options.burn_in >= 0.0 ? options.burn_in : 10.0 / rate;
    if (!(horizon > burn_in)) throw std::invalid_argument("trajectory_steady_sx: horizon must exceed burn_in");

    const SectorModel model = build_sector_model(spec, horizon, std::max(1, options.refine_levels));
    std::vector<TrajectoryOutcome> outcomes(n_traj);
    parallel_for(n_traj, options.workers, [&](std::size_t i) {
        outcomes[i] = run_trajectory(model, 0, burn_in, horizon, rng::derive_seed(seed, i));
    });

    TrajectoryEstimate est;
    est.n_traj = n_traj;
    est.horizon = horizon;
    est.seed = seed;
    double sum = 0.0, sum2 = 0.0;
    for (const auto& o : outcomes) {
        sum += o.mean_sz;
        est.jumps += o.jumps;
    }
    const double mean = sum / static_cast<double>(n_traj);
    for (const auto& o : outcomes) sum2 += (o.mean_sz - mean) * (o.mean_sz - mean);
    const double sd = std::sqrt(sum2 / static_cast<double>(n_traj - 1));
    const double factor = reconstruct_sx(1.0, spec.omega0, spec.gamma_c, spec.delta0);
    est.mean_sz_dark = mean;
    est.mean_sx = factor * mean;
    est.stderr = std::abs(factor) * sd / std::sqrt(static_cast<double>(n_traj));
    return est;
}

double default_secular_tol(const MasterEquationSpec& spec) {
    double k = 0.0;
    if (spec.gamma_c > 0.0) k = kappa(spec.drive.omega0, spec.gamma_c, spec.drive.delta);
    return 10.0 * std::max(spec.coeffs.gamma0, k);
}

RateEquationModel dressed_rate_model(const MasterEquationSpec& spec, double secular_tol, const SteadyStateOptions& options,
                                     bool second_order) {
    const std::size_t n = spec.n();
    const auto ops = spin_operators(n);
    const auto d = static_cast<Eigen::Index>(ops->dim);

    RateEquationModel model;
    model.secular_tol = secular_tol > 0.0 ? secular_tol : default_secular_tol(spec);

    Eigen::SelfAdjointEigenSolver<CMatrix> es(build_hamiltonian(spec));
    const CMatrix& u = es.eigenvectors();
    model.dressed_energies = es.eigenvalues();

    std::vector<CMatrix> jumps;
    for (const auto& j : emission_jumps(spec.coeffs)) jumps.push_back(u.adjoint() * (j * u));
    if (spec.gamma_c > 0.0) jumps.push_back(std::sqrt(0.5 * spec.gamma_c) * (u.adjoint() * (ops->sz * u)));
    CMatrix k_op = CMatrix::Zero(d, d);
    for (const auto& j : jumps) k_op.noalias() += j.adjoint() * j;

    // Energies come sorted; a gap of at least secular_tol starts a new cluster.
    model.cluster.assign(static_cast<std::size_t>(d), 0);
    std::vector<std::vector<Eigen::Index>> members(1);
    members[0].push_back(0);
    for (Eigen::Index k = 1; k < d; ++k) {
        if (model.dressed_energies(k) - model.dressed_energies(k - 1) >= model.secular_tol) members.emplace_back();
        model.cluster[static_cast<std::size_t>(k)] = static_cast<int>(members.size() - 1);
        members.back().push_back(k);
    }
    for (const auto& m : members)
        if (m.size() > 1) ++model.coherent_clusters;
    if (model.coherent_clusters > 0)
        model.warnings.push_back(std::to_string(model.coherent_clusters) +
                                 " dressed cluster(s) closer than the secular tolerance kept coherent");

    std::vector<Eigen::Index> support;
    for (const auto& m : members)
        for (Eigen::Index l : m)
            for (Eigen::Index k : m) support.push_back(k + d * l);
    std::sort(support.begin(), support.end());
    std::vector<Eigen::Index> position(static_cast<std::size_t>(d * d), -1);
    for (std::size_t p = 0; p < support.size(); ++p) position[static_cast<std::size_t>(support[p])] = static_cast<Eigen::Index>(p);

    Triplets t;
    for (std::size_t c = 0; c < support.size(); ++c) {
        const Eigen::Index k = support[c] % d, l = support[c] / d;
        const auto col = static_cast<Eigen::Index>(c);
        const cplx bohr = -kI * (model.dressed_energies(k) - model.dressed_energies(l));
        if (bohr != cplx(0.0)) t.emplace_back(col, col, bohr);
        for (Eigen::Index p : members[static_cast<std::size_t>(model.cluster[static_cast<std::size_t>(k)])]) {
            // -1/2 K rho and -1/2 rho K stay inside the cluster of (k, l).
            t.emplace_back(position[static_cast<std::size_t>(p + d * l)], col, -0.5 * k_op(p, k));
            t.emplace_back(position[static_cast<std::size_t>(k + d * p)], col, -0.5 * k_op(l, p));
        }
        for (const auto& m : members)
            for (Eigen::Index q : m)
                for (Eigen::Index p : m) {
                    cplx v = 0.0;
                    for (const auto& j : jumps) v += j(p, k) * std::conj(j(q, l));
                    if (v != cplx(0.0)) t.emplace_back(position[static_cast<std::size_t>(p + d * q)], col, v);
                }
    }
    Superoperator op;
    op.hilbert_dim = ops->dim;
    const auto ns = static_cast<Eigen::Index>(support.size());
    op.matrix.resize(ns, ns);
    op.matrix.setFromTriplets(t.begin(), t.end());
    op.matrix.makeCompressed();
    op.support = support;

    // Coherences between clusters, eliminated to second order: their own
    // evolution is approximated by the diagonal -i w_kl + decay.
    std::vector<Eigen::Index> fast;
    std::vector<Eigen::Index> fast_position(static_cast<std::size_t>(d * d), -1);
    const double fast_count = static_cast<double>(d) * static_cast<double>(d) - static_cast<double>(support.size());
    if (second_order && fast_count * static_cast<double>(support.size()) > kMaxSecondOrderEntries) {
        second_order = false;
        model.warnings.push_back("dressed space too large for the second-order coherence correction; plain secular rates used");
    }
    if (second_order) {
        for (Eigen::Index l = 0; l < d; ++l)
            for (Eigen::Index k = 0; k < d; ++k)
                if (model.cluster[static_cast<std::size_t>(k)] != model.cluster[static_cast<std::size_t>(l)]) {
                    fast_position[static_cast<std::size_t>(k + d * l)] = static_cast<Eigen::Index>(fast.size());
                    fast.push_back(k + d * l);
                }
    }
    const auto nf = static_cast<Eigen::Index>(fast.size());
    CMatrix to_fast;
    CVector fast_diag;
    if (nf > 0) {
        auto same = [&](Eigen::Index a, Eigen::Index b) {
            return model.cluster[static_cast<std::size_t>(a)] == model.cluster[static_cast<std::size_t>(b)];
        };
        fast_diag.resize(nf);
        for (Eigen::Index f = 0; f < nf; ++f) {
            const Eigen::Index k = fast[static_cast<std::size_t>(f)] % d, l = fast[static_cast<std::size_t>(f)] / d;
            cplx v = -kI * (model.dressed_energies(k) - model.dressed_energies(l)) - 0.5 * (k_op(k, k) + k_op(l, l));
            for (const auto& j : jumps) v += j(k, k) * std::conj(j(l, l));
            fast_diag(f) = v;
        }

        to_fast = CMatrix::Zero(nf, ns);
        CMatrix outer(d, d);
        for (Eigen::Index c = 0; c < ns; ++c) {
            const Eigen::Index k = support[static_cast<std::size_t>(c)] % d, l = support[static_cast<std::size_t>(c)] / d;
            outer.setZero();
            for (const auto& j : jumps) outer.noalias() += j.col(k) * j.col(l).adjoint();
            for (Eigen::Index p = 0; p < d; ++p) {
                outer(p, l) -= 0.5 * k_op(p, k);
                outer(k, p) -= 0.5 * k_op(l, p);
            }
            for (Eigen::Index f = 0; f < nf; ++f) {
                const Eigen::Index idx = fast[static_cast<std::size_t>(f)];
                to_fast(f, c) = outer(idx % d, idx / d);
            }
        }

        for (Eigen::Index f = 0; f < nf; ++f) to_fast.row(f) /= fast_diag(f);

        constexpr Eigen::Index kChunk = 64;
        CMatrix eff = CMatrix(op.matrix);
        CMatrix from_fast(std::min(kChunk, ns), nf);
        for (Eigen::Index r0 = 0; r0 < ns; r0 += kChunk) {
            const Eigen::Index rows = std::min(kChunk, ns - r0);
            from_fast.setZero();
            for (Eigen::Index i = 0; i < rows; ++i) {
                const auto sr = static_cast<std::size_t>(r0 + i);
                const Eigen::Index p = support[sr] % d, q = support[sr] / d;
                outer.setZero();
                for (const auto& j : jumps) outer.noalias() += j.row(p).transpose() * j.row(q).conjugate();
                for (Eigen::Index f = 0; f < nf; ++f) {
                    const Eigen::Index idx = fast[static_cast<std::size_t>(f)];
                    from_fast(i, f) = outer(idx % d, idx / d);
                }
                // -1/2 K rho and -1/2 rho K reach (p, q) from (k, q) and (p, k).
                for (Eigen::Index k = 0; k < d; ++k) {
                    if (!same(k, q)) from_fast(i, fast_position[static_cast<std::size_t>(k + d * q)]) -= 0.5 * k_op(p, k);
                    if (!same(p, k)) from_fast(i, fast_position[static_cast<std::size_t>(p + d * k)]) -= 0.5 * k_op(k, q);
                }
            }
            eff.middleRows(r0, rows).noalias() -= from_fast.topRows(rows) * to_fast;
        }
        op.matrix = eff.sparseView(0.0, 0.0);
        op.matrix.makeCompressed();
        to_fast = -to_fast;
    }
    model.fast_coherences = static_cast<std::size_t>(nf);

    SteadyStateOptions opts = options;
    opts.check_positivity = false;
    SteadyStateResult r = steady_state(op, opts);
    model.populations = r.rho.diagonal().real();
    if (nf > 0) {
        CVector slow(ns);
        for (Eigen::Index c = 0; c < ns; ++c)
            slow(c) = r.rho(support[static_cast<std::size_t>(c)] % d, support[static_cast<std::size_t>(c)] / d);
        const CVector coherences = to_fast * slow;
        for (Eigen::Index f = 0; f < nf; ++f)
            r.rho(fast[static_cast<std::size_t>(f)] % d, fast[static_cast<std::size_t>(f)] / d) = coherences(f);
    }
    r.rho = u * r.rho * u.adjoint();
    r.rho = 0.5 * (r.rho + r.rho.adjoint()).eval();
    r.sx = expectation(r.rho, ops->sx);
    r.tier = SolverTier::rate_equation;
    if (options.check_positivity) {
        Eigen::SelfAdjointEigenSolver<CMatrix> pos(r.rho, Eigen::EigenvaluesOnly);
        r.min_eigenvalue = pos.eigenvalues().minCoeff();
    }
    model.result = std::move(r);

    model.rate_matrix = RMatrix::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
        for (Eigen::Index p = 0; p < d; ++p) {
            if (p == k) continue;
            double w = 0.0;
            for (const auto& j : jumps) w += std::norm(j(p, k));
            model.rate_matrix(p, k) = w;
        }
        model.rate_matrix(k, k) = -model.rate_matrix.col(k).sum();
    }
    return model;
}

SteadyStateResult dressed_rate_steady_state(const MasterEquationSpec& spec, double secular_tol,
                                            const SteadyStateOptions& options, bool second_order) {
    return dressed_rate_model(spec, secular_tol, options, second_order).result;
}

}  // namespace coopemit
