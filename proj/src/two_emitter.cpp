#include "coopemit/two_emitter.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "coopemit/errors.hpp"
#include "coopemit/geometry.hpp"
#include "coopemit/steadystate.hpp"

namespace coopemit {

namespace {

// Two-qubit operators as coefficients over the 16 Pauli strings sigma^a (x) sigma^b,
// with a, b in {I, X, Y, Z} and the string index 4a + b.
struct PauliOp {
    std::array<cplx, 16> c{};

    static PauliOp string(int a, int b, cplx w = 1.0) {
        PauliOp p;
        p.c[static_cast<std::size_t>(4 * a + b)] = w;
        return p;
    }
    PauliOp& operator+=(const PauliOp& o) {
        for (std::size_t k = 0; k < 16; ++k) c[k] += o.c[k];
        return *this;
    }
    friend PauliOp operator+(PauliOp a, const PauliOp& b) { return a += b; }
    friend PauliOp operator-(PauliOp a, const PauliOp& b) {
        for (std::size_t k = 0; k < 16; ++k) a.c[k] -= b.c[k];
        return a;
    }
    friend PauliOp operator*(cplx w, PauliOp a) {
        for (auto& v : a.c) v *= w;
        return a;
    }
};

// sigma^a sigma^b = phase * sigma^r for single-qubit Paulis.
void multiply_single(int a, int b, cplx& phase, int& r) {
    if (a == 0) {
        phase = 1.0;
        r = b;
    } else if (b == 0) {
        phase = 1.0;
        r = a;
    } else if (a == b) {
        phase = 1.0;
        r = 0;
    } else {
        r = 6 - a - b;
        const bool cyclic = (b - a + 3) % 3 == 1;
        phase = cyclic ? kI : -kI;
    }
}

PauliOp operator*(const PauliOp& lhs, const PauliOp& rhs) {
    PauliOp out;
    for (int k = 0; k < 16; ++k) {
        const cplx wl = lhs.c[static_cast<std::size_t>(k)];
        if (wl == cplx(0.0)) continue;
        for (int m = 0; m < 16; ++m) {
            const cplx wr = rhs.c[static_cast<std::size_t>(m)];
            if (wr == cplx(0.0)) continue;
            cplx p1, p2;
            int r1, r2;
            multiply_single(k / 4, m / 4, p1, r1);
            multiply_single(k % 4, m % 4, p2, r2);
            out.c[static_cast<std::size_t>(4 * r1 + r2)] += wl * wr * p1 * p2;
        }
    }
    return out;
}

PauliOp commutator(const PauliOp& a, const PauliOp& b) { return a * b - b * a; }

constexpr int I = 0, X = 1, Y = 2, Z = 3;

PauliOp on(int emitter, int pauli, cplx w = 1.0) {
    return emitter == 0 ? PauliOp::string(pauli, I, w) : PauliOp::string(I, pauli, w);
}
PauliOp raising(int m) { return on(m, X, 0.5) + on(m, Y, 0.5 * kI); }
PauliOp lowering(int m) { return on(m, X, 0.5) + on(m, Y, -0.5 * kI); }

// Heisenberg-picture generator: d<O>/dt = <adjoint(O)>.
struct AdjointGenerator {
    PauliOp h, sz;
    std::array<PauliOp, 2> sp, sm;
    double rates[2][2];
    double gamma_c;

    explicit AdjointGenerator(const TwoEmitterParams& p) : gamma_c(p.gamma_c) {
        for (int m = 0; m < 2; ++m) {
            sp[static_cast<std::size_t>(m)] = raising(m);
            sm[static_cast<std::size_t>(m)] = lowering(m);
        }
        sz = on(0, Z) + on(1, Z);
        h = cplx(0.5 * p.omega0) * (on(0, X) + on(1, X)) - cplx(0.5 * p.delta) * sz +
            cplx(p.g12) * (sp[0] * sm[1] + sp[1] * sm[0]);
        rates[0][0] = rates[1][1] = 0.5 * p.gamma0;
        rates[0][1] = rates[1][0] = p.gamma12;
    }

    PauliOp operator()(const PauliOp& o) const {
        PauliOp out = kI * commutator(h, o);
        for (std::size_t m = 0; m < 2; ++m)
            for (std::size_t n = 0; n < 2; ++n) {
                const PauliOp pm = sp[m] * sm[n];
                out += cplx(rates[m][n]) * (cplx(2.0) * (sp[n] * o * sm[m]) - o * pm - pm * o);
            }
        out += cplx(-0.25 * gamma_c) * commutator(sz, commutator(sz, o));
        return out;
    }
};

// Rows: the 15 symmetric/antisymmetric coordinates in terms of the 15 non-identity strings.
Eigen::Matrix<double, 15, 15> coordinate_map() {
    Eigen::Matrix<double, 15, 15> t = Eigen::Matrix<double, 15, 15>::Zero();
    auto col = [](int a, int b) { return 4 * a + b - 1; };
    const int pairs[3][2] = {{X, Y}, {X, Z}, {Y, Z}};
    for (int s = 0; s < 3; ++s) {
        const int a = s + 1;
        t(s, col(a, I)) = 1.0;
        t(s, col(I, a)) = 1.0;
        t(9 + s, col(a, I)) = 1.0;
        t(9 + s, col(I, a)) = -1.0;
        t(3 + s, col(a, a)) = 1.0;
        const int p = pairs[s][0], q = pairs[s][1];
        t(6 + s, col(p, q)) = 1.0;
        t(6 + s, col(q, p)) = 1.0;
        t(12 + s, col(p, q)) = 1.0;
        t(12 + s, col(q, p)) = -1.0;
    }
    return t;
}

Eigen::Matrix<double, 9, 1> least_squares(const Eigen::Matrix<double, 10, 9>& a, const Eigen::Matrix<double, 10, 1>& b) {
    return a.colPivHouseholderQr().solve(b);
}

}  // namespace

TwoEmitterParams two_emitter_params(double r12, double omega0, double gamma_c, double gamma0, double cos_theta) {
    if (!(r12 > 0.0)) throw std::invalid_argument("two_emitter_params: r12 must be positive");
    TwoEmitterParams p;
    const double xi = 2.0 * kPi * r12;
    p.omega0 = omega0;
    p.gamma0 = gamma0;
    p.gamma_c = gamma_c;
    p.delta = optimal_detuning(omega0, gamma0, gamma_c);
    p.g12 = dipole_coupling(xi, cos_theta, gamma0);
    p.gamma12 = correlated_emission(xi, cos_theta, gamma0);
    return p;
}

TwoEmitterSystem assemble_two_emitter_system(const TwoEmitterParams& params) {
    if (!(params.gamma0 > 0.0)) throw std::invalid_argument("assemble_two_emitter_system: gamma0 must be positive");
    const AdjointGenerator adjoint(params);

    // d<P_k>/dt = sum_m full(k, m) <P_m> + drift(k), over non-identity strings.
    Eigen::Matrix<double, 15, 15> full;
    Eigen::Matrix<double, 15, 1> drift;
    for (int k = 1; k < 16; ++k) {
        const PauliOp d = adjoint(PauliOp::string(k / 4, k % 4));
        drift(k - 1) = d.c[0].real();
        for (int m = 1; m < 16; ++m) full(k - 1, m - 1) = d.c[static_cast<std::size_t>(m)].real();
    }

    const Eigen::Matrix<double, 15, 15> t = coordinate_map();
    const Eigen::Matrix<double, 15, 15> m = t * full * t.inverse();
    const Eigen::Matrix<double, 15, 1> c = t * drift;

    TwoEmitterSystem sys;
    sys.params = params;
    sys.mx = m.topLeftCorner<9, 9>();
    sys.my = m.bottomRightCorner<6, 6>();
    sys.x0 = c.head<9>();
    sys.coupling_leak = std::max({m.topRightCorner<9, 6>().cwiseAbs().maxCoeff(),
                                  m.bottomLeftCorner<6, 9>().cwiseAbs().maxCoeff(), c.tail<6>().cwiseAbs().maxCoeff()});
    return sys;
}

std::array<double, 15> TwoEmitterSteadyState::averages() const {
    std::array<double, 15> out{};
    for (int k = 0; k < 9; ++k) out[static_cast<std::size_t>(k)] = x(k);
    for (int k = 0; k < 6; ++k) out[static_cast<std::size_t>(9 + k)] = y(k);
    return out;
}

TwoEmitterSteadyState steady_state_n2(const TwoEmitterParams& params, const TwoEmitterOptions& options) {
    const TwoEmitterSystem sys = assemble_two_emitter_system(params);
    TwoEmitterSteadyState out;
    out.y.setZero();

    const double gap = 0.5 * params.gamma0 - params.gamma12;
    if (std::abs(gap) >= options.collective_tol * params.gamma0) {
        Eigen::PartialPivLU<Eigen::Matrix<double, 9, 9>> lu(sys.mx);
        const double rc = lu.rcond();
        if (!(rc > options.rcond_floor))
            throw ConditioningError("steady_state_n2: symmetric block is singular (rcond " + std::to_string(rc) + ")");
        Eigen::Matrix<double, 9, 1> x = lu.solve(-sys.x0);
        x += lu.solve(-sys.x0 - sys.mx * x);
        out.x = x;
    } else {
        out.collective = true;
        Eigen::Matrix<double, 10, 9> a;
        Eigen::Matrix<double, 10, 1> b;
        a.topRows<9>() = sys.mx;
        b.head<9>() = -sys.x0;
        if (options.sector == CollectiveSector::triplet) {
            a.row(9) << 0, 0, 0, 1, 1, 1, 0, 0, 0;
            b(9) = 1.0;
        } else {
            // The conserved combination drifts at first order in Gamma/2 - Gamma12;
            // the limit state is the one for which that drift vanishes.
            Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(sys.mx, Eigen::ComputeFullU);
            const Eigen::Matrix<double, 9, 1> left = svd.matrixU().col(8);
            TwoEmitterParams shifted = params;
            shifted.gamma12 -= 1.0;
            const TwoEmitterSystem other = assemble_two_emitter_system(shifted);
            const Eigen::Matrix<double, 9, 9> dm = sys.mx - other.mx;
            const Eigen::Matrix<double, 9, 1> dx0 = sys.x0 - other.x0;
            const double scale = sys.mx.cwiseAbs().maxCoeff() / std::max(dm.cwiseAbs().maxCoeff(), 1e-300);
            a.row(9) = scale * (left.transpose() * dm);
            b(9) = -scale * left.dot(dx0);
        }
        out.x = least_squares(a, b);
    }
    out.sx = out.x(0);
    return out;
}

double eta_limit_large_dephasing(double chi, double omega0, double gamma0, double gamma_c, bool collective) {
    const double w2 = omega0 * omega0 / (gamma0 * gamma0);
    if (collective) return 1.0 + gamma0 / (4.0 * gamma_c) * (w2 - 2.0);
    return 1.0 + gamma0 / gamma_c * chi / (2.0 * (1.0 + chi)) * (w2 - 1.0 - chi);
}

double eta_limit_no_dephasing(double chi, double g_bar, double omega0, double gamma0, bool collective) {
    if (collective)
        return 1.0 + 1.0 / 15.0 - 112.0 * (16.0 * g_bar * g_bar + 15.0 * gamma0 * gamma0) / (3315.0 * omega0 * omega0);
    const double gg = g_bar / gamma0;
    return 1.0 - gamma0 * gamma0 / (8.0 * omega0 * omega0) * (chi * chi + 2.0 * chi + 4.0 * gg * gg);
}

}  // namespace coopemit
