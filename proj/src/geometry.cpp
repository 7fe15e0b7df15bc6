#include "coopemit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "coopemit/errors.hpp"
#include "coopemit/rng.hpp"

namespace coopemit {

namespace {

// sin(x)/x^3 - cos(x)/x^2, i.e. j1(x)/x. The closed form cancels badly for small x.
double j1_over_x(double x) {
    if (x < 0.5) {
        const double x2 = x * x;
        double term = 1.0 / 3.0;  // k = 1
        double sum = term;
        for (int k = 2; k < 20; ++k) {
            // ratio of consecutive series terms (-1)^{k+1} 2k x^{2k-2} / (2k+1)!
            term *= -x2 * static_cast<double>(k) / (static_cast<double>(k - 1) * (2.0 * k) * (2.0 * k + 1.0));
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    return std::sin(x) / (x * x * x) - std::cos(x) / (x * x);
}

double sinc(double x) {
    if (x < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

Vec3 sample_in_ball(rng::Stream& stream) {
    for (;;) {
        Vec3 p{stream.uniform(-1.0, 1.0), stream.uniform(-1.0, 1.0), stream.uniform(-1.0, 1.0)};
        if (p.squaredNorm() <= 1.0) return p;
    }
}

void center(std::vector<Vec3>& positions) {
    Vec3 com = Vec3::Zero();
    for (const auto& p : positions) com += p;
    com /= static_cast<double>(positions.size());
    for (auto& p : positions) p -= com;
}

double min_pair_distance(const std::vector<Vec3>& positions) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < positions.size(); ++m)
        for (std::size_t n = 0; n < m; ++n) best = std::min(best, (positions[m] - positions[n]).norm());
    return best;
}

}  // namespace

double dipole_coupling(double xi, double cos_theta, double gamma0) {
    const double c2 = cos_theta * cos_theta;
    const double near = std::cos(xi) / (xi * xi * xi) + std::sin(xi) / (xi * xi);
    return -0.75 * gamma0 * ((1.0 - c2) * std::cos(xi) / xi - (1.0 - 3.0 * c2) * near);
}

double correlated_emission(double xi, double cos_theta, double gamma0) {
    const double c2 = cos_theta * cos_theta;
    return 0.75 * gamma0 * ((1.0 - c2) * sinc(xi) - (1.0 - 3.0 * c2) * j1_over_x(xi));
}

const char* to_string(SeparationConvention convention) {
    return convention == SeparationConvention::per_pair ? "per_pair" : "per_emitter";
}

SeparationConvention separation_convention_from_string(const std::string& name) {
    if (name == "per_pair" || name == "per-pair" || name == "pair") return SeparationConvention::per_pair;
    if (name == "per_emitter" || name == "per-emitter" || name == "emitter") return SeparationConvention::per_emitter;
    throw std::invalid_argument("unknown separation convention: " + name);
}

namespace {

double separation_divisor(std::size_t n, SeparationConvention convention) {
    const auto dn = static_cast<double>(n);
    return convention == SeparationConvention::per_pair ? 0.5 * dn * (dn - 1.0) : dn;
}

}  // namespace

double mean_separation(const EmitterConfiguration& config, SeparationConvention convention) {
    const std::size_t n = config.size();
    double total = 0.0;
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t k = 0; k < m; ++k) total += config.distance(m, k);
    return total / separation_divisor(n, convention);
}

EmitterConfiguration sample_random_configuration(std::size_t n, double r_bar, std::uint64_t seed,
                                                 int max_redraws, SeparationConvention convention) {
    if (n < 2) throw std::invalid_argument("sample_random_configuration: n must be at least 2");
    if (!(r_bar > 0.0)) throw std::invalid_argument("sample_random_configuration: r_bar must be positive");

    rng::Stream stream(seed);
    EmitterConfiguration config;
    config.positions.resize(n);
    for (int attempt = 0; attempt <= max_redraws; ++attempt) {
        for (auto& p : config.positions) p = sample_in_ball(stream);
        const double raw = mean_separation(config, convention);
        if (!(raw > 0.0)) continue;
        const double scale = r_bar / raw;
        for (auto& p : config.positions) p *= scale;
        center(config.positions);
        if (min_pair_distance(config.positions) > kMinPairDistance) return config;
    }
    throw DegenerateConfiguration("degenerate configuration: no draw with all pairs above " +
                                  std::to_string(kMinPairDistance) + " lambda0 for n=" + std::to_string(n) +
                                  ", r_bar=" + std::to_string(r_bar));
}

EmitterConfiguration circular_configuration(std::size_t n, double r_bar, const Vec3& dipole_axis,
                                            SeparationConvention convention) {
    if (n < 2) throw std::invalid_argument("circular_configuration: n must be at least 2");
    if (!(r_bar > 0.0)) throw std::invalid_argument("circular_configuration: r_bar must be positive");

    const Vec3 axis = dipole_axis.normalized();
    Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 u = (helper - helper.dot(axis) * axis).normalized();
    const Vec3 v = axis.cross(u);

    // Unit-radius chord sum fixes the radius.
    double chord_sum = 0.0;
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t k = 0; k < m; ++k)
            chord_sum += 2.0 * std::sin(kPi * static_cast<double>(m - k) / static_cast<double>(n));
    const double radius = r_bar * separation_divisor(n, convention) / chord_sum;

    EmitterConfiguration config;
    config.dipole_axis = axis;
    config.positions.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double phi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        config.positions.push_back(radius * (std::cos(phi) * u + std::sin(phi) * v));
    }
    return config;
}

PairCoefficients pair_coefficients(const EmitterConfiguration& config, double gamma0) {
    const auto n = static_cast<Eigen::Index>(config.size());
    PairCoefficients c;
    c.gamma0 = gamma0;
    c.g = RMatrix::Zero(n, n);
    c.gamma = RMatrix::Zero(n, n);
    c.xi = RMatrix::Zero(n, n);
    c.cos_theta = RMatrix::Zero(n, n);
    const Vec3 axis = config.dipole_axis.normalized();
    for (Eigen::Index m = 0; m < n; ++m) {
        c.gamma(m, m) = 0.5 * gamma0;
        for (Eigen::Index k = 0; k < m; ++k) {
            const Vec3 d = config.positions[m] - config.positions[k];
            const double r = d.norm();
            const double xi = 2.0 * kPi * r;
            // cos^2 is what enters, so the sign convention of the pair does not matter.
            const double ct = d.dot(axis) / r;
            c.xi(m, k) = c.xi(k, m) = xi;
            c.cos_theta(m, k) = ct;
            c.cos_theta(k, m) = -ct;
            c.g(m, k) = c.g(k, m) = dipole_coupling(xi, ct, gamma0);
            c.gamma(m, k) = c.gamma(k, m) = correlated_emission(xi, ct, gamma0);
        }
    }
    return c;
}

double pair_dephasing_product(double r12, double gamma0) {
    const double xi = 2.0 * kPi * r12;
    return dipole_coupling(xi, 0.0, gamma0) * (1.0 - 2.0 * correlated_emission(xi, 0.0, gamma0) / gamma0);
}

EnsembleStats ensemble_stats(const EmitterConfiguration& config, const PairCoefficients& coeffs) {
    const std::size_t n = coeffs.size();
    EnsembleStats s;
    s.r_bar = mean_separation(config);
    for (std::size_t k = 1; k < n; ++k) {
        s.g_bar += std::abs(coeffs.g(0, static_cast<Eigen::Index>(k)));
        s.gamma_bar += coeffs.gamma(0, static_cast<Eigen::Index>(k));
    }
    if (n > 1) s.gamma_bar /= static_cast<double>(n - 1);
    s.chi = 2.0 * s.gamma_bar / coeffs.gamma0;
    return s;
}

void write_configuration(std::ostream& out, const EmitterConfiguration& config) {
    const auto old_precision = out.precision(17);
    const Vec3& a = config.dipole_axis;
    out << "# axis " << a.x() << ' ' << a.y() << ' ' << a.z() << '\n';
    for (const auto& p : config.positions) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    out.precision(old_precision);
}

EmitterConfiguration read_configuration(std::istream& in) {
    EmitterConfiguration config;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        if (line[0] == '#') {
            std::string hash, key;
            fields >> hash >> key;
            if (key == "axis") {
                Vec3 a;
                if (!(fields >> a.x() >> a.y() >> a.z())) throw std::runtime_error("bad axis line: " + line);
                config.dipole_axis = a.normalized();
            }
            continue;
        }
        Vec3 p;
        if (!(fields >> p.x() >> p.y() >> p.z())) throw std::runtime_error("bad position line: " + line);
        config.positions.push_back(p);
    }
    return config;
}

}  // namespace coopemit
