#pragma once

// Emitter placement and the vacuum-mediated pair couplings.
//
// Lengths are in units of the transition wavelength, rates in units of the
// single-emitter linewidth unless a different gamma0 is passed.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "coopemit/types.hpp"

namespace coopemit {

/// Pairs closer than this are rejected by the sampler.
inline constexpr double kMinPairDistance = 1e-4;

/// How the mean separation is normalized. per_emitter divides the pair-distance sum
/// by N, per_pair by N(N-1)/2 (the mean pair distance).
enum class SeparationConvention { per_emitter, per_pair };

const char* to_string(SeparationConvention convention);
SeparationConvention separation_convention_from_string(const std::string& name);

struct EmitterConfiguration {
    std::vector<Vec3> positions;   // relative to the center of mass
    Vec3 dipole_axis{0.0, 0.0, 1.0};

    std::size_t size() const { return positions.size(); }
    double distance(std::size_t m, std::size_t n) const { return (positions[m] - positions[n]).norm(); }
};

/// Pairwise couplings. Diagonal of `gamma` is gamma0/2, diagonal of `g` is zero.
struct PairCoefficients {
    RMatrix g;
    RMatrix gamma;
    RMatrix xi;          // k0 * r_mn
    RMatrix cos_theta;   // (r_m - r_n) . axis / r_mn
    double gamma0 = 1.0;

    std::size_t size() const { return static_cast<std::size_t>(g.rows()); }
};

struct EnsembleStats {
    double r_bar = 0.0;      // sum_{m>n} r_mn / N
    double g_bar = 0.0;      // sum_{n != 1} |g_1n|
    double gamma_bar = 0.0;  // sum_{n != 1} Gamma_1n / (N - 1)
    double chi = 0.0;        // 2 gamma_bar / gamma0
};

/// Coherent exchange rate of a pair at reduced distance xi and orientation cos(theta).
double dipole_coupling(double xi, double cos_theta, double gamma0 = 1.0);

/// Correlated emission rate of a pair; tends to gamma0/2 as xi -> 0.
double correlated_emission(double xi, double cos_theta, double gamma0 = 1.0);

/// Mean separation; the default normalization is sum_{m>n} r_mn / N.
double mean_separation(const EmitterConfiguration& config,
                       SeparationConvention convention = SeparationConvention::per_emitter);

/// N points uniform in a ball, rescaled to mean separation `r_bar`. Deterministic in `seed`.
/// Throws DegenerateConfiguration after `max_redraws` rejected draws.
EmitterConfiguration sample_random_configuration(std::size_t n, double r_bar, std::uint64_t seed,
                                                 int max_redraws = 1000,
                                                 SeparationConvention convention = SeparationConvention::per_emitter);

/// Equally spaced ring in the plane normal to `dipole_axis`.
EmitterConfiguration circular_configuration(std::size_t n, double r_bar,
                                            const Vec3& dipole_axis = Vec3{0.0, 0.0, 1.0},
                                            SeparationConvention convention = SeparationConvention::per_emitter);

PairCoefficients pair_coefficients(const EmitterConfiguration& config, double gamma0 = 1.0);

/// g_12 (1 - 2 Gamma_12 / gamma0) for a pair with dipoles normal to the separation.
double pair_dephasing_product(double r12, double gamma0 = 1.0);

EnsembleStats ensemble_stats(const EmitterConfiguration& config, const PairCoefficients& coeffs);

/// Plain-text table, one emitter per line: "x y z". The dipole axis goes in a
/// leading "# axis ax ay az" comment.
void write_configuration(std::ostream& out, const EmitterConfiguration& config);
EmitterConfiguration read_configuration(std::istream& in);

}  // namespace coopemit
