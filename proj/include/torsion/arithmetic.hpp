// Continued fractions, constant-type Diophantine certificates and covering
// radii of circle rotation orbits. All numbers here live on the unit circle
// R/Z; the map layer converts to radians where needed.
#ifndef TORSION_ARITHMETIC_HPP
#define TORSION_ARITHMETIC_HPP

#include <cstdint>
#include <vector>

#include "torsion/common.hpp"

namespace torsion {

struct ContinuedFractionOptions {
    // A partial quotient above this ceiling means the remainder is rational
    // to working precision.
    std::uint64_t quotient_ceiling = 1'000'000'000ULL;
    // If 1/remainder is within this distance of an integer the expansion is
    // snapped there and any deeper request raises RationalDetected.
    long double rational_tol = 1e-12L;
};

// Standard continued fraction expansion of x in (0,1) to `depth` terms,
// computed in extended precision.
std::vector<std::uint64_t> continued_fraction(long double x, int depth,
                                              const ContinuedFractionOptions& opt = {});

// Value of [0; a_1, a_2, ...] in (0,1).
long double value_from_quotients(const std::vector<std::uint64_t>& quotients);

// Convergents p_k/q_k of the expansion.
struct Convergent {
    std::uint64_t p = 0;
    std::uint64_t q = 1;
};
std::vector<Convergent> convergents(const std::vector<std::uint64_t>& quotients);

// A rotation number in (0,1) with its partial quotients computed lazily.
class RotationNumber {
  public:
    explicit RotationNumber(double value) : value_(value) {}
    RotationNumber(double value, ContinuedFractionOptions opt) : value_(value), opt_(opt) {}

    double value() const { return value_; }
    long double value_l() const { return value_; }

    // Partial quotients to the requested depth (extends the cache on demand).
    const std::vector<std::uint64_t>& partial_quotients(int depth) const;

  private:
    double value_;
    ContinuedFractionOptions opt_{};
    mutable std::vector<std::uint64_t> quotients_;
};

// Best empirical constant-type certificate up to q_max:
//   alpha_hat = min_{1 <= q <= q_max} q * dist(q*beta, Z).
// Non-increasing in q_max; equals inf_q q^2 |beta - p/q| at the nearest p.
double diophantine_constant(const RotationNumber& beta, std::uint64_t q_max);

// Covering radius (largest gap half-length) of {offset + n*beta mod 1}
// for n = 1..N on the unit circle.
double orbit_density_radius(const RotationNumber& beta, double offset, std::uint64_t N);

}  // namespace torsion

#endif  // TORSION_ARITHMETIC_HPP
