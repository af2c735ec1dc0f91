#include "torsion/arithmetic.hpp"

#include <algorithm>
#include <cmath>

namespace torsion {

std::vector<std::uint64_t> continued_fraction(long double x, int depth,
                                              const ContinuedFractionOptions& opt) {
    if (!(x > 0.0L && x < 1.0L)) throw Error("continued_fraction: x must lie in (0,1)");
    if (depth <= 0) throw Error("continued_fraction: depth must be positive");

    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(depth));
    long double rem = x;
    for (int k = 0; k < depth; ++k) {
        if (rem <= 0.0L)
            throw RationalDetected("continued_fraction: remainder underflow at term " +
                                   std::to_string(k + 1));
        long double inv = 1.0L / rem;
        long double nearest = std::floor(inv + 0.5L);
        long double a;
        if (std::fabs(inv - nearest) <= opt.rational_tol * std::max(1.0L, nearest)) {
            // 1/rem is an integer to working precision: snap, and make any
            // deeper request fail as rational.
            a = nearest;
            rem = 0.0L;
        } else {
            a = std::floor(inv);
            rem = inv - a;
        }
        if (a > static_cast<long double>(opt.quotient_ceiling))
            throw RationalDetected("continued_fraction: partial quotient " +
                                   std::to_string(static_cast<double>(a)) +
                                   " exceeds ceiling at term " + std::to_string(k + 1));
        out.push_back(static_cast<std::uint64_t>(a));
    }
    return out;
}

long double value_from_quotients(const std::vector<std::uint64_t>& quotients) {
    if (quotients.empty()) throw Error("value_from_quotients: empty expansion");
    long double v = 0.0L;
    for (auto it = quotients.rbegin(); it != quotients.rend(); ++it) {
        v = 1.0L / (static_cast<long double>(*it) + v);
    }
    return v;
}

std::vector<Convergent> convergents(const std::vector<std::uint64_t>& quotients) {
    std::vector<Convergent> out;
    out.reserve(quotients.size());
    std::uint64_t p_prev = 1, q_prev = 0;  // p_{-1}/q_{-1}
    std::uint64_t p = 0, q = 1;            // p_0/q_0 for x = [0; a1, ...]
    for (std::uint64_t a : quotients) {
        std::uint64_t p_next = a * p + p_prev;
        std::uint64_t q_next = a * q + q_prev;
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
        out.push_back({p, q});
    }
    return out;
}

const std::vector<std::uint64_t>& RotationNumber::partial_quotients(int depth) const {
    if (static_cast<int>(quotients_.size()) < depth)
        quotients_ = continued_fraction(static_cast<long double>(value_), depth, opt_);
    return quotients_;
}

double diophantine_constant(const RotationNumber& beta, std::uint64_t q_max) {
    if (q_max < 1) throw Error("diophantine_constant: q_max must be >= 1");
    const long double b = beta.value_l();
    long double best = 1.0L;
    long double qb = 0.0L;
    for (std::uint64_t q = 1; q <= q_max; ++q) {
        qb += b;
        if (qb >= 1.0L) qb -= 1.0L;
        long double d = qb <= 0.5L ? qb : 1.0L - qb;
        long double cand = static_cast<long double>(q) * d;
        if (cand < best) best = cand;
    }
    return static_cast<double>(best);
}

double orbit_density_radius(const RotationNumber& beta, double offset, std::uint64_t N) {
    if (N < 1) throw Error("orbit_density_radius: N must be >= 1");
    const long double b = beta.value_l();
    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(N));
    long double x = frac_l(static_cast<long double>(offset));
    for (std::uint64_t n = 1; n <= N; ++n) {
        x += b;
        if (x >= 1.0L) x -= 1.0L;
        pts.push_back(static_cast<double>(x));
    }
    std::sort(pts.begin(), pts.end());
    double max_gap = pts.front() + 1.0 - pts.back();  // wrap-around gap
    for (std::size_t i = 1; i < pts.size(); ++i) max_gap = std::max(max_gap, pts[i] - pts[i - 1]);
    return 0.5 * max_gap;
}

}  // namespace torsion
