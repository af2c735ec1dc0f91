#include "torsion/twist_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace torsion {

namespace {
constexpr int kMaxNewton = 50;
// Budgets for collapsing T0 runs to the integrable closed form. The collapse
// must be segmentation-invariant: a run evaluated as one block or step by
// step has to agree to rounding noise, so it only engages when the per-step
// cubic correction is below one ulp of the angle, and even then the
// accumulated drift over the run is capped.
constexpr double kFastStepUlp = 6e-17;  // per-step angle correction bound
constexpr double kFastPhiTol = 1e-10;   // radians over the whole run
constexpr double kFastJRelTol = 1e-9;   // relative to |J|
}  // namespace

T0Map::T0Map(const T0Spec& spec) : spec_(spec) {
    const long double two_pi_l = 2.0L * 3.14159265358979323846264338327950288L;
    beta_angle_l_ = two_pi_l * static_cast<long double>(spec_.beta.value());
    beta_angle_ = static_cast<double>(beta_angle_l_);
    if (!(spec_.tau > 0.0)) throw Error("T0Map: tau must be positive");
    // The implicit solve needs 3*mu3*J'^2 < 1 on the annulus.
    if (std::fabs(spec_.mu3) * 3.0 * 1.21 >= 1.0)
        throw Error("T0Map: |mu3| too large for the generating-function solve on |J|<=1.1");
}

double T0Map::solve_jprime(double phi, double J) const {
    const double s = std::sin(phi);
    const double mu3 = spec_.mu3;
    if (mu3 == 0.0) return J;
    double jp = J;
    for (int it = 0; it < kMaxNewton; ++it) {
        double g = jp - mu3 * jp * jp * jp * s - J;
        double dg = 1.0 - 3.0 * mu3 * jp * jp * s;
        double step = g / dg;
        jp -= step;
        if (std::fabs(step) <= spec_.newton_tol * (1.0 + std::fabs(jp))) return jp;
    }
    throw NewtonDivergence("T0Map: implicit solve failed at phi=" + std::to_string(phi) +
                           " J=" + std::to_string(J));
}

AnnulusPoint T0Map::apply(AnnulusPoint z) const {
    const double jp = solve_jprime(z.phi, z.J);
    const double c = std::cos(z.phi);
    double phi = z.phi + beta_angle_ + spec_.tau * jp + 3.0 * spec_.mu3 * jp * jp * c;
    return {wrap_angle(phi), jp};
}

double T0Map::solve_phi_inverse(double target, double Jp) const {
    // Solve phi + 3 mu3 Jp^2 cos(phi) = target (target already unwrapped
    // near the seed).
    const double a = 3.0 * spec_.mu3 * Jp * Jp;
    if (a == 0.0) return target;
    double phi = target;
    for (int it = 0; it < kMaxNewton; ++it) {
        double g = phi + a * std::cos(phi) - target;
        double dg = 1.0 - a * std::sin(phi);
        double step = g / dg;
        phi -= step;
        if (std::fabs(step) <= spec_.newton_tol * (1.0 + std::fabs(phi))) return phi;
    }
    throw NewtonDivergence("T0Map: inverse angle solve failed");
}

AnnulusPoint T0Map::apply_inverse(AnnulusPoint z) const {
    const double Jp = z.J;
    const double target = z.phi - beta_angle_ - spec_.tau * Jp;
    const double phi = solve_phi_inverse(target, Jp);
    const double J = Jp - spec_.mu3 * Jp * Jp * Jp * std::sin(phi);
    return {wrap_angle(phi), J};
}

Mat2 T0Map::jacobian(AnnulusPoint z) const {
    const double jp = solve_jprime(z.phi, z.J);
    const double s = std::sin(z.phi), c = std::cos(z.phi);
    const double mu3 = spec_.mu3;
    const double A = 1.0 - 3.0 * mu3 * jp * jp * s;   // dJ/dJ' at fixed phi
    const double B = mu3 * jp * jp * jp * c;          // -dJ/dphi at fixed J'
    const double djp_dphi = B / A;
    const double djp_dJ = 1.0 / A;
    const double C = spec_.tau + 6.0 * mu3 * jp * c;
    // Row order: (phi', J') as functions of (phi, J).
    return {1.0 + C * djp_dphi - 3.0 * mu3 * jp * jp * s, C * djp_dJ, djp_dphi, djp_dJ};
}

Mat2 T0Map::jacobian_inverse(AnnulusPoint z) const {
    AnnulusPoint pre = apply_inverse(z);
    return jacobian(pre).inverse();
}

std::int64_t T0Map::fast_run_cap(double J) const {
    const double mu3 = std::fabs(spec_.mu3);
    if (mu3 == 0.0) return std::numeric_limits<std::int64_t>::max() / 4;
    const double Jm = std::fabs(J) * 1.0001 + 1e-300;
    const double phi_step = 3.0 * mu3 * Jm * Jm * (1.0 + spec_.tau * Jm);
    if (phi_step > kFastStepUlp) return 0;
    const double j_step = mu3 * Jm * Jm * Jm;
    const double cap_phi = kFastPhiTol / phi_step;
    const double cap_j = kFastJRelTol * Jm / j_step;
    double cap = std::min(cap_phi, cap_j);
    if (cap >= 9.0e18) return std::numeric_limits<std::int64_t>::max() / 4;
    return static_cast<std::int64_t>(cap);
}

AnnulusPoint T0Map::iterate(AnnulusPoint z, std::int64_t n) const {
    std::int64_t remaining = n;
    while (remaining != 0) {
        std::int64_t chunk = remaining > 0 ? remaining : -remaining;
        std::int64_t cap = fast_run_cap(z.J);
        if (cap >= chunk) {
            // Integrable closed form for the whole chunk. The rotation and
            // torsion advances are accumulated as separate extended-precision
            // products; summing beta + tau*J first would put the rounding of
            // the sum times n (~1e-12 rad at n ~ 1e6) into every evaluation.
            const long double nl = static_cast<long double>(remaining > 0 ? chunk : -chunk);
            long double a_rot = wrap_signed_l(beta_angle_l_ * nl);
            long double a_twist = static_cast<long double>(spec_.tau) *
                                  static_cast<long double>(z.J) * nl;
            long double phi = static_cast<long double>(z.phi) + a_rot + a_twist;
            z.phi = wrap_angle(static_cast<double>(wrap_signed_l(phi)));
            return z;
        }
        // Step honestly while the cubic terms are above budget.
        z = remaining > 0 ? apply(z) : apply_inverse(z);
        remaining += remaining > 0 ? -1 : 1;
    }
    return z;
}

double T1Map::btilde(double u) const {
    double v = 0.0;
    for (auto it = spec_.btilde.rbegin(); it != spec_.btilde.rend(); ++it) v = v * u + *it;
    return v;
}

double T1Map::btilde_deriv(double u) const {
    double v = 0.0;
    const auto& c = spec_.btilde;
    for (std::size_t k = c.size(); k-- > 1;) v = v * u + static_cast<double>(k) * c[k];
    return v;
}

AnnulusPoint T1Map::apply(AnnulusPoint z) const {
    const double jp = z.J + spec_.eps * std::sin(z.phi);
    return {wrap_angle(z.phi + btilde(jp)), jp};
}

AnnulusPoint T1Map::apply_inverse(AnnulusPoint z) const {
    const double phi = z.phi - btilde(z.J);
    const double J = z.J - spec_.eps * std::sin(phi);
    return {wrap_angle(phi), J};
}

Mat2 T1Map::jacobian(AnnulusPoint z) const {
    const double c = spec_.eps * std::cos(z.phi);
    const double jp = z.J + spec_.eps * std::sin(z.phi);
    const double bp = btilde_deriv(jp);
    return {1.0 + bp * c, bp, c, 1.0};
}

Mat2 T1Map::jacobian_inverse(AnnulusPoint z) const {
    AnnulusPoint pre = apply_inverse(z);
    return jacobian(pre).inverse();
}

void Word::append(std::uint8_t symbol, std::uint64_t count) {
    if (count == 0) return;
    if (!runs.empty() && runs.back().symbol == symbol)
        runs.back().count += count;
    else
        runs.push_back({symbol, count});
}

void Word::append(const Word& other) {
    for (const auto& r : other.runs) append(r.symbol, r.count);
}

std::uint64_t Word::length() const {
    std::uint64_t n = 0;
    for (const auto& r : runs) n += r.count;
    return n;
}

Word Word::from_symbols(const std::vector<int>& symbols) {
    Word w;
    for (int s : symbols) w.append(static_cast<std::uint8_t>(s), 1);
    return w;
}

std::vector<int> Word::to_symbols() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(length()));
    for (const auto& r : runs)
        for (std::uint64_t i = 0; i < r.count; ++i) out.push_back(r.symbol);
    return out;
}

namespace {
inline void check_in_annulus(const AnnulusPoint& z, std::uint64_t step) {
    if (std::fabs(z.J) > 1.0)
        throw LeftDomain(static_cast<std::size_t>(step),
                         "compose_word: action left [-1,1] at step " + std::to_string(step));
}
}  // namespace

AnnulusPoint compose_word(const AnnulusMap& t0, const AnnulusMap& t1, const Word& word,
                          AnnulusPoint z) {
    std::uint64_t step = 0;
    check_in_annulus(z, 0);
    for (const auto& run : word.runs) {
        if (run.symbol == 0) {
            z = t0.iterate(z, static_cast<std::int64_t>(run.count));
            step += run.count;
            check_in_annulus(z, step);
        } else {
            for (std::uint64_t i = 0; i < run.count; ++i) {
                z = t1.apply(z);
                ++step;
                check_in_annulus(z, step);
            }
        }
    }
    return z;
}

FlowAndJacobian compose_word_jacobian(const AnnulusMap& t0, const AnnulusMap& t1, const Word& word,
                                      AnnulusPoint z) {
    Mat2 D;
    std::uint64_t step = 0;
    check_in_annulus(z, 0);
    for (const auto& run : word.runs) {
        for (std::uint64_t i = 0; i < run.count; ++i) {
            if (run.symbol == 0) {
                D = t0.jacobian(z).mul(D);
                z = t0.apply(z);
            } else {
                D = t1.jacobian(z).mul(D);
                z = t1.apply(z);
            }
            ++step;
            check_in_annulus(z, step);
        }
    }
    return {z, D};
}

AnnulusPoint compose_word_inverse(const AnnulusMap& t0, const AnnulusMap& t1, const Word& word,
                                  AnnulusPoint z) {
    std::uint64_t step = word.length();
    check_in_annulus(z, step);
    for (auto rit = word.runs.rbegin(); rit != word.runs.rend(); ++rit) {
        if (rit->symbol == 0) {
            z = t0.iterate(z, -static_cast<std::int64_t>(rit->count));
            step -= rit->count;
            check_in_annulus(z, step);
        } else {
            for (std::uint64_t i = 0; i < rit->count; ++i) {
                z = t1.apply_inverse(z);
                --step;
                check_in_annulus(z, step);
            }
        }
    }
    return z;
}

AffineModel affine_model(const IfsParams& p, std::int64_t n) {
    if (n < 0) throw Error("affine_model: n must be nonnegative");
    if (p.eps > 0.0 && static_cast<double>(n) > 1.0 / (4.0 * p.eps))
        throw RegimeViolation("affine_model: n exceeds 1/(4 eps)");
    const double nd = static_cast<double>(n);
    Mat2 A{1.0 + nd * p.tau * p.eps, nd * p.tau, p.eps, 1.0};
    const long double two_pi_l = 2.0L * 3.14159265358979323846264338327950288L;
    long double shift = static_cast<long double>(p.b0) +
                        static_cast<long double>(n) * two_pi_l *
                            static_cast<long double>(p.beta.value());
    Vec2 b{static_cast<double>(wrap_signed_l(shift)), 0.0};
    return {A, b, n};
}

EigenSymplectic eigen_symplectic(const Mat2& A) {
    const double tr = A.trace();
    if (!(tr > 2.0)) throw NotHyperbolic("eigen_symplectic: trace <= 2");
    const double disc = std::sqrt(tr * tr - 4.0);
    const double lambda = (tr - disc) / 2.0;
    if (A.b == 0.0) throw NotHyperbolic("eigen_symplectic: upper-right entry vanishes");
    const double v = (lambda - A.a) / A.b;
    const double w = (1.0 / lambda - A.a) / A.b;
    return {lambda, v, w};
}

}  // namespace torsion
