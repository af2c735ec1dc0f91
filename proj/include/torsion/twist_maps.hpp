// Exact-symplectic annulus maps built from generating functions, word
// compositions over {0,1}, the affine model of high iterates and its exact
// 2x2 eigendata.
#ifndef TORSION_TWIST_MAPS_HPP
#define TORSION_TWIST_MAPS_HPP

#include <cstdint>
#include <vector>

#include "torsion/annulus_map.hpp"
#include "torsion/arithmetic.hpp"
#include "torsion/common.hpp"

namespace torsion {

struct RegimeViolation : Error {
    explicit RegimeViolation(const std::string& msg) : Error(msg) {}
};

// Rotation-plus-torsion map fixing {J=0}. The angle advance per step at J=0
// is 2*pi*beta (beta is the rotation number on the unit circle).
struct T0Spec {
    RotationNumber beta{0.6180339887498949};
    double tau = 0.5;    // torsion d(angle advance)/dJ at J=0
    double mu3 = 0.05;   // cubic generating coefficient
    double newton_tol = 1e-14;
};

struct T1Spec {
    double eps = 1e-5;                       // transversality of the action kick
    std::vector<double> btilde = {0.3, 0.1}; // beta~(J) = btilde[0] + btilde[1]*J + ...
};

// Generating function S(phi, J') = phi J' + beta_ang J' + tau J'^2/2
//                                  + mu3 J'^3 cos(phi), so
//   J    = J' - mu3 J'^3 sin(phi)   (J' solved from J by Newton)
//   phi' = phi + beta_ang + tau J' + 3 mu3 J'^2 cos(phi).
class T0Map : public AnnulusMap {
  public:
    explicit T0Map(const T0Spec& spec);

    const T0Spec& spec() const { return spec_; }
    double beta_angle() const { return beta_angle_; }
    long double beta_angle_l() const { return beta_angle_l_; }

    AnnulusPoint apply(AnnulusPoint z) const override;
    AnnulusPoint apply_inverse(AnnulusPoint z) const override;
    Mat2 jacobian(AnnulusPoint z) const override;  // implicit-differentiated
    Mat2 jacobian_inverse(AnnulusPoint z) const override;

    // n-fold iterate (n may be negative). Runs whose cubic corrections stay
    // below the documented drift budget are collapsed to the integrable
    // closed form; everything else is stepped.
    AnnulusPoint iterate(AnnulusPoint z, std::int64_t n) const override;

    // Largest |n| for which the closed-form collapse keeps the accumulated
    // angle drift below phi_tol and the action drift below rel_tol*|J|.
    std::int64_t fast_run_cap(double J) const;

  private:
    double solve_jprime(double phi, double J) const;
    double solve_phi_inverse(double phi_prime_unwrapped, double Jp) const;

    T0Spec spec_;
    double beta_angle_;
    long double beta_angle_l_;
};

// Generating function S1(phi, J') = phi J' + B(J') + eps cos(phi) with
// B'(u) = btilde(u), so  J' = J + eps sin(phi),  phi' = phi + btilde(J').
class T1Map : public AnnulusMap {
  public:
    explicit T1Map(const T1Spec& spec) : spec_(spec) {}

    const T1Spec& spec() const { return spec_; }
    double eps() const { return spec_.eps; }
    double btilde(double u) const;
    double btilde_deriv(double u) const;

    AnnulusPoint apply(AnnulusPoint z) const override;
    AnnulusPoint apply_inverse(AnnulusPoint z) const override;
    Mat2 jacobian(AnnulusPoint z) const override;
    Mat2 jacobian_inverse(AnnulusPoint z) const override;

  private:
    T1Spec spec_;
};

inline IfsParams ifs_params(const T0Spec& t0, const T1Spec& t1) {
    return {t0.beta, t0.tau, t1.eps, t1.btilde.empty() ? 0.0 : t1.btilde[0]};
}

// A finite word over {0,1}, run-length encoded; symbol 0 applies the
// T0-role map, symbol 1 the kick map.
struct Word {
    struct Run {
        std::uint8_t symbol = 0;
        std::uint64_t count = 0;
    };
    std::vector<Run> runs;

    void append(std::uint8_t symbol, std::uint64_t count = 1);
    void append(const Word& other);
    std::uint64_t length() const;
    static Word from_symbols(const std::vector<int>& symbols);
    std::vector<int> to_symbols() const;  // only for short words
};

// Left-to-right application: runs[0] acts first. Throws LeftDomain with the
// global step index if an intermediate action leaves [-1,1].
AnnulusPoint compose_word(const AnnulusMap& t0, const AnnulusMap& t1, const Word& word,
                          AnnulusPoint z);

// Same composition tracking the product of analytic Jacobians.
struct FlowAndJacobian {
    AnnulusPoint z;
    Mat2 D;
};
FlowAndJacobian compose_word_jacobian(const AnnulusMap& t0, const AnnulusMap& t1, const Word& word,
                                      AnnulusPoint z);

// Inverse composition: undoes the word (last symbol inverted first).
AnnulusPoint compose_word_inverse(const AnnulusMap& t0, const AnnulusMap& t1, const Word& word,
                                  AnnulusPoint z);

// Affine model of T0^n . T1 near the origin:
//   A_n = [[1 + n tau eps, n tau], [eps, 1]],  b_n = (<b0 + n beta_ang>, 0)
// with <.> the (-pi, pi] representative.
struct AffineModel {
    Mat2 A;
    Vec2 b;
    std::int64_t n = 0;
};

AffineModel affine_model(const IfsParams& p, std::int64_t n);
inline AffineModel affine_model(const T0Spec& t0, const T1Spec& t1, std::int64_t n) {
    return affine_model(ifs_params(t0, t1), n);
}

// Exact eigendata of a hyperbolic symplectic 2x2 matrix: the contracting
// eigenvalue in (0,1) and eigenvectors (1, v), (1, w) for lambda, 1/lambda.
struct EigenSymplectic {
    double lambda = 0.0;
    double v = 0.0;
    double w = 0.0;
};

EigenSymplectic eigen_symplectic(const Mat2& A);

}  // namespace torsion

#endif  // TORSION_TWIST_MAPS_HPP
