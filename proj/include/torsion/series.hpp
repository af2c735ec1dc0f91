// Truncated Fourier-Taylor series sum_{j<=jmax, |l|<=lmax} c[j][l] J^j e^{il phi}
// and series maps (phi, J) -> (phi + dphi, J + dJ). Used by the finite-order
// Birkhoff reduction and the critical-curve solver.
#ifndef TORSION_SERIES_HPP
#define TORSION_SERIES_HPP

#include <complex>
#include <span>
#include <vector>

#include "torsion/common.hpp"

namespace torsion {

class FourierTaylor {
  public:
    FourierTaylor() : FourierTaylor(0, 0) {}
    FourierTaylor(int jmax, int lmax);

    int jmax() const { return jmax_; }
    int lmax() const { return lmax_; }

    std::complex<double>& at(int j, int l);
    std::complex<double> at(int j, int l) const;

    // Real-valued builders: J^j * cos(l phi) and J^j * sin(l phi).
    static FourierTaylor cosine(int jmax, int lmax, int j, int l, double amplitude);
    static FourierTaylor sine(int jmax, int lmax, int j, int l, double amplitude);
    static FourierTaylor constant(int jmax, int lmax, double value);

    FourierTaylor& operator+=(const FourierTaylor& o);
    FourierTaylor& operator-=(const FourierTaylor& o);
    FourierTaylor& operator*=(double s);
    friend FourierTaylor operator+(FourierTaylor a, const FourierTaylor& b) { return a += b; }
    friend FourierTaylor operator-(FourierTaylor a, const FourierTaylor& b) { return a -= b; }
    friend FourierTaylor operator*(double s, FourierTaylor a) { return a *= s; }

    // Truncating product.
    FourierTaylor mul(const FourierTaylor& o) const;

    FourierTaylor dphi() const;  // derivative in the angle
    FourierTaylor dJ() const;    // derivative in the action

    double eval(double phi, double J) const;
    std::complex<double> eval_complex(double phi, double J) const;

    // Sum of |c| over all coefficients.
    double norm1() const;
    // Sum of |c| over coefficients of J-order j.
    double norm1_at_order(int j) const;
    // Lowest J-order with an angle-dependent coefficient above tol; -1 if none.
    int lowest_angle_order(double tol = 1e-14) const;
    // Angle-dependent part of the J^j coefficient as Fourier data over l.
    std::vector<std::complex<double>> angle_part(int j) const;

    // Kill coefficients below tol in magnitude.
    void chop(double tol = 0.0);

  private:
    int jmax_, lmax_;
    std::vector<std::complex<double>> c_;  // [(j)*(2lmax+1) + l + lmax]
    std::size_t idx(int j, int l) const {
        return static_cast<std::size_t>(j) * (2 * lmax_ + 1) + static_cast<std::size_t>(l + lmax_);
    }
};

// The map (phi, J) |-> (phi + dphi(phi,J), J + dJ(phi,J)).
struct SeriesMap {
    FourierTaylor dphi;
    FourierTaylor dJ;
};

// f(phi + a, J + b) as a truncated series. The constant angle-free part of
// `a` is applied exactly as a phase; the remainder enters through an
// exponential series and must be small (its powers must decay).
FourierTaylor compose(const FourierTaylor& f, const FourierTaylor& a, const FourierTaylor& b);

// outer . inner as series maps.
SeriesMap compose_maps(const SeriesMap& outer, const SeriesMap& inner);

// Series expansions of the concrete generating-function maps.
struct T0Spec;
struct T1Spec;
SeriesMap t0_series(const T0Spec& spec, int jmax, int lmax);
SeriesMap t1_series(const T1Spec& spec, int jmax, int lmax);

struct BnfOptions {
    double divisor_floor = 1e-12;  // reject |1 - e^{il beta}| below this
    double dirty_tol = 1e-14;      // threshold for "angle-dependent"
};

struct BnfResult {
    SeriesMap reduced;            // the normal-formed map
    SeriesMap transform;          // Phi with reduced = Phi^-1 . map . Phi
    SeriesMap transform_inverse;  // Phi^-1
    // Per-step record: targeted J-order, |s|_1 / |q|_1 amplification and the
    // divisor bound L_max/(4 alpha (nu+1)) it must respect.
    struct Step {
        int order;
        double amplification;
        double divisor_bound;
    };
    std::vector<Step> steps;
};

// k homological steps; each targets the lowest remaining angle-dependent
// J-order (>= 2) of the angle displacement and removes it with a symplectic
// polynomial change of variables. beta_rot is the rotation number on the
// unit circle; alpha_hat (its constant-type certificate) only feeds the
// reported divisor bounds.
BnfResult bnf_reduce(const SeriesMap& map, int k, double beta_rot, double alpha_hat,
                     const BnfOptions& opt = {});

// Zero curve of an action kick with its transversal slope.
struct CriticalPoint {
    double J;
    double phi_star;
    double slope;  // d(kick)/dphi at the zero
};

struct CriticalCurveOptions {
    double newton_tol = 1e-13;
    int max_iter = 60;
    double min_slope = 1e-3;  // relative to the kick scale
};

std::vector<CriticalPoint> critical_curve(const FourierTaylor& kick, std::span<const double> J_grid,
                                          const CriticalCurveOptions& opt = {});

}  // namespace torsion

#endif  // TORSION_SERIES_HPP
