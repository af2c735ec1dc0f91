// Cylinder skew-products over the full shift with weak coupling: fiber
// compositions with run batching, window-sensitivity measurements and the
// transitivity-modulo-N-cylinders search.
#ifndef TORSION_SKEW_HPP
#define TORSION_SKEW_HPP

#include <cstdint>
#include <vector>

#include "torsion/blender.hpp"
#include "torsion/normal_form.hpp"
#include "torsion/twist_maps.hpp"

namespace torsion {

// A doubly infinite symbol sequence: a run-length encoded core over
// [lo, lo+length-1] and a constant fill symbol outside it.
struct SymbolTrack {
    std::int64_t lo = 0;
    std::vector<Word::Run> runs;
    std::uint8_t fill = 0;

    std::int64_t length() const;
    int at(std::int64_t k) const;
    void append(std::uint8_t symbol, std::uint64_t count = 1);
    void append(const Word& word);
    // The maximal index m > k with positions [k, m) all equal to at(k),
    // clipped to `limit`. Outside the core this is `limit` itself.
    std::int64_t run_end(std::int64_t k, std::int64_t limit) const;
};

// A finite window of symbols covering [-W, W]; identifies the N-cylinder
// C_N for any N <= W.
struct SymbolWindow {
    std::int64_t W = 0;
    std::vector<std::uint8_t> symbols;  // length 2W+1, index k at symbols[k+W]

    int at(std::int64_t k) const { return symbols[static_cast<std::size_t>(k + W)]; }
    SymbolTrack track() const;
    static SymbolWindow random(std::int64_t W, std::uint64_t seed);
};

struct KernelSpec {
    double amplitude = 0.5;  // scale of the coupling fields g_k
    int truncation = 0;      // 0: ceil(log(machine eps)/log(delta))
};

// F(omega, z) = T_{omega_0}(z) + sum_{k>=1} delta^k g_k(z) (omega_k - omega_{-k}),
// with g_k bounded smooth fields; window agreement to depth n bounds the
// fiber difference by delta^n through the geometric tail.
class SkewSystem {
  public:
    SkewSystem(const AnnulusMap& t0, const AnnulusMap& t1, double delta, KernelSpec kernel = {});

    double delta() const { return delta_; }
    int truncation() const { return depth_; }
    const KernelSpec& kernel() const { return kernel_; }
    const AnnulusMap& t0() const { return t0_; }
    const AnnulusMap& t1() const { return t1_; }

    // Coupling displacement at base position `pos` of the track.
    Vec2 coupling(const SymbolTrack& w, std::int64_t pos, AnnulusPoint z) const;

    AnnulusPoint fiber_apply(const SymbolTrack& w, std::int64_t pos, AnnulusPoint z) const;
    AnnulusPoint fiber_apply_inverse(const SymbolTrack& w, std::int64_t pos,
                                     AnnulusPoint z) const;

    // n forward fiber steps starting at base position pos0 (n >= 0);
    // zero-coupling interiors of 0-runs are collapsed through iterate().
    AnnulusPoint fiber_compose(const SymbolTrack& w, std::int64_t pos0, std::int64_t n,
                               AnnulusPoint z) const;
    // Inverse of the n steps that END at pos0 (undoes positions pos0-n..pos0-1).
    AnnulusPoint fiber_compose_inverse(const SymbolTrack& w, std::int64_t pos0, std::int64_t n,
                                       AnnulusPoint z) const;

  private:
    const AnnulusMap& t0_;
    const AnnulusMap& t1_;
    double delta_;
    KernelSpec kernel_;
    int depth_;
};

// Sup norms over a phi x J grid of the difference of n-step compositions
// along two windows that agree on [-n, n].
struct SensitivityResult {
    double c0_diff = 0.0;
    double c1_diff = 0.0;
};
SensitivityResult window_sensitivity(const SkewSystem& sys, const SymbolWindow& w1,
                                     const SymbolWindow& w2, std::int64_t n, int grid_phi = 24,
                                     int grid_j = 9, double j_range = 0.9);

// ----- transitivity modulo N-cylinders -----

struct SkewCertificate {
    SymbolTrack track;       // the realized base sequence
    std::int64_t steps = 0;  // M: the orbit runs from time 0 to M
    AnnulusPoint start;      // in ball_a
    AnnulusPoint end;        // its fiber image at time M, inside ball_b
    Ball target;
    double r_steer = 0.0;
    std::int64_t N = 0;      // cylinder depth matched at both ends
};

struct SkewSearchOptions {
    TransitivityOptions transitivity{};
    std::int64_t rot_pad = 0;  // extra zeros before the backward block
};

// Builds the bridging sequence: the frozen start window, a steering word
// into the reversed-family block, curve expansions on both sides, a rotation
// block, and the frozen target window; certifies by direct coupled fiber
// composition.
SkewCertificate skew_transitivity_search(const SkewSystem& sys, const Regime& regime,
                                         const SymbolWindow& window_a, const Ball& ball_a,
                                         const SymbolWindow& window_b, const Ball& ball_b,
                                         std::int64_t N, const SkewSearchOptions& opt = {});

bool verify_skew(const SkewSystem& sys, const SymbolWindow& window_a,
                 const SymbolWindow& window_b, const SkewCertificate& cert);

}  // namespace torsion

#endif  // TORSION_SKEW_HPP
