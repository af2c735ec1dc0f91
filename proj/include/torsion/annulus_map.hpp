// Interface for area-preserving annulus maps. Concrete maps may override
// iterate() with a closed form or a bounded-drift collapse of long runs.
#ifndef TORSION_ANNULUS_MAP_HPP
#define TORSION_ANNULUS_MAP_HPP

#include <cstdint>

#include "torsion/arithmetic.hpp"
#include "torsion/common.hpp"

namespace torsion {

struct AnnulusPoint {
    double phi = 0.0;
    double J = 0.0;
};

class AnnulusMap {
  public:
    virtual ~AnnulusMap() = default;
    virtual AnnulusPoint apply(AnnulusPoint z) const = 0;
    virtual AnnulusPoint apply_inverse(AnnulusPoint z) const = 0;
    virtual Mat2 jacobian(AnnulusPoint z) const = 0;
    virtual Mat2 jacobian_inverse(AnnulusPoint z) const {
        return jacobian(apply_inverse(z)).inverse();
    }
    virtual AnnulusPoint iterate(AnnulusPoint z, std::int64_t n) const {
        for (std::int64_t i = 0; i < n; ++i) z = apply(z);
        for (std::int64_t i = 0; i > n; --i) z = apply_inverse(z);
        return z;
    }
};

// The scalar data the affine model and the regime formulas need about an
// IFS pair: rotation number and torsion of the circle-preserving map at its
// invariant circle, transversality and constant angle shift of the kick map.
struct IfsParams {
    RotationNumber beta{0.6180339887498949};
    double tau = 0.0;
    double eps = 0.0;
    double b0 = 0.0;  // radians
};

}  // namespace torsion

#endif  // TORSION_ANNULUS_MAP_HPP
