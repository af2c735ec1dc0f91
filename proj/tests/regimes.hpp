// Shared parameter sets for the regime-level tests and the acceptance suite.
#ifndef TORSION_TESTS_REGIMES_HPP
#define TORSION_TESTS_REGIMES_HPP

#include "torsion/normal_form.hpp"
#include "torsion/twist_maps.hpp"

namespace torsion::testing {

inline const double kGolden = 0.6180339887498949;

struct Scenario {
    T0Spec t0;
    T1Spec t1;
    RegimeInputs in;
};

// Desk-scale weakly hyperbolic window used by the covering/blender/transitivity
// experiments: chi = 0.05 with N ~ 4.2e6 admissible iterates reachable through
// the long-run collapse.
inline Scenario blender_scenario() {
    Scenario sc;
    sc.t0 = T0Spec{RotationNumber(kGolden), 6.0, 0.05, 1e-14};
    sc.t1 = T1Spec{1e-10, {0.3, 0.1}};
    sc.in.params = ifs_params(sc.t0, sc.t1);
    sc.in.chi = 0.05;
    sc.in.kappa = 0.005;
    return sc;
}

// Scan-only window at chi = 0.025 for the translation-density checks.
inline Scenario density_scenario_chi025() {
    Scenario sc;
    sc.t0 = T0Spec{RotationNumber(kGolden), 6.0, 0.05, 1e-14};
    sc.t1 = T1Spec{1e-11, {0.3, 0.1}};
    sc.in.params = ifs_params(sc.t0, sc.t1);
    sc.in.chi = 0.025;
    sc.in.kappa = 0.0025;
    return sc;
}

// chi-parametrized window with the iterate spread delta = N_star/N pinned at
// 8 chi^2 and kappa = 2 chi^2, so every term of the normal-form error scales
// like chi^2 (the chart's angular extent kappa*tau/chi must shrink with chi
// or the kick-curvature term stalls at a constant). Used for the
// residual-scaling checks over chi in {0.0125, 0.025, 0.05}; chi = 0.1 would
// force kappa > chi/10.
inline Scenario scaling_scenario(double chi) {
    Scenario sc;
    double alpha = 0.3819660112501051;
    double kappa = 2.0 * chi * chi;
    double tau = 6.0;
    double delta = 8.0 * chi * chi;
    double eps = delta * alpha * kappa * chi * chi * chi / 128.0;
    sc.t0 = T0Spec{RotationNumber(kGolden), tau, 0.05, 1e-14};
    sc.t1 = T1Spec{eps, {0.3, 0.1}};
    sc.in.params = ifs_params(sc.t0, sc.t1);
    sc.in.chi = chi;
    sc.in.kappa = kappa;
    sc.in.delta_search = delta;
    return sc;
}

}  // namespace torsion::testing

#endif
