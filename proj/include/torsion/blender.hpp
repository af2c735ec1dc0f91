// Symbolic-blender machinery in chart coordinates: covering of the square by
// the admissible map family, hyperbolic fixed points with graph-transform
// manifolds, the curve-expansion searches, steering along the annulus, the
// end-to-end transitivity search and a brute-force reachability oracle.
#ifndef TORSION_BLENDER_HPP
#define TORSION_BLENDER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "torsion/annulus_map.hpp"
#include "torsion/normal_form.hpp"
#include "torsion/twist_maps.hpp"

namespace torsion {

// Monotone piecewise-cubic interpolant over a sample table.
class SampledGraph {
  public:
    SampledGraph() = default;
    SampledGraph(std::vector<double> x, std::vector<double> y);

    double eval(double x) const;
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    double lipschitz() const;  // max |divided difference|
    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& ys() const { return y_; }

  private:
    std::vector<double> x_, y_, d_;  // d_: endpoint slopes per Fritsch-Carlson
};

struct GraphCurve {
    enum class Kind { s_curve, u_curve };
    Kind kind = Kind::s_curve;
    SampledGraph graph;   // s: eta over xi; u (manifold): xi over eta
    double lipschitz = 0.0;
};

// One word family in its chart: the forward orientation contracts xi and
// expands eta. Indexing is by position in the FamilyData arrays.
class BlenderFamily {
  public:
    BlenderFamily(const AnnulusMap& t0, const AnnulusMap& t1, const Chart& chart,
                  const FamilyData& data, double chi, bool reversed);

    const FamilyData& data() const { return data_; }
    const Chart& chart() const { return chart_; }
    double chi() const { return chi_; }
    bool reversed() const { return reversed_; }

    Vec2 apply(std::int64_t n, Vec2 zeta) const;
    Vec2 apply_inverse(std::int64_t n, Vec2 zeta) const;

    // Physical forward {0,1}-word chunk equivalent to this family's
    // apply(n) (forward family) or apply_inverse(n) (reversed family).
    Word chunk(std::int64_t n) const;

    // Index into data() of the search-subset member with translation
    // closest to b, k-th nearest.
    std::size_t nearest_search_member(double b, std::size_t k = 0) const;

  private:
    const AnnulusMap& t0_;
    const AnnulusMap& t1_;
    Chart chart_;
    FamilyData data_;
    double chi_;
    bool reversed_;
};

// ----- covering -----

struct CoveringOptions {
    int grid_res = 201;
    double margin = 0.0;      // required interior margin in image units
    int candidate_tries = 6;  // nearest-translation candidates per cell
    int a_grid = 41;          // centers per axis for the segment scan
    double a_tol = 2e-3;      // bisection tolerance on the segment radius
};

struct CoveringResult {
    bool covered = false;
    double a_estimate = 0.0;
    std::vector<std::pair<int, int>> uncovered_cells;
};

CoveringResult covering_check(const BlenderFamily& family, const CoveringOptions& opt = {});

// ----- fixed points and manifolds -----

struct FixedPointResult {
    std::int64_t n = 0;
    Vec2 z;
    Mat2 jacobian;           // finite-difference
    double eig_contracting = 0.0;
    double eig_expanding = 0.0;
};

struct BlenderPair {
    FixedPointResult fixed_point;
    GraphCurve unstable;  // xi = f(eta), fully crossing
    GraphCurve stable;    // eta = g(xi), fully crossing
};

FixedPointResult find_fixed_point(const BlenderFamily& family, std::int64_t n,
                                  double newton_tol = 1e-11, int max_iter = 40);

struct GraphTransformOptions {
    int samples = 401;
    int max_iter = 400;
    double tol = 1e-12;
    double ratio_slack = 0.05;  // allowed excess over (1+lambda)/2
};

struct GraphTransformResult {
    GraphCurve curve;
    std::vector<double> cauchy_ratios;  // successive sup-distance ratios
    int iterations = 0;
};

GraphTransformResult graph_transform_manifold(const BlenderFamily& family,
                                              const FixedPointResult& fp,
                                              GraphCurve::Kind kind,
                                              const GraphTransformOptions& opt = {});

BlenderPair build_blender_pair(const BlenderFamily& family, std::int64_t n,
                               const GraphTransformOptions& opt = {});

// ----- curve-expansion search -----

// A curve traced through word replay: params in [s_lo, s_hi] map to chart
// points of the family the search runs in.
struct ChartCurveFn {
    std::function<Vec2(double)> eval;
    double s_lo = 0.0;
    double s_hi = 1.0;
};

struct SearchOptions {
    int max_depth = 400;
    int samples = 41;
    double full_span = 1.995;      // xi-span declaring "fully crossing"
    double min_cross_slope = 1e-3; // transversality floor at the witness
    double witness_tol = 1e-13;
    // Extra centered pullbacks after full crossing; they flatten the curve's
    // height profile toward the family's invariant graphs, which the bridge
    // of the transitivity search relies on.
    int polish = 25;
};

struct SearchResult {
    std::vector<std::int64_t> chunks;  // family indices n, in discovery order
    double witness_param = 0.0;        // parameter on the (pulled-back) curve
    Vec2 witness_point;                // chart coordinates
    std::int64_t witness_n = 0;        // which distinguished manifold was hit
    int depth = 0;
};

// The intersection/expansion loop: pull the curve back through admissible
// maps until its xi-span reaches 9/5, then locate a transverse crossing with
// the unstable manifold of one of the two distinguished fixed points.
SearchResult cs_blender_search(const BlenderFamily& family, const ChartCurveFn& curve,
                               const BlenderPair& pair_l, const BlenderPair& pair_r,
                               const SearchOptions& opt = {});

// Pair variant: one pullback word serving two curves with overlapping
// xi-projections; both witnesses are located for the same word.
struct PairSearchResult {
    std::vector<std::int64_t> chunks;
    SearchResult first;
    SearchResult second;
};
PairSearchResult cs_blender_search_pair(const BlenderFamily& family, const ChartCurveFn& a,
                                        const ChartCurveFn& b, const BlenderPair& pair_l,
                                        const BlenderPair& pair_r, const SearchOptions& opt = {});

// Expansion-only driver: pull back until fully crossing, no witness needed.
struct ExpansionResult {
    std::vector<std::int64_t> chunks;
    double s_lo = 0.0, s_hi = 0.0;  // params bounding the fully crossing piece
    int depth = 0;
};
ExpansionResult expand_to_full_crossing(const BlenderFamily& family, const ChartCurveFn& curve,
                                        const SearchOptions& opt = {});

// ----- double blender -----

struct DoubleBlender {
    BlenderPair cs;  // forward family, plain chart
    BlenderPair cu;  // reversed family, reflected chart
    AnnulusPoint heteroclinic;   // physical witness of W^u(cs) crossing W^s(cu)
    double crossing_tangent = 0.0;  // |tan| of the angle between the curves
};

DoubleBlender build_double_blender(const AnnulusMap& t0, const AnnulusMap& t1,
                                   const Regime& regime,
                                   const GraphTransformOptions& opt = {});

// ----- steering -----

struct SteeringOptions {
    double r_steer = 0.0;        // 0: use alpha_hat/|ln eps|^3
    double band_fraction = 0.4;  // target |J| as a fraction of the chart band
    std::int64_t max_kicks = 30'000'000;
    std::int64_t max_rotations_per_kick = 200'000;
    double window_sin = 0.5;     // |sin phi| needed before a bulk kick
};

struct SteeringResult {
    Word word;            // forward orientation
    AnnulusPoint start;
    AnnulusPoint end;     // forward-image (target cu) or backward-image (cs)
    std::int64_t kicks = 0;
    std::vector<double> j_trace;  // |J| after each kick
};

// Drives z into the half-square of the target chart. Target cu steers the
// forward dynamics; target cs steers the backward dynamics (the word is
// recorded in forward orientation, to be applied after the bridge).
enum class SteerTarget { cs, cu };
SteeringResult steer_to_blender(const AnnulusMap& t0, const AnnulusMap& t1, const Regime& regime,
                                AnnulusPoint z, SteerTarget target,
                                const SteeringOptions& opt = {});

// ----- transitivity -----

struct Ball {
    AnnulusPoint center;
    double radius = 0.02;  // in band units: phi scaled by 2*pi, J by r_steer
};

struct TransitivityOptions {
    SteeringOptions steer{};
    SearchOptions search{};
    double bridge_tol = 1e-14;
};

struct TransitivityCertificate {
    Word word;
    AnnulusPoint start;  // a point of ball 1
    AnnulusPoint end;    // its image, inside ball 2
    Ball target;
    double r_steer = 0.0;
};

TransitivityCertificate transitivity_search(const AnnulusMap& t0, const AnnulusMap& t1,
                                            const Regime& regime, const Ball& b1, const Ball& b2,
                                            const TransitivityOptions& opt = {});

// Independent re-evaluation of a certificate (no search state).
bool verify_transitivity(const AnnulusMap& t0, const AnnulusMap& t1,
                         const TransitivityCertificate& cert);

// Ball membership in band units.
bool ball_contains(const Ball& ball, double r_steer, AnnulusPoint z);

// ----- reachability oracle -----

struct ReachabilityOracle {
    int cells_phi = 32;
    int cells_j = 32;
    double r_band = 0.0;
    // closure[c] = bitset of cells reachable from c by words up to max_len
    std::vector<std::vector<std::uint64_t>> closure;
    std::uint64_t max_len = 0;

    int cell_of(AnnulusPoint z) const;
    bool reachable(int from, int to) const;
};

// Discretizes the band into cells and closes the one-step relation (images
// of cell corner/center samples, conservatively fattened to the bounding
// box) under composition up to max_len by doubling.
ReachabilityOracle build_reachability_oracle(const AnnulusMap& t0, const AnnulusMap& t1,
                                             double r_band, int cells, std::uint64_t max_len);

}  // namespace torsion

#endif  // TORSION_BLENDER_HPP
