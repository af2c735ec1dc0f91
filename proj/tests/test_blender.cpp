#include <cmath>
#include <random>

#include "doctest.h"
#include "regimes.hpp"
#include "torsion/blender.hpp"

using namespace torsion;
using namespace torsion::testing;

namespace {

struct Setup {
    Scenario sc;
    T0Map t0;
    T1Map t1;
    Regime regime;
    Setup()
        : sc(blender_scenario()),
          t0(sc.t0),
          t1(sc.t1),
          regime(select_regime(sc.in, t0, t1)) {}
};

Setup& setup() {
    static Setup s;
    return s;
}

}  // namespace

TEST_CASE("monotone interpolation reproduces samples and stays monotone") {
    std::vector<double> x{-1.0, -0.5, 0.0, 0.5, 1.0};
    std::vector<double> y{0.0, 0.1, 0.5, 0.9, 1.0};
    SampledGraph g(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(g.eval(x[i]) == doctest::Approx(y[i]));
    double prev = g.eval(-1.0);
    for (double t = -0.99; t <= 1.0; t += 0.01) {
        double v = g.eval(t);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
    CHECK(g.lipschitz() == doctest::Approx(0.8));
}

TEST_CASE("covering of the square with margin robustness") {
    auto& S = setup();
    BlenderFamily fam(S.t0, S.t1, S.regime.chart, S.regime.cs, S.regime.in.chi, false);
    const double chi = S.regime.in.chi;

    CoveringOptions opt;
    opt.grid_res = 101;  // acceptance runs 201; keep the unit test quick
    CoveringResult res = covering_check(fam, opt);
    CHECK(res.covered);
    CHECK(res.a_estimate >= 1.0 - 10.0 * chi);

    // Robust under a chi/2 image shrink.
    CoveringOptions shrunk = opt;
    shrunk.margin = chi / 2.0;
    CoveringResult res2 = covering_check(fam, shrunk);
    CHECK(res2.covered);

    // A single map alone cannot cover: its image is a translated slab.
    FamilyData one;
    std::size_t mid = S.regime.cs.search_idx[S.regime.cs.search_idx.size() / 2];
    one.cal_n = {S.regime.cs.cal_n[mid]};
    one.b = {S.regime.cs.b[mid]};
    one.search_idx = {0};
    one.N_l = one.N_r = one.cal_n[0];
    BlenderFamily single(S.t0, S.t1, S.regime.chart, one, S.regime.in.chi, false);
    CoveringOptions small = opt;
    small.grid_res = 41;
    small.candidate_tries = 1;
    CoveringResult res3 = covering_check(single, small);
    CHECK(!res3.covered);
}

TEST_CASE("fixed points sit near b/chi with multipliers 1 -+ chi") {
    auto& S = setup();
    const double chi = S.regime.in.chi;
    BlenderFamily fam(S.t0, S.t1, S.regime.chart, S.regime.cs, S.regime.in.chi, false);

    for (std::int64_t n : {S.regime.cs.N_l, S.regime.cs.N_r}) {
        FixedPointResult fp = find_fixed_point(fam, n);
        double b = 0.0;
        for (std::size_t i = 0; i < S.regime.cs.cal_n.size(); ++i)
            if (S.regime.cs.cal_n[i] == n) b = S.regime.cs.b[i];
        // Fixed-point residual and seed proximity.
        Vec2 im = fam.apply(n, fp.z);
        CHECK(std::fabs(im.x - fp.z.x) + std::fabs(im.y - fp.z.y) <= 1e-10);
        double c_fit = std::fabs(fp.z.x - b / chi) / chi;
        INFO("xi offset / chi = ", c_fit);
        CHECK(c_fit <= 3.0);
        // Multipliers (1 -+ chi) + O(chi^2).
        CHECK(std::fabs(fp.eig_contracting - (1.0 - chi)) <= 5.0 * chi * chi);
        CHECK(std::fabs(fp.eig_expanding - (1.0 + chi)) <= 5.0 * chi * chi);
    }

    // The two distinguished points sit on opposite sides of xi = 0.
    FixedPointResult fl = find_fixed_point(fam, S.regime.cs.N_l);
    FixedPointResult fr = find_fixed_point(fam, S.regime.cs.N_r);
    CHECK(fl.z.x < 0.0);
    CHECK(fr.z.x > 0.0);
}

TEST_CASE("graph transform builds fully crossing manifolds") {
    auto& S = setup();
    const double chi = S.regime.in.chi;
    BlenderFamily fam(S.t0, S.t1, S.regime.chart, S.regime.cs, S.regime.in.chi, false);
    FixedPointResult fp = find_fixed_point(fam, S.regime.cs.N_l);

    GraphTransformOptions opt;
    auto gu = graph_transform_manifold(fam, fp, GraphCurve::Kind::u_curve, opt);
    auto gs = graph_transform_manifold(fam, fp, GraphCurve::Kind::s_curve, opt);

    // Contraction ratios within the stated bound.
    const double bound = 0.5 * (1.0 + (1.0 - chi)) + opt.ratio_slack;
    for (double r : gu.cauchy_ratios) CHECK(r <= bound);
    for (double r : gs.cauchy_ratios) CHECK(r <= bound);

    // The unstable graph is a near-vertical line through the fixed point.
    double worst = 0.0;
    for (double eta = -1.0; eta <= 1.0; eta += 0.1)
        worst = std::max(worst, std::fabs(gu.curve.graph.eval(eta) - fp.z.x));
    // The bend reflects the fitted normal-form constant; report it.
    INFO("unstable graph deviation / chi = ", worst / chi);
    CHECK(worst <= 6.0 * chi);
    CHECK(gu.curve.lipschitz <= 1.0);
    CHECK(gs.curve.lipschitz <= 1.0);

    // Invariance: the image of a graph point stays on the graph.
    for (double eta : {-0.6, 0.1, 0.8}) {
        Vec2 im = fam.apply(fp.n, {gu.curve.graph.eval(eta), eta});
        if (std::fabs(im.y) <= 1.0)
            CHECK(std::fabs(im.x - gu.curve.graph.eval(im.y)) <= 1e-6);
    }
}

TEST_CASE("curve searches realize the dichotomy") {
    auto& S = setup();
    BlenderFamily fam(S.t0, S.t1, S.regime.chart, S.regime.cs, S.regime.in.chi, false);
    BlenderPair pl = build_blender_pair(fam, S.regime.cs.N_l);
    BlenderPair pr = build_blender_pair(fam, S.regime.cs.N_r);

    // Fully crossing flat curve: immediate witness, empty word.
    ChartCurveFn full{[](double s) { return Vec2{s, 0.0}; }, -1.0, 1.0};
    SearchResult r1 = cs_blender_search(fam, full, pl, pr);
    CHECK(r1.chunks.empty());
    CHECK((r1.witness_n == S.regime.cs.N_l || r1.witness_n == S.regime.cs.N_r));
    // The witness lies on the chosen unstable manifold.
    const BlenderPair& hit = r1.witness_n == pl.fixed_point.n ? pl : pr;
    CHECK(std::fabs(r1.witness_point.x - hit.unstable.graph.eval(r1.witness_point.y)) <= 1e-9);

    // Short curve at the origin: word length within the expansion-rate bound.
    ChartCurveFn tiny{[](double s) { return Vec2{s, 0.3 * s}; }, -0.05, 0.05};
    SearchResult r2 = cs_blender_search(fam, tiny, pl, pr);
    const double chi = S.regime.in.chi;
    int bound = static_cast<int>(std::ceil(std::log(18.0) / std::log1p(chi / 2.0)));
    INFO("word length ", r2.chunks.size(), " bound ", bound);
    CHECK(static_cast<int>(r2.chunks.size()) <= bound);
    CHECK(!r2.chunks.empty());

    // Pair variant: curves with substantially overlapping projections share
    // one pullback word.
    ChartCurveFn a{[](double s) { return Vec2{s, 0.1}; }, -0.06, 0.02};
    ChartCurveFn b{[](double s) { return Vec2{s, -0.12}; }, -0.05, 0.03};
    PairSearchResult pres = cs_blender_search_pair(fam, a, b, pl, pr);
    CHECK(pres.first.chunks == pres.chunks);
    CHECK(pres.second.chunks == pres.chunks);
}

TEST_CASE("double blender: heteroclinic witness with a steep crossing") {
    auto& S = setup();
    DoubleBlender db = build_double_blender(S.t0, S.t1, S.regime);
    // The crossing is near-orthogonal in chart units; the acceptance bound
    // is tan(35 degrees).
    CHECK(db.crossing_tangent >= std::tan(35.0 * kPi / 180.0));
    // The witness sits in both chart squares.
    Vec2 zcs = S.regime.chart.to_chart(db.heteroclinic);
    Vec2 zcu = S.regime.chart_cu.to_chart(db.heteroclinic);
    CHECK(std::fabs(zcs.x) <= 1.0);
    CHECK(std::fabs(zcs.y) <= 1.0);
    CHECK(std::fabs(zcu.x) <= 1.0);
    CHECK(std::fabs(zcu.y) <= 1.0);
    // On the cs unstable manifold to interpolation accuracy.
    CHECK(std::fabs(zcs.x - db.cs.unstable.graph.eval(zcs.y)) <= 1e-6);
}

TEST_CASE("steering drives the action into the chart band") {
    auto& S = setup();
    SteeringOptions opt;
    opt.r_steer = S.regime.alpha_hat /
                  std::pow(std::fabs(std::log(S.regime.in.params.eps)), 3);

    // Monotone descent from +0.8 r_steer.
    AnnulusPoint z{0.0, 0.8 * opt.r_steer};
    SteeringResult res = steer_to_blender(S.t0, S.t1, S.regime, z, SteerTarget::cu, opt);
    REQUIRE(res.kicks > 0);
    for (std::size_t i = 1; i < res.j_trace.size(); ++i)
        CHECK(res.j_trace[i] <= res.j_trace[i - 1] + S.regime.in.params.eps);
    Vec2 zeta = S.regime.chart_cu.to_chart(res.end);
    CHECK(std::fabs(zeta.x) <= 0.5);
    CHECK(std::fabs(zeta.y) <= 0.5);
    // Replay: the word maps the start to the recorded end.
    AnnulusPoint replay = compose_word(S.t0, S.t1, res.word, res.start);
    CHECK(std::fabs(wrap_signed(replay.phi - res.end.phi)) <= 1e-12);
    CHECK(replay.J == doctest::Approx(res.end.J).epsilon(1e-12));

    // A point already in the band yields a rotation-only word.
    AnnulusPoint inband = S.regime.chart_cu.from_chart({0.9, 0.0});
    SteeringResult res2 = steer_to_blender(S.t0, S.t1, S.regime, inband, SteerTarget::cu, opt);
    CHECK(res2.kicks == 0);

    // Backward steering reaches the plain chart; its forward word maps the
    // end back to the start.
    SteeringResult res3 = steer_to_blender(S.t0, S.t1, S.regime, z, SteerTarget::cs, opt);
    Vec2 zeta3 = S.regime.chart.to_chart(res3.end);
    CHECK(std::fabs(zeta3.x) <= 0.5);
    CHECK(std::fabs(zeta3.y) <= 0.5);
    AnnulusPoint fwd = compose_word(S.t0, S.t1, res3.word, res3.end);
    CHECK(std::fabs(wrap_signed(fwd.phi - z.phi)) <= 1e-10);
    CHECK(fwd.J == doctest::Approx(z.J).epsilon(1e-10));
}

TEST_CASE("transitivity certificate on one pair of balls") {
    auto& S = setup();
    TransitivityOptions opt;
    opt.steer.r_steer =
        S.regime.alpha_hat / std::pow(std::fabs(std::log(S.regime.in.params.eps)), 3);
    Ball b1{{0.0, 0.0}, 0.01};
    Ball b2{{0.0, 0.0}, 0.01};
    TransitivityCertificate cert = transitivity_search(S.t0, S.t1, S.regime, b1, b2, opt);
    CHECK(verify_transitivity(S.t0, S.t1, cert));
    CHECK(ball_contains(b1, cert.r_steer, cert.start));
    CHECK(cert.word.length() > 0);
}

TEST_CASE("reachability oracle basics") {
    auto& S = setup();
    double r = 3e-5;
    // max_len = 0: the identity relation.
    ReachabilityOracle id = build_reachability_oracle(S.t0, S.t1, r, 8, 0);
    for (int c = 0; c < 64; ++c)
        for (int d = 0; d < 64; ++d) CHECK(id.reachable(c, d) == (c == d));

    // One-step reachability must cover the actual images of cell points.
    ReachabilityOracle one = build_reachability_oracle(S.t0, S.t1, r, 16, 1);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uphi(0.0, kTwoPi), uj(-r, r);
    for (int t = 0; t < 200; ++t) {
        AnnulusPoint z{uphi(rng), uj(rng)};
        AnnulusPoint im0 = S.t0.apply(z);
        CHECK(one.reachable(one.cell_of(z), one.cell_of(im0)));
        AnnulusPoint im1 = S.t1.apply(z);
        if (std::fabs(im1.J) < r) CHECK(one.reachable(one.cell_of(z), one.cell_of(im1)));
    }
}
