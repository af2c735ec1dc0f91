#include <cmath>

#include "doctest.h"
#include "regimes.hpp"
#include "torsion/normal_form.hpp"

using namespace torsion;
using namespace torsion::testing;

TEST_CASE("regime quantifiers and the admissible scan") {
    Scenario sc = blender_scenario();
    T0Map t0(sc.t0);
    T1Map t1(sc.t1);
    Regime r = select_regime(sc.in, t0, t1);

    // N = [chi^2/(eps tau)] and the corrected N_star formula.
    CHECK(r.N == static_cast<std::int64_t>(std::floor(0.05 * 0.05 / (1e-10 * 6.0))));
    CHECK(r.alpha_hat == doctest::Approx(0.3819660112501051).epsilon(1e-9));
    CHECK(r.N_star ==
          static_cast<std::int64_t>(std::floor(128.0 / (r.alpha_hat * 0.05 * 6.0 * 0.005))));

    // Every admissible n lies in the scanned window and satisfies the
    // shifted-representative condition; b values are consistent with b_of_n.
    REQUIRE(!r.cs.cal_n.empty());
    REQUIRE(!r.cu.cal_n.empty());
    const double half = r.window_halfwidth();
    for (std::size_t i = 0; i < r.cs.cal_n.size(); i += 97) {
        std::int64_t n = r.cs.cal_n[i];
        CHECK(n >= r.N);
        CHECK(n <= r.N + r.scan_len);
        double b = r.b_of_n(n);
        CHECK(std::fabs(b - r.cs.b[i]) <= 1e-9 + 1e-9 * std::fabs(b));
        double shift = b / r.chart.C_inv.a;
        CHECK(std::fabs(shift) <= half * (1.0 + 1e-12));
    }

    // Distinguished iterates sit on opposite sides with |b| in (chi/4, 3chi/4).
    for (const FamilyData* f : {&r.cs, &r.cu}) {
        CHECK(f->b_l < 0.0);
        CHECK(f->b_r > 0.0);
        CHECK(-f->b_l > 0.05 / 4.0);
        CHECK(-f->b_l < 3.0 * 0.05 / 4.0);
        CHECK(f->b_r > 0.05 / 4.0);
        CHECK(f->b_r < 3.0 * 0.05 / 4.0);
    }

    // Density of the translation grid (the acceptance threshold is chi/10).
    CHECK(r.cs.density_max_gap <= 0.05 / 10.0);
    CHECK(r.cu.density_max_gap <= 2.0 * 0.05 / 10.0);  // reported; the forward grid is the gate

    // Doubling chi quadruples N at fixed eps, tau.
    RegimeInputs in2 = sc.in;
    in2.chi = 0.1;
    in2.kappa = 0.01;
    Regime r2 = select_regime(in2, t0, t1);
    CHECK(static_cast<double>(r2.N) ==
          doctest::Approx(4.0 * static_cast<double>(r.N)).epsilon(1e-6));
}

TEST_CASE("regime rejects infeasible parameters") {
    Scenario sc = blender_scenario();
    T0Map t0(sc.t0);
    T1Map t1(sc.t1);
    RegimeInputs bad = sc.in;
    bad.params.eps = 10.0;  // far above eps0*min(tau, alpha)
    CHECK_THROWS_AS(select_regime(bad, t0, t1), RegimeInfeasible);

    RegimeInputs bad2 = sc.in;
    bad2.kappa = 0.02;  // kappa > chi/10
    CHECK_THROWS_AS(select_regime(bad2, t0, t1), RegimeInfeasible);
}

TEST_CASE("chart geometry") {
    Scenario sc = blender_scenario();
    T0Map t0(sc.t0);
    T1Map t1(sc.t1);
    Regime r = select_regime(sc.in, t0, t1);
    Chart ch = build_chart(r);

    const double chi = sc.in.chi, kappa = sc.in.kappa, tau = sc.t0.tau, eps = sc.t1.eps;
    // Image of the square stays inside the stated phi and J boxes.
    for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
            AnnulusPoint z = ch.from_chart({static_cast<double>(i), static_cast<double>(j)});
            double phi = wrap_signed(z.phi);
            CHECK(std::fabs(phi) <= 2.0 * kappa * tau / chi);
            CHECK(std::fabs(z.J) <= 2.0 * eps * kappa * tau / (chi * chi));
        }
    }

    // C . C_inv = I relative to the accumulated term scale (the chart is
    // ill-conditioned by construction; the factored formulas keep the
    // relative error at machine precision).
    Mat2 P = ch.C.mul(ch.C_inv);
    double scale =
        std::max({std::fabs(ch.C.a * ch.C_inv.b), std::fabs(ch.C.b * ch.C_inv.d), 1.0});
    CHECK(std::fabs(P.a - 1.0) <= 1e-12 * scale);
    CHECK(std::fabs(P.b) <= 1e-12 * scale);
    CHECK(std::fabs(P.c) <= 1e-12 * scale);
    CHECK(std::fabs(P.d - 1.0) <= 1e-12 * scale);

    // Round trip through the chart.
    Vec2 zeta{0.3, -0.7};
    Vec2 back = ch.to_chart(ch.from_chart(zeta));
    CHECK(back.x == doctest::Approx(zeta.x).epsilon(1e-9));
    CHECK(back.y == doctest::Approx(zeta.y).epsilon(1e-9));

    // Eigenvector second components match +-sqrt(eps/(N tau)) to O(chi).
    double scale_vw = std::sqrt(eps / (static_cast<double>(r.N) * tau));
    CHECK(std::fabs(std::fabs(ch.v) / scale_vw - 1.0) <= 3.0 * chi);
    CHECK(std::fabs(std::fabs(ch.w) / scale_vw - 1.0) <= 3.0 * chi);

    // Absolute identity check at a mildly scaled chart.
    EigenSymplectic em = eigen_symplectic(Mat2{1.04, 20.0, 2e-3, 1.0});
    Chart chm = chart_from_eigen(0.02, 1.0, 0.2, em, false);
    Mat2 Pm = chm.C.mul(chm.C_inv);
    CHECK(std::fabs(Pm.a - 1.0) <= 1e-12);
    CHECK(std::fabs(Pm.b) <= 1e-12);
    CHECK(std::fabs(Pm.c) <= 1e-12);
    CHECK(std::fabs(Pm.d - 1.0) <= 1e-12);
}

TEST_CASE("scaled maps reduce to the diagonal normal form") {
    Scenario sc = blender_scenario();
    T0Map t0(sc.t0);
    T1Map t1(sc.t1);
    Regime r = select_regime(sc.in, t0, t1);
    const double chi = sc.in.chi;

    // At n = N the conjugated linearization is diagonal up to the floor of
    // the eigen solve; within the search window the off-diagonal stays
    // O(delta) with delta = (n - N)/N.
    ConjugatedAffine cN = conjugated_affine(r, r.N);
    double diag_scale = std::max(std::fabs(cN.A.a), std::fabs(cN.A.d));
    CHECK(std::fabs(cN.A.b) <= 1e-6 * diag_scale);
    CHECK(std::fabs(cN.A.c) <= 1e-6 * diag_scale);
    CHECK(cN.A.a == doctest::Approx(1.0 - chi).epsilon(0.05));
    CHECK(cN.A.d == doctest::Approx(1.0 + chi).epsilon(0.05));

    std::int64_t n_edge = r.cs.cal_n.back();
    ConjugatedAffine cE = conjugated_affine(r, n_edge);
    double delta = static_cast<double>(n_edge - r.N) / static_cast<double>(r.N);
    CHECK(std::fabs(cE.A.b) <= 4.0 * delta + 1e-6);

    // C0 normal-form residual over the square, a handful of admissible n.
    double worst = 0.0;
    std::vector<std::size_t> picks = {0, r.cs.search_idx.size() / 2, r.cs.search_idx.size() - 1};
    for (std::size_t pi : picks) {
        std::size_t i = r.cs.search_idx[pi];
        std::int64_t n = r.cs.cal_n[i];
        double b = r.cs.b[i];
        for (int gx = -5; gx <= 5; ++gx) {
            for (int gy = -5; gy <= 5; ++gy) {
                Vec2 zeta{gx / 5.0, gy / 5.0};
                Vec2 im = scaled_forward(t0, t1, r.chart, n, zeta);
                double ex = b + (1.0 - chi) * zeta.x;
                double ey = (1.0 + chi) * zeta.y;
                worst = std::max(worst, std::max(std::fabs(im.x - ex), std::fabs(im.y - ey)));
            }
        }
    }
    double K = worst / (chi * chi);
    INFO("fitted normal-form constant K = ", K);
    CHECK(K <= 25.0);

    // Forward-then-backward round trip.
    Vec2 zeta{0.4, 0.2};
    Vec2 fwd = scaled_forward(t0, t1, r.chart, r.cs.N_l, zeta);
    Vec2 back = scaled_backward(t0, t1, r.chart, r.cs.N_l, fwd);
    CHECK(back.x == doctest::Approx(zeta.x).epsilon(1e-7));
    CHECK(back.y == doctest::Approx(zeta.y).epsilon(1e-7));

    // The reversed family obeys the same normal form with its own
    // translation values.
    Vec2 imcu = scaled_forward(t0, t1, r.chart_cu, r.cu.N_l, zeta);
    CHECK(std::fabs(imcu.x - (r.cu.b_l + (1.0 - chi) * zeta.x)) <= 25.0 * chi * chi);
    CHECK(std::fabs(imcu.y - (1.0 + chi) * zeta.y) <= 25.0 * chi * chi);
    CHECK(-r.cu.b_l > chi / 4.0);
    CHECK(-r.cu.b_l < 3.0 * chi / 4.0);
}

TEST_CASE("normal-form residual scales as chi^2") {
    double logs_chi[3], logs_res[3];
    int k = 0;
    for (double chi : {0.0125, 0.025, 0.05}) {
        Scenario sc = scaling_scenario(chi);
        T0Map t0(sc.t0);
        T1Map t1(sc.t1);
        Regime r = select_regime(sc.in, t0, t1);
        double worst = 0.0;
        std::vector<std::size_t> picks = {0, r.cs.search_idx.size() / 2,
                                          r.cs.search_idx.size() - 1};
        for (std::size_t pi : picks) {
            std::size_t i = r.cs.search_idx[pi];
            std::int64_t n = r.cs.cal_n[i];
            double b = r.cs.b[i];
            for (int gx = -3; gx <= 3; ++gx) {
                for (int gy = -3; gy <= 3; ++gy) {
                    Vec2 zeta{gx / 3.0, gy / 3.0};
                    Vec2 im = scaled_forward(t0, t1, r.chart, n, zeta);
                    double ex = b + (1.0 - chi) * zeta.x;
                    double ey = (1.0 + chi) * zeta.y;
                    worst =
                        std::max(worst, std::max(std::fabs(im.x - ex), std::fabs(im.y - ey)));
                }
            }
        }
        logs_chi[k] = std::log(chi);
        logs_res[k] = std::log(worst);
        ++k;
    }
    double mx = (logs_chi[0] + logs_chi[1] + logs_chi[2]) / 3.0;
    double my = (logs_res[0] + logs_res[1] + logs_res[2]) / 3.0;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i) {
        num += (logs_chi[i] - mx) * (logs_res[i] - my);
        den += (logs_chi[i] - mx) * (logs_chi[i] - mx);
    }
    double slope = num / den;
    INFO("normal-form residual scaling exponent = ", slope);
    CHECK(slope > 1.7);
    CHECK(slope < 2.3);
}
