#include "torsion/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace torsion {

namespace {

constexpr long double kTwoPiL = 2.0L * 3.14159265358979323846264338327950288L;

Chart make_chart(double kappa, double tau, double chi, const EigenSymplectic& e, bool reflected) {
    Chart ch;
    const double kt = kappa * tau;
    ch.C = Mat2{kt, kt / chi, e.v * kt, e.w * kt / chi};
    const double wv = e.w - e.v;
    ch.C_inv = Mat2{e.w / (wv * kt), -1.0 / (wv * kt), -e.v * chi / (wv * kt), chi / (wv * kt)};
    ch.reflect = reflected;
    ch.lambda = e.lambda;
    ch.v = e.v;
    ch.w = e.w;
    return ch;
}

}  // namespace

double Regime::b_of_n(std::int64_t n) const {
    long double shift = static_cast<long double>(in.params.b0) +
                        static_cast<long double>(n) * kTwoPiL *
                            static_cast<long double>(in.params.beta.value());
    double s = static_cast<double>(wrap_signed_l(shift));
    return chart.C_inv.a * s;
}

Regime select_regime(const RegimeInputs& in, const AnnulusMap& t0, const AnnulusMap& t1) {
    const double chi = in.chi, kappa = in.kappa, tau = in.params.tau, eps = in.params.eps;
    if (!(chi > 0.0 && chi <= 0.2))
        throw RegimeInfeasible("select_regime: need 0 < chi <= 0.2, got chi=" +
                               std::to_string(chi));
    if (!(kappa > 0.0 && kappa <= (chi / 10.0) * (1.0 + 1e-12)))
        throw RegimeInfeasible("select_regime: need 0 < kappa <= chi/10, got kappa=" +
                               std::to_string(kappa));
    if (!(tau > 0.0)) throw RegimeInfeasible("select_regime: need tau > 0");
    if (!(eps > 0.0)) throw RegimeInfeasible("select_regime: need eps > 0");

    Regime r;
    r.in = in;
    r.alpha_hat = diophantine_constant(in.params.beta, in.alpha_qmax);
    const double eps_limit = in.eps0 * std::min(tau, r.alpha_hat);
    if (!(eps <= eps_limit))
        throw RegimeInfeasible("select_regime: eps <= eps0*min(tau, alpha_hat) violated: eps=" +
                               std::to_string(eps) + " limit=" + std::to_string(eps_limit));

    double Nd = std::floor(chi * chi / (eps * tau));
    if (!(Nd >= 1.0) || Nd > 4.5e18)
        throw RegimeInfeasible("select_regime: N = [chi^2/(eps tau)] out of range");
    r.N = static_cast<std::int64_t>(Nd);
    double Nsd = std::floor(in.nstar_factor / (r.alpha_hat * chi * tau * kappa));
    r.N_star = Nsd > 4.5e18 ? std::numeric_limits<std::int64_t>::max() / 2
                            : static_cast<std::int64_t>(Nsd);
    r.scan_len = std::min<std::int64_t>(r.N_star, static_cast<std::int64_t>(in.scan_cap));

    AffineModel mN = affine_model(in.params, r.N);
    EigenSymplectic e = eigen_symplectic(mN.A);
    r.chart = make_chart(kappa, tau, chi, e, false);
    r.chart_cu = make_chart(kappa, tau, chi, e, true);
    // The reversibility involution for a kick map with constant angle shift
    // b0 is the reflection about b0/2, so the reversed family anchors at
    // (b0, 0); the fixed-point refinement below absorbs the residual
    // window-centering offset.
    r.chart_cu.origin = {wrap_angle(in.params.b0), 0.0};

    // The reversed family's admissibility window is centered where its
    // translation vanishes; locate that anchor with one probe at n = N.
    const double bt0 = in.params.b0;
    const long double beta_ang = kTwoPiL * static_cast<long double>(in.params.beta.value());
    auto shift_of = [&](std::int64_t n) {
        return static_cast<double>(
            wrap_signed_l(static_cast<long double>(bt0) + static_cast<long double>(n) * beta_ang));
    };
    const double cu_probe = scaled_forward(t0, t1, r.chart_cu, r.N, {0.0, 0.0}).x;
    const double cu_center = wrap_signed(shift_of(r.N) - cu_probe / r.chart.C_inv.a);

    // Locate the reversed-family member with the smallest translation and
    // center the reflected chart on its fixed point.
    {
        std::int64_t n0 = -1;
        double best = 1e300;
        long double ph = wrap_signed_l(static_cast<long double>(bt0) +
                                       static_cast<long double>(r.N) * beta_ang);
        const double halfw = r.window_halfwidth();
        for (std::int64_t n = r.N; n <= r.N + r.scan_len; ++n) {
            double s = static_cast<double>(ph);
            double rel = wrap_signed(s - cu_center);
            if (std::fabs(rel) <= halfw && std::fabs(rel) < best) {
                best = std::fabs(rel);
                n0 = n;
            }
            ph = wrap_signed_l(ph + beta_ang);
            if (best < halfw / 64.0) break;  // close enough to the anchor
        }
        if (n0 < 0)
            throw RegimeInfeasible("select_regime: reversed-family window empty");
        // Newton for the fixed point of the reversed map in the uncentered
        // reflected chart.
        Vec2 z{0.0, 0.0};
        const double h = 1e-6;
        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            Vec2 im = scaled_forward(t0, t1, r.chart_cu, n0, z);
            Vec2 g{im.x - z.x, im.y - z.y};
            if (std::fabs(g.x) + std::fabs(g.y) <= 1e-11) {
                converged = true;
                break;
            }
            Vec2 xp = scaled_forward(t0, t1, r.chart_cu, n0, {z.x + h, z.y});
            Vec2 xm = scaled_forward(t0, t1, r.chart_cu, n0, {z.x - h, z.y});
            Vec2 yp = scaled_forward(t0, t1, r.chart_cu, n0, {z.x, z.y + h});
            Vec2 ym = scaled_forward(t0, t1, r.chart_cu, n0, {z.x, z.y - h});
            Mat2 M{(xp.x - xm.x) / (2 * h) - 1.0, (yp.x - ym.x) / (2 * h),
                   (xp.y - xm.y) / (2 * h), (yp.y - ym.y) / (2 * h) - 1.0};
            double det = M.det();
            if (std::fabs(det) < 1e-300) break;
            z.x -= (M.d * g.x - M.b * g.y) / det;
            z.y -= (-M.c * g.x + M.a * g.y) / det;
            if (std::fabs(z.x) > 4.0 || std::fabs(z.y) > 4.0) break;
        }
        if (!converged)
            throw RegimeInfeasible("select_regime: reversed-family anchor fixed point "
                                   "did not converge");
        r.chart_cu.origin = r.chart_cu.from_chart(z);
    }

    // Scan both windows in one pass, in extended precision.
    const double halfwidth = r.window_halfwidth();
    long double phase = wrap_signed_l(static_cast<long double>(bt0) +
                                      static_cast<long double>(r.N) * beta_ang);
    for (std::int64_t n = r.N; n <= r.N + r.scan_len; ++n) {
        double s = static_cast<double>(phase);
        if (std::fabs(s) <= halfwidth) {
            r.cs.cal_n.push_back(n);
            r.cs.b.push_back(r.chart.C_inv.a * s);
        }
        if (std::fabs(wrap_signed(s - cu_center)) <= halfwidth) {
            r.cu.cal_n.push_back(n);
            r.cu.b.push_back(scaled_forward(t0, t1, r.chart_cu, n, {0.0, 0.0}).x);
        }
        phase = wrap_signed_l(phase + beta_ang);
    }
    if (r.cs.cal_n.empty() || r.cu.cal_n.empty())
        throw RegimeInfeasible("select_regime: admissibility window empty over the scanned range");

    const std::int64_t n_hi =
        r.N + static_cast<std::int64_t>(in.delta_search * static_cast<double>(r.N));
    auto finish_family = [&](FamilyData& f, const char* side) {
        // Distinguished iterates with translations in +-(chi/4, 3chi/4),
        // within the tight search window so the family stays uniform.
        const double lo = chi / 4.0, hi = 3.0 * chi / 4.0;
        double best_l = 1e300, best_r = 1e300;
        std::size_t il = f.cal_n.size(), ir = f.cal_n.size();
        for (std::size_t i = 0; i < f.cal_n.size(); ++i) {
            if (f.cal_n[i] > n_hi) break;
            double b = f.b[i];
            if (-b > lo && -b < hi && std::fabs(b + chi / 2.0) < best_l) {
                best_l = std::fabs(b + chi / 2.0);
                il = i;
            }
            if (b > lo && b < hi && std::fabs(b - chi / 2.0) < best_r) {
                best_r = std::fabs(b - chi / 2.0);
                ir = i;
            }
        }
        if (il == f.cal_n.size() || ir == f.cal_n.size())
            throw RegimeInfeasible(std::string("select_regime: no admissible ") + side +
                                   " iterate with translation in +-(chi/4, 3chi/4) within the "
                                   "search window");
        f.N_l = f.cal_n[il];
        f.N_r = f.cal_n[ir];
        f.b_l = f.b[il];
        f.b_r = f.b[ir];

        // Density of the translation grid over [-10 chi, 10 chi].
        std::vector<double> bs;
        for (double b : f.b)
            if (std::fabs(b) <= 10.0 * chi) bs.push_back(b);
        std::sort(bs.begin(), bs.end());
        double gap;
        if (bs.empty()) {
            gap = 20.0 * chi;
        } else {
            gap = std::max(bs.front() + 10.0 * chi, 10.0 * chi - bs.back());
            for (std::size_t i = 1; i < bs.size(); ++i) gap = std::max(gap, bs[i] - bs[i - 1]);
        }
        f.density_max_gap = gap;

        // Thinned working subset, sorted by translation.
        std::vector<std::size_t> cand;
        for (std::size_t i = 0; i < f.cal_n.size(); ++i)
            if (f.cal_n[i] <= n_hi) cand.push_back(i);
        std::sort(cand.begin(), cand.end(),
                  [&](std::size_t a, std::size_t b) { return f.b[a] < f.b[b]; });
        const double target = in.search_gap > 0.0 ? in.search_gap : chi / 5.0;
        double last = -1e300;
        for (std::size_t i : cand) {
            if (f.b[i] - last >= 0.5 * target || i == il || i == ir) {
                f.search_idx.push_back(i);
                last = f.b[i];
            }
        }
    };
    finish_family(r.cs, "forward-family");
    finish_family(r.cu, "reversed-family");

    if (in.require_density && r.cs.density_max_gap > chi / 10.0)
        throw RegimeInfeasible("select_regime: translation grid too sparse, max gap " +
                               std::to_string(r.cs.density_max_gap) + " > chi/10 = " +
                               std::to_string(chi / 10.0));
    return r;
}

Chart chart_from_eigen(double kappa, double tau, double chi, const EigenSymplectic& e,
                       bool reflected) {
    return make_chart(kappa, tau, chi, e, reflected);
}

Chart build_chart(const Regime& regime, bool reflected) {
    AffineModel mN = affine_model(regime.in.params, regime.N);
    EigenSymplectic e = eigen_symplectic(mN.A);
    return make_chart(regime.in.kappa, regime.in.params.tau, regime.in.chi, e, reflected);
}

ConjugatedAffine conjugated_affine(const Regime& regime, std::int64_t n) {
    AffineModel m = affine_model(regime.in.params, n);
    Mat2 A = regime.chart.C_inv.mul(m.A).mul(regime.chart.C);
    Vec2 b = regime.chart.C_inv.apply(m.b);
    return {A, b};
}

Vec2 scaled_forward(const AnnulusMap& t0, const AnnulusMap& t1, const Chart& chart,
                    std::int64_t n, Vec2 zeta) {
    AnnulusPoint z = chart.from_chart(zeta);
    if (!chart.reflect) {
        z = t1.apply(z);
        z = t0.iterate(z, n);
    } else {
        z = t1.apply_inverse(z);
        z = t0.iterate(z, -n);
    }
    return chart.to_chart(z);
}

Vec2 scaled_backward(const AnnulusMap& t0, const AnnulusMap& t1, const Chart& chart,
                     std::int64_t n, Vec2 zeta) {
    AnnulusPoint z = chart.from_chart(zeta);
    if (!chart.reflect) {
        z = t0.iterate(z, -n);
        z = t1.apply_inverse(z);
    } else {
        z = t0.iterate(z, n);
        z = t1.apply(z);
    }
    return chart.to_chart(z);
}

}  // namespace torsion
