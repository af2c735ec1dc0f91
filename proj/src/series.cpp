#include "torsion/series.hpp"

#include <algorithm>
#include <cmath>

#include "torsion/twist_maps.hpp"

namespace torsion {

using cx = std::complex<double>;

FourierTaylor::FourierTaylor(int jmax, int lmax)
    : jmax_(jmax), lmax_(lmax),
      c_(static_cast<std::size_t>(jmax + 1) * (2 * lmax + 1), cx{0.0, 0.0}) {}

cx& FourierTaylor::at(int j, int l) { return c_[idx(j, l)]; }
cx FourierTaylor::at(int j, int l) const { return c_[idx(j, l)]; }

FourierTaylor FourierTaylor::cosine(int jmax, int lmax, int j, int l, double amplitude) {
    FourierTaylor f(jmax, lmax);
    if (l == 0) {
        f.at(j, 0) = amplitude;
    } else {
        f.at(j, l) += amplitude / 2.0;
        f.at(j, -l) += amplitude / 2.0;
    }
    return f;
}

FourierTaylor FourierTaylor::sine(int jmax, int lmax, int j, int l, double amplitude) {
    FourierTaylor f(jmax, lmax);
    if (l != 0) {
        f.at(j, l) += cx{0.0, -amplitude / 2.0};
        f.at(j, -l) += cx{0.0, amplitude / 2.0};
    }
    return f;
}

FourierTaylor FourierTaylor::constant(int jmax, int lmax, double value) {
    FourierTaylor f(jmax, lmax);
    f.at(0, 0) = value;
    return f;
}

FourierTaylor& FourierTaylor::operator+=(const FourierTaylor& o) {
    for (int j = 0; j <= std::min(jmax_, o.jmax_); ++j)
        for (int l = -std::min(lmax_, o.lmax_); l <= std::min(lmax_, o.lmax_); ++l)
            at(j, l) += o.at(j, l);
    return *this;
}

FourierTaylor& FourierTaylor::operator-=(const FourierTaylor& o) {
    for (int j = 0; j <= std::min(jmax_, o.jmax_); ++j)
        for (int l = -std::min(lmax_, o.lmax_); l <= std::min(lmax_, o.lmax_); ++l)
            at(j, l) -= o.at(j, l);
    return *this;
}

FourierTaylor& FourierTaylor::operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
}

FourierTaylor FourierTaylor::mul(const FourierTaylor& o) const {
    FourierTaylor out(jmax_, lmax_);
    for (int j1 = 0; j1 <= jmax_; ++j1) {
        for (int j2 = 0; j1 + j2 <= jmax_ && j2 <= o.jmax_; ++j2) {
            for (int l1 = -lmax_; l1 <= lmax_; ++l1) {
                cx a = at(j1, l1);
                if (a == cx{0.0, 0.0}) continue;
                int lo = std::max(-o.lmax_, -lmax_ - l1);
                int hi = std::min(o.lmax_, lmax_ - l1);
                for (int l2 = lo; l2 <= hi; ++l2) {
                    cx b = o.at(j2, l2);
                    if (b == cx{0.0, 0.0}) continue;
                    out.at(j1 + j2, l1 + l2) += a * b;
                }
            }
        }
    }
    return out;
}

FourierTaylor FourierTaylor::dphi() const {
    FourierTaylor out(jmax_, lmax_);
    for (int j = 0; j <= jmax_; ++j)
        for (int l = -lmax_; l <= lmax_; ++l)
            out.at(j, l) = at(j, l) * cx{0.0, static_cast<double>(l)};
    return out;
}

FourierTaylor FourierTaylor::dJ() const {
    FourierTaylor out(jmax_, lmax_);
    for (int j = 1; j <= jmax_; ++j)
        for (int l = -lmax_; l <= lmax_; ++l)
            out.at(j - 1, l) += static_cast<double>(j) * at(j, l);
    return out;
}

cx FourierTaylor::eval_complex(double phi, double J) const {
    cx total{0.0, 0.0};
    for (int j = jmax_; j >= 0; --j) {
        cx row{0.0, 0.0};
        for (int l = -lmax_; l <= lmax_; ++l) {
            cx coeff = at(j, l);
            if (coeff == cx{0.0, 0.0}) continue;
            row += coeff * std::polar(1.0, l * phi);
        }
        total = total * J + row;
    }
    return total;
}

double FourierTaylor::eval(double phi, double J) const { return eval_complex(phi, J).real(); }

double FourierTaylor::norm1() const {
    double s = 0.0;
    for (const auto& v : c_) s += std::abs(v);
    return s;
}

double FourierTaylor::norm1_at_order(int j) const {
    double s = 0.0;
    for (int l = -lmax_; l <= lmax_; ++l) s += std::abs(at(j, l));
    return s;
}

int FourierTaylor::lowest_angle_order(double tol) const {
    for (int j = 0; j <= jmax_; ++j) {
        double s = 0.0;
        for (int l = -lmax_; l <= lmax_; ++l)
            if (l != 0) s += std::abs(at(j, l));
        if (s > tol) return j;
    }
    return -1;
}

std::vector<cx> FourierTaylor::angle_part(int j) const {
    std::vector<cx> out(2 * lmax_ + 1, cx{0.0, 0.0});
    for (int l = -lmax_; l <= lmax_; ++l)
        if (l != 0) out[static_cast<std::size_t>(l + lmax_)] = at(j, l);
    return out;
}

void FourierTaylor::chop(double tol) {
    for (auto& v : c_)
        if (std::abs(v) <= tol) v = cx{0.0, 0.0};
}

FourierTaylor compose(const FourierTaylor& f, const FourierTaylor& a, const FourierTaylor& b) {
    const int jmax = f.jmax(), lmax = f.lmax();
    // Split the angle shift into its exact constant phase and the rest.
    const cx a0 = a.at(0, 0);
    FourierTaylor atil = a;
    atil.at(0, 0) = cx{0.0, 0.0};

    // Powers of (J + b): (J+b)^j computed incrementally.
    FourierTaylor Jb(jmax, lmax);
    if (jmax >= 1) Jb.at(1, 0) = 1.0;
    Jb += b;

    // For each Fourier mode l we need e^{il(phi + a)} = e^{il phi} e^{il a0}
    // * exp(il atil); the exponential series terminates in practice because
    // atil is small (action-graded or O(eps)).
    // Work mode by mode, assembling sum_j c_{j,l} (J+b)^j first.
    FourierTaylor out(jmax, lmax);
    std::vector<FourierTaylor> jb_pow;
    jb_pow.reserve(static_cast<std::size_t>(jmax) + 1);
    jb_pow.push_back(FourierTaylor::constant(jmax, lmax, 1.0));
    for (int j = 1; j <= jmax; ++j) jb_pow.push_back(jb_pow.back().mul(Jb));

    for (int l = -lmax; l <= lmax; ++l) {
        // g_l(phi, J) = sum_j c_{j,l} (J+b)^j
        FourierTaylor gl(jmax, lmax);
        bool any = false;
        for (int j = 0; j <= jmax; ++j) {
            cx coeff = f.at(j, l);
            if (coeff == cx{0.0, 0.0}) continue;
            any = true;
            for (int jj = 0; jj <= jmax; ++jj)
                for (int ll = -lmax; ll <= lmax; ++ll) gl.at(jj, ll) += coeff * jb_pow[j].at(jj, ll);
        }
        if (!any) continue;
        // Multiply by e^{il phi} e^{il a0} exp(il atil).
        cx phase = std::exp(cx{0.0, static_cast<double>(l)} * a0);
        FourierTaylor expser = FourierTaylor::constant(jmax, lmax, 1.0);
        if (l != 0) {
            FourierTaylor il_a = atil;
            // il_a = i*l*atil
            FourierTaylor term = FourierTaylor::constant(jmax, lmax, 1.0);
            FourierTaylor acc = FourierTaylor::constant(jmax, lmax, 1.0);
            FourierTaylor scaled(jmax, lmax);
            for (int jj = 0; jj <= jmax; ++jj)
                for (int ll = -lmax; ll <= lmax; ++ll)
                    scaled.at(jj, ll) = il_a.at(jj, ll) * cx{0.0, static_cast<double>(l)};
            double fact = 1.0;
            for (int kpow = 1; kpow <= 60; ++kpow) {
                term = term.mul(scaled);
                fact *= kpow;
                FourierTaylor contrib = term;
                contrib *= 1.0 / fact;
                acc += contrib;
                if (term.norm1() / fact < 1e-18) break;
            }
            expser = acc;
        }
        FourierTaylor mode(jmax, lmax);
        for (int jj = 0; jj <= jmax; ++jj)
            for (int ll = -lmax; ll <= lmax; ++ll) mode.at(jj, ll) = gl.at(jj, ll) * phase;
        mode = mode.mul(expser);
        // Shift Fourier index by l (multiply by e^{il phi}).
        for (int jj = 0; jj <= jmax; ++jj)
            for (int ll = -lmax; ll <= lmax; ++ll) {
                if (mode.at(jj, ll) == cx{0.0, 0.0}) continue;
                int lt = ll + l;
                if (lt < -lmax || lt > lmax) continue;  // truncation
                out.at(jj, lt) += mode.at(jj, ll);
            }
    }
    return out;
}

SeriesMap compose_maps(const SeriesMap& outer, const SeriesMap& inner) {
    SeriesMap out;
    out.dphi = inner.dphi + compose(outer.dphi, inner.dphi, inner.dJ);
    out.dJ = inner.dJ + compose(outer.dJ, inner.dphi, inner.dJ);
    return out;
}

SeriesMap t0_series(const T0Spec& spec, int jmax, int lmax) {
    const double beta_ang = kTwoPi * spec.beta.value();
    // X solves X = J + mu3 X^3 sin(phi) as a series.
    FourierTaylor J(jmax, lmax);
    if (jmax >= 1) J.at(1, 0) = 1.0;
    FourierTaylor X = J;
    FourierTaylor sin1 = FourierTaylor::sine(jmax, lmax, 0, 1, 1.0);
    FourierTaylor cos1 = FourierTaylor::cosine(jmax, lmax, 0, 1, 1.0);
    for (int it = 0; it < jmax; ++it) {
        FourierTaylor x3 = X.mul(X).mul(X);
        FourierTaylor next = J;
        FourierTaylor corr = x3.mul(sin1);
        corr *= spec.mu3;
        next += corr;
        X = next;
    }
    SeriesMap m;
    FourierTaylor x2 = X.mul(X);
    FourierTaylor phi_part = x2.mul(cos1);
    phi_part *= 3.0 * spec.mu3;
    FourierTaylor tauX = X;
    tauX *= spec.tau;
    m.dphi = FourierTaylor::constant(jmax, lmax, beta_ang) + tauX + phi_part;
    m.dJ = X - J;
    return m;
}

SeriesMap t1_series(const T1Spec& spec, int jmax, int lmax) {
    FourierTaylor J(jmax, lmax);
    if (jmax >= 1) J.at(1, 0) = 1.0;
    FourierTaylor kick = FourierTaylor::sine(jmax, lmax, 0, 1, spec.eps);
    FourierTaylor X1 = J + kick;
    SeriesMap m;
    m.dJ = kick;
    // btilde(X1) as a polynomial in the series X1.
    FourierTaylor acc = FourierTaylor::constant(jmax, lmax, 0.0);
    for (std::size_t k = spec.btilde.size(); k-- > 0;) {
        acc = acc.mul(X1);
        acc += FourierTaylor::constant(jmax, lmax, spec.btilde[k]);
    }
    m.dphi = acc;
    return m;
}

namespace {

// Phi generated by phi I + s(phi) I^{nu+1}:
//   theta = phi + (nu+1) s(phi) I^nu,   J = I + s'(phi) I^{nu+1}.
// As a series map (theta, I) -> (phi, J) = (theta + a, I + b).
SeriesMap transform_from_s(const FourierTaylor& s, int nu, int jmax, int lmax) {
    FourierTaylor I(jmax, lmax);
    if (jmax >= 1) I.at(1, 0) = 1.0;
    FourierTaylor Inu = FourierTaylor::constant(jmax, lmax, 1.0);
    for (int k = 0; k < nu; ++k) Inu = Inu.mul(I);

    // a solves a = -(nu+1) s(theta + a) I^nu; the grading converges fast.
    FourierTaylor zero(jmax, lmax);
    FourierTaylor a = zero;
    for (int it = 0; it <= jmax / std::max(1, nu) + 1; ++it) {
        FourierTaylor s_at = compose(s, a, zero);
        a = s_at.mul(Inu);
        a *= -(static_cast<double>(nu) + 1.0);
    }
    FourierTaylor sp = s.dphi();
    FourierTaylor sp_at = compose(sp, a, zero);
    FourierTaylor b = sp_at.mul(Inu).mul(I);
    return SeriesMap{a, b};
}

SeriesMap invert_transform(const SeriesMap& fwd, int jmax, int lmax) {
    // Given (theta,I) -> (theta + a, I + b), find the inverse displacements:
    // ainv(phi,J) with theta = phi + ainv, I = J + binv, by fixed point.
    FourierTaylor ainv(jmax, lmax), binv(jmax, lmax);
    for (int it = 0; it <= jmax + 1; ++it) {
        FourierTaylor na = compose(fwd.dphi, ainv, binv);
        na *= -1.0;
        FourierTaylor nb = compose(fwd.dJ, ainv, binv);
        nb *= -1.0;
        ainv = na;
        binv = nb;
    }
    return SeriesMap{ainv, binv};
}

}  // namespace

BnfResult bnf_reduce(const SeriesMap& map, int k, double beta_rot, double alpha_hat,
                     const BnfOptions& opt) {
    const int jmax = map.dphi.jmax();
    const int lmax = map.dphi.lmax();
    const double beta_ang = kTwoPi * beta_rot;

    BnfResult res;
    res.reduced = map;
    res.transform = SeriesMap{FourierTaylor(jmax, lmax), FourierTaylor(jmax, lmax)};
    res.transform_inverse = SeriesMap{FourierTaylor(jmax, lmax), FourierTaylor(jmax, lmax)};
    bool have_transform = false;

    for (int step = 0; step < k; ++step) {
        int nu = res.reduced.dphi.lowest_angle_order(opt.dirty_tol);
        if (nu < 2) {
            // Orders 0 and 1 are angle-free for any admissible input; if we
            // see -1 there is nothing left to kill.
            if (nu == -1) break;
            throw Error("bnf_reduce: angle dependence below J^2 in the input");
        }
        auto q = res.reduced.dphi.angle_part(nu);
        // Solve (nu+1)(s(phi+beta) - s(phi)) = -q(phi) mode by mode.
        FourierTaylor s(jmax, lmax);
        double qnorm = 0.0, snorm = 0.0;
        for (int l = -lmax; l <= lmax; ++l) {
            if (l == 0) continue;
            cx ql = q[static_cast<std::size_t>(l + lmax)];
            if (ql == cx{0.0, 0.0}) continue;
            cx divisor = std::polar(1.0, l * beta_ang) - 1.0;
            if (std::abs(divisor) < opt.divisor_floor)
                throw SmallDivisorBlowup(l, "bnf_reduce: divisor below floor at mode " +
                                                std::to_string(l));
            cx sl = -ql / ((static_cast<double>(nu) + 1.0) * divisor);
            s.at(0, l) = sl;
            qnorm += std::abs(ql);
            snorm += std::abs(sl);
        }
        SeriesMap fwd = transform_from_s(s, nu, jmax, lmax);
        SeriesMap inv = invert_transform(fwd, jmax, lmax);
        // reduced <- inv . reduced . fwd
        res.reduced = compose_maps(inv, compose_maps(res.reduced, fwd));
        res.reduced.dphi.chop(1e-18);
        res.reduced.dJ.chop(1e-18);
        if (!have_transform) {
            res.transform = fwd;
            res.transform_inverse = inv;
            have_transform = true;
        } else {
            // Accumulate: total = total_prev . fwd (fwd applied first when
            // passing from reduced to original coordinates).
            res.transform = compose_maps(res.transform, fwd);
            res.transform_inverse = compose_maps(inv, res.transform_inverse);
        }
        double bound = static_cast<double>(lmax) /
                       (4.0 * alpha_hat * (static_cast<double>(nu) + 1.0));
        res.steps.push_back({nu, qnorm > 0 ? snorm / qnorm : 0.0, bound});
    }
    return res;
}

std::vector<CriticalPoint> critical_curve(const FourierTaylor& kick, std::span<const double> J_grid,
                                          const CriticalCurveOptions& opt) {
    std::vector<CriticalPoint> out;
    out.reserve(J_grid.size());
    FourierTaylor dk = kick.dphi();
    // Scale used to decide whether a slope counts as transverse.
    double scale = 0.0;
    for (double J : J_grid) scale = std::max(scale, std::fabs(dk.eval(0.0, J)));
    if (scale == 0.0) scale = kick.norm1() + 1e-300;

    for (double J : J_grid) {
        double phi = 0.0;
        bool ok = false;
        for (int it = 0; it < opt.max_iter; ++it) {
            double f = kick.eval(phi, J);
            double fp = dk.eval(phi, J);
            if (std::fabs(fp) < opt.min_slope * scale)
                throw NoTransverseZero("critical_curve: slope below threshold at J=" +
                                       std::to_string(J));
            double step = f / fp;
            phi -= step;
            if (std::fabs(step) <= opt.newton_tol * (1.0 + std::fabs(phi))) {
                ok = true;
                break;
            }
        }
        if (!ok) throw NoTransverseZero("critical_curve: Newton stalled at J=" + std::to_string(J));
        out.push_back({J, phi, dk.eval(phi, J)});
    }
    return out;
}

}  // namespace torsion
