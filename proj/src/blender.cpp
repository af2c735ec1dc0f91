#include "torsion/blender.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace torsion {

// ----- SampledGraph -----

SampledGraph::SampledGraph(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() < 2 || x_.size() != y_.size())
        throw Error("SampledGraph: need at least two samples");
    const std::size_t n = x_.size();
    d_.resize(n);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        if (!(h[i] > 0.0)) throw Error("SampledGraph: abscissae must increase");
        delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    // Fritsch-Carlson monotone slopes.
    d_[0] = delta[0];
    d_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d_[i] = 0.0;
        } else {
            double w1 = 2.0 * h[i] + h[i - 1];
            double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
}

double SampledGraph::eval(double x) const {
    const std::size_t n = x_.size();
    if (x <= x_.front()) return y_.front() + d_.front() * (x - x_.front());
    if (x >= x_.back()) return y_.back() + d_.back() * (x - x_.back());
    std::size_t lo = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin() - 1;
    if (lo >= n - 1) lo = n - 2;
    double h = x_[lo + 1] - x_[lo];
    double t = (x - x_[lo]) / h;
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    double h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t);
    double h11 = t * t * (t - 1);
    return h00 * y_[lo] + h10 * h * d_[lo] + h01 * y_[lo + 1] + h11 * h * d_[lo + 1];
}

double SampledGraph::lipschitz() const {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
        m = std::max(m, std::fabs((y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i])));
    return m;
}

// ----- BlenderFamily -----

BlenderFamily::BlenderFamily(const AnnulusMap& t0, const AnnulusMap& t1, const Chart& chart,
                             const FamilyData& data, double chi, bool reversed)
    : t0_(t0), t1_(t1), chart_(chart), data_(data), chi_(chi), reversed_(reversed) {}

Vec2 BlenderFamily::apply(std::int64_t n, Vec2 zeta) const {
    return scaled_forward(t0_, t1_, chart_, n, zeta);
}

Vec2 BlenderFamily::apply_inverse(std::int64_t n, Vec2 zeta) const {
    return scaled_backward(t0_, t1_, chart_, n, zeta);
}

Word BlenderFamily::chunk(std::int64_t n) const {
    Word w;
    if (!reversed_) {
        w.append(1, 1);
        w.append(0, static_cast<std::uint64_t>(n));
    } else {
        w.append(0, static_cast<std::uint64_t>(n));
        w.append(1, 1);
    }
    return w;
}

std::size_t BlenderFamily::nearest_search_member(double b, std::size_t k) const {
    const auto& s = data_.search_idx;
    if (s.empty()) throw Error("BlenderFamily: empty search subset");
    auto cmp = [&](std::size_t i, double val) { return data_.b[i] < val; };
    auto it = std::lower_bound(s.begin(), s.end(), b, cmp);
    std::size_t hi = static_cast<std::size_t>(it - s.begin());
    std::size_t lo = hi;
    // Walk outward collecting the (k+1) nearest by |b - target|.
    std::size_t best = 0;
    for (std::size_t picked = 0;; ++picked) {
        bool has_lo = lo > 0;
        bool has_hi = hi < s.size();
        if (!has_lo && !has_hi) break;
        bool take_lo;
        if (!has_hi)
            take_lo = true;
        else if (!has_lo)
            take_lo = false;
        else
            take_lo = std::fabs(data_.b[s[lo - 1]] - b) <= std::fabs(data_.b[s[hi]] - b);
        best = take_lo ? s[--lo] : s[hi++];
        if (picked == k) return best;
    }
    return best;
}

// ----- covering -----

namespace {

bool pullback_in_square(const BlenderFamily& fam, std::int64_t n, Vec2 zeta, double mx,
                        double my) {
    Vec2 p = fam.apply_inverse(n, zeta);
    return std::fabs(p.x) <= 1.0 - mx && std::fabs(p.y) <= 1.0 - my;
}

}  // namespace

CoveringResult covering_check(const BlenderFamily& fam, const CoveringOptions& opt) {
    CoveringResult res;
    const double chi = fam.chi();
    const double mx = opt.margin / (1.0 - chi);
    const double my = opt.margin / (1.0 + chi);
    const int R = opt.grid_res;

    res.covered = true;
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < R; ++j) {
            Vec2 zeta{-1.0 + 2.0 * (i + 0.5) / R, -1.0 + 2.0 * (j + 0.5) / R};
            bool ok = false;
            for (int k = 0; k < opt.candidate_tries && !ok; ++k) {
                std::size_t idx = fam.nearest_search_member(zeta.x, static_cast<std::size_t>(k));
                ok = pullback_in_square(fam, fam.data().cal_n[idx], zeta, mx, my);
            }
            if (!ok) {
                res.covered = false;
                res.uncovered_cells.push_back({i, j});
            }
        }
    }

    // Horizontal-segment radius: smallest radius at which some segment fits
    // in the square but is contained in no single image.
    double a_min = 2.0;
    bool found_failing = false;
    for (int i = 0; i < opt.a_grid; ++i) {
        for (int j = 0; j < opt.a_grid; ++j) {
            Vec2 z{-1.0 + 2.0 * (i + 0.5) / opt.a_grid, -1.0 + 2.0 * (j + 0.5) / opt.a_grid};
            double fit = 1.0 - std::fabs(z.x);
            auto segment_covered = [&](double r) {
                for (int k = 0; k < 2 * opt.candidate_tries; ++k) {
                    std::size_t idx =
                        fam.nearest_search_member(z.x, static_cast<std::size_t>(k));
                    std::int64_t n = fam.data().cal_n[idx];
                    bool ok = true;
                    for (int m = -2; m <= 2 && ok; ++m)
                        ok = pullback_in_square(fam, n, {z.x + r * m / 2.0, z.y}, mx, my);
                    if (ok) return true;
                }
                return false;
            };
            if (!segment_covered(0.0)) {
                a_min = 0.0;
                found_failing = true;
                continue;
            }
            double lo = 0.0, hi = fit;
            if (segment_covered(fit)) continue;  // every fitting segment is covered
            while (hi - lo > opt.a_tol) {
                double mid = 0.5 * (lo + hi);
                (segment_covered(mid) ? lo : hi) = mid;
            }
            found_failing = true;
            a_min = std::min(a_min, hi);
        }
    }
    res.a_estimate = found_failing ? a_min : 1.0;
    return res;
}

// ----- fixed points -----

namespace {

Mat2 fd_jacobian_family(const BlenderFamily& fam, std::int64_t n, Vec2 z, double h) {
    Vec2 xp = fam.apply(n, {z.x + h, z.y});
    Vec2 xm = fam.apply(n, {z.x - h, z.y});
    Vec2 yp = fam.apply(n, {z.x, z.y + h});
    Vec2 ym = fam.apply(n, {z.x, z.y - h});
    return {(xp.x - xm.x) / (2 * h), (yp.x - ym.x) / (2 * h), (xp.y - xm.y) / (2 * h),
            (yp.y - ym.y) / (2 * h)};
}

}  // namespace

FixedPointResult find_fixed_point(const BlenderFamily& fam, std::int64_t n, double newton_tol,
                                  int max_iter) {
    // Seed at (b/chi, 0).
    const auto& d = fam.data();
    double b = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < d.cal_n.size(); ++i)
        if (d.cal_n[i] == n) {
            b = d.b[i];
            found = true;
            break;
        }
    if (!found) throw Error("find_fixed_point: n is not an admissible iterate");
    Vec2 z{std::clamp(b / fam.chi(), -0.9, 0.9), 0.0};

    const double h = 1e-6;
    Mat2 DF;
    for (int it = 0; it < max_iter; ++it) {
        Vec2 img = fam.apply(n, z);
        Vec2 g{img.x - z.x, img.y - z.y};
        if (std::fabs(g.x) + std::fabs(g.y) <= newton_tol) {
            DF = fd_jacobian_family(fam, n, z, h);
            double tr = DF.trace(), det = DF.det();
            double disc = tr * tr - 4.0 * det;
            if (disc <= 0.0)
                throw NotHyperbolic("find_fixed_point: complex multipliers at n=" +
                                    std::to_string(n));
            double s = std::sqrt(disc);
            double lam1 = (tr - s) / 2.0, lam2 = (tr + s) / 2.0;
            if (!(std::fabs(lam1) < 1.0 && std::fabs(lam2) > 1.0))
                throw NotHyperbolic("find_fixed_point: multipliers not split at n=" +
                                    std::to_string(n));
            return {n, z, DF, lam1, lam2};
        }
        DF = fd_jacobian_family(fam, n, z, h);
        Mat2 M{DF.a - 1.0, DF.b, DF.c, DF.d - 1.0};
        double det = M.det();
        if (std::fabs(det) < 1e-300)
            throw NewtonDivergence("find_fixed_point: singular update at n=" + std::to_string(n));
        Vec2 step{(M.d * g.x - M.b * g.y) / det, (-M.c * g.x + M.a * g.y) / det};
        z.x -= step.x;
        z.y -= step.y;
        if (std::fabs(z.x) > 2.0 || std::fabs(z.y) > 2.0)
            throw NewtonDivergence("find_fixed_point: iterate escaped the chart at n=" +
                                   std::to_string(n));
    }
    throw NewtonDivergence("find_fixed_point: no convergence at n=" + std::to_string(n));
}

// ----- graph transform -----

GraphTransformResult graph_transform_manifold(const BlenderFamily& fam, const FixedPointResult& fp,
                                              GraphCurve::Kind kind,
                                              const GraphTransformOptions& opt) {
    const bool unstable = (kind == GraphCurve::Kind::u_curve);
    const int m = opt.samples;
    std::vector<double> grid(m), cur(m, unstable ? fp.z.x : fp.z.y), next(m);
    for (int i = 0; i < m; ++i) grid[i] = -1.0 + 2.0 * i / (m - 1);

    const double lam = 1.0 - fam.chi();
    const double ratio_bound = 0.5 * (1.0 + lam) + opt.ratio_slack;
    GraphTransformResult out;

    double prev_diff = -1.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        SampledGraph g(grid, cur);
        double diff = 0.0;
        for (int i = 0; i < m; ++i) {
            double target = grid[i];
            // Solve for the source coordinate along the expanding direction.
            double anchor = unstable ? fp.z.y : fp.z.x;
            double s = unstable ? anchor + (target - anchor) / (1.0 + fam.chi())
                                : fp.z.x + (target - fp.z.x) * (1.0 - fam.chi());
            double val = 0.0;
            bool done = false;
            for (int k = 0; k < 60; ++k) {
                Vec2 im = unstable ? fam.apply(fp.n, {g.eval(s), s})
                                   : fam.apply_inverse(fp.n, {s, g.eval(s)});
                double F = (unstable ? im.y : im.x) - target;
                if (std::fabs(F) <= 1e-12) {
                    val = unstable ? im.x : im.y;
                    done = true;
                    break;
                }
                const double hs = 1e-7;
                Vec2 im2 = unstable ? fam.apply(fp.n, {g.eval(s + hs), s + hs})
                                    : fam.apply_inverse(fp.n, {s + hs, g.eval(s + hs)});
                double dF = ((unstable ? im2.y : im2.x) - (unstable ? im.y : im.x)) / hs;
                if (std::fabs(dF) < 1e-12)
                    throw ContractionFailure("graph transform: flat inner solve");
                double step = F / dF;
                s -= step;
                if (std::fabs(step) <= 1e-15 * (1.0 + std::fabs(s))) {
                    // Converged to the evaluation noise floor.
                    Vec2 fin = unstable ? fam.apply(fp.n, {g.eval(s), s})
                                        : fam.apply_inverse(fp.n, {s, g.eval(s)});
                    val = unstable ? fin.x : fin.y;
                    done = true;
                    break;
                }
            }
            if (!done) throw ContractionFailure("graph transform: inner solve stalled");
            next[i] = val;
            diff = std::max(diff, std::fabs(val - cur[i]));
        }
        std::swap(cur, next);
        out.iterations = it + 1;
        if (prev_diff > 1e-13) {
            double ratio = diff / prev_diff;
            out.cauchy_ratios.push_back(ratio);
            if (ratio > ratio_bound && diff > 64.0 * opt.tol)
                throw ContractionFailure("graph transform: contraction ratio " +
                                         std::to_string(ratio) + " above bound " +
                                         std::to_string(ratio_bound));
        }
        prev_diff = diff;
        if (diff <= opt.tol) break;
    }
    SampledGraph g(grid, cur);
    out.curve.kind = kind;
    out.curve.lipschitz = g.lipschitz();
    out.curve.graph = std::move(g);
    return out;
}

BlenderPair build_blender_pair(const BlenderFamily& fam, std::int64_t n,
                               const GraphTransformOptions& opt) {
    BlenderPair pair;
    pair.fixed_point = find_fixed_point(fam, n);
    pair.unstable = graph_transform_manifold(fam, pair.fixed_point, GraphCurve::Kind::u_curve, opt)
                        .curve;
    pair.stable =
        graph_transform_manifold(fam, pair.fixed_point, GraphCurve::Kind::s_curve, opt).curve;
    return pair;
}

// ----- curve-expansion search -----

namespace {

struct TracedCurve {
    const BlenderFamily& fam;
    const ChartCurveFn& base;
    std::vector<std::int64_t> chunks;
    mutable std::map<double, Vec2> cache;

    Vec2 eval(double s) const {
        auto it = cache.find(s);
        Vec2 z;
        if (it != cache.end()) {
            z = it->second;
        } else {
            z = base.eval(s);
            cache.emplace(s, z);
        }
        for (std::int64_t n : chunks) z = fam.apply_inverse(n, z);
        return z;
    }
    void push(std::int64_t n) {
        chunks.push_back(n);
    }
};

bool in_square(Vec2 z, double slack = 0.0) {
    return std::fabs(z.x) <= 1.0 + slack && std::fabs(z.y) <= 1.0 + slack;
}

// Longest parameter subinterval whose image lies in the square, endpoints
// refined by bisection.
struct Trimmed {
    double lo = 0.0, hi = 0.0;
    bool ok = false;
};

Trimmed trim_to_square(const TracedCurve& c, double s_lo, double s_hi, int coarse = 129) {
    std::vector<char> in(coarse);
    std::vector<double> ss(coarse);
    int best_len = 0, best_start = -1, cur_len = 0, cur_start = -1;
    for (int i = 0; i < coarse; ++i) {
        ss[i] = s_lo + (s_hi - s_lo) * i / (coarse - 1);
        in[i] = in_square(c.eval(ss[i])) ? 1 : 0;
        if (in[i]) {
            if (cur_len == 0) cur_start = i;
            ++cur_len;
            if (cur_len > best_len) {
                best_len = cur_len;
                best_start = cur_start;
            }
        } else {
            cur_len = 0;
        }
    }
    Trimmed t;
    if (best_len == 0) return t;
    int a = best_start, b = best_start + best_len - 1;
    double lo = ss[a], hi = ss[b];
    // Refine outward to the exact exit.
    if (a > 0) {
        double out = ss[a - 1];
        for (int k = 0; k < 40; ++k) {
            double mid = 0.5 * (out + lo);
            (in_square(c.eval(mid)) ? lo : out) = mid;
        }
    }
    if (b + 1 < coarse) {
        double out = ss[b + 1];
        for (int k = 0; k < 40; ++k) {
            double mid = 0.5 * (hi + out);
            (in_square(c.eval(mid)) ? hi : out) = mid;
        }
    }
    t.lo = lo;
    t.hi = hi;
    t.ok = true;
    return t;
}

struct Table {
    std::vector<double> s, xi, eta;
    double span() const {
        auto [mn, mx] = std::minmax_element(xi.begin(), xi.end());
        return *mx - *mn;
    }
    double center() const {
        auto [mn, mx] = std::minmax_element(xi.begin(), xi.end());
        return 0.5 * (*mn + *mx);
    }
};

Table sample_curve(const TracedCurve& c, double lo, double hi, int m) {
    Table t;
    t.s.resize(m);
    t.xi.resize(m);
    t.eta.resize(m);
    for (int i = 0; i < m; ++i) {
        t.s[i] = lo + (hi - lo) * i / (m - 1);
        Vec2 z = c.eval(t.s[i]);
        t.xi[i] = z.x;
        t.eta[i] = z.y;
    }
    return t;
}

// Picks an admissible map whose image contains all listed points; tries
// candidates by translation proximity to `center`.
std::optional<std::int64_t> pick_covering_map(const BlenderFamily& fam, double center,
                                              const std::vector<Vec2>& pts, int tries) {
    for (int k = 0; k < tries; ++k) {
        std::size_t idx = fam.nearest_search_member(center, static_cast<std::size_t>(k));
        std::int64_t n = fam.data().cal_n[idx];
        bool ok = true;
        for (const Vec2& p : pts)
            if (!in_square(fam.apply_inverse(n, p), 1e-9)) {
                ok = false;
                break;
            }
        if (ok) return n;
    }
    return std::nullopt;
}

}  // namespace

namespace {

// Locates a transverse crossing of the traced curve with the pair's
// unstable graph by bisecting a sampled sign change.
std::optional<SearchResult> locate_crossing(const TracedCurve& traced, const Table& tab,
                                            const BlenderPair& pair, const SearchOptions& opt) {
    const SampledGraph& f = pair.unstable.graph;
    auto dval = [&](double s) {
        Vec2 z = traced.eval(s);
        return z.x - f.eval(std::clamp(z.y, -1.0, 1.0));
    };
    for (int i = 0; i + 1 < static_cast<int>(tab.s.size()); ++i) {
        double d0 = tab.xi[i] - f.eval(std::clamp(tab.eta[i], -1.0, 1.0));
        double d1 = tab.xi[i + 1] - f.eval(std::clamp(tab.eta[i + 1], -1.0, 1.0));
        if (d0 == 0.0 || d0 * d1 < 0.0) {
            double lo = tab.s[i], hi = tab.s[i + 1];
            double dlo = d0;
            for (int k = 0; k < 100; ++k) {
                double mid = 0.5 * (lo + hi);
                double dm = dval(mid);
                if (std::fabs(dm) <= opt.witness_tol) {
                    lo = hi = mid;
                    break;
                }
                if (dlo * dm <= 0.0)
                    hi = mid;
                else {
                    lo = mid;
                    dlo = dm;
                }
            }
            double s_star = 0.5 * (lo + hi);
            // Transversality: the defect must move with xi.
            double ds = std::max(1e-9, (tab.s[i + 1] - tab.s[i]) * 1e-3);
            Vec2 za = traced.eval(s_star - ds), zb = traced.eval(s_star + ds);
            double slope = std::fabs((dval(s_star + ds) - dval(s_star - ds))) /
                           std::max(std::fabs(zb.x - za.x), 1e-300);
            if (slope < opt.min_cross_slope)
                throw NoTransverseZero("blender search: tangency at the witness");
            SearchResult res;
            res.chunks = traced.chunks;
            res.witness_param = s_star;
            res.witness_point = traced.eval(s_star);
            res.witness_n = pair.fixed_point.n;
            return res;
        }
    }
    return std::nullopt;
}

}  // namespace

SearchResult cs_blender_search(const BlenderFamily& fam, const ChartCurveFn& curve,
                               const BlenderPair& pair_l, const BlenderPair& pair_r,
                               const SearchOptions& opt) {
    TracedCurve traced{fam, curve, {}, {}};
    for (int depth = 0; depth <= opt.max_depth; ++depth) {
        Trimmed tr = trim_to_square(traced, curve.s_lo, curve.s_hi);
        if (!tr.ok) throw SearchExhausted("cs search: curve left the square entirely");
        Table tab = sample_curve(traced, tr.lo, tr.hi, opt.samples);
        if (tab.span() >= 9.0 / 5.0) {
            // Crossing with one of the distinguished unstable manifolds.
            for (const BlenderPair* pair : {&pair_l, &pair_r}) {
                auto hit = locate_crossing(traced, tab, *pair, opt);
                if (hit) {
                    hit->depth = depth;
                    return *hit;
                }
            }
            throw SearchExhausted("cs search: long curve missed both manifolds");
        }
        // Pull back through a map whose image contains the curve.
        std::vector<Vec2> pts;
        for (int i = 0; i < opt.samples; ++i) pts.push_back({tab.xi[i], tab.eta[i]});
        auto n = pick_covering_map(fam, tab.center(), pts, 10);
        if (!n) throw SearchExhausted("cs search: no admissible image contains the curve");
        traced.push(*n);
    }
    throw SearchExhausted("cs search: depth limit reached");
}

PairSearchResult cs_blender_search_pair(const BlenderFamily& fam, const ChartCurveFn& a,
                                        const ChartCurveFn& b, const BlenderPair& pair_l,
                                        const BlenderPair& pair_r, const SearchOptions& opt) {
    TracedCurve ta{fam, a, {}, {}}, tb{fam, b, {}, {}};
    for (int depth = 0; depth <= opt.max_depth; ++depth) {
        Trimmed ra = trim_to_square(ta, a.s_lo, a.s_hi);
        Trimmed rb = trim_to_square(tb, b.s_lo, b.s_hi);
        if (!ra.ok || !rb.ok) throw SearchExhausted("pair search: a curve left the square");
        Table taba = sample_curve(ta, ra.lo, ra.hi, opt.samples);
        Table tabb = sample_curve(tb, rb.lo, rb.hi, opt.samples);
        // Stop as soon as both curves cross a common distinguished manifold.
        for (const BlenderPair* pair : {&pair_l, &pair_r}) {
            auto ha = locate_crossing(ta, taba, *pair, opt);
            if (!ha) continue;
            auto hb = locate_crossing(tb, tabb, *pair, opt);
            if (!hb) continue;
            PairSearchResult out;
            out.chunks = ta.chunks;
            out.first = *ha;
            out.second = *hb;
            return out;
        }
        std::vector<Vec2> pts;
        for (int i = 0; i < opt.samples; ++i) {
            pts.push_back({taba.xi[i], taba.eta[i]});
            pts.push_back({tabb.xi[i], tabb.eta[i]});
        }
        double center = 0.5 * (taba.center() + tabb.center());
        auto n = pick_covering_map(fam, center, pts, 10);
        if (!n) throw SearchExhausted("pair search: no admissible image contains both curves");
        ta.push(*n);
        tb.push(*n);
    }
    throw SearchExhausted("pair search: depth limit reached");
}

ExpansionResult expand_to_full_crossing(const BlenderFamily& fam, const ChartCurveFn& curve,
                                        const SearchOptions& opt) {
    TracedCurve traced{fam, curve, {}, {}};
    int polish_left = opt.polish;
    for (int depth = 0; depth <= opt.max_depth + opt.polish; ++depth) {
        Trimmed tr = trim_to_square(traced, curve.s_lo, curve.s_hi);
        if (!tr.ok) throw SearchExhausted("expansion: curve left the square entirely");
        Table tab = sample_curve(traced, tr.lo, tr.hi, opt.samples);
        double span = tab.span();
        if (span >= opt.full_span && polish_left == 0) {
            ExpansionResult res;
            res.chunks = traced.chunks;
            res.s_lo = tr.lo;
            res.s_hi = tr.hi;
            res.depth = depth;
            return res;
        }
        std::optional<std::int64_t> n;
        if (span < 9.0 / 5.0) {
            std::vector<Vec2> pts;
            for (int i = 0; i < opt.samples; ++i) pts.push_back({tab.xi[i], tab.eta[i]});
            n = pick_covering_map(fam, tab.center(), pts, 10);
        } else {
            // Beyond the dichotomy length no single image need contain the
            // curve; pull back through a map with near-zero translation and
            // clip. These steps also flatten the height profile.
            n = fam.data().cal_n[fam.nearest_search_member(0.0, 0)];
            if (span >= opt.full_span && polish_left > 0) --polish_left;
        }
        if (!n) throw SearchExhausted("expansion: no admissible image contains the curve");
        traced.push(*n);
    }
    throw SearchExhausted("expansion: depth limit reached");
}

// ----- double blender -----

DoubleBlender build_double_blender(const AnnulusMap& t0, const AnnulusMap& t1,
                                   const Regime& regime, const GraphTransformOptions& opt) {
    BlenderFamily fcs(t0, t1, regime.chart, regime.cs, regime.in.chi, false);
    BlenderFamily fcu(t0, t1, regime.chart_cu, regime.cu, regime.in.chi, true);
    DoubleBlender db;
    db.cs = build_blender_pair(fcs, regime.cs.N_l, opt);
    db.cu = build_blender_pair(fcu, regime.cu.N_l, opt);

    // W^u of the cs point is vertical in the plain chart; the physical
    // stable manifold of the cu point is this reversed family's unstable
    // graph, vertical in the reflected chart. In plain-chart coordinates the
    // latter sweeps eta quickly while staying near a constant xi level, so
    // the crossing is located by a sign change along it.
    const SampledGraph& fu_cs = db.cs.unstable.graph;
    const SampledGraph& fu_cu = db.cu.unstable.graph;
    auto to_cs = [&](double eta_cu) {
        Vec2 zcu{fu_cu.eval(eta_cu), eta_cu};
        AnnulusPoint p = regime.chart_cu.from_chart(zcu);
        return regime.chart.to_chart(p);
    };
    auto defect = [&](double eta_cu) {
        Vec2 z = to_cs(eta_cu);
        return z.x - fu_cs.eval(std::clamp(z.y, -1.0, 1.0));
    };
    const int m = 801;
    double prev_eta = -1.0, prev_d = defect(prev_eta);
    bool found = false;
    double lo = 0, hi = 0, dlo = 0;
    for (int i = 1; i < m; ++i) {
        double eta = -1.0 + 2.0 * i / (m - 1);
        Vec2 z = to_cs(eta);
        if (std::fabs(z.y) > 1.0 || std::fabs(z.x) > 1.5) {
            prev_eta = eta;
            prev_d = defect(eta);
            continue;
        }
        double d = defect(eta);
        if (prev_d * d < 0.0) {
            lo = prev_eta;
            hi = eta;
            dlo = prev_d;
            found = true;
            break;
        }
        prev_eta = eta;
        prev_d = d;
    }
    if (!found) throw NoHeteroclinic("double blender: no crossing of the two manifolds");
    for (int k = 0; k < 90; ++k) {
        double mid = 0.5 * (lo + hi);
        double dm = defect(mid);
        if (dlo * dm <= 0.0)
            hi = mid;
        else {
            lo = mid;
            dlo = dm;
        }
    }
    double eta_star = 0.5 * (lo + hi);
    Vec2 z_cs = to_cs(eta_star);
    db.heteroclinic = regime.chart.from_chart(z_cs);

    // Angle between the two curves at the witness, in plain-chart units.
    double h = 1e-4;
    Vec2 a1 = to_cs(eta_star + h), a0 = to_cs(eta_star - h);
    Vec2 tB{a1.x - a0.x, a1.y - a0.y};
    double fpr = (fu_cs.eval(std::clamp(z_cs.y, -1.0, 1.0) + h) -
                  fu_cs.eval(std::clamp(z_cs.y, -1.0, 1.0) - h)) /
                 (2 * h);
    Vec2 tA{fpr, 1.0};
    double cross = tA.x * tB.y - tA.y * tB.x;
    double dot = tA.x * tB.x + tA.y * tB.y;
    db.crossing_tangent = std::fabs(dot) < 1e-300 ? 1e300 : std::fabs(cross / dot);
    return db;
}

// ----- steering -----

namespace {

double chart_band_halfwidth(const Chart& ch) { return std::fabs(ch.C.c) + std::fabs(ch.C.d); }

}  // namespace

SteeringResult steer_to_blender(const AnnulusMap& t0, const AnnulusMap& t1, const Regime& regime,
                                AnnulusPoint z, SteerTarget target, const SteeringOptions& opt) {
    const bool forward = (target == SteerTarget::cu);
    const Chart& chart = forward ? regime.chart_cu : regime.chart;
    const double eps = regime.in.params.eps;
    const double band = chart_band_halfwidth(chart);
    const double target_J = opt.band_fraction * band;

    SteeringResult res;
    res.start = z;
    std::vector<std::uint8_t> applied;  // symbols in application order

    auto rotate1 = [&](AnnulusPoint p) { return forward ? t0.iterate(p, 1) : t0.iterate(p, -1); };
    auto kick1 = [&](AnnulusPoint p) { return forward ? t1.apply(p) : t1.apply_inverse(p); };

    // Bulk kicks against the action offset from the chart's anchor level,
    // then fine kicks into the band, then rotation into the half-square.
    const double J_anchor = chart.origin.J;
    std::int64_t kicks = 0;
    while (std::fabs(z.J - J_anchor) > target_J) {
        if (kicks >= opt.max_kicks)
            throw SteeringStuck("steering: kick budget exhausted at |J-anchor|=" +
                                std::to_string(std::fabs(z.J - J_anchor)));
        std::int64_t rot = 0;
        for (;; ++rot) {
            if (rot >= opt.max_rotations_per_kick)
                throw SteeringStuck("steering: positioning budget exhausted");
            AnnulusPoint probe = kick1(z);
            double dj = probe.J - z.J;
            double err = z.J - J_anchor;
            bool good;
            if (std::fabs(err) > 2.0 * eps) {
                good = (dj * err < 0.0) && std::fabs(dj) >= opt.window_sin * eps;
            } else {
                good = std::fabs(err + dj) <= std::max(target_J, 0.7 * std::fabs(err));
            }
            if (good) {
                z = probe;
                applied.push_back(1);
                ++kicks;
                res.j_trace.push_back(std::fabs(z.J - J_anchor));
                break;
            }
            z = rotate1(z);
            applied.push_back(0);
        }
    }
    res.kicks = kicks;

    // Rotate into the half-square of the chart.
    std::int64_t rot = 0;
    while (true) {
        Vec2 zeta = chart.to_chart(z);
        if (std::fabs(zeta.x) <= 0.5 && std::fabs(zeta.y) <= 0.5) break;
        if (rot++ >= opt.max_rotations_per_kick)
            throw SteeringStuck("steering: chart window positioning exhausted");
        z = rotate1(z);
        applied.push_back(0);
    }

    // Assemble the forward-orientation word and reconcile the endpoint with
    // a canonical replay (run-collapsed evaluation order).
    if (forward) {
        for (std::uint8_t s : applied) res.word.append(s, 1);
        res.end = compose_word(t0, t1, res.word, res.start);
    } else {
        for (auto it = applied.rbegin(); it != applied.rend(); ++it) res.word.append(*it, 1);
        res.end = compose_word_inverse(t0, t1, res.word, res.start);
    }
    return res;
}

// ----- transitivity -----

bool ball_contains(const Ball& ball, double r_steer, AnnulusPoint z) {
    double du = wrap_signed(z.phi - ball.center.phi) / kTwoPi;
    double dv = (z.J - ball.center.J) / r_steer;
    return du * du + dv * dv <= ball.radius * ball.radius;
}

TransitivityCertificate transitivity_search(const AnnulusMap& t0, const AnnulusMap& t1,
                                            const Regime& regime, const Ball& b1, const Ball& b2,
                                            const TransitivityOptions& opt) {
    SteeringOptions sopt = opt.steer;
    if (sopt.r_steer <= 0.0)
        sopt.r_steer = regime.alpha_hat / std::pow(std::fabs(std::log(regime.in.params.eps)), 3);
    const double r_steer = sopt.r_steer;

    BlenderFamily fcs(t0, t1, regime.chart, regime.cs, regime.in.chi, false);
    BlenderFamily fcu(t0, t1, regime.chart_cu, regime.cu, regime.in.chi, true);

    // Steer the two centers: forward into the reflected chart, backward into
    // the plain chart.
    SteeringResult s1 = steer_to_blender(t0, t1, regime, b1.center, SteerTarget::cu, sopt);
    SteeringResult s2 = steer_to_blender(t0, t1, regime, b2.center, SteerTarget::cs, sopt);

    // Anchored curves: segments of the balls along the action direction,
    // traced through the steering words. Their images in the charts are
    // near-horizontal graphs (the accumulated twist shear dominates).
    const double rJ1 = b1.radius * r_steer;
    const double rJ2 = b2.radius * r_steer;

    auto make_base = [&](const Word& word, AnnulusPoint center, double rJ, bool backward) {
        return [&, center, rJ, backward, word](double s) {
            AnnulusPoint p{center.phi, center.J + s * rJ};
            AnnulusPoint q = backward ? compose_word_inverse(t0, t1, word, p)
                                      : compose_word(t0, t1, word, p);
            return backward ? regime.chart.to_chart(q) : regime.chart_cu.to_chart(q);
        };
    };

    // Scale the parameter half-width so the initial curve's xi-extent is a
    // usable fraction of the square.
    auto size_segment = [&](auto&& eval, double& half) {
        for (int k = 0; k < 80; ++k) {
            Vec2 a = eval(-half), m = eval(0.0), b = eval(half);
            double span = std::max({a.x, m.x, b.x}) - std::min({a.x, m.x, b.x});
            bool inside = in_square(a, 0.0) && in_square(b, 0.0);
            if (span > 0.8 || !inside) {
                half *= 0.5;
            } else if (span < 0.15) {
                half *= 1.8;
                if (half > 1.0) {
                    half = 1.0;
                    break;
                }
            } else {
                break;
            }
        }
    };

    auto base1 = make_base(s1.word, b1.center, rJ1, false);
    double half1 = 0.5;
    size_segment(base1, half1);
    ChartCurveFn curve1{base1, -half1, half1};
    ExpansionResult e1 = expand_to_full_crossing(fcu, curve1, opt.search);

    auto base2 = make_base(s2.word, b2.center, rJ2, true);
    double half2 = 0.5;
    size_segment(base2, half2);
    ChartCurveFn curve2{base2, -half2, half2};
    ExpansionResult e2 = expand_to_full_crossing(fcs, curve2, opt.search);

    // Fully expanded curves, replayable end to end.
    auto evalU = [&](double s) {
        Vec2 z = base1(s);
        for (std::int64_t n : e1.chunks) z = fcu.apply_inverse(n, z);
        return z;
    };
    auto evalS = [&](double s) {
        Vec2 z = base2(s);
        for (std::int64_t n : e2.chunks) z = fcs.apply_inverse(n, z);
        return z;
    };

    // The backward curve as a graph eta(xi) in the plain chart.
    const int m = 201;
    std::vector<std::pair<double, double>> sg;
    sg.reserve(m);
    for (int i = 0; i < m; ++i) {
        double s = e2.s_lo + (e2.s_hi - e2.s_lo) * i / (m - 1);
        Vec2 z = evalS(s);
        sg.push_back({z.x, z.y});
    }
    std::sort(sg.begin(), sg.end());
    std::vector<double> gx, gy;
    for (auto& p : sg) {
        if (!gx.empty() && p.first <= gx.back() + 1e-12) continue;
        gx.push_back(p.first);
        gy.push_back(p.second);
    }
    if (gx.size() < 4) throw SearchExhausted("transitivity: degenerate backward curve");
    SampledGraph hs(gx, gy);

    // The forward curve hugs the reversed family's block, an angle shift of
    // roughly b0 away from the plain chart; a rotation block carries it
    // across. Scan the block length until the rotated curve crosses the
    // backward curve's graph.
    auto bridge_at = [&](std::int64_t rot, double s) {
        Vec2 zcu = evalU(s);
        AnnulusPoint p = regime.chart_cu.from_chart(zcu);
        p = t0.iterate(p, rot);
        Vec2 zcs = regime.chart.to_chart(p);
        return std::pair<Vec2, double>{zcs, zcs.y - hs.eval(std::clamp(zcs.x, -1.0, 1.0))};
    };
    const std::int64_t rot_max = 400000;
    const int mb = 257;
    std::int64_t rot_star = -1;
    double lo = 0, hi = 0, dlo = 0;
    for (std::int64_t rot = 0; rot <= rot_max && rot_star < 0; ++rot) {
        // Cheap gate: the rotated midpoint must land inside the plain chart.
        auto [zmid, dmid] = bridge_at(rot, 0.5 * (e1.s_lo + e1.s_hi));
        if (std::fabs(zmid.x) > 0.9 || std::fabs(zmid.y) > 0.9) continue;
        double prev_s = e1.s_lo;
        auto [pz, pd] = bridge_at(rot, prev_s);
        bool prev_valid = std::fabs(pz.x) <= 1.0 && std::fabs(pz.y) <= 1.5;
        for (int i = 1; i < mb; ++i) {
            double s = e1.s_lo + (e1.s_hi - e1.s_lo) * i / (mb - 1);
            auto [z, d] = bridge_at(rot, s);
            bool valid = std::fabs(z.x) <= 1.0 && std::fabs(z.y) <= 1.5;
            if (prev_valid && valid && pd * d < 0.0) {
                lo = prev_s;
                hi = s;
                dlo = pd;
                rot_star = rot;
                break;
            }
            prev_s = s;
            pd = d;
            prev_valid = valid;
        }
    }
    if (rot_star < 0) throw SearchExhausted("transitivity: bridge found no crossing");
    for (int k = 0; k < 120; ++k) {
        double mid = 0.5 * (lo + hi);
        double dm = bridge_at(rot_star, mid).second;
        if (dlo * dm <= 0.0)
            hi = mid;
        else {
            lo = mid;
            dlo = dm;
        }
        if (hi - lo <= opt.bridge_tol) break;
    }
    double s_star = 0.5 * (lo + hi);

    // Assemble the full word.
    Word word = s1.word;
    for (std::int64_t n : e1.chunks) word.append(fcu.chunk(n));
    word.append(0, static_cast<std::uint64_t>(rot_star));
    for (auto it = e2.chunks.rbegin(); it != e2.chunks.rend(); ++it) word.append(fcs.chunk(*it));
    word.append(s2.word);

    TransitivityCertificate cert;
    cert.word = word;
    cert.start = {b1.center.phi, b1.center.J + s_star * rJ1};
    cert.target = b2;
    cert.r_steer = r_steer;
    cert.end = compose_word(t0, t1, word, cert.start);
    if (!ball_contains(b2, r_steer, cert.end))
        throw SearchExhausted("transitivity: certificate failed the containment re-check");
    return cert;
}

bool verify_transitivity(const AnnulusMap& t0, const AnnulusMap& t1,
                         const TransitivityCertificate& cert) {
    AnnulusPoint end = compose_word(t0, t1, cert.word, cert.start);
    if (std::fabs(wrap_signed(end.phi - cert.end.phi)) > 1e-9) return false;
    if (std::fabs(end.J - cert.end.J) > 1e-9 * std::max(1.0, std::fabs(cert.end.J))) return false;
    return ball_contains(cert.target, cert.r_steer, end);
}

// ----- reachability oracle -----

int ReachabilityOracle::cell_of(AnnulusPoint z) const {
    int i = static_cast<int>(wrap_angle(z.phi) / kTwoPi * cells_phi);
    i = std::clamp(i, 0, cells_phi - 1);
    double v = (z.J + r_band) / (2.0 * r_band);
    int j = std::clamp(static_cast<int>(v * cells_j), 0, cells_j - 1);
    return i * cells_j + j;
}

bool ReachabilityOracle::reachable(int from, int to) const {
    return (closure[static_cast<std::size_t>(from)][static_cast<std::size_t>(to) / 64] >>
            (static_cast<std::size_t>(to) % 64)) &
           1ULL;
}

ReachabilityOracle build_reachability_oracle(const AnnulusMap& t0, const AnnulusMap& t1,
                                             double r_band, int cells, std::uint64_t max_len) {
    ReachabilityOracle o;
    o.cells_phi = cells;
    o.cells_j = cells;
    o.r_band = r_band;
    o.max_len = max_len;
    const int n = cells * cells;
    const std::size_t words = static_cast<std::size_t>((n + 63) / 64);
    auto set_bit = [&](std::vector<std::uint64_t>& row, int j) {
        row[static_cast<std::size_t>(j) / 64] |= 1ULL << (static_cast<std::size_t>(j) % 64);
    };

    std::vector<std::vector<std::uint64_t>> step(static_cast<std::size_t>(n),
                                                 std::vector<std::uint64_t>(words, 0));
    for (int i = 0; i < cells; ++i) {
        for (int j = 0; j < cells; ++j) {
            double phi0 = kTwoPi * i / cells, phi1 = kTwoPi * (i + 1) / cells;
            double J0 = -r_band + 2.0 * r_band * j / cells;
            double J1 = -r_band + 2.0 * r_band * (j + 1) / cells;
            AnnulusPoint samples[5] = {{phi0, J0},
                                       {phi0, J1},
                                       {phi1 - 1e-12, J0},
                                       {phi1 - 1e-12, J1},
                                       {0.5 * (phi0 + phi1), 0.5 * (J0 + J1)}};
            int row = i * cells + j;
            for (const AnnulusMap* map : {&t0, &t1}) {
                // Bounding box of the sample images, phi measured relative
                // to the first image to handle the wrap.
                AnnulusPoint first = map->apply(samples[0]);
                double pmin = 0.0, pmax = 0.0, jmin = first.J, jmax = first.J;
                for (int k = 1; k < 5; ++k) {
                    AnnulusPoint im = map->apply(samples[k]);
                    double rel = wrap_signed(im.phi - first.phi);
                    pmin = std::min(pmin, rel);
                    pmax = std::max(pmax, rel);
                    jmin = std::min(jmin, im.J);
                    jmax = std::max(jmax, im.J);
                }
                // Fatten by one part in 1e6 of a cell.
                double fat_p = kTwoPi / cells * 1e-6 + (pmax - pmin) * 1e-9;
                double fat_j = 2 * r_band / cells * 1e-6;
                jmin = std::max(jmin - fat_j, -r_band);
                jmax = std::min(jmax + fat_j, r_band - 1e-300);
                if (jmin > jmax) continue;  // image left the band
                int cj0 = std::clamp(
                    static_cast<int>((jmin + r_band) / (2 * r_band) * cells), 0, cells - 1);
                int cj1 = std::clamp(
                    static_cast<int>((jmax + r_band) / (2 * r_band) * cells), 0, cells - 1);
                double a0 = first.phi + pmin - fat_p, a1 = first.phi + pmax + fat_p;
                int span = static_cast<int>(std::ceil((a1 - a0) / (kTwoPi / cells))) + 1;
                span = std::min(span, cells);
                int ci0 = static_cast<int>(std::floor(wrap_angle(a0) / kTwoPi * cells));
                for (int di = 0; di <= span; ++di) {
                    int ci = (ci0 + di) % cells;
                    for (int cj = cj0; cj <= cj1; ++cj) set_bit(step[row], ci * cells + cj);
                }
            }
        }
    }

    // Reflexive-transitive closure up to max_len by doubling: R' = R + R.R.
    auto& C = o.closure;
    C.assign(static_cast<std::size_t>(n), std::vector<std::uint64_t>(words, 0));
    for (int i = 0; i < n; ++i) set_bit(C[static_cast<std::size_t>(i)], i);
    for (int i = 0; i < n; ++i)
        for (std::size_t w = 0; w < words; ++w) C[static_cast<std::size_t>(i)][w] |= step[i][w];

    if (max_len == 0) {
        for (auto& row : C) std::fill(row.begin(), row.end(), 0);
        for (int i = 0; i < n; ++i) set_bit(C[static_cast<std::size_t>(i)], i);
        return o;
    }
    std::uint64_t len = 1;
    std::vector<std::vector<std::uint64_t>> next(static_cast<std::size_t>(n),
                                                 std::vector<std::uint64_t>(words, 0));
    while (len < max_len) {
        for (int i = 0; i < n; ++i) {
            auto& out = next[static_cast<std::size_t>(i)];
            std::fill(out.begin(), out.end(), 0);
            const auto& row = C[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j) {
                if ((row[static_cast<std::size_t>(j) / 64] >>
                     (static_cast<std::size_t>(j) % 64)) &
                    1ULL) {
                    const auto& rj = C[static_cast<std::size_t>(j)];
                    for (std::size_t w = 0; w < words; ++w) out[w] |= rj[w];
                }
            }
        }
        C.swap(next);
        len = len * 2;
    }
    return o;
}

}  // namespace torsion
