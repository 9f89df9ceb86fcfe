#include "pcw/rect.hpp"

#include <algorithm>
#include <random>

namespace pcw {

RectSet RectSet::full(size_t nx, size_t ny, size_t nm) {
    RectSet s;
    s.nx = nx;
    s.ny = ny;
    s.nm = nm;
    s.in_a.assign(nx * nm, 1);
    s.in_b.assign(ny * nm, 1);
    return s;
}

std::vector<uint8_t> RectSet::encoding() const {
    std::vector<uint8_t> e = in_a;
    e.insert(e.end(), in_b.begin(), in_b.end());
    return e;
}

bool RectSet::subset_of(const RectSet& o) const {
    for (size_t i = 0; i < in_a.size(); ++i)
        if (in_a[i] && !o.in_a[i]) return false;
    for (size_t i = 0; i < in_b.size(); ++i)
        if (in_b[i] && !o.in_b[i]) return false;
    return true;
}

Rat mass_of(const JointDist& d, const RectSet& s) {
    Rat total(0);
    for (size_t x = 0; x < d.nx; ++x)
        for (size_t y = 0; y < d.ny; ++y)
            for (size_t m = 0; m < d.nm; ++m)
                if (s.contains(x, y, m)) total += d.at(x, y, m);
    return total;
}

JointDist conditioned(const JointDist& d, const RectSet& s) {
    Rat total = mass_of(d, s);
    require(total > 0, Errc::zero_mass_event, "conditioning on a zero-mass rectangle");
    JointDist out(d.nx, d.ny, d.nm);
    for (size_t x = 0; x < d.nx; ++x)
        for (size_t y = 0; y < d.ny; ++y)
            for (size_t m = 0; m < d.nm; ++m)
                if (s.contains(x, y, m)) out.at(x, y, m) = d.at(x, y, m) / total;
    return out;
}

RectDist::RectDist(size_t nx, size_t ny, size_t nm, std::vector<Rat> mu, std::vector<Rat> a,
                   std::vector<Rat> b)
    : nx_(nx), ny_(ny), nm_(nm), mu_(std::move(mu)), a_(std::move(a)), b_(std::move(b)) {
    require(mu_.size() == nx * ny && a_.size() == nx * nm && b_.size() == ny * nm,
            Errc::shape_mismatch, "rect dist table sizes");
    for (Rat& v : mu_) v.canonicalize();
    for (Rat& v : a_) {
        v.canonicalize();
        require(v >= 0, Errc::shape_mismatch, "negative A weight");
    }
    for (Rat& v : b_) {
        v.canonicalize();
        require(v >= 0, Errc::shape_mismatch, "negative B weight");
    }
    JointDist j(nx, ny, nm);
    Rat total(0);
    for (size_t x = 0; x < nx; ++x)
        for (size_t y = 0; y < ny; ++y)
            for (size_t m = 0; m < nm; ++m) {
                Rat v = mu_[x * ny + y] * a_[x * nm + m] * b_[y * nm + m];
                j.at(x, y, m) = v;
                total += v;
            }
    require(total > 0, Errc::zero_mass_event, "rect dist has zero mass");
    if (total != 1) {
        for (Rat& v : a_) v /= total;
        for (Rat& v : j.w) v /= total;
    }
    joint_ = std::move(j);
}

namespace {

// A-side factor p(m0) prod_{odd i} p(m_i | x, m_<i); zero off the x-side support.
std::vector<Rat> side_a(const ProtocolDist& p) {
    const TranscriptSpace& ts = p.transcripts();
    size_t nx = p.space().nx();
    std::vector<Rat> out(nx * ts.count, Rat(0));
    for (size_t x = 0; x < nx; ++x)
        for (size_t m = 0; m < ts.count; ++m) {
            Rat v(1);
            for (size_t i = 0; i < ts.rounds(); ++i) {
                if (i >= 2 && i % 2 == 0) continue;  // Bob's rounds
                size_t inp = i == 0 ? 0 : x;
                size_t pk = ts.prefix_key(m, i);
                if (!p.has_conditional(i, inp, pk)) {
                    v = 0;
                    break;
                }
                v *= p.conditional(i, inp, pk)[static_cast<size_t>(ts.digit(m, i))];
                if (v == 0) break;
            }
            out[x * ts.count + m] = v;
        }
    return out;
}

std::vector<Rat> side_b(const ProtocolDist& p) {
    const TranscriptSpace& ts = p.transcripts();
    size_t ny = p.space().ny();
    std::vector<Rat> out(ny * ts.count, Rat(0));
    for (size_t y = 0; y < ny; ++y)
        for (size_t m = 0; m < ts.count; ++m) {
            Rat v(1);
            for (size_t i = 2; i < ts.rounds(); i += 2) {
                size_t pk = ts.prefix_key(m, i);
                if (!p.has_conditional(i, y, pk)) {
                    v = 0;
                    break;
                }
                v *= p.conditional(i, y, pk)[static_cast<size_t>(ts.digit(m, i))];
                if (v == 0) break;
            }
            out[y * ts.count + m] = v;
        }
    return out;
}

}  // namespace

RectDist RectDist::conditioned_on(const ProtocolDist& p, const RectSet& r) {
    size_t nx = p.space().nx(), ny = p.space().ny(), nm = p.transcripts().count;
    require(r.nx == nx && r.ny == ny && r.nm == nm, Errc::shape_mismatch, "rect set shape");
    std::vector<Rat> a = side_a(p), b = side_b(p);
    for (size_t x = 0; x < nx; ++x)
        for (size_t m = 0; m < nm; ++m)
            if (!r.in_a[x * nm + m]) a[x * nm + m] = 0;
    for (size_t y = 0; y < ny; ++y)
        for (size_t m = 0; m < nm; ++m)
            if (!r.in_b[y * nm + m]) b[y * nm + m] = 0;
    return RectDist(nx, ny, nm, p.mu(), std::move(a), std::move(b));
}

RectDist RectDist::self(const ProtocolDist& p) {
    return RectDist(p.space().nx(), p.space().ny(), p.transcripts().count, p.mu(), side_a(p),
                    side_b(p));
}

RectDist RectDist::scaled_a(size_t x, size_t m, const Rat& factor) const {
    std::vector<Rat> a = a_;
    a[x * nm_ + m] *= factor;
    return RectDist(nx_, ny_, nm_, mu_, std::move(a), b_);
}

RectDist RectDist::scaled_b(size_t y, size_t m, const Rat& factor) const {
    std::vector<Rat> b = b_;
    b[y * nm_ + m] *= factor;
    return RectDist(nx_, ny_, nm_, mu_, a_, std::move(b));
}

void CostParams::check() const {
    require(I >= 1, Errc::config_error, "I must be at least 1");
    require(delta > 0 && delta < 1, Errc::config_error, "delta must lie in (0,1)");
    require(K >= 0, Errc::config_error, "K must be nonnegative");
}

namespace {

struct CostContext {
    std::vector<Rat> q_m, q_adv_signed;  // per m
    std::vector<Rat> q_ym, q_xm;         // marginals of q
    std::vector<Rat> p_xy, p_x, p_y;     // marginals of p
    bool adv_zero_somewhere = false;
    size_t zero_adv_m = 0;
};

CostContext build_context(const JointDist& q, const JointDist& p, const BoolFn& f) {
    CostContext c;
    c.q_m.resize(q.nm);
    c.q_adv_signed.assign(q.nm, Rat(0));
    c.q_ym.resize(q.ny * q.nm);
    c.q_xm.resize(q.nx * q.nm);
    c.p_xy.resize(p.nx * p.ny);
    c.p_x.assign(p.nx, Rat(0));
    c.p_y.assign(p.ny, Rat(0));
    for (size_t m = 0; m < q.nm; ++m) {
        Rat mass(0);
        for (size_t x = 0; x < q.nx; ++x)
            for (size_t y = 0; y < q.ny; ++y) {
                const Rat& v = q.at(x, y, m);
                mass += v;
                c.q_adv_signed[m] += f.sign(x, y) * v;
            }
        c.q_m[m] = mass;
        if (mass != 0 && c.q_adv_signed[m] == 0 && !c.adv_zero_somewhere) {
            c.adv_zero_somewhere = true;
            c.zero_adv_m = m;
        }
    }
    for (size_t y = 0; y < q.ny; ++y)
        for (size_t m = 0; m < q.nm; ++m) c.q_ym[y * q.nm + m] = q.mass_ym(y, m);
    for (size_t x = 0; x < q.nx; ++x)
        for (size_t m = 0; m < q.nm; ++m) c.q_xm[x * q.nm + m] = q.mass_xm(x, m);
    for (size_t x = 0; x < p.nx; ++x)
        for (size_t y = 0; y < p.ny; ++y) {
            c.p_xy[x * p.ny + y] = p.mass_xy(x, y);
            c.p_x[x] += c.p_xy[x * p.ny + y];
            c.p_y[y] += c.p_xy[x * p.ny + y];
        }
    return c;
}

void cost_preconditions(const JointDist& q, const JointDist& p, const BoolFn& f,
                        const CostParams& params) {
    params.check();
    require(q.same_shape(p), Errc::shape_mismatch, "q and p shapes differ");
    require(f.nx == q.nx && f.ny == q.ny, Errc::shape_mismatch, "function shape");
    require(support_subset(q, p), Errc::support_violation, "supp(q) must lie inside supp(p)");
    std::vector<Rat> mu(p.nx * p.ny);
    for (size_t x = 0; x < p.nx; ++x)
        for (size_t y = 0; y < p.ny; ++y) mu[x * p.ny + y] = p.mass_xy(x, y);
    require(is_rectangular(q, mu), Errc::not_rectangular, "q is not rectangular w.r.t. p(xy)");
}

// Sup over support points of a PowProd value with exact tie handling; points
// are scanned in (x, y, m) order and the first maximum wins.
struct SupTracker {
    bool any = false;
    PowProd best;
    double best_log2 = 0;
    size_t bx = 0, by = 0, bm = 0;

    void offer(PowProd v, size_t x, size_t y, size_t m) {
        double l = v.log2();
        if (!any) {
            any = true;
            best = std::move(v);
            best_log2 = l;
            bx = x;
            by = y;
            bm = m;
            return;
        }
        if (l < best_log2 - 1e-6) return;
        if (PowProd::cmp(v, best) > 0) {
            best = std::move(v);
            best_log2 = std::max(best_log2, l);
            bx = x;
            by = y;
            bm = m;
        }
    }
};

Rat abs_rat(const Rat& r) { return r >= 0 ? r : Rat(-r); }

}  // namespace

CostReport marginal_cost(const JointDist& q, const JointDist& p, const BoolFn& f,
                         const CostParams& params) {
    cost_preconditions(q, p, f, params);
    CostContext c = build_context(q, p, f);
    CostReport rep;
    if (c.adv_zero_somewhere) {
        rep.finite = false;
        rep.arg_m = c.zero_adv_m;
        return rep;
    }
    Rat adv_exp = -params.adv_exponent();
    SupTracker sup;
    for (size_t x = 0; x < q.nx; ++x)
        for (size_t y = 0; y < q.ny; ++y)
            for (size_t m = 0; m < q.nm; ++m) {
                const Rat& qv = q.at(x, y, m);
                if (qv == 0) continue;
                Rat ratio_x = qv * c.p_y[y] / (c.q_ym[y * q.nm + m] * c.p_xy[x * p.ny + y]);
                Rat ratio_y = qv * c.p_x[x] / (c.q_xm[x * q.nm + m] * c.p_xy[x * p.ny + y]);
                Rat dens = qv / p.at(x, y, m);
                Rat adv = abs_rat(c.q_adv_signed[m]) / c.q_m[m];
                PowProd v = PowProd::of(ratio_x);
                v.mul(ratio_y, Rat(1));
                v.mul(dens, params.I);
                v.mul(adv, adv_exp);
                sup.offer(std::move(v), x, y, m);
            }
    require(sup.any, Errc::zero_mass_event, "q has empty support");
    rep.value = sup.best;
    rep.arg_x = sup.bx;
    rep.arg_y = sup.by;
    rep.arg_m = sup.bm;
    {
        size_t x = sup.bx, y = sup.by, m = sup.bm;
        const Rat& qv = q.at(x, y, m);
        rep.term_info_x = PowProd::of(qv * c.p_y[y] / (c.q_ym[y * q.nm + m] * c.p_xy[x * p.ny + y]));
        rep.term_info_y = PowProd::of(qv * c.p_x[x] / (c.q_xm[x * q.nm + m] * c.p_xy[x * p.ny + y]));
        rep.term_density = PowProd::of(qv / p.at(x, y, m), params.I);
        rep.term_adv = PowProd::of(abs_rat(c.q_adv_signed[m]) / c.q_m[m], adv_exp);
    }
    return rep;
}

CostReport external_cost(const JointDist& q, const JointDist& p, const BoolFn& f,
                         const CostParams& params) {
    cost_preconditions(q, p, f, params);
    CostContext c = build_context(q, p, f);
    CostReport rep;
    if (c.adv_zero_somewhere) {
        rep.finite = false;
        rep.arg_m = c.zero_adv_m;
        return rep;
    }
    Rat adv_exp = -params.adv_exponent();
    SupTracker sup;
    for (size_t x = 0; x < q.nx; ++x)
        for (size_t y = 0; y < q.ny; ++y)
            for (size_t m = 0; m < q.nm; ++m) {
                const Rat& qv = q.at(x, y, m);
                if (qv == 0) continue;
                Rat joint_ratio = qv / (c.q_m[m] * c.p_xy[x * p.ny + y]);
                Rat dens = qv / p.at(x, y, m);
                Rat adv = abs_rat(c.q_adv_signed[m]) / c.q_m[m];
                PowProd v = PowProd::of(joint_ratio);
                v.mul(dens, params.I);
                v.mul(adv, adv_exp);
                sup.offer(std::move(v), x, y, m);
            }
    require(sup.any, Errc::zero_mass_event, "q has empty support");
    rep.value = sup.best;
    rep.arg_x = sup.bx;
    rep.arg_y = sup.by;
    rep.arg_m = sup.bm;
    {
        size_t x = sup.bx, y = sup.by, m = sup.bm;
        const Rat& qv = q.at(x, y, m);
        rep.term_info_x = PowProd::of(qv / (c.q_m[m] * c.p_xy[x * p.ny + y]));
        rep.term_info_y = PowProd();
        rep.term_density = PowProd::of(qv / p.at(x, y, m), params.I);
        rep.term_adv = PowProd::of(abs_rat(c.q_adv_signed[m]) / c.q_m[m], adv_exp);
    }
    return rep;
}

MultiplicativityReport check_multiplicativity(const JointDist& v, const SplitShape& sh) {
    require(sh.nx1 * sh.nx2 == v.nx && sh.ny1 * sh.ny2 == v.ny, Errc::shape_mismatch,
            "split shape mismatch");
    MultiplicativityReport rep;
    for (size_t x = 0; x < v.nx; ++x)
        for (size_t y = 0; y < v.ny; ++y)
            for (size_t m = 0; m < v.nm; ++m) {
                const Rat& vv = v.at(x, y, m);
                if (vv == 0) continue;
                size_t x1 = sh.x1(x), x2 = sh.x2(x), y1 = sh.y1(y), y2 = sh.y2(y);
                // marginals around w = (x1, y2, m)
                Rat vw(0), v_y1w(0), v_x2w(0), v_ym(0), v_xm(0);
                for (size_t x2p = 0; x2p < sh.nx2; ++x2p)
                    for (size_t y1p = 0; y1p < sh.ny1; ++y1p)
                        vw += v.at(sh.x(x1, x2p), sh.y(y1p, y2), m);
                for (size_t x2p = 0; x2p < sh.nx2; ++x2p)
                    v_y1w += v.at(sh.x(x1, x2p), sh.y(y1, y2), m);
                for (size_t y1p = 0; y1p < sh.ny1; ++y1p)
                    v_x2w += v.at(sh.x(x1, x2), sh.y(y1p, y2), m);
                for (size_t xp = 0; xp < v.nx; ++xp) v_ym += v.at(xp, y, m);
                for (size_t yp = 0; yp < v.ny; ++yp) v_xm += v.at(x, yp, m);

                auto fail_at = [&](int id) {
                    if (rep.pass[id]) {
                        rep.pass[id] = false;
                        rep.fail_x = x;
                        rep.fail_y = y;
                        rep.fail_m = m;
                    }
                };
                // (1) v(xy|w) = v(y1|w) v(x2|w)
                if (vv * vw != v_y1w * v_x2w) fail_at(0);
                // (2) v(xw) v(yw) = v(xym) v(w), with v(xw) = v_x2w and v(yw) = v_y1w
                if (v_x2w * v_y1w != vv * vw) fail_at(1);
                // (3) v(x1|y1 m^(1)) v(x2|y2 m^(2)) = v(x|ym);
                //     cross-multiplied: v_y1w/v_ym * v_x2w/vw = vv/v_ym
                if (v_y1w * v_x2w * v_ym != vv * vw * v_ym) fail_at(2);
                // (4) v(y1|x1 m^(1)) v(y2|x2 m^(2)) = v(y|xm);
                //     cross-multiplied: v_y1w/vw * v_x2w/v_xm = vv/v_xm
                if (v_y1w * v_x2w * v_xm != vv * vw * v_xm) fail_at(3);
            }
    return rep;
}

GFactorization g_factorization(const RectDist& q, const ProtocolDist& p) {
    size_t nx = q.nx(), ny = q.ny(), nm = q.nm();
    require(nx == p.space().nx() && ny == p.space().ny() && nm == p.transcripts().count,
            Errc::shape_mismatch, "q/p shape mismatch");
    require(q.mu() == p.mu(), Errc::not_rectangular, "q must be rectangular w.r.t. p(xy)");
    std::vector<Rat> sa = side_a(p), sb = side_b(p);
    GFactorization g;
    g.nx = nx;
    g.ny = ny;
    g.nm = nm;
    g.g1.assign(nx * nm, Rat(0));
    g.g2.assign(ny * nm, Rat(0));
    for (size_t x = 0; x < nx; ++x)
        for (size_t m = 0; m < nm; ++m)
            if (sa[x * nm + m] != 0) g.g1[x * nm + m] = q.a(x, m) / sa[x * nm + m];
    for (size_t y = 0; y < ny; ++y)
        for (size_t m = 0; m < nm; ++m)
            if (sb[y * nm + m] != 0) g.g2[y * nm + m] = q.b(y, m) / sb[y * nm + m];
    for (size_t x = 0; x < nx; ++x)
        for (size_t y = 0; y < ny; ++y)
            for (size_t m = 0; m < nm; ++m) {
                const Rat& qv = q.joint().at(x, y, m);
                if (qv == 0) continue;
                require(g.g1[x * nm + m] * g.g2[y * nm + m] * p.joint().at(x, y, m) == qv,
                        Errc::identity_violation, "g1 g2 decomposition failed");
            }
    return g;
}

RectDist rect_factorize(const JointDist& q, const std::vector<Rat>& mu) {
    require(is_rectangular(q, mu), Errc::not_rectangular, "joint is not rectangular");
    size_t nx = q.nx, ny = q.ny, nm = q.nm;
    std::vector<Rat> a(nx * nm, Rat(0)), b(ny * nm, Rat(0));
    for (size_t m = 0; m < nm; ++m) {
        std::vector<int> ax(nx, -1), by(ny, -1);  // -1 unvisited, 1 assigned
        std::vector<Rat> av(nx), bv(ny);
        for (size_t x0 = 0; x0 < nx; ++x0) {
            if (ax[x0] != -1) continue;
            bool has_mass = false;
            for (size_t y = 0; y < ny; ++y) has_mass = has_mass || q.at(x0, y, m) != 0;
            if (!has_mass) continue;
            // BFS this component starting with A(x0) = 1
            ax[x0] = 1;
            av[x0] = Rat(1);
            std::vector<size_t> queue_x{x0}, queue_y;
            while (!queue_x.empty() || !queue_y.empty()) {
                if (!queue_x.empty()) {
                    size_t x = queue_x.back();
                    queue_x.pop_back();
                    for (size_t y = 0; y < ny; ++y) {
                        if (q.at(x, y, m) == 0 || by[y] != -1) continue;
                        by[y] = 1;
                        bv[y] = q.at(x, y, m) / (mu[x * ny + y] * av[x]);
                        queue_y.push_back(y);
                    }
                } else {
                    size_t y = queue_y.back();
                    queue_y.pop_back();
                    for (size_t x = 0; x < nx; ++x) {
                        if (q.at(x, y, m) == 0 || ax[x] != -1) continue;
                        ax[x] = 1;
                        av[x] = q.at(x, y, m) / (mu[x * ny + y] * bv[y]);
                        queue_x.push_back(x);
                    }
                }
            }
        }
        for (size_t x = 0; x < nx; ++x)
            if (ax[x] == 1) a[x * nm + m] = av[x];
        for (size_t y = 0; y < ny; ++y)
            if (by[y] == 1) b[y * nm + m] = bv[y];
    }
    RectDist out(nx, ny, nm, mu, std::move(a), std::move(b));
    require(support_subset(out.joint(), q) && support_subset(q, out.joint()),
            Errc::not_rectangular, "factor extraction changed the support");
    for (size_t i = 0; i < q.w.size(); ++i)
        require(out.joint().w[i] == q.w[i], Errc::not_rectangular,
                "factor extraction failed to reproduce the joint");
    return out;
}

namespace {

struct ApproxCost {
    bool finite = false;
    double log2 = 0;
};

ApproxCost marginal_cost_approx(const JointDist& q, const JointDist& p, const BoolFn& f,
                                const CostParams& params) {
    ApproxCost out;
    size_t nm = q.nm;
    std::vector<double> q_m(nm, 0), q_sgn(nm, 0), q_ym(q.ny * nm, 0), q_xm(q.nx * nm, 0);
    std::vector<double> p_xy(p.nx * p.ny, 0), p_x(p.nx, 0), p_y(p.ny, 0);
    for (size_t x = 0; x < q.nx; ++x)
        for (size_t y = 0; y < q.ny; ++y) {
            double pv = rat_double(p.mass_xy(x, y));
            p_xy[x * p.ny + y] = pv;
            p_x[x] += pv;
            p_y[y] += pv;
            for (size_t m = 0; m < nm; ++m) {
                double v = rat_double(q.at(x, y, m));
                q_m[m] += v;
                q_sgn[m] += f.sign(x, y) * v;
                q_ym[y * nm + m] += v;
                q_xm[x * nm + m] += v;
            }
        }
    double I = rat_double(params.I);
    double ae = rat_double(params.adv_exponent());
    double best = -1e300;
    bool any = false;
    for (size_t x = 0; x < q.nx; ++x)
        for (size_t y = 0; y < q.ny; ++y)
            for (size_t m = 0; m < nm; ++m) {
                const Rat& qvr = q.at(x, y, m);
                if (qvr == 0) continue;
                if (q_sgn[m] == 0) return out;  // infinite
                double qv = rat_double(qvr);
                double l = std::log2(qv * p_y[y] / (q_ym[y * nm + m] * p_xy[x * p.ny + y])) +
                           std::log2(qv * p_x[x] / (q_xm[x * nm + m] * p_xy[x * p.ny + y])) +
                           I * std::log2(qv / rat_double(p.at(x, y, m))) -
                           ae * std::log2(std::fabs(q_sgn[m]) / q_m[m]);
                any = true;
                best = std::max(best, l);
            }
    out.finite = any;
    out.log2 = best;
    return out;
}

}  // namespace

WitnessResult witness_search(const ProtocolDist& p, const BoolFn& f, const CostParams& params,
                             const EnumerationCaps& caps, uint64_t seed, bool require_exhaustive) {
    params.check();
    size_t nx = p.space().nx(), ny = p.space().ny(), nm = p.transcripts().count;
    size_t bits = nx * nm + ny * nm;
    bool exhaustive = bits <= caps.max_rect_bits;
    require(exhaustive || !require_exhaustive, Errc::cap_exceeded,
            "rect set space too large for exhaustive search");

    const JointDist& pj = p.joint();
    std::optional<WitnessResult> best;
    auto offer = [&](RectDist q, const char* route) {
        CostReport rep = marginal_cost(q.joint(), pj, f, params);
        if (!rep.finite) return false;
        if (!best || PowProd::cmp(rep.value, best->report.value) < 0) {
            best = WitnessResult{std::move(q), std::move(rep), route};
            return true;
        }
        return false;
    };

    offer(RectDist::self(p), "self");

    auto rect_from_masks = [&](uint64_t ma, uint64_t mb) {
        RectSet r = RectSet::full(nx, ny, nm);
        for (size_t i = 0; i < nx * nm; ++i) r.in_a[i] = (ma >> i) & 1;
        for (size_t i = 0; i < ny * nm; ++i) r.in_b[i] = (mb >> i) & 1;
        return r;
    };

    std::vector<RectDist> seeds;
    if (exhaustive) {
        // pass 1: double-precision costs to locate the near-minimal band
        double best_approx = 1e300;
        for (uint64_t ma = 0; ma < (1ull << (nx * nm)); ++ma)
            for (uint64_t mb = 0; mb < (1ull << (ny * nm)); ++mb) {
                RectSet r = rect_from_masks(ma, mb);
                if (mass_of(pj, r) == 0) continue;
                ApproxCost ac = marginal_cost_approx(conditioned(pj, r), pj, f, params);
                if (ac.finite) best_approx = std::min(best_approx, ac.log2);
            }
        // pass 2: exact evaluation of everything in the band (ties included),
        // plus a few distinct-cost refinement seeds
        double cutoff = best_approx + 1e-6;
        size_t exact_evals = 0;
        // best four distinct approximate costs, kept incrementally
        std::vector<std::pair<double, std::pair<uint64_t, uint64_t>>> seed_cands;
        for (uint64_t ma = 0; ma < (1ull << (nx * nm)); ++ma)
            for (uint64_t mb = 0; mb < (1ull << (ny * nm)); ++mb) {
                RectSet r = rect_from_masks(ma, mb);
                if (mass_of(pj, r) == 0) continue;
                ApproxCost ac = marginal_cost_approx(conditioned(pj, r), pj, f, params);
                if (!ac.finite) continue;
                if (ac.log2 < cutoff && exact_evals < 4096) {
                    ++exact_evals;
                    offer(RectDist::conditioned_on(p, r), "conditioning");
                }
                bool distinct = true;
                for (const auto& [l, unused] : seed_cands)
                    if (std::fabs(l - ac.log2) <= 1e-9) distinct = false;
                if (distinct) {
                    seed_cands.emplace_back(ac.log2, std::make_pair(ma, mb));
                    std::sort(seed_cands.begin(), seed_cands.end());
                    if (seed_cands.size() > 4) seed_cands.resize(4);
                }
            }
        for (const auto& [l, masks] : seed_cands)
            seeds.push_back(
                RectDist::conditioned_on(p, rect_from_masks(masks.first, masks.second)));
    } else {
        std::mt19937_64 rng(seed);
        RectSet r = RectSet::full(nx, ny, nm);
        auto try_flip = [&](std::vector<uint8_t>& side, size_t i) {
            side[i] ^= 1;
            bool kept = false;
            if (mass_of(pj, r) > 0) kept = offer(RectDist::conditioned_on(p, r), "greedy");
            if (!kept) side[i] ^= 1;
        };
        for (int pass = 0; pass < 5; ++pass) {
            std::vector<size_t> order(bits);
            for (size_t i = 0; i < bits; ++i) order[i] = i;
            std::shuffle(order.begin(), order.end(), rng);
            for (size_t i : order) {
                if (i < nx * nm)
                    try_flip(r.in_a, i);
                else
                    try_flip(r.in_b, i - nx * nm);
            }
        }
    }

    // coordinate-wise multiplicative refinement from each seed, with a shared
    // budget of 200 accepted moves
    if (best) {
        if (seeds.empty()) seeds.push_back(best->q);
        const Rat factors[] = {Rat(2), Rat(1, 2), Rat(4, 3), Rat(3, 4)};
        int moves = 0;
        for (RectDist& cur : seeds) {
            if (moves >= 200) break;
            CostReport cur_rep = marginal_cost(cur.joint(), pj, f, params);
            if (!cur_rep.finite) continue;
            bool improved = true;
            while (improved && moves < 200) {
                improved = false;
                for (size_t i = 0; i < nx * nm + ny * nm && !improved; ++i)
                    for (const Rat& fac : factors) {
                        bool a_side = i < nx * nm;
                        size_t idx = a_side ? i : i - nx * nm;
                        const Rat& coord =
                            a_side ? cur.a(idx / nm, idx % nm) : cur.b(idx / nm, idx % nm);
                        if (coord == 0) continue;
                        RectDist cand = a_side ? cur.scaled_a(idx / nm, idx % nm, fac)
                                               : cur.scaled_b(idx / nm, idx % nm, fac);
                        CostReport cand_rep = marginal_cost(cand.joint(), pj, f, params);
                        if (!cand_rep.finite) continue;
                        if (PowProd::cmp(cand_rep.value, cur_rep.value) < 0) {
                            cur = std::move(cand);
                            cur_rep = std::move(cand_rep);
                            ++moves;
                            improved = true;
                            break;
                        }
                    }
            }
            if (cur_rep.finite &&
                (!best->report.finite || PowProd::cmp(cur_rep.value, best->report.value) < 0))
                best = WitnessResult{cur, cur_rep, "refined"};
        }
    }

    if (!best) {
        // no finite-cost witness on any route; report the infinite self cost
        RectDist q = RectDist::self(p);
        CostReport rep = marginal_cost(q.joint(), pj, f, params);
        return WitnessResult{std::move(q), std::move(rep), "self"};
    }
    return std::move(*best);
}

}  // namespace pcw
