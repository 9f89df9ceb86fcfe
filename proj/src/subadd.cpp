#include "pcw/subadd.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pcw {

namespace {

Rat abs_rat(const Rat& r) { return r >= 0 ? r : Rat(-r); }

// prefix marginal of q over (x1, y2, first k rounds); x1 = nx1 or y2 = ny2
// mean "summed out"
struct PrefixTables {
    const JointDist* q;
    const TranscriptSpace* ts;
    SplitShape sh;
    std::map<uint64_t, Rat> memo;

    Rat get(size_t x1, size_t y2, size_t k, size_t pk) {
        uint64_t key = ((static_cast<uint64_t>(x1) * 33 + y2) * 40 + k) * (ts->count + 1) + pk;
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        Rat s(0);
        for (size_t x = 0; x < q->nx; ++x) {
            if (x1 < sh.nx1 && sh.x1(x) != x1) continue;
            for (size_t y = 0; y < q->ny; ++y) {
                if (y2 < sh.ny2 && sh.y2(y) != y2) continue;
                for (size_t m = 0; m < q->nm; ++m)
                    if (ts->prefix_key(m, k) == pk) s += q->at(x, y, m);
            }
        }
        memo.emplace(key, s);
        return s;
    }
};

// Composite child-message indexing consistent with the child protocol's
// transcript space: side 1 folds y2 into round 1 (digit y2*r1 + d1), side 2
// folds x1 into round 0 (digit x1*r0 + d0).
struct ChildIndex {
    int side = 1;
    size_t r0 = 1, r1 = 1, spec_count = 1, nm_child = 0;
    std::vector<size_t> to_base, to_spec;

    size_t idx(size_t m, size_t spec) const {
        size_t d0 = m % r0;
        if (side == 1) {
            size_t d1 = (m / r0) % r1;
            size_t rest = m / (r0 * r1);
            return d0 + (spec * r1 + d1) * r0 + rest * (r0 * r1 * spec_count);
        }
        return spec * r0 + d0 + (m / r0) * (r0 * spec_count);
    }
};

ChildIndex make_child_index(const TranscriptSpace& ts, size_t spec_count, int side) {
    ChildIndex ci;
    ci.side = side;
    ci.r0 = ts.radix[0];
    ci.r1 = ts.rounds() >= 2 ? ts.radix[1] : 1;
    ci.spec_count = spec_count;
    ci.nm_child = ts.count * spec_count;
    ci.to_base.assign(ci.nm_child, 0);
    ci.to_spec.assign(ci.nm_child, 0);
    for (size_t m = 0; m < ts.count; ++m)
        for (size_t sp = 0; sp < spec_count; ++sp) {
            size_t c = ci.idx(m, sp);
            ci.to_base[c] = m;
            ci.to_spec[c] = sp;
        }
    return ci;
}

}  // namespace

void SplitInstance::check() const {
    require(p != nullptr, Errc::config_error, "split instance without a protocol");
    const JointDist& pj = p->joint();
    require(shape.nx1 * shape.nx2 == pj.nx && shape.ny1 * shape.ny2 == pj.ny,
            Errc::shape_mismatch, "split shape mismatch");
    require(q.same_shape(pj), Errc::shape_mismatch, "q/p shape mismatch");
    require(gamma >= Rat(1, 3) && gamma <= Rat(2, 3), Errc::config_error,
            "gamma must lie in [1/3, 2/3]");
    require(f.nx == shape.nx1 && f.ny == shape.ny1, Errc::shape_mismatch, "f shape");
    require(g.nx == shape.nx2 && g.ny == shape.ny2, Errc::shape_mismatch, "g shape");
    require(support_subset(q, pj), Errc::support_violation, "supp(q) must lie in supp(p)");
    for (size_t x = 0; x < pj.nx; ++x)
        for (size_t y = 0; y < pj.ny; ++y) {
            Rat m1(0), m2(0);
            for (size_t xp = 0; xp < pj.nx; ++xp)
                for (size_t yp = 0; yp < pj.ny; ++yp) {
                    if (shape.x1(xp) == shape.x1(x) && shape.y1(yp) == shape.y1(y))
                        m1 += pj.mass_xy(xp, yp);
                    if (shape.x2(xp) == shape.x2(x) && shape.y2(yp) == shape.y2(y))
                        m2 += pj.mass_xy(xp, yp);
                }
            require(pj.mass_xy(x, y) == m1 * m2, Errc::shape_mismatch,
                    "input copies are not independent under p");
        }
}

namespace {

struct ChildTables {
    JointDist q1, p1, q2, p2;
    ChildIndex ci1, ci2;
};

ChildTables build_child_tables(const SplitInstance& si) {
    const ProtocolDist& p = *si.p;
    const JointDist& pj = p.joint();
    const JointDist& qj = si.q;
    const TranscriptSpace& ts = p.transcripts();
    const SplitShape& sh = si.shape;
    size_t nm = ts.count;

    ChildTables ct;
    ct.ci1 = make_child_index(ts, sh.ny2, 1);
    ct.ci2 = make_child_index(ts, sh.nx1, 2);
    ct.q1 = JointDist(sh.nx1, sh.ny1, nm * sh.ny2);
    ct.q2 = JointDist(sh.nx2, sh.ny2, nm * sh.nx1);
    ct.p1 = JointDist(sh.nx1, sh.ny1, nm * sh.ny2);
    ct.p2 = JointDist(sh.nx2, sh.ny2, nm * sh.nx1);

    for (size_t x = 0; x < qj.nx; ++x)
        for (size_t y = 0; y < qj.ny; ++y)
            for (size_t m = 0; m < nm; ++m) {
                const Rat& v = qj.at(x, y, m);
                if (v == 0) continue;
                ct.q1.at(sh.x1(x), sh.y1(y), ct.ci1.idx(m, sh.y2(y))) += v;
                ct.q2.at(sh.x2(x), sh.y2(y), ct.ci2.idx(m, sh.x1(x))) += v;
            }

    PrefixTables pt{&qj, &ts, sh, {}};
    auto q_cond = [&](size_t i, size_t x1, size_t y2, size_t m) {
        Rat den = pt.get(x1, y2, i, ts.prefix_key(m, i));
        if (den == 0) return Rat(1, static_cast<long>(ts.radix[i]));
        return Rat(pt.get(x1, y2, i + 1, ts.prefix_key(m, i + 1)) / den);
    };
    auto q_y2 = [&](size_t x1, size_t y2, size_t m) {
        Rat den = pt.get(x1, sh.ny2, 1, ts.prefix_key(m, 1));
        if (den == 0) return Rat(1, static_cast<long>(sh.ny2));
        return Rat(pt.get(x1, y2, 1, ts.prefix_key(m, 1)) / den);
    };
    auto q_x1m0 = [&](size_t x1, size_t m) {
        return pt.get(x1, sh.ny2, 1, ts.prefix_key(m, 1));
    };

    std::vector<Rat> mu1(sh.nx1 * sh.ny1, Rat(0)), mu2(sh.nx2 * sh.ny2, Rat(0));
    for (size_t x = 0; x < pj.nx; ++x)
        for (size_t y = 0; y < pj.ny; ++y) {
            mu1[sh.x1(x) * sh.ny1 + sh.y1(y)] += pj.mass_xy(x, y);
            mu2[sh.x2(x) * sh.ny2 + sh.y2(y)] += pj.mass_xy(x, y);
        }

    for (size_t x1 = 0; x1 < sh.nx1; ++x1)
        for (size_t y1 = 0; y1 < sh.ny1; ++y1)
            for (size_t m = 0; m < nm; ++m)
                for (size_t y2 = 0; y2 < sh.ny2; ++y2) {
                    Rat v = mu1[x1 * sh.ny1 + y1];
                    if (v == 0) continue;
                    v *= p.conditional(0, 0, 0)[static_cast<size_t>(ts.digit(m, 0))];
                    v *= q_y2(x1, y2, m);
                    for (size_t i = 1; i < ts.rounds() && v != 0; ++i) {
                        if (i % 2 == 1) {
                            v *= q_cond(i, x1, y2, m);
                        } else {
                            size_t yfull = 0;
                            for (size_t yy = 0; yy < pj.ny; ++yy)
                                if (sh.y1(yy) == y1 && sh.y2(yy) == y2) yfull = yy;
                            v *= p.conditional(i, yfull, ts.prefix_key(m, i))
                                     [static_cast<size_t>(ts.digit(m, i))];
                        }
                    }
                    ct.p1.at(x1, y1, ct.ci1.idx(m, y2)) = v;
                }

    for (size_t x2 = 0; x2 < sh.nx2; ++x2)
        for (size_t y2 = 0; y2 < sh.ny2; ++y2)
            for (size_t m = 0; m < nm; ++m)
                for (size_t x1 = 0; x1 < sh.nx1; ++x1) {
                    // the public part of m^(2) is (m0, x1) with law q(x1 m0)
                    Rat v = mu2[x2 * sh.ny2 + y2] * q_x1m0(x1, m);
                    if (v == 0) continue;
                    for (size_t i = 1; i < ts.rounds() && v != 0; ++i) {
                        if (i % 2 == 1) {
                            size_t xfull = 0;
                            for (size_t xx = 0; xx < pj.nx; ++xx)
                                if (sh.x1(xx) == x1 && sh.x2(xx) == x2) xfull = xx;
                            v *= p.conditional(i, xfull, ts.prefix_key(m, i))
                                     [static_cast<size_t>(ts.digit(m, i))];
                        } else {
                            v *= q_cond(i, x1, y2, m);
                        }
                    }
                    ct.p2.at(x2, y2, ct.ci2.idx(m, x1)) = v;
                }
    return ct;
}

}  // namespace

ChildPair build_children(const SplitInstance& si) {
    si.check();
    const ProtocolDist& p = *si.p;
    const JointDist& pj = p.joint();
    const JointDist& qj = si.q;
    const SplitShape& sh = si.shape;
    size_t nm = p.transcripts().count;

    ChildTables ct = build_child_tables(si);
    const ChildIndex &ci1 = ct.ci1, &ci2 = ct.ci2;
    ChildPair cp;
    cp.q1 = std::move(ct.q1);
    cp.q2 = std::move(ct.q2);
    cp.p1 = std::move(ct.p1);
    cp.p2 = std::move(ct.p2);

    auto& checks = cp.identity_checks;
    checks.push_back(check_flag("split.p1-normalized", cp.p1.total() == 1));
    checks.push_back(check_flag("split.p2-normalized", cp.p2.total() == 1));

    {
        bool ok1 = true, ok2 = true;
        for (size_t x1 = 0; x1 < sh.nx1; ++x1)
            for (size_t y1 = 0; y1 < sh.ny1; ++y1) {
                Rat want(0);
                for (size_t x = 0; x < pj.nx; ++x)
                    for (size_t y = 0; y < pj.ny; ++y)
                        if (sh.x1(x) == x1 && sh.y1(y) == y1) want += pj.mass_xy(x, y);
                if (cp.p1.mass_xy(x1, y1) != want) ok1 = false;
            }
        for (size_t x2 = 0; x2 < sh.nx2; ++x2)
            for (size_t y2 = 0; y2 < sh.ny2; ++y2) {
                Rat want(0);
                for (size_t x = 0; x < pj.nx; ++x)
                    for (size_t y = 0; y < pj.ny; ++y)
                        if (sh.x2(x) == x2 && sh.y2(y) == y2) want += pj.mass_xy(x, y);
                if (cp.p2.mass_xy(x2, y2) != want) ok2 = false;
            }
        checks.push_back(check_flag("split.p1-input-marginal", ok1));
        checks.push_back(check_flag("split.p2-input-marginal", ok2));
    }

    {
        std::vector<Rat> mu1(sh.nx1 * sh.ny1), mu2(sh.nx2 * sh.ny2);
        for (size_t x1 = 0; x1 < sh.nx1; ++x1)
            for (size_t y1 = 0; y1 < sh.ny1; ++y1) mu1[x1 * sh.ny1 + y1] = cp.p1.mass_xy(x1, y1);
        for (size_t x2 = 0; x2 < sh.nx2; ++x2)
            for (size_t y2 = 0; y2 < sh.ny2; ++y2) mu2[x2 * sh.ny2 + y2] = cp.p2.mass_xy(x2, y2);
        checks.push_back(check_flag("split.child1-rect", is_rectangular(cp.q1, mu1)));
        checks.push_back(check_flag("split.child2-rect", is_rectangular(cp.q2, mu2)));
    }

    auto qw = [&](size_t x1, size_t y2, size_t m) {
        Rat s(0);
        for (size_t x = 0; x < qj.nx; ++x) {
            if (sh.x1(x) != x1) continue;
            for (size_t y = 0; y < qj.ny; ++y)
                if (sh.y2(y) == y2) s += qj.at(x, y, m);
        }
        return s;
    };

    bool id_density = true, id_info_x = true, id_info_y = true, id_adv = true, id_prod = true;
    for (size_t x = 0; x < qj.nx; ++x)
        for (size_t y = 0; y < qj.ny; ++y)
            for (size_t m = 0; m < nm; ++m) {
                size_t x1 = sh.x1(x), x2 = sh.x2(x), y1 = sh.y1(y), y2 = sh.y2(y);
                size_t m1 = ci1.idx(m, y2), m2 = ci2.idx(m, x1);
                if (qw(x1, y2, m) != 0 &&
                    cp.p1.at(x1, y1, m1) * cp.p2.at(x2, y2, m2) != pj.at(x, y, m) * qw(x1, y2, m))
                    id_prod = false;
                const Rat& v = qj.at(x, y, m);
                if (v == 0) continue;
                const Rat &q1v = cp.q1.at(x1, y1, m1), &q2v = cp.q2.at(x2, y2, m2);
                const Rat &p1v = cp.p1.at(x1, y1, m1), &p2v = cp.p2.at(x2, y2, m2);
                if (q1v * q2v * pj.at(x, y, m) != v * p1v * p2v) id_density = false;
                {
                    Rat l = (q1v / cp.q1.mass_ym(y1, m1)) /
                            (cp.p1.mass_xy(x1, y1) / cp.p1.mass_y(y1));
                    l *= (q2v / cp.q2.mass_ym(y2, m2)) /
                         (cp.p2.mass_xy(x2, y2) / cp.p2.mass_y(y2));
                    Rat r = (v / qj.mass_ym(y, m)) / (pj.mass_xy(x, y) / pj.mass_y(y));
                    if (l != r) id_info_x = false;
                }
                {
                    Rat l = (q1v / cp.q1.mass_xm(x1, m1)) /
                            (cp.p1.mass_xy(x1, y1) / cp.p1.mass_x(x1));
                    l *= (q2v / cp.q2.mass_xm(x2, m2)) /
                         (cp.p2.mass_xy(x2, y2) / cp.p2.mass_x(x2));
                    Rat r = (v / qj.mass_xm(x, m)) / (pj.mass_xy(x, y) / pj.mass_x(x));
                    if (l != r) id_info_y = false;
                }
            }

    for (size_t x1 = 0; x1 < sh.nx1; ++x1)
        for (size_t y2 = 0; y2 < sh.ny2; ++y2)
            for (size_t m = 0; m < nm; ++m) {
                Rat mass = qw(x1, y2, m);
                if (mass == 0) continue;
                size_t m1 = ci1.idx(m, y2), m2 = ci2.idx(m, x1);
                Rat s1(0), s2(0), s12(0);
                for (size_t y1 = 0; y1 < sh.ny1; ++y1)
                    s1 += si.f.sign(x1, y1) * cp.q1.at(x1, y1, m1);
                for (size_t x2 = 0; x2 < sh.nx2; ++x2)
                    s2 += si.g.sign(x2, y2) * cp.q2.at(x2, y2, m2);
                for (size_t x = 0; x < qj.nx; ++x) {
                    if (sh.x1(x) != x1) continue;
                    for (size_t y = 0; y < qj.ny; ++y) {
                        if (sh.y2(y) != y2) continue;
                        int sgn = (si.f(x1, sh.y1(y)) ^ si.g(sh.x2(x), y2)) ? -1 : 1;
                        s12 += sgn * qj.at(x, y, m);
                    }
                }
                if (abs_rat(s1) * abs_rat(s2) != abs_rat(s12) * mass) id_adv = false;
            }

    checks.push_back(check_flag("split.id-density", id_density));
    checks.push_back(check_flag("split.id-info-x", id_info_x));
    checks.push_back(check_flag("split.id-info-y", id_info_y));
    checks.push_back(check_flag("split.id-adv", id_adv));
    checks.push_back(check_flag("split.product-feature", id_prod));
    return cp;
}

namespace {

// One side of the reduction in child coordinates. The child message index is
// cm indexes the composite child transcript; w corresponds to (wcoord, cm),
// the child X side when w_fixes_x, else the child Y side.
struct SideView {
    const JointDist* qc;
    const JointDist* pc;
    BoolFn h;
    bool w_fixes_x;
    const ChildIndex* ci;

    size_t nwc() const { return w_fixes_x ? qc->nx : qc->ny; }
    size_t nfree() const { return w_fixes_x ? qc->ny : qc->nx; }
    const Rat& q_at(size_t wc, size_t fr, size_t cm) const {
        return w_fixes_x ? qc->at(wc, fr, cm) : qc->at(fr, wc, cm);
    }
    const Rat& p_at(size_t wc, size_t fr, size_t cm) const {
        return w_fixes_x ? pc->at(wc, fr, cm) : pc->at(fr, wc, cm);
    }
    int h_sign(size_t wc, size_t fr) const {
        return w_fixes_x ? h.sign(wc, fr) : h.sign(fr, wc);
    }
    size_t base_of(size_t cm) const { return ci->to_base[cm]; }

    Rat w_mass_q(size_t wc, size_t cm) const {
        Rat s(0);
        for (size_t fr = 0; fr < nfree(); ++fr) s += q_at(wc, fr, cm);
        return s;
    }
    Rat w_mass_p(size_t wc, size_t cm) const {
        Rat s(0);
        for (size_t fr = 0; fr < nfree(); ++fr) s += p_at(wc, fr, cm);
        return s;
    }
    Rat w_signed_q(size_t wc, size_t cm) const {
        Rat s(0);
        for (size_t fr = 0; fr < nfree(); ++fr) s += h_sign(wc, fr) * q_at(wc, fr, cm);
        return s;
    }

    // sup over the free coordinate of (q/p)^I * info ratios, as a PowProd;
    // nullopt when the w slice is empty under q
    std::optional<PowProd> a_sup(size_t wc, size_t cm, const CostParams& params) const {
        std::optional<PowProd> best;
        double best_log = -1e300;
        for (size_t fr = 0; fr < nfree(); ++fr) {
            const Rat& qv = q_at(wc, fr, cm);
            if (qv == 0) continue;
            size_t cx = w_fixes_x ? wc : fr, cy = w_fixes_x ? fr : wc;
            Rat dens = qv / pc->at(cx, cy, cm);
            Rat rx = (qc->at(cx, cy, cm) / qc->mass_ym(cy, cm)) /
                     (pc->mass_xy(cx, cy) / pc->mass_y(cy));
            Rat ry = (qc->at(cx, cy, cm) / qc->mass_xm(cx, cm)) /
                     (pc->mass_xy(cx, cy) / pc->mass_x(cx));
            PowProd v = PowProd::of(dens, params.I);
            v.mul(rx, Rat(1));
            v.mul(ry, Rat(1));
            double l = v.log2();
            if (best && l < best_log - 1e-9) continue;
            if (!best || PowProd::cmp(v, *best) > 0) {
                best = v;
                best_log = std::max(best_log, l);
            }
        }
        return best;
    }

    // A_side(w) = |adv_w|^{-12I/delta} * a_sup(w)
    std::optional<PowProd> a_value(size_t wc, size_t cm, const CostParams& params) const {
        Rat wm = w_mass_q(wc, cm);
        if (wm == 0) return std::nullopt;
        Rat adv = abs_rat(w_signed_q(wc, cm)) / wm;
        if (adv == 0) return std::nullopt;
        std::optional<PowProd> sup = a_sup(wc, cm, params);
        if (!sup) return std::nullopt;
        sup->mul(PowProd::of(adv, -params.adv_exponent()));
        return sup;
    }
};

struct SideOutcome {
    JointDist r_final;
    CostReport cost;
    std::vector<Check> certs;
};

SideOutcome reduce_side(const SideView& sv, const std::vector<uint8_t>& w_in_l,
                        const std::vector<uint8_t>& m_in_u, const std::vector<Rat>& q_g_given_m,
                        const PowProd& alpha_cap, const CostParams& params) {
    const JointDist& qc = *sv.qc;
    const JointDist& pc = *sv.pc;
    size_t nwc = sv.nwc(), nmc = qc.nm, nbase = nmc / sv.ci->spec_count;
    const Rat& delta = params.delta;
    std::vector<Check> certs;

    std::vector<Rat> q_base(nbase, Rat(0)), p_base(nbase, Rat(0));
    for (size_t cm = 0; cm < nmc; ++cm) {
        q_base[sv.base_of(cm)] += qc.mass_m(cm);
        p_base[sv.base_of(cm)] += pc.mass_m(cm);
    }

    // U': drop base messages with q(m)/p(m) <= 1/4
    std::vector<uint8_t> u_prime(nbase, 0);
    Rat u_mass(0);
    for (size_t b = 0; b < nbase; ++b) {
        if (!m_in_u[b] || q_base[b] == 0) continue;
        if (q_base[b] * 4 <= p_base[b]) continue;
        u_prime[b] = 1;
        u_mass += q_base[b];
    }
    certs.push_back(check_ge_rat("split.prune-u-mass", u_mass, Rat(1, 4)));
    require(u_mass > 0, Errc::empty_after_pruning, "U' is empty");

    // L': drop w violating either pruning rule
    std::vector<uint8_t> l_prime = w_in_l;
    for (size_t cm = 0; cm < nmc; ++cm) {
        size_t b = sv.base_of(cm);
        if (!u_prime[b]) continue;
        for (size_t wc = 0; wc < nwc; ++wc) {
            if (!l_prime[wc * nmc + cm]) continue;
            Rat wm = sv.w_mass_q(wc, cm);
            if (wm == 0) {
                l_prime[wc * nmc + cm] = 0;
                continue;
            }
            Rat thresh = q_g_given_m[b] / 8;
            bool del = false;
            Rat pw = sv.w_mass_p(wc, cm);
            if (pw != 0 && wm * p_base[b] < thresh * pw * q_base[b]) del = true;
            if (!del && thresh > 0) {
                // E_{q(free|w)}[ log ratio of the fixed coordinate ] vs log thresh
                PowProd lhs;
                bool defined = true;
                for (size_t fr = 0; fr < sv.nfree() && defined; ++fr) {
                    const Rat& qv = sv.q_at(wc, fr, cm);
                    if (qv == 0) continue;
                    size_t cx = sv.w_fixes_x ? wc : fr, cy = sv.w_fixes_x ? fr : wc;
                    Rat ratio;
                    if (sv.w_fixes_x) {
                        // q(x | y, cm) / p(x | y)
                        Rat den = qc.mass_ym(cy, cm);
                        Rat pd = pc.mass_xy(cx, cy) / pc.mass_y(cy);
                        if (den == 0 || pd == 0) {
                            defined = false;
                            break;
                        }
                        ratio = (qv / den) / pd;
                    } else {
                        Rat den = qc.mass_xm(cx, cm);
                        Rat pd = pc.mass_xy(cx, cy) / pc.mass_x(cx);
                        if (den == 0 || pd == 0) {
                            defined = false;
                            break;
                        }
                        ratio = (qv / den) / pd;
                    }
                    lhs.mul(ratio, qv / wm);
                }
                if (defined && PowProd::cmp(lhs, PowProd::of(thresh)) < 0) del = true;
            }
            if (del) l_prime[wc * nmc + cm] = 0;
        }
    }
    {
        bool l_mass_ok = true;
        for (size_t b = 0; b < nbase; ++b) {
            if (!u_prime[b]) continue;
            Rat num(0);
            for (size_t cm = 0; cm < nmc; ++cm) {
                if (sv.base_of(cm) != b) continue;
                for (size_t wc = 0; wc < nwc; ++wc)
                    if (l_prime[wc * nmc + cm]) num += sv.w_mass_q(wc, cm);
            }
            Rat den = q_g_given_m[b] * q_base[b];
            if (den == 0) continue;
            if (num * 4 < den) l_mass_ok = false;
        }
        certs.push_back(check_flag("split.prune-l-mass", l_mass_ok));
    }

    // per-w advantage lower bound
    {
        bool adv_ok = true;
        for (size_t cm = 0; cm < nmc; ++cm) {
            if (!u_prime[sv.base_of(cm)]) continue;
            for (size_t wc = 0; wc < nwc; ++wc) {
                if (!l_prime[wc * nmc + cm]) continue;
                Rat wm = sv.w_mass_q(wc, cm);
                if (wm == 0) continue;
                Rat adv = abs_rat(sv.w_signed_q(wc, cm)) / wm;
                if (adv == 0) {
                    adv_ok = false;
                    continue;
                }
                PowProd l = PowProd::of(adv);
                l.mul(alpha_cap);
                if (PowProd::cmp(l, PowProd()) < 0) adv_ok = false;
            }
        }
        certs.push_back(check_flag("split.per-w-adv", adv_ok));
    }

    // dyadic buckets per child message
    std::vector<uint8_t> in_b(nwc * nmc, 0);
    long max_buckets = 2 * (std::max(alpha_cap.ceil_log2(), 0L) + 1);
    bool bucket_density_ok = true, bucket_factor_ok = true;
    for (size_t cm = 0; cm < nmc; ++cm) {
        if (!u_prime[sv.base_of(cm)]) continue;
        std::map<std::pair<long, int>, Rat> bucket_mass;
        for (size_t wc = 0; wc < nwc; ++wc) {
            if (!l_prime[wc * nmc + cm]) continue;
            Rat wm = sv.w_mass_q(wc, cm);
            if (wm == 0) continue;
            Rat sgn = sv.w_signed_q(wc, cm);
            if (sgn == 0) continue;
            long k = ceil_log2(abs_rat(sgn) / wm);
            bucket_mass[{k, sgn > 0 ? 0 : 1}] += wm;
        }
        if (bucket_mass.empty()) continue;
        Rat l_mass(0);
        for (const auto& [key, mass] : bucket_mass) l_mass += mass;
        std::pair<long, int> best_key = bucket_mass.begin()->first;
        Rat best_mass = bucket_mass.begin()->second;
        for (const auto& [key, mass] : bucket_mass)
            if (mass > best_mass) {
                best_key = key;
                best_mass = mass;
            }
        if (best_mass * max_buckets < l_mass) bucket_density_ok = false;
        Rat b_signed(0), b_mass(0);
        for (size_t wc = 0; wc < nwc; ++wc) {
            if (!l_prime[wc * nmc + cm]) continue;
            Rat wm = sv.w_mass_q(wc, cm);
            if (wm == 0) continue;
            Rat sgn = sv.w_signed_q(wc, cm);
            if (sgn == 0) continue;
            if (std::make_pair(ceil_log2(abs_rat(sgn) / wm), sgn > 0 ? 0 : 1) == best_key) {
                in_b[wc * nmc + cm] = 1;
                b_signed += sgn;
                b_mass += wm;
            }
        }
        for (size_t wc = 0; wc < nwc; ++wc) {
            if (!in_b[wc * nmc + cm]) continue;
            Rat wm = sv.w_mass_q(wc, cm);
            if (abs_rat(b_signed) * wm * 2 < abs_rat(sv.w_signed_q(wc, cm)) * b_mass)
                bucket_factor_ok = false;
        }
    }
    certs.push_back(check_flag("split.bucket-density", bucket_density_ok));
    certs.push_back(check_flag("split.bucket-adv-factor", bucket_factor_ok));

    // rectangular maximizer R per child message inside B
    std::vector<uint8_t> in_r(qc.nx * qc.ny * nmc, 0);
    std::vector<Rat> r_mass_cm(nmc, Rat(0)), b_mass_cm(nmc, Rat(0)), b_sgn_cm(nmc, Rat(0));
    for (size_t cm = 0; cm < nmc; ++cm) {
        if (!u_prime[sv.base_of(cm)]) continue;
        std::vector<uint8_t> allowed(nwc, 0);
        bool any = false;
        for (size_t wc = 0; wc < nwc; ++wc)
            if (in_b[wc * nmc + cm]) {
                allowed[wc] = 1;
                any = true;
                b_mass_cm[cm] += sv.w_mass_q(wc, cm);
                b_sgn_cm[cm] += sv.w_signed_q(wc, cm);
            }
        if (!any) continue;
        size_t nbits = qc.nx + qc.ny;
        require(nbits <= 16, Errc::cap_exceeded, "child rectangle scan too large");
        uint64_t best_mask = 0;
        std::optional<PowProd> best;
        double best_log = -1e300;
        for (uint64_t mask = 1; mask < (1ull << nbits); ++mask) {
            bool inside = true;
            for (size_t cx = 0; cx < qc.nx && inside; ++cx)
                if ((mask >> cx & 1) && sv.w_fixes_x && !allowed[cx]) inside = false;
            for (size_t cy = 0; cy < qc.ny && inside; ++cy)
                if ((mask >> (qc.nx + cy) & 1) && !sv.w_fixes_x && !allowed[cy]) inside = false;
            if (!inside) continue;
            Rat mass(0), sgn(0);
            for (size_t cx = 0; cx < qc.nx; ++cx) {
                if (!(mask >> cx & 1)) continue;
                for (size_t cy = 0; cy < qc.ny; ++cy) {
                    if (!(mask >> (qc.nx + cy) & 1)) continue;
                    mass += qc.at(cx, cy, cm);
                    sgn += sv.h.sign(cx, cy) * qc.at(cx, cy, cm);
                }
            }
            if (mass == 0 || sgn == 0) continue;
            PowProd obj = PowProd::of(mass, delta - 1);
            obj.mul(abs_rat(sgn), Rat(1));
            double l = obj.log2();
            if (best && l < best_log - 1e-9) continue;
            if (!best || PowProd::cmp(obj, *best) > 0) {
                best = obj;
                best_log = std::max(best_log, l);
                best_mask = mask;
            }
        }
        if (!best) continue;
        for (size_t cx = 0; cx < qc.nx; ++cx) {
            if (!(best_mask >> cx & 1)) continue;
            for (size_t cy = 0; cy < qc.ny; ++cy) {
                if (!(best_mask >> (qc.nx + cy) & 1)) continue;
                in_r[(cx * qc.ny + cy) * nmc + cm] = 1;
                r_mass_cm[cm] += qc.at(cx, cy, cm);
            }
        }
    }

    // the distribution r = q(m|U') q(spec|m L') q(xy|m^(i) R)
    JointDist r(qc.nx, qc.ny, nmc);
    {
        std::vector<Rat> l_mass_cm(nmc, Rat(0)), l_mass_base(nbase, Rat(0));
        for (size_t cm = 0; cm < nmc; ++cm) {
            for (size_t wc = 0; wc < nwc; ++wc)
                if (l_prime[wc * nmc + cm]) l_mass_cm[cm] += sv.w_mass_q(wc, cm);
            l_mass_base[sv.base_of(cm)] += l_mass_cm[cm];
        }
        for (size_t cm = 0; cm < nmc; ++cm) {
            size_t b = sv.base_of(cm);
            if (!u_prime[b] || r_mass_cm[cm] == 0 || l_mass_base[b] == 0) continue;
            Rat lead = (q_base[b] / u_mass) * (l_mass_cm[cm] / l_mass_base[b]);
            for (size_t cx = 0; cx < qc.nx; ++cx)
                for (size_t cy = 0; cy < qc.ny; ++cy)
                    if (in_r[(cx * qc.ny + cy) * nmc + cm])
                        r.at(cx, cy, cm) = lead * qc.at(cx, cy, cm) / r_mass_cm[cm];
        }
    }
    certs.push_back(check_flag("split.r-normalized", r.total() == 1));
    {
        std::vector<Rat> mu(qc.nx * qc.ny);
        for (size_t cx = 0; cx < qc.nx; ++cx)
            for (size_t cy = 0; cy < qc.ny; ++cy) mu[cx * qc.ny + cy] = pc.mass_xy(cx, cy);
        certs.push_back(check_flag("split.r-rect", is_rectangular(r, mu)));
    }
    require(r.total() > 0, Errc::empty_after_pruning, "r carries no mass");

    TrimResult tres = trim(r, qc, Rat(1, 6));
    certs.push_back(check_ge_rat("split.trim-mass", tres.a_mass, Rat(1, 2)));
    JointDist r1(qc.nx, qc.ny, nmc);
    for (size_t cx = 0; cx < qc.nx; ++cx)
        for (size_t cy = 0; cy < qc.ny; ++cy)
            for (size_t cm = 0; cm < nmc; ++cm)
                if (tres.contains(cx, cy, cm)) r1.at(cx, cy, cm) = r.at(cx, cy, cm) / tres.a_mass;

    bool qt_ok = true, final_ok = true;
    for (size_t cm = 0; cm < nmc; ++cm) {
        Rat r1m = r1.mass_m(cm);
        if (r1m == 0 || r_mass_cm[cm] == 0) continue;
        Rat qt_num(0);
        for (size_t cx = 0; cx < qc.nx; ++cx)
            for (size_t cy = 0; cy < qc.ny; ++cy)
                if (in_r[(cx * qc.ny + cy) * nmc + cm] && tres.contains(cx, cy, cm))
                    qt_num += qc.at(cx, cy, cm);
        Rat qt = qt_num / r_mass_cm[cm];
        if (qt * 12 < 1) qt_ok = false;
        Rat r1_sgn(0);
        for (size_t cx = 0; cx < qc.nx; ++cx)
            for (size_t cy = 0; cy < qc.ny; ++cy)
                r1_sgn += sv.h.sign(cx, cy) * r1.at(cx, cy, cm);
        if (b_mass_cm[cm] == 0 || qt == 0) continue;
        Rat factor = Rat(1) - delta * delta - delta / qt;
        Rat b_adv = abs_rat(b_sgn_cm[cm]) / b_mass_cm[cm];
        if (factor <= 0 || b_adv == 0) continue;  // vacuous
        Rat lhs = abs_rat(r1_sgn) / r1m;
        PowProd rhs = PowProd::of(factor);
        rhs.mul(r_mass_cm[cm] / b_mass_cm[cm], -delta);
        rhs.mul(b_adv, Rat(1));
        if (lhs == 0 || PowProd::cmp(PowProd::of(lhs), rhs) < 0) final_ok = false;
    }
    certs.push_back(check_flag("split.trim-mass-cert", qt_ok));
    certs.push_back(check_flag("split.final-adv-factor", final_ok));

    SideOutcome out;
    out.cost = marginal_cost(r1, pc, sv.h, params);
    out.r_final = std::move(r1);
    out.certs = std::move(certs);
    return out;
}

}  // namespace

ChildPair split(const SplitInstance& si, const CostParams& params, const EnumerationCaps& caps) {
    const ProtocolDist& p = *si.p;
    const JointDist& pj = p.joint();
    const JointDist& qj = si.q;
    const SplitShape& sh = si.shape;
    size_t nm = pj.nm;

    // precondition gate: the split-input multiplicativity identities
    MultiplicativityReport mrep = check_multiplicativity(qj, sh);
    require(mrep.all(), Errc::identity_violation, "q fails the rectangularity identities");

    ChildPair cp = build_children(si);
    require(all_pass(cp.identity_checks), Errc::identity_violation,
            "identity stage failed for the split instance");

    // parent cost of q against p for f xor g
    BoolFn h;
    h.nx = pj.nx;
    h.ny = pj.ny;
    h.t.resize(pj.nx * pj.ny);
    for (size_t x = 0; x < pj.nx; ++x)
        for (size_t y = 0; y < pj.ny; ++y)
            h.t[x * pj.ny + y] = si.f(sh.x1(x), sh.y1(y)) ^ si.g(sh.x2(x), sh.y2(y));
    CostReport parent = marginal_cost(qj, pj, h, params);
    require(parent.finite, Errc::infinite_cost, "parent witness has infinite cost");
    cp.parent_cost_bits = parent.bits();

    // G: w-measurable advantage-preserving maximizer
    GPerMResult gres = build_g_per_m(qj, sh, si.f, si.g, params.delta, caps);
    for (const Check& c : gres.checks) cp.certificates.push_back(c);

    // q(G|m) per base message
    std::vector<Rat> q_g_given_m(nm, Rat(0));
    for (size_t m = 0; m < nm; ++m) {
        Rat qm = qj.mass_m(m), gm(0);
        if (qm == 0) continue;
        for (size_t x = 0; x < qj.nx; ++x)
            for (size_t y = 0; y < qj.ny; ++y)
                if (gres.g.at(sh.x1(x), sh.y2(y), m)) gm += qj.at(x, y, m);
        q_g_given_m[m] = gm / qm;
    }

    ChildIndex ci1 = make_child_index(p.transcripts(), sh.ny2, 1);
    ChildIndex ci2 = make_child_index(p.transcripts(), sh.nx1, 2);
    SideView s1{&cp.q1, &cp.p1, si.f, true, &ci1};
    SideView s2{&cp.q2, &cp.p2, si.g, false, &ci2};

    // pointwise product bound at every w in supp(G):
    // A1(w) A2(w) <= 2^M ((1-d)^{-1/d} q(G|m))^{12 I}
    {
        bool ok = true;
        PowProd base_c = PowProd::of(Rat(1) - params.delta, Rat(-1) / params.delta);
        for (size_t x1 = 0; x1 < sh.nx1; ++x1)
            for (size_t y2 = 0; y2 < sh.ny2; ++y2)
                for (size_t m = 0; m < nm; ++m) {
                    if (!gres.g.at(x1, y2, m)) continue;
                    size_t cm1 = ci1.idx(m, y2), cm2 = ci2.idx(m, x1);
                    std::optional<PowProd> a1 = s1.a_value(x1, cm1, params);
                    std::optional<PowProd> a2 = s2.a_value(y2, cm2, params);
                    if (!a1 || !a2) continue;
                    PowProd lhs = *a1;
                    lhs.mul(*a2);
                    PowProd rhs = parent.value;
                    PowProd cg = base_c;
                    cg.mul(q_g_given_m[m], Rat(1));
                    rhs.mul(cg.pow(Rat(12) * params.I));
                    if (PowProd::cmp(lhs, rhs) > 0) ok = false;
                }
        cp.certificates.push_back(check_flag("split.pointwise-product", ok));
    }

    // L: w where the side-1 share is below the gamma split
    std::vector<uint8_t> l1(s1.nwc() * cp.q1.nm, 0);
    std::vector<uint8_t> l2(s2.nwc() * cp.q2.nm, 0);
    for (size_t x1 = 0; x1 < sh.nx1; ++x1)
        for (size_t y2 = 0; y2 < sh.ny2; ++y2)
            for (size_t m = 0; m < nm; ++m) {
                if (!gres.g.at(x1, y2, m)) continue;
                size_t cm1 = ci1.idx(m, y2), cm2 = ci2.idx(m, x1);
                std::optional<PowProd> a1 = s1.a_value(x1, cm1, params);
                std::optional<PowProd> a2 = s2.a_value(y2, cm2, params);
                bool in_l;  // missing A-values stand for an infinite side
                if (!a1 && !a2)
                    in_l = true;
                else if (!a1)
                    in_l = false;
                else if (!a2)
                    in_l = true;
                else
                    in_l = PowProd::cmp(a1->pow(Rat(1) / si.gamma),
                                        a2->pow(Rat(1) / (Rat(1) - si.gamma))) <= 0;
                if (in_l)
                    l1[x1 * cp.q1.nm + cm1] = 1;
                else
                    l2[y2 * cp.q2.nm + cm2] = 1;
            }

    // U: messages where L covers at least half of G; side choice by q(U)
    std::vector<uint8_t> u1(nm, 0), u2(nm, 0);
    Rat u1_mass(0);
    Rat total_q(0);
    for (size_t m = 0; m < nm; ++m) {
        Rat qm = qj.mass_m(m);
        total_q += qm;
        if (qm == 0) continue;
        Rat g_mass(0), l_mass(0);
        for (size_t x = 0; x < qj.nx; ++x)
            for (size_t y = 0; y < qj.ny; ++y) {
                if (!gres.g.at(sh.x1(x), sh.y2(y), m)) continue;
                g_mass += qj.at(x, y, m);
                size_t cm1 = ci1.idx(m, sh.y2(y));
                if (l1[sh.x1(x) * cp.q1.nm + cm1]) l_mass += qj.at(x, y, m);
            }
        if (g_mass == 0) continue;
        if (l_mass * 2 >= g_mass) {
            u1[m] = 1;
            u1_mass += qm;
        } else {
            u2[m] = 1;
        }
    }
    cp.chosen_side = u1_mass * 2 >= total_q ? 1 : 2;

    // alpha bound: [2^{gamma M} (1-d)^{-12 gamma I/d} 32^I 8]^{d/(12I)}
    Rat gamma_side = cp.chosen_side == 1 ? si.gamma : Rat(1) - si.gamma;
    PowProd alpha_cap = parent.value.pow(gamma_side);
    alpha_cap.mul(PowProd::of(Rat(1) - params.delta,
                              -Rat(12) * gamma_side * params.I / params.delta));
    alpha_cap.mul(Rat(32), params.I);
    alpha_cap.mul(Rat(8), Rat(1));
    alpha_cap = alpha_cap.pow(params.delta / (Rat(12) * params.I));

    SideOutcome so = cp.chosen_side == 1
                         ? reduce_side(s1, l1, u1, q_g_given_m, alpha_cap, params)
                         : reduce_side(s2, l2, u2, q_g_given_m, alpha_cap, params);
    for (const Check& c : so.certs) cp.certificates.push_back(c);
    cp.r_final = std::move(so.r_final);
    cp.child_cost = so.cost;

    // realized constant: child cost - gamma * parent - 3 I log2(M/I), logged
    if (so.cost.finite) {
        double m_bits = parent.bits();
        double i_d = rat_double(params.I);
        double expect = rat_double(gamma_side) * m_bits;
        if (m_bits > i_d) expect += 3 * i_d * std::log2(m_bits / i_d);
        cp.realized_constant_bits = so.cost.bits() - expect;
        Check c = check_flag("split.child-cost", true);
        c.lhs = std::to_string(so.cost.bits());
        c.rhs = "gamma*M + 3I log2(M/I) + c, c_realized = " +
                std::to_string(cp.realized_constant_bits);
        cp.certificates.push_back(c);
    }
    return cp;
}

ProtocolDist child_protocol(const SplitInstance& si, int side) {
    const ProtocolDist& p = *si.p;
    const TranscriptSpace& ts = p.transcripts();
    require(ts.rounds() >= 2, Errc::shape_mismatch, "split needs at least one message round");
    const SplitShape& sh = si.shape;
    const JointDist& qj = si.q;
    PrefixTables pt{&qj, &ts, sh, {}};

    auto label = [](const std::string& a, const std::string& b) { return a + "." + b; };

    if (side == 1) {
        // inputs (x1, y1); first message carries (y2, m1)
        InputSpace space;
        for (size_t x1 = 0; x1 < sh.nx1; ++x1) space.x_labels.push_back("x" + std::to_string(x1));
        for (size_t y1 = 0; y1 < sh.ny1; ++y1) space.y_labels.push_back("y" + std::to_string(y1));
        std::vector<Rat> mu(sh.nx1 * sh.ny1, Rat(0));
        const JointDist& pj = p.joint();
        for (size_t x = 0; x < pj.nx; ++x)
            for (size_t y = 0; y < pj.ny; ++y)
                mu[sh.x1(x) * sh.ny1 + sh.y1(y)] += pj.mass_xy(x, y);
        std::vector<RoundSpec> rounds;
        rounds.push_back(p.rounds()[0]);
        {
            RoundSpec r1{Owner::alice, {}};
            for (size_t y2 = 0; y2 < sh.ny2; ++y2)
                for (const std::string& a : p.rounds()[1].alphabet)
                    r1.alphabet.push_back(label("s" + std::to_string(y2), a));
            rounds.push_back(r1);
        }
        for (size_t i = 2; i < ts.rounds(); ++i) rounds.push_back(p.rounds()[i]);
        ProtocolDist out(space, mu, rounds);
        TranscriptSpace ots(rounds);
        // round 0
        out.set_conditional(0, 0, {}, p.conditional(0, 0, 0));
        // round 1: P((y2, m1) | x1, m0) = q(y2|x1 m0) q(m1|x1 y2 m0)
        for (size_t x1 = 0; x1 < sh.nx1; ++x1)
            for (size_t d0 = 0; d0 < ts.radix[0]; ++d0) {
                std::vector<Rat> row;
                for (size_t y2 = 0; y2 < sh.ny2; ++y2)
                    for (size_t d1 = 0; d1 < ts.radix[1]; ++d1) {
                        std::vector<int> md(ts.rounds(), 0);
                        md[0] = static_cast<int>(d0);
                        md[1] = static_cast<int>(d1);
                        size_t m = ts.index(md);
                        Rat den0 = pt.get(x1, sh.ny2, 1, ts.prefix_key(m, 1));
                        Rat py2 = den0 == 0 ? Rat(1, static_cast<long>(sh.ny2))
                                            : pt.get(x1, y2, 1, ts.prefix_key(m, 1)) / den0;
                        Rat den1 = pt.get(x1, y2, 1, ts.prefix_key(m, 1));
                        Rat pm1 = den1 == 0
                                      ? Rat(1, static_cast<long>(ts.radix[1]))
                                      : pt.get(x1, y2, 2, ts.prefix_key(m, 2)) / den1;
                        row.push_back(py2 * pm1);
                    }
                out.set_conditional(1, x1, {static_cast<int>(d0)}, row);
            }
        // rounds >= 2
        for (size_t i = 2; i < ts.rounds(); ++i) {
            bool alice = p.rounds()[i].owner == Owner::alice;
            size_t ninp = alice ? sh.nx1 : sh.ny1;
            // iterate child prefixes
            size_t npfx = 1;
            for (size_t k = 0; k < i; ++k) npfx *= ots.radix[k];
            for (size_t inp = 0; inp < ninp; ++inp)
                for (size_t pk = 0; pk < npfx; ++pk) {
                    std::vector<int> cd(i);
                    size_t rem = pk;
                    for (size_t k = 0; k < i; ++k) {
                        cd[k] = static_cast<int>(rem % ots.radix[k]);
                        rem /= ots.radix[k];
                    }
                    size_t y2 = static_cast<size_t>(cd[1]) / ts.radix[1];
                    std::vector<int> md(ts.rounds(), 0);
                    md[0] = cd[0];
                    md[1] = static_cast<int>(static_cast<size_t>(cd[1]) % ts.radix[1]);
                    for (size_t k = 2; k < i; ++k) md[k] = cd[k];
                    size_t m = ts.index(md);
                    std::vector<Rat> row;
                    if (alice) {
                        Rat den = pt.get(inp, y2, i, ts.prefix_key(m, i));
                        for (size_t d = 0; d < ts.radix[i]; ++d) {
                            if (den == 0) {
                                row.push_back(Rat(1, static_cast<long>(ts.radix[i])));
                                continue;
                            }
                            md[i] = static_cast<int>(d);
                            row.push_back(pt.get(inp, y2, i + 1, ts.prefix_key(ts.index(md), i + 1)) /
                                          den);
                        }
                    } else {
                        size_t yfull = 0;
                        for (size_t yy = 0; yy < p.joint().ny; ++yy)
                            if (sh.y1(yy) == inp && sh.y2(yy) == y2) yfull = yy;
                        if (p.has_conditional(i, yfull, ts.prefix_key(m, i))) {
                            row = p.conditional(i, yfull, ts.prefix_key(m, i));
                        } else {
                            row.assign(ts.radix[i], Rat(1, static_cast<long>(ts.radix[i])));
                        }
                    }
                    std::vector<int> prefix(cd.begin(), cd.end());
                    out.set_conditional(i, inp, prefix, row);
                }
        }
        return out;
    }

    require(side == 2, Errc::config_error, "side must be 1 or 2");
    // inputs (x2, y2); public round carries (m0, x1)
    InputSpace space;
    for (size_t x2 = 0; x2 < sh.nx2; ++x2) space.x_labels.push_back("x" + std::to_string(x2));
    for (size_t y2 = 0; y2 < sh.ny2; ++y2) space.y_labels.push_back("y" + std::to_string(y2));
    std::vector<Rat> mu(sh.nx2 * sh.ny2, Rat(0));
    const JointDist& pj = p.joint();
    for (size_t x = 0; x < pj.nx; ++x)
        for (size_t y = 0; y < pj.ny; ++y)
            mu[sh.x2(x) * sh.ny2 + sh.y2(y)] += pj.mass_xy(x, y);
    std::vector<RoundSpec> rounds;
    {
        RoundSpec r0{Owner::pub, {}};
        for (size_t x1 = 0; x1 < sh.nx1; ++x1)
            for (const std::string& a : p.rounds()[0].alphabet)
                r0.alphabet.push_back(label("s" + std::to_string(x1), a));
        rounds.push_back(r0);
    }
    for (size_t i = 1; i < ts.rounds(); ++i) rounds.push_back(p.rounds()[i]);
    ProtocolDist out(space, mu, rounds);
    TranscriptSpace ots(rounds);
    {
        std::vector<Rat> row;
        for (size_t x1 = 0; x1 < sh.nx1; ++x1)
            for (size_t d0 = 0; d0 < ts.radix[0]; ++d0) {
                std::vector<int> md(ts.rounds(), 0);
                md[0] = static_cast<int>(d0);
                row.push_back(pt.get(x1, sh.ny2, 1, ts.prefix_key(ts.index(md), 1)));
            }
        out.set_conditional(0, 0, {}, row);
    }
    for (size_t i = 1; i < ts.rounds(); ++i) {
        bool alice = p.rounds()[i].owner == Owner::alice;
        size_t ninp = alice ? sh.nx2 : sh.ny2;
        size_t npfx = 1;
        for (size_t k = 0; k < i; ++k) npfx *= ots.radix[k];
        for (size_t inp = 0; inp < ninp; ++inp)
            for (size_t pk = 0; pk < npfx; ++pk) {
                std::vector<int> cd(i);
                size_t rem = pk;
                for (size_t k = 0; k < i; ++k) {
                    cd[k] = static_cast<int>(rem % ots.radix[k]);
                    rem /= ots.radix[k];
                }
                size_t x1 = static_cast<size_t>(cd[0]) / ts.radix[0];
                std::vector<int> md(ts.rounds(), 0);
                md[0] = static_cast<int>(static_cast<size_t>(cd[0]) % ts.radix[0]);
                for (size_t k = 1; k < i; ++k) md[k] = cd[k];
                size_t m = ts.index(md);
                std::vector<Rat> row;
                if (alice) {
                    size_t xfull = 0;
                    for (size_t xx = 0; xx < pj.nx; ++xx)
                        if (sh.x1(xx) == x1 && sh.x2(xx) == inp) xfull = xx;
                    if (p.has_conditional(i, xfull, ts.prefix_key(m, i))) {
                        row = p.conditional(i, xfull, ts.prefix_key(m, i));
                    } else {
                        row.assign(ts.radix[i], Rat(1, static_cast<long>(ts.radix[i])));
                    }
                } else {
                    Rat den = pt.get(x1, inp, i, ts.prefix_key(m, i));
                    for (size_t d = 0; d < ts.radix[i]; ++d) {
                        if (den == 0) {
                            row.push_back(Rat(1, static_cast<long>(ts.radix[i])));
                            continue;
                        }
                        md[i] = static_cast<int>(d);
                        row.push_back(pt.get(x1, inp, i + 1, ts.prefix_key(ts.index(md), i + 1)) /
                                      den);
                    }
                }
                std::vector<int> prefix(cd.begin(), cd.end());
                out.set_conditional(i, inp, prefix, row);
            }
    }
    return out;
}

HalveResult halve_driver(const ProtocolDist& p, const JointDist& q, const BoolFn& f_single,
                         size_t n, const CostParams& params, const EnumerationCaps& caps) {
    require(n == 2 || n == 4, Errc::cap_exceeded, "driver handles n in {2, 4}");
    HalveResult out{p, q, f_single, {}, {}};
    size_t copies = n;
    ProtocolDist cur_p = p;
    JointDist cur_q = q;
    while (copies > 1) {
        size_t half = copies / 2;
        size_t per_x = f_single.nx, per_y = f_single.ny;
        SplitShape sh{1, 1, 1, 1};
        sh.nx1 = 1;
        sh.ny1 = 1;
        for (size_t i = 0; i < half; ++i) {
            sh.nx1 *= per_x;
            sh.ny1 *= per_y;
        }
        sh.nx2 = cur_p.joint().nx / sh.nx1;
        sh.ny2 = cur_p.joint().ny / sh.ny1;
        BoolFn fs = xor_lift(f_single, half, caps);
        SplitInstance si{&cur_p, cur_q, fs, fs, sh, Rat(static_cast<long>((copies + 1) / 2),
                                                        static_cast<long>(copies))};
        ChildPair cp = split(si, params, caps);
        for (const Check& c : cp.certificates) out.checks.push_back(c);
        HalveLevel lvl{copies, cp.parent_cost_bits,
                       cp.child_cost.finite ? cp.child_cost.bits() : -1, cp.chosen_side};
        out.levels.push_back(lvl);
        ProtocolDist next_p = child_protocol(si, cp.chosen_side);
        // message-count invariant: same number of messages as the parent
        out.checks.push_back(check_flag(
            "split.message-count", next_p.num_messages() == cur_p.num_messages()));
        // the child protocol's joint must match the pipeline's table
        const JointDist& want = cp.chosen_side == 1 ? cp.p1 : cp.p2;
        bool same = next_p.joint().same_shape(want);
        if (same)
            for (size_t i = 0; i < want.w.size(); ++i)
                if (next_p.joint().w[i] != want.w[i]) same = false;
        out.checks.push_back(check_flag("split.child-protocol-joint", same));
        cur_p = std::move(next_p);
        cur_q = cp.r_final;
        copies = half;
    }
    out.leaf_p = std::move(cur_p);
    out.leaf_q = std::move(cur_q);
    out.leaf_f = f_single;
    return out;
}

}  // namespace pcw
