#include "pcw/construct.hpp"

namespace pcw {

namespace {

Rat abs_rat(const Rat& r) { return r >= 0 ? r : Rat(-r); }

// E_{d(m)} |E_{d(xy|m)} [(-1)^f]| = sum_m |signed mass|
Rat average_abs_adv(const JointDist& d, const BoolFn& f) {
    Rat out(0);
    for (size_t m = 0; m < d.nm; ++m) {
        Rat s(0);
        for (size_t x = 0; x < d.nx; ++x)
            for (size_t y = 0; y < d.ny; ++y) s += f.sign(x, y) * d.at(x, y, m);
        out += abs_rat(s);
    }
    return out;
}

}  // namespace

ConstructionTrace construct_witness(const ProtocolDist& p, const BoolFn& f,
                                    const CostParams& params, const EnumerationCaps& caps) {
    params.check();
    const JointDist& pj = p.joint();
    size_t nx = pj.nx, ny = pj.ny, nm = pj.nm;
    const Rat& delta = params.delta;
    long cbits = p.comm_bits();

    ConstructionTrace tr;
    tr.avg_adv = average_abs_adv(pj, f);
    require(tr.avg_adv != 0, Errc::degenerate_advantage,
            "average advantage is zero; no finite-cost witness on this route");

    // maximizer of p(R)^delta E_{p(m|R)} |E_{p(xy|mR)}[(-1)^f]|
    tr.r = maximize_rect(pj, f, delta, caps);
    tr.p_r = mass_of(pj, tr.r);

    // Markov filter: keep points of R with 1/p(m|x), 1/p(m|y) <= 4 2^C / p(R)
    Rat cap = Rat(4) * rat_pow2(cbits) / tr.p_r;
    tr.g = tr.r;
    for (size_t x = 0; x < nx; ++x) {
        Rat px = pj.mass_x(x);
        for (size_t m = 0; m < nm; ++m) {
            if (!tr.g.in_a[x * nm + m]) continue;
            Rat pmx = px == 0 ? Rat(0) : pj.mass_xm(x, m) / px;
            if (pmx == 0 || Rat(1) / pmx > cap) tr.g.in_a[x * nm + m] = 0;
        }
    }
    for (size_t y = 0; y < ny; ++y) {
        Rat py = pj.mass_y(y);
        for (size_t m = 0; m < nm; ++m) {
            if (!tr.g.in_b[y * nm + m]) continue;
            Rat pmy = py == 0 ? Rat(0) : pj.mass_ym(y, m) / py;
            if (pmy == 0 || Rat(1) / pmy > cap) tr.g.in_b[y * nm + m] = 0;
        }
    }
    Rat p_g = mass_of(pj, tr.g);
    require(p_g > 0, Errc::empty_after_pruning, "Markov filter removed all of R");
    tr.p_g_given_r = p_g / tr.p_r;
    tr.certificates.push_back(
        check_ge_rat("construct.markov-mass", tr.p_g_given_r, Rat(1, 2)));

    // trim p(.|G) against p with kappa = 1/6 and keep T inside G
    JointDist pg = conditioned(pj, tr.g);
    TrimResult trim_res = trim(pg, pj, Rat(1, 6));
    tr.t = tr.g;
    for (size_t i = 0; i < tr.t.in_a.size(); ++i) tr.t.in_a[i] &= trim_res.t.in_a[i];
    for (size_t i = 0; i < tr.t.in_b.size(); ++i) tr.t.in_b[i] &= trim_res.t.in_b[i];
    Rat p_t = mass_of(pj, tr.t);
    require(p_t > 0, Errc::empty_after_pruning, "trimming removed all of G");
    tr.p_t_given_g = p_t / p_g;
    tr.certificates.push_back(check_ge_rat("construct.trim-mass", p_t / tr.p_r, Rat(1, 4)));

    // pointwise density ratio: p(xym|T)/p(xym) = 1/p(T) <= 4/p(R)
    tr.certificates.push_back(
        check_le_rat("construct.density-ratio", Rat(1) / p_t, Rat(4) / tr.p_r));

    // pointwise conditional ratios over supp(p(.|T))
    JointDist pt = conditioned(pj, tr.t);
    Rat bound_cond = Rat(96) * rat_pow2(cbits) / (tr.p_r * tr.p_r);
    Rat max_rx(0), max_ry(0);
    for (size_t x = 0; x < nx; ++x)
        for (size_t y = 0; y < ny; ++y)
            for (size_t m = 0; m < nm; ++m) {
                const Rat& v = pt.at(x, y, m);
                if (v == 0) continue;
                Rat rx = (v / pt.mass_ym(y, m)) / (pj.mass_xy(x, y) / pj.mass_y(y));
                Rat ry = (v / pt.mass_xm(x, m)) / (pj.mass_xy(x, y) / pj.mass_x(x));
                max_rx = std::max(max_rx, rx);
                max_ry = std::max(max_ry, ry);
            }
    tr.certificates.push_back(check_le_rat("construct.cond-ratio-x", max_rx, bound_cond));
    tr.certificates.push_back(check_le_rat("construct.cond-ratio-y", max_ry, bound_cond));

    // advantage factor: E_{p(m|T)} |E_{p(xy|mT)}| >= (1-d^2-4d) p(R)^-d E_{p(m)} |...|
    tr.avg_adv_trim = average_abs_adv(pt, f);
    Rat c1 = Rat(1) - delta * delta - 4 * delta;
    {
        PowProd rhs = PowProd::of(c1);
        rhs.mul(tr.p_r, -delta);
        rhs.mul(tr.avg_adv, Rat(1));
        Check c = tr.avg_adv_trim == 0
                      ? check_flag("construct.adv-factor", false, "trimmed advantage zero")
                      : check_ge("construct.adv-factor", PowProd::of(tr.avg_adv_trim), rhs);
        tr.certificates.push_back(c);
    }

    // message filter: keep m with |E_{p(xy|mT)}| >= avg/2
    tr.q_set = tr.t;
    Rat half_avg = tr.avg_adv_trim / 2;
    for (size_t m = 0; m < nm; ++m) {
        Rat mass(0), sgn(0);
        for (size_t x = 0; x < nx; ++x)
            for (size_t y = 0; y < ny; ++y) {
                mass += pt.at(x, y, m);
                sgn += f.sign(x, y) * pt.at(x, y, m);
            }
        bool keep = mass > 0 && abs_rat(sgn) >= half_avg * mass;
        if (!keep)
            for (size_t x = 0; x < nx; ++x) tr.q_set.in_a[x * nm + m] = 0;
    }
    Rat p_q = mass_of(pj, tr.q_set);
    require(p_q > 0, Errc::empty_after_pruning, "message filter removed everything");
    tr.p_q_given_t = p_q / p_t;
    tr.certificates.push_back(
        check_ge_rat("construct.message-filter-mass", tr.p_q_given_t, half_avg));
    {
        // every kept message retains at least half the average advantage
        bool ok = true;
        JointDist pq = conditioned(pj, tr.q_set);
        for (size_t m = 0; m < nm; ++m) {
            Rat mass(0), sgn(0);
            for (size_t x = 0; x < nx; ++x)
                for (size_t y = 0; y < ny; ++y) {
                    mass += pq.at(x, y, m);
                    sgn += f.sign(x, y) * pq.at(x, y, m);
                }
            if (mass == 0) continue;
            if (abs_rat(sgn) < half_avg * mass) ok = false;
        }
        tr.certificates.push_back(check_flag("construct.message-filter-adv", ok));
    }

    tr.q_final = RectDist::conditioned_on(p, tr.q_set);
    tr.final_cost = marginal_cost(tr.q_final.joint(), pj, f, params);
    require(tr.final_cost.finite, Errc::internal, "constructed witness has infinite cost");

    // explicit cost bound assembled from the proof chain:
    // 2^M <= 96^2 2^{2C} 4^I (2/c1)^{(1+12/d) I} E^{-(1+12/d) I}
    {
        Rat e181 = (Rat(1) + Rat(12) / delta) * params.I;
        PowProd rhs = PowProd::of(Rat(96 * 96));
        rhs.mul(Rat(2), Rat(2 * cbits));
        rhs.mul(Rat(4), params.I);
        rhs.mul(Rat(2) / c1, e181);
        rhs.mul(tr.avg_adv, -e181);
        tr.certificates.push_back(check_le("construct.cost-bound", tr.final_cost.value, rhs));
    }
    return tr;
}

}  // namespace pcw
