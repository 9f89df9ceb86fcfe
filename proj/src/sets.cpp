#include "pcw/sets.hpp"

#include <algorithm>
#include <map>

namespace pcw {

namespace {

Rat abs_rat(const Rat& r) { return r >= 0 ? r : Rat(-r); }

}  // namespace

TrimResult trim(const JointDist& a, const JointDist& b, const Rat& kappa) {
    require(a.same_shape(b), Errc::shape_mismatch, "trim over mismatched shapes");
    require(kappa > 0 && kappa < 1, Errc::config_error, "kappa must lie in (0,1)");
    TrimResult res;
    res.t = RectSet::full(a.nx, a.ny, a.nm);
    res.m_alive.assign(a.nm, 1);
    res.a_mass = a.total();

    auto xm_mass = [&](size_t x, size_t m) {
        Rat s(0);
        for (size_t y = 0; y < a.ny; ++y)
            if (res.t.in_b[y * a.nm + m]) s += a.at(x, y, m);
        return s;
    };
    auto ym_mass = [&](size_t y, size_t m) {
        Rat s(0);
        for (size_t x = 0; x < a.nx; ++x)
            if (res.t.in_a[x * a.nm + m]) s += a.at(x, y, m);
        return s;
    };
    auto m_mass = [&](size_t m) {
        Rat s(0);
        for (size_t x = 0; x < a.nx; ++x)
            for (size_t y = 0; y < a.ny; ++y)
                if (res.t.contains(x, y, m)) s += a.at(x, y, m);
        return s;
    };

    // pinned scan order: xm rules, then ym, then m, each lexicographic;
    // restart after every firing
    bool fired = true;
    while (fired) {
        fired = false;
        for (size_t x = 0; x < a.nx && !fired; ++x)
            for (size_t m = 0; m < a.nm && !fired; ++m) {
                if (!res.t.in_a[x * a.nm + m] || !res.m_alive[m]) continue;
                Rat bxm = b.mass_xm(x, m);
                if (bxm == 0) continue;
                Rat mass = xm_mass(x, m);
                if (mass < kappa * bxm * res.a_mass) {
                    res.t.in_a[x * a.nm + m] = 0;
                    res.deleted_log.push_back({0, x, m, mass});
                    res.a_mass -= mass;
                    fired = true;
                }
            }
        if (fired) continue;
        for (size_t y = 0; y < a.ny && !fired; ++y)
            for (size_t m = 0; m < a.nm && !fired; ++m) {
                if (!res.t.in_b[y * a.nm + m] || !res.m_alive[m]) continue;
                Rat bym = b.mass_ym(y, m);
                if (bym == 0) continue;
                Rat mass = ym_mass(y, m);
                if (mass < kappa * bym * res.a_mass) {
                    res.t.in_b[y * a.nm + m] = 0;
                    res.deleted_log.push_back({1, y, m, mass});
                    res.a_mass -= mass;
                    fired = true;
                }
            }
        if (fired) continue;
        for (size_t m = 0; m < a.nm && !fired; ++m) {
            if (!res.m_alive[m]) continue;
            Rat am = a.mass_m(m);
            if (am == 0) continue;
            Rat mass = m_mass(m);
            if (mass < kappa * am * res.a_mass) {
                res.m_alive[m] = 0;
                res.deleted_log.push_back({2, m, m, mass});
                res.a_mass -= mass;
                fired = true;
            }
        }
    }
    // fold m deletions into the A side so the result is a single rect set
    for (size_t x = 0; x < a.nx; ++x)
        for (size_t m = 0; m < a.nm; ++m)
            if (!res.m_alive[m]) res.t.in_a[x * a.nm + m] = 0;
    return res;
}

namespace {

struct PerMessage {
    std::vector<Rat> mass, sgn;  // indexed amask * 2^ny + bmask
};

std::vector<PerMessage> per_message_tables(const JointDist& v, const BoolFn& f) {
    std::vector<PerMessage> out(v.nm);
    size_t na = 1ull << v.nx, nb = 1ull << v.ny;
    for (size_t m = 0; m < v.nm; ++m) {
        out[m].mass.assign(na * nb, Rat(0));
        out[m].sgn.assign(na * nb, Rat(0));
        for (size_t am = 0; am < na; ++am)
            for (size_t bm = 0; bm < nb; ++bm) {
                Rat mass(0), sgn(0);
                for (size_t x = 0; x < v.nx; ++x) {
                    if (!(am >> x & 1)) continue;
                    for (size_t y = 0; y < v.ny; ++y) {
                        if (!(bm >> y & 1)) continue;
                        const Rat& w = v.at(x, y, m);
                        mass += w;
                        sgn += f.sign(x, y) * w;
                    }
                }
                out[m].mass[am * nb + bm] = mass;
                out[m].sgn[am * nb + bm] = sgn;
            }
    }
    return out;
}

// Pareto frontier of (total mass, total |signed mass|) over per-message
// choices consistent with a partially fixed encoding (0/1 fixed, 2 free).
std::map<Rat, Rat> rect_pareto(const JointDist& v, const std::vector<PerMessage>& tab,
                               const std::vector<uint8_t>& fixed_a,
                               const std::vector<uint8_t>& fixed_b) {
    size_t na = 1ull << v.nx, nb = 1ull << v.ny;
    std::map<Rat, Rat> states;
    states[Rat(0)] = Rat(0);
    for (size_t m = 0; m < v.nm; ++m) {
        std::vector<std::pair<Rat, Rat>> opts;
        for (size_t am = 0; am < na; ++am) {
            bool ok = true;
            for (size_t x = 0; x < v.nx && ok; ++x) {
                uint8_t fx = fixed_a[x * v.nm + m];
                if (fx != 2 && (am >> x & 1) != fx) ok = false;
            }
            if (!ok) continue;
            for (size_t bm = 0; bm < nb; ++bm) {
                bool okb = true;
                for (size_t y = 0; y < v.ny && okb; ++y) {
                    uint8_t fy = fixed_b[y * v.nm + m];
                    if (fy != 2 && (bm >> y & 1) != fy) okb = false;
                }
                if (!okb) continue;
                opts.emplace_back(tab[m].mass[am * nb + bm], abs_rat(tab[m].sgn[am * nb + bm]));
            }
        }
        std::sort(opts.begin(), opts.end());
        opts.erase(std::unique(opts.begin(), opts.end()), opts.end());
        std::map<Rat, Rat> next;
        for (const auto& [smass, sabs] : states)
            for (const auto& [omass, oabs] : opts) {
                Rat nmass = smass + omass, nabs = sabs + oabs;
                auto it = next.find(nmass);
                if (it == next.end())
                    next.emplace(std::move(nmass), std::move(nabs));
                else if (it->second < nabs)
                    it->second = nabs;
            }
        std::map<Rat, Rat> pruned;
        Rat best_abs(-1);
        for (const auto& [mass, ab] : next)
            if (ab > best_abs) {
                pruned.emplace(mass, ab);
                best_abs = ab;
            }
        states = std::move(pruned);
        // TODO: a sum-sparse frontier representation would push this past
        // 4x4x8 instances with fine-grained masses
        require(states.size() <= 200000, Errc::cap_exceeded,
                "rectangle maximizer state space too large");
    }
    return states;
}

std::optional<PowProd> pareto_best(const std::map<Rat, Rat>& states, const Rat& delta) {
    std::optional<PowProd> best;
    double best_log = -1e300;
    for (const auto& [mass, ab] : states) {
        if (mass == 0 || ab == 0) continue;
        PowProd obj = PowProd::of(mass, delta - 1);
        obj.mul(ab, Rat(1));
        double l = obj.log2();
        if (best && l < best_log - 1e-9) continue;
        if (!best || PowProd::cmp(obj, *best) > 0) {
            best = obj;
            best_log = std::max(best_log, l);
        }
    }
    return best;
}

}  // namespace

PowProd rect_objective(const JointDist& v, const BoolFn& f, const Rat& delta, const RectSet& r) {
    Rat mass(0), abs_sum(0);
    for (size_t m = 0; m < v.nm; ++m) {
        Rat sgn(0);
        for (size_t x = 0; x < v.nx; ++x)
            for (size_t y = 0; y < v.ny; ++y)
                if (r.contains(x, y, m)) {
                    mass += v.at(x, y, m);
                    sgn += f.sign(x, y) * v.at(x, y, m);
                }
        abs_sum += abs_rat(sgn);
    }
    require(mass > 0, Errc::zero_mass_event, "objective of an empty rectangle");
    require(abs_sum > 0, Errc::degenerate_advantage, "rectangle with zero advantage mass");
    PowProd obj = PowProd::of(mass, delta - 1);
    obj.mul(abs_sum, Rat(1));
    return obj;
}

RectSet maximize_rect(const JointDist& v, const BoolFn& f, const Rat& delta,
                      const EnumerationCaps& caps) {
    require(v.nx <= caps.max_inputs && v.ny <= caps.max_inputs, Errc::cap_exceeded,
            "input space too large for the rectangle maximizer");
    require(v.nm <= caps.max_transcripts, Errc::cap_exceeded,
            "transcript space too large for the rectangle maximizer");
    std::vector<PerMessage> tab = per_message_tables(v, f);
    std::vector<uint8_t> fixed_a(v.nx * v.nm, 2), fixed_b(v.ny * v.nm, 2);
    std::optional<PowProd> opt = pareto_best(rect_pareto(v, tab, fixed_a, fixed_b), delta);
    require(opt.has_value(), Errc::degenerate_advantage,
            "every rectangle has zero advantage mass");
    // lexicographically smallest encoding: fix bits to 0 whenever the optimum
    // stays reachable
    for (size_t i = 0; i < v.nx * v.nm + v.ny * v.nm; ++i) {
        std::vector<uint8_t>& side = i < v.nx * v.nm ? fixed_a : fixed_b;
        size_t idx = i < v.nx * v.nm ? i : i - v.nx * v.nm;
        side[idx] = 0;
        std::optional<PowProd> with0 = pareto_best(rect_pareto(v, tab, fixed_a, fixed_b), delta);
        if (!with0 || PowProd::cmp(*with0, *opt) < 0) side[idx] = 1;
    }
    RectSet r;
    r.nx = v.nx;
    r.ny = v.ny;
    r.nm = v.nm;
    r.in_a.assign(fixed_a.begin(), fixed_a.end());
    r.in_b.assign(fixed_b.begin(), fixed_b.end());
    return r;
}

Check verify_adv_preserving(const JointDist& v, const BoolFn& f, const Rat& delta,
                            const RectSet& r, const RectSet& z) {
    require(z.subset_of(r), Errc::shape_mismatch, "Z must lie inside R");
    Rat vz = mass_of(v, z), vr = mass_of(v, r);
    require(vz > 0 && vr > 0, Errc::zero_mass_event, "empty Z or R");
    Rat lhs(0), full(0);
    for (size_t m = 0; m < v.nm; ++m) {
        Rat sz(0), sfull(0);
        for (size_t x = 0; x < v.nx; ++x)
            for (size_t y = 0; y < v.ny; ++y) {
                if (z.contains(x, y, m)) sz += f.sign(x, y) * v.at(x, y, m);
                sfull += f.sign(x, y) * v.at(x, y, m);
            }
        lhs += abs_rat(sz);
        full += abs_rat(sfull);
    }
    lhs /= vz;
    Rat c = Rat(1) - delta * delta - delta * vr / vz;  // 1 - d^2 - d / v(Z|R)
    if (c <= 0 || full == 0) return check_flag("advpres.subset-bound", true, "vacuous");
    if (lhs == 0) return check_flag("advpres.subset-bound", false, "left side zero");
    PowProd rhs = PowProd::of(c);
    rhs.mul(vr, -delta);
    rhs.mul(full, Rat(1));
    return check_ge("advpres.subset-bound", PowProd::of(lhs), rhs);
}

namespace {

bool lex_less(uint64_t a, uint64_t b, size_t nbits) {
    for (size_t i = 0; i < nbits; ++i) {
        int ba = a >> i & 1, bb = b >> i & 1;
        if (ba != bb) return ba < bb;
    }
    return false;
}

}  // namespace

GPerMResult build_g_per_m(const JointDist& q, const SplitShape& sh, const BoolFn& f,
                          const BoolFn& g, const Rat& delta, const EnumerationCaps& caps) {
    size_t nw = sh.nx1 * sh.ny2;
    require(nw <= 16, Errc::cap_exceeded, "w space too large for exhaustive subsets");
    (void)caps;
    GPerMResult out;
    out.g.nx1 = sh.nx1;
    out.g.ny2 = sh.ny2;
    out.g.nm = q.nm;
    out.g.in.assign(nw * q.nm, 0);

    auto h_sign = [&](size_t x, size_t y) {
        return (f(sh.x1(x), sh.y1(y)) ^ g(sh.x2(x), sh.y2(y))) ? -1 : 1;
    };

    for (size_t m = 0; m < q.nm; ++m) {
        Rat qm = q.mass_m(m);
        if (qm == 0) continue;
        std::vector<Rat> wm(nw, Rat(0)), ws(nw, Rat(0));
        for (size_t x = 0; x < q.nx; ++x)
            for (size_t y = 0; y < q.ny; ++y) {
                size_t w = sh.x1(x) * sh.ny2 + sh.y2(y);
                wm[w] += q.at(x, y, m);
                ws[w] += h_sign(x, y) * q.at(x, y, m);
            }
        uint64_t best_mask = 0;
        std::optional<PowProd> best;
        double best_log = -1e300;
        for (uint64_t mask = 1; mask < (1ull << nw); ++mask) {
            Rat mass(0), sgn(0);
            for (size_t w = 0; w < nw; ++w)
                if (mask >> w & 1) {
                    mass += wm[w];
                    sgn += ws[w];
                }
            if (mass == 0 || sgn == 0) continue;
            PowProd obj = PowProd::of(mass, delta - 1);
            obj.mul(abs_rat(sgn), Rat(1));
            double l = obj.log2();
            if (best && l < best_log - 1e-9) continue;
            if (!best) {
                best = obj;
                best_log = l;
                best_mask = mask;
                continue;
            }
            int c = PowProd::cmp(obj, *best);
            if (c > 0 || (c == 0 && lex_less(mask, best_mask, nw))) {
                best = obj;
                best_log = std::max(best_log, l);
                best_mask = mask;
            }
        }
        if (!best) continue;  // zero-advantage slice: G stays empty at this m
        Rat g_mass(0), m_sgn(0);
        for (size_t w = 0; w < nw; ++w)
            if (best_mask >> w & 1) {
                out.g.in[w * q.nm + m] = 1;
                g_mass += wm[w];
            }
        for (size_t x = 0; x < q.nx; ++x)
            for (size_t y = 0; y < q.ny; ++y) m_sgn += h_sign(x, y) * q.at(x, y, m);
        PowProd rhs = PowProd::of(Rat(1) - delta);
        rhs.mul(g_mass / qm, -delta);
        if (m_sgn == 0)
            rhs = PowProd::of(Rat(1), Rat(0));
        else
            rhs.mul(abs_rat(m_sgn) / qm, Rat(1));
        for (size_t w = 0; w < nw; ++w) {
            if (!(best_mask >> w & 1) || wm[w] == 0) continue;
            if (ws[w] == 0 && m_sgn != 0) {
                out.checks.push_back(check_flag("advpres1.pointwise", false, "zero w advantage"));
                continue;
            }
            if (m_sgn == 0) {
                out.checks.push_back(check_flag("advpres1.pointwise", true, "vacuous"));
                continue;
            }
            out.checks.push_back(
                check_ge("advpres1.pointwise", PowProd::of(abs_rat(ws[w]) / wm[w]), rhs));
        }
    }
    return out;
}

namespace {

// p(m_round | party input, m_<round) as seen by one party (its own input
// only), from full-transcript sums.
std::vector<Rat> party_view(const JointDist& j, const TranscriptSpace& ts, size_t round,
                            bool view_is_x, size_t input, size_t m) {
    std::vector<Rat> num(ts.radix[round], Rat(0));
    Rat den(0);
    size_t pk = ts.prefix_key(m, round);
    for (size_t mm = 0; mm < j.nm; ++mm) {
        if (ts.prefix_key(mm, round) != pk) continue;
        Rat mass = view_is_x ? j.mass_xm(input, mm) : j.mass_ym(input, mm);
        den += mass;
        num[static_cast<size_t>(ts.digit(mm, round))] += mass;
    }
    require(den > 0, Errc::zero_mass_event, "party view on unreachable prefix");
    for (Rat& v : num) v /= den;
    return num;
}

}  // namespace

ConsequenceSets build_consequence_sets(const RectDist& q, const ProtocolDist& p, const BoolFn& f,
                                       const CostParams& params) {
    const JointDist& qj = q.joint();
    const JointDist& pj = p.joint();
    CostReport cost = marginal_cost(qj, pj, f, params);
    require(cost.finite, Errc::infinite_cost, "consequence sets need a finite-cost witness");
    GFactorization gf = g_factorization(q, p);
    const TranscriptSpace& ts = p.transcripts();
    size_t nx = qj.nx, ny = qj.ny, nm = qj.nm;
    size_t r_count = p.num_messages();

    ConsequenceSets out;
    out.m_pow = cost.value;
    PowProd t1 = cost.value.pow(Rat(1) / params.I);  // 2^{(M+KI)/I}
    t1.mul(Rat(2), params.K);
    PowProd t3 = t1.pow(Rat(3));
    PowProd t3_inv = t1.pow(Rat(-3));
    PowProd e6 = cost.value.pow(Rat(6));  // 2^{6(M+KI)}
    e6.mul(Rat(2), Rat(6) * params.K * params.I);
    PowProd e14 = cost.value.pow(Rat(14));  // 2^{14(M+KI)} (r+1)^5
    e14.mul(Rat(2), Rat(14) * params.K * params.I);
    e14.mul(Rat(static_cast<long>(r_count + 1)), Rat(5));

    out.s_k.assign(nx * ny * nm, 0);
    out.r_k.assign(nx * ny * nm, 1);
    out.t_rounds.assign(nx * ny * nm, 1);
    out.t_commfree.assign(nx * ny * nm, 1);

    Rat s_c_mass(0), s_mass(0), rs_c_mass(0), tr_c_mass(0), tc_c_mass(0);
    for (size_t x = 0; x < nx; ++x)
        for (size_t y = 0; y < ny; ++y)
            for (size_t m = 0; m < nm; ++m) {
                size_t id = (x * ny + y) * nm + m;
                const Rat& g1 = gf.g1_at(x, m);
                const Rat& g2 = gf.g2_at(y, m);
                bool in_s = false;
                if (g1 > 0 && g2 > 0) {
                    Rat val = rat_pow2(ceil_log2(g1)) * g2;
                    in_s = PowProd::of(val) <= t3 && PowProd::of(val) >= t3_inv;
                }
                out.s_k[id] = in_s;

                bool in_r = true, in_tr = true, in_tc = true;
                if (pj.at(x, y, m) != 0) {
                    if (ts.rounds() >= 2) {
                        int v1 = ts.digit(m, 1);
                        Rat ax = p.conditional(1, x, ts.prefix_key(m, 1))[static_cast<size_t>(v1)];
                        Rat by = party_view(pj, ts, 1, false, y, m)[static_cast<size_t>(v1)];
                        if (by == 0) {
                            in_r = ax == 0;
                        } else {
                            PowProd rhs = e6;
                            rhs.mul(by, Rat(1));
                            in_r = ax == 0 || PowProd::of(ax) <= rhs;
                        }
                    }
                    for (size_t i = 1; i < ts.rounds() && in_tr; ++i) {
                        size_t inp = p.owner_input(i, x, y);
                        Rat own = p.conditional(i, inp, ts.prefix_key(m, i))
                                      [static_cast<size_t>(ts.digit(m, i))];
                        Rat vx =
                            party_view(pj, ts, i, true, x, m)[static_cast<size_t>(ts.digit(m, i))];
                        Rat vy =
                            party_view(pj, ts, i, false, y, m)[static_cast<size_t>(ts.digit(m, i))];
                        for (const Rat& other : {vx, vy}) {
                            if (own == 0) continue;
                            if (other == 0) {
                                in_tr = false;
                                continue;
                            }
                            PowProd rhs = e14;
                            rhs.mul(other, Rat(1));
                            if (!(PowProd::of(own) <= rhs)) in_tr = false;
                        }
                    }
                    Rat pm_xy = pj.at(x, y, m) / pj.mass_xy(x, y);
                    Rat pm_x = pj.mass_xm(x, m) / pj.mass_x(x);
                    Rat pm_y = pj.mass_ym(y, m) / pj.mass_y(y);
                    Rat mn = std::min(pm_x, pm_y);
                    if (pm_xy != 0) {
                        if (mn == 0) {
                            in_tc = false;
                        } else {
                            PowProd rhs = e6;
                            rhs.mul(mn, Rat(1));
                            in_tc = PowProd::of(pm_xy) <= rhs;
                        }
                    }
                }
                out.r_k[id] = in_r;
                out.t_rounds[id] = in_tr;
                out.t_commfree[id] = in_tc;

                const Rat& qv = qj.at(x, y, m);
                if (qv == 0) continue;
                if (in_s)
                    s_mass += qv;
                else
                    s_c_mass += qv;
                if (in_s && !in_r) rs_c_mass += qv;
                if (in_s && !in_tr) tr_c_mass += qv;
                if (in_s && !in_tc) tc_c_mass += qv;
            }

    require(s_mass > 0, Errc::zero_mass_event, "S_K carries no q-mass");
    auto bound = [&](long c) {
        PowProd b = t1.pow(Rat(-1));
        b.mul(Rat(c), Rat(1));
        return b;
    };
    auto le_or_empty = [&](const char* name, const Rat& mass, const Rat& denom, long c) {
        if (mass == 0) return check_flag(name, true, "complement empty");
        return check_le(name, PowProd::of(mass / denom), bound(c));
    };
    out.checks.push_back(le_or_empty("conseq.s-mass", s_c_mass, Rat(1), 5));
    out.checks.push_back(le_or_empty("conseq.r-mass", rs_c_mass, s_mass, 5));
    out.checks.push_back(le_or_empty("conseq.rounds-mass", tr_c_mass, s_mass, 22));
    out.checks.push_back(le_or_empty("conseq.commfree-mass", tc_c_mass, s_mass, 6));
    return out;
}

ConsequenceSets build_consequence_sets_external(const RectDist& q, const ProtocolDist& p,
                                                const BoolFn& f, const CostParams& params) {
    const JointDist& qj = q.joint();
    const JointDist& pj = p.joint();
    CostReport cost = external_cost(qj, pj, f, params);
    require(cost.finite, Errc::infinite_cost, "consequence sets need a finite-cost witness");
    GFactorization gf = g_factorization(q, p);
    const TranscriptSpace& ts = p.transcripts();
    size_t nx = qj.nx, ny = qj.ny, nm = qj.nm;

    ConsequenceSets out;
    out.m_pow = cost.value;
    PowProd t1 = cost.value.pow(Rat(1) / params.I);  // 2^{(M_ext + K I)/I}
    t1.mul(Rat(2), params.K);
    PowProd t3 = t1.pow(Rat(3));
    PowProd t3_inv = t1.pow(Rat(-3));
    PowProd e5 = cost.value.pow(Rat(5));  // 2^{5 (M_ext + K I)}
    e5.mul(Rat(2), Rat(5) * params.K * params.I);

    out.s_k.assign(nx * ny * nm, 0);
    out.r_k.assign(nx * ny * nm, 1);

    Rat s_c_mass(0), s_mass(0), rs_c_mass(0);
    for (size_t x = 0; x < nx; ++x)
        for (size_t y = 0; y < ny; ++y)
            for (size_t m = 0; m < nm; ++m) {
                size_t id = (x * ny + y) * nm + m;
                const Rat& g1 = gf.g1_at(x, m);
                const Rat& g2 = gf.g2_at(y, m);
                bool in_s = false;
                if (g1 > 0 && g2 > 0) {
                    Rat val = rat_pow2(ceil_log2(g1)) * g2;
                    in_s = PowProd::of(val) <= t3 && PowProd::of(val) >= t3_inv;
                }
                out.s_k[id] = in_s;
                bool in_r = true;
                if (pj.at(x, y, m) != 0 && ts.rounds() >= 2) {
                    int v1 = ts.digit(m, 1);
                    Rat ax = p.conditional(1, x, ts.prefix_key(m, 1))[static_cast<size_t>(v1)];
                    // public prior of the first message
                    Rat num(0), den(0);
                    for (size_t mm = 0; mm < nm; ++mm) {
                        if (ts.prefix_key(mm, 1) != ts.prefix_key(m, 1)) continue;
                        Rat mass = pj.mass_m(mm);
                        den += mass;
                        if (ts.digit(mm, 1) == v1) num += mass;
                    }
                    Rat prior = den == 0 ? Rat(0) : Rat(num / den);
                    if (prior == 0) {
                        in_r = ax == 0;
                    } else {
                        PowProd rhs = e5;
                        rhs.mul(prior, Rat(1));
                        in_r = ax == 0 || PowProd::of(ax) <= rhs;
                    }
                }
                out.r_k[id] = in_r;
                const Rat& qv = qj.at(x, y, m);
                if (qv == 0) continue;
                if (in_s)
                    s_mass += qv;
                else
                    s_c_mass += qv;
                if (in_s && !in_r) rs_c_mass += qv;
            }
    require(s_mass > 0, Errc::zero_mass_event, "S_K carries no q-mass");
    auto bound = [&]() {
        PowProd b = t1.pow(Rat(-1));
        b.mul(Rat(4), Rat(1));
        return b;
    };
    out.checks.push_back(s_c_mass == 0
                             ? check_flag("conseq.ext-s-mass", true, "complement empty")
                             : check_le("conseq.ext-s-mass", PowProd::of(s_c_mass), bound()));
    out.checks.push_back(rs_c_mass == 0
                             ? check_flag("conseq.ext-r-mass", true, "complement empty")
                             : check_le("conseq.ext-r-mass", PowProd::of(rs_c_mass / s_mass),
                                        bound()));
    return out;
}

std::vector<Check> check_expectation_bounds(const RectDist& q, const ProtocolDist& p,
                                            const BoolFn& f, const CostParams& params) {
    return check_expectation_bounds(q.joint(), p, f, params);
}

std::vector<Check> check_expectation_bounds(const JointDist& qj, const ProtocolDist& p,
                                            const BoolFn& f, const CostParams& params) {
    const JointDist& pj = p.joint();
    CostReport cost = marginal_cost(qj, pj, f, params);
    require(cost.finite, Errc::infinite_cost, "expectation bounds need a finite-cost witness");
    const TranscriptSpace& ts = p.transcripts();
    long c_bits = p.comm_bits();

    Rat lhs(0);
    for (size_t x = 0; x < qj.nx; ++x)
        for (size_t y = 0; y < qj.ny; ++y)
            for (size_t m = 0; m < qj.nm; ++m) {
                const Rat& qv = qj.at(x, y, m);
                if (qv == 0) continue;
                Rat sum(0);
                for (size_t i = 2; i < ts.rounds(); ++i) {
                    std::vector<Rat> ax = party_view(pj, ts, i, true, x, m);
                    std::vector<Rat> by = party_view(pj, ts, i, false, y, m);
                    for (size_t v = 0; v < ax.size(); ++v) sum += abs_rat(ax[v] - by[v]);
                }
                lhs += qv * sum;
            }
    std::vector<Check> checks;
    if (lhs == 0 || c_bits == 0) {
        checks.push_back(check_flag("conseq.pinsker-sum", lhs == 0, "left side zero"));
    } else {
        // lhs <= 8 sqrt(C M)  iff  2^{lhs^2} <= (2^M)^{64 C}
        Check c = check_le("conseq.pinsker-sum", PowProd::pow2(lhs * lhs),
                           cost.value.pow(Rat(64 * c_bits)));
        c.lhs = rat_str(lhs);
        c.rhs = "8*sqrt(C*M)";
        checks.push_back(c);
    }

    Rat adv(0);
    for (size_t m = 0; m < qj.nm; ++m) {
        Rat sgn(0);
        for (size_t x = 0; x < qj.nx; ++x)
            for (size_t y = 0; y < qj.ny; ++y) sgn += f.sign(x, y) * qj.at(x, y, m);
        adv += abs_rat(sgn);
    }
    // E >= 2^{-delta M/(12 I)} iff E^{12I/delta} 2^M >= 1
    PowProd l = PowProd::of(adv, params.adv_exponent());
    l.mul(cost.value);
    Check c = check_ge("conseq.adv-expectation", l, PowProd());
    c.lhs = rat_str(adv);
    c.rhs = "2^{-delta M/(12 I)}";
    checks.push_back(c);
    return checks;
}

}  // namespace pcw
