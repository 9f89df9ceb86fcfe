#include "pcw/compress.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pcw {

namespace {

Rat abs_rat(const Rat& r) { return r >= 0 ? r : Rat(-r); }

long floor_log2_pow(const PowProd& v) {
    long c = v.ceil_log2();
    return PowProd::cmp(v, PowProd::pow2(Rat(c))) == 0 ? c : c - 1;
}

uint64_t saturating_budget(double bits) {
    if (!(bits < 9e15)) return 1ull << 62;
    return static_cast<uint64_t>(bits) + 64;
}

// inverse-CDF sample from exact masses with a dyadic threshold
size_t sample_index(const std::vector<Rat>& mass, const SharedRandomness::Dyadic& d) {
    Rat cum(0);
    for (size_t i = 0; i < mass.size(); ++i) {
        cum += mass[i];
        if (d.le(cum)) return i;
    }
    return mass.size() - 1;
}

FiniteDist dist_over(const std::vector<std::string>& labels, std::vector<Rat> mass) {
    return FiniteDist::from_rats(labels, std::move(mass));
}

// Precomputed acceptance machinery shared by the compressors.
struct AcceptTables {
    const ProtocolDist* p;
    JointDist qj;
    GFactorization g;
    PowProd m_pow;       // 2^{M(q,p,f) + K I}
    PowProd t3;          // 2^{3 M / I}
    PowProd t3_inv;
    double m_bits;
    Rat i_param;
    std::vector<long> ceil_g1;          // per (x,m); LONG_MIN for zero g1
    std::vector<int> sign_m;            // +1 / -1 final message per m
    std::vector<long> z_lo, z_hi;       // valid z window per (y,m); lo > hi = empty
    // posterior conditionals per (round, x-view?, input, prefix-key)
    std::map<std::tuple<size_t, int, size_t, size_t>, std::vector<Rat>> view;

    const std::vector<Rat>& view_cond(size_t round, bool x_view, size_t input, size_t m) const;
};

const std::vector<Rat>& AcceptTables::view_cond(size_t round, bool x_view, size_t input,
                                                size_t m) const {
    const TranscriptSpace& ts = p->transcripts();
    auto key = std::make_tuple(round, x_view ? 1 : 0, input, ts.prefix_key(m, round));
    auto it = view.find(key);
    require(it != view.end(), Errc::internal, "missing posterior table");
    return it->second;
}

AcceptTables build_accept_tables(const ProtocolDist& p, const RectDist& q, const BoolFn& f,
                                 const CostParams& params, bool external) {
    AcceptTables at;
    at.p = &p;
    at.qj = q.joint();
    CostReport cost = external ? external_cost(at.qj, p.joint(), f, params)
                               : marginal_cost(at.qj, p.joint(), f, params);
    require(cost.finite, Errc::infinite_cost, "compressor needs a finite-cost witness");
    at.g = g_factorization(q, p);
    at.m_pow = cost.value;
    at.m_pow.mul(Rat(2), params.K * params.I);
    at.m_bits = at.m_pow.log2();
    at.i_param = params.I;
    at.t3 = at.m_pow.pow(Rat(3) / params.I);
    at.t3_inv = at.m_pow.pow(Rat(-3) / params.I);

    size_t nx = at.qj.nx, ny = at.qj.ny, nm = at.qj.nm;
    at.ceil_g1.assign(nx * nm, LONG_MIN);
    for (size_t x = 0; x < nx; ++x)
        for (size_t m = 0; m < nm; ++m)
            if (at.g.g1_at(x, m) > 0) at.ceil_g1[x * nm + m] = ceil_log2(at.g.g1_at(x, m));

    at.sign_m.assign(nm, 1);
    for (size_t m = 0; m < nm; ++m) {
        Rat s(0);
        for (size_t x = 0; x < nx; ++x)
            for (size_t y = 0; y < ny; ++y) s += f.sign(x, y) * at.qj.at(x, y, m);
        at.sign_m[m] = s >= 0 ? 1 : -1;  // ties resolved to +1
    }

    at.z_lo.assign(ny * nm, 1);
    at.z_hi.assign(ny * nm, 0);
    for (size_t y = 0; y < ny; ++y)
        for (size_t m = 0; m < nm; ++m) {
            const Rat& g2 = at.g.g2_at(y, m);
            if (g2 == 0) continue;
            // z with g2 2^z in [t3_inv, t3]
            PowProd lo = at.t3_inv;
            lo.mul(Rat(1) / g2, Rat(1));
            PowProd hi = at.t3;
            hi.mul(Rat(1) / g2, Rat(1));
            at.z_lo[y * nm + m] = lo.ceil_log2();
            at.z_hi[y * nm + m] = floor_log2_pow(hi);
        }

    const TranscriptSpace& ts = p.transcripts();
    const JointDist& pj = p.joint();
    for (size_t round = 1; round < ts.rounds(); ++round) {
        for (int xv = 0; xv <= 1; ++xv) {
            size_t ninp = xv ? nx : ny;
            // single pass: accumulate (input, prefix) -> per-digit masses
            std::map<std::pair<size_t, size_t>, std::vector<Rat>> num;
            std::map<std::pair<size_t, size_t>, Rat> den;
            for (size_t x = 0; x < pj.nx; ++x)
                for (size_t y = 0; y < pj.ny; ++y)
                    for (size_t m = 0; m < nm; ++m) {
                        const Rat& wgt = pj.at(x, y, m);
                        if (wgt == 0) continue;
                        size_t inp = xv ? x : y;
                        size_t pk = ts.prefix_key(m, round);
                        auto [it, fresh] = num.try_emplace(
                            std::make_pair(inp, pk), std::vector<Rat>(ts.radix[round], Rat(0)));
                        it->second[static_cast<size_t>(ts.digit(m, round))] += wgt;
                        den[{inp, pk}] += wgt;
                    }
            for (auto& [key, v] : num) {
                for (Rat& e : v) e /= den[key];
                at.view.emplace(std::make_tuple(round, xv, key.first, key.second), std::move(v));
            }
            // uniform filler for unreachable (input, prefix) pairs
            for (size_t inp = 0; inp < ninp; ++inp) {
                std::map<size_t, uint8_t> seen;
                for (size_t m = 0; m < nm; ++m) {
                    size_t pk = ts.prefix_key(m, round);
                    if (seen.count(pk)) continue;
                    seen[pk] = 1;
                    auto key = std::make_tuple(round, xv, inp, pk);
                    if (!at.view.count(key))
                        at.view.emplace(key, std::vector<Rat>(ts.radix[round],
                                                              Rat(1, static_cast<long>(
                                                                         ts.radix[round]))));
                }
            }
        }
    }
    return at;
}

// final acceptance of steps 5-6 shared by the compressors; returns the +-1
// sign or nullopt for abort. Counts the two closing messages.
std::optional<int> closing_acceptance(const AcceptTables& at, size_t x, size_t mA, size_t y,
                                      size_t mB, const SharedRandomness::Dyadic& eta_a,
                                      const SharedRandomness::Dyadic& eta_b, const HashFn& h,
                                      long eps_log2, CommLedger& led) {
    size_t nm = at.qj.nm;
    long cg1 = at.ceil_g1[x * nm + mA];
    bool alice_ok = cg1 != LONG_MIN;
    if (alice_ok) {
        Rat thr = at.g.g1_at(x, mA) * rat_pow2(-cg1);
        alice_ok = eta_a.le(thr);
    }
    led.send_a(static_cast<uint64_t>(eps_log2) + 1);  // hash value or abort symbol
    if (!alice_ok) return std::nullopt;
    uint64_t tag = h(cg1);

    const Rat& g2 = at.g.g2_at(y, mB);
    long zlo = at.z_lo[y * nm + mB], zhi = at.z_hi[y * nm + mB];
    long unique_z = 0;
    int matches = 0;
    for (long z = zlo; z <= zhi && matches < 2; ++z)
        if (h(z) == tag) {
            ++matches;
            unique_z = z;
        }
    led.send_b(2);  // sign or abort symbol
    if (matches != 1) return std::nullopt;
    PowProd thr_b = at.t3_inv;
    thr_b.mul(g2, Rat(1));
    thr_b.mul(Rat(2), Rat(static_cast<long>(unique_z)));
    if (!eta_b.le(thr_b)) return std::nullopt;
    return at.sign_m[mB];
}

int shared_random_sign(const SharedRandomness& sr, uint64_t stream) {
    return sr.word(stream, 999) & 1 ? 1 : -1;
}

struct GeneralCompressor : ExecProtocol {
    explicit GeneralCompressor(ProtocolDist pp) : p(std::move(pp)) {}
    ProtocolDist p;
    AcceptTables at;
    uint64_t correction_cap = 0;

    RunResult run(size_t x, size_t y, const SharedRandomness& sr,
                  uint64_t replica) const override;
};

RunResult GeneralCompressor::run(size_t x, size_t y, const SharedRandomness& sr,
                                 uint64_t replica) const {
    const TranscriptSpace& ts = p.transcripts();
    size_t rounds = ts.rounds();
    uint64_t base = replica << 8;
    RunResult rr;
    auto abort_run = [&](bool horizon = false) {
        rr.aborted = true;
        rr.horizon_exceeded = horizon;
        rr.output = shared_random_sign(sr, base + 7);
        return rr;
    };

    // step 1: shared m0, eta, rho, hash
    size_t m0 = sample_index(p.conditional(0, 0, 0), sr.unit(base, 0));
    SharedRandomness::Dyadic eta_a = sr.unit(base, 1), eta_b = sr.unit(base, 2);
    std::vector<SharedRandomness::Dyadic> rho(rounds);
    for (size_t i = 2; i < rounds; ++i) rho[i] = sr.unit(base, 8 + i);
    HashFn h(sr, base + 1, 0, 1ull << std::min<long>(eps_log2, 62));

    std::vector<int> digits(rounds, 0);
    digits[0] = static_cast<int>(m0);
    size_t m_base = ts.index(digits);

    // step 2: correlated sample of m1
    std::vector<Rat> u_mass = p.conditional(1, x, ts.prefix_key(m_base, 1));
    std::vector<Rat> v_mass = at.view_cond(1, false, y, m_base);
    FiniteDist u = dist_over(p.rounds()[1].alphabet, u_mass);
    FiniteDist v = dist_over(p.rounds()[1].alphabet, v_mass);
    PowProd two_l = at.m_pow.pow(Rat(6));
    OneRoundSample ors = one_round_sample(u, v, two_l, eps_log2, sr, base + 2);
    rr.ledger.bits_a += ors.ledger.bits_a;
    rr.ledger.send_b(1);  // bot indicator
    if (ors.horizon_exhausted) return abort_run(true);

    // tracked transcript: owner's rule at every round
    {
        std::vector<int> md(rounds, 0);
        md[0] = static_cast<int>(m0);
        md[1] = static_cast<int>(ors.a);
        for (size_t i = 2; i < rounds; ++i) {
            size_t inp = p.owner_input(i, x, y);
            const Rat& one = p.conditional(i, inp, ts.prefix_key(ts.index(md), i))[1];
            md[i] = rho[i].le(one) ? 1 : 0;
        }
        rr.tracked_m = ts.index(md);
        rr.tracked_valid = true;
    }
    if (!ors.b) return abort_run();

    // step 3: private resampling from each party's posterior
    auto fill = [&](std::vector<int>& md, bool alice, size_t from) {
        for (size_t i = std::max<size_t>(from, 2); i < rounds; ++i) {
            const std::vector<Rat>& cond =
                at.view_cond(i, alice, alice ? x : y, ts.index(md));
            md[i] = rho[i].le(cond[1]) ? 1 : 0;
        }
    };
    std::vector<int> ma(rounds, 0), mb(rounds, 0);
    ma[0] = mb[0] = static_cast<int>(m0);
    ma[1] = static_cast<int>(ors.a);
    mb[1] = static_cast<int>(*ors.b);
    fill(ma, true, 2);
    fill(mb, false, 2);

    // step 4: hash-guided correction loop
    for (uint64_t iter = 0;; ++iter) {
        if (rr.ledger.total() > budget_bits) return abort_run();
        std::vector<int> sa(ma.begin() + 1, ma.end());
        std::vector<int> sb(mb.begin() + 1, mb.end());
        FirstDiffResult fd = first_difference(sa, sb, eps_log2, sr, base + 16 + iter);
        rr.ledger.bits_a += fd.ledger.bits_a;
        rr.ledger.bits_b += fd.ledger.bits_b;
        if (fd.equal) break;
        if (iter >= correction_cap) return abort_run();
        size_t j = fd.index;  // round index (1-based over rounds 1..C)
        if (j == 1) return abort_run();  // first-message mismatch: resampling impossible
        if (j % 2 == 0) {  // Bob's round: Alice adopts his bit
            ma[j] = 1 - ma[j];
            fill(ma, true, j + 1);
        } else {
            mb[j] = 1 - mb[j];
            fill(mb, false, j + 1);
        }
    }

    // steps 5-6
    std::optional<int> sign = closing_acceptance(at, x, ts.index(ma), y, ts.index(mb), eta_a,
                                                 eta_b, h, eps_log2, rr.ledger);
    if (!sign) return abort_run();
    rr.output = *sign;
    return rr;
}

}  // namespace

std::unique_ptr<ExecProtocol> compress_general(const ProtocolDist& p, const RectDist& q,
                                               const BoolFn& f, const CostParams& params,
                                               long eps_log2_override) {
    const TranscriptSpace& ts = p.transcripts();
    for (size_t i = 2; i < ts.rounds(); ++i)
        require(ts.radix[i] <= 2, Errc::not_binary_rounds, "rounds past the first must be binary");
    auto ep = std::make_unique<GeneralCompressor>(p);
    ep->at = build_accept_tables(ep->p, q, f, params, false);
    ep->kind = "general";
    double m_over_i = ep->at.m_bits / rat_double(params.I);
    double c_bits = static_cast<double>(p.comm_bits());
    double sqrt_cm = std::sqrt(std::max(1.0, c_bits * ep->at.m_bits));
    ep->eps_log2 = eps_log2_override > 0
                       ? eps_log2_override
                       : static_cast<long>(std::ceil(11 * m_over_i + std::log2(sqrt_cm))) + 2;
    require(ep->eps_log2 >= 2 && ep->eps_log2 <= 4096, Errc::config_error,
            "error exponent out of range");
    ep->correction_cap = saturating_budget(std::exp2(std::min(7 * m_over_i, 40.0)) * sqrt_cm);
    ep->m_bits = ep->at.m_bits;
    ep->budget_bits = saturating_budget(
        64 * (ep->at.m_bits + static_cast<double>(ep->eps_log2) +
              std::exp2(std::min(7 * m_over_i, 40.0)) * sqrt_cm *
                  (c_bits + static_cast<double>(ep->eps_log2) + 4)));
    return ep;
}

namespace {

struct ExternalCompressor : ExecProtocol {
    explicit ExternalCompressor(ProtocolDist pp) : p(std::move(pp)) {}
    ProtocolDist p;
    AcceptTables at;
    Rat beta;
    DivergenceCache dcache;
    uint64_t step3_bit_cap = 0;
    uint64_t attempt_cap = 4096;

    RunResult run(size_t x, size_t y, const SharedRandomness& sr,
                  uint64_t replica) const override;
};

RunResult ExternalCompressor::run(size_t x, size_t y, const SharedRandomness& sr,
                                  uint64_t replica) const {
    const TranscriptSpace& ts = p.transcripts();
    size_t rounds = ts.rounds();
    size_t c_idx = rounds - 1;  // last round index
    uint64_t base = replica << 8;
    RunResult rr;
    auto abort_run = [&](bool horizon = false) {
        rr.aborted = true;
        rr.horizon_exceeded = horizon;
        rr.output = shared_random_sign(sr, base + 7);
        return rr;
    };

    size_t m0 = sample_index(p.conditional(0, 0, 0), sr.unit(base, 0));
    SharedRandomness::Dyadic eta_a = sr.unit(base, 1), eta_b = sr.unit(base, 2);
    HashFn h(sr, base + 1, 0, 1ull << std::min<long>(eps_log2, 62));

    std::vector<int> digits(rounds, 0);
    digits[0] = static_cast<int>(m0);
    size_t m_base = ts.index(digits);

    // step 2: m1 against the public prior
    std::vector<Rat> u_mass = p.conditional(1, x, ts.prefix_key(m_base, 1));
    std::vector<Rat> prior;
    {
        std::vector<Rat> num(ts.radix[1], Rat(0));
        Rat den(0);
        const JointDist& pj = p.joint();
        for (size_t mm = 0; mm < ts.count; ++mm) {
            if (ts.prefix_key(mm, 1) != ts.prefix_key(m_base, 1)) continue;
            Rat mass = pj.mass_m(mm);
            den += mass;
            num[static_cast<size_t>(ts.digit(mm, 1))] += mass;
        }
        require(den > 0, Errc::zero_mass_event, "unreachable public prefix");
        for (Rat& v : num) v /= den;
        prior = std::move(num);
    }
    FiniteDist u = dist_over(p.rounds()[1].alphabet, u_mass);
    FiniteDist v = dist_over(p.rounds()[1].alphabet, prior);
    PowProd two_l = at.m_pow.pow(Rat(5));
    OneRoundSample ors = one_round_sample(u, v, two_l, eps_log2, sr, base + 2);
    rr.ledger.bits_a += ors.ledger.bits_a;
    rr.ledger.send_b(1);
    if (ors.horizon_exhausted) return abort_run(true);
    if (!ors.b) return abort_run();
    // analysis convention: both continue from Alice's sample
    std::vector<int> md(rounds, 0);
    md[0] = static_cast<int>(m0);
    md[1] = static_cast<int>(ors.a);

    // step 3: frontier-guided rejection sampling of the rest
    size_t ell = 1;
    uint64_t step3_bits = 0;
    uint64_t attempt = 0;
    long log_cp1 = 1;
    while ((1ull << log_cp1) < rounds) ++log_cp1;
    while (ell < c_idx) {
        if (attempt >= attempt_cap) return abort_run(true);
        if (step3_bits > step3_bit_cap) return abort_run();
        ++attempt;
        // shared sample of a full continuation from the public law
        std::vector<int> tilde = md;
        for (size_t i = ell + 1; i < rounds; ++i) {
            const auto& pr = dcache.prior[i].at(ts.prefix_key(ts.index(tilde), i));
            tilde[i] = static_cast<int>(sample_index(pr, sr.unit(base + 3, attempt * 64 + i)));
        }
        size_t mt = ts.index(tilde);
        // frontier indices from the divergence ledgers
        DivergenceLedger led = divergence_costs(p, dcache, x, y, mt);
        PowProd thr = PowProd::pow2(20 * beta);
        auto stop_at = [&](const std::vector<PowProd>& d) {
            PowProd lim = thr;
            lim.mul(d[ell]);
            for (size_t j = ell + 1; j < rounds; ++j)
                if (PowProd::cmp(d[j], lim) > 0) return j;
            return c_idx;
        };
        size_t ra = stop_at(led.dA), rb = stop_at(led.dB);
        size_t k = std::min(ra, rb);
        rr.ledger.send_a(static_cast<uint64_t>(log_cp1));
        rr.ledger.send_b(static_cast<uint64_t>(log_cp1));
        step3_bits += 2 * static_cast<uint64_t>(log_cp1);
        // zeta tests
        Rat prod_a(1, 2), prod_b(1, 2);
        for (size_t i = ell + 1; i <= k; ++i) {
            size_t inp = p.owner_input(i, x, y);
            const auto& pr = dcache.prior[i].at(ts.prefix_key(mt, i));
            size_t d = static_cast<size_t>(ts.digit(mt, i));
            if (i % 2 == 1)
                prod_a *= p.conditional(i, inp, ts.prefix_key(mt, i))[d] / pr[d];
            else
                prod_b *= p.conditional(i, inp, ts.prefix_key(mt, i))[d] / pr[d];
        }
        bool ok_a = sr.unit(base + 4, attempt * 4).le(std::min(Rat(1), prod_a));
        bool ok_b = sr.unit(base + 4, attempt * 4 + 1).le(std::min(Rat(1), prod_b));
        rr.ledger.send_a(1);
        rr.ledger.send_b(1);
        step3_bits += 2;
        if (!ok_a || !ok_b) continue;
        if (!rr.hop_recorded) {
            rr.hop_recorded = true;
            rr.hop_attempts = attempt;
            rr.first_hop_prefix = ts.prefix_key(mt, k + 1);
            rr.first_hop_len = k;
        }
        for (size_t i = ell + 1; i <= k; ++i) md[i] = tilde[i];
        ell = k;
    }

    rr.tracked_m = ts.index(md);
    rr.tracked_valid = true;
    std::optional<int> sign = closing_acceptance(at, x, rr.tracked_m, y, rr.tracked_m, eta_a,
                                                 eta_b, h, eps_log2, rr.ledger);
    if (!sign) return abort_run();
    rr.output = *sign;
    return rr;
}

}  // namespace

std::unique_ptr<ExecProtocol> compress_external(const ProtocolDist& p_smooth, const RectDist& q,
                                                const BoolFn& f, const CostParams& params,
                                                const Rat& beta, long eps_log2_override) {
    require(check_smooth(p_smooth, beta), Errc::not_smooth, "protocol is not beta-smooth");
    auto ep = std::make_unique<ExternalCompressor>(p_smooth);
    ep->at = build_accept_tables(ep->p, q, f, params, true);
    ep->beta = beta;
    ep->dcache = build_divergence_cache(ep->p);
    ep->kind = "external";
    double m_over_i = ep->at.m_bits / rat_double(params.I);
    ep->eps_log2 = eps_log2_override > 0 ? eps_log2_override
                                         : static_cast<long>(std::ceil(5 * m_over_i)) + 8;
    require(ep->eps_log2 >= 2 && ep->eps_log2 <= 4096, Errc::config_error,
            "error exponent out of range");
    double c_bits = std::max(1.0, static_cast<double>(p_smooth.comm_bits()));
    ep->step3_bit_cap = saturating_budget(ep->at.m_bits *
                                          std::exp2(std::min(15 * m_over_i, 40.0)) *
                                          std::log2(c_bits + 1) / rat_double(beta));
    ep->m_bits = ep->at.m_bits;
    ep->budget_bits = saturating_budget(
        64 * ep->at.m_bits * std::exp2(std::min(15 * m_over_i, 40.0)) *
        std::pow(std::log2(c_bits + 2) + 5 * m_over_i, 2.0));
    return ep;
}

namespace {

struct BoundedRoundCompressor : ExecProtocol {
    explicit BoundedRoundCompressor(ProtocolDist pp) : p(std::move(pp)) {}
    ProtocolDist p;
    AcceptTables at;
    size_t r_rounds = 0;

    RunResult run(size_t x, size_t y, const SharedRandomness& sr,
                  uint64_t replica) const override;
};

RunResult BoundedRoundCompressor::run(size_t x, size_t y, const SharedRandomness& sr,
                                      uint64_t replica) const {
    const TranscriptSpace& ts = p.transcripts();
    size_t rounds = ts.rounds();
    uint64_t base = replica << 8;
    RunResult rr;
    auto abort_run = [&](bool horizon = false) {
        rr.aborted = true;
        rr.horizon_exceeded = horizon;
        rr.output = shared_random_sign(sr, base + 7);
        return rr;
    };

    size_t m0 = sample_index(p.conditional(0, 0, 0), sr.unit(base, 0));
    SharedRandomness::Dyadic eta_a0 = sr.unit(base, 1), eta_a1 = sr.unit(base, 2),
                             eta_b = sr.unit(base, 3);
    HashFn h(sr, base + 1, 0, 1ull << std::min<long>(eps_log2, 62));

    std::vector<int> ma(rounds, 0), mb(rounds, 0), tracked(rounds, 0);
    ma[0] = mb[0] = tracked[0] = static_cast<int>(m0);
    PowProd two_l = at.m_pow.pow(Rat(14));
    two_l.mul(Rat(static_cast<long>(r_rounds + 1)), Rat(5));

    bool consistent = true;
    for (size_t i = 1; i + 1 < rounds; ++i) {
        bool alice = i % 2 == 1;
        const std::vector<Rat>& u_mass =
            p.conditional(i, alice ? x : y, ts.prefix_key(ts.index(alice ? ma : mb), i));
        const std::vector<Rat>& v_mass =
            at.view_cond(i, !alice, alice ? y : x, ts.index(alice ? mb : ma));
        FiniteDist u = dist_over(p.rounds()[i].alphabet, u_mass);
        FiniteDist v = dist_over(p.rounds()[i].alphabet, v_mass);
        OneRoundSample ors = one_round_sample(u, v, two_l, eps_log2, sr, base + 8 + i);
        rr.ledger.bits_a += ors.ledger.bits_a;
        (alice ? rr.ledger.bits_b : rr.ledger.bits_a) += 1;  // bot indicator
        if (ors.horizon_exhausted) return abort_run(true);
        // tracked: the owner's sample against the tracked prefix
        {
            const std::vector<Rat>& ut =
                p.conditional(i, p.owner_input(i, x, y), ts.prefix_key(ts.index(tracked), i));
            FiniteDist u_tracked = dist_over(p.rounds()[i].alphabet, ut);
            OneRoundSample tr = one_round_sample(u_tracked, v, two_l, eps_log2, sr, base + 8 + i);
            tracked[i] = static_cast<int>(tr.a);
        }
        if (!ors.b) return abort_run();
        if (alice) {
            ma[i] = static_cast<int>(ors.a);
            mb[i] = static_cast<int>(*ors.b);
        } else {
            mb[i] = static_cast<int>(ors.a);
            ma[i] = static_cast<int>(*ors.b);
        }
        if (ma[i] != mb[i]) consistent = false;
    }

    // final bit: Alice hashes both candidates, Bob samples his own last bit
    size_t last = rounds - 1;
    size_t nm = ts.count;
    long cg[2] = {LONG_MIN, LONG_MIN};
    bool pass_a[2] = {false, false};
    for (int b = 0; b < 2; ++b) {
        std::vector<int> mab = ma;
        mab[last] = b;
        size_t midx = ts.index(mab);
        cg[b] = at.ceil_g1[x * nm + midx];
        if (cg[b] == LONG_MIN) continue;
        Rat thr = at.g.g1_at(x, midx) * rat_pow2(-cg[b]);
        pass_a[b] = (b == 0 ? eta_a0 : eta_a1).le(thr);
    }
    rr.ledger.send_a(2 * (static_cast<uint64_t>(eps_log2) + 1));

    const std::vector<Rat>& bob_last =
        p.conditional(last, y, ts.prefix_key(ts.index(mb), last));
    int bbit = sr.unit(base + 5, 0).le(bob_last[1]) ? 1 : 0;
    mb[last] = bbit;
    tracked[last] = sr.unit(base + 5, 0).le(
                        p.conditional(last, y, ts.prefix_key(ts.index(tracked), last))[1])
                        ? 1
                        : 0;
    rr.tracked_m = ts.index(tracked);
    rr.tracked_valid = true;
    (void)consistent;

    size_t mb_idx = ts.index(mb);
    if (!pass_a[bbit] || cg[bbit] == LONG_MIN) {
        rr.ledger.send_b(2);
        return abort_run();
    }
    uint64_t tag = h(cg[bbit]);
    const Rat& g2 = at.g.g2_at(y, mb_idx);
    long zlo = at.z_lo[y * nm + mb_idx], zhi = at.z_hi[y * nm + mb_idx];
    long unique_z = 0;
    int matches = 0;
    if (g2 > 0)
        for (long z = zlo; z <= zhi && matches < 2; ++z)
            if (h(z) == tag) {
                ++matches;
                unique_z = z;
            }
    rr.ledger.send_b(2);
    if (matches != 1) return abort_run();
    PowProd thr_b = at.t3_inv;
    thr_b.mul(g2, Rat(1));
    thr_b.mul(Rat(2), Rat(static_cast<long>(unique_z)));
    if (!eta_b.le(thr_b)) return abort_run();
    rr.output = at.sign_m[mb_idx];
    return rr;
}

}  // namespace

std::unique_ptr<ExecProtocol> compress_bounded_round(const ProtocolDist& p, const RectDist& q,
                                                     const BoolFn& f, size_t rounds,
                                                     const CostParams& params,
                                                     long eps_log2_override) {
    require(p.num_messages() == rounds, Errc::round_mismatch, "round count mismatch");
    require(rounds >= 2 && rounds % 2 == 0, Errc::round_mismatch,
            "the final round must belong to Bob");
    require(p.transcripts().radix[rounds] == 2, Errc::round_mismatch, "final round must be binary");
    auto ep = std::make_unique<BoundedRoundCompressor>(p);
    ep->at = build_accept_tables(ep->p, q, f, params, false);
    ep->r_rounds = rounds;
    ep->kind = "rounds";
    double m_over_i = ep->at.m_bits / rat_double(params.I);
    ep->eps_log2 =
        eps_log2_override > 0
            ? eps_log2_override
            : static_cast<long>(std::ceil(4 * m_over_i + std::log2(static_cast<double>(rounds + 1)))) + 2;
    require(ep->eps_log2 >= 2 && ep->eps_log2 <= 4096, Errc::config_error,
            "error exponent out of range");
    ep->m_bits = ep->at.m_bits;
    ep->budget_bits = saturating_budget(
        64 * static_cast<double>(rounds) *
        (ep->at.m_bits + std::log2(static_cast<double>(rounds + 1)) +
         static_cast<double>(ep->eps_log2)));
    return ep;
}

namespace {

struct CommFreeCompressor : ExecProtocol {
    explicit CommFreeCompressor(ProtocolDist pp) : p(std::move(pp)) {}
    ProtocolDist p;
    AcceptTables at;
    uint64_t scan_cap = 1ull << 16;
    PowProd slack6;  // 2^{6 M}

    RunResult run(size_t x, size_t y, const SharedRandomness& sr,
                  uint64_t replica) const override;
};

RunResult CommFreeCompressor::run(size_t x, size_t y, const SharedRandomness& sr,
                                  uint64_t replica) const {
    const TranscriptSpace& ts = p.transcripts();
    size_t rounds = ts.rounds();
    uint64_t base = replica << 8;
    RunResult rr;
    uint64_t e = static_cast<uint64_t>(eps_log2);
    auto finish_abort = [&](bool alice_silent, bool horizon) {
        // fixed-shape communication: Alice's two e-bit messages then Bob's bit
        rr.aborted = true;
        rr.horizon_exceeded = horizon;
        rr.output = shared_random_sign(sr, base + 7);
        if (alice_silent) {
            rr.ledger.send_a(e);
            rr.ledger.send_a(e);
        }
        rr.ledger.send_b(1);
        return rr;
    };

    size_t m0 = sample_index(p.conditional(0, 0, 0), sr.unit(base, 0));
    SharedRandomness::Dyadic eta_a = sr.unit(base, 1), eta_b = sr.unit(base, 2);
    HashFn h(sr, base + 1, 0, 1ull << std::min<uint64_t>(e, 62));
    HashFn t_hash(sr, base + 1, 4, 1ull << std::min<uint64_t>(e, 62));

    // message-part count (rounds >= 1)
    size_t msg_count = ts.count / ts.radix[0];
    auto stream_m = [&](uint64_t i) {
        uint64_t lim = UINT64_MAX - UINT64_MAX % msg_count;
        uint64_t w;
        uint64_t salt = 0;
        do {
            w = sr.word(base + 3, i * 8 + salt);
            ++salt;
        } while (w >= lim && salt < 6);
        std::vector<int> md = ts.digits(static_cast<size_t>(w % msg_count) * ts.radix[0]);
        md[0] = static_cast<int>(m0);
        return ts.index(md);
    };

    auto side_products = [&](size_t m, bool x_view, size_t inp, Rat* odd, Rat* even) {
        *odd = Rat(1);
        *even = Rat(1);
        for (size_t i = 1; i < rounds; ++i) {
            Rat v(0);
            if ((i % 2 == 1) == x_view) {
                if (p.has_conditional(i, inp, ts.prefix_key(m, i)))
                    v = p.conditional(i, inp, ts.prefix_key(m, i))
                            [static_cast<size_t>(ts.digit(m, i))];
            } else {
                v = at.view_cond(i, x_view, inp, m)[static_cast<size_t>(ts.digit(m, i))];
            }
            if (i % 2 == 1)
                *odd *= v;
            else
                *even *= v;
        }
    };

    uint64_t ia = 0, ib = 0, istar = 0;
    size_t ma = 0, mbm = 0, mstar = 0;
    for (uint64_t i = 1; i <= scan_cap && (!ia || !ib || !istar); ++i) {
        size_t m = stream_m(i);
        SharedRandomness::Dyadic rho_a = sr.unit(base + 4, i * 2);
        SharedRandomness::Dyadic rho_b = sr.unit(base + 4, i * 2 + 1);
        Rat ox, ex, oy, ey;
        side_products(m, true, x, &ox, &ex);
        side_products(m, false, y, &oy, &ey);
        if (!ia) {
            PowProd slack = slack6;
            slack.mul(std::max(Rat(0), ex), Rat(1));
            bool pass = rho_a.le(ox) && (ex > 0 ? rho_b.le(slack) : false);
            if (pass) {
                ia = i;
                ma = m;
            }
        }
        if (!ib) {
            PowProd slack = slack6;
            slack.mul(std::max(Rat(0), oy), Rat(1));
            bool pass = (oy > 0 ? rho_a.le(slack) : false) && rho_b.le(ey);
            if (pass) {
                ib = i;
                mbm = m;
            }
        }
        if (!istar) {
            // owner-true acceptance: odd rounds by x, even by y
            Rat ow(1), ev(1);
            for (size_t r = 1; r < rounds; ++r) {
                size_t inp = p.owner_input(r, x, y);
                Rat v(0);
                if (p.has_conditional(r, inp, ts.prefix_key(m, r)))
                    v = p.conditional(r, inp, ts.prefix_key(m, r))
                            [static_cast<size_t>(ts.digit(m, r))];
                if (r % 2 == 1)
                    ow *= v;
                else
                    ev *= v;
            }
            if (rho_a.le(ow) && rho_b.le(ev)) {
                istar = i;
                mstar = m;
            }
        }
    }
    if (istar) {
        rr.tracked_m = mstar;
        rr.tracked_valid = true;
    }
    if (!ia || !istar) return finish_abort(true, true);

    long cg1 = at.ceil_g1[x * at.qj.nm + ma];
    bool alice_ok = cg1 != LONG_MIN;
    if (alice_ok) {
        Rat thr = at.g.g1_at(x, ma) * rat_pow2(-cg1);
        alice_ok = eta_a.le(thr);
    }
    if (!alice_ok) return finish_abort(true, false);
    rr.ledger.send_a(e);
    rr.ledger.send_a(e);
    uint64_t tag_t = t_hash(static_cast<int64_t>(ia));
    uint64_t tag_h = h(cg1);

    bool bob_ok = ib != 0 && t_hash(static_cast<int64_t>(ib)) == tag_t;
    int sign = 1;
    if (bob_ok) {
        const Rat& g2 = at.g.g2_at(y, mbm);
        long zlo = at.z_lo[y * at.qj.nm + mbm], zhi = at.z_hi[y * at.qj.nm + mbm];
        long unique_z = 0;
        int matches = 0;
        if (g2 > 0)
            for (long z = zlo; z <= zhi && matches < 2; ++z)
                if (h(z) == tag_h) {
                    ++matches;
                    unique_z = z;
                }
        if (matches == 1) {
            PowProd thr_b = at.t3_inv;
            thr_b.mul(g2, Rat(1));
            thr_b.mul(Rat(2), Rat(static_cast<long>(unique_z)));
            bob_ok = eta_b.le(thr_b);
        } else {
            bob_ok = false;
        }
        if (bob_ok) sign = at.sign_m[mbm];
    }
    rr.ledger.send_b(1);
    if (!bob_ok) {
        rr.aborted = true;
        rr.output = shared_random_sign(sr, base + 7);
        return rr;
    }
    rr.output = sign;
    return rr;
}

}  // namespace

std::unique_ptr<ExecProtocol> compress_commfree(const ProtocolDist& p, const RectDist& q,
                                                const BoolFn& f, const CostParams& params) {
    auto ep = std::make_unique<CommFreeCompressor>(p);
    ep->at = build_accept_tables(ep->p, q, f, params, false);
    ep->kind = "commfree";
    double m_over_i = ep->at.m_bits / rat_double(params.I);
    // eps = 2^{-ceil(6 M / I + 8 M)}
    PowProd eps_exp = ep->at.m_pow.pow(Rat(6) / params.I);
    eps_exp.mul(ep->at.m_pow.pow(Rat(8)));
    ep->eps_log2 = eps_exp.ceil_log2();
    require(ep->eps_log2 >= 2 && ep->eps_log2 <= 4096, Errc::config_error,
            "error exponent out of range");
    ep->slack6 = ep->at.m_pow.pow(Rat(6));
    ep->m_bits = ep->at.m_bits;
    ep->budget_bits = 2 * static_cast<uint64_t>(ep->eps_log2) + 1;
    (void)m_over_i;
    return ep;
}

Rat block_decode_error(const Rat& beta, size_t block_len) {
    require(block_len % 2 == 1, Errc::config_error, "block length must be odd");
    // P[Binomial(L, 1/2 + beta) <= (L-1)/2]
    Rat p_hit = Rat(1, 2) + beta;
    Rat p_miss = Rat(1, 2) - beta;
    Rat total(0);
    for (size_t k = 0; k <= (block_len - 1) / 2; ++k) {
        Int binom;
        mpz_bin_uiui(binom.get_mpz_t(), block_len, k);
        total += Rat(binom) * rat_pow_int(p_hit, static_cast<long>(k)) *
                 rat_pow_int(p_miss, static_cast<long>(block_len - k));
    }
    return total;
}

SmoothedPair smooth(const ProtocolDist& p, const RectDist& q, const BoolFn& f, const Rat& beta,
                    size_t block_len, const CostParams& params) {
    const TranscriptSpace& ts = p.transcripts();
    for (size_t i = 2; i < ts.rounds(); ++i)
        require(ts.radix[i] == 2, Errc::not_binary_rounds,
                "smoothing expects binary rounds past the first");
    require(beta > 0 && beta <= Rat(1, 4), Errc::config_error, "beta must lie in (0, 1/4]");
    require(block_len % 2 == 1, Errc::config_error, "block length must be odd");

    CostReport before = external_cost(q.joint(), p.joint(), f, params);
    require(before.finite, Errc::infinite_cost, "smoothing needs a finite external cost");

    // round layout: rounds 0..1 copied; each original round i >= 2 becomes
    // block_len biased bits on the owner's parity with one-symbol fillers
    struct Slot {
        size_t orig_round;   // original round, or SIZE_MAX for filler
        size_t bit_in_block; // position inside the block
    };
    std::vector<RoundSpec> rounds{p.rounds()[0], p.rounds()[1]};
    std::vector<Slot> slots{{0, 0}, {1, 0}};
    for (size_t i = 2; i < ts.rounds(); ++i) {
        bool alice = p.rounds()[i].owner == Owner::alice;
        for (size_t k = 0; k < block_len; ++k) {
            size_t next = rounds.size();
            bool next_is_alice = next % 2 == 1;
            if (next_is_alice != alice) {
                rounds.push_back(RoundSpec{next_is_alice ? Owner::alice : Owner::bob, {"-"}});
                slots.push_back({SIZE_MAX, 0});
                ++next;
            }
            rounds.push_back(RoundSpec{alice ? Owner::alice : Owner::bob, {"0", "1"}});
            slots.push_back({i, k});
        }
    }

    SmoothedPair out{ProtocolDist(p.space(), p.mu(), rounds), RectDist(), block_len, beta,
                     std::vector<Check>{}};
    ProtocolDist& ps = out.p_smooth;
    TranscriptSpace ns(rounds);

    // decode: majority per block; returns the original transcript index
    auto decode = [&](const std::vector<int>& nd) {
        std::vector<int> od(ts.rounds(), 0);
        od[0] = nd[0];
        od[1] = nd[1];
        std::vector<int> ones(ts.rounds(), 0);
        for (size_t s = 2; s < slots.size(); ++s) {
            if (slots[s].orig_round == SIZE_MAX) continue;
            ones[slots[s].orig_round] += nd[s];
        }
        for (size_t i = 2; i < ts.rounds(); ++i)
            od[i] = ones[i] * 2 > static_cast<int>(block_len) ? 1 : 0;
        return ts.index(od);
    };

    ps.set_conditional(0, 0, {}, p.conditional(0, 0, 0));
    {
        // round 1 tables copied across prefixes
        size_t ninp = p.space().nx();
        for (size_t inp = 0; inp < ninp; ++inp)
            for (size_t d0 = 0; d0 < ts.radix[0]; ++d0) {
                std::vector<int> md(ts.rounds(), 0);
                md[0] = static_cast<int>(d0);
                if (p.has_conditional(1, inp, ts.prefix_key(ts.index(md), 1)))
                    ps.set_conditional(1, inp, {static_cast<int>(d0)},
                                       p.conditional(1, inp, ts.prefix_key(ts.index(md), 1)));
                else
                    ps.set_conditional(
                        1, inp, {static_cast<int>(d0)},
                        std::vector<Rat>(ts.radix[1], Rat(1, static_cast<long>(ts.radix[1]))));
            }
    }
    // enumerate prefixes of the new space round by round
    for (size_t s = 2; s < slots.size(); ++s) {
        bool alice = rounds[s].owner == Owner::alice;
        size_t ninp = alice ? p.space().nx() : p.space().ny();
        size_t npfx = 1;
        for (size_t k = 0; k < s; ++k) npfx *= ns.radix[k];
        for (size_t inp = 0; inp < ninp; ++inp)
            for (size_t pk = 0; pk < npfx; ++pk) {
                std::vector<int> cd(s);
                size_t rem = pk;
                for (size_t k = 0; k < s; ++k) {
                    cd[k] = static_cast<int>(rem % ns.radix[k]);
                    rem /= ns.radix[k];
                }
                if (slots[s].orig_round == SIZE_MAX) {
                    ps.set_conditional(s, inp, cd, {Rat(1)});
                    continue;
                }
                size_t i = slots[s].orig_round;
                // decoded original prefix before round i
                std::vector<int> full = cd;
                full.resize(slots.size(), 0);
                size_t od = decode(full);
                // posterior over the original bit given the in-block prefix
                Rat w[2];
                {
                    std::vector<int> odig = ts.digits(od);
                    size_t opk = ts.prefix_key(od, i);
                    std::vector<Rat> cond =
                        p.has_conditional(i, inp, opk)
                            ? p.conditional(i, inp, opk)
                            : std::vector<Rat>(2, Rat(1, 2));
                    w[0] = cond[0];
                    w[1] = cond[1];
                    (void)odig;
                }
                for (size_t s2 = 2; s2 < s; ++s2) {
                    if (slots[s2].orig_round != i) continue;
                    int bit = cd[s2];
                    for (int a = 0; a < 2; ++a)
                        w[a] *= Rat(1, 2) + (bit == a ? beta : -beta);
                }
                Rat tot = w[0] + w[1];
                std::vector<Rat> row(2);
                if (tot == 0) {
                    row = {Rat(1, 2), Rat(1, 2)};
                } else {
                    // P(next bit = 1) = sum_a w_a (1/2 + (a==1 ? beta : -beta)) / tot
                    Rat one = (w[0] * (Rat(1, 2) - beta) + w[1] * (Rat(1, 2) + beta)) / tot;
                    row = {Rat(1) - one, one};
                }
                ps.set_conditional(s, inp, cd, row);
            }
    }

    // q': A and B weights follow the blocks of their owners
    Rat z_maj(0);
    {
        Rat p_hit = Rat(1, 2) + beta;
        Rat p_miss = Rat(1, 2) - beta;
        for (size_t k = (block_len + 1) / 2; k <= block_len; ++k) {
            Int binom;
            mpz_bin_uiui(binom.get_mpz_t(), block_len, k);
            z_maj += Rat(binom) * rat_pow_int(p_hit, static_cast<long>(k)) *
                     rat_pow_int(p_miss, static_cast<long>(block_len - k));
        }
    }
    size_t nx = p.space().nx(), ny = p.space().ny();
    std::vector<Rat> a_new(nx * ns.count, Rat(0)), b_new(ny * ns.count, Rat(0));
    for (size_t m2 = 0; m2 < ns.count; ++m2) {
        std::vector<int> nd = ns.digits(m2);
        size_t od = decode(nd);
        // per-block factor s_{D_i}(r) / Z, split by owner
        Rat fac_a(1), fac_b(1);
        {
            std::vector<int> odig = ts.digits(od);
            std::vector<Rat> block_fac(ts.rounds(), Rat(1));
            for (size_t s = 2; s < slots.size(); ++s) {
                if (slots[s].orig_round == SIZE_MAX) continue;
                size_t i = slots[s].orig_round;
                int bit = nd[s];
                block_fac[i] *= Rat(1, 2) + (bit == odig[i] ? beta : -beta);
            }
            for (size_t i = 2; i < ts.rounds(); ++i) {
                Rat t = block_fac[i] / z_maj;
                if (p.rounds()[i].owner == Owner::alice)
                    fac_a *= t;
                else
                    fac_b *= t;
            }
        }
        for (size_t x = 0; x < nx; ++x) a_new[x * ns.count + m2] = q.a(x, od) * fac_a;
        for (size_t y = 0; y < ny; ++y) b_new[y * ns.count + m2] = q.b(y, od) * fac_b;
    }
    out.q_smooth = RectDist(nx, ny, ns.count, p.mu(), std::move(a_new), std::move(b_new));

    out.checks.push_back(check_flag("smooth.exact-beta", check_smooth(ps, beta)));
    {
        // bias reaches beta at reachable deterministic bits, never exceeds it
        Rat max_bias(0);
        const JointDist& js = ps.joint();
        for (size_t s = 2; s < slots.size(); ++s) {
            if (slots[s].orig_round == SIZE_MAX) continue;
            bool alice = rounds[s].owner == Owner::alice;
            std::map<std::pair<size_t, size_t>, uint8_t> seen;
            for (size_t x = 0; x < js.nx; ++x)
                for (size_t y = 0; y < js.ny; ++y)
                    for (size_t m2 = 0; m2 < js.nm; ++m2) {
                        if (js.at(x, y, m2) == 0) continue;
                        size_t inp = alice ? x : y;
                        size_t pk = ns.prefix_key(m2, s);
                        if (seen.count({inp, pk})) continue;
                        seen[{inp, pk}] = 1;
                        Rat bias = ps.conditional(s, inp, pk)[1] - Rat(1, 2);
                        max_bias = std::max(max_bias, abs_rat(bias));
                    }
        }
        Check c = check_flag("smooth.max-bias", max_bias <= beta);
        c.lhs = rat_str(max_bias);
        c.rhs = rat_str(beta);
        out.checks.push_back(c);
    }
    {
        CostReport after = external_cost(out.q_smooth.joint(), ps.joint(), f, params);
        Check c;
        if (!after.finite) {
            c = check_flag("smooth.cost-increase", false, "smoothed cost infinite");
        } else {
            PowProd rhs = before.value;
            rhs.mul(Rat(2), Rat(1));
            c = check_le("smooth.cost-increase", after.value, rhs);
        }
        out.checks.push_back(c);
    }
    return out;
}

AdvantageEstimate estimate_advantage(const ExecProtocol& ep, const std::vector<Rat>& mu,
                                     const BoolFn& f, size_t trials, const SharedRandomness& sr) {
    require(trials >= 1000, Errc::config_error, "at least 1000 trials required");
    AdvantageEstimate est;
    est.trials = trials;
    for (size_t t = 0; t < trials; ++t) {
        size_t cell = sample_index(mu, sr.unit(1, t));
        size_t x = cell / f.ny, y = cell % f.ny;
        RunResult rr = ep.run(x, y, sr, t + 2);
        require(rr.ledger.total() <= ep.budget_bits, Errc::internal, "budget exceeded");
        if (rr.aborted) {
            ++est.aborts;
            if (rr.horizon_exceeded) ++est.horizon;
            continue;  // contributes exactly zero
        }
        int v = rr.output * f.sign(x, y);
        if (v > 0)
            ++est.plus;
        else
            ++est.minus;
    }
    double n = static_cast<double>(trials);
    est.estimate = (static_cast<double>(est.plus) - static_cast<double>(est.minus)) / n;
    auto wilson = [&](double k, bool upper) {
        double z = 1.959963985;
        double ph = k / n;
        double den = 1 + z * z / n;
        double center = ph + z * z / (2 * n);
        double rad = z * std::sqrt(ph * (1 - ph) / n + z * z / (4 * n * n));
        return (center + (upper ? rad : -rad)) / den;
    };
    est.lo = wilson(static_cast<double>(est.plus), false) - wilson(static_cast<double>(est.minus), true);
    est.hi = wilson(static_cast<double>(est.plus), true) - wilson(static_cast<double>(est.minus), false);
    return est;
}

std::vector<Check> check_divergence_concentration(const ProtocolDist& p, const Rat& beta,
                                                  const Rat& threshold_bits,
                                                  const std::vector<Rat>& alphas) {
    require(check_smooth(p, beta), Errc::not_smooth, "concentration needs a smooth protocol");
    std::vector<Check> checks;
    Frontier fr = divergence_frontier(p, threshold_bits);
    checks.push_back(check_flag("conc.frontier-valid",
                                frontier_valid(fr, p.transcripts(), p.joint())));
    DivergenceCache cache = build_divergence_cache(p);
    const JointDist& j = p.joint();

    // per-point frontier deviation, computed once
    struct Point {
        Rat mass;
        PowProd dev;
    };
    std::vector<Point> points;
    double tau = 0;
    for (size_t x = 0; x < j.nx; ++x)
        for (size_t y = 0; y < j.ny; ++y)
            for (size_t m = 0; m < j.nm; ++m) {
                const Rat& w = j.at(x, y, m);
                if (w == 0) continue;
                size_t stop = fr.at(x, y, m);
                DivergenceLedger led = divergence_costs(p, cache, x, y, m);
                RealizedRatios rratio = realized_ratios(p, cache, x, y, m);
                tau = std::max(tau, led.d[stop].log2_hi());
                PowProd dev = rratio.all[stop];
                dev.div(led.d[stop]);
                points.push_back({w, std::move(dev)});
            }
    double c_const = std::pow(0.5 - rat_double(beta), 2) * std::log(2.0);

    for (const Rat& alpha : alphas) {
        Rat mass(0);
        PowProd a_pow = PowProd::pow2(alpha);
        PowProd a_neg = PowProd::pow2(-alpha);
        for (const Point& pt : points)
            if (PowProd::cmp(pt.dev, a_pow) >= 0 || PowProd::cmp(pt.dev, a_neg) <= 0)
                mass += pt.mass;
        double bound = 2 * std::exp(-c_const * rat_double(alpha) * rat_double(alpha) /
                                    std::max(tau, 1e-12));
        Check c;
        c.name = "conc.tail-bound";
        c.lhs = rat_str(mass);
        c.rhs = std::to_string(bound);
        // conservative comparison: exact mass against a slightly padded bound
        c.pass = rat_double(mass) <= bound * (1 + 1e-9);
        c.slack_bits = mass > 0 ? std::log2(bound) - log2_approx(mass) : 60;
        checks.push_back(c);
    }
    return checks;
}

}  // namespace pcw
