#include <cmath>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "pcw/compress.hpp"

using namespace pcw;
using namespace pcw::testing;

namespace {

CostParams params_i8() {
    CostParams pr;
    pr.I = 8;
    return pr;
}

// empirical TV between tracked transcripts and p(xym)
double tracked_tv(const ExecProtocol& ep, const ProtocolDist& p, size_t trials,
                  const SharedRandomness& sr) {
    const JointDist& j = p.joint();
    std::map<std::tuple<size_t, size_t, size_t>, size_t> counts;
    size_t valid = 0;
    for (size_t t = 0; t < trials; ++t) {
        size_t cell = sample_index_for_test(p.mu(), sr, t);
        size_t x = cell / j.ny, y = cell % j.ny;
        RunResult rr = ep.run(x, y, sr, t + 2);
        if (!rr.tracked_valid) continue;
        ++valid;
        counts[{x, y, rr.tracked_m}]++;
    }
    double tv = 0;
    for (size_t x = 0; x < j.nx; ++x)
        for (size_t y = 0; y < j.ny; ++y)
            for (size_t m = 0; m < j.nm; ++m) {
                auto it = counts.find({x, y, m});
                double emp = it == counts.end() ? 0 : static_cast<double>(it->second) / valid;
                tv += std::fabs(emp - rat_double(j.at(x, y, m)));
            }
    return tv / 2;
}

}  // namespace

TEST_CASE("general compressor on send-x with AND") {
    ProtocolDist p = p_send_x();
    CostParams pr = params_i8();
    EnumerationCaps caps;
    WitnessResult w = witness_search(p, and_fn(), pr, caps);
    REQUIRE(w.report.finite);
    auto ep = compress_general(p, w.q, and_fn(), pr);
    MESSAGE("general: M bits = ", ep->m_bits, ", eps 2^-", ep->eps_log2);

    SharedRandomness sr(20260808);
    AdvantageEstimate est = estimate_advantage(*ep, p.mu(), and_fn(), 30000, sr);
    MESSAGE("general adv: ", est.estimate, " [", est.lo, ", ", est.hi, "] plus=", est.plus,
            " minus=", est.minus, " aborts=", est.aborts);
    CHECK(est.lo > 0);
    CHECK(est.horizon == 0);
}

TEST_CASE("general compressor tracked transcript follows p") {
    ProtocolDist p = p_sendx_noisy();
    CostParams pr = params_i8();
    EnumerationCaps caps;
    WitnessResult w = witness_search(p, and_fn(), pr, caps);
    REQUIRE(w.report.finite);
    auto ep = compress_general(p, w.q, and_fn(), pr);
    SharedRandomness sr(99);
    CHECK(tracked_tv(*ep, p, 30000, sr) <= 0.02);
}

TEST_CASE("general compressor acceptance region identity") {
    // product of the two eta thresholds equals (q/p) 2^{-3M/I} on S_K
    ProtocolDist p = p_send_x();
    CostParams pr = params_i8();
    EnumerationCaps caps;
    WitnessResult w = witness_search(p, and_fn(), pr, caps);
    GFactorization g = g_factorization(w.q, p);
    CostReport cost = marginal_cost(w.q.joint(), p.joint(), and_fn(), pr);
    PowProd m_pow = cost.value;
    m_pow.mul(Rat(2), pr.K * pr.I);
    PowProd t3_inv = m_pow.pow(Rat(-3) / pr.I);
    const JointDist &qj = w.q.joint(), &pj = p.joint();
    for (size_t x = 0; x < 2; ++x)
        for (size_t y = 0; y < 2; ++y)
            for (size_t m = 0; m < qj.nm; ++m) {
                if (qj.at(x, y, m) == 0) continue;
                const Rat& g1 = g.g1_at(x, m);
                const Rat& g2 = g.g2_at(y, m);
                long k = ceil_log2(g1);
                Rat thr_a = g1 * rat_pow2(-k);
                PowProd thr_b = t3_inv;
                thr_b.mul(g2, Rat(1));
                thr_b.mul(Rat(2), Rat(k));
                // thr_a * thr_b == (q/p) 2^{-3M/I}
                PowProd lhs = thr_b;
                lhs.mul(thr_a, Rat(1));
                PowProd rhs = t3_inv;
                rhs.mul(qj.at(x, y, m) / pj.at(x, y, m), Rat(1));
                CHECK(PowProd::cmp(lhs, rhs) == 0);
            }
}

TEST_CASE("commfree compressor: exact communication and positive advantage") {
    ProtocolDist p = p_send_x();
    CostParams pr = params_i8();
    EnumerationCaps caps;
    WitnessResult w = witness_search(p, and_fn(), pr, caps);
    auto ep = compress_commfree(p, w.q, and_fn(), pr);
    MESSAGE("commfree: eps 2^-", ep->eps_log2, " budget ", ep->budget_bits);

    SharedRandomness sr(777);
    size_t trials = 60000;
    AdvantageEstimate est = estimate_advantage(*ep, p.mu(), and_fn(), trials, sr);
    MESSAGE("commfree adv: ", est.estimate, " [", est.lo, ", ", est.hi, "] plus=", est.plus,
            " aborts=", est.aborts, " horizon=", est.horizon);
    CHECK(est.lo > 0);
    // exact bit count on every run
    for (size_t t = 0; t < 500; ++t) {
        size_t cell = sample_index_for_test(p.mu(), sr, t);
        RunResult rr = ep->run(cell / 2, cell % 2, sr, t + 2);
        CHECK(rr.ledger.total() == 2 * static_cast<uint64_t>(ep->eps_log2) + 1);
    }
}

TEST_CASE("commfree tracked transcript follows p") {
    ProtocolDist p = p_sendx_noisy();
    CostParams pr = params_i8();
    EnumerationCaps caps;
    WitnessResult w = witness_search(p, and_fn(), pr, caps);
    auto ep = compress_commfree(p, w.q, and_fn(), pr);
    SharedRandomness sr(555);
    CHECK(tracked_tv(*ep, p, 30000, sr) <= 0.02);
}

TEST_CASE("bounded-round compressor on the padded send-x instance") {
    // r = 2: m1 = x, m2 a fair coin from Bob
    ProtocolDist p = p_sendx_smooth(Rat(0));
    CostParams pr = params_i8();
    EnumerationCaps caps;
    WitnessResult w = witness_search(p, and_fn(), pr, caps);
    REQUIRE(w.report.finite);
    auto ep = compress_bounded_round(p, w.q, and_fn(), 2, pr);
    SharedRandomness sr(31337);
    AdvantageEstimate est = estimate_advantage(*ep, p.mu(), and_fn(), 30000, sr);
    MESSAGE("rounds adv: ", est.estimate, " [", est.lo, ", ", est.hi, "] plus=", est.plus,
            " minus=", est.minus, " aborts=", est.aborts);
    CHECK(est.lo > 0);
    // exactly r = 2 sampler exchanges plus the two closing messages
    RunResult rr = ep->run(0, 0, sr, 5);
    CHECK(rr.ledger.rounds >= 2);
    // abort in round 1 leaves both parties with the same random output
    CHECK_THROWS_AS(compress_bounded_round(p, w.q, and_fn(), 3, pr), Error);
}

TEST_CASE("bounded-round tracked transcript follows p") {
    ProtocolDist p = p_sendx_noisy();
    CostParams pr = params_i8();
    EnumerationCaps caps;
    WitnessResult w = witness_search(p, and_fn(), pr, caps);
    auto ep = compress_bounded_round(p, w.q, and_fn(), 2, pr);
    SharedRandomness sr(2024);
    CHECK(tracked_tv(*ep, p, 30000, sr) <= 0.02);
}

TEST_CASE("external compressor on an exactly smooth instance") {
    ProtocolDist p = p_sendx_smooth(Rat(1, 8));
    CostParams pr = params_i8();
    EnumerationCaps caps;
    WitnessResult w = witness_search(p, and_fn(), pr, caps);
    REQUIRE(w.report.finite);
    auto ep = compress_external(p, w.q, and_fn(), pr, Rat(1, 8));
    MESSAGE("external: M bits = ", ep->m_bits, ", eps 2^-", ep->eps_log2);
    SharedRandomness sr(4242);
    AdvantageEstimate est = estimate_advantage(*ep, p.mu(), and_fn(), 30000, sr);
    MESSAGE("external adv: ", est.estimate, " [", est.lo, ", ", est.hi, "] plus=", est.plus,
            " minus=", est.minus, " aborts=", est.aborts, " horizon=", est.horizon);
    CHECK(est.lo > 0);

    // acceptance behavior of the frontier hop
    size_t accept_attempt_sum = 0, hops = 0;
    for (size_t t = 0; t < 4000; ++t) {
        size_t cell = sample_index_for_test(p.mu(), sr, 90000 + t);
        RunResult rr = ep->run(cell / 2, cell % 2, sr, 500000 + t);
        if (rr.hop_recorded) {
            ++hops;
            accept_attempt_sum += rr.hop_attempts;
        }
    }
    REQUIRE(hops > 0);
    double avg_attempts = static_cast<double>(accept_attempt_sum) / hops;
    MESSAGE("avg rejection attempts per accept: ", avg_attempts);
    CHECK(avg_attempts <= 8.5);  // geometric with success >= 1/8, plus slack
    // not smooth -> refused
    CHECK_THROWS_AS(compress_external(p_sendx_noisy(), w.q, and_fn(), pr, Rat(1, 8)), Error);
}

TEST_CASE("block decode error matches the binomial oracle") {
    // independent oracle: tail of Binomial(15, 3/8) at or above 8 successes
    Rat beta(1, 8);
    size_t L = 15;
    Rat oracle(0);
    for (size_t k = 8; k <= L; ++k) {
        Int binom;
        mpz_bin_uiui(binom.get_mpz_t(), L, k);
        oracle += Rat(binom) * rat_pow_int(Rat(3, 8), static_cast<long>(k)) *
                  rat_pow_int(Rat(5, 8), static_cast<long>(L - k));
    }
    CHECK(block_decode_error(beta, L) == oracle);
    CHECK(block_decode_error(beta, 1) == Rat(3, 8));
}

TEST_CASE("smoothing produces an exactly beta-smooth pair with bounded cost increase") {
    ProtocolDist p = p_sendx_smooth(Rat(1, 2));  // deterministic round 2
    CostParams pr;
    EnumerationCaps caps;
    // witness with nonzero advantage everywhere: condition on y = 0 under m1 = 1
    RectSet r = RectSet::full(2, 2, p.transcripts().count);
    for (size_t m = 0; m < p.transcripts().count; ++m)
        if (p.transcripts().digit(m, 1) == 1) r.in_b[1 * p.transcripts().count + m] = 0;
    RectDist q = RectDist::conditioned_on(p, r);
    REQUIRE(external_cost(q.joint(), p.joint(), and_fn(), pr).finite);

    SmoothedPair sp = smooth(p, q, and_fn(), Rat(1, 4), 7, pr);
    for (const Check& c : sp.checks) {
        INFO(c.name, " lhs=", c.lhs, " rhs=", c.rhs);
        CHECK(c.pass);
    }
    CHECK(check_smooth(sp.p_smooth, Rat(1, 4)));
    // deterministic original bit: the first block bit has bias exactly beta
    bool found_exact = false;
    for (const Check& c : sp.checks)
        if (c.name == "smooth.max-bias" && c.lhs == "1/4") found_exact = true;
    CHECK(found_exact);

    // the smoothed pair feeds the external compressor (smoke run; the
    // acceptance suite drives the full-scale statistics)
    CostParams pr8 = params_i8();
    SmoothedPair sp8 = smooth(p, q, and_fn(), Rat(1, 4), 7, pr8);
    auto ep = compress_external(sp8.p_smooth, sp8.q_smooth, and_fn(), pr8, Rat(1, 4));
    SharedRandomness sr(808);
    AdvantageEstimate est = estimate_advantage(*ep, p.mu(), and_fn(), 5000, sr);
    MESSAGE("smoothed external adv: ", est.estimate, " [", est.lo, ", ", est.hi, "] plus=",
            est.plus, " minus=", est.minus);
    CHECK(est.hi >= 0);
    CHECK(est.horizon == 0);
}

TEST_CASE("divergence concentration bound on random smooth instances") {
    std::mt19937_64 rng(606);
    Rat beta(1, 8);
    for (int t = 0; t < 6; ++t) {
        ProtocolDist p = smooth_random_protocol(rng, 6, beta);
        std::vector<Check> checks = check_divergence_concentration(
            p, beta, Rat(1, 2), {Rat(1), Rat(2), Rat(3)});
        for (const Check& c : checks) {
            INFO(c.name, " lhs=", c.lhs, " rhs=", c.rhs);
            CHECK(c.pass);
        }
    }
}

namespace {

// a protocol whose outputs are perfect / pure noise, for estimator sanity
struct FixedProtocol : ExecProtocol {
    const BoolFn* f;
    bool perfect;
    RunResult run(size_t x, size_t y, const SharedRandomness& sr,
                  uint64_t replica) const override {
        RunResult rr;
        rr.output = perfect ? f->sign(x, y) : (sr.word(9, replica) & 1 ? 1 : -1);
        return rr;
    }
};

}  // namespace

TEST_CASE("advantage estimator calibration") {
    BoolFn f = and_fn();
    std::vector<Rat> mu(4, Rat(1, 4));
    SharedRandomness sr(5150);
    FixedProtocol perfect;
    perfect.f = &f;
    perfect.perfect = true;
    perfect.budget_bits = 1;
    AdvantageEstimate e1 = estimate_advantage(perfect, mu, f, 2000, sr);
    CHECK(e1.estimate == 1.0);
    CHECK(e1.lo > 0.99);
    FixedProtocol coin;
    coin.f = &f;
    coin.perfect = false;
    coin.budget_bits = 1;
    AdvantageEstimate e2 = estimate_advantage(coin, mu, f, 20000, sr);
    CHECK(std::fabs(e2.estimate) < 0.03);
    CHECK(e2.lo < 0);
    CHECK(e2.hi > 0);
    CHECK_THROWS_AS(estimate_advantage(coin, mu, f, 10, sr), Error);
}
