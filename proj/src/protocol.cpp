#include "pcw/protocol.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace pcw {

TranscriptSpace::TranscriptSpace(const std::vector<RoundSpec>& rounds) {
    for (const auto& r : rounds) {
        require(r.arity() >= 1, Errc::shape_mismatch, "empty round alphabet");
        radix.push_back(r.arity());
        count *= r.arity();
    }
    require(count >= 1, Errc::shape_mismatch, "empty transcript space");
}

std::vector<int> TranscriptSpace::digits(size_t m) const {
    std::vector<int> d(radix.size());
    for (size_t i = 0; i < radix.size(); ++i) {
        d[i] = static_cast<int>(m % radix[i]);
        m /= radix[i];
    }
    return d;
}

size_t TranscriptSpace::index(const std::vector<int>& d) const {
    require(d.size() == radix.size(), Errc::shape_mismatch, "transcript digit count mismatch");
    size_t m = 0, stride = 1;
    for (size_t i = 0; i < radix.size(); ++i) {
        require(d[i] >= 0 && static_cast<size_t>(d[i]) < radix[i], Errc::shape_mismatch,
                "transcript digit out of range");
        m += stride * static_cast<size_t>(d[i]);
        stride *= radix[i];
    }
    return m;
}

int TranscriptSpace::digit(size_t m, size_t round) const {
    for (size_t i = 0; i < round; ++i) m /= radix[i];
    return static_cast<int>(m % radix[round]);
}

size_t TranscriptSpace::prefix_key(size_t m, size_t k) const {
    size_t stride = 1;
    for (size_t i = 0; i < k && i < radix.size(); ++i) stride *= radix[i];
    return m % stride;
}

ProtocolDist::ProtocolDist(InputSpace space, std::vector<Rat> mu, std::vector<RoundSpec> rounds)
    : space_(std::move(space)), mu_(std::move(mu)), rounds_(std::move(rounds)), ts_(rounds_) {
    require(space_.nx() >= 1 && space_.ny() >= 1, Errc::shape_mismatch, "empty input space");
    require(mu_.size() == space_.nx() * space_.ny(), Errc::shape_mismatch, "mu size mismatch");
    Rat tot(0);
    for (Rat& v : mu_) {
        v.canonicalize();
        require(v >= 0, Errc::shape_mismatch, "negative mu entry");
        tot += v;
    }
    require(tot == 1, Errc::shape_mismatch, "mu must sum to 1");
    require(!rounds_.empty(), Errc::shape_mismatch, "need at least the public round");
    for (size_t i = 0; i < rounds_.size(); ++i) {
        Owner want = i == 0 ? Owner::pub : (i % 2 == 1 ? Owner::alice : Owner::bob);
        require(rounds_[i].owner == want, Errc::shape_mismatch,
                "round " + std::to_string(i) + " has wrong owner");
    }
    tables_.resize(rounds_.size());
}

long ProtocolDist::comm_bits() const {
    long bits = 0;
    for (size_t i = 1; i < rounds_.size(); ++i) {
        size_t a = rounds_[i].arity();
        long b = 0;
        while ((1ull << b) < a) ++b;
        bits += b;
    }
    return bits;
}

void ProtocolDist::set_conditional(size_t round, size_t input, const std::vector<int>& prefix,
                                   std::vector<Rat> probs) {
    require(round < rounds_.size(), Errc::shape_mismatch, "round out of range");
    require(prefix.size() == round, Errc::shape_mismatch, "prefix length mismatch");
    require(probs.size() == rounds_[round].arity(), Errc::shape_mismatch, "conditional arity mismatch");
    Rat tot(0);
    for (Rat& v : probs) {
        v.canonicalize();
        require(v >= 0, Errc::shape_mismatch, "negative conditional probability");
        tot += v;
    }
    require(tot == 1, Errc::shape_mismatch, "conditional must sum to 1");
    std::vector<int> full(ts_.rounds(), 0);
    std::copy(prefix.begin(), prefix.end(), full.begin());
    size_t pk = ts_.prefix_key(ts_.index(full), round);
    tables_[round][{input, pk}] = std::move(probs);
    joint_.reset();
}

const std::vector<Rat>& ProtocolDist::conditional(size_t round, size_t input, size_t pk) const {
    auto it = tables_[round].find({input, pk});
    require(it != tables_[round].end(), Errc::shape_mismatch,
            "missing conditional for round " + std::to_string(round));
    return it->second;
}

bool ProtocolDist::has_conditional(size_t round, size_t input, size_t pk) const {
    return tables_[round].count({input, pk}) > 0;
}

Rat ProtocolDist::cond_prob(size_t round, size_t input, size_t m, int value) const {
    return conditional(round, input, ts_.prefix_key(m, round))[static_cast<size_t>(value)];
}

size_t ProtocolDist::owner_input(size_t round, size_t x, size_t y) const {
    switch (rounds_[round].owner) {
        case Owner::pub: return 0;
        case Owner::alice: return x;
        case Owner::bob: return y;
    }
    return 0;
}

const JointDist& ProtocolDist::joint() const {
    if (joint_) return *joint_;
    JointDist j(space_.nx(), space_.ny(), ts_.count);
    for (size_t x = 0; x < j.nx; ++x)
        for (size_t y = 0; y < j.ny; ++y) {
            const Rat& muxy = mu_[x * j.ny + y];
            if (muxy == 0) continue;
            for (size_t m = 0; m < j.nm; ++m) {
                Rat v = muxy;
                for (size_t i = 0; i < rounds_.size() && v != 0; ++i) {
                    size_t pk = ts_.prefix_key(m, i);
                    size_t inp = owner_input(i, x, y);
                    auto it = tables_[i].find({inp, pk});
                    if (it == tables_[i].end())
                        fail(Errc::shape_mismatch,
                             "missing conditional on a reachable prefix, round " + std::to_string(i));
                    v *= it->second[static_cast<size_t>(ts_.digit(m, i))];
                }
                j.at(x, y, m) = v;
            }
        }
    require(j.total() == 1, Errc::shape_mismatch, "protocol joint does not sum to 1");
    joint_ = std::move(j);
    return *joint_;
}

void ProtocolDist::validate() const { (void)joint(); }

InputSpace lift_space(const InputSpace& s, size_t n, const EnumerationCaps& caps) {
    require(n >= 1, Errc::shape_mismatch, "lift with n = 0");
    double pts = 1;
    for (size_t i = 0; i < 2 * n; ++i) pts *= static_cast<double>(std::max(s.nx(), s.ny()));
    require(pts <= 1 << 20, Errc::cap_exceeded, "lifted input space too large");
    InputSpace out = s;
    for (size_t k = 1; k < n; ++k) {
        std::vector<std::string> xs, ys;
        for (const auto& a : out.x_labels)
            for (const auto& b : s.x_labels) xs.push_back(a + "," + b);
        for (const auto& a : out.y_labels)
            for (const auto& b : s.y_labels) ys.push_back(a + "," + b);
        out.x_labels = std::move(xs);
        out.y_labels = std::move(ys);
    }
    (void)caps;
    return out;
}

BoolFn xor_lift(const BoolFn& f, size_t n, const EnumerationCaps& caps) {
    require(n >= 1, Errc::shape_mismatch, "xor_lift with n = 0");
    double pts = 1;
    for (size_t i = 0; i < n; ++i) pts *= static_cast<double>(f.nx) * static_cast<double>(f.ny);
    require(pts <= 1 << 20, Errc::cap_exceeded, "lifted function table too large");
    (void)caps;
    BoolFn out = f;
    for (size_t k = 1; k < n; ++k) {
        BoolFn next;
        next.nx = out.nx * f.nx;
        next.ny = out.ny * f.ny;
        next.t.resize(next.nx * next.ny);
        for (size_t xa = 0; xa < out.nx; ++xa)
            for (size_t xb = 0; xb < f.nx; ++xb)
                for (size_t ya = 0; ya < out.ny; ++ya)
                    for (size_t yb = 0; yb < f.ny; ++yb)
                        next.t[(xa * f.nx + xb) * next.ny + (ya * f.ny + yb)] =
                            out(xa, ya) ^ f(xb, yb);
        out = std::move(next);
    }
    return out;
}

std::vector<Rat> tensor_mu(const std::vector<Rat>& mu, size_t nx, size_t ny, size_t n) {
    require(mu.size() == nx * ny, Errc::shape_mismatch, "mu size mismatch");
    std::vector<Rat> out = mu;
    size_t cx = nx, cy = ny;
    for (size_t k = 1; k < n; ++k) {
        std::vector<Rat> next(cx * nx * cy * ny);
        for (size_t xa = 0; xa < cx; ++xa)
            for (size_t xb = 0; xb < nx; ++xb)
                for (size_t ya = 0; ya < cy; ++ya)
                    for (size_t yb = 0; yb < ny; ++yb)
                        next[(xa * nx + xb) * (cy * ny) + (ya * ny + yb)] =
                            out[xa * cy + ya] * mu[xb * ny + yb];
        out = std::move(next);
        cx *= nx;
        cy *= ny;
    }
    return out;
}

AdvantageProfile advantage_profile(const JointDist& p, const BoolFn& f) {
    require(f.nx == p.nx && f.ny == p.ny, Errc::shape_mismatch, "function/table shape mismatch");
    AdvantageProfile ap;
    ap.per_m.resize(p.nm);
    for (size_t m = 0; m < p.nm; ++m) {
        Rat mass(0), signed_sum(0);
        for (size_t x = 0; x < p.nx; ++x)
            for (size_t y = 0; y < p.ny; ++y) {
                const Rat& v = p.at(x, y, m);
                mass += v;
                signed_sum += f.sign(x, y) * v;
            }
        if (mass == 0) continue;
        ap.per_m[m] = signed_sum / mass;
        ap.average_abs += signed_sum >= 0 ? signed_sum : Rat(-signed_sum);
    }
    return ap;
}

namespace {

struct OracleKey {
    size_t budget;
    uint32_t xm, ym;
    bool operator==(const OracleKey& o) const = default;
};
struct OracleKeyHash {
    size_t operator()(const OracleKey& k) const {
        return k.budget * 1315423911u + k.xm * 2654435761u + k.ym;
    }
};

class OracleDp {
public:
    OracleDp(const std::vector<Rat>& mu, const BoolFn& f) : mu_(mu), f_(f) {}

    Rat solve(size_t budget, uint32_t xm, uint32_t ym) {
        OracleKey key{budget, xm, ym};
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        Rat signed_sum(0);
        for (size_t x = 0; x < f_.nx; ++x) {
            if (!(xm >> x & 1)) continue;
            for (size_t y = 0; y < f_.ny; ++y) {
                if (!(ym >> y & 1)) continue;
                signed_sum += f_.sign(x, y) * mu_[x * f_.ny + y];
            }
        }
        Rat best = signed_sum >= 0 ? signed_sum : Rat(-signed_sum);
        if (budget >= 1) {
            for (uint32_t s = xm;; s = (s - 1) & xm) {
                Rat v = solve(budget - 1, s, ym) + solve(budget - 1, xm & ~s, ym);
                if (v > best) best = v;
                if (s == 0) break;
            }
            for (uint32_t s = ym;; s = (s - 1) & ym) {
                Rat v = solve(budget - 1, xm, s) + solve(budget - 1, xm, ym & ~s);
                if (v > best) best = v;
                if (s == 0) break;
            }
        }
        memo_.emplace(key, best);
        return best;
    }

private:
    const std::vector<Rat>& mu_;
    const BoolFn& f_;
    std::unordered_map<OracleKey, Rat, OracleKeyHash> memo_;
};

}  // namespace

Rat optimal_advantage_oracle(const std::vector<Rat>& mu, const BoolFn& f, size_t bits,
                             const EnumerationCaps& caps) {
    require(f.nx <= caps.max_inputs && f.ny <= caps.max_inputs, Errc::cap_exceeded,
            "input space too large for the exhaustive oracle");
    require(bits <= caps.max_oracle_bits, Errc::cap_exceeded, "budget too large for the oracle");
    require(mu.size() == f.nx * f.ny, Errc::shape_mismatch, "mu size mismatch");
    OracleDp dp(mu, f);
    return dp.solve(bits, (1u << f.nx) - 1, (1u << f.ny) - 1);
}

namespace {

PowProd kl_pow(const std::vector<Rat>& a, const std::vector<Rat>& b) {
    PowProd p;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        require(b[i] != 0, Errc::support_violation, "divergence from a prior missing support");
        p.mul(a[i] / b[i], a[i]);
    }
    return p;
}

}  // namespace

DivergenceCache build_divergence_cache(const ProtocolDist& p) {
    const JointDist& j = p.joint();
    const TranscriptSpace& ts = p.transcripts();
    size_t r = ts.rounds();
    DivergenceCache c;
    c.prior.resize(r);
    c.step.resize(r);
    // public mass per (round, prefix, digit)
    std::vector<Rat> pub(j.nm, Rat(0));
    for (size_t m = 0; m < j.nm; ++m) pub[m] = j.mass_m(m);
    for (size_t i = 2; i < r; ++i) {
        std::map<size_t, std::vector<Rat>> num;
        std::map<size_t, Rat> den;
        for (size_t m = 0; m < j.nm; ++m) {
            if (pub[m] == 0) continue;
            size_t pk = ts.prefix_key(m, i);
            auto [it, fresh] = num.try_emplace(pk, std::vector<Rat>(ts.radix[i], Rat(0)));
            it->second[static_cast<size_t>(ts.digit(m, i))] += pub[m];
            den[pk] += pub[m];
        }
        for (auto& [pk, v] : num) {
            for (Rat& e : v) e /= den[pk];
            c.prior[i].emplace(pk, std::move(v));
        }
    }
    return c;
}

namespace {

const PowProd& divergence_step(const ProtocolDist& p, DivergenceCache& cache, size_t round,
                               size_t inp, size_t pk) {
    auto key = std::make_pair(inp, pk);
    auto it = cache.step[round].find(key);
    if (it != cache.step[round].end()) return it->second;
    auto pr = cache.prior[round].find(pk);
    require(pr != cache.prior[round].end(), Errc::zero_mass_event, "prior on unreachable prefix");
    PowProd step = kl_pow(p.conditional(round, inp, pk), pr->second);
    return cache.step[round].emplace(key, std::move(step)).first->second;
}

}  // namespace

DivergenceLedger divergence_costs(const ProtocolDist& p, const DivergenceCache& cache, size_t x,
                                  size_t y, size_t m) {
    DivergenceCache& c = const_cast<DivergenceCache&>(cache);
    const TranscriptSpace& ts = p.transcripts();
    size_t r = ts.rounds();
    DivergenceLedger led;
    led.dA.assign(r, PowProd());
    led.dB.assign(r, PowProd());
    led.d.assign(r, PowProd());
    for (size_t i = 2; i < r; ++i) {
        led.dA[i] = led.dA[i - 1];
        led.dB[i] = led.dB[i - 1];
        size_t pk = ts.prefix_key(m, i);
        size_t inp = p.owner_input(i, x, y);
        const PowProd& step = divergence_step(p, c, i, inp, pk);
        if (p.rounds()[i].owner == Owner::alice)
            led.dA[i].mul(step);
        else
            led.dB[i].mul(step);
        led.d[i] = led.dA[i];
        led.d[i].mul(led.dB[i]);
    }
    led.dA_bits.resize(r);
    led.dB_bits.resize(r);
    led.d_bits.resize(r);
    for (size_t i = 0; i < r; ++i) {
        led.dA_bits[i] = led.dA[i].log2();
        led.dB_bits[i] = led.dB[i].log2();
        led.d_bits[i] = led.d[i].log2();
    }
    return led;
}

DivergenceLedger divergence_costs(const ProtocolDist& p, size_t x, size_t y, size_t m) {
    DivergenceCache cache = build_divergence_cache(p);
    return divergence_costs(p, cache, x, y, m);
}

RealizedRatios realized_ratios(const ProtocolDist& p, const DivergenceCache& cache, size_t x,
                               size_t y, size_t m) {
    DivergenceCache& c = const_cast<DivergenceCache&>(cache);
    const TranscriptSpace& ts = p.transcripts();
    size_t r = ts.rounds();
    RealizedRatios rr;
    rr.all.assign(r, PowProd());
    rr.odd.assign(r, PowProd());
    rr.even.assign(r, PowProd());
    for (size_t i = 2; i < r; ++i) {
        rr.all[i] = rr.all[i - 1];
        rr.odd[i] = rr.odd[i - 1];
        rr.even[i] = rr.even[i - 1];
        size_t pk = ts.prefix_key(m, i);
        size_t inp = p.owner_input(i, x, y);
        auto pr = c.prior[i].find(pk);
        require(pr != c.prior[i].end(), Errc::zero_mass_event, "prior on unreachable prefix");
        size_t v = static_cast<size_t>(ts.digit(m, i));
        Rat own = p.conditional(i, inp, pk)[v];
        require(own != 0 && pr->second[v] != 0, Errc::support_violation,
                "realized ratio on zero-probability step");
        Rat ratio = own / pr->second[v];
        rr.all[i].mul(ratio, Rat(1));
        if (i % 2 == 1)
            rr.odd[i].mul(ratio, Rat(1));
        else
            rr.even[i].mul(ratio, Rat(1));
    }
    return rr;
}

bool check_smooth(const ProtocolDist& p, const Rat& beta) {
    const TranscriptSpace& ts = p.transcripts();
    const JointDist& j = p.joint();
    for (size_t i = 2; i < ts.rounds(); ++i)
        require(ts.radix[i] <= 2, Errc::not_binary_rounds,
                "round " + std::to_string(i) + " is not binary");
    for (size_t i = 2; i < ts.rounds(); ++i) {
        if (ts.radix[i] == 1) continue;  // one-symbol filler carries no bit
        bool alice = p.rounds()[i].owner == Owner::alice;
        // reachable (owner input, prefix) pairs
        std::map<std::pair<size_t, size_t>, uint8_t> reachable;
        for (size_t x = 0; x < j.nx; ++x)
            for (size_t y = 0; y < j.ny; ++y)
                for (size_t m = 0; m < j.nm; ++m)
                    if (j.at(x, y, m) != 0)
                        reachable[{alice ? x : y, ts.prefix_key(m, i)}] = 1;
        for (const auto& [key, unused] : reachable) {
            Rat bias = p.conditional(i, key.first, key.second)[1] - Rat(1, 2);
            if (bias < 0) bias = -bias;
            if (bias > beta) return false;
        }
    }
    return true;
}

bool frontier_valid(const Frontier& f, const TranscriptSpace& ts, const JointDist& support) {
    if (f.nm != ts.count || !(support.nx == f.nx && support.ny == f.ny && support.nm == f.nm))
        return false;
    size_t C = ts.rounds() - 1;
    for (size_t x = 0; x < f.nx; ++x)
        for (size_t y = 0; y < f.ny; ++y) {
            std::unordered_set<uint64_t> stopped;
            bool any = false;
            for (size_t m = 0; m < f.nm; ++m) {
                if (support.at(x, y, m) == 0) continue;
                any = true;
                size_t k = f.at(x, y, m);
                if (k < 1 || k > C) return false;
                stopped.insert(static_cast<uint64_t>(k) << 48 | ts.prefix_key(m, k + 1));
            }
            if (!any) continue;
            for (size_t m = 0; m < f.nm; ++m) {
                if (support.at(x, y, m) == 0) continue;
                size_t hits = 0;
                for (size_t k = 1; k <= C; ++k)
                    if (stopped.count(static_cast<uint64_t>(k) << 48 | ts.prefix_key(m, k + 1)))
                        ++hits;
                if (hits != 1) return false;
            }
        }
    return true;
}

Frontier divergence_frontier(const ProtocolDist& p, const Rat& threshold_bits) {
    const TranscriptSpace& ts = p.transcripts();
    DivergenceCache cache = build_divergence_cache(p);
    Frontier f;
    f.nx = p.space().nx();
    f.ny = p.space().ny();
    f.nm = ts.count;
    f.stop.assign(f.nx * f.ny * f.nm, ts.rounds() - 1);
    PowProd thresh = PowProd::pow2(threshold_bits);
    for (size_t x = 0; x < f.nx; ++x)
        for (size_t y = 0; y < f.ny; ++y)
            for (size_t m = 0; m < f.nm; ++m) {
                if (p.joint().at(x, y, m) == 0) continue;
                DivergenceLedger led = divergence_costs(p, cache, x, y, m);
                size_t stop = ts.rounds() - 1;
                for (size_t idx = 2; idx < ts.rounds(); ++idx) {
                    if (PowProd::cmp(led.d[idx], thresh) > 0) {
                        stop = idx;
                        break;
                    }
                }
                f.stop[(x * f.ny + y) * f.nm + m] = stop;
            }
    return f;
}

std::vector<Rat> posterior_conditional(const JointDist& j, const TranscriptSpace& ts,
                                       size_t round, bool x_view, size_t input, size_t m) {
    std::vector<Rat> num(ts.radix[round], Rat(0));
    Rat den(0);
    size_t pk = ts.prefix_key(m, round);
    for (size_t mm = 0; mm < j.nm; ++mm) {
        if (ts.prefix_key(mm, round) != pk) continue;
        Rat mass = x_view ? j.mass_xm(input, mm) : j.mass_ym(input, mm);
        den += mass;
        num[static_cast<size_t>(ts.digit(mm, round))] += mass;
    }
    require(den > 0, Errc::zero_mass_event, "posterior on an unreachable prefix");
    for (Rat& v : num) v /= den;
    return num;
}

}  // namespace pcw
