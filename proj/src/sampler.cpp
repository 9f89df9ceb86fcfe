#include "pcw/sampler.hpp"

#include <cmath>

namespace pcw {

namespace {

inline uint32_t rotl32(uint32_t v, int n) { return (v << n) | (v >> (32 - n)); }

inline void quarter_round(uint32_t& a, uint32_t& b, uint32_t& c, uint32_t& d) {
    a += b;
    d ^= a;
    d = rotl32(d, 16);
    c += d;
    b ^= c;
    b = rotl32(b, 12);
    a += b;
    d ^= a;
    d = rotl32(d, 8);
    c += d;
    b ^= c;
    b = rotl32(b, 7);
}

void chacha_block(const uint32_t in[16], uint32_t out[16]) {
    for (int i = 0; i < 16; ++i) out[i] = in[i];
    for (int r = 0; r < 10; ++r) {
        quarter_round(out[0], out[4], out[8], out[12]);
        quarter_round(out[1], out[5], out[9], out[13]);
        quarter_round(out[2], out[6], out[10], out[14]);
        quarter_round(out[3], out[7], out[11], out[15]);
        quarter_round(out[0], out[5], out[10], out[15]);
        quarter_round(out[1], out[6], out[11], out[12]);
        quarter_round(out[2], out[7], out[8], out[13]);
        quarter_round(out[3], out[4], out[9], out[14]);
    }
    for (int i = 0; i < 16; ++i) out[i] += in[i];
}

}  // namespace

uint64_t SharedRandomness::word(uint64_t stream, uint64_t index) const {
    uint64_t block = index / 8, slot = index % 8;
    uint64_t k2 = seed_ ^ 0x9e3779b97f4a7c15ull;
    uint64_t k3 = stream ^ 0xd1b54a32d192ed03ull;
    uint32_t st[16] = {
        0x61707865u, 0x3320646eu, 0x79622d32u, 0x6b206574u,
        static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32),
        static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32),
        static_cast<uint32_t>(k2), static_cast<uint32_t>(k2 >> 32),
        static_cast<uint32_t>(k3), static_cast<uint32_t>(k3 >> 32),
        static_cast<uint32_t>(block), static_cast<uint32_t>(block >> 32),
        0x70637772u, 0x00000001u,
    };
    uint32_t out[16];
    chacha_block(st, out);
    return static_cast<uint64_t>(out[2 * slot]) | static_cast<uint64_t>(out[2 * slot + 1]) << 32;
}

bool SharedRandomness::Dyadic::le(const Rat& r) const {
    if (r >= 1) return true;
    if (r <= 0) return false;
    // (w+1)/2^64 <= r  iff  (w+1) den(r) <= num(r) 2^64
    Int lhs(static_cast<unsigned long>(w));
    lhs += 1;
    lhs *= r.get_den();
    Int rhs = r.get_num();
    mpz_mul_2exp(rhs.get_mpz_t(), rhs.get_mpz_t(), 64);
    return lhs <= rhs;
}

bool SharedRandomness::Dyadic::le(const PowProd& r) const {
    Int num(static_cast<unsigned long>(w));
    num += 1;
    Rat lhs(num);
    lhs /= rat_pow2(64);
    lhs.canonicalize();
    return PowProd::of(lhs) <= r;
}

double SharedRandomness::Dyadic::value() const {
    return (static_cast<double>(w) + 1.0) * std::ldexp(1.0, -64);
}

namespace {
constexpr uint64_t kMersenne61 = (1ull << 61) - 1;

uint64_t mulmod61(uint64_t a, uint64_t b) {
    unsigned __int128 t = static_cast<unsigned __int128>(a) * b;
    uint64_t lo = static_cast<uint64_t>(t & kMersenne61);
    uint64_t hi = static_cast<uint64_t>(t >> 61);
    uint64_t s = lo + hi;
    if (s >= kMersenne61) s -= kMersenne61;
    return s;
}
}  // namespace

HashFn::HashFn(const SharedRandomness& sr, uint64_t stream, uint64_t index_base, uint64_t range)
    : range_(range) {
    require(range >= 1, Errc::config_error, "hash range must be positive");
    a_ = sr.word(stream, index_base) % (kMersenne61 - 1) + 1;
    b_ = sr.word(stream, index_base + 1) % kMersenne61;
}

uint64_t HashFn::operator()(int64_t z) const {
    uint64_t zz = static_cast<uint64_t>(z - INT64_MIN) % kMersenne61;
    return (mulmod61(a_, zz) + b_) % kMersenne61 % range_;
}

uint64_t psi_ledger_cap(long l_bits_ceil, long eps_log2) {
    long l = l_bits_ceil > 0 ? l_bits_ceil : 0;
    return static_cast<uint64_t>(l + 2 * eps_log2 + 16);
}

OneRoundSample one_round_sample(const FiniteDist& u, const FiniteDist& v,
                                const PowProd& two_pow_l, long eps_log2,
                                const SharedRandomness& sr, uint64_t stream) {
    require(u.labels() == v.labels(), Errc::shape_mismatch, "u and v over different outcomes");
    require(eps_log2 >= 2, Errc::config_error, "eps must be at most 1/4");
    size_t n = u.size();
    require(n >= 1, Errc::shape_mismatch, "empty outcome set");

    // scan horizon: 2^6 |support| 2^L ceil(ln 1/eps), saturated
    uint64_t horizon = 1ull << 16;
    {
        double formula = 64.0 * static_cast<double>(n) *
                         std::exp2(std::min(two_pow_l.log2(), 40.0)) *
                         std::ceil(0.6931 * static_cast<double>(eps_log2) + 1);
        if (formula < static_cast<double>(horizon)) horizon = static_cast<uint64_t>(formula) + 1;
    }

    long e = eps_log2;
    long zbits = e + static_cast<long>(std::ceil(std::log2(static_cast<double>(e) + 1))) + 1;
    uint64_t index_range = 1ull << std::min<long>(e, 62);
    uint64_t value_range = 1ull << std::min<long>(zbits, 62);

    constexpr uint64_t kDom = 1ull << 56;
    HashFn h_index(sr, stream, 0 * kDom, index_range);
    HashFn h_value(sr, stream, 0 * kDom + 2, value_range);

    // shared candidate stream: z uniform over the outcome set (rejection to
    // kill modulo bias), rho dyadic in (0,1]
    auto candidate = [&](uint64_t i, size_t* z, SharedRandomness::Dyadic* rho) {
        uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        uint64_t w;
        uint64_t salt = 0;
        do {
            w = sr.word(stream, 1 * kDom + i * 16 + salt);
            ++salt;
        } while (w >= lim && salt < 12);
        *z = static_cast<size_t>(w % n);
        *rho = sr.unit(stream, 1 * kDom + i * 16 + 15);
    };

    OneRoundSample out;
    // Alice: first index with rho <= u(z)
    uint64_t ia = 0;
    size_t za = 0;
    bool found = false;
    for (uint64_t i = 1; i <= horizon; ++i) {
        size_t z;
        SharedRandomness::Dyadic rho{};
        candidate(i, &z, &rho);
        if (u.mode() == NumericMode::exact ? rho.le(u.mass_rat(z))
                                           : rho.value() <= u.mass_double(z)) {
            ia = i;
            za = z;
            found = true;
            break;
        }
    }
    if (!found) {
        out.horizon_exhausted = true;
        out.a = 0;
        out.b = std::nullopt;
        out.ledger.send_a(static_cast<uint64_t>(e + zbits));
        return out;
    }
    out.a = za;
    uint64_t tag_index = h_index(static_cast<int64_t>(ia));
    uint64_t tag_value = h_value(static_cast<int64_t>(za));
    out.ledger.send_a(static_cast<uint64_t>(e + zbits));

    // Bob: first candidate with rho <= 2^L v(z) whose hashes both match
    for (uint64_t j = 1; j <= horizon; ++j) {
        size_t z;
        SharedRandomness::Dyadic rho{};
        candidate(j, &z, &rho);
        bool pass;
        if (v.mode() == NumericMode::exact) {
            PowProd thr = two_pow_l;
            if (v.mass_rat(z) == 0) continue;
            thr.mul(v.mass_rat(z), Rat(1));
            pass = rho.le(thr);
        } else {
            pass = rho.value() <= std::exp2(std::min(two_pow_l.log2(), 80.0)) * v.mass_double(z);
        }
        if (!pass) continue;
        if (h_index(static_cast<int64_t>(j)) != tag_index) continue;
        if (h_value(static_cast<int64_t>(z)) != tag_value) continue;
        out.b = z;
        return out;
    }
    out.b = std::nullopt;  // bot
    return out;
}

uint64_t tau_ledger_cap(size_t length, long eps_log2) {
    double cl = std::ceil(std::log2(static_cast<double>(length) + 1)) +
                static_cast<double>(eps_log2);
    return static_cast<uint64_t>(12.0 * cl);
}

FirstDiffResult first_difference(const std::vector<int>& ma, const std::vector<int>& mb,
                                 long eps_log2, const SharedRandomness& sr, uint64_t stream) {
    require(ma.size() == mb.size(), Errc::shape_mismatch, "strings of different length");
    size_t c = ma.size();
    FirstDiffResult out;
    if (c == 0) {
        out.equal = true;
        return out;
    }
    long levels = 1;
    while ((1ull << levels) < c) ++levels;
    ++levels;  // full-string check
    long b = eps_log2 + static_cast<long>(std::ceil(std::log2(3.0 * static_cast<double>(levels))));
    uint64_t fold_range = 1ull << std::min<long>(b, 62);

    // polynomial prefix hashes over the 61-bit Mersenne field, then a
    // pairwise fold to b bits
    constexpr uint64_t kDom = 1ull << 56;
    uint64_t r = sr.word(stream, 2 * kDom) % (kMersenne61 - 2) + 2;
    HashFn fold(sr, stream, 2 * kDom + 4, fold_range);
    auto prefix_hash = [&](const std::vector<int>& s, size_t len) {
        uint64_t acc = 0;
        for (size_t i = 0; i < len; ++i) {
            acc = mulmod61(acc, r);
            uint64_t sym = (static_cast<uint64_t>(s[i]) + 1) % kMersenne61;
            acc = (acc + sym) % kMersenne61;
        }
        return fold(static_cast<int64_t>(acc));
    };

    auto compare_prefix = [&](size_t len) {
        out.ledger.send_a(static_cast<uint64_t>(b));
        out.ledger.send_b(1);
        return prefix_hash(ma, len) == prefix_hash(mb, len);
    };

    if (compare_prefix(c)) {
        out.equal = true;
        return out;
    }
    size_t lo = 0, hi = c;  // prefix of length lo believed equal, hi believed different
    while (hi - lo > 1) {
        size_t mid = (lo + hi) / 2;
        if (compare_prefix(mid))
            lo = mid;
        else
            hi = mid;
    }
    out.equal = false;
    out.index = hi;  // 1-based first differing position
    return out;
}

}  // namespace pcw
