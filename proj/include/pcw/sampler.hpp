#pragma once

#include <cstdint>
#include <optional>

#include "pcw/dist.hpp"
#include "pcw/powprod.hpp"

namespace pcw {

// Deterministic shared randomness: the ChaCha20 block function (10 double
// rounds, standard constants) keyed by (seed, stream id), with the block
// counter driven by the word index. Same (seed, stream, index) always yields
// the same word; values are read-only after construction.
class SharedRandomness {
public:
    explicit SharedRandomness(uint64_t seed) : seed_(seed) {}
    uint64_t seed() const { return seed_; }

    uint64_t word(uint64_t stream, uint64_t index) const;

    // threshold in (0,1] with value (w+1)/2^64
    struct Dyadic {
        uint64_t w;
        // exact comparisons of (w+1)/2^64 against rational / product values
        bool le(const Rat& r) const;
        bool le(const PowProd& r) const;
        double value() const;
    };
    Dyadic unit(uint64_t stream, uint64_t index) const { return Dyadic{word(stream, index)}; }

private:
    uint64_t seed_;
};

// Pairwise-uniform hash family over the integers, keyed from the shared
// randomness: ((a z + b) mod p) mod range with p = 2^61 - 1.
class HashFn {
public:
    HashFn(const SharedRandomness& sr, uint64_t stream, uint64_t index_base, uint64_t range);
    uint64_t operator()(int64_t z) const;
    uint64_t range() const { return range_; }

private:
    uint64_t a_, b_, range_;
};

struct CommLedger {
    uint64_t bits_a = 0, bits_b = 0, rounds = 0;

    uint64_t total() const { return bits_a + bits_b; }
    void send_a(uint64_t bits) {
        bits_a += bits;
        ++rounds;
    }
    void send_b(uint64_t bits) {
        bits_b += bits;
        ++rounds;
    }
};

struct OneRoundSample {
    size_t a = 0;                // Alice's sample, distributed exactly as u
    std::optional<size_t> b;     // Bob's identification; nullopt is bot
    bool horizon_exhausted = false;
    CommLedger ledger;
};

// Correlated sampler: shared stream of (candidate, threshold) pairs; Alice
// keeps the first index passing u, sends an index hash and auxiliary value
// hashes; Bob scans candidates passing 2^L v and outputs the first full hash
// match. eps = 2^-eps_log2.
OneRoundSample one_round_sample(const FiniteDist& u, const FiniteDist& v,
                                const PowProd& two_pow_l, long eps_log2,
                                const SharedRandomness& sr, uint64_t stream);

struct FirstDiffResult {
    bool equal = false;
    size_t index = 0;  // 1-based first difference when !equal
    CommLedger ledger;
};

// Random-hash binary search for the first index where two equal-length
// strings differ; failure probability at most 2^-eps_log2 per call.
FirstDiffResult first_difference(const std::vector<int>& ma, const std::vector<int>& mb,
                                 long eps_log2, const SharedRandomness& sr, uint64_t stream);

// Hard per-call ledger caps (asserted in tests and by the acceptance suite).
uint64_t psi_ledger_cap(long l_bits_ceil, long eps_log2);
uint64_t tau_ledger_cap(size_t length, long eps_log2);

}  // namespace pcw
