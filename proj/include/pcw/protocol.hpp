#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcw/dist.hpp"
#include "pcw/joint.hpp"
#include "pcw/powprod.hpp"

namespace pcw {

struct InputSpace {
    std::vector<std::string> x_labels, y_labels;
    size_t nx() const { return x_labels.size(); }
    size_t ny() const { return y_labels.size(); }
};

struct BoolFn {
    size_t nx = 0, ny = 0;
    std::vector<uint8_t> t;  // x*ny + y

    uint8_t operator()(size_t x, size_t y) const { return t[x * ny + y]; }
    int sign(size_t x, size_t y) const { return (*this)(x, y) ? -1 : 1; }  // (-1)^f
};

enum class Owner { pub, alice, bob };

struct RoundSpec {
    Owner owner;
    std::vector<std::string> alphabet;
    size_t arity() const { return alphabet.size(); }
};

// Mixed-radix indexing of transcripts (round 0 = public coin).
struct TranscriptSpace {
    std::vector<size_t> radix;
    size_t count = 1;

    explicit TranscriptSpace(const std::vector<RoundSpec>& rounds);
    TranscriptSpace() = default;

    size_t rounds() const { return radix.size(); }
    std::vector<int> digits(size_t m) const;
    size_t index(const std::vector<int>& d) const;
    int digit(size_t m, size_t round) const;
    // Transcript index with digits of rounds >= k zeroed; two transcripts
    // share a k-prefix iff prefix_key(m,k) agree.
    size_t prefix_key(size_t m, size_t k) const;
};

struct AdvantageProfile {
    std::vector<std::optional<Rat>> per_m;  // signed E_{p(xy|m)}[(-1)^f]; nullopt off support
    Rat average_abs{0};                     // E_{p(m)} |...|
};

struct EnumerationCaps {
    size_t max_inputs = 4;        // |X|, |Y| for exhaustive oracle ops
    size_t max_oracle_bits = 3;   // C for the advantage oracle
    size_t max_transcripts = 16;  // for exhaustive set searches
    size_t max_rect_bits = 24;    // |X||M| + |Y||M| for exhaustive RectSet scans
};

// Factored two-party protocol distribution: mu(x,y) * p(m0) *
// prod p(m_i | x, m_<i) p(m_{i+1} | y, m_<=i). Round 0 is the public coin
// (zero cost); odd rounds belong to Alice, even rounds >= 2 to Bob.
class ProtocolDist {
public:
    ProtocolDist(InputSpace space, std::vector<Rat> mu, std::vector<RoundSpec> rounds);

    const InputSpace& space() const { return space_; }
    const std::vector<Rat>& mu() const { return mu_; }
    const std::vector<RoundSpec>& rounds() const { return rounds_; }
    const TranscriptSpace& transcripts() const { return ts_; }
    size_t num_messages() const { return rounds_.size() - 1; }  // C (message count)
    long comm_bits() const;                                     // sum of ceil(log2 |alphabet_i|), i >= 1

    // Conditional table access. key = (input index, prefix key); public rounds
    // use input index 0.
    void set_conditional(size_t round, size_t input, const std::vector<int>& prefix,
                         std::vector<Rat> probs);
    const std::vector<Rat>& conditional(size_t round, size_t input, size_t prefix_key) const;
    bool has_conditional(size_t round, size_t input, size_t prefix_key) const;

    // p(m_round = v | own input, prefix of m). Missing table entries fail.
    Rat cond_prob(size_t round, size_t input, size_t m, int value) const;

    // Joint p(x, y, m); cached.
    const JointDist& joint() const;
    Rat joint_at(size_t x, size_t y, size_t m) const { return joint().at(x, y, m); }

    // Owner's input index for a round (x index for Alice, y index for Bob, 0 for public).
    size_t owner_input(size_t round, size_t x, size_t y) const;

    // Validation: every reachable conditional present and normalized.
    void validate() const;

private:
    InputSpace space_;
    std::vector<Rat> mu_;
    std::vector<RoundSpec> rounds_;
    TranscriptSpace ts_;
    // tables_[round] : map (input, prefix_key) -> distribution over alphabet
    std::vector<std::map<std::pair<size_t, size_t>, std::vector<Rat>>> tables_;
    mutable std::optional<JointDist> joint_;
};

// f^{(+)n} on lifted labels; CapExceeded past the caps.
BoolFn xor_lift(const BoolFn& f, size_t n, const EnumerationCaps& caps);
InputSpace lift_space(const InputSpace& s, size_t n, const EnumerationCaps& caps);
std::vector<Rat> tensor_mu(const std::vector<Rat>& mu, size_t nx, size_t ny, size_t n);

AdvantageProfile advantage_profile(const JointDist& p, const BoolFn& f);

// Exact max over deterministic protocols with <= bits of communication of
// E_mu[(-1)^{pi(xy)+f(xy)}], output a function of the transcript. Computed by
// dynamic programming over sub-rectangles; randomized protocols cannot beat
// it for a fixed mu.
Rat optimal_advantage_oracle(const std::vector<Rat>& mu, const BoolFn& f, size_t bits,
                             const EnumerationCaps& caps);

// Per-round divergence costs d^A_j(xm), d^B_j(ym), d_j = d^A + d^B, as
// 2^d PowProds (index j ranges over 0..C with d_0 = d_1 = 0).
struct DivergenceLedger {
    std::vector<PowProd> dA, dB, d;  // cumulative, 2^bits
    std::vector<double> dA_bits, dB_bits, d_bits;
};

// Shared per-protocol tables: public priors per (round, prefix) and one-step
// divergences per (round, input, prefix).
struct DivergenceCache {
    std::vector<std::map<size_t, std::vector<Rat>>> prior;
    std::vector<std::map<std::pair<size_t, size_t>, PowProd>> step;
};
DivergenceCache build_divergence_cache(const ProtocolDist& p);

DivergenceLedger divergence_costs(const ProtocolDist& p, const DivergenceCache& cache, size_t x,
                                  size_t y, size_t m);
DivergenceLedger divergence_costs(const ProtocolDist& p, size_t x, size_t y, size_t m);

// Cumulative realized log-ratios prod_{2<=i<=j} p(m_i | own input, m_<i) /
// p(m_i | m_<i) along a fixed transcript, split by round parity.
struct RealizedRatios {
    std::vector<PowProd> all, odd, even;  // 2^(sum of log-ratios), index j in 0..C
};
RealizedRatios realized_ratios(const ProtocolDist& p, const DivergenceCache& cache, size_t x,
                               size_t y, size_t m);

// True iff all rounds >= 2 are binary and every reachable conditional bit
// bias is within beta of 1/2. NotBinaryRounds when a round >= 2 is not binary.
bool check_smooth(const ProtocolDist& p, const Rat& beta);

// Stopping rule on transcript prefixes: stop index in {1..C} per (x,y,m).
struct Frontier {
    size_t nx = 0, ny = 0, nm = 0;
    std::vector<size_t> stop;  // (x*ny + y)*nm + m

    size_t at(size_t x, size_t y, size_t m) const { return stop[(x * ny + y) * nm + m]; }
};

// "every full transcript contains exactly one stopped prefix", per (x,y)
// over the transcripts supported at that input pair.
bool frontier_valid(const Frontier& f, const TranscriptSpace& ts, const JointDist& support);

// Frontier stopping when cumulative divergence d_j exceeds threshold_bits.
Frontier divergence_frontier(const ProtocolDist& p, const Rat& threshold_bits);

// p(m_round | own input, m_<round) as one party sees it (marginalizing the
// other input when the round belongs to the other party).
std::vector<Rat> posterior_conditional(const JointDist& j, const TranscriptSpace& ts,
                                       size_t round, bool x_view, size_t input, size_t m);

}  // namespace pcw
