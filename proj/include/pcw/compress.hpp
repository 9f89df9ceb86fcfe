#pragma once

#include <memory>

#include "pcw/check.hpp"
#include "pcw/rect.hpp"
#include "pcw/sampler.hpp"

namespace pcw {

struct RunResult {
    int output = 0;  // +-1, shared by both parties
    bool aborted = false;
    bool horizon_exceeded = false;
    size_t tracked_m = 0;      // analysis transcript (law p(m | x y))
    bool tracked_valid = false;
    CommLedger ledger;
    // step-3 instrumentation for the frontier sampler
    size_t hop_attempts = 0, first_hop_prefix = 0, first_hop_len = 0;
    bool hop_recorded = false;
};

// An executable two-party procedure produced by a compressor: deterministic
// in (inputs, seed, replica), never exceeding its declared bit budget.
class ExecProtocol {
public:
    virtual ~ExecProtocol() = default;
    virtual RunResult run(size_t x, size_t y, const SharedRandomness& sr,
                          uint64_t replica) const = 0;

    std::string kind;
    uint64_t budget_bits = 0;  // saturating upper bound, hard abort past it
    long eps_log2 = 0;
    double m_bits = 0;  // the slack-shifted cost driving the thresholds
};

// General compressor: correlated first message, private resampling against
// shared thresholds, hash-guided correction loop, density acceptance tests.
std::unique_ptr<ExecProtocol> compress_general(const ProtocolDist& p, const RectDist& q,
                                               const BoolFn& f, const CostParams& params,
                                               long eps_log2_override = 0);

// Frontier-based compressor for smooth protocols and the external cost.
std::unique_ptr<ExecProtocol> compress_external(const ProtocolDist& p_smooth, const RectDist& q,
                                                const BoolFn& f, const CostParams& params,
                                                const Rat& beta, long eps_log2_override = 0);

// Round-preserving compressor; p must have an even number of rounds with a
// binary last round.
std::unique_ptr<ExecProtocol> compress_bounded_round(const ProtocolDist& p, const RectDist& q,
                                                     const BoolFn& f, size_t rounds,
                                                     const CostParams& params,
                                                     long eps_log2_override = 0);

// Communication-independent compressor: shared exhaustive transcript stream,
// exactly 2 ceil(log2 1/eps) + 1 bits on every run.
std::unique_ptr<ExecProtocol> compress_commfree(const ProtocolDist& p, const RectDist& q,
                                                const BoolFn& f, const CostParams& params);

struct SmoothedPair {
    ProtocolDist p_smooth;
    RectDist q_smooth;
    size_t block_len = 1;  // odd
    Rat beta;
    std::vector<Check> checks;
};

// Block-repetition smoothing: every bit of p is replaced by an odd-length
// block of beta-biased bits, decoded by majority; the witness follows along.
SmoothedPair smooth(const ProtocolDist& p, const RectDist& q, const BoolFn& f, const Rat& beta,
                    size_t block_len, const CostParams& params);

// Exact per-block decode error of the smoothing construction (majority of
// block_len bits each matching with probability 1/2 + beta).
Rat block_decode_error(const Rat& beta, size_t block_len);

struct AdvantageEstimate {
    double estimate = 0, lo = 0, hi = 0;
    size_t trials = 0, plus = 0, minus = 0, aborts = 0, horizon = 0;
};

// Monte Carlo advantage with a Wilson-style 95% interval; aborted runs
// contribute exactly zero (their conditional mean).
AdvantageEstimate estimate_advantage(const ExecProtocol& ep, const std::vector<Rat>& mu,
                                     const BoolFn& f, size_t trials, const SharedRandomness& sr);

// Divergence-concentration check: exhaustively computed tail mass of the
// frontier log-ratio deviation against 2 exp(-c alpha^2 / tau), with
// c = (1/2 - beta)^2 ln 2.
std::vector<Check> check_divergence_concentration(const ProtocolDist& p, const Rat& beta,
                                                  const Rat& threshold_bits,
                                                  const std::vector<Rat>& alphas);

}  // namespace pcw
