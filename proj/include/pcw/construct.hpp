#pragma once

#include "pcw/sets.hpp"

namespace pcw {

// Trace of the witness construction: maximizer rectangle R, Markov-filtered
// G, trimmed T, message-filtered Q, and the conditioned distribution, with
// every stage inequality verified exactly.
struct ConstructionTrace {
    RectSet r, g, t, q_set;
    Rat p_r, p_g_given_r, p_t_given_g, p_q_given_t;
    Rat avg_adv;       // E_{p(m)} |E_{p(xy|m)} [(-1)^f]|
    Rat avg_adv_trim;  // same under p(.|T)
    RectDist q_final;
    CostReport final_cost;
    std::vector<Check> certificates;
};

// Builds the explicit rectangular witness for a bounded-communication
// protocol. DegenerateAdvantage when the average advantage is zero.
ConstructionTrace construct_witness(const ProtocolDist& p, const BoolFn& f,
                                    const CostParams& params, const EnumerationCaps& caps);

}  // namespace pcw
