#pragma once

#include "pcw/sets.hpp"

namespace pcw {

// Two-copy split instance: p over composite inputs with independent copies,
// q rectangular w.r.t. p(xy), per-copy functions f(x1,y1), g(x2,y2).
struct SplitInstance {
    const ProtocolDist* p = nullptr;
    JointDist q;
    BoolFn f, g;
    SplitShape shape{1, 1, 1, 1};
    Rat gamma{1, 2};

    void check() const;
};

// Composite message spaces: m^(1) = (m, y2) indexed m*ny2 + y2, and
// m^(2) = (m, x1) indexed m*nx1 + x1.
struct ChildPair {
    JointDist q1, p1;  // over (x1, y1, m^(1))
    JointDist q2, p2;  // over (x2, y2, m^(2))
    std::vector<Check> identity_checks;

    int chosen_side = 0;  // 1 or 2 after the full pipeline
    JointDist r_final;    // the final rectangular child distribution
    CostReport child_cost;
    std::vector<Check> certificates;
    double parent_cost_bits = 0;
    double realized_constant_bits = 0;  // logged, never asserted
};

// Identity stage: q1/q2/p1/p2 with the four subadditivity identities and the
// product feature verified exactly at every support point.
ChildPair build_children(const SplitInstance& si);

// Full two-copy reduction: advantage-preserving G, cost split L/U, pruning,
// dyadic buckets, per-message maximizer, the r distribution and its trim.
ChildPair split(const SplitInstance& si, const CostParams& params, const EnumerationCaps& caps);

// Protocol distribution for the chosen child (rounds preserved; the first
// message alphabet absorbs the spectator input).
ProtocolDist child_protocol(const SplitInstance& si, int side);

struct HalveLevel {
    size_t copies;
    double parent_bits, child_bits;
    int side;
};

struct HalveResult {
    ProtocolDist leaf_p;
    JointDist leaf_q;
    BoolFn leaf_f;
    std::vector<HalveLevel> levels;
    std::vector<Check> checks;
};

// Halving driver for f^{(+)n}, n in {2, 4}: repeatedly split the
// xor instance, following the chosen side, until one copy remains.
HalveResult halve_driver(const ProtocolDist& p, const JointDist& q, const BoolFn& f_single,
                         size_t n, const CostParams& params, const EnumerationCaps& caps);

}  // namespace pcw
