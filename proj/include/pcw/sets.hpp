#pragma once

#include "pcw/check.hpp"
#include "pcw/rect.hpp"

namespace pcw {

struct TrimEvent {
    int kind;  // 0 = xm rule, 1 = ym rule, 2 = m rule
    size_t first, second;
    Rat mass;  // a-mass removed by the firing
};

struct TrimResult {
    RectSet t;
    std::vector<uint8_t> m_alive;  // messages not removed by the m rule
    std::vector<TrimEvent> deleted_log;
    Rat a_mass;  // a(T)

    bool contains(size_t x, size_t y, size_t m) const {
        return m_alive[m] && t.contains(x, y, m);
    }
};

// Iterative deletion of xm slices with a(xm|T)/b(xm) < kappa, ym slices and
// m slices likewise, in a pinned scan order, until stable.
TrimResult trim(const JointDist& a, const JointDist& b, const Rat& kappa);

// Exhaustive argmax of v(R)^delta * E_{v(m|R)} |E_{v(xy|mR)} [(-1)^f]| over
// rectangular sets, via a per-message Pareto sweep; ties resolved to the
// lexicographically smallest encoding.
RectSet maximize_rect(const JointDist& v, const BoolFn& f, const Rat& delta,
                      const EnumerationCaps& caps);

// Objective value of the display above for a given R.
PowProd rect_objective(const JointDist& v, const BoolFn& f, const Rat& delta, const RectSet& r);

// E_{v(m|Z)} |E_{v(xy|mZ)}[(-1)^f]|  >=
//   (1 - delta^2 - delta / v(Z|R)) * v(R)^-delta * E_{v(m)} |E_{v(xy|m)}[(-1)^f]|
// for the exhaustive maximizer R and rectangular Z inside R.
Check verify_adv_preserving(const JointDist& v, const BoolFn& f, const Rat& delta,
                            const RectSet& r, const RectSet& z);

// w-measurable subset over (x1, y2) per message.
struct WSet {
    size_t nx1 = 0, ny2 = 0, nm = 0;
    std::vector<uint8_t> in;  // (x1*ny2 + y2)*nm + m

    bool at(size_t x1, size_t y2, size_t m) const { return in[(x1 * ny2 + y2) * nm + m]; }
};

struct GPerMResult {
    WSet g;
    std::vector<Check> checks;  // pointwise advantage-preservation at each surviving w
};

// For each m, the w-measurable maximizer of q(G|m)^delta |E_{q(xy|mG)}[(-1)^{f xor g}]|,
// with the pointwise conclusion |E_{q(xy|w)}| >= (1-delta) q(G|m)^-delta |E_{q(xy|m)}|
// verified at every surviving w.
GPerMResult build_g_per_m(const JointDist& q, const SplitShape& shape, const BoolFn& f,
                          const BoolFn& g, const Rat& delta, const EnumerationCaps& caps);

struct ConsequenceSets {
    std::vector<uint8_t> s_k;          // per (x,y,m)
    std::vector<uint8_t> r_k;          // per (x,y,m)
    std::vector<uint8_t> t_rounds;     // bounded-round variant
    std::vector<uint8_t> t_commfree;   // communication-independent variant
    PowProd m_pow;                     // 2^{M(q,p,f)} used
    std::vector<Check> checks;
};

// Builds S_K, R_K and the two T_K variants for the cost of (q, p, f) and
// verifies the four complement-mass bounds.
ConsequenceSets build_consequence_sets(const RectDist& q, const ProtocolDist& p, const BoolFn& f,
                                       const CostParams& params);

// External-cost variant of the consequence sets: the S_K / R_K masses are
// bounded by 4 * 2^{-(M_ext + K I)/I} for K >= 2, with the first-message
// ratio taken against the public prior.
ConsequenceSets build_consequence_sets_external(const RectDist& q, const ProtocolDist& p,
                                                const BoolFn& f, const CostParams& params);

// Pinsker-sum and advantage-expectation bounds under q.
std::vector<Check> check_expectation_bounds(const RectDist& q, const ProtocolDist& p,
                                            const BoolFn& f, const CostParams& params);
std::vector<Check> check_expectation_bounds(const JointDist& q, const ProtocolDist& p,
                                            const BoolFn& f, const CostParams& params);

}  // namespace pcw
