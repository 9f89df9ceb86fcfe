#pragma once

#include <optional>

#include "pcw/joint.hpp"
#include "pcw/protocol.hpp"

namespace pcw {

// Event whose indicator factors as 1_A(x,m) * 1_B(y,m).
struct RectSet {
    size_t nx = 0, ny = 0, nm = 0;
    std::vector<uint8_t> in_a;  // x*nm + m
    std::vector<uint8_t> in_b;  // y*nm + m

    static RectSet full(size_t nx, size_t ny, size_t nm);
    bool contains(size_t x, size_t y, size_t m) const {
        return in_a[x * nm + m] && in_b[y * nm + m];
    }
    // bit string (in_a then in_b) for deterministic tie-breaks
    std::vector<uint8_t> encoding() const;
    bool subset_of(const RectSet& o) const;
};

Rat mass_of(const JointDist& d, const RectSet& s);
JointDist conditioned(const JointDist& d, const RectSet& s);  // d(.|s), ZeroMassEvent if empty

// q(xym) = mu(xy) * A(x,m) * B(y,m), stored factored so the g1/g2
// decomposition against a protocol is canonical.
class RectDist {
public:
    RectDist() = default;  // empty; assign before use
    RectDist(size_t nx, size_t ny, size_t nm, std::vector<Rat> mu, std::vector<Rat> a,
             std::vector<Rat> b);

    // p(. | R) for a protocol distribution and rectangular event.
    static RectDist conditioned_on(const ProtocolDist& p, const RectSet& r);
    // q = p itself (protocols are self-rectangular).
    static RectDist self(const ProtocolDist& p);

    const JointDist& joint() const { return joint_; }
    const std::vector<Rat>& mu() const { return mu_; }
    const Rat& a(size_t x, size_t m) const { return a_[x * nm_ + m]; }
    const Rat& b(size_t y, size_t m) const { return b_[y * nm_ + m]; }
    size_t nx() const { return nx_; }
    size_t ny() const { return ny_; }
    size_t nm() const { return nm_; }

    RectDist scaled_a(size_t x, size_t m, const Rat& factor) const;
    RectDist scaled_b(size_t y, size_t m, const Rat& factor) const;

private:
    size_t nx_ = 0, ny_ = 0, nm_ = 0;
    std::vector<Rat> mu_, a_, b_;
    JointDist joint_;
};

struct CostParams {
    Rat I{1};
    Rat delta{1, 15};
    Rat K{3};

    Rat adv_exponent() const { return Rat(12) * I / delta; }  // 12 I / delta
    void check() const;
};

struct CostReport {
    bool finite = true;
    PowProd value;  // 2^M at the sup (meaningless when !finite)
    size_t arg_x = 0, arg_y = 0, arg_m = 0;
    PowProd term_info_x, term_info_y, term_density, term_adv;
    double bits() const { return value.log2(); }
};

// M_I(q, p, f): sup over supp(q) of q(x|ym)/p(x|y) * q(y|xm)/p(y|x) *
// (q/p)^I * |E_{q(xy|m)}[(-1)^f]|^{-12I/delta}. Infinite iff some supported
// m has zero conditional advantage.
CostReport marginal_cost(const JointDist& q, const JointDist& p, const BoolFn& f,
                         const CostParams& params);
// External variant: q(xy|m)/p(xy) * (q/p)^I * |adv|^{-12I/delta}.
CostReport external_cost(const JointDist& q, const JointDist& p, const BoolFn& f,
                         const CostParams& params);

// Split-input multiplicativity identities for a rectangular v over
// (x1 x2, y1 y2, m), checked exactly at every support point.
struct SplitShape {
    size_t nx1, nx2, ny1, ny2;
    size_t x(size_t x1, size_t x2) const { return x1 * nx2 + x2; }
    size_t y(size_t y1, size_t y2) const { return y1 * ny2 + y2; }
    size_t x1(size_t x) const { return x / nx2; }
    size_t x2(size_t x) const { return x % nx2; }
    size_t y1(size_t y) const { return y / ny2; }
    size_t y2(size_t y) const { return y % ny2; }
};

struct MultiplicativityReport {
    bool pass[4] = {true, true, true, true};
    size_t fail_x = 0, fail_y = 0, fail_m = 0;  // first failing point, if any
    bool all() const { return pass[0] && pass[1] && pass[2] && pass[3]; }
};

MultiplicativityReport check_multiplicativity(const JointDist& v, const SplitShape& shape);

// g1(x,m) * g2(y,m) = q(xym)/p(xym): the canonical decomposition from the
// stored A/B weights and the protocol's per-side factors.
struct GFactorization {
    size_t nx = 0, ny = 0, nm = 0;
    std::vector<Rat> g1, g2;

    const Rat& g1_at(size_t x, size_t m) const { return g1[x * nm + m]; }
    const Rat& g2_at(size_t y, size_t m) const { return g2[y * nm + m]; }
};

GFactorization g_factorization(const RectDist& q, const ProtocolDist& p);

// Recovers A/B weight tables from a rectangular joint by per-message factor
// extraction (BFS over the support's bipartite components); NotRectangular
// when no factorization exists.
RectDist rect_factorize(const JointDist& q, const std::vector<Rat>& mu);

struct WitnessResult {
    RectDist q;
    CostReport report;
    std::string route;  // which search stage produced it
};

// Certified upper bound on M_I(p, f): best of q=p, conditioning on every
// RectSet within the cap (else a seeded greedy), and 200 steps of
// coordinate-wise multiplicative refinement.
WitnessResult witness_search(const ProtocolDist& p, const BoolFn& f, const CostParams& params,
                             const EnumerationCaps& caps, uint64_t seed = 1,
                             bool require_exhaustive = false);

}  // namespace pcw
