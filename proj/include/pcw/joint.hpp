#pragma once

#include <cstdint>
#include <vector>

#include "pcw/rational.hpp"

namespace pcw {

// A joint distribution over (x, y, m) index triples, the common currency of
// the cost evaluators and the set pipelines. Storage is x-major:
// w[(x*ny + y)*nm + m].
struct JointDist {
    size_t nx = 0, ny = 0, nm = 0;
    std::vector<Rat> w;

    JointDist() = default;
    JointDist(size_t nx_, size_t ny_, size_t nm_)
        : nx(nx_), ny(ny_), nm(nm_), w(nx_ * ny_ * nm_, Rat(0)) {}

    size_t idx(size_t x, size_t y, size_t m) const { return (x * ny + y) * nm + m; }
    const Rat& at(size_t x, size_t y, size_t m) const { return w[idx(x, y, m)]; }
    Rat& at(size_t x, size_t y, size_t m) { return w[idx(x, y, m)]; }

    Rat total() const;
    Rat mass_m(size_t m) const;
    Rat mass_xm(size_t x, size_t m) const;
    Rat mass_ym(size_t y, size_t m) const;
    Rat mass_xy(size_t x, size_t y) const;
    Rat mass_x(size_t x) const;
    Rat mass_y(size_t y) const;

    void normalize();  // ZeroMassEvent when empty
    bool same_shape(const JointDist& o) const { return nx == o.nx && ny == o.ny && nm == o.nm; }
};

// supp(a) subset of supp(b)
bool support_subset(const JointDist& a, const JointDist& b);

// Exact rectangularity test of q with respect to mu (the cross-ratio
// identity q(xym) q(x'y'm) mu(x'y) mu(xy') == q(x'ym) q(xy'm) mu(xy) mu(x'y')
// on the support, plus the requirement supp(q) lies where mu > 0).
bool is_rectangular(const JointDist& q, const std::vector<Rat>& mu_xy);

}  // namespace pcw
