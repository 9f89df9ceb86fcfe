#include "pcw/joint.hpp"

#include "pcw/error.hpp"

namespace pcw {

Rat JointDist::total() const {
    Rat s(0);
    for (const Rat& v : w) s += v;
    return s;
}

Rat JointDist::mass_m(size_t m) const {
    Rat s(0);
    for (size_t x = 0; x < nx; ++x)
        for (size_t y = 0; y < ny; ++y) s += at(x, y, m);
    return s;
}

Rat JointDist::mass_xm(size_t x, size_t m) const {
    Rat s(0);
    for (size_t y = 0; y < ny; ++y) s += at(x, y, m);
    return s;
}

Rat JointDist::mass_ym(size_t y, size_t m) const {
    Rat s(0);
    for (size_t x = 0; x < nx; ++x) s += at(x, y, m);
    return s;
}

Rat JointDist::mass_xy(size_t x, size_t y) const {
    Rat s(0);
    for (size_t m = 0; m < nm; ++m) s += at(x, y, m);
    return s;
}

Rat JointDist::mass_x(size_t x) const {
    Rat s(0);
    for (size_t y = 0; y < ny; ++y) s += mass_xy(x, y);
    return s;
}

Rat JointDist::mass_y(size_t y) const {
    Rat s(0);
    for (size_t x = 0; x < nx; ++x) s += mass_xy(x, y);
    return s;
}

void JointDist::normalize() {
    Rat t = total();
    require(t > 0, Errc::zero_mass_event, "normalizing an empty joint distribution");
    for (Rat& v : w) v /= t;
}

bool support_subset(const JointDist& a, const JointDist& b) {
    if (!a.same_shape(b)) return false;
    for (size_t i = 0; i < a.w.size(); ++i)
        if (a.w[i] != 0 && b.w[i] == 0) return false;
    return true;
}

bool is_rectangular(const JointDist& q, const std::vector<Rat>& mu_xy) {
    require(mu_xy.size() == q.nx * q.ny, Errc::shape_mismatch, "mu size mismatch");
    auto mu = [&](size_t x, size_t y) -> const Rat& { return mu_xy[x * q.ny + y]; };

    for (size_t m = 0; m < q.nm; ++m) {
        std::vector<uint8_t> in_x(q.nx, 0), in_y(q.ny, 0);
        for (size_t x = 0; x < q.nx; ++x)
            for (size_t y = 0; y < q.ny; ++y)
                if (q.at(x, y, m) != 0) {
                    if (mu(x, y) == 0) return false;
                    in_x[x] = 1;
                    in_y[y] = 1;
                }
        // support pattern must be (X_m x Y_m) intersected with supp(mu)
        for (size_t x = 0; x < q.nx; ++x)
            for (size_t y = 0; y < q.ny; ++y)
                if (in_x[x] && in_y[y] && mu(x, y) != 0 && q.at(x, y, m) == 0) return false;
        // cross-ratio identity
        for (size_t x = 0; x < q.nx; ++x)
            for (size_t x2 = x + 1; x2 < q.nx; ++x2)
                for (size_t y = 0; y < q.ny; ++y)
                    for (size_t y2 = y + 1; y2 < q.ny; ++y2) {
                        Rat lhs = q.at(x, y, m) * q.at(x2, y2, m) * mu(x2, y) * mu(x, y2);
                        Rat rhs = q.at(x2, y, m) * q.at(x, y2, m) * mu(x, y) * mu(x2, y2);
                        if (lhs != rhs) return false;
                    }
    }
    return true;
}

}  // namespace pcw
