#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pcw/subadd.hpp"

using namespace pcw;
using namespace pcw::testing;

namespace {

// tensor of two protocols over bit inputs into one split protocol:
// m1 carries both first messages jointly when both are one-round send-x style
ProtocolDist tensor_send_x() {
    InputSpace space;
    for (const char* l : {"00", "01", "10", "11"}) space.x_labels.push_back(l);
    for (const char* l : {"00", "01", "10", "11"}) space.y_labels.push_back(l);
    std::vector<Rat> mu(16, Rat(1, 16));
    std::vector<RoundSpec> rounds{RoundSpec{Owner::pub, {"-"}},
                                  RoundSpec{Owner::alice, {"00", "01", "10", "11"}}};
    ProtocolDist p(space, mu, rounds);
    p.set_conditional(0, 0, {}, {Rat(1)});
    for (size_t x = 0; x < 4; ++x) {
        std::vector<Rat> row(4, Rat(0));
        row[x] = 1;
        p.set_conditional(1, x, {0}, row);
    }
    return p;
}

// q = p conditioned on a rect set that keeps the advantage positive per m:
// drop y-pairs that zero out AND advantage under each revealed x
RectSet positive_adv_rect(const ProtocolDist& p, const BoolFn& h) {
    size_t nx = p.space().nx(), ny = p.space().ny(), nm = p.transcripts().count;
    RectSet r = RectSet::full(nx, ny, nm);
    const JointDist& j = p.joint();
    for (size_t m = 0; m < nm; ++m) {
        // greedily remove y with negative-sign mass while advantage is zero
        for (int guard = 0; guard < 8; ++guard) {
            Rat sgn(0), mass(0);
            for (size_t x = 0; x < nx; ++x)
                for (size_t y = 0; y < ny; ++y)
                    if (r.contains(x, y, m)) {
                        sgn += h.sign(x, y) * j.at(x, y, m);
                        mass += j.at(x, y, m);
                    }
            if (mass == 0 || sgn != 0) break;
            // drop the lexicographically first y with any negative-sign mass
            for (size_t y = 0; y < ny; ++y) {
                bool neg = false;
                for (size_t x = 0; x < nx; ++x)
                    if (r.contains(x, y, m) && h.sign(x, y) < 0 && j.at(x, y, m) != 0) neg = true;
                if (neg) {
                    r.in_b[y * nm + m] = 0;
                    break;
                }
            }
        }
    }
    return r;
}

BoolFn compose_xor(const BoolFn& f, const BoolFn& g, const SplitShape& sh) {
    BoolFn h;
    h.nx = sh.nx1 * sh.nx2;
    h.ny = sh.ny1 * sh.ny2;
    h.t.resize(h.nx * h.ny);
    for (size_t x = 0; x < h.nx; ++x)
        for (size_t y = 0; y < h.ny; ++y)
            h.t[x * h.ny + y] = f(sh.x1(x), sh.y1(y)) ^ g(sh.x2(x), sh.y2(y));
    return h;
}

}  // namespace

TEST_CASE("identity stage on the two-copy send-x tensor with q = p") {
    ProtocolDist p = tensor_send_x();
    SplitShape sh{2, 2, 2, 2};
    SplitInstance si{&p, p.joint(), and_fn(), and_fn(), sh, Rat(1, 2)};
    ChildPair cp = build_children(si);
    for (const Check& c : cp.identity_checks) {
        INFO(c.name);
        CHECK(c.pass);
    }
    // with q = p both density ratios are 1: q1 == p1, q2 == p2
    for (size_t i = 0; i < cp.q1.w.size(); ++i) CHECK(cp.q1.w[i] == cp.p1.w[i]);
    for (size_t i = 0; i < cp.q2.w.size(); ++i) CHECK(cp.q2.w[i] == cp.p2.w[i]);
}

TEST_CASE("identity stage with a conditioned q on random split instances") {
    std::mt19937_64 rng(321);
    SplitShape sh{2, 2, 2, 2};
    int done = 0;
    while (done < 12) {
        // random product-form split protocol: one 4-ary Alice message then a
        // binary Bob round, inputs independent across copies
        InputSpace space;
        for (const char* l : {"00", "01", "10", "11"}) space.x_labels.push_back(l);
        for (const char* l : {"00", "01", "10", "11"}) space.y_labels.push_back(l);
        auto dy = [&rng]() { return rq(static_cast<long>(rng() % 15 + 1), 16); };
        // product mu per copy
        Rat a1 = dy(), b1 = dy(), a2 = dy(), b2 = dy();
        std::vector<Rat> mu(16);
        for (size_t x = 0; x < 4; ++x)
            for (size_t y = 0; y < 4; ++y) {
                Rat px1 = (x >> 1) ? a1 : 1 - a1, px2 = (x & 1) ? a2 : 1 - a2;
                Rat py1 = (y >> 1) ? b1 : 1 - b1, py2 = (y & 1) ? b2 : 1 - b2;
                // mu must be product across copies: (x1,y1) x (x2,y2)
                mu[x * 4 + y] = px1 * py1 * px2 * py2;
            }
        std::vector<RoundSpec> rounds{RoundSpec{Owner::pub, {"-"}},
                                      RoundSpec{Owner::alice, {"00", "01", "10", "11"}},
                                      RoundSpec{Owner::bob, {"0", "1"}}};
        ProtocolDist p(space, mu, rounds);
        p.set_conditional(0, 0, {}, {Rat(1)});
        for (size_t x = 0; x < 4; ++x) {
            std::vector<Rat> row(4, Rat(0));
            Rat rest(1);
            for (size_t v = 0; v < 3; ++v) {
                row[v] = rest * dy();
                rest -= row[v];
            }
            row[3] = rest;
            p.set_conditional(1, x, {0}, row);
        }
        for (size_t y = 0; y < 4; ++y)
            for (int m1 = 0; m1 < 4; ++m1) {
                Rat one = dy();
                p.set_conditional(2, y, {0, m1}, {Rat(1) - one, one});
            }
        // q = p(.|R) for a random rect set
        RectSet r = RectSet::full(4, 4, p.transcripts().count);
        for (auto& v : r.in_a) v = rng() % 4 != 0;
        for (auto& v : r.in_b) v = rng() % 4 != 0;
        if (mass_of(p.joint(), r) == 0) continue;
        SplitInstance si{&p, conditioned(p.joint(), r), and_fn(), xor_fn(), sh, Rat(1, 2)};
        ChildPair cp = build_children(si);
        for (const Check& c : cp.identity_checks) {
            INFO(c.name);
            CHECK(c.pass);
        }
        ++done;
    }
}

TEST_CASE("full split pipeline on the two-copy send-x instance") {
    ProtocolDist p = tensor_send_x();
    SplitShape sh{2, 2, 2, 2};
    BoolFn h = compose_xor(and_fn(), and_fn(), sh);
    RectSet rs = positive_adv_rect(p, h);
    JointDist q = conditioned(p.joint(), rs);
    SplitInstance si{&p, q, and_fn(), and_fn(), sh, Rat(1, 2)};
    CostParams params;
    EnumerationCaps caps;
    ChildPair cp = split(si, params, caps);
    for (const Check& c : cp.certificates) {
        INFO(c.name, " lhs=", c.lhs, " rhs=", c.rhs);
        CHECK(c.pass);
    }
    REQUIRE(cp.child_cost.finite);
    MESSAGE("parent bits: ", cp.parent_cost_bits, " child bits: ", cp.child_cost.bits(),
            " side ", cp.chosen_side, " c_realized ", cp.realized_constant_bits);
}

TEST_CASE("split with gamma 1/2 and 2/3 both verify") {
    ProtocolDist p = tensor_send_x();
    SplitShape sh{2, 2, 2, 2};
    BoolFn h = compose_xor(and_fn(), and_fn(), sh);
    JointDist q = conditioned(p.joint(), positive_adv_rect(p, h));
    CostParams params;
    EnumerationCaps caps;
    for (const Rat& gamma : {Rat(1, 2), Rat(2, 3)}) {
        SplitInstance si{&p, q, and_fn(), and_fn(), sh, gamma};
        ChildPair cp = split(si, params, caps);
        for (const Check& c : cp.certificates) {
            INFO("gamma=", rat_str(gamma), " ", c.name);
            CHECK(c.pass);
        }
    }
}

TEST_CASE("degenerate split with constant functions conditions on everything") {
    ProtocolDist p = tensor_send_x();
    SplitShape sh{2, 2, 2, 2};
    SplitInstance si{&p, p.joint(), const0_fn(), const0_fn(), sh, Rat(1, 2)};
    CostParams params;
    EnumerationCaps caps;
    ChildPair cp = split(si, params, caps);
    for (const Check& c : cp.certificates) {
        INFO(c.name);
        CHECK(c.pass);
    }
    REQUIRE(cp.child_cost.finite);
    // the pipeline keeps everything: r_final is exactly the child marginal
    const JointDist& q1 = cp.chosen_side == 1 ? cp.q1 : cp.q2;
    for (size_t i = 0; i < q1.w.size(); ++i) CHECK(cp.r_final.w[i] == q1.w[i]);
    CHECK(cp.child_cost.bits() <= cp.parent_cost_bits);

    // on a zero-communication two-copy instance the child cost is exactly 0
    InputSpace space;
    for (size_t i = 0; i < 4; ++i) {
        space.x_labels.push_back("x" + std::to_string(i));
        space.y_labels.push_back("y" + std::to_string(i));
    }
    std::vector<Rat> mu(16, Rat(1, 16));
    std::vector<RoundSpec> rounds{RoundSpec{Owner::pub, {"-"}}, RoundSpec{Owner::alice, {"-"}}};
    ProtocolDist p0(space, mu, rounds);
    p0.set_conditional(0, 0, {}, {Rat(1)});
    for (size_t x = 0; x < 4; ++x) p0.set_conditional(1, x, {0}, {Rat(1)});
    SplitInstance si0{&p0, p0.joint(), const0_fn(), const0_fn(), sh, Rat(1, 2)};
    ChildPair cp0 = split(si0, params, caps);
    REQUIRE(cp0.child_cost.finite);
    CHECK(cp0.child_cost.value.is_one());
}

TEST_CASE("child protocols rebuild the pipeline joints") {
    ProtocolDist p = tensor_send_x();
    SplitShape sh{2, 2, 2, 2};
    BoolFn h = compose_xor(and_fn(), and_fn(), sh);
    JointDist q = conditioned(p.joint(), positive_adv_rect(p, h));
    SplitInstance si{&p, q, and_fn(), and_fn(), sh, Rat(1, 2)};
    ChildPair cp = build_children(si);
    for (int side : {1, 2}) {
        ProtocolDist child = child_protocol(si, side);
        const JointDist& want = side == 1 ? cp.p1 : cp.p2;
        REQUIRE(child.joint().same_shape(want));
        for (size_t i = 0; i < want.w.size(); ++i) CHECK(child.joint().w[i] == want.w[i]);
        CHECK(child.num_messages() == p.num_messages());
    }
}

TEST_CASE("halving driver for n = 2") {
    ProtocolDist p = tensor_send_x();
    SplitShape sh{2, 2, 2, 2};
    BoolFn h = compose_xor(and_fn(), and_fn(), sh);
    JointDist q = conditioned(p.joint(), positive_adv_rect(p, h));
    CostParams params;
    EnumerationCaps caps;
    HalveResult hr = halve_driver(p, q, and_fn(), 2, params, caps);
    CHECK(hr.levels.size() == 1);
    for (const Check& c : hr.checks) {
        INFO(c.name);
        CHECK(c.pass);
    }
    CHECK(hr.leaf_p.space().nx() == 2);
    MESSAGE("n=2 leaf: parent ", hr.levels[0].parent_bits, " -> child ", hr.levels[0].child_bits);
}

TEST_CASE("halving driver for n = 4 on a zero-communication tensor") {
    // P0 over four copies with a trivial one-symbol first message
    InputSpace space;
    std::vector<Rat> mu(256, Rat(1, 256));
    for (size_t i = 0; i < 16; ++i) {
        space.x_labels.push_back("x" + std::to_string(i));
        space.y_labels.push_back("y" + std::to_string(i));
    }
    std::vector<RoundSpec> rounds{RoundSpec{Owner::pub, {"-"}}, RoundSpec{Owner::alice, {"-"}}};
    ProtocolDist p(space, mu, rounds);
    p.set_conditional(0, 0, {}, {Rat(1)});
    for (size_t x = 0; x < 16; ++x) p.set_conditional(1, x, {0}, {Rat(1)});

    CostParams params;
    EnumerationCaps caps;
    HalveResult hr = halve_driver(p, p.joint(), and_fn(), 4, params, caps);
    CHECK(hr.levels.size() == 2);
    for (const Check& c : hr.checks) {
        INFO(c.name, " lhs=", c.lhs, " rhs=", c.rhs);
        CHECK(c.pass);
    }
    // per-level costs shrink monotonically for this instance
    CHECK(hr.levels[0].child_bits <= hr.levels[0].parent_bits);
    MESSAGE("n=4 levels: ", hr.levels[0].parent_bits, " -> ", hr.levels[0].child_bits, " -> ",
            hr.levels[1].child_bits);
}
