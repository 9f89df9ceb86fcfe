#include <random>

#include "doctest.h"
#include "pcw/dist.hpp"
#include "pcw/powprod.hpp"
#include "pcw/protocol.hpp"
#include "pcw/rational.hpp"

using namespace pcw;

namespace {

FiniteDist uniform(size_t n) {
    std::vector<std::string> labels;
    std::vector<Rat> mass;
    for (size_t i = 0; i < n; ++i) {
        labels.push_back(std::to_string(i));
        mass.emplace_back(Rat(1, static_cast<long>(n)));
    }
    return FiniteDist::from_rats(labels, mass);
}

// deterministic random rationals with denominator up to 64
FiniteDist random_dist(std::mt19937_64& rng, size_t n) {
    std::vector<std::string> labels;
    std::vector<Rat> w;
    for (size_t i = 0; i < n; ++i) {
        labels.push_back(std::to_string(i));
        w.emplace_back(rq(static_cast<long>(rng() % 64 + 1), static_cast<long>(rng() % 64 + 1)));
    }
    return FiniteDist::normalized(labels, w);
}

}  // namespace

TEST_CASE("rational parsing and printing round-trips") {
    CHECK(rat_str(rat_parse("3/4")) == "3/4");
    CHECK(rat_str(rat_parse("-6/8")) == "-3/4");
    CHECK(rat_str(rat_parse("7")) == "7");
    CHECK(rat_parse("2/4") == Rat(1, 2));
    CHECK_THROWS_AS(rat_parse("1/0"), Error);
    CHECK_THROWS_AS(rat_parse("abc"), Error);
}

TEST_CASE("ceil and floor log2") {
    CHECK(ceil_log2(Rat(1)) == 0);
    CHECK(ceil_log2(Rat(3)) == 2);
    CHECK(ceil_log2(Rat(4)) == 2);
    CHECK(ceil_log2(Rat(5)) == 3);
    CHECK(ceil_log2(Rat(1, 3)) == -1);
    CHECK(floor_log2(Rat(1, 3)) == -2);
    CHECK(floor_log2(Rat(4)) == 2);
    CHECK(ceil_log2(Rat(1, 4)) == -2);
}

TEST_CASE("powprod comparisons are exact") {
    // 2^(1/2) vs 3^(1/3): 2^3 = 8 < 9 = 3^2
    CHECK(PowProd::of(Rat(2), Rat(1, 2)) < PowProd::of(Rat(3), Rat(1, 3)));
    // (1/4)^1 == (1/2)^2
    CHECK(PowProd::of(Rat(1, 4)) == PowProd::of(Rat(1, 2), Rat(2)));
    // value extremely close but unequal: 2^100 vs 2^100 * (1 + 1/2^200)
    PowProd a = PowProd::pow2(Rat(100));
    PowProd b = a;
    Rat close = Rat(1) + Rat(1, 1) / rat_pow_int(Rat(2), 200);
    b.mul(close, Rat(1));
    CHECK(a < b);
    CHECK(PowProd::of(Rat(3), Rat(-2)) == PowProd::of(Rat(1, 9)));
    PowProd m = PowProd::of(Rat(5, 7), Rat(3, 5));
    m.mul(Rat(5, 7), Rat(-3, 5));
    CHECK(m.is_one());
}

TEST_CASE("powprod ceil_log2 and to_rat") {
    PowProd p = PowProd::of(Rat(3));  // log2(3) in (1, 2)
    CHECK(p.ceil_log2() == 2);
    CHECK(PowProd::pow2(Rat(7)).ceil_log2() == 7);
    CHECK(PowProd::of(Rat(9, 8)).to_rat() == Rat(9, 8));
}

TEST_CASE("condition restricts and renormalizes") {
    // uniform on {a,b,c,d} conditioned to first two outcomes stays uniform
    FiniteDist u4 = uniform(4);
    FiniteDist c = u4.condition({1, 1, 0, 0});
    CHECK(c.size() == 2);
    CHECK(c.mass_rat(0) == Rat(1, 2));
    CHECK(c.mass_rat(1) == Rat(1, 2));

    // point mass conditioned on itself
    FiniteDist pt = FiniteDist::from_rats({"a", "b"}, {Rat(1), Rat(0)});
    FiniteDist cpt = pt.condition({1, 0});
    CHECK(cpt.size() == 1);
    CHECK(cpt.mass_rat(0) == Rat(1));

    // (1/2,1/3,1/6) conditioned to last two gives (2/3,1/3)
    FiniteDist d = FiniteDist::from_rats({"a", "b", "c"}, {Rat(1, 2), Rat(1, 3), Rat(1, 6)});
    FiniteDist cd = d.condition({0, 1, 1});
    CHECK(cd.mass_rat(0) == Rat(2, 3));
    CHECK(cd.mass_rat(1) == Rat(1, 3));

    CHECK_THROWS_AS(pt.condition({0, 1}), Error);
}

TEST_CASE("kl divergence basic values") {
    FiniteDist u2 = uniform(2);
    CHECK(kl_divergence(u2, u2).bits() == doctest::Approx(0));
    CHECK(kl_divergence(u2, u2).pow.is_one());

    FiniteDist pt = FiniteDist::from_rats({"0", "1"}, {Rat(1), Rat(0)});
    KlValue kv = kl_divergence(pt, u2);
    CHECK(!kv.infinite);
    CHECK(kv.pow == PowProd::of(Rat(2)));  // exactly 1 bit

    FiniteDist pt2 = FiniteDist::from_rats({"0", "1"}, {Rat(0), Rat(1)});
    CHECK(kl_divergence(pt, pt2).infinite);
}

TEST_CASE("l1 distance examples") {
    FiniteDist a = FiniteDist::from_rats({"0", "1"}, {Rat(3, 4), Rat(1, 4)});
    FiniteDist b = FiniteDist::from_rats({"0", "1"}, {Rat(1, 4), Rat(3, 4)});
    CHECK(l1_distance(a, b) == Rat(1));
    CHECK(l1_distance(a, a) == Rat(0));
    FiniteDist p0 = FiniteDist::from_rats({"0", "1"}, {Rat(1), Rat(0)});
    FiniteDist p1 = FiniteDist::from_rats({"0", "1"}, {Rat(0), Rat(1)});
    CHECK(l1_distance(p0, p1) == Rat(2));
}

TEST_CASE("signed expectation examples") {
    // uniform over {0,1}^2 with s = (-1)^(x xor y) sums to zero
    FiniteDist u4 = uniform(4);
    CHECK(signed_expectation(u4, {1, -1, -1, 1}) == Rat(0));
    // (-1)^(x and y): +1 on three points, -1 on one
    CHECK(signed_expectation(u4, {1, 1, 1, -1}) == Rat(1, 2));
    FiniteDist pt = FiniteDist::from_rats({"a"}, {Rat(1)});
    CHECK(signed_expectation(pt, {1}) == Rat(1));
}

TEST_CASE("divergence nonnegative with equality iff equal, and Pinsker") {
    std::mt19937_64 rng(20260808);
    for (int t = 0; t < 60; ++t) {
        FiniteDist a = random_dist(rng, 4);
        FiniteDist b = random_dist(rng, 4);
        KlValue kv = kl_divergence(a, b);
        if (kv.infinite) continue;
        CHECK(kv.ge_bits(Rat(0)));
        bool equal = true;
        for (size_t i = 0; i < 4; ++i) equal = equal && a.mass_rat(i) == b.mass_rat(i);
        if (equal) {
            CHECK(kv.pow.is_one());
        } else {
            CHECK(!kv.le_bits(Rat(0)));
        }
        // sqrt(KL) >= l1/2, i.e. KL >= (l1/2)^2 in bits
        Rat half_l1 = l1_distance(a, b) / 2;
        CHECK(kv.ge_bits(half_l1 * half_l1));
    }
}

TEST_CASE("logfloat mode carries approximate mass") {
    FiniteDist d = FiniteDist::from_logweights({"0", "1"}, {-1.0, -1.0});
    CHECK(d.mode() == NumericMode::logfloat);
    CHECK(d.mass_double(0) == doctest::Approx(0.5));
    double tot = d.mass_double(0) + d.mass_double(1);
    CHECK(std::fabs(tot - 1.0) < 1e-12);
    CHECK_THROWS_AS(d.mass_rat(0), Error);
    FiniteDist c = d.condition({1, 0});
    CHECK(c.mass_double(0) == doctest::Approx(1.0));
}
