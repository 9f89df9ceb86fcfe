#pragma once

#include <random>

#include "pcw/protocol.hpp"
#include "pcw/sampler.hpp"

namespace pcw::testing {

inline BoolFn make_fn(size_t nx, size_t ny, std::vector<uint8_t> t) {
    BoolFn f;
    f.nx = nx;
    f.ny = ny;
    f.t = std::move(t);
    return f;
}

inline BoolFn and_fn() { return make_fn(2, 2, {0, 0, 0, 1}); }
inline BoolFn xor_fn() { return make_fn(2, 2, {0, 1, 1, 0}); }
inline BoolFn const0_fn() { return make_fn(2, 2, {0, 0, 0, 0}); }

inline InputSpace bit_space() { return InputSpace{{"0", "1"}, {"0", "1"}}; }

inline std::vector<Rat> uniform_mu(size_t nx, size_t ny) {
    return std::vector<Rat>(nx * ny, Rat(1, static_cast<long>(nx * ny)));
}

// Zero-communication protocol: a single public coin value, no messages.
inline ProtocolDist p_zero(std::vector<Rat> mu = uniform_mu(2, 2)) {
    ProtocolDist p(bit_space(), std::move(mu), {RoundSpec{Owner::pub, {"-"}}});
    p.set_conditional(0, 0, {}, {Rat(1)});
    return p;
}

// Alice announces her bit: m1 = x.
inline ProtocolDist p_send_x(std::vector<Rat> mu = uniform_mu(2, 2)) {
    ProtocolDist p(bit_space(), std::move(mu),
                   {RoundSpec{Owner::pub, {"-"}}, RoundSpec{Owner::alice, {"0", "1"}}});
    p.set_conditional(0, 0, {}, {Rat(1)});
    p.set_conditional(1, 0, {0}, {Rat(1), Rat(0)});
    p.set_conditional(1, 1, {0}, {Rat(0), Rat(1)});
    return p;
}

// m1 = x, then Bob sends a noisy copy of y: p(m2 = y | y) = 3/4.
inline ProtocolDist p_sendx_noisy(std::vector<Rat> mu = uniform_mu(2, 2)) {
    ProtocolDist p(bit_space(), std::move(mu),
                   {RoundSpec{Owner::pub, {"-"}}, RoundSpec{Owner::alice, {"0", "1"}},
                    RoundSpec{Owner::bob, {"0", "1"}}});
    p.set_conditional(0, 0, {}, {Rat(1)});
    p.set_conditional(1, 0, {0}, {Rat(1), Rat(0)});
    p.set_conditional(1, 1, {0}, {Rat(0), Rat(1)});
    for (size_t y = 0; y < 2; ++y)
        for (int m1 = 0; m1 < 2; ++m1) {
            Rat keep(3, 4);
            std::vector<Rat> row = {y == 0 ? keep : Rat(1) - keep, y == 0 ? Rat(1) - keep : keep};
            p.set_conditional(2, y, {0, m1}, row);
        }
    return p;
}

// m1 = x, then an exactly beta-smooth Bob bit: p(m2 = 1 | y) = 1/2 + (-1)^y beta.
inline ProtocolDist p_sendx_smooth(const Rat& beta, std::vector<Rat> mu = uniform_mu(2, 2)) {
    ProtocolDist p(bit_space(), std::move(mu),
                   {RoundSpec{Owner::pub, {"-"}}, RoundSpec{Owner::alice, {"0", "1"}},
                    RoundSpec{Owner::bob, {"0", "1"}}});
    p.set_conditional(0, 0, {}, {Rat(1)});
    p.set_conditional(1, 0, {0}, {Rat(1), Rat(0)});
    p.set_conditional(1, 1, {0}, {Rat(0), Rat(1)});
    for (size_t y = 0; y < 2; ++y)
        for (int m1 = 0; m1 < 2; ++m1) {
            Rat one = Rat(1, 2) + (y == 0 ? beta : -beta);
            p.set_conditional(2, y, {0, m1}, {Rat(1) - one, one});
        }
    return p;
}

// Random protocol over bit inputs with given number of binary message rounds.
// Probabilities are dyadic with denominator 2^6.
inline ProtocolDist random_protocol(std::mt19937_64& rng, size_t num_rounds, size_t n_pub = 1,
                                    bool product_mu = false) {
    auto dy = [&rng]() { return rq(static_cast<long>(rng() % 63 + 1), 64); };
    std::vector<Rat> mu(4);
    if (product_mu) {
        Rat px = dy(), py = dy();
        mu = {px * py, px * (1 - py), (1 - px) * py, (1 - px) * (1 - py)};
    } else {
        Rat t(0);
        for (Rat& v : mu) {
            v = dy();
            t += v;
        }
        for (Rat& v : mu) v /= t;
    }
    std::vector<RoundSpec> rounds{RoundSpec{Owner::pub, {}}};
    for (size_t i = 0; i < n_pub; ++i) rounds[0].alphabet.push_back("r" + std::to_string(i));
    for (size_t i = 1; i <= num_rounds; ++i)
        rounds.push_back(RoundSpec{i % 2 == 1 ? Owner::alice : Owner::bob, {"0", "1"}});
    ProtocolDist p(bit_space(), mu, rounds);
    {
        std::vector<Rat> coin(n_pub, Rat(1, static_cast<long>(n_pub)));
        p.set_conditional(0, 0, {}, coin);
    }
    TranscriptSpace ts(rounds);
    for (size_t i = 1; i <= num_rounds; ++i) {
        size_t npfx = 1;
        for (size_t k = 0; k < i; ++k) npfx *= ts.radix[k];
        for (size_t inp = 0; inp < 2; ++inp)
            for (size_t pk = 0; pk < npfx; ++pk) {
                Rat one = dy();
                std::vector<int> prefix(i);
                size_t rem = pk;
                for (size_t k = 0; k < i; ++k) {
                    prefix[k] = static_cast<int>(rem % ts.radix[k]);
                    rem /= ts.radix[k];
                }
                p.set_conditional(i, inp, prefix, {Rat(1) - one, one});
            }
    }
    return p;
}

// Random exactly-beta-bounded smooth protocol: m1 = x, rounds 2..C binary
// with dyadic biases in [1/2 - beta, 1/2 + beta].
inline ProtocolDist smooth_random_protocol(std::mt19937_64& rng, size_t num_rounds,
                                           const Rat& beta) {
    std::vector<RoundSpec> rounds{RoundSpec{Owner::pub, {"-"}},
                                  RoundSpec{Owner::alice, {"0", "1"}}};
    for (size_t i = 2; i <= num_rounds; ++i)
        rounds.push_back(RoundSpec{i % 2 == 1 ? Owner::alice : Owner::bob, {"0", "1"}});
    ProtocolDist p(bit_space(), uniform_mu(2, 2), rounds);
    p.set_conditional(0, 0, {}, {Rat(1)});
    p.set_conditional(1, 0, {0}, {Rat(1), Rat(0)});
    p.set_conditional(1, 1, {0}, {Rat(0), Rat(1)});
    TranscriptSpace ts(rounds);
    for (size_t i = 2; i <= num_rounds; ++i) {
        size_t npfx = 1;
        for (size_t k = 0; k < i; ++k) npfx *= ts.radix[k];
        for (size_t inp = 0; inp < 2; ++inp)
            for (size_t pk = 0; pk < npfx; ++pk) {
                // dyadic bias in [-beta, beta] with denominator 64
                long db = static_cast<long>(Rat(beta * 64).get_num().get_si());
                long off = static_cast<long>(rng() % static_cast<unsigned long>(2 * db + 1)) - db;
                Rat one = Rat(1, 2) + rq(off, 64);
                std::vector<int> prefix(i);
                size_t rem = pk;
                for (size_t k = 0; k < i; ++k) {
                    prefix[k] = static_cast<int>(rem % ts.radix[k]);
                    rem /= ts.radix[k];
                }
                p.set_conditional(i, inp, prefix, {Rat(1) - one, one});
            }
    }
    return p;
}

// inverse-CDF input sampling used by statistical tests
inline size_t sample_index_for_test(const std::vector<Rat>& mass, const SharedRandomness& sr,
                                    uint64_t t) {
    SharedRandomness::Dyadic d = sr.unit(0, t);
    Rat cum(0);
    for (size_t i = 0; i < mass.size(); ++i) {
        cum += mass[i];
        if (d.le(cum)) return i;
    }
    return mass.size() - 1;
}

}  // namespace pcw::testing
