#pragma once

#include <gmpxx.h>

#include <string>

#include "pcw/error.hpp"

namespace pcw {

using Int = mpz_class;
using Rat = mpq_class;

// Parses "p", "-p", or "p/q" into canonical form with positive denominator.
Rat rat_parse(const std::string& s);

// Canonical "p" or "p/q" rendering.
std::string rat_str(const Rat& r);

// Canonicalized construction from a possibly non-reduced pair.
inline Rat rq(long num, long den) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

// 2^k for any integer k.
Rat rat_pow2(long k);

// r^e for integer e (r != 0 when e < 0).
Rat rat_pow_int(const Rat& r, long e);

// Smallest k with r <= 2^k. Requires r > 0.
long ceil_log2(const Rat& r);

// Largest k with 2^k <= r. Requires r > 0.
long floor_log2(const Rat& r);

// log2 of a positive rational, accurate to a few ulp.
double log2_approx(const Rat& r);

inline double rat_double(const Rat& r) { return r.get_d(); }

}  // namespace pcw
