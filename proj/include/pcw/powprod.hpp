#pragma once

#include <map>
#include <string>

#include "pcw/rational.hpp"

namespace pcw {

// An exact positive real of the form prod_i base_i^exp_i with rational bases
// and exponents. Closed under multiplication and rational powers; comparisons
// are exact (exponents are integerized over a common denominator and the two
// sides compared as big rationals). This is the carrier for every log-domain
// quantity in the workbench: 2^M, p(R)^-delta, KL values, Pinsker bounds.
class PowProd {
public:
    PowProd() = default;  // value 1

    static PowProd of(const Rat& base, const Rat& exp = Rat(1));
    static PowProd pow2(const Rat& exp);

    PowProd& mul(const Rat& base, const Rat& exp = Rat(1));
    PowProd& mul(const PowProd& o);
    PowProd& div(const PowProd& o);
    PowProd pow(const Rat& e) const;

    bool is_one() const { return f_.empty(); }

    // -1, 0, +1 for a < b, a == b, a > b. Exact.
    static int cmp(const PowProd& a, const PowProd& b);
    int cmp_rat(const Rat& r) const { return cmp(*this, of(r)); }

    friend bool operator<(const PowProd& a, const PowProd& b) { return cmp(a, b) < 0; }
    friend bool operator<=(const PowProd& a, const PowProd& b) { return cmp(a, b) <= 0; }
    friend bool operator>(const PowProd& a, const PowProd& b) { return cmp(a, b) > 0; }
    friend bool operator>=(const PowProd& a, const PowProd& b) { return cmp(a, b) >= 0; }
    friend bool operator==(const PowProd& a, const PowProd& b) { return cmp(a, b) == 0; }

    double log2() const;
    // Conservative bounds: log2_lo() <= true log2 <= log2_hi().
    double log2_lo() const;
    double log2_hi() const;

    // Smallest integer k with value <= 2^k.
    long ceil_log2() const;

    // Exact rational value when all exponents are integers (fails otherwise).
    Rat to_rat() const;

    // Rendering for reports: exact product form if small, else "~2^x".
    std::string str() const;

    const std::map<Rat, Rat>& factors() const { return f_; }

private:
    std::map<Rat, Rat> f_;  // base -> exponent; bases > 0 and != 1; exponents != 0
    double log2_pad() const;
};

}  // namespace pcw
