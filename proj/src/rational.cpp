#include "pcw/rational.hpp"

#include <cctype>
#include <cmath>

namespace pcw {

Rat rat_parse(const std::string& s) {
    if (s.empty()) fail(Errc::parse_error, "empty rational");
    for (char c : s) {
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '/' || c == '-' || c == '+'))
            fail(Errc::parse_error, "bad rational '" + s + "'");
    }
    try {
        mpq_class v(s, 10);
        if (v.get_den() == 0) fail(Errc::parse_error, "zero denominator in '" + s + "'");
        v.canonicalize();
        return v;
    } catch (const std::invalid_argument&) {
        fail(Errc::parse_error, "bad rational '" + s + "'");
    }
}

std::string rat_str(const Rat& r) {
    if (r.get_den() == 1) return r.get_num().get_str();
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Rat rat_pow2(long k) {
    Rat r(1);
    if (k >= 0) {
        mpz_mul_2exp(r.get_num_mpz_t(), r.get_num_mpz_t(), static_cast<unsigned long>(k));
    } else {
        mpz_mul_2exp(r.get_den_mpz_t(), r.get_den_mpz_t(), static_cast<unsigned long>(-k));
    }
    r.canonicalize();
    return r;
}

Rat rat_pow_int(const Rat& r, long e) {
    if (e == 0) return Rat(1);
    require(r != 0 || e > 0, Errc::internal, "0 to negative power");
    Rat out;
    unsigned long a = static_cast<unsigned long>(e >= 0 ? e : -e);
    mpz_pow_ui(out.get_num_mpz_t(), r.get_num_mpz_t(), a);
    mpz_pow_ui(out.get_den_mpz_t(), r.get_den_mpz_t(), a);
    out.canonicalize();
    if (e < 0) return Rat(1) / out;
    return out;
}

long ceil_log2(const Rat& r) {
    require(r > 0, Errc::internal, "ceil_log2 of nonpositive value");
    long guess = static_cast<long>(mpz_sizeinbase(r.get_num_mpz_t(), 2)) -
                 static_cast<long>(mpz_sizeinbase(r.get_den_mpz_t(), 2));
    long k = guess - 2;
    while (rat_pow2(k) < r) ++k;  // smallest k with 2^k >= r
    return k;
}

long floor_log2(const Rat& r) {
    long k = ceil_log2(r);
    if (rat_pow2(k) == r) return k;
    return k - 1;
}

double log2_approx(const Rat& r) {
    require(r > 0, Errc::internal, "log2 of nonpositive value");
    signed long ne = 0, de = 0;
    double nd = mpz_get_d_2exp(&ne, r.get_num_mpz_t());
    double dd = mpz_get_d_2exp(&de, r.get_den_mpz_t());
    return (std::log2(nd) + static_cast<double>(ne)) - (std::log2(dd) + static_cast<double>(de));
}

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::ok: return "Ok";
        case Errc::zero_mass_event: return "ZeroMassEvent";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::cap_exceeded: return "CapExceeded";
        case Errc::not_binary_rounds: return "NotBinaryRounds";
        case Errc::support_violation: return "SupportViolation";
        case Errc::not_rectangular: return "NotRectangular";
        case Errc::identity_violation: return "IdentityViolation";
        case Errc::empty_after_pruning: return "EmptyAfterPruning";
        case Errc::degenerate_advantage: return "DegenerateAdvantage";
        case Errc::round_mismatch: return "RoundMismatch";
        case Errc::not_smooth: return "NotSmooth";
        case Errc::scan_horizon_exceeded: return "ScanHorizonExceeded";
        case Errc::infinite_cost: return "InfiniteCost";
        case Errc::config_error: return "ConfigError";
        case Errc::parse_error: return "ParseError";
        case Errc::internal: return "Internal";
    }
    return "Unknown";
}

}  // namespace pcw
