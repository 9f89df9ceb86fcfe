#include "pcw/powprod.hpp"

#include <cmath>
#include <sstream>

namespace pcw {

PowProd PowProd::of(const Rat& base, const Rat& exp) {
    PowProd p;
    p.mul(base, exp);
    return p;
}

PowProd PowProd::pow2(const Rat& exp) { return of(Rat(2), exp); }

PowProd& PowProd::mul(const Rat& base, const Rat& exp) {
    require(base > 0, Errc::internal, "PowProd base must be positive");
    if (base == 1 || exp == 0) return *this;
    auto it = f_.find(base);
    if (it == f_.end()) {
        f_.emplace(base, exp);
    } else {
        it->second += exp;
        if (it->second == 0) f_.erase(it);
    }
    return *this;
}

PowProd& PowProd::mul(const PowProd& o) {
    for (const auto& [b, e] : o.f_) mul(b, e);
    return *this;
}

PowProd& PowProd::div(const PowProd& o) {
    for (const auto& [b, e] : o.f_) mul(b, -e);
    return *this;
}

PowProd PowProd::pow(const Rat& e) const {
    PowProd p;
    if (e == 0) return p;
    for (const auto& [b, x] : f_) p.f_.emplace(b, x * e);
    return p;
}

namespace {

// interval log2 of a factor map; pad covers every double rounding
double factors_log2(const std::map<Rat, Rat>& f, double* pad_out) {
    double s = 0, mag = 0;
    for (const auto& [b, e] : f) {
        double t = rat_double(e) * log2_approx(b);
        s += t;
        mag += std::fabs(t) + 1;
    }
    if (pad_out) *pad_out = 1e-12 * (mag + 1);
    return s;
}

}  // namespace

int PowProd::cmp(const PowProd& a, const PowProd& b) {
    // ratio = a / b as base -> exponent
    std::map<Rat, Rat> ratio = a.f_;
    for (const auto& [base, e] : b.f_) {
        auto it = ratio.find(base);
        if (it == ratio.end()) {
            ratio.emplace(base, -e);
        } else {
            it->second -= e;
            if (it->second == 0) ratio.erase(it);
        }
    }
    if (ratio.empty()) return 0;

    double pad = 0;
    double est = factors_log2(ratio, &pad);
    if (est - pad > 0) return 1;
    if (est + pad < 0) return -1;

    Int den_lcm(1);
    for (const auto& [base, e] : ratio)
        mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), e.get_den_mpz_t());

    bool exact_feasible = den_lcm.fits_ulong_p() && den_lcm < 1000000;
    size_t work_bits = 0;
    if (exact_feasible) {
        for (const auto& [base, e] : ratio) {
            Int k = e.get_num() * (den_lcm / e.get_den());
            if (!k.fits_slong_p()) {
                exact_feasible = false;
                break;
            }
            unsigned long mag = static_cast<unsigned long>(std::labs(k.get_si()));
            work_bits += mag * (mpz_sizeinbase(base.get_num_mpz_t(), 2) +
                                mpz_sizeinbase(base.get_den_mpz_t(), 2));
            if (work_bits > (1u << 28)) {
                exact_feasible = false;
                break;
            }
        }
    }
    if (exact_feasible) {
        Int lhs(1), rhs(1);  // compare prod base^(e*D) against 1 as lhs/rhs
        for (const auto& [base, e] : ratio) {
            Int k = e.get_num() * (den_lcm / e.get_den());
            long kl = k.get_si();
            unsigned long mag = static_cast<unsigned long>(kl >= 0 ? kl : -kl);
            Int np, dp;
            mpz_pow_ui(np.get_mpz_t(), base.get_num_mpz_t(), mag);
            mpz_pow_ui(dp.get_mpz_t(), base.get_den_mpz_t(), mag);
            if (kl >= 0) {
                lhs *= np;
                rhs *= dp;
            } else {
                lhs *= dp;
                rhs *= np;
            }
        }
        return mpz_cmp(lhs.get_mpz_t(), rhs.get_mpz_t());
    }

    fail(Errc::internal, "PowProd comparison too close to decide exactly");
}

double PowProd::log2() const {
    double s = 0;
    for (const auto& [b, e] : f_) s += rat_double(e) * log2_approx(b);
    return s;
}

double PowProd::log2_pad() const {
    double mag = 1;
    for (const auto& [b, e] : f_) mag += std::fabs(rat_double(e) * log2_approx(b));
    return 1e-9 * mag;
}

double PowProd::log2_lo() const { return log2() - log2_pad(); }
double PowProd::log2_hi() const { return log2() + log2_pad(); }

long PowProd::ceil_log2() const {
    long k = static_cast<long>(std::floor(log2())) - 2;
    while (cmp(*this, pow2(Rat(k))) > 0) ++k;  // smallest k with value <= 2^k
    return k;
}

Rat PowProd::to_rat() const {
    Rat v(1);
    for (const auto& [b, e] : f_) {
        require(e.get_den() == 1, Errc::internal, "PowProd value is not rational");
        require(e.get_num().fits_slong_p(), Errc::internal, "exponent too large");
        v *= rat_pow_int(b, e.get_num().get_si());
    }
    return v;
}

std::string PowProd::str() const {
    bool rational = true;
    size_t bits = 0;
    for (const auto& [b, e] : f_) {
        if (e.get_den() != 1 || !e.get_num().fits_slong_p()) rational = false;
        bits += mpz_sizeinbase(b.get_num_mpz_t(), 2) + mpz_sizeinbase(b.get_den_mpz_t(), 2);
    }
    if (rational && bits < 512) {
        Rat v = to_rat();
        if (mpz_sizeinbase(v.get_num_mpz_t(), 2) < 256 && mpz_sizeinbase(v.get_den_mpz_t(), 2) < 256)
            return rat_str(v);
    }
    std::ostringstream os;
    os << "~2^" << log2();
    return os.str();
}

}  // namespace pcw
