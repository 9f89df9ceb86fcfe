#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pcw/powprod.hpp"
#include "pcw/rational.hpp"

namespace pcw {

enum class NumericMode { exact, logfloat };

// KL divergence result in bits. In exact mode the value is carried as
// 2^KL = prod (a_i/b_i)^{a_i}, so comparisons against rational-exponent
// thresholds stay exact.
struct KlValue {
    bool infinite = false;
    NumericMode mode = NumericMode::exact;
    PowProd pow;  // 2^KL (exact mode only)
    double bits_approx = 0;

    double bits() const;
    // KL <=/>= t for rational t, exact in exact mode.
    bool le_bits(const Rat& t) const;
    bool ge_bits(const Rat& t) const;
};

// Probability table over an ordered finite outcome set. EXACT mode stores
// rationals summing to one; LOGFLOAT stores log2-weights as doubles and
// forbids exact-equality reasoning (total mass within 2^-40 relative).
class FiniteDist {
public:
    FiniteDist() = default;

    static FiniteDist from_rats(std::vector<std::string> labels, std::vector<Rat> mass);
    // Normalizes nonnegative weights; ZeroMassEvent when all are zero.
    static FiniteDist normalized(std::vector<std::string> labels, std::vector<Rat> weights);
    static FiniteDist from_logweights(std::vector<std::string> labels, std::vector<double> logw);

    NumericMode mode() const { return mode_; }
    size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }

    const Rat& mass_rat(size_t i) const;
    double mass_double(size_t i) const;
    bool in_support(size_t i) const;

    // Restrict to outcomes with keep[i] != 0 and renormalize.
    FiniteDist condition(const std::vector<uint8_t>& keep) const;

private:
    std::vector<std::string> labels_;
    std::vector<Rat> mass_;
    std::vector<double> logw_;
    NumericMode mode_ = NumericMode::exact;
};

KlValue kl_divergence(const FiniteDist& a, const FiniteDist& b);

// Sum |a - b|; exact Rat in exact mode (use l1_double for logfloat).
Rat l1_distance(const FiniteDist& a, const FiniteDist& b);
double l1_double(const FiniteDist& a, const FiniteDist& b);

// Sum d(u) * s(u) with s : outcome -> {+1,-1}.
Rat signed_expectation(const FiniteDist& d, const std::vector<int>& sign);
double signed_expectation_double(const FiniteDist& d, const std::vector<int>& sign);

}  // namespace pcw
