#include "pcw/dist.hpp"

#include <cmath>
#include <limits>

namespace pcw {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double KlValue::bits() const {
    if (infinite) return std::numeric_limits<double>::infinity();
    return mode == NumericMode::exact ? pow.log2() : bits_approx;
}

bool KlValue::le_bits(const Rat& t) const {
    if (infinite) return false;
    if (mode == NumericMode::exact) return pow <= PowProd::pow2(t);
    return bits_approx <= rat_double(t);
}

bool KlValue::ge_bits(const Rat& t) const {
    if (infinite) return true;
    if (mode == NumericMode::exact) return pow >= PowProd::pow2(t);
    return bits_approx >= rat_double(t);
}

FiniteDist FiniteDist::from_rats(std::vector<std::string> labels, std::vector<Rat> mass) {
    require(labels.size() == mass.size(), Errc::shape_mismatch, "labels/mass size mismatch");
    Rat total(0);
    for (Rat& m : mass) {
        m.canonicalize();
        require(m >= 0, Errc::shape_mismatch, "negative mass");
        total += m;
    }
    require(total == 1, Errc::shape_mismatch, "total mass must be 1, got " + rat_str(total));
    FiniteDist d;
    d.labels_ = std::move(labels);
    d.mass_ = std::move(mass);
    d.mode_ = NumericMode::exact;
    return d;
}

FiniteDist FiniteDist::normalized(std::vector<std::string> labels, std::vector<Rat> weights) {
    require(labels.size() == weights.size(), Errc::shape_mismatch, "labels/weights size mismatch");
    Rat total(0);
    for (Rat& m : weights) {
        m.canonicalize();
        require(m >= 0, Errc::shape_mismatch, "negative weight");
        total += m;
    }
    require(total > 0, Errc::zero_mass_event, "all weights zero");
    for (Rat& m : weights) m /= total;
    return from_rats(std::move(labels), std::move(weights));
}

FiniteDist FiniteDist::from_logweights(std::vector<std::string> labels, std::vector<double> logw) {
    require(labels.size() == logw.size(), Errc::shape_mismatch, "labels/logw size mismatch");
    double mx = kNegInf;
    for (double w : logw) mx = std::max(mx, w);
    require(mx > kNegInf, Errc::zero_mass_event, "all weights zero");
    double s = 0;
    for (double w : logw) s += std::exp2(w - mx);
    double log_total = mx + std::log2(s);
    FiniteDist d;
    d.labels_ = std::move(labels);
    d.logw_ = std::move(logw);
    for (double& w : d.logw_) w -= log_total;
    d.mode_ = NumericMode::logfloat;
    return d;
}

const Rat& FiniteDist::mass_rat(size_t i) const {
    require(mode_ == NumericMode::exact, Errc::config_error, "exact mass in logfloat mode");
    return mass_[i];
}

double FiniteDist::mass_double(size_t i) const {
    return mode_ == NumericMode::exact ? rat_double(mass_[i]) : std::exp2(logw_[i]);
}

bool FiniteDist::in_support(size_t i) const {
    return mode_ == NumericMode::exact ? mass_[i] != 0 : logw_[i] > kNegInf;
}

FiniteDist FiniteDist::condition(const std::vector<uint8_t>& keep) const {
    require(keep.size() == size(), Errc::shape_mismatch, "predicate size mismatch");
    if (mode_ == NumericMode::exact) {
        Rat total(0);
        for (size_t i = 0; i < size(); ++i)
            if (keep[i]) total += mass_[i];
        require(total > 0, Errc::zero_mass_event, "conditioning event has zero mass");
        FiniteDist d;
        d.mode_ = NumericMode::exact;
        for (size_t i = 0; i < size(); ++i) {
            if (!keep[i] || mass_[i] == 0) continue;
            d.labels_.push_back(labels_[i]);
            d.mass_.push_back(mass_[i] / total);
        }
        return d;
    }
    double mx = kNegInf;
    for (size_t i = 0; i < size(); ++i)
        if (keep[i]) mx = std::max(mx, logw_[i]);
    require(mx > kNegInf, Errc::zero_mass_event, "conditioning event has zero mass");
    double s = 0;
    for (size_t i = 0; i < size(); ++i)
        if (keep[i]) s += std::exp2(logw_[i] - mx);
    double log_total = mx + std::log2(s);
    FiniteDist d;
    d.mode_ = NumericMode::logfloat;
    for (size_t i = 0; i < size(); ++i) {
        if (!keep[i] || logw_[i] == kNegInf) continue;
        d.labels_.push_back(labels_[i]);
        d.logw_.push_back(logw_[i] - log_total);
    }
    return d;
}

namespace {
void check_same_set(const FiniteDist& a, const FiniteDist& b) {
    require(a.labels() == b.labels(), Errc::shape_mismatch, "distributions over different outcome sets");
    require(a.mode() == b.mode(), Errc::shape_mismatch, "mixed numeric modes");
}
}  // namespace

KlValue kl_divergence(const FiniteDist& a, const FiniteDist& b) {
    check_same_set(a, b);
    KlValue kv;
    kv.mode = a.mode();
    if (a.mode() == NumericMode::exact) {
        for (size_t i = 0; i < a.size(); ++i) {
            if (!a.in_support(i)) continue;
            if (!b.in_support(i)) {
                kv.infinite = true;
                return kv;
            }
            kv.pow.mul(a.mass_rat(i) / b.mass_rat(i), a.mass_rat(i));
        }
        kv.bits_approx = kv.pow.log2();
        return kv;
    }
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (!a.in_support(i)) continue;
        if (!b.in_support(i)) {
            kv.infinite = true;
            return kv;
        }
        double pa = a.mass_double(i);
        s += pa * (std::log2(pa) - std::log2(b.mass_double(i)));
    }
    kv.bits_approx = s;
    return kv;
}

Rat l1_distance(const FiniteDist& a, const FiniteDist& b) {
    check_same_set(a, b);
    require(a.mode() == NumericMode::exact, Errc::config_error, "exact l1 in logfloat mode");
    Rat s(0);
    for (size_t i = 0; i < a.size(); ++i) {
        Rat d = a.mass_rat(i) - b.mass_rat(i);
        s += d >= 0 ? d : Rat(-d);
    }
    return s;
}

double l1_double(const FiniteDist& a, const FiniteDist& b) {
    check_same_set(a, b);
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += std::fabs(a.mass_double(i) - b.mass_double(i));
    return s;
}

Rat signed_expectation(const FiniteDist& d, const std::vector<int>& sign) {
    require(sign.size() == d.size(), Errc::shape_mismatch, "sign table size mismatch");
    require(d.mode() == NumericMode::exact, Errc::config_error, "exact expectation in logfloat mode");
    Rat s(0);
    for (size_t i = 0; i < d.size(); ++i) {
        require(sign[i] == 1 || sign[i] == -1, Errc::shape_mismatch, "sign must be +-1");
        s += sign[i] > 0 ? d.mass_rat(i) : Rat(-d.mass_rat(i));
    }
    return s;
}

double signed_expectation_double(const FiniteDist& d, const std::vector<int>& sign) {
    require(sign.size() == d.size(), Errc::shape_mismatch, "sign table size mismatch");
    double s = 0;
    for (size_t i = 0; i < d.size(); ++i) s += sign[i] > 0 ? d.mass_double(i) : -d.mass_double(i);
    return s;
}

}  // namespace pcw
