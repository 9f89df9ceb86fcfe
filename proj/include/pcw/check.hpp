#pragma once

#include <string>
#include <vector>

#include "pcw/powprod.hpp"

namespace pcw {

// One verified inequality or identity, as it appears in reports.
struct Check {
    std::string name;  // stable anchor id, e.g. "trim.mass"
    std::string lhs, rhs;
    double slack_bits = 0;  // log2 rhs - log2 lhs for "lhs <= rhs" checks
    bool pass = false;
};

inline Check check_le(std::string name, const PowProd& lhs, const PowProd& rhs) {
    Check c;
    c.name = std::move(name);
    c.lhs = lhs.str();
    c.rhs = rhs.str();
    c.pass = PowProd::cmp(lhs, rhs) <= 0;
    c.slack_bits = rhs.log2() - lhs.log2();
    return c;
}

inline Check check_ge(std::string name, const PowProd& lhs, const PowProd& rhs) {
    Check c;
    c.name = std::move(name);
    c.lhs = lhs.str();
    c.rhs = rhs.str();
    c.pass = PowProd::cmp(lhs, rhs) >= 0;
    c.slack_bits = lhs.log2() - rhs.log2();
    return c;
}

inline Check check_ge_rat(std::string name, const Rat& lhs, const Rat& rhs) {
    Check c;
    c.name = std::move(name);
    c.lhs = rat_str(lhs);
    c.rhs = rat_str(rhs);
    c.pass = lhs >= rhs;
    c.slack_bits = (lhs > 0 && rhs > 0) ? log2_approx(lhs) - log2_approx(rhs) : 0;
    return c;
}

inline Check check_le_rat(std::string name, const Rat& lhs, const Rat& rhs) {
    Check c;
    c.name = std::move(name);
    c.lhs = rat_str(lhs);
    c.rhs = rat_str(rhs);
    c.pass = lhs <= rhs;
    c.slack_bits = (lhs > 0 && rhs > 0) ? log2_approx(rhs) - log2_approx(lhs) : 0;
    return c;
}

inline Check check_flag(std::string name, bool pass, std::string note = "") {
    Check c;
    c.name = std::move(name);
    c.lhs = pass ? "true" : "false";
    c.rhs = note.empty() ? "true" : std::move(note);
    c.pass = pass;
    return c;
}

inline bool all_pass(const std::vector<Check>& checks) {
    for (const Check& c : checks)
        if (!c.pass) return false;
    return true;
}

}  // namespace pcw
