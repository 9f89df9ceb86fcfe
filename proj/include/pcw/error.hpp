#pragma once

#include <stdexcept>
#include <string>

namespace pcw {

enum class Errc : int {
    ok = 0,
    zero_mass_event,
    shape_mismatch,
    cap_exceeded,
    not_binary_rounds,
    support_violation,
    not_rectangular,
    identity_violation,
    empty_after_pruning,
    degenerate_advantage,
    round_mismatch,
    not_smooth,
    scan_horizon_exceeded,
    infinite_cost,
    config_error,
    parse_error,
    internal,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

}  // namespace pcw
