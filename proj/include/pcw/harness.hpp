#pragma once

#include <map>

#include "pcw/compress.hpp"
#include "pcw/construct.hpp"
#include "pcw/subadd.hpp"

namespace pcw {

struct ExperimentConfig {
    std::string instance_path;
    std::string task;
    CostParams params;
    Rat beta{1, 8};
    long eps_log2 = 0;  // 0 = per-task default
    size_t trials = 100000;
    uint64_t seed = 0;
    bool have_seed = false;
    size_t oracle_bits = 1;
    size_t xor_n = 2;
    size_t rounds = 2;
    size_t block_len = 15;
    NumericMode mode = NumericMode::exact;
    std::string report_path;
    std::string trace_path;  // when set, first runs dump as JSON lines
    EnumerationCaps caps;
};

struct Report {
    std::string task, instance;
    uint64_t seed = 0;
    std::string numeric_mode = "exact";
    std::vector<Check> checks;
    std::map<std::string, std::string> values;

    bool pass() const { return all_pass(checks); }
    std::string to_json() const;
};

// Instance files: JSON, schema pcw-instance-1. The function table rides along;
// split instances carry the copy shape and per-copy functions.
struct Instance {
    ProtocolDist p;
    BoolFn f;
    bool has_split = false;
    SplitShape shape{1, 1, 1, 1};
    BoolFn f1, f2;
    std::string name;
};

Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);

// Built-in instance set used by the golden reports and the acceptance suite.
std::vector<std::string> canonical_instance_names();
Instance canonical_instance(const std::string& name);

// Executes one task; ConfigError for bad configs. The report is also written
// to cfg.report_path when set.
Report run_task(const ExperimentConfig& cfg);

// Every certificate anchor the reports can emit; the coverage test asserts
// each is reachable from some task on the canonical set.
const std::vector<std::string>& check_registry();

}  // namespace pcw
