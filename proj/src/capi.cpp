#include "pcw.h"

#include <cstdio>
#include <cstring>
#include <string>

#include "pcw/harness.hpp"

namespace {

thread_local std::string g_last_error;

int set_error(const std::exception& e) {
    g_last_error = e.what();
    if (auto* err = dynamic_cast<const pcw::Error*>(&e)) {
        if (err->code() == pcw::Errc::config_error || err->code() == pcw::Errc::parse_error ||
            err->code() == pcw::Errc::cap_exceeded)
            return PCW_CONFIG_ERROR;
    }
    return PCW_RUNTIME_ERROR;
}

}  // namespace

struct pcw_config {
    pcw::ExperimentConfig cfg;
};

struct pcw_report {
    pcw::Report rep;
    std::string json;
};

extern "C" {

const char* pcw_version(void) { return "1.0.0"; }

const char* pcw_last_error(void) { return g_last_error.c_str(); }

pcw_config* pcw_config_new(void) {
    auto* cfg = new pcw_config();
    if (const char* mode = std::getenv("PCW_NUMERIC_MODE")) {
        if (std::strcmp(mode, "logfloat") == 0) cfg->cfg.mode = pcw::NumericMode::logfloat;
    }
    return cfg;
}

void pcw_config_free(pcw_config* cfg) { delete cfg; }

int pcw_config_set(pcw_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) {
        g_last_error = "null argument";
        return PCW_CONFIG_ERROR;
    }
    try {
        std::string k = key, v = value;
        pcw::ExperimentConfig& c = cfg->cfg;
        if (k == "task")
            c.task = v;
        else if (k == "instance")
            c.instance_path = v;
        else if (k == "report")
            c.report_path = v;
        else if (k == "trace")
            c.trace_path = v;
        else if (k == "seed") {
            c.seed = std::stoull(v);
            c.have_seed = true;
        } else if (k == "trials")
            c.trials = std::stoull(v);
        else if (k == "I")
            c.params.I = pcw::rat_parse(v);
        else if (k == "K")
            c.params.K = pcw::rat_parse(v);
        else if (k == "delta")
            c.params.delta = pcw::rat_parse(v);
        else if (k == "beta")
            c.beta = pcw::rat_parse(v);
        else if (k == "eps-log2")
            c.eps_log2 = std::stol(v);
        else if (k == "bits")
            c.oracle_bits = std::stoull(v);
        else if (k == "n")
            c.xor_n = std::stoull(v);
        else if (k == "rounds")
            c.rounds = std::stoull(v);
        else if (k == "block")
            c.block_len = std::stoull(v);
        else if (k == "max-transcripts")
            c.caps.max_transcripts = std::stoull(v);
        else if (k == "mode") {
            if (v == "exact")
                c.mode = pcw::NumericMode::exact;
            else if (v == "logfloat")
                c.mode = pcw::NumericMode::logfloat;
            else
                throw pcw::Error(pcw::Errc::config_error, "mode must be exact or logfloat");
        } else {
            throw pcw::Error(pcw::Errc::config_error, "unknown config key '" + k + "'");
        }
        return PCW_OK;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PCW_CONFIG_ERROR;
    }
}

int pcw_run(const pcw_config* cfg, pcw_report** out) {
    if (!cfg || !out) {
        g_last_error = "null argument";
        return PCW_CONFIG_ERROR;
    }
    *out = nullptr;
    try {
        pcw::Report rep = pcw::run_task(cfg->cfg);
        auto* handle = new pcw_report{std::move(rep), {}};
        handle->json = handle->rep.to_json();
        *out = handle;
        return handle->rep.pass() ? PCW_OK : PCW_CHECK_FAILED;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

const char* pcw_report_json(const pcw_report* rep) { return rep ? rep->json.c_str() : ""; }

int pcw_report_pass(const pcw_report* rep) { return rep && rep->rep.pass() ? 1 : 0; }

size_t pcw_report_check_count(const pcw_report* rep) { return rep ? rep->rep.checks.size() : 0; }

int pcw_report_check_line(const pcw_report* rep, size_t i, char* buf, size_t cap) {
    if (!rep || !buf || i >= rep->rep.checks.size()) {
        g_last_error = "bad check index";
        return PCW_CONFIG_ERROR;
    }
    const pcw::Check& c = rep->rep.checks[i];
    std::string line =
        c.name + "\t" + (c.pass ? "pass" : "FAIL") + "\t" + c.lhs + "\t" + c.rhs;
    std::snprintf(buf, cap, "%s", line.c_str());
    return PCW_OK;
}

void pcw_report_free(pcw_report* rep) { delete rep; }

int pcw_make_instance(const char* name, const char* path) {
    if (!name || !path) {
        g_last_error = "null argument";
        return PCW_CONFIG_ERROR;
    }
    try {
        pcw::Instance inst = pcw::canonical_instance(name);
        pcw::save_instance(inst, path);
        return PCW_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

const char* pcw_instance_names(void) {
    static std::string names = [] {
        std::string s;
        for (const std::string& n : pcw::canonical_instance_names()) {
            if (!s.empty()) s += " ";
            s += n;
        }
        return s;
    }();
    return names.c_str();
}

}  // extern "C"
