// Command-line front end for the workbench; goes through the C API only.
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcw.h"

namespace {

struct Options {
    std::string instance, report, trace;
    std::string seed, trials, i_param, k_param, delta, beta, eps_log2, bits, n, rounds, block,
        mode, max_transcripts;
};

void add_common(CLI::App* app, Options* opt) {
    app->add_option("--instance", opt->instance, "instance file (built-in name or path)");
    app->add_option("--report", opt->report, "write the report to this path");
    app->add_option("--trace", opt->trace, "dump replayable run records to this path");
    app->add_option("--seed", opt->seed, "seed for all randomized steps");
    app->add_option("--trials", opt->trials, "Monte Carlo trials");
    app->add_option("--I", opt->i_param, "information scale I >= 1 (rational)");
    app->add_option("--K", opt->k_param, "slack constant K (rational)");
    app->add_option("--delta", opt->delta, "advantage exponent delta (rational)");
    app->add_option("--beta", opt->beta, "smoothness parameter (rational)");
    app->add_option("--eps", opt->eps_log2, "error exponent e, using eps = 2^-e");
    app->add_option("--bits", opt->bits, "communication budget for the oracle");
    app->add_option("--n", opt->n, "number of copies for the xor experiment");
    app->add_option("--rounds", opt->rounds, "round count for the round-preserving compressor");
    app->add_option("--block", opt->block, "block length for smoothing");
    app->add_option("--max-transcripts", opt->max_transcripts, "enumeration cap override");
    app->add_option("--mode", opt->mode, "numeric mode: exact or logfloat");
}

int apply(pcw_config* cfg, const char* key, const std::string& v) {
    if (v.empty()) return PCW_OK;
    int rc = pcw_config_set(cfg, key, v.c_str());
    if (rc != PCW_OK) std::fprintf(stderr, "pcw: %s\n", pcw_last_error());
    return rc;
}

int run_with(const std::string& task, const Options& opt) {
    pcw_config* cfg = pcw_config_new();
    int rc = PCW_OK;
    auto set = [&](const char* k, const std::string& v) {
        if (rc == PCW_OK) rc = apply(cfg, k, v);
    };
    set("task", task);
    std::string instance = opt.instance;
    // built-in names resolve through a temporary instance file
    std::string temp;
    if (!instance.empty() && instance.find('.') == std::string::npos &&
        instance.find('/') == std::string::npos) {
        temp = "/tmp/pcw-instance-" + std::to_string(::getpid()) + ".json";
        if (pcw_make_instance(instance.c_str(), temp.c_str()) != PCW_OK) {
            std::fprintf(stderr, "pcw: %s\n", pcw_last_error());
            pcw_config_free(cfg);
            return PCW_CONFIG_ERROR;
        }
        instance = temp;
    }
    set("instance", instance);
    set("report", opt.report);
    set("trace", opt.trace);
    set("seed", opt.seed);
    set("trials", opt.trials);
    set("I", opt.i_param);
    set("K", opt.k_param);
    set("delta", opt.delta);
    set("beta", opt.beta);
    set("eps-log2", opt.eps_log2);
    set("bits", opt.bits);
    set("n", opt.n);
    set("rounds", opt.rounds);
    set("block", opt.block);
    set("max-transcripts", opt.max_transcripts);
    set("mode", opt.mode);
    if (rc != PCW_OK) {
        pcw_config_free(cfg);
        return PCW_CONFIG_ERROR;
    }
    pcw_report* rep = nullptr;
    rc = pcw_run(cfg, &rep);
    if (rep) {
        size_t n = pcw_report_check_count(rep);
        for (size_t i = 0; i < n; ++i) {
            char line[512];
            if (pcw_report_check_line(rep, i, line, sizeof line) == PCW_OK)
                std::printf("%s\n", line);
        }
        if (opt.report.empty()) std::printf("%s", pcw_report_json(rep));
        pcw_report_free(rep);
    } else {
        std::fprintf(stderr, "pcw: %s\n", pcw_last_error());
    }
    if (!temp.empty()) std::remove(temp.c_str());
    pcw_config_free(cfg);
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-party protocol compression workbench"};
    app.require_subcommand(1);
    Options opt;

    std::vector<std::pair<std::string, std::string>> verbs = {
        {"verify-identities", "check the factorization identities on an instance"},
        {"witness", "search for a low-cost rectangular witness"},
        {"construct", "build the witness from the maximizer-trim pipeline"},
        {"subadd", "run the two-copy cost split on a split instance"},
        {"smooth", "build the block-smoothed pair"},
        {"oracle", "exact best advantage of bounded-bit deterministic protocols"},
        {"xor-experiment", "oracle table for xor lifts plus a compressed run"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, desc] : verbs) {
        CLI::App* s = app.add_subcommand(name, desc);
        add_common(s, &opt);
        subs.push_back(s);
    }
    CLI::App* compress = app.add_subcommand("compress", "run one of the compression protocols");
    std::string kind;
    compress->add_option("kind", kind, "general | external | rounds | commfree")->required();
    add_common(compress, &opt);
    CLI::App* mk = app.add_subcommand("make-instance", "write a built-in instance file");
    std::string mk_name, mk_path;
    mk->add_option("name", mk_name, "instance name")->required();
    mk->add_option("path", mk_path, "output path")->required();
    CLI::App* ls = app.add_subcommand("list-instances", "print the built-in instance names");
    CLI::App* batch = app.add_subcommand("batch", "run a file of task argument lines");
    std::string batch_path;
    int batch_jobs = 1;
    batch->add_option("file", batch_path, "one CLI argument line per row")->required();
    batch->add_option("--jobs", batch_jobs, "fan out up to this many tasks at once");

    CLI11_PARSE(app, argc, argv);

    if (mk->parsed()) {
        if (pcw_make_instance(mk_name.c_str(), mk_path.c_str()) != PCW_OK) {
            std::fprintf(stderr, "pcw: %s\n", pcw_last_error());
            return PCW_CONFIG_ERROR;
        }
        return 0;
    }
    if (ls->parsed()) {
        std::printf("%s\n", pcw_instance_names());
        return 0;
    }
    if (batch->parsed()) {
        std::FILE* f = std::fopen(batch_path.c_str(), "r");
        if (!f) {
            std::fprintf(stderr, "pcw: cannot open %s\n", batch_path.c_str());
            return PCW_CONFIG_ERROR;
        }
        std::vector<std::string> lines;
        char line[4096];
        while (std::fgets(line, sizeof line, f)) {
            std::string s(line);
            while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
            if (!s.empty()) lines.push_back(s);
        }
        std::fclose(f);
        // fan out independent configs, reaping as slots free up
        int worst = 0, running = 0;
        if (batch_jobs < 1) batch_jobs = 1;
        auto reap = [&](bool block) {
            int status = 0;
            pid_t pid = waitpid(-1, &status, block ? 0 : WNOHANG);
            if (pid > 0) {
                --running;
                int rc = WIFEXITED(status) ? WEXITSTATUS(status) : 3;
                worst = std::max(worst, rc);
            }
            return pid > 0;
        };
        for (const std::string& args : lines) {
            while (running >= batch_jobs) reap(true);
            pid_t pid = fork();
            if (pid == 0) {
                std::string cmd = std::string(argv[0]) + " " + args;
                ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
                _exit(3);
            }
            if (pid > 0)
                ++running;
            else
                worst = std::max(worst, 3);
        }
        while (running > 0) reap(true);
        return worst;
    }
    for (size_t i = 0; i < verbs.size(); ++i)
        if (subs[i]->parsed()) return run_with(verbs[i].first, opt);
    if (compress->parsed()) {
        if (kind != "general" && kind != "external" && kind != "rounds" && kind != "commfree") {
            std::fprintf(stderr, "pcw: unknown compressor '%s'\n", kind.c_str());
            return PCW_CONFIG_ERROR;
        }
        return run_with("compress:" + kind, opt);
    }
    return PCW_CONFIG_ERROR;
}
