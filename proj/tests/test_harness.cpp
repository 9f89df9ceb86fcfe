#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "pcw/harness.hpp"

using namespace pcw;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("instance json round-trips the joint exactly") {
    for (const std::string& name : canonical_instance_names()) {
        Instance inst = canonical_instance(name);
        Instance back = instance_from_json(instance_to_json(inst));
        REQUIRE(back.p.joint().same_shape(inst.p.joint()));
        for (size_t i = 0; i < inst.p.joint().w.size(); ++i)
            CHECK(back.p.joint().w[i] == inst.p.joint().w[i]);
        CHECK(back.f.t == inst.f.t);
        CHECK(back.has_split == inst.has_split);
    }
}

TEST_CASE("checked-in instance files match the built-ins") {
    for (const std::string& name : canonical_instance_names()) {
        std::string path = std::string(PCW_SOURCE_DIR) + "/data/instances/" + name + ".json";
        CHECK(slurp(path) == instance_to_json(canonical_instance(name)));
    }
}

TEST_CASE("reports are byte-identical for identical configs") {
    ExperimentConfig cfg;
    cfg.task = "witness";
    cfg.seed = 11;
    cfg.have_seed = true;
    Report a = run_task(cfg);
    Report b = run_task(cfg);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.pass());
}

TEST_CASE("golden reports stay stable") {
    struct GoldenSpec {
        const char* file;
        ExperimentConfig cfg;
    };
    std::vector<GoldenSpec> goldens;
    {
        ExperimentConfig c;
        c.task = "witness";
        c.seed = 1;
        c.have_seed = true;
        goldens.push_back({"witness-send-x-and.json", c});
    }
    {
        ExperimentConfig c;
        c.task = "construct";
        c.seed = 1;
        c.have_seed = true;
        goldens.push_back({"construct-send-x-and.json", c});
    }
    {
        ExperimentConfig c;
        c.task = "oracle";
        c.oracle_bits = 2;
        goldens.push_back({"oracle-send-x-and.json", c});
    }
    {
        ExperimentConfig c;
        c.task = "compress:commfree";
        c.seed = 7;
        c.have_seed = true;
        c.trials = 100000;
        c.params.I = 8;
        goldens.push_back({"commfree-send-x-and.json", c});
    }
    for (const GoldenSpec& g : goldens) {
        Report rep = run_task(g.cfg);
        std::string want = slurp(std::string(PCW_SOURCE_DIR) + "/data/golden/" + g.file);
        CHECK(rep.to_json() == want);
    }
}

TEST_CASE("every registry anchor is reachable from the canonical task set") {
    std::set<std::string> seen;
    auto collect = [&](const ExperimentConfig& cfg) {
        Report rep = run_task(cfg);
        for (const Check& c : rep.checks) seen.insert(c.name);
    };
    std::string dir = std::string(PCW_SOURCE_DIR) + "/data/instances/";
    {
        ExperimentConfig c;
        c.task = "verify-identities";
        c.instance_path = dir + "tensor-sendx-and.json";
        c.seed = 1;
        c.have_seed = true;
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "witness";
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "construct";
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "subadd";
        c.instance_path = dir + "tensor-sendx-and.json";
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "smooth";
        c.instance_path = dir + "sendx-det-and.json";
        c.beta = Rat(1, 4);
        c.block_len = 5;
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "oracle";
        c.oracle_bits = 2;
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "xor-experiment";
        c.oracle_bits = 2;
        c.seed = 3;
        c.have_seed = true;
        c.trials = 10000;
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "compress:general";
        c.instance_path = dir + "sendx-noisy-and.json";
        c.seed = 5;
        c.have_seed = true;
        c.trials = 20000;
        c.params.I = 8;
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "compress:commfree";
        c.seed = 5;
        c.have_seed = true;
        c.trials = 20000;
        c.params.I = 8;
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "compress:rounds";
        c.instance_path = dir + "sendx-fair-and.json";
        c.seed = 5;
        c.have_seed = true;
        c.trials = 4000;
        c.params.I = 8;
        collect(c);
    }
    {
        ExperimentConfig c;
        c.task = "compress:external";
        c.instance_path = dir + "sendx-smooth8-and.json";
        c.seed = 5;
        c.have_seed = true;
        c.trials = 4000;
        c.params.I = 8;
        collect(c);
    }
    for (const std::string& name : check_registry()) {
        INFO("anchor: ", name);
        CHECK(seen.count(name) == 1);
    }
}

TEST_CASE("config errors are loud") {
    ExperimentConfig cfg;
    cfg.task = "no-such-task";
    CHECK_THROWS_AS(run_task(cfg), Error);
    cfg.task = "compress:general";
    cfg.have_seed = false;
    CHECK_THROWS_AS(run_task(cfg), Error);  // stochastic tasks need a seed
    cfg.task = "witness";
    cfg.mode = NumericMode::logfloat;
    CHECK_THROWS_AS(run_task(cfg), Error);
    ExperimentConfig bad;
    bad.task = "witness";
    bad.instance_path = "/nonexistent/instance.json";
    CHECK_THROWS_AS(run_task(bad), Error);
}

TEST_CASE("instance parser rejects malformed input") {
    CHECK_THROWS_AS(instance_from_json("not json"), Error);
    CHECK_THROWS_AS(instance_from_json("{\"schema\": \"other\"}"), Error);
    // mass not summing to one
    Instance inst = canonical_instance("send-x-and");
    std::string text = instance_to_json(inst);
    std::string bad = text;
    bad.replace(bad.find("\"1/4\""), 5, "\"1/3\"");
    CHECK_THROWS_AS(instance_from_json(bad), Error);
    // unknown owner
    std::string bad2 = text;
    bad2.replace(bad2.find("\"alice\""), 7, "\"carol\"");
    CHECK_THROWS_AS(instance_from_json(bad2), Error);
}
