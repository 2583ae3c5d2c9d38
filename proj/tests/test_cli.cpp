// Copyright 2026 The rxleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"

#include "rxleak/dataset_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path &scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("rxleak_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put(const fs::path &p, const std::string &content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

/// Runs the CLI and returns its exit status; stderr goes to `err.txt`.
int cli(const std::string &args) {
    std::string cmd = std::string("\"") + RXLEAK_CLI_PATH + "\" " + args + " > \"" +
                      (scratch() / "out.txt").string() + "\" 2> \"" + (scratch() / "err.txt").string() + "\"";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string last_error() {
    return slurp(scratch() / "err.txt");
}

fs::path spec(const std::string &name, const std::string &body) {
    auto p = scratch() / (name + ".json");
    put(p, body);
    return p;
}

std::string args(const fs::path &spec_file, const fs::path &out, const std::string &extra = "") {
    return "--spec \"" + spec_file.string() + "\" --out \"" + out.string() + "\" " + extra;
}

void expect_same_tree(const fs::path &a, const fs::path &b) {
    std::size_t files = 0;
    for (const auto &e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) {
            continue;
        }
        auto rel = fs::relative(e.path(), a);
        ASSERT_TRUE(fs::exists(b / rel)) << rel;
        ASSERT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
        ++files;
    }
    ASSERT_GT(files, 0u);
}

const char *kQuietDevice =
    "[device]\n"
    "noise_sigma = 0\n"
    "[qubits]\n"
    "t1_us = inf\n"
    "p_excitation = 0\n";

}  // namespace

TEST(Cli, simulate_is_deterministic_and_thread_independent) {
    auto s = spec("sim", R"({"shots_per_prep": 6, "seed": 11})");
    ASSERT_EQ(cli(args(s, scratch() / "sim1", "simulate --threads 1")), 0) << last_error();
    ASSERT_EQ(cli(args(s, scratch() / "sim2", "simulate --threads 3")), 0) << last_error();
    expect_same_tree(scratch() / "sim1", scratch() / "sim2");

    std::size_t files = 0;
    for (const auto &e : fs::directory_iterator(scratch() / "sim1" / "traces")) {
        auto f = rxleak::read_traces(e.path().string());
        ASSERT_EQ(f.records.size(), 6u);
        ASSERT_EQ(f.records[0].preparation.str() + ".qrxt", e.path().filename().string());
        ++files;
    }
    ASSERT_EQ(files, 32u);
    ASSERT_TRUE(fs::exists(scratch() / "sim1" / "manifest_simulate.json"));
    auto manifest = slurp(scratch() / "sim1" / "manifest_simulate.json");
    ASSERT_NE(manifest.find("\"seed\": 11"), std::string::npos);

    // --seed overrides the spec.
    ASSERT_EQ(cli(args(s, scratch() / "sim3", "simulate --seed 12")), 0) << last_error();
    ASSERT_NE(slurp(scratch() / "sim3" / "traces" / "00000.qrxt"), slurp(scratch() / "sim1" / "traces" / "00000.qrxt"));
}

TEST(Cli, validation_errors_exit_2) {
    auto zero = spec("zero", R"({"shots_per_prep": 0, "seed": 1})");
    ASSERT_EQ(cli(args(zero, scratch() / "v", "simulate")), 2);
    ASSERT_NE(last_error().find("shots_per_prep"), std::string::npos);

    auto unseeded = spec("unseeded", R"({"shots_per_prep": 2})");
    ASSERT_EQ(cli(args(unseeded, scratch() / "v", "simulate")), 2);
    ASSERT_NE(last_error().find("seed"), std::string::npos);

    auto broken = spec("broken", R"({"shots_per_prep": )");
    ASSERT_EQ(cli(args(broken, scratch() / "v", "simulate")), 2);

    auto unknown = spec("unknown", R"({"shots": 3, "seed": 1})");
    ASSERT_EQ(cli(args(unknown, scratch() / "v", "simulate")), 2);
    ASSERT_NE(last_error().find("'shots'"), std::string::npos);

    auto ratio = spec("ratio", R"({"shots_per_prep": 4, "seed": 1, "train_ratio": 1.0})");
    ASSERT_EQ(cli(args(ratio, scratch() / "v", "discriminate")), 2);

    auto ok = spec("ok", R"({"shots_per_prep": 4, "seed": 1})");
    ASSERT_EQ(cli(args(ok, scratch() / "empty_dir", "discriminate")), 2);
    ASSERT_NE(last_error().find("simulate"), std::string::npos);
    ASSERT_EQ(cli(args(ok, scratch() / "v", "bogus")), 2);
    ASSERT_EQ(cli(args(ok, scratch() / "v", "")), 2);
    ASSERT_EQ(cli("--spec \"" + (scratch() / "missing.json").string() + "\" --out x simulate"), 2);
}

TEST(Cli, noiseless_pipeline_end_to_end) {
    put(scratch() / "quiet.conf", kQuietDevice);
    auto s = spec("quiet", R"({
        "device": "quiet.conf", "shots_per_prep": 10, "seed": 3,
        "attack": {"configs": ["A123A", "0AAAA"], "window": 2},
        "defense": {"sandbox": {"requests": [4, 4, 4]}}
    })");
    auto out = scratch() / "quiet";
    ASSERT_EQ(cli(args(s, out, "simulate")), 0) << last_error();
    ASSERT_EQ(cli(args(s, out, "discriminate")), 0) << last_error();
    auto acc = slurp(out / "accuracy.csv");
    ASSERT_NE(acc.find("mf,mean_per_qubit,,1\n"), std::string::npos) << acc;
    ASSERT_NE(acc.find("mf,per_qubit,4,1\n"), std::string::npos) << acc;
    // 30% of 10 shots train; the other 7 of each preparation are evaluated.
    auto outcomes = slurp(out / "outcomes.csv");
    ASSERT_EQ(std::count(outcomes.begin(), outcomes.end(), '\n'), 1 + 32 * 7);

    ASSERT_EQ(cli(args(s, out, "attack --plots")), 0) << last_error();
    auto pflip = slurp(out / "pflip.csv");
    ASSERT_EQ(pflip.rfind("config,victim_bitstring,attacker_qubit,flips,trials,pflip,stderr\n", 0), 0u);
    std::size_t a123a = 0;
    for (std::size_t pos = 0; (pos = pflip.find("\nA123A,", pos)) != std::string::npos; ++pos) {
        ++a123a;
    }
    ASSERT_EQ(a123a, 8u * 2);
    auto svg = slurp(out / "plots" / "pflip_A123A.svg");
    ASSERT_NE(svg.find("stroke-dasharray"), std::string::npos);

    ASSERT_EQ(cli(args(s, out, "defend")), 0) << last_error();
    auto alloc = slurp(out / "allocation.csv");
    ASSERT_NE(alloc.find("sandboxed,0,4,assigned,0,0;1;2;3,0.22222222222222221\n"), std::string::npos) << alloc;
    ASSERT_NE(alloc.find("unrestricted,1,4,assigned,0;1,4;5;6;7,0.22222222222222221\n"), std::string::npos) << alloc;

    ASSERT_EQ(cli(args(s, out, "report")), 0) << last_error();
    ASSERT_TRUE(fs::exists(out / "report.csv"));
    ASSERT_TRUE(fs::exists(out / "manifest_report.json"));

    auto bad = spec("bad_cfg", R"({"device": "quiet.conf", "shots_per_prep": 10, "seed": 3,
                                   "attack": {"configs": ["B123A"]}})");
    ASSERT_EQ(cli(args(bad, out, "attack")), 2);
    ASSERT_NE(last_error().find("'B'"), std::string::npos) << last_error();
}

TEST(Cli, reruns_reproduce_every_csv) {
    auto s = spec("det", R"({
        "shots_per_prep": 40, "seed": 5, "discriminator": "mlp", "mlp": {"epochs": 2},
        "attack": {"configs": ["A123A", "A1A34"], "window": 4},
        "defense": {"scrambling": {"config": "A123A", "shots_per_victim": 32, "recovery_shots": 16},
                    "randomization": {"config": "A123A", "ensembles": [1, "cyclic"], "shots_per_victim": 40},
                    "sandbox": {}}
    })");
    for (const char *dir : {"det1", "det2"}) {
        auto out = scratch() / dir;
        const std::string threads = std::string(dir) == "det1" ? "--threads 1" : "--threads 2";
        for (const char *cmd : {"simulate", "discriminate", "attack", "defend", "report"}) {
            ASSERT_EQ(cli(args(s, out, std::string(cmd) + " " + threads)), 0) << cmd << ": " << last_error();
        }
    }
    expect_same_tree(scratch() / "det1", scratch() / "det2");

    // A one-member ensemble is the fixed mapping, so both accuracies agree.
    auto defense = slurp(scratch() / "det1" / "defense.csv");
    auto at = defense.find("randomization,config=A123A;ensemble=1;");
    ASSERT_NE(at, std::string::npos) << defense;
    auto line = defense.substr(at, defense.find('\n', at) - at);
    auto cells = std::vector<std::string>{};
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) {
        cells.push_back(c);
    }
    ASSERT_GE(cells.size(), 4u);
    ASSERT_EQ(cells[2], cells[3]) << line;
}
