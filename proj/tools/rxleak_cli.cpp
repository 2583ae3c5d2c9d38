// Copyright 2026 The rxleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// rxleak command line: simulate | discriminate | attack | defend | report.
// Every subcommand reads a JSON experiment spec and writes CSVs plus a
// manifest_<command>.json into the output directory.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rxleak.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rxleak;

namespace {

constexpr const char *kVersion = "rxleak 1.0.0";
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

const std::vector<std::string> kDefaultConfigs = {"A1234", "0A234", "01A34", "A1A34",
                                                  "A12A4", "A123A", "0AAAA", "01AAA"};

// ---------------------------------------------------------------------------
// Experiment spec.

struct ScramblingSpec {
    std::string config = "A123A";
    std::vector<PadPolicy> policies{PadPolicy::fresh, PadPolicy::fixed};
    std::size_t shots_per_victim = 2048;
    std::size_t pad_block = 0;
    std::size_t recovery_shots = 10000;
};

struct RandomizationSpec {
    std::string config = "A123A";
    /// 0 stands for the cyclic-rotation ensemble.
    std::vector<std::size_t> ensembles{1, 0};
    std::size_t shots_per_victim = 2048;
};

struct SandboxSpec {
    std::size_t groups = 9;
    std::size_t group_size = 6;
    std::vector<std::size_t> requests{4, 4, 4};
    bool inter_group_coupling = false;
};

struct ExperimentSpec {
    json source;
    DeviceModel device;
    std::string device_ref = "default";
    std::vector<BitString> preps;
    std::size_t shots_per_prep = 2000;
    DiscriminatorKind discriminator = DiscriminatorKind::matched_filter;
    double train_ratio = 0.3;
    MlpHyperParams mlp;
    std::vector<std::string> configs = kDefaultConfigs;
    AttackParams attack;
    std::optional<fs::path> outcomes;
    std::optional<ScramblingSpec> scrambling;
    std::optional<RandomizationSpec> randomization;
    std::optional<SandboxSpec> sandbox;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
};

void check_keys(const json &j, std::initializer_list<const char *> allowed, const std::string &where) {
    if (!j.is_object()) {
        throw ValidationError(where + " must be a JSON object");
    }
    for (const auto &[key, value] : j.items()) {
        bool ok = false;
        for (const char *a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            throw ValidationError("unknown key '" + key + "' in " + where);
        }
    }
}

std::size_t get_count(const json &j, const char *key, std::size_t fallback, const std::string &where) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto &v = j.at(key);
    if (!v.is_number_unsigned()) {
        throw ValidationError(where + "." + key + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

double get_number(const json &j, const char *key, double fallback, const std::string &where) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto &v = j.at(key);
    if (!v.is_number()) {
        throw ValidationError(where + "." + key + " must be a number");
    }
    return v.get<double>();
}

std::string get_string(const json &j, const char *key, const std::string &fallback, const std::string &where) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto &v = j.at(key);
    if (!v.is_string()) {
        throw ValidationError(where + "." + key + " must be a string");
    }
    return v.get<std::string>();
}

std::vector<std::size_t> get_counts(const json &j, const char *key, std::vector<std::size_t> fallback,
                                    const std::string &where) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto &v = j.at(key);
    if (!v.is_array()) {
        throw ValidationError(where + "." + key + " must be an array");
    }
    std::vector<std::size_t> out;
    for (const auto &e : v) {
        if (!e.is_number_unsigned()) {
            throw ValidationError(where + "." + key + " entries must be non-negative integers");
        }
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

std::string read_text(const fs::path &p, const std::string &what) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + what + " '" + p.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentSpec load_spec(const fs::path &path) {
    ExperimentSpec s;
    try {
        s.source = json::parse(read_text(path, "spec file"));
    } catch (const json::parse_error &e) {
        throw ValidationError("spec '" + path.string() + "' is not valid JSON: " + e.what());
    }
    const auto &j = s.source;
    check_keys(j,
               {"device", "spacing_scale", "preps", "shots_per_prep", "discriminator", "train_ratio", "mlp", "attack",
                "outcomes", "defense", "seed", "out"},
               "spec");
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string &p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    s.device = default_device();
    if (j.contains("device")) {
        s.device_ref = get_string(j, "device", "", "spec");
        s.device = load_device(read_text(resolve(s.device_ref), "device config"));
    }
    if (j.contains("spacing_scale")) {
        double f = get_number(j, "spacing_scale", 1.0, "spec");
        s.device = scale_spacing(s.device, f);
    }
    validate(s.device);

    if (!j.contains("preps") || j.at("preps") == "all-basis-states") {
        s.preps = all_basis_states(s.device.n_qubits());
    } else if (j.at("preps").is_array()) {
        for (const auto &p : j.at("preps")) {
            if (!p.is_string()) {
                throw ValidationError("spec.preps entries must be bit-strings");
            }
            auto b = BitString::parse(p.get<std::string>());
            check_preparation(s.device, b);
            s.preps.push_back(b);
        }
        if (s.preps.empty()) {
            throw ValidationError("spec.preps is empty");
        }
    } else {
        throw ValidationError("spec.preps must be \"all-basis-states\" or a list of bit-strings");
    }

    s.shots_per_prep = get_count(j, "shots_per_prep", s.shots_per_prep, "spec");
    if (s.shots_per_prep == 0) {
        throw ValidationError("spec.shots_per_prep must be >= 1");
    }
    auto kind = get_string(j, "discriminator", "mf", "spec");
    if (kind == "mf") {
        s.discriminator = DiscriminatorKind::matched_filter;
    } else if (kind == "mlp") {
        s.discriminator = DiscriminatorKind::mlp;
    } else {
        throw ValidationError("spec.discriminator must be \"mf\" or \"mlp\", got \"" + kind + "\"");
    }
    s.train_ratio = get_number(j, "train_ratio", s.train_ratio, "spec");
    if (!(s.train_ratio > 0 && s.train_ratio < 1)) {
        throw ValidationError("spec.train_ratio must lie strictly between 0 and 1 (both splits need shots)");
    }
    if (j.contains("mlp")) {
        const auto &m = j.at("mlp");
        check_keys(m, {"learning_rate", "epochs", "batch_size", "hidden", "seed"}, "spec.mlp");
        s.mlp.learning_rate = get_number(m, "learning_rate", s.mlp.learning_rate, "spec.mlp");
        s.mlp.epochs = get_count(m, "epochs", s.mlp.epochs, "spec.mlp");
        s.mlp.batch_size = get_count(m, "batch_size", s.mlp.batch_size, "spec.mlp");
        s.mlp.hidden = get_count(m, "hidden", s.mlp.hidden, "spec.mlp");
        s.mlp.seed = get_count(m, "seed", s.mlp.seed, "spec.mlp");
    }

    if (j.contains("attack")) {
        const auto &a = j.at("attack");
        check_keys(a, {"configs", "window", "train_fraction", "lambda", "epochs"}, "spec.attack");
        if (a.contains("configs")) {
            if (!a.at("configs").is_array() || a.at("configs").empty()) {
                throw ValidationError("spec.attack.configs must be a non-empty list of notations");
            }
            s.configs.clear();
            for (const auto &c : a.at("configs")) {
                if (!c.is_string()) {
                    throw ValidationError("spec.attack.configs entries must be strings");
                }
                s.configs.push_back(c.get<std::string>());
            }
        }
        s.attack.window = get_count(a, "window", s.attack.window, "spec.attack");
        s.attack.train_fraction = get_number(a, "train_fraction", s.attack.train_fraction, "spec.attack");
        s.attack.svm.lambda = get_number(a, "lambda", s.attack.svm.lambda, "spec.attack");
        s.attack.svm.epochs = get_count(a, "epochs", s.attack.svm.epochs, "spec.attack");
    }
    if (j.contains("outcomes")) {
        s.outcomes = resolve(get_string(j, "outcomes", "", "spec"));
    }

    if (j.contains("defense")) {
        const auto &d = j.at("defense");
        check_keys(d, {"scrambling", "randomization", "sandbox"}, "spec.defense");
        if (d.contains("scrambling")) {
            const auto &x = d.at("scrambling");
            const std::string w = "spec.defense.scrambling";
            check_keys(x, {"config", "policies", "shots_per_victim", "pad_block", "recovery_shots"}, w);
            ScramblingSpec sc;
            sc.config = get_string(x, "config", sc.config, w);
            if (x.contains("policies")) {
                sc.policies.clear();
                for (const auto &p : x.at("policies")) {
                    if (p == "fresh") {
                        sc.policies.push_back(PadPolicy::fresh);
                    } else if (p == "fixed") {
                        sc.policies.push_back(PadPolicy::fixed);
                    } else {
                        throw ValidationError(w + ".policies entries must be \"fresh\" or \"fixed\"");
                    }
                }
            }
            sc.shots_per_victim = get_count(x, "shots_per_victim", sc.shots_per_victim, w);
            sc.pad_block = get_count(x, "pad_block", sc.pad_block, w);
            sc.recovery_shots = get_count(x, "recovery_shots", sc.recovery_shots, w);
            s.scrambling = sc;
        }
        if (d.contains("randomization")) {
            const auto &x = d.at("randomization");
            const std::string w = "spec.defense.randomization";
            check_keys(x, {"config", "ensembles", "shots_per_victim"}, w);
            RandomizationSpec rs;
            rs.config = get_string(x, "config", rs.config, w);
            if (x.contains("ensembles")) {
                rs.ensembles.clear();
                for (const auto &e : x.at("ensembles")) {
                    if (e == "cyclic") {
                        rs.ensembles.push_back(0);
                    } else if (e.is_number_unsigned() && e.get<std::size_t>() > 0) {
                        rs.ensembles.push_back(e.get<std::size_t>());
                    } else {
                        throw ValidationError(w + ".ensembles entries must be positive sizes or \"cyclic\"");
                    }
                }
            }
            rs.shots_per_victim = get_count(x, "shots_per_victim", rs.shots_per_victim, w);
            s.randomization = rs;
        }
        if (d.contains("sandbox")) {
            const auto &x = d.at("sandbox");
            const std::string w = "spec.defense.sandbox";
            check_keys(x, {"groups", "group_size", "requests", "inter_group_coupling"}, w);
            SandboxSpec sb;
            sb.groups = get_count(x, "groups", sb.groups, w);
            sb.group_size = get_count(x, "group_size", sb.group_size, w);
            sb.requests = get_counts(x, "requests", sb.requests, w);
            if (x.contains("inter_group_coupling")) {
                if (!x.at("inter_group_coupling").is_boolean()) {
                    throw ValidationError(w + ".inter_group_coupling must be true or false");
                }
                sb.inter_group_coupling = x.at("inter_group_coupling").get<bool>();
            }
            if (sb.groups == 0 || sb.group_size == 0) {
                throw ValidationError(w + " needs at least one group of at least one qubit");
            }
            s.sandbox = sb;
        }
    }

    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) {
            throw ValidationError("spec.seed must be a non-negative integer");
        }
        s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("out")) {
        s.out = resolve(get_string(j, "out", "", "spec"));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Output helpers.

struct Run {
    std::string command;
    ExperimentSpec spec;
    std::uint64_t seed = 0;
    fs::path out;
    unsigned threads = 1;
    bool plots = false;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    json extra = json::object();

    fs::path path(const std::string &name) const {
        return out / name;
    }

    void write(const std::string &name, const std::string &content) {
        auto p = path(name);
        fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        f << content;
        f.close();
        if (!f) {
            throw FormatError("cannot write '" + p.string() + "'");
        }
        outputs.push_back(name);
    }

    void manifest() {
        json m;
        m["command"] = command;
        m["version"] = kVersion;
        m["seed"] = seed;
        m["spec"] = spec.source;
        m["device"] = spec.device_ref;
        m["inputs"] = inputs;
        json outs = json::array();
        for (const auto &o : outputs) {
            outs.push_back({{"file", o}, {"bytes", fs::file_size(path(o))}});
        }
        m["outputs"] = outs;
        m["results"] = extra;
        auto name = "manifest_" + command + ".json";
        std::ofstream f(path(name), std::ios::binary | std::ios::trunc);
        f << m.dump(2) << "\n";
        if (!f) {
            throw FormatError("cannot write '" + path(name).string() + "'");
        }
    }
};

std::string trace_name(const BitString &prep) {
    return "traces/" + prep.str() + ".qrxt";
}

std::string svg_escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Bar chart of P_flip per victim string, one series per attacker qubit,
/// with the pooled excitation rate as a dashed line.
std::string pflip_svg(const std::string &config, const std::vector<PflipEntry> &entries) {
    std::vector<std::string> victims;
    std::vector<std::size_t> attackers;
    double top = 0, flips = 0, trials = 0;
    for (const auto &e : entries) {
        if (std::find(victims.begin(), victims.end(), e.victim.str()) == victims.end()) {
            victims.push_back(e.victim.str());
        }
        if (std::find(attackers.begin(), attackers.end(), e.attacker) == attackers.end()) {
            attackers.push_back(e.attacker);
        }
        top = std::max(top, e.pflip + e.std_error);
        flips += static_cast<double>(e.flips);
        trials += static_cast<double>(e.trials);
    }
    const double avg = trials > 0 ? flips / trials : 0;
    top = top > 0 ? top * 1.15 : 1.0;
    const double W = 720, H = 400, left = 60, right = 20, up = 40, down = 70;
    const double pw = W - left - right, ph = H - up - down;
    const double slot = pw / static_cast<double>(std::max<std::size_t>(victims.size(), 1));
    const double bar = slot * 0.8 / static_cast<double>(std::max<std::size_t>(attackers.size(), 1));
    const char *colors[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee"};
    auto y = [&](double v) { return up + ph * (1 - v / top); };
    auto num = [](double v) { return text::format_fixed(v, 2); };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<text x=\"" + num(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">P_flip, " +
         svg_escape(config) + "</text>\n";
    s += "<line x1=\"" + num(left) + "\" y1=\"" + num(up + ph) + "\" x2=\"" + num(left + pw) + "\" y2=\"" +
         num(up + ph) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(left) + "\" y1=\"" + num(up) + "\" x2=\"" + num(left) + "\" y2=\"" + num(up + ph) +
         "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double v = top * t / 4;
        s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y(v) + 4) + "\" text-anchor=\"end\">" +
             text::format_fixed(v, 3) + "</text>\n";
    }
    for (const auto &e : entries) {
        auto vi = static_cast<double>(std::find(victims.begin(), victims.end(), e.victim.str()) - victims.begin());
        auto ai = static_cast<std::size_t>(std::find(attackers.begin(), attackers.end(), e.attacker) - attackers.begin());
        double x = left + vi * slot + slot * 0.1 + static_cast<double>(ai) * bar;
        s += "<rect x=\"" + num(x) + "\" y=\"" + num(y(e.pflip)) + "\" width=\"" + num(bar) + "\" height=\"" +
             num(up + ph - y(e.pflip)) + "\" fill=\"" + colors[ai % 5] + "\"/>\n";
        double cx = x + bar / 2;
        s += "<line x1=\"" + num(cx) + "\" y1=\"" + num(y(std::max(0.0, e.pflip - e.std_error))) + "\" x2=\"" +
             num(cx) + "\" y2=\"" + num(y(e.pflip + e.std_error)) + "\" stroke=\"black\"/>\n";
    }
    for (std::size_t v = 0; v < victims.size(); ++v) {
        double cx = left + (static_cast<double>(v) + 0.5) * slot;
        s += "<text x=\"" + num(cx) + "\" y=\"" + num(up + ph + 14) +
             "\" text-anchor=\"end\" transform=\"rotate(-60 " + num(cx) + " " + num(up + ph + 14) + ")\">" +
             victims[v] + "</text>\n";
    }
    s += "<line x1=\"" + num(left) + "\" y1=\"" + num(y(avg)) + "\" x2=\"" + num(left + pw) + "\" y2=\"" +
         num(y(avg)) + "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    for (std::size_t a = 0; a < attackers.size(); ++a) {
        double lx = left + pw - 120, ly = up + 14 * static_cast<double>(a);
        s += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly) + "\" width=\"10\" height=\"10\" fill=\"" + colors[a % 5] +
             "\"/><text x=\"" + num(lx + 14) + "\" y=\"" + num(ly + 9) + "\">attacker q" +
             std::to_string(attackers[a]) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

/// P_flip entries per configuration, read back from pflip.csv.
std::vector<std::pair<std::string, std::vector<PflipEntry>>> read_pflip_csv(const fs::path &p) {
    std::vector<std::pair<std::string, std::vector<PflipEntry>>> out;
    auto doc = read_text(p, "P_flip table");
    std::size_t line_no = 0;
    for (auto raw : text::lines(doc)) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty() || line_no == 1) {
            continue;
        }
        auto c = text::split(line, ',');
        if (c.size() != 7) {
            throw ParseError("expected 7 columns in " + p.string(), line_no);
        }
        PflipEntry e;
        e.victim = BitString::parse(c[1]);
        e.attacker = text::parse_uint(c[2], line_no);
        e.flips = text::parse_uint(c[3], line_no);
        e.trials = text::parse_uint(c[4], line_no);
        e.pflip = text::parse_double(c[5], line_no);
        e.std_error = text::parse_double(c[6], line_no);
        std::string cfg(c[0]);
        if (out.empty() || out.back().first != cfg) {
            out.emplace_back(cfg, std::vector<PflipEntry>{});
        }
        out.back().second.push_back(e);
    }
    return out;
}

void emit_plots(Run &run) {
    for (const auto &[cfg, entries] : read_pflip_csv(run.path("pflip.csv"))) {
        run.write("plots/pflip_" + cfg + ".svg", pflip_svg(cfg, entries));
    }
}

// ---------------------------------------------------------------------------
// Subcommands.

void cmd_simulate(Run &run) {
    const auto &s = run.spec;
    std::string listing = "file,prep,shots,seed\n";
    std::uint64_t total = 0;
    for (const auto &prep : s.preps) {
        const std::uint64_t file_seed = mix_seed(run.seed, prep.index());
        TraceFileHeader h;
        h.n_qubits = static_cast<std::uint32_t>(s.device.n_qubits());
        h.n_samples = static_cast<std::uint32_t>(s.device.n_samples);
        h.sample_rate_mhz = s.device.sample_rate_mhz;
        h.n_shots = s.shots_per_prep;
        h.seed = file_seed;
        h.flags = kFlagTrajectory;
        const auto name = trace_name(prep);
        fs::create_directories(run.path(name).parent_path());
        TraceWriter writer(run.path(name).string(), h);
        auto make = [&](std::size_t k) {
            auto rng = shot_rng(file_seed, k);
            return simulate_shot(s.device, prep, rng, k);
        };
        detail::stream_shots(s.shots_per_prep, run.threads, make,
                             [&](std::size_t, const ShotRecord &shot) { writer.add(shot); });
        writer.close();
        run.outputs.push_back(name);
        listing += name + "," + prep.str() + "," + std::to_string(s.shots_per_prep) + "," +
                   std::to_string(file_seed) + "\n";
        total += s.shots_per_prep;
    }
    run.write("simulate.csv", listing);
    run.extra["files"] = s.preps.size();
    run.extra["total_shots"] = total;
}

struct TraceListing {
    std::string file;
    BitString prep;
    std::size_t shots = 0;
};

std::vector<TraceListing> read_listing(Run &run) {
    auto p = run.path("simulate.csv");
    auto doc = read_text(p, "trace listing (run simulate first)");
    run.inputs.push_back("simulate.csv");
    std::vector<TraceListing> out;
    std::size_t line_no = 0;
    for (auto raw : text::lines(doc)) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty() || line_no == 1) {
            continue;
        }
        auto c = text::split(line, ',');
        if (c.size() != 4) {
            throw ParseError("simulate.csv: expected 4 columns", line_no);
        }
        TraceListing t{std::string(c[0]), BitString::parse(c[1]), text::parse_uint(c[2], line_no)};
        if (!fs::exists(run.path(t.file))) {
            throw ValidationError("trace file '" + run.path(t.file).string() + "' listed in simulate.csv is missing");
        }
        out.push_back(std::move(t));
    }
    if (out.empty()) {
        throw ValidationError("simulate.csv lists no trace files");
    }
    return out;
}

void cmd_discriminate(Run &run) {
    const auto &s = run.spec;
    auto listing = read_listing(run);
    const std::size_t nq = s.device.n_qubits();

    struct Split {
        std::size_t train = 0;
    };
    std::vector<Split> splits;
    for (const auto &t : listing) {
        auto n_train = static_cast<std::size_t>(std::floor(s.train_ratio * static_cast<double>(t.shots)));
        if (n_train == 0 || n_train >= t.shots) {
            throw ValidationError("train ratio " + text::format_double(s.train_ratio) + " leaves an empty split for " +
                                  t.file + " (" + std::to_string(t.shots) + " shots)");
        }
        splits.push_back({n_train});
        run.inputs.push_back(t.file);
    }
    auto load = [&](std::size_t i) {
        auto f = read_traces(run.path(listing[i].file).string());
        if (f.header.n_qubits != nq || f.header.n_samples != s.device.n_samples) {
            throw ValidationError(listing[i].file + " has " + std::to_string(f.header.n_qubits) + " qubits x " +
                                  std::to_string(f.header.n_samples) + " samples; the device has " +
                                  std::to_string(nq) + " x " + std::to_string(s.device.n_samples));
        }
        if (f.records.size() != listing[i].shots) {
            throw ValidationError(listing[i].file + " holds " + std::to_string(f.records.size()) +
                                  " shots, simulate.csv says " + std::to_string(listing[i].shots));
        }
        for (const auto &r : f.records) {
            if (r.preparation != listing[i].prep) {
                throw ValidationError(listing[i].file + " contains a shot prepared in " + r.preparation.str());
            }
        }
        return f.records;
    };

    // Pass 1: templates. Pass 2: thresholds and features. Pass 3: evaluation.
    TemplateAccumulator acc(nq, s.device.n_samples);
    for (std::size_t i = 0; i < listing.size(); ++i) {
        auto records = load(i);
        for (std::size_t k = 0; k < splits[i].train; ++k) {
            acc.add(records[k]);
        }
    }
    MatchedFilter mf(acc.finish());
    ScoreSet scores(nq);
    std::vector<FeatureVector> features;
    std::vector<BitString> labels;
    const bool mlp = s.discriminator == DiscriminatorKind::mlp;
    for (std::size_t i = 0; i < listing.size(); ++i) {
        auto records = load(i);
        for (std::size_t k = 0; k < splits[i].train; ++k) {
            scores.add(mf, records[k]);
            if (mlp) {
                features.push_back(extract_features(records[k], mf));
                labels.push_back(records[k].preparation);
            }
        }
    }
    fit_thresholds(mf, scores);
    Discriminator disc = mf;
    if (mlp) {
        auto hp = s.mlp;
        hp.seed = mix_seed(run.seed, hp.seed);
        disc = MlpDiscriminator{mf, train_mlp(features, labels, hp)};
    }

    std::vector<Outcome> outcomes;
    for (std::size_t i = 0; i < listing.size(); ++i) {
        auto records = load(i);
        std::vector<Outcome> part(records.size() - splits[i].train);
        parallel_for(part.size(), run.threads, [&](std::size_t k) {
            const auto &r = records[splits[i].train + k];
            part[k] = {r.preparation, discriminate(r, disc)};
        });
        outcomes.insert(outcomes.end(), part.begin(), part.end());
    }
    auto report = tally_accuracy(outcomes);

    run.write("outcomes.csv", outcomes_csv(outcomes));
    run.write("discriminator.txt", serialize_discriminator(disc));
    std::string acc_csv = "discriminator,metric,qubit,value\n";
    const std::string kind = to_string(s.discriminator);
    for (std::size_t q = 0; q < report.per_qubit.size(); ++q) {
        acc_csv += kind + ",per_qubit," + std::to_string(q) + "," + text::format_double(report.per_qubit[q]) + "\n";
    }
    acc_csv += kind + ",mean_per_qubit,," + text::format_double(report.mean_per_qubit) + "\n";
    acc_csv += kind + ",all_correct,," + text::format_double(report.all_correct) + "\n";
    run.write("accuracy.csv", acc_csv);
    run.extra["eval_shots"] = outcomes.size();
    run.extra["mean_per_qubit"] = report.mean_per_qubit;
}

fs::path outcomes_path(const Run &run) {
    return run.spec.outcomes ? *run.spec.outcomes : run.path("outcomes.csv");
}

AttackConfiguration parse_named(const std::string &notation, std::size_t n_qubits) {
    try {
        return parse_attack_config(notation, n_qubits);
    } catch (const ValidationError &e) {
        throw ValidationError("attack configuration '" + notation + "': " + e.what());
    }
}

void cmd_attack(Run &run) {
    const auto &s = run.spec;
    auto path = outcomes_path(run);
    if (!fs::exists(path)) {
        throw ValidationError("outcomes file '" + path.string() + "' not found (run discriminate first)");
    }
    auto outcomes = import_outcomes_csv(path.string());
    if (outcomes.empty()) {
        throw ValidationError("outcomes file '" + path.string() + "' has no rows");
    }
    run.inputs.push_back(path.lexically_relative(run.out).string());
    const std::size_t nq = outcomes.front().prep.size();

    std::vector<AttackConfiguration> configs;
    for (const auto &n : s.configs) {
        configs.push_back(parse_named(n, nq));
    }
    std::string pflip = pflip_csv_header();
    std::string accuracy = accuracy_csv_header();
    json results = json::array();
    for (const auto &cfg : configs) {
        auto params = s.attack;
        params.seed = mix_seed(run.seed, streams::kAttack);
        AttackResult r;
        try {
            r = run_attack(outcomes, cfg, params);
        } catch (const ValidationError &e) {
            throw ValidationError("attack configuration '" + cfg.notation + "': " + e.what());
        } catch (const NumericError &e) {
            throw NumericError("attack configuration '" + cfg.notation + "': " + e.what());
        }
        pflip += pflip_csv_rows(r.table);
        accuracy += accuracy_csv_row(r);
        results.push_back({{"config", cfg.notation}, {"eval_accuracy", r.eval_accuracy}, {"chance", r.chance}});
    }
    run.write("pflip.csv", pflip);
    run.write("attack_accuracy.csv", accuracy);
    run.extra["configs"] = results;
    if (run.plots) {
        emit_plots(run);
    }
}

void cmd_defend(Run &run) {
    const auto &s = run.spec;
    if (!s.scrambling && !s.randomization && !s.sandbox) {
        throw ValidationError("spec.defense selects no defense (scrambling, randomization or sandbox)");
    }
    std::string defense = defense_csv_header();
    json results = json::object();

    if (s.scrambling || s.randomization) {
        auto disc_text = read_text(run.path("discriminator.txt"), "trained discriminator (run discriminate first)");
        run.inputs.push_back("discriminator.txt");
        ReadoutPipeline pipeline{s.device, deserialize_discriminator(disc_text)};
        if (std::visit([](const auto &d) {
                if constexpr (std::is_same_v<std::decay_t<decltype(d)>, MatchedFilter>) {
                    return d.n_qubits();
                } else {
                    return d.filter.n_qubits();
                }
            },
                       pipeline.discriminator) != s.device.n_qubits()) {
            throw ValidationError("discriminator.txt was trained for a different qubit count than the device");
        }

        if (s.scrambling) {
            const auto &sc = *s.scrambling;
            auto cfg = parse_named(sc.config, s.device.n_qubits());
            for (std::size_t i = 0; i < sc.policies.size(); ++i) {
                ScramblingParams p;
                p.policy = sc.policies[i];
                p.shots_per_victim = sc.shots_per_victim;
                p.pad_block = sc.pad_block;
                p.recovery_shots = sc.recovery_shots;
                p.seed = mix_seed(run.seed, streams::kDefense);
                p.threads = run.threads;
                p.attack = s.attack;
                p.attack.seed = mix_seed(run.seed, streams::kAttack);
                auto r = evaluate_scrambling(pipeline, cfg, p);
                std::string param = std::string("config=") + cfg.notation + ";pad=" + to_string(p.policy) +
                                    ";window=" + std::to_string(p.attack.window) +
                                    ";shots_per_victim=" + std::to_string(p.shots_per_victim) +
                                    ";chance=" + text::format_double(r.chance);
                defense += defense_csv_row("scrambling", param, r.undefended_accuracy, r.defended_accuracy,
                                           r.recovery_tvd_max);
                results["scrambling_" + std::string(to_string(p.policy))] = {
                    {"undefended_accuracy", r.undefended_accuracy},
                    {"defended_accuracy", r.defended_accuracy},
                    {"padded_accuracy", r.padded_accuracy},
                    {"recovery_tvd_max", r.recovery_tvd_max},
                    {"recovery_tvd_mean", r.recovery_tvd_mean},
                    {"support_undefended", r.support_undefended},
                    {"support_recovered", r.support_recovered}};
            }
        }
        if (s.randomization) {
            const auto &rs = *s.randomization;
            auto cfg = parse_named(rs.config, s.device.n_qubits());
            for (auto size : rs.ensembles) {
                const std::size_t n = s.device.n_qubits();
                auto ensemble = size == 0 ? cyclic_ensemble(n, rs.shots_per_victim)
                                          : randomize_mapping(n, size, rs.shots_per_victim,
                                                              mix_seed(run.seed, streams::kMapping));
                auto attack = s.attack;
                attack.seed = mix_seed(run.seed, streams::kAttack);
                auto r = evaluate_randomization(pipeline, cfg, ensemble, run.seed, attack, run.threads);
                std::string label = size == 0 ? "cyclic" : std::to_string(size);
                std::string param = "config=" + cfg.notation + ";ensemble=" + label +
                                    ";shots_per_victim=" + std::to_string(rs.shots_per_victim) +
                                    ";chance=" + text::format_double(r.chance);
                // Logical outcomes are returned unscrambled, so there is no
                // recovery distance to report.
                defense += "randomization," + param + "," + text::format_double(r.fixed_accuracy) + "," +
                           text::format_double(r.randomized_accuracy) + ",\n";
                results["randomization_" + label] = {{"fixed_accuracy", r.fixed_accuracy},
                                                     {"randomized_accuracy", r.randomized_accuracy}};
            }
        }
        run.write("defense.csv", defense);
    }

    if (s.sandbox) {
        const auto &sb = *s.sandbox;
        auto grouping = uniform_grouping(sb.groups, sb.group_size);
        grouping.inter_group_coupling = sb.inter_group_coupling;
        std::string alloc = allocation_csv_header();
        for (auto policy : {AllocationPolicy::sandboxed, AllocationPolicy::unrestricted}) {
            auto r = sandbox_allocate(sb.requests, grouping, policy);
            alloc += allocation_csv_rows(r);
            results[std::string("sandbox_") + to_string(policy)] = {{"utilization", r.utilization},
                                                                    {"used_qubits", r.used_qubits},
                                                                    {"reserved_qubits", r.reserved_qubits},
                                                                    {"groups_touched", r.groups_touched},
                                                                    {"rejected", r.rejected}};
        }
        run.write("allocation.csv", alloc);
    }
    run.extra = results;
}

void cmd_report(Run &run) {
    std::string csv = "source,row\n";
    std::string md = "# rxleak report\n\n";
    bool any = false;
    for (const char *name : {"accuracy.csv", "attack_accuracy.csv", "defense.csv", "allocation.csv"}) {
        auto p = run.path(name);
        if (!fs::exists(p)) {
            continue;
        }
        any = true;
        run.inputs.push_back(name);
        auto doc = read_text(p, name);
        auto rows = text::lines(doc);
        md += "## " + std::string(name) + "\n\n";
        bool header = true;
        for (auto raw : rows) {
            auto line = text::trim(raw);
            if (line.empty()) {
                continue;
            }
            auto cells = text::split(line, ',');
            std::string row = "|";
            for (auto c : cells) {
                row += " " + std::string(c) + " |";
            }
            md += row + "\n";
            if (header) {
                md += "|";
                for (std::size_t i = 0; i < cells.size(); ++i) {
                    md += " --- |";
                }
                md += "\n";
                header = false;
            } else {
                csv += std::string(name) + ",\"" + std::string(line) + "\"\n";
            }
        }
        md += "\n";
    }
    if (!any) {
        throw ValidationError("nothing to report in '" + run.out.string() + "': run discriminate, attack or defend first");
    }
    run.write("report.csv", csv);
    run.write("report.md", md);
    if (run.plots && fs::exists(run.path("pflip.csv"))) {
        emit_plots(run);
    }
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"rxleak: readout crosstalk leakage experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string spec_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
    bool plots = false;
    app.add_option("--spec", spec_path, "experiment spec (JSON)")->required();
    app.add_option("--seed", seed, "global seed; overrides the spec's seed");
    app.add_option("--out", out, "output directory; overrides the spec's out");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_flag("--plots", plots, "also emit SVG plots");
    app.set_version_flag("--version", kVersion);

    std::vector<std::pair<std::string, void (*)(Run &)>> commands{{"simulate", cmd_simulate},
                                                                  {"discriminate", cmd_discriminate},
                                                                  {"attack", cmd_attack},
                                                                  {"defend", cmd_defend},
                                                                  {"report", cmd_report}};
    const char *help[] = {"simulate trace files for every preparation", "train a discriminator and emit outcomes",
                          "estimate P_flip and train the victim-string SVM", "evaluate the selected defenses",
                          "collect CSV results into report.csv and report.md"};
    for (std::size_t i = 0; i < commands.size(); ++i) {
        app.add_subcommand(commands[i].first, help[i]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        Run run;
        run.spec = load_spec(spec_path);
        if (seed) {
            run.seed = *seed;
        } else if (run.spec.seed) {
            run.seed = *run.spec.seed;
        } else {
            throw ValidationError("a seed is required: pass --seed or set \"seed\" in the spec");
        }
        if (!out.empty()) {
            run.out = out;
        } else if (run.spec.out) {
            run.out = *run.spec.out;
        } else {
            throw ValidationError("an output directory is required: pass --out or set \"out\" in the spec");
        }
        run.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
        run.plots = plots;
        fs::create_directories(run.out);
        for (const auto &[name, fn] : commands) {
            if (app.got_subcommand(name)) {
                run.command = name;
                fn(run);
            }
        }
        run.manifest();
    } catch (const ValidationError &e) {
        std::cerr << "rxleak: error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception &e) {
        std::cerr << "rxleak: error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
