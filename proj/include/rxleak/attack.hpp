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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rxleak/bits.hpp"
#include "rxleak/errors.hpp"
#include "rxleak/rng.hpp"
#include "rxleak/text.hpp"

namespace rxleak {

// ---------------------------------------------------------------------------
// Attack configurations, written like "A123A": 'A' marks attacker qubits,
// digits mark victim qubits and keep their printed labels.

struct AttackConfiguration {
    std::string notation;
    std::size_t n_qubits = 0;
    std::vector<std::size_t> attackers;
    std::vector<std::size_t> victims;
    std::vector<int> victim_labels;

    std::size_t n_classes() const {
        return std::size_t{1} << victims.size();
    }
    double chance() const {
        return 1.0 / static_cast<double>(n_classes());
    }
    BitString victim_bits(const BitString &full) const {
        return full.select(victims);
    }
    BitString attacker_bits(const BitString &full) const {
        return full.select(attackers);
    }
    /// Full preparation with every attacker qubit in 0 and victims set to `v`.
    BitString preparation(const BitString &v) const {
        BitString out(n_qubits);
        for (std::size_t i = 0; i < victims.size(); ++i) {
            out.set(victims[i], v[i]);
        }
        return out;
    }
};

inline AttackConfiguration parse_attack_config(std::string_view notation, std::size_t n_qubits) {
    std::string text(notation);
    if (notation.size() != n_qubits) {
        throw ValidationError("attack configuration '" + text + "': length " + std::to_string(notation.size()) +
                              " does not match " + std::to_string(n_qubits) + " qubits");
    }
    AttackConfiguration cfg;
    cfg.notation = text;
    cfg.n_qubits = n_qubits;
    std::vector<bool> seen(10, false);
    for (std::size_t i = 0; i < notation.size(); ++i) {
        char c = notation[i];
        if (c == 'A') {
            cfg.attackers.push_back(i);
        } else if (c >= '0' && c <= '9') {
            int d = c - '0';
            if (seen[d]) {
                throw ValidationError("attack configuration '" + text + "': duplicate victim digit '" +
                                      std::string(1, c) + "'");
            }
            seen[d] = true;
            cfg.victims.push_back(i);
            cfg.victim_labels.push_back(d);
        } else {
            throw ValidationError("attack configuration '" + text + "': illegal character '" + std::string(1, c) +
                                  "' at position " + std::to_string(i));
        }
    }
    if (cfg.attackers.empty()) {
        throw ValidationError("attack configuration '" + text + "': empty attacker set");
    }
    if (cfg.victims.empty()) {
        throw ValidationError("attack configuration '" + text + "': empty victim set");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// P_flip(A) = Pr(A measured 1 | A prepared 0, victims prepared V).

struct PflipEntry {
    BitString victim;
    std::size_t attacker = 0;
    std::uint64_t flips = 0;
    std::uint64_t trials = 0;
    double pflip = 0;
    double std_error = 0;
};

/// 1->0 counts for attacker qubits prepared in 1. Collected, not used.
struct RelaxationDiagnostics {
    std::size_t attacker = 0;
    std::uint64_t prepared_one = 0;
    std::uint64_t measured_zero = 0;
};

struct PflipTable {
    std::string config;
    /// Sorted by victim index, then attacker position in the configuration.
    std::vector<PflipEntry> entries;
    std::uint64_t skipped_shots = 0;
    std::vector<RelaxationDiagnostics> relaxations;

    const PflipEntry *find(const BitString &victim, std::size_t attacker) const {
        for (const auto &e : entries) {
            if (e.victim == victim && e.attacker == attacker) {
                return &e;
            }
        }
        return nullptr;
    }

    /// Flips over trials across every victim string for one attacker qubit.
    double pooled_pflip(std::size_t attacker) const {
        std::uint64_t f = 0, t = 0;
        for (const auto &e : entries) {
            if (e.attacker == attacker) {
                f += e.flips;
                t += e.trials;
            }
        }
        return t ? static_cast<double>(f) / static_cast<double>(t) : 0.0;
    }

    /// (max_V P_flip - min_V P_flip) / pooled two-proportion standard error,
    /// for one attacker qubit. Zero when the pooled rate is degenerate.
    double spread_z(std::size_t attacker) const {
        const PflipEntry *lo = nullptr, *hi = nullptr;
        for (const auto &e : entries) {
            if (e.attacker != attacker) {
                continue;
            }
            if (!lo || e.pflip < lo->pflip) {
                lo = &e;
            }
            if (!hi || e.pflip > hi->pflip) {
                hi = &e;
            }
        }
        if (!lo) {
            return 0;
        }
        double p = pooled_pflip(attacker);
        double se = std::sqrt(p * (1 - p) * (1.0 / static_cast<double>(lo->trials) + 1.0 / static_cast<double>(hi->trials)));
        return se > 0 ? (hi->pflip - lo->pflip) / se : 0.0;
    }

    double max_spread_z() const {
        double best = 0;
        for (const auto &r : relaxations) {
            best = std::max(best, spread_z(r.attacker));
        }
        return best;
    }
};

inline bool attackers_prepared_zero(const AttackConfiguration &cfg, const BitString &prep) {
    for (auto a : cfg.attackers) {
        if (prep[a]) {
            return false;
        }
    }
    return true;
}

inline void check_outcome(const AttackConfiguration &cfg, const Outcome &o) {
    if (o.prep.size() != cfg.n_qubits || o.measured.size() != cfg.n_qubits) {
        throw ValidationError("outcome '" + o.prep.str() + "," + o.measured.str() + "' does not match the " +
                              std::to_string(cfg.n_qubits) + "-qubit configuration '" + cfg.notation + "'");
    }
}

/// Shots whose attacker qubits were not all prepared in 0 are skipped and
/// counted in `skipped_shots`.
inline PflipTable estimate_pflip(std::span<const Outcome> outcomes, const AttackConfiguration &cfg) {
    struct Row {
        std::uint64_t trials = 0;
        std::vector<std::uint64_t> flips;
    };
    std::map<BitString, Row> rows;
    PflipTable table;
    table.config = cfg.notation;
    for (auto a : cfg.attackers) {
        table.relaxations.push_back({a, 0, 0});
    }
    for (const auto &o : outcomes) {
        check_outcome(cfg, o);
        if (!attackers_prepared_zero(cfg, o.prep)) {
            ++table.skipped_shots;
            for (std::size_t i = 0; i < cfg.attackers.size(); ++i) {
                auto a = cfg.attackers[i];
                if (o.prep[a]) {
                    ++table.relaxations[i].prepared_one;
                    table.relaxations[i].measured_zero += !o.measured[a];
                }
            }
            continue;
        }
        auto &row = rows[cfg.victim_bits(o.prep)];
        row.flips.resize(cfg.attackers.size(), 0);
        ++row.trials;
        for (std::size_t i = 0; i < cfg.attackers.size(); ++i) {
            row.flips[i] += o.measured[cfg.attackers[i]];
        }
    }
    if (rows.empty()) {
        throw ValidationError("no qualifying shots for '" + cfg.notation +
                              "': every shot had an attacker qubit prepared in 1");
    }
    // std::map orders equal-length bit-strings by index.
    for (const auto &[v, row] : rows) {
        for (std::size_t i = 0; i < cfg.attackers.size(); ++i) {
            PflipEntry e;
            e.victim = v;
            e.attacker = cfg.attackers[i];
            e.flips = row.flips[i];
            e.trials = row.trials;
            e.pflip = static_cast<double>(e.flips) / static_cast<double>(e.trials);
            e.std_error = std::sqrt(e.pflip * (1 - e.pflip) / static_cast<double>(e.trials));
            table.entries.push_back(e);
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Windowed flip-frequency features.

struct LeakageFeatures {
    std::vector<double> features;
    std::vector<std::uint32_t> flip_counts;
    BitString victim;
};

/// Groups qualifying shots by victim preparation, shuffles each group with
/// its own seeded stream (unless `shuffle` is false) and cuts it into
/// floor(count / window) disjoint windows. Leftover shots are dropped.
inline std::vector<LeakageFeatures> build_leakage_features(std::span<const Outcome> outcomes,
                                                           const AttackConfiguration &cfg, std::size_t window,
                                                           std::uint64_t seed, bool shuffle = true) {
    if (window == 0) {
        throw ValidationError("window must be >= 1");
    }
    std::map<BitString, std::vector<BitString>> groups;
    for (const auto &o : outcomes) {
        check_outcome(cfg, o);
        if (attackers_prepared_zero(cfg, o.prep)) {
            groups[cfg.victim_bits(o.prep)].push_back(cfg.attacker_bits(o.measured));
        }
    }
    if (groups.empty()) {
        throw ValidationError("no qualifying shots for '" + cfg.notation + "'");
    }
    std::vector<LeakageFeatures> out;
    for (auto &[v, shots] : groups) {
        if (shots.size() < window) {
            throw ValidationError("insufficient shots for victim string " + v.str() + " in '" + cfg.notation +
                                  "': " + std::to_string(shots.size()) + " < window " + std::to_string(window));
        }
        if (shuffle) {
            Rng rng(mix_seed(seed, v.index()));
            shuffle_in_place(shots, rng);
        }
        for (std::size_t start = 0; start + window <= shots.size(); start += window) {
            LeakageFeatures f;
            f.victim = v;
            f.flip_counts.assign(cfg.attackers.size(), 0);
            for (std::size_t k = start; k < start + window; ++k) {
                for (std::size_t i = 0; i < cfg.attackers.size(); ++i) {
                    f.flip_counts[i] += shots[k][i];
                }
            }
            for (auto c : f.flip_counts) {
                f.features.push_back(static_cast<double>(c) / static_cast<double>(window));
            }
            out.push_back(std::move(f));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// One-vs-rest linear SVM.

struct SvmParams {
    double lambda = 1e-2;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
};

class LinearSvm {
   public:
    LinearSvm() = default;
    LinearSvm(std::size_t n_classes, std::size_t dim, SvmParams params)
        : n_classes_(n_classes), dim_(dim), params_(params), weights_(n_classes * dim, 0.0), bias_(n_classes, 0.0),
          mean_(dim, 0.0), scale_(dim, 1.0) {
    }

    std::size_t n_classes() const {
        return n_classes_;
    }
    std::size_t dim() const {
        return dim_;
    }
    const SvmParams &params() const {
        return params_;
    }
    std::vector<double> &weights() {
        return weights_;
    }
    const std::vector<double> &weights() const {
        return weights_;
    }
    std::vector<double> &bias() {
        return bias_;
    }
    const std::vector<double> &bias() const {
        return bias_;
    }

    /// Affine map applied to raw features before scoring: (x - mean) / scale.
    void set_input_transform(std::vector<double> mean, std::vector<double> scale) {
        if (mean.size() != dim_ || scale.size() != dim_) {
            throw ValidationError("input transform dimension mismatch");
        }
        mean_ = std::move(mean);
        scale_ = std::move(scale);
    }
    const std::vector<double> &input_mean() const {
        return mean_;
    }
    const std::vector<double> &input_scale() const {
        return scale_;
    }

    std::vector<double> scores(std::span<const double> x) const {
        if (x.size() != dim_) {
            throw ValidationError("feature dimension mismatch: got " + std::to_string(x.size()) + ", model expects " +
                                  std::to_string(dim_));
        }
        std::vector<double> s(n_classes_);
        for (std::size_t k = 0; k < n_classes_; ++k) {
            double acc = bias_[k];
            for (std::size_t j = 0; j < dim_; ++j) {
                acc += weights_[k * dim_ + j] * (x[j] - mean_[j]) / scale_[j];
            }
            s[k] = acc;
        }
        return s;
    }

    /// Highest-scoring class; ties go to the lowest index.
    std::size_t predict(std::span<const double> x) const {
        auto s = scores(x);
        std::size_t best = 0;
        for (std::size_t k = 1; k < s.size(); ++k) {
            if (s[k] > s[best]) {
                best = k;
            }
        }
        return best;
    }

   private:
    std::size_t n_classes_ = 0, dim_ = 0;
    SvmParams params_;
    std::vector<double> weights_, bias_;
    std::vector<double> mean_, scale_;
};

/// Pegasos: per class, minimize lambda/2 |(w, b)|^2 + mean hinge(y (w.x + b))
/// by stochastic subgradient steps of size 1/(lambda t), followed by
/// projection onto the ball of radius 1/sqrt(lambda). The bias is an extra
/// coordinate with constant input 1. Sample order is a seeded shuffle per
/// epoch, shared by all classes.
inline LinearSvm train_svm(std::span<const std::vector<double>> features, std::span<const std::size_t> labels,
                           std::size_t n_classes, const SvmParams &params) {
    if (features.empty() || features.size() != labels.size()) {
        throw ValidationError("train_svm needs equally many (>0) feature vectors and labels");
    }
    if (!(params.lambda > 0) || params.epochs == 0) {
        throw ValidationError("train_svm needs lambda > 0 and epochs >= 1");
    }
    const std::size_t dim = features.front().size();
    std::vector<bool> present(n_classes, false);
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= n_classes) {
            throw ValidationError("label " + std::to_string(labels[i]) + " out of range");
        }
        if (features[i].size() != dim) {
            throw ValidationError("ragged feature vectors");
        }
        if (!present[labels[i]]) {
            present[labels[i]] = true;
            ++distinct;
        }
    }
    if (distinct < 2) {
        throw ValidationError("single-class training set: an SVM needs at least two classes");
    }

    LinearSvm svm(n_classes, dim, params);
    std::vector<std::size_t> order(features.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    Rng rng(mix_seed(params.seed, 0));
    std::vector<std::vector<std::size_t>> epochs;
    for (std::size_t e = 0; e < params.epochs; ++e) {
        shuffle_in_place(order, rng);
        epochs.push_back(order);
    }

    const double radius = 1.0 / std::sqrt(params.lambda);
    std::vector<double> w(dim + 1);
    for (std::size_t k = 0; k < n_classes; ++k) {
        std::fill(w.begin(), w.end(), 0.0);
        std::uint64_t t = 0;
        for (const auto &ord : epochs) {
            for (auto i : ord) {
                ++t;
                const auto &x = features[i];
                double y = labels[i] == k ? 1.0 : -1.0;
                double margin = w[dim];
                for (std::size_t j = 0; j < dim; ++j) {
                    margin += w[j] * x[j];
                }
                margin *= y;
                double eta = 1.0 / (params.lambda * static_cast<double>(t));
                double shrink = 1.0 - eta * params.lambda;
                for (auto &v : w) {
                    v *= shrink;
                }
                if (margin < 1.0) {
                    for (std::size_t j = 0; j < dim; ++j) {
                        w[j] += eta * y * x[j];
                    }
                    w[dim] += eta * y;
                }
                double norm = 0;
                for (auto v : w) {
                    norm += v * v;
                }
                norm = std::sqrt(norm);
                if (norm > radius) {
                    for (auto &v : w) {
                        v *= radius / norm;
                    }
                }
            }
        }
        for (std::size_t j = 0; j < dim; ++j) {
            if (!std::isfinite(w[j])) {
                throw NumericError("SVM training produced a non-finite weight for class " + std::to_string(k));
            }
            svm.weights()[k * dim + j] = w[j];
        }
        if (!std::isfinite(w[dim])) {
            throw NumericError("SVM training produced a non-finite bias for class " + std::to_string(k));
        }
        svm.bias()[k] = w[dim];
    }
    return svm;
}

inline BitString predict_victim(const LinearSvm &svm, std::span<const double> features, std::size_t n_victims) {
    return BitString::from_index(svm.predict(features), n_victims);
}

inline double classification_accuracy(const LinearSvm &svm, std::span<const std::vector<double>> features,
                                      std::span<const std::size_t> labels) {
    if (features.empty() || features.size() != labels.size()) {
        throw ValidationError("classification_accuracy needs equally many (>0) features and labels");
    }
    std::size_t right = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        right += svm.predict(features[i]) == labels[i];
    }
    return static_cast<double>(right) / static_cast<double>(features.size());
}

// ---------------------------------------------------------------------------
// Plug-in mutual information between two discrete sequences, in bits.

inline double mutual_information(std::span<const std::uint64_t> a, std::span<const std::uint64_t> v) {
    if (a.empty() || a.size() != v.size()) {
        throw ValidationError("mutual_information needs two equally long non-empty sequences");
    }
    std::map<std::pair<std::uint64_t, std::uint64_t>, double> joint;
    std::map<std::uint64_t, double> pa, pv;
    const double n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], v[i]}] += 1;
        pa[a[i]] += 1;
        pv[v[i]] += 1;
    }
    double mi = 0;
    for (const auto &[key, c] : joint) {
        mi += c / n * std::log2(c * n / (pa[key.first] * pv[key.second]));
    }
    return std::max(mi, 0.0);
}

// ---------------------------------------------------------------------------
// Full attack on an outcome stream.

struct AttackParams {
    std::size_t window = 256;
    /// Fraction of each victim string's windows used to train the SVM.
    double train_fraction = 0.5;
    SvmParams svm;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

struct AttackResult {
    AttackConfiguration config;
    PflipTable table;
    std::size_t window = 0;
    std::size_t n_train = 0;
    std::size_t n_eval = 0;
    double train_accuracy = 0;
    double eval_accuracy = 0;
    double chance = 0;
    double mutual_information_bits = 0;
};

/// P_flip table, mutual information between attacker outcomes and victim
/// strings, and SVM accuracy on held-out windows. Features are standardized
/// with training-window statistics; the transform is stored in the model.
inline AttackResult run_attack(std::span<const Outcome> outcomes, const AttackConfiguration &cfg,
                               const AttackParams &params, LinearSvm *model_out = nullptr) {
    if (!(params.train_fraction > 0 && params.train_fraction < 1)) {
        throw ValidationError("attack train_fraction must lie in (0, 1)");
    }
    AttackResult r;
    r.config = cfg;
    r.window = params.window;
    r.chance = cfg.chance();
    r.table = estimate_pflip(outcomes, cfg);

    std::vector<std::uint64_t> a_codes, v_codes;
    for (const auto &o : outcomes) {
        if (attackers_prepared_zero(cfg, o.prep)) {
            a_codes.push_back(cfg.attacker_bits(o.measured).index());
            v_codes.push_back(cfg.victim_bits(o.prep).index());
        }
    }
    r.mutual_information_bits = mutual_information(a_codes, v_codes);

    auto windows = build_leakage_features(outcomes, cfg, params.window, mix_seed(params.seed, 1), params.shuffle);
    std::map<BitString, std::vector<const LeakageFeatures *>> by_class;
    for (const auto &w : windows) {
        by_class[w.victim].push_back(&w);
    }
    std::vector<std::vector<double>> train_x, eval_x;
    std::vector<std::size_t> train_y, eval_y;
    for (const auto &[v, ws] : by_class) {
        if (ws.size() < 2) {
            throw ValidationError("victim string " + v.str() + " in '" + cfg.notation +
                                  "' yields fewer than 2 windows; cannot split train/eval");
        }
        auto n_train = static_cast<std::size_t>(std::lround(params.train_fraction * static_cast<double>(ws.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, ws.size() - 1);
        for (std::size_t i = 0; i < ws.size(); ++i) {
            auto &xs = i < n_train ? train_x : eval_x;
            auto &ys = i < n_train ? train_y : eval_y;
            xs.push_back(ws[i]->features);
            ys.push_back(v.index());
        }
    }

    const std::size_t dim = cfg.attackers.size();
    std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
    for (const auto &x : train_x) {
        for (std::size_t j = 0; j < dim; ++j) {
            mean[j] += x[j];
        }
    }
    for (auto &m : mean) {
        m /= static_cast<double>(train_x.size());
    }
    for (const auto &x : train_x) {
        for (std::size_t j = 0; j < dim; ++j) {
            scale[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
        }
    }
    for (auto &s : scale) {
        s = std::sqrt(s / static_cast<double>(train_x.size()));
        if (!(s > 0)) {
            s = 1.0;
        }
    }
    auto standardized = train_x;
    for (auto &x : standardized) {
        for (std::size_t j = 0; j < dim; ++j) {
            x[j] = (x[j] - mean[j]) / scale[j];
        }
    }
    auto svm_params = params.svm;
    svm_params.seed = mix_seed(params.seed, 2);
    auto svm = train_svm(standardized, train_y, cfg.n_classes(), svm_params);
    svm.set_input_transform(mean, scale);

    r.n_train = train_x.size();
    r.n_eval = eval_x.size();
    r.train_accuracy = classification_accuracy(svm, train_x, train_y);
    r.eval_accuracy = classification_accuracy(svm, eval_x, eval_y);
    if (model_out) {
        *model_out = std::move(svm);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string pflip_csv_header() {
    return "config,victim_bitstring,attacker_qubit,flips,trials,pflip,stderr\n";
}

inline std::string pflip_csv_rows(const PflipTable &t) {
    std::string out;
    for (const auto &e : t.entries) {
        out += t.config + "," + e.victim.str() + "," + std::to_string(e.attacker) + "," + std::to_string(e.flips) +
               "," + std::to_string(e.trials) + "," + text::format_double(e.pflip) + "," +
               text::format_double(e.std_error) + "\n";
    }
    return out;
}

inline std::string accuracy_csv_header() {
    return "config,n_attackers,n_victims,window,n_train,n_eval,train_accuracy,eval_accuracy,chance,"
           "mutual_information_bits,max_spread_z\n";
}

inline std::string accuracy_csv_row(const AttackResult &r) {
    return r.config.notation + "," + std::to_string(r.config.attackers.size()) + "," +
           std::to_string(r.config.victims.size()) + "," + std::to_string(r.window) + "," + std::to_string(r.n_train) +
           "," + std::to_string(r.n_eval) + "," + text::format_double(r.train_accuracy) + "," +
           text::format_double(r.eval_accuracy) + "," + text::format_double(r.chance) + "," +
           text::format_double(r.mutual_information_bits) + "," + text::format_double(r.table.max_spread_z()) + "\n";
}

inline constexpr int kSvmFormatVersion = 1;

inline std::string serialize_svm(const LinearSvm &svm) {
    std::string out = "rxleak-svm " + std::to_string(kSvmFormatVersion) + "\n";
    out += "classes " + std::to_string(svm.n_classes()) + "\n";
    out += "dim " + std::to_string(svm.dim()) + "\n";
    out += "lambda " + text::format_double(svm.params().lambda) + "\n";
    out += "epochs " + std::to_string(svm.params().epochs) + "\n";
    out += "seed " + std::to_string(svm.params().seed) + "\n";
    out += "input_mean " + text::join_doubles(svm.input_mean()) + "\n";
    out += "input_scale " + text::join_doubles(svm.input_scale()) + "\n";
    out += "weights " + text::join_doubles(svm.weights()) + "\n";
    out += "bias " + text::join_doubles(svm.bias()) + "\n";
    return out;
}

inline LinearSvm deserialize_svm(std::string_view doc) {
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    std::size_t line_no = 0;
    for (auto line : text::lines(doc)) {
        ++line_no;
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        auto sp = line.find(' ');
        std::string key(line.substr(0, sp));
        kv[key] = {sp == std::string_view::npos ? "" : std::string(line.substr(sp + 1)), line_no};
    }
    auto get = [&](const std::string &key) -> const std::pair<std::string, std::size_t> & {
        auto it = kv.find(key);
        if (it == kv.end()) {
            throw ParseError("SVM document is missing '" + key + "'");
        }
        return it->second;
    };
    auto version = text::parse_uint(get("rxleak-svm").first, get("rxleak-svm").second);
    if (version != kSvmFormatVersion) {
        throw ParseError("unsupported SVM format version " + std::to_string(version));
    }
    SvmParams p;
    p.lambda = text::parse_double(get("lambda").first, get("lambda").second);
    p.epochs = text::parse_uint(get("epochs").first, get("epochs").second);
    p.seed = text::parse_uint(get("seed").first, get("seed").second);
    std::size_t k = text::parse_uint(get("classes").first, get("classes").second);
    std::size_t d = text::parse_uint(get("dim").first, get("dim").second);
    LinearSvm svm(k, d, p);
    auto read = [&](const std::string &key, std::size_t n) {
        auto v = text::parse_doubles(get(key).first, get(key).second);
        if (v.size() != n) {
            throw ParseError("'" + key + "' needs " + std::to_string(n) + " values", get(key).second);
        }
        return v;
    };
    svm.set_input_transform(read("input_mean", d), read("input_scale", d));
    svm.weights() = read("weights", k * d);
    svm.bias() = read("bias", k);
    return svm;
}

}  // namespace rxleak
