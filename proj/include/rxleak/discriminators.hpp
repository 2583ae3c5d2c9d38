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
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/random/uniform_real_distribution.hpp>

#include "rxleak/bits.hpp"
#include "rxleak/errors.hpp"
#include "rxleak/rng.hpp"
#include "rxleak/text.hpp"
#include "rxleak/trace_sim.hpp"

namespace rxleak {

// ---------------------------------------------------------------------------
// Class-conditional mean traces.

struct Template {
    std::size_t n_qubits = 0;
    std::size_t n_samples = 0;
    /// mean[b][q]: mean trace of qubit q's channel over shots prepared with bit b.
    std::vector<std::vector<Complex>> mean[2];
    std::vector<std::uint64_t> counts[2];
};

/// Streaming form of `fit_templates`, for training sets too large to hold as
/// ShotRecords.
class TemplateAccumulator {
   public:
    TemplateAccumulator(std::size_t n_qubits, std::size_t n_samples) : nq_(n_qubits), ns_(n_samples) {
        for (int b = 0; b < 2; ++b) {
            sum_[b].assign(nq_, std::vector<Complex>(ns_));
            counts_[b].assign(nq_, 0);
        }
    }

    void add(const ShotRecord &shot) {
        if (shot.n_qubits != nq_ || shot.n_samples != ns_) {
            throw ValidationError("training shot dimensions differ from the first shot");
        }
        for (std::size_t q = 0; q < nq_; ++q) {
            int b = shot.preparation[q];
            auto ch = shot.channel(q);
            auto &acc = sum_[b][q];
            for (std::size_t n = 0; n < ns_; ++n) {
                acc[n] += ch[n];
            }
            ++counts_[b][q];
        }
    }

    Template finish() const {
        Template t;
        t.n_qubits = nq_;
        t.n_samples = ns_;
        for (int b = 0; b < 2; ++b) {
            t.counts[b] = counts_[b];
            t.mean[b] = sum_[b];
            for (std::size_t q = 0; q < nq_; ++q) {
                if (counts_[b][q] == 0) {
                    throw ValidationError("class missing: qubit " + std::to_string(q) + " has no training shots prepared in " +
                                          std::to_string(b));
                }
                for (auto &v : t.mean[b][q]) {
                    v /= static_cast<double>(counts_[b][q]);
                }
            }
        }
        return t;
    }

   private:
    std::size_t nq_, ns_;
    std::vector<std::vector<Complex>> sum_[2];
    std::vector<std::uint64_t> counts_[2];
};

inline Template fit_templates(std::span<const ShotRecord> training) {
    if (training.empty()) {
        throw ValidationError("class missing: empty training set");
    }
    TemplateAccumulator acc(training.front().n_qubits, training.front().n_samples);
    for (const auto &shot : training) {
        acc.add(shot);
    }
    return acc.finish();
}

// ---------------------------------------------------------------------------
// Matched filter.

enum class Window { full, early, late };

struct QubitFilter {
    /// conj(mu1 - mu0)
    std::vector<Complex> weights;
    /// (mu0 + mu1) / 2
    std::vector<Complex> midpoint;
    double threshold = 0;
};

class MatchedFilter {
   public:
    MatchedFilter() = default;

    /// Weights and midpoints from templates; thresholds start at zero.
    explicit MatchedFilter(const Template &t) : n_samples_(t.n_samples) {
        for (std::size_t q = 0; q < t.n_qubits; ++q) {
            QubitFilter f;
            f.weights.resize(t.n_samples);
            f.midpoint.resize(t.n_samples);
            double norm = 0;
            for (std::size_t n = 0; n < t.n_samples; ++n) {
                Complex d = t.mean[1][q][n] - t.mean[0][q][n];
                f.weights[n] = std::conj(d);
                f.midpoint[n] = (t.mean[0][q][n] + t.mean[1][q][n]) / 2.0;
                norm += std::norm(d);
            }
            if (!(norm > 0)) {
                throw ValidationError("degenerate template: qubit " + std::to_string(q) + " has mu1 == mu0");
            }
            filters_.push_back(std::move(f));
        }
        refresh_offsets();
    }

    MatchedFilter(std::vector<QubitFilter> filters, std::size_t n_samples)
        : n_samples_(n_samples), filters_(std::move(filters)) {
        refresh_offsets();
    }

    std::size_t n_qubits() const {
        return filters_.size();
    }
    std::size_t n_samples() const {
        return n_samples_;
    }
    const QubitFilter &filter(std::size_t q) const {
        return filters_[q];
    }
    void set_threshold(std::size_t q, double b) {
        filters_[q].threshold = b;
    }

    /// Re sum_{n in window} w[n] * (z[n] - m[n]).
    double score(std::span<const Complex> trace, std::size_t q, Window window = Window::full) const {
        if (window == Window::full) {
            return score(trace, q, Window::early) + score(trace, q, Window::late);
        }
        const auto &f = filters_[q];
        std::size_t half = n_samples_ / 2;
        std::size_t begin = window == Window::early ? 0 : half;
        std::size_t end = window == Window::early ? half : n_samples_;
        double acc = 0;
        for (std::size_t n = begin; n < end; ++n) {
            acc += f.weights[n].real() * trace[n].real() - f.weights[n].imag() * trace[n].imag();
        }
        return acc - offsets_[q][window == Window::early ? 0 : 1];
    }

    double score(const ShotRecord &shot, std::size_t q, Window window = Window::full) const {
        return score(shot.channel(q), q, window);
    }

   private:
    void refresh_offsets() {
        offsets_.assign(filters_.size(), {0.0, 0.0});
        std::size_t half = n_samples_ / 2;
        for (std::size_t q = 0; q < filters_.size(); ++q) {
            const auto &f = filters_[q];
            if (f.weights.size() != n_samples_ || f.midpoint.size() != n_samples_) {
                throw ValidationError("matched filter qubit " + std::to_string(q) + " has wrong trace length");
            }
            for (std::size_t n = 0; n < n_samples_; ++n) {
                double v = (f.weights[n] * f.midpoint[n]).real();
                offsets_[q][n < half ? 0 : 1] += v;
            }
        }
    }

    std::size_t n_samples_ = 0;
    std::vector<QubitFilter> filters_;
    std::vector<std::array<double, 2>> offsets_;
};

/// Threshold maximizing training accuracy of `score > b` against `labels`.
/// Candidates are the midpoints of gaps between sorted distinct scores plus
/// one point below and one above the range; ties go to the lowest candidate.
inline double best_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    std::vector<std::pair<double, std::uint8_t>> sorted(scores.size());
    std::size_t ones = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        sorted[i] = {scores[i], labels[i]};
        ones += labels[i] != 0;
    }
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty()) {
        return 0;
    }
    double lo = sorted.front().first, hi = sorted.back().first;
    double pad = std::max(1.0, hi - lo);

    // Everything above the candidate is called 1.
    std::size_t correct = ones;
    std::size_t best_correct = correct;
    double best = lo - pad;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].first == sorted[i].first) {
            if (sorted[j].second) {
                --correct;
            } else {
                ++correct;
            }
            ++j;
        }
        double candidate = j < sorted.size() ? (sorted[i].first + sorted[j].first) / 2 : hi + pad;
        if (correct > best_correct) {
            best_correct = correct;
            best = candidate;
        }
        i = j;
    }
    return best;
}

/// Per-qubit scores and prepared bits used to fit thresholds.
struct ScoreSet {
    std::vector<std::vector<double>> scores;
    std::vector<std::vector<std::uint8_t>> labels;

    explicit ScoreSet(std::size_t n_qubits = 0) : scores(n_qubits), labels(n_qubits) {
    }
    void add(const MatchedFilter &mf, const ShotRecord &shot) {
        for (std::size_t q = 0; q < mf.n_qubits(); ++q) {
            scores[q].push_back(mf.score(shot, q));
            labels[q].push_back(shot.preparation[q]);
        }
    }
};

inline void fit_thresholds(MatchedFilter &mf, const ScoreSet &set) {
    for (std::size_t q = 0; q < mf.n_qubits(); ++q) {
        mf.set_threshold(q, best_threshold(set.scores[q], set.labels[q]));
    }
}

inline MatchedFilter fit_matched_filter(const Template &templates, std::span<const ShotRecord> training) {
    MatchedFilter mf(templates);
    ScoreSet set(mf.n_qubits());
    for (const auto &shot : training) {
        if (shot.n_qubits != templates.n_qubits || shot.n_samples != templates.n_samples) {
            throw ValidationError("training shot geometry differs from the templates");
        }
        set.add(mf, shot);
    }
    fit_thresholds(mf, set);
    return mf;
}

// ---------------------------------------------------------------------------
// Relaxation-sensitive features.

/// [full, early, late] matched-filter scores per qubit, concatenated.
using FeatureVector = std::vector<double>;

inline FeatureVector extract_features(const ShotRecord &shot, const MatchedFilter &mf) {
    FeatureVector out(3 * mf.n_qubits());
    for (std::size_t q = 0; q < mf.n_qubits(); ++q) {
        double early = mf.score(shot, q, Window::early);
        double late = mf.score(shot, q, Window::late);
        out[3 * q] = early + late;
        out[3 * q + 1] = early;
        out[3 * q + 2] = late;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Joint neural discriminator.

struct MlpHyperParams {
    double learning_rate = 0.05;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::size_t hidden = 32;
};

/// One hidden ReLU layer, one logistic output per qubit. Parameters live in a
/// single flat vector: W1 (hidden x in), b1, W2 (out x hidden), b2.
class Mlp {
   public:
    Mlp() = default;
    Mlp(std::size_t n_in, std::size_t n_hidden, std::size_t n_out)
        : n_in_(n_in), n_hidden_(n_hidden), n_out_(n_out),
          params_(n_hidden * n_in + n_hidden + n_out * n_hidden + n_out),
          mean_(n_in, 0.0), scale_(n_in, 1.0) {
    }

    std::size_t n_in() const {
        return n_in_;
    }
    std::size_t n_hidden() const {
        return n_hidden_;
    }
    std::size_t n_out() const {
        return n_out_;
    }
    std::vector<double> &parameters() {
        return params_;
    }
    const std::vector<double> &parameters() const {
        return params_;
    }
    const std::vector<double> &feature_mean() const {
        return mean_;
    }
    const std::vector<double> &feature_std() const {
        return scale_;
    }

    void set_standardization(std::vector<double> mean, std::vector<double> std_dev) {
        if (mean.size() != n_in_ || std_dev.size() != n_in_) {
            throw ValidationError("standardization size does not match the input layer");
        }
        mean_ = std::move(mean);
        scale_ = std::move(std_dev);
    }

    /// Glorot-uniform weights, zero biases.
    void initialize(Rng &rng) {
        std::fill(params_.begin(), params_.end(), 0.0);
        double a1 = std::sqrt(6.0 / static_cast<double>(n_in_ + n_hidden_));
        double a2 = std::sqrt(6.0 / static_cast<double>(n_hidden_ + n_out_));
        boost::random::uniform_real_distribution<double> u1(-a1, a1), u2(-a2, a2);
        for (std::size_t i = 0; i < n_hidden_ * n_in_; ++i) {
            params_[i] = u1(rng);
        }
        for (std::size_t i = 0; i < n_out_ * n_hidden_; ++i) {
            params_[w2_offset() + i] = u2(rng);
        }
    }

    std::vector<double> standardize(std::span<const double> raw) const {
        if (raw.size() != n_in_) {
            throw ValidationError("feature dimension " + std::to_string(raw.size()) + " != network input " +
                                  std::to_string(n_in_));
        }
        std::vector<double> x(n_in_);
        for (std::size_t i = 0; i < n_in_; ++i) {
            x[i] = (raw[i] - mean_[i]) / scale_[i];
        }
        return x;
    }

    /// Output logits for standardized input `x`; fills `hidden_pre` when given.
    std::vector<double> logits(std::span<const double> x, std::vector<double> *hidden_pre = nullptr) const {
        std::vector<double> pre(n_hidden_);
        for (std::size_t h = 0; h < n_hidden_; ++h) {
            double acc = params_[b1_offset() + h];
            const double *w = &params_[h * n_in_];
            for (std::size_t i = 0; i < n_in_; ++i) {
                acc += w[i] * x[i];
            }
            pre[h] = acc;
        }
        std::vector<double> out(n_out_);
        for (std::size_t o = 0; o < n_out_; ++o) {
            double acc = params_[b2_offset() + o];
            const double *w = &params_[w2_offset() + o * n_hidden_];
            for (std::size_t h = 0; h < n_hidden_; ++h) {
                acc += w[h] * std::max(pre[h], 0.0);
            }
            out[o] = acc;
        }
        if (hidden_pre) {
            *hidden_pre = std::move(pre);
        }
        return out;
    }

    /// P(state = 1) per qubit for raw (unstandardized) features.
    std::vector<double> predict_proba(std::span<const double> raw) const {
        auto z = logits(standardize(raw));
        for (auto &v : z) {
            v = 1.0 / (1.0 + std::exp(-v));
        }
        return z;
    }

    /// Mean over the batch of the summed per-output binary cross-entropy.
    /// Inputs are standardized features.
    double loss(std::span<const std::vector<double>> xs, std::span<const BitString> ys) const {
        double total = 0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            auto z = logits(xs[k]);
            for (std::size_t o = 0; o < n_out_; ++o) {
                total += softplus(z[o]) - (ys[k][o] ? z[o] : 0.0);
            }
        }
        return total / static_cast<double>(xs.size());
    }

    /// Gradient of `loss` with respect to `parameters()`.
    std::vector<double> gradient(std::span<const std::vector<double>> xs, std::span<const BitString> ys) const {
        std::vector<double> grad(params_.size(), 0.0);
        std::vector<double> pre, dz(n_out_), dh(n_hidden_);
        const double inv = 1.0 / static_cast<double>(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const auto &x = xs[k];
            auto z = logits(x, &pre);
            for (std::size_t o = 0; o < n_out_; ++o) {
                dz[o] = (1.0 / (1.0 + std::exp(-z[o])) - (ys[k][o] ? 1.0 : 0.0)) * inv;
            }
            std::fill(dh.begin(), dh.end(), 0.0);
            for (std::size_t o = 0; o < n_out_; ++o) {
                double *gw = &grad[w2_offset() + o * n_hidden_];
                const double *w = &params_[w2_offset() + o * n_hidden_];
                for (std::size_t h = 0; h < n_hidden_; ++h) {
                    gw[h] += dz[o] * std::max(pre[h], 0.0);
                    dh[h] += dz[o] * w[h];
                }
                grad[b2_offset() + o] += dz[o];
            }
            for (std::size_t h = 0; h < n_hidden_; ++h) {
                if (pre[h] <= 0) {
                    continue;
                }
                double *gw = &grad[h * n_in_];
                for (std::size_t i = 0; i < n_in_; ++i) {
                    gw[i] += dh[h] * x[i];
                }
                grad[b1_offset() + h] += dh[h];
            }
        }
        return grad;
    }

   private:
    static double softplus(double z) {
        return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    std::size_t b1_offset() const {
        return n_hidden_ * n_in_;
    }
    std::size_t w2_offset() const {
        return b1_offset() + n_hidden_;
    }
    std::size_t b2_offset() const {
        return w2_offset() + n_out_ * n_hidden_;
    }

    std::size_t n_in_ = 0, n_hidden_ = 0, n_out_ = 0;
    std::vector<double> params_;
    std::vector<double> mean_, scale_;
};

/// Fits standardization constants on `features`, initializes from the seed
/// and runs mini-batch SGD. Batch order is a seeded shuffle per epoch.
inline Mlp train_mlp(std::span<const FeatureVector> features, std::span<const BitString> labels,
                     const MlpHyperParams &hp) {
    if (features.empty() || features.size() != labels.size()) {
        throw ValidationError("train_mlp needs equally many (>0) feature vectors and labels");
    }
    if (hp.batch_size == 0 || hp.hidden == 0) {
        throw ValidationError("batch_size and hidden must be >= 1");
    }
    const std::size_t n_in = features.front().size();
    const std::size_t n_out = labels.front().size();
    Mlp net(n_in, hp.hidden, n_out);

    std::vector<double> mean(n_in, 0.0), sd(n_in, 0.0);
    for (const auto &f : features) {
        if (f.size() != n_in) {
            throw ValidationError("ragged feature vectors");
        }
        for (std::size_t i = 0; i < n_in; ++i) {
            mean[i] += f[i];
        }
    }
    for (auto &m : mean) {
        m /= static_cast<double>(features.size());
    }
    for (const auto &f : features) {
        for (std::size_t i = 0; i < n_in; ++i) {
            sd[i] += (f[i] - mean[i]) * (f[i] - mean[i]);
        }
    }
    for (auto &s : sd) {
        s = std::sqrt(s / static_cast<double>(features.size()));
        if (!(s > 0)) {
            s = 1.0;
        }
    }
    net.set_standardization(mean, sd);

    Rng init_rng(mix_seed(hp.seed, 0));
    net.initialize(init_rng);
    Rng order_rng(mix_seed(hp.seed, 1));

    std::vector<std::vector<double>> xs;
    xs.reserve(features.size());
    for (const auto &f : features) {
        xs.push_back(net.standardize(f));
    }
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    std::vector<std::vector<double>> bx;
    std::vector<BitString> by;
    auto &params = net.parameters();
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        shuffle_in_place(order, order_rng);
        double epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            std::size_t end = std::min(order.size(), start + hp.batch_size);
            bx.clear();
            by.clear();
            for (std::size_t i = start; i < end; ++i) {
                bx.push_back(xs[order[i]]);
                by.push_back(labels[order[i]]);
            }
            epoch_loss += net.loss(bx, by) * static_cast<double>(end - start);
            auto g = net.gradient(bx, by);
            for (std::size_t p = 0; p < params.size(); ++p) {
                params[p] -= hp.learning_rate * g[p];
            }
        }
        bool finite = std::isfinite(epoch_loss);
        for (double p : params) {
            finite = finite && std::isfinite(p);
        }
        if (!finite) {
            throw NumericError("MLP training diverged: non-finite loss at epoch " + std::to_string(epoch + 1));
        }
    }
    return net;
}

/// Matched-filter features feeding a joint network.
struct MlpDiscriminator {
    MatchedFilter filter;
    Mlp network;
};

using Discriminator = std::variant<MatchedFilter, MlpDiscriminator>;

inline BitString discriminate(const ShotRecord &shot, const MatchedFilter &mf) {
    BitString out(mf.n_qubits());
    for (std::size_t q = 0; q < mf.n_qubits(); ++q) {
        out.set(q, mf.score(shot, q) > mf.filter(q).threshold);
    }
    return out;
}

inline BitString discriminate(const ShotRecord &shot, const MlpDiscriminator &d) {
    auto p = d.network.predict_proba(extract_features(shot, d.filter));
    BitString out(p.size());
    for (std::size_t q = 0; q < p.size(); ++q) {
        out.set(q, p[q] > 0.5);
    }
    return out;
}

inline BitString discriminate(const ShotRecord &shot, const Discriminator &d) {
    return std::visit([&](const auto &impl) { return discriminate(shot, impl); }, d);
}

// ---------------------------------------------------------------------------
// Accuracy.

struct AccuracyReport {
    std::vector<double> per_qubit;
    double mean_per_qubit = 0;
    double all_correct = 0;
    std::uint64_t n_shots = 0;
    /// (prep, measured) -> count
    std::map<std::pair<BitString, BitString>, std::uint64_t> confusion;
};

inline AccuracyReport tally_accuracy(std::span<const Outcome> outcomes) {
    if (outcomes.empty()) {
        throw ValidationError("empty dataset: nothing to evaluate");
    }
    const std::size_t nq = outcomes.front().prep.size();
    AccuracyReport r;
    std::vector<std::uint64_t> right(nq, 0);
    std::uint64_t all = 0;
    for (const auto &o : outcomes) {
        if (o.prep.size() != nq || o.measured.size() != nq) {
            throw ValidationError("ragged outcome bit-strings");
        }
        bool every = true;
        for (std::size_t q = 0; q < nq; ++q) {
            bool ok = o.prep[q] == o.measured[q];
            right[q] += ok;
            every = every && ok;
        }
        all += every;
        ++r.confusion[{o.prep, o.measured}];
    }
    r.n_shots = outcomes.size();
    double n = static_cast<double>(outcomes.size());
    for (auto c : right) {
        r.per_qubit.push_back(static_cast<double>(c) / n);
        r.mean_per_qubit += static_cast<double>(c) / n;
    }
    r.mean_per_qubit /= static_cast<double>(nq);
    r.all_correct = static_cast<double>(all) / n;
    return r;
}

inline AccuracyReport evaluate_accuracy(std::span<const ShotRecord> dataset, const Discriminator &d) {
    std::vector<Outcome> outcomes;
    outcomes.reserve(dataset.size());
    for (const auto &shot : dataset) {
        outcomes.push_back({shot.preparation, discriminate(shot, d)});
    }
    return tally_accuracy(outcomes);
}

// ---------------------------------------------------------------------------
// Text serialization. Doubles carry 17 significant digits, so a reloaded
// discriminator reproduces predictions bit for bit.

inline constexpr int kDiscriminatorFormatVersion = 1;

namespace detail {

inline void write_filter(std::string &out, const MatchedFilter &mf) {
    out += "n_qubits " + std::to_string(mf.n_qubits()) + "\n";
    out += "n_samples " + std::to_string(mf.n_samples()) + "\n";
    for (std::size_t q = 0; q < mf.n_qubits(); ++q) {
        const auto &f = mf.filter(q);
        std::vector<double> w, m;
        for (std::size_t n = 0; n < f.weights.size(); ++n) {
            w.push_back(f.weights[n].real());
            w.push_back(f.weights[n].imag());
            m.push_back(f.midpoint[n].real());
            m.push_back(f.midpoint[n].imag());
        }
        out += "threshold " + text::format_double(f.threshold) + "\n";
        out += "weights " + text::join_doubles(w) + "\n";
        out += "midpoint " + text::join_doubles(m) + "\n";
    }
}

/// Sequential reader over "key values..." lines.
class KeyedLines {
   public:
    explicit KeyedLines(std::string_view doc) : lines_(text::lines(doc)) {
    }

    std::string_view expect(std::string_view key) {
        while (pos_ < lines_.size() && text::trim(lines_[pos_]).empty()) {
            ++pos_;
        }
        if (pos_ >= lines_.size()) {
            throw ParseError("unexpected end of document, expected '" + std::string(key) + "'", pos_ + 1);
        }
        auto line = text::trim(lines_[pos_++]);
        auto sp = line.find(' ');
        auto k = line.substr(0, sp);
        if (k != key) {
            throw ParseError("expected '" + std::string(key) + "', got '" + std::string(k) + "'", pos_);
        }
        return sp == std::string_view::npos ? std::string_view{} : text::trim(line.substr(sp + 1));
    }
    std::size_t line() const {
        return pos_;
    }
    bool done() {
        while (pos_ < lines_.size() && text::trim(lines_[pos_]).empty()) {
            ++pos_;
        }
        return pos_ >= lines_.size();
    }

   private:
    std::vector<std::string_view> lines_;
    std::size_t pos_ = 0;
};

inline std::vector<double> expect_doubles(KeyedLines &in, std::string_view key, std::size_t count) {
    auto v = text::parse_doubles(in.expect(key), in.line());
    if (v.size() != count) {
        throw ParseError("'" + std::string(key) + "' needs " + std::to_string(count) + " values, got " +
                             std::to_string(v.size()),
                         in.line());
    }
    return v;
}

inline MatchedFilter read_filter(KeyedLines &in) {
    std::size_t nq = text::parse_uint(in.expect("n_qubits"), in.line());
    std::size_t ns = text::parse_uint(in.expect("n_samples"), in.line());
    std::vector<QubitFilter> filters(nq);
    for (auto &f : filters) {
        f.threshold = text::parse_double(in.expect("threshold"), in.line());
        auto w = expect_doubles(in, "weights", 2 * ns);
        auto m = expect_doubles(in, "midpoint", 2 * ns);
        for (std::size_t n = 0; n < ns; ++n) {
            f.weights.emplace_back(w[2 * n], w[2 * n + 1]);
            f.midpoint.emplace_back(m[2 * n], m[2 * n + 1]);
        }
    }
    return MatchedFilter(std::move(filters), ns);
}

}  // namespace detail

inline std::string serialize_discriminator(const Discriminator &d) {
    std::string out = "rxleak-discriminator " + std::to_string(kDiscriminatorFormatVersion) + "\n";
    if (const auto *mf = std::get_if<MatchedFilter>(&d)) {
        out += "kind matched_filter\n";
        detail::write_filter(out, *mf);
        return out;
    }
    const auto &md = std::get<MlpDiscriminator>(d);
    out += "kind mlp\n";
    detail::write_filter(out, md.filter);
    const auto &net = md.network;
    out += "layers " + std::to_string(net.n_in()) + " " + std::to_string(net.n_hidden()) + " " +
           std::to_string(net.n_out()) + "\n";
    out += "feature_mean " + text::join_doubles(net.feature_mean()) + "\n";
    out += "feature_std " + text::join_doubles(net.feature_std()) + "\n";
    out += "parameters " + text::join_doubles(net.parameters()) + "\n";
    return out;
}

inline Discriminator deserialize_discriminator(std::string_view doc) {
    detail::KeyedLines in(doc);
    auto version = text::parse_uint(in.expect("rxleak-discriminator"), in.line());
    if (version != kDiscriminatorFormatVersion) {
        throw ParseError("unsupported discriminator format version " + std::to_string(version), in.line());
    }
    auto kind = in.expect("kind");
    auto mf = detail::read_filter(in);
    if (kind == "matched_filter") {
        return mf;
    }
    if (kind != "mlp") {
        throw ParseError("unknown discriminator kind '" + std::string(kind) + "'", in.line());
    }
    auto dims = text::parse_doubles(in.expect("layers"), in.line());
    if (dims.size() != 3) {
        throw ParseError("'layers' needs 3 values", in.line());
    }
    Mlp net(static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]), static_cast<std::size_t>(dims[2]));
    auto mean = detail::expect_doubles(in, "feature_mean", net.n_in());
    auto sd = detail::expect_doubles(in, "feature_std", net.n_in());
    net.set_standardization(mean, sd);
    net.parameters() = detail::expect_doubles(in, "parameters", net.parameters().size());
    return MlpDiscriminator{std::move(mf), std::move(net)};
}

}  // namespace rxleak
