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

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "gtest/gtest.h"

#include "rxleak/attack.hpp"

using namespace rxleak;

namespace {

Outcome shot(const char *prep, const char *measured) {
    return {BitString::parse(prep), BitString::parse(measured)};
}

/// Attackers flip with probability p(V) for every victim string of `cfg`.
std::vector<Outcome> synthetic_outcomes(const AttackConfiguration &cfg, std::size_t per_victim,
                                        const std::function<double(const BitString &, std::size_t)> &p,
                                        std::uint64_t seed) {
    Rng rng(seed);
    boost::random::uniform_real_distribution<double> u;
    std::vector<Outcome> out;
    for (const auto &v : all_basis_states(cfg.victims.size())) {
        auto prep = cfg.preparation(v);
        for (std::size_t k = 0; k < per_victim; ++k) {
            auto m = prep;
            for (std::size_t i = 0; i < cfg.attackers.size(); ++i) {
                m.set(cfg.attackers[i], u(rng) < p(v, i));
            }
            out.push_back({prep, m});
        }
    }
    return out;
}

double binary_entropy(double p) {
    return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

}  // namespace

TEST(AttackConfig, parses_attackers_and_victims) {
    auto c = parse_attack_config("A123A", 5);
    ASSERT_EQ(c.attackers, (std::vector<std::size_t>{0, 4}));
    ASSERT_EQ(c.victims, (std::vector<std::size_t>{1, 2, 3}));
    ASSERT_EQ(c.victim_labels, (std::vector<int>{1, 2, 3}));
    ASSERT_EQ(c.n_classes(), 8u);
    ASSERT_DOUBLE_EQ(c.chance(), 0.125);
    ASSERT_EQ(c.victim_bits(BitString::parse("01101")).str(), "110");
    ASSERT_EQ(c.attacker_bits(BitString::parse("01101")).str(), "01");
    ASSERT_EQ(c.preparation(BitString::parse("101")).str(), "01010");
}

TEST(AttackConfig, rejects_bad_notation) {
    auto message = [](const char *n, std::size_t q) {
        try {
            parse_attack_config(n, q);
        } catch (const ValidationError &e) {
            return std::string(e.what());
        }
        return std::string();
    };
    ASSERT_NE(message("AAAAA", 5).find("victim"), std::string::npos);
    ASSERT_NE(message("01234", 5).find("attacker"), std::string::npos);
    ASSERT_NE(message("A12X4", 5).find("'X'"), std::string::npos);
    ASSERT_NE(message("B123A", 5).find("'B'"), std::string::npos);
    ASSERT_NE(message("A11AA", 5).find("duplicate"), std::string::npos);
    ASSERT_NE(message("A123", 5).find("length"), std::string::npos);
}

TEST(Pflip, no_flips_gives_zero) {
    auto cfg = parse_attack_config("A123A", 5);
    auto out = synthetic_outcomes(cfg, 10, [](const BitString &, std::size_t) { return 0.0; }, 1);
    auto t = estimate_pflip(out, cfg);
    ASSERT_EQ(t.entries.size(), 16u);
    for (const auto &e : t.entries) {
        ASSERT_EQ(e.flips, 0u);
        ASSERT_EQ(e.trials, 10u);
        ASSERT_EQ(e.pflip, 0.0);
        ASSERT_EQ(e.std_error, 0.0);
    }
}

TEST(Pflip, hand_counted_table) {
    auto cfg = parse_attack_config("A123A", 5);
    std::vector<Outcome> out{shot("01010", "11010"), shot("01010", "01010"), shot("01010", "01011"),
                             shot("01010", "11011"),
                             // attacker prepared in 1: skipped
                             shot("11010", "01010")};
    auto t = estimate_pflip(out, cfg);
    ASSERT_EQ(t.skipped_shots, 1u);
    ASSERT_EQ(t.relaxations[0].prepared_one, 1u);
    ASSERT_EQ(t.relaxations[0].measured_zero, 1u);
    const auto *a0 = t.find(BitString::parse("101"), 0);
    const auto *a4 = t.find(BitString::parse("101"), 4);
    ASSERT_TRUE(a0 && a4);
    ASSERT_EQ(a0->flips, 2u);
    ASSERT_EQ(a0->trials, 4u);
    ASSERT_DOUBLE_EQ(a0->pflip, 0.5);
    ASSERT_DOUBLE_EQ(a0->std_error, 0.25);
    ASSERT_DOUBLE_EQ(a4->pflip, 0.5);
    ASSERT_EQ(t.find(BitString::parse("000"), 0), nullptr);

    std::vector<Outcome> only_skipped{shot("11010", "11010")};
    ASSERT_THROW(estimate_pflip(only_skipped, cfg), ValidationError);
    std::vector<Outcome> ragged{shot("0101", "0101")};
    ASSERT_THROW(estimate_pflip(ragged, cfg), ValidationError);
}

TEST(Pflip, reordering_and_merging_preserve_counts) {
    auto cfg = parse_attack_config("AA2A4", 5);
    auto p = [](const BitString &v, std::size_t i) { return 0.05 + 0.1 * v.count_ones() + 0.02 * i; };
    auto a = synthetic_outcomes(cfg, 50, p, 1);
    auto b = synthetic_outcomes(cfg, 30, p, 2);
    auto merged = a;
    merged.insert(merged.end(), b.begin(), b.end());
    auto reversed = merged;
    std::reverse(reversed.begin(), reversed.end());
    auto ta = estimate_pflip(a, cfg);
    auto tb = estimate_pflip(b, cfg);
    auto tm = estimate_pflip(merged, cfg);
    auto tr = estimate_pflip(reversed, cfg);
    ASSERT_EQ(tm.entries.size(), ta.entries.size());
    for (std::size_t i = 0; i < tm.entries.size(); ++i) {
        ASSERT_EQ(tm.entries[i].flips, ta.entries[i].flips + tb.entries[i].flips);
        ASSERT_EQ(tm.entries[i].trials, ta.entries[i].trials + tb.entries[i].trials);
        ASSERT_EQ(tr.entries[i].flips, tm.entries[i].flips);
        ASSERT_EQ(tr.entries[i].pflip, tm.entries[i].pflip);
    }
}

TEST(Pflip, spread_statistic) {
    auto cfg = parse_attack_config("A1234", 5);
    auto flat = synthetic_outcomes(cfg, 400, [](const BitString &, std::size_t) { return 0.05; }, 3);
    auto steep = synthetic_outcomes(
        cfg, 400, [](const BitString &v, std::size_t) { return v.index() == 15 ? 0.3 : 0.05; }, 3);
    ASSERT_GT(estimate_pflip(steep, cfg).max_spread_z(), 3.0);
    ASSERT_LT(estimate_pflip(flat, cfg).max_spread_z(), estimate_pflip(steep, cfg).max_spread_z());
    // Pooled rate is total flips over total trials.
    auto t = estimate_pflip(steep, cfg);
    std::uint64_t f = 0, n = 0;
    for (const auto &e : t.entries) {
        f += e.flips;
        n += e.trials;
    }
    ASSERT_DOUBLE_EQ(t.pooled_pflip(0), static_cast<double>(f) / static_cast<double>(n));
}

TEST(Features, unit_window_is_raw_outcomes) {
    auto cfg = parse_attack_config("A12A4", 5);
    auto out = synthetic_outcomes(cfg, 20, [](const BitString &, std::size_t i) { return i ? 0.3 : 0.6; }, 5);
    auto f = build_leakage_features(out, cfg, 1, 0, false);
    ASSERT_EQ(f.size(), out.size());
    // Unshuffled windows keep the input order within each victim group, and
    // the synthetic stream is already grouped in index order.
    for (std::size_t i = 0; i < out.size(); ++i) {
        ASSERT_EQ(f[i].victim, cfg.victim_bits(out[i].prep));
        ASSERT_EQ(f[i].features, (std::vector<double>{static_cast<double>(out[i].measured[0]),
                                                      static_cast<double>(out[i].measured[3])}));
    }
}

TEST(Features, full_pooling_equals_table_and_windows_sum_to_counts) {
    auto cfg = parse_attack_config("A123A", 5);
    auto out = synthetic_outcomes(cfg, 5120, [](const BitString &v, std::size_t i) { return 0.01 * (v.index() + i); }, 6);
    auto table = estimate_pflip(out, cfg);

    auto pooled = build_leakage_features(out, cfg, 5120, 7);
    ASSERT_EQ(pooled.size(), 8u);
    for (const auto &f : pooled) {
        for (std::size_t i = 0; i < 2; ++i) {
            ASSERT_DOUBLE_EQ(f.features[i], table.find(f.victim, cfg.attackers[i])->pflip);
        }
    }

    auto windows = build_leakage_features(out, cfg, 256, 7);
    ASSERT_EQ(windows.size(), 8u * 20);
    std::map<BitString, std::vector<std::uint64_t>> sums;
    for (const auto &w : windows) {
        auto &s = sums[w.victim];
        s.resize(2);
        for (std::size_t i = 0; i < 2; ++i) {
            s[i] += w.flip_counts[i];
            ASSERT_GE(w.features[i], 0.0);
            ASSERT_LE(w.features[i], 1.0);
        }
    }
    for (const auto &[v, s] : sums) {
        for (std::size_t i = 0; i < 2; ++i) {
            ASSERT_EQ(s[i], table.find(v, cfg.attackers[i])->flips);
        }
    }
}

TEST(Features, insufficient_shots_names_victim_string) {
    auto cfg = parse_attack_config("A123A", 5);
    auto out = synthetic_outcomes(cfg, 10, [](const BitString &, std::size_t) { return 0.1; }, 1);
    out.erase(out.begin());
    try {
        build_leakage_features(out, cfg, 10, 0);
        FAIL();
    } catch (const ValidationError &e) {
        ASSERT_NE(std::string(e.what()).find("000"), std::string::npos) << e.what();
    }
    ASSERT_THROW(build_leakage_features(out, cfg, 0, 0), ValidationError);
}

TEST(Svm, separable_classes_train_perfectly) {
    std::vector<std::vector<double>> x;
    std::vector<std::size_t> y;
    for (int i = 0; i < 100; ++i) {
        x.push_back({-1.0 - 0.01 * i});
        y.push_back(0);
        x.push_back({1.0 + 0.01 * i});
        y.push_back(1);
    }
    auto svm = train_svm(x, y, 2, {});
    ASSERT_EQ(classification_accuracy(svm, x, y), 1.0);
    ASSERT_EQ(predict_victim(svm, std::vector<double>{5.0}, 1).str(), "1");
}

TEST(Svm, shuffled_labels_give_chance) {
    Rng rng(11);
    boost::random::normal_distribution<double> g;
    boost::random::uniform_int_distribution<std::size_t> label(0, 3);
    std::vector<std::vector<double>> x;
    std::vector<std::size_t> y;
    for (int i = 0; i < 20000; ++i) {
        x.push_back({g(rng), g(rng)});
        y.push_back(label(rng));
    }
    std::span<const std::vector<double>> xs(x);
    std::span<const std::size_t> ys(y);
    auto svm = train_svm(xs.first(10000), ys.first(10000), 4, {});
    ASSERT_NEAR(classification_accuracy(svm, xs.last(10000), ys.last(10000)), 0.25, 0.03);
}

TEST(Svm, deterministic_and_validated) {
    std::vector<std::vector<double>> x{{0, 1}, {1, 0}, {1, 1}, {0, 0}};
    std::vector<std::size_t> y{0, 1, 2, 0};
    SvmParams p;
    p.seed = 4;
    auto a = train_svm(x, y, 3, p);
    auto b = train_svm(x, y, 3, p);
    ASSERT_EQ(a.weights(), b.weights());
    ASSERT_EQ(a.bias(), b.bias());
    std::vector<std::size_t> one{1, 1, 1, 1};
    ASSERT_THROW(train_svm(x, one, 3, p), ValidationError);
    ASSERT_THROW(a.scores(std::vector<double>{1.0}), ValidationError);
    p.lambda = std::numeric_limits<double>::quiet_NaN();
    ASSERT_ANY_THROW(train_svm(x, y, 3, p));
}

TEST(Svm, ties_go_to_lowest_class) {
    LinearSvm svm(3, 1, {});
    ASSERT_EQ(svm.predict(std::vector<double>{2.0}), 0u);
    svm.weights() = {0, 1, 1};
    ASSERT_EQ(svm.predict(std::vector<double>{2.0}), 1u);
}

TEST(Svm, scale_invariance_with_rescaled_lambda) {
    Rng rng(12);
    boost::random::normal_distribution<double> g;
    const double centers[3][2] = {{0, 0}, {3, 0}, {0, 3}};
    std::vector<std::vector<double>> train, test;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 3000; ++i) {
        auto c = static_cast<std::size_t>(i % 3);
        std::vector<double> x{centers[c][0] + g(rng), centers[c][1] + g(rng)};
        (i < 1500 ? train : test).push_back(x);
        if (i < 1500) {
            labels.push_back(c);
        }
    }
    const double c = 2.0;
    auto scale = [&](std::vector<std::vector<double>> v) {
        for (auto &x : v) {
            for (auto &e : x) {
                e *= c;
            }
        }
        return v;
    };
    SvmParams p;
    p.lambda = 1e-2;
    p.epochs = 1000;
    auto base = train_svm(train, labels, 3, p);
    auto scaled_test = scale(test);
    auto agreement = [&](const LinearSvm &svm) {
        std::size_t agree = 0;
        for (std::size_t i = 0; i < test.size(); ++i) {
            agree += base.predict(test[i]) == svm.predict(scaled_test[i]);
        }
        return static_cast<double>(agree) / static_cast<double>(test.size());
    };
    p.lambda *= c * c;
    auto rescaled = train_svm(scale(train), labels, 3, p);
    // The bias is regularized too and its input does not scale, so the
    // rescaled problem matches only up to the bias penalty; labels may differ
    // at the decision boundary.
    ASSERT_GE(agreement(rescaled), 0.97);
}

TEST(Svm, serialization_round_trip) {
    std::vector<std::vector<double>> x{{0, 1}, {1, 0}, {1, 1}, {0, 0}};
    std::vector<std::size_t> y{0, 1, 2, 0};
    auto svm = train_svm(x, y, 3, {});
    svm.set_input_transform({0.5, 0.25}, {2.0, 3.0});
    auto text = serialize_svm(svm);
    auto back = deserialize_svm(text);
    ASSERT_EQ(back.weights(), svm.weights());
    ASSERT_EQ(back.bias(), svm.bias());
    ASSERT_EQ(serialize_svm(back), text);
    ASSERT_THROW(deserialize_svm("rxleak-svm 2\n"), ParseError);
}

TEST(MutualInformation, closed_forms) {
    Rng rng(13);
    boost::random::uniform_int_distribution<std::uint64_t> bit(0, 1), oct(0, 7);
    boost::random::bernoulli_distribution<double> noise(0.11);
    std::vector<std::uint64_t> a, v, copy, bsc_in, bsc_out;
    for (int i = 0; i < 100000; ++i) {
        a.push_back(oct(rng));
        v.push_back(oct(rng));
        auto b = bit(rng);
        bsc_in.push_back(b);
        bsc_out.push_back(b ^ static_cast<std::uint64_t>(noise(rng)));
    }
    ASSERT_LT(mutual_information(a, v), 0.01);
    for (std::uint64_t i = 0; i < 8000; ++i) {
        copy.push_back(i % 8);
    }
    ASSERT_NEAR(mutual_information(copy, copy), 3.0, 1e-12);
    ASSERT_NEAR(mutual_information(bsc_out, bsc_in), 1 - binary_entropy(0.11), 0.02);
    ASSERT_THROW(mutual_information(std::vector<std::uint64_t>{}, std::vector<std::uint64_t>{}), ValidationError);
}

TEST(RunAttack, leaky_and_flat_streams) {
    auto cfg = parse_attack_config("A123A", 5);
    AttackParams params;
    params.window = 64;
    auto flat = synthetic_outcomes(cfg, 64 * 40, [](const BitString &, std::size_t) { return 0.05; }, 21);
    // Victim strings sit on a circle in flip-rate space, so each class is
    // linearly separable from the rest.
    auto leaky = synthetic_outcomes(
        cfg, 64 * 40,
        [](const BitString &v, std::size_t i) {
            double angle = 2 * M_PI * static_cast<double>(v.index()) / 8;
            return 0.3 + 0.2 * (i == 0 ? std::cos(angle) : std::sin(angle));
        },
        21);
    auto r0 = run_attack(flat, cfg, params);
    auto r1 = run_attack(leaky, cfg, params);
    ASSERT_EQ(r0.n_train + r0.n_eval, 8u * 40);
    ASSERT_EQ(r0.n_train, 8u * 20);
    ASSERT_DOUBLE_EQ(r0.chance, 0.125);
    ASSERT_NEAR(r0.eval_accuracy, 0.125, 0.08);
    ASSERT_GT(r1.eval_accuracy, 0.5);
    ASSERT_GT(r1.mutual_information_bits, r0.mutual_information_bits);

    auto again = run_attack(leaky, cfg, params);
    ASSERT_EQ(accuracy_csv_row(again), accuracy_csv_row(r1));

    auto csv = pflip_csv_header() + pflip_csv_rows(r1.table);
    ASSERT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 8 * 2);
    ASSERT_EQ(csv.substr(0, csv.find('\n')), "config,victim_bitstring,attacker_qubit,flips,trials,pflip,stderr");

    params.train_fraction = 1.0;
    params.window = 64 * 40;
    ASSERT_THROW(run_attack(leaky, cfg, params), ValidationError);
}
