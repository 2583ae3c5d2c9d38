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

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rxleak/bits.hpp"
#include "rxleak/device.hpp"
#include "rxleak/discriminators.hpp"
#include "rxleak/errors.hpp"
#include "rxleak/parallel.hpp"
#include "rxleak/rng.hpp"
#include "rxleak/trace_sim.hpp"

namespace rxleak {

enum class DiscriminatorKind { matched_filter, mlp };

inline const char *to_string(DiscriminatorKind k) {
    return k == DiscriminatorKind::mlp ? "mlp" : "mf";
}

/// Simulated device plus a trained discriminator: preparation in, bits out.
struct ReadoutPipeline {
    DeviceModel device;
    Discriminator discriminator;

    BitString measure(const BitString &prep, Rng &rng, std::uint64_t shot_index = 0) const {
        return discriminate(simulate_shot(device, prep, rng, shot_index), discriminator);
    }
};

/// Shot `k` of preparation `prep` in a stream seeded with `seed`. Every
/// experiment in the library draws shots through this function, so the
/// measured bits of a shot depend only on (seed, prep, k).
inline Rng prep_shot_rng(std::uint64_t seed, const BitString &prep, std::uint64_t k) {
    return shot_rng(mix_seed(seed, prep.index()), k);
}

namespace detail {

/// Calls `sink(i, shot)` for i in [0, n) in index order. Shots are simulated
/// in parallel chunks, so memory stays bounded for large training sets.
template <typename MakeShot, typename Sink>
void stream_shots(std::size_t n, unsigned threads, MakeShot &&make, Sink &&sink) {
    constexpr std::size_t kChunk = 512;
    std::vector<ShotRecord> chunk;
    for (std::size_t begin = 0; begin < n; begin += kChunk) {
        std::size_t len = std::min(kChunk, n - begin);
        chunk.assign(len, ShotRecord{});
        parallel_for(len, threads, [&](std::size_t i) { chunk[i] = make(begin + i); });
        for (std::size_t i = 0; i < len; ++i) {
            sink(begin + i, chunk[i]);
        }
    }
}

}  // namespace detail

struct CalibrationParams {
    DiscriminatorKind kind = DiscriminatorKind::matched_filter;
    std::size_t shots_per_state = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    MlpHyperParams mlp;
};

/// Trains a discriminator on `shots_per_state` simulated shots of every
/// preparation in `preps`. Shots are simulated twice (templates first, then
/// scores and features), which keeps memory independent of the set size.
inline Discriminator calibrate(const DeviceModel &device, std::span<const BitString> preps,
                               const CalibrationParams &params) {
    validate(device);
    if (preps.empty() || params.shots_per_state == 0) {
        throw ValidationError("calibration needs at least one preparation and one shot per preparation");
    }
    for (const auto &p : preps) {
        check_preparation(device, p);
    }
    const std::uint64_t seed = mix_seed(params.seed, streams::kTraining);
    const std::size_t per = params.shots_per_state;
    const std::size_t total = preps.size() * per;
    auto make = [&](std::size_t i) {
        const auto &prep = preps[i / per];
        auto rng = prep_shot_rng(seed, prep, i % per);
        return simulate_shot(device, prep, rng, i % per);
    };

    TemplateAccumulator acc(device.n_qubits(), device.n_samples);
    detail::stream_shots(total, params.threads, make, [&](std::size_t, const ShotRecord &s) { acc.add(s); });
    MatchedFilter mf(acc.finish());

    ScoreSet scores(device.n_qubits());
    std::vector<FeatureVector> features;
    std::vector<BitString> labels;
    const bool mlp = params.kind == DiscriminatorKind::mlp;
    detail::stream_shots(total, params.threads, make, [&](std::size_t, const ShotRecord &s) {
        scores.add(mf, s);
        if (mlp) {
            features.push_back(extract_features(s, mf));
            labels.push_back(s.preparation);
        }
    });
    fit_thresholds(mf, scores);
    if (!mlp) {
        return mf;
    }
    auto hp = params.mlp;
    hp.seed = mix_seed(params.seed, hp.seed);
    return MlpDiscriminator{mf, train_mlp(features, labels, hp)};
}

inline Discriminator calibrate(const DeviceModel &device, const CalibrationParams &params) {
    auto preps = all_basis_states(device.n_qubits());
    return calibrate(device, preps, params);
}

/// Discriminated outcomes for `shots_per_prep` shots of each preparation,
/// grouped by preparation in the order given. Identical for any thread count.
inline std::vector<Outcome> collect_outcomes(const ReadoutPipeline &pipeline, std::span<const BitString> preps,
                                             std::size_t shots_per_prep, std::uint64_t seed, unsigned threads = 1) {
    if (shots_per_prep == 0) {
        throw ValidationError("shots per preparation must be >= 1");
    }
    validate(pipeline.device);
    for (const auto &p : preps) {
        check_preparation(pipeline.device, p);
    }
    std::vector<Outcome> out(preps.size() * shots_per_prep);
    parallel_for(out.size(), threads, [&](std::size_t i) {
        const auto &prep = preps[i / shots_per_prep];
        auto rng = prep_shot_rng(seed, prep, i % shots_per_prep);
        out[i] = {prep, pipeline.measure(prep, rng, i % shots_per_prep)};
    });
    return out;
}

inline AccuracyReport evaluate_pipeline(const ReadoutPipeline &pipeline, std::span<const BitString> preps,
                                        std::size_t shots_per_prep, std::uint64_t seed, unsigned threads = 1) {
    return tally_accuracy(collect_outcomes(pipeline, preps, shots_per_prep, seed, threads));
}

}  // namespace rxleak
