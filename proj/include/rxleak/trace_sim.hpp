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
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "rxleak/bits.hpp"
#include "rxleak/device.hpp"
#include "rxleak/parallel.hpp"
#include "rxleak/rng.hpp"

namespace rxleak {

using Complex = std::complex<double>;

/// Steady-state response of a resonator probed `detuning_mhz` away from its
/// (pulled) center: L = (kappa/2) / (i*detuning + kappa/2). |L| <= 1, L(0) = 1.
inline Complex lorentzian_response(double detuning_mhz, double linewidth_mhz) {
    double half = linewidth_mhz / 2;
    return half / Complex(half, detuning_mhz);
}

/// Preparation of every qubit, bit i for qubit i.
using StatePreparation = BitString;

enum class TransitionKind : std::uint8_t { relaxation = 1, excitation = 2 };

/// The qubit holds its initial state for samples [0, sample) and the flipped
/// state from `sample` on.
struct Transition {
    TransitionKind kind;
    std::size_t sample;

    bool operator==(const Transition &) const = default;
};

struct StateTrajectory {
    BitString initial;
    std::vector<std::optional<Transition>> transitions;

    bool state(std::size_t qubit, std::size_t sample) const {
        bool s = initial[qubit];
        const auto &t = transitions[qubit];
        return (t && sample >= t->sample) ? !s : s;
    }

    bool operator==(const StateTrajectory &) const = default;
};

/// Demodulated baseband record of one shot. Traces are channel-major: channel
/// q (the readout of qubit q) occupies [q * n_samples, (q + 1) * n_samples).
struct ShotRecord {
    std::size_t n_qubits = 0;
    std::size_t n_samples = 0;
    std::vector<Complex> traces;
    StatePreparation preparation;
    std::optional<StateTrajectory> trajectory;
    std::uint64_t shot_index = 0;

    std::span<const Complex> channel(std::size_t q) const {
        return std::span<const Complex>(traces).subspan(q * n_samples, n_samples);
    }
    std::span<Complex> channel(std::size_t q) {
        return std::span<Complex>(traces).subspan(q * n_samples, n_samples);
    }

    bool operator==(const ShotRecord &) const = default;
};

inline void check_preparation(const DeviceModel &device, const StatePreparation &prep) {
    if (prep.size() != device.n_qubits()) {
        throw ValidationError("preparation '" + prep.str() + "' has " + std::to_string(prep.size()) +
                              " bits, device has " + std::to_string(device.n_qubits()) + " qubits");
    }
}

/// Draws mid-readout transitions. Per qubit, in order: a qubit prepared in 1
/// relaxes at t ~ Exp(mean T1), kept only if t falls inside the window; a qubit
/// prepared in 0 is excited with probability p_excitation at a uniform sample.
inline StateTrajectory sample_trajectory(const StatePreparation &prep, const DeviceModel &device, Rng &rng) {
    check_preparation(device, prep);
    StateTrajectory traj{prep, std::vector<std::optional<Transition>>(prep.size())};
    boost::random::uniform_01<double> unit;
    const double duration = device.duration_us();
    for (std::size_t q = 0; q < prep.size(); ++q) {
        const auto &qp = device.qubits[q];
        if (prep[q]) {
            double u = unit(rng);
            if (std::isinf(qp.t1_us)) {
                continue;
            }
            double t = -qp.t1_us * std::log1p(-u);
            if (t < duration) {
                auto sample = static_cast<std::size_t>(t * device.sample_rate_mhz);
                traj.transitions[q] = Transition{TransitionKind::relaxation, std::min(sample, device.n_samples - 1)};
            }
        } else {
            if (unit(rng) < qp.p_excitation) {
                boost::random::uniform_int_distribution<std::size_t> at(0, device.n_samples - 1);
                traj.transitions[q] = Transition{TransitionKind::excitation, at(rng)};
            }
        }
    }
    return traj;
}

/// response[c][r][s]: contribution of resonator r, with its qubit in state s,
/// to the channel demodulated at the frequency of channel c's resonator.
struct ResponseTable {
    std::size_t n = 0;
    std::vector<Complex> values;

    explicit ResponseTable(const DeviceModel &device) : n(device.n_qubits()), values(n * n * 2) {
        for (std::size_t c = 0; c < n; ++c) {
            double probe = device.resonators[device.qubits[c].resonator_index].frequency_ghz;
            for (std::size_t r = 0; r < n; ++r) {
                const auto &res = device.resonators[r];
                for (int s = 0; s < 2; ++s) {
                    double center = res.frequency_ghz * 1000.0 + res.dispersive_shift_mhz * (2 * s - 1);
                    values[(c * n + r) * 2 + s] = res.amplitude * lorentzian_response(probe * 1000.0 - center, res.linewidth_mhz);
                }
            }
        }
    }

    Complex at(std::size_t channel, std::size_t resonator, bool state) const {
        return values[(channel * n + resonator) * 2 + state];
    }
};

/// Noiseless channel value for a given assignment of qubit states.
inline Complex steady_state_signal(const DeviceModel &device, const ResponseTable &table, std::size_t channel,
                                   const BitString &states) {
    Complex z = 0;
    for (std::size_t q = 0; q < device.n_qubits(); ++q) {
        z += table.at(channel, device.qubits[q].resonator_index, states[q]);
    }
    return z;
}

/// One shot. Trajectory draws come first, then I and Q noise per sample in
/// channel-major order, so the trajectory for a seed does not depend on sigma.
inline ShotRecord simulate_shot(const DeviceModel &device, const StatePreparation &prep, Rng &rng,
                                std::uint64_t shot_index = 0) {
    const std::size_t nq = device.n_qubits();
    const std::size_t ns = device.n_samples;
    ShotRecord rec;
    rec.n_qubits = nq;
    rec.n_samples = ns;
    rec.preparation = prep;
    rec.shot_index = shot_index;
    rec.trajectory = sample_trajectory(prep, device, rng);
    rec.traces.resize(nq * ns);

    const ResponseTable table(device);
    std::vector<std::size_t> edges{0, ns};
    for (const auto &t : rec.trajectory->transitions) {
        if (t) {
            edges.push_back(t->sample);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    BitString states(nq);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        for (std::size_t q = 0; q < nq; ++q) {
            states.set(q, rec.trajectory->state(q, edges[k]));
        }
        for (std::size_t c = 0; c < nq; ++c) {
            Complex z = steady_state_signal(device, table, c, states);
            auto ch = rec.channel(c);
            std::fill(ch.begin() + edges[k], ch.begin() + edges[k + 1], z);
        }
    }

    if (device.noise_sigma > 0) {
        boost::random::normal_distribution<double> gauss(0.0, device.noise_sigma);
        for (auto &z : rec.traces) {
            double re = gauss(rng);
            double im = gauss(rng);
            z += Complex(re, im);
        }
    }
    return rec;
}

/// Shot k is simulated from `shot_rng(seed, k)`; the result is identical for
/// any worker count.
inline std::vector<ShotRecord> simulate_batch(const DeviceModel &device, const StatePreparation &prep,
                                              std::size_t n_shots, std::uint64_t seed, unsigned threads = 1) {
    if (n_shots == 0) {
        throw ValidationError("n_shots must be >= 1");
    }
    validate(device);
    check_preparation(device, prep);
    std::vector<ShotRecord> out(n_shots);
    parallel_for(n_shots, threads, [&](std::size_t k) {
        auto rng = shot_rng(seed, k);
        out[k] = simulate_shot(device, prep, rng, k);
    });
    return out;
}

}  // namespace rxleak
