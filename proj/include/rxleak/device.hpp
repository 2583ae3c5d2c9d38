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

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rxleak/errors.hpp"
#include "rxleak/text.hpp"

namespace rxleak {

/// Readout resonator. Frequencies in GHz, widths and shifts in MHz.
struct ResonatorParams {
    double frequency_ghz = 0;
    /// kappa/2pi, full width.
    double linewidth_mhz = 0;
    /// chi/2pi; the resonator sits at frequency +chi with the qubit in 1 and -chi in 0.
    double dispersive_shift_mhz = 0;
    double amplitude = 0;

    bool operator==(const ResonatorParams &) const = default;
};

struct QubitParams {
    double t1_us = 0;
    /// Probability of one spontaneous 0->1 event per readout window.
    double p_excitation = 0;
    std::size_t resonator_index = 0;

    bool operator==(const QubitParams &) const = default;
};

struct DeviceModel {
    std::vector<ResonatorParams> resonators;
    std::vector<QubitParams> qubits;
    std::size_t n_samples = 500;
    double sample_rate_mhz = 500;
    /// Standard deviation of each of the I and Q noise components per sample.
    double noise_sigma = 0;

    std::size_t n_qubits() const {
        return qubits.size();
    }
    double duration_us() const {
        return static_cast<double>(n_samples) / sample_rate_mhz;
    }

    bool operator==(const DeviceModel &) const = default;
};

namespace defaults {
inline constexpr double kFrequenciesGhz[] = {7.06, 7.10, 7.15, 7.20, 7.25};
inline constexpr double kLinewidthMhz = 20.0;
inline constexpr double kDispersiveShiftMhz = 10.0;
inline constexpr double kAmplitude = 1.0;
inline constexpr double kNoiseSigma = 6.5;
inline constexpr double kT1Us = 5.0;
inline constexpr double kExcitation = 0.01;
inline constexpr std::size_t kSamples = 500;
inline constexpr double kSampleRateMhz = 500.0;
}  // namespace defaults

/// Throws ValidationError naming the first violated field.
inline void validate(const DeviceModel &m) {
    auto fail = [](const std::string &field, const std::string &what) {
        throw ValidationError(field + " violates invariant: " + what);
    };
    if (m.resonators.empty() || m.qubits.empty()) {
        fail("device", "at least one resonator and one qubit required");
    }
    if (m.resonators.size() != m.qubits.size()) {
        fail("device", "resonator and qubit counts must be equal");
    }
    if (m.qubits.size() > 62) {
        fail("device.n_qubits", "at most 62 qubits supported");
    }
    if (m.n_samples < 2) {
        fail("device.n_samples", "n_samples >= 2");
    }
    if (!(m.sample_rate_mhz > 0) || !std::isfinite(m.sample_rate_mhz)) {
        fail("device.sample_rate_mhz", "sample_rate_mhz > 0");
    }
    if (!(m.noise_sigma >= 0) || !std::isfinite(m.noise_sigma)) {
        fail("device.noise_sigma", "noise_sigma >= 0");
    }
    for (std::size_t i = 0; i < m.resonators.size(); ++i) {
        const auto &r = m.resonators[i];
        std::string p = "resonator[" + std::to_string(i) + "].";
        if (!std::isfinite(r.frequency_ghz) || r.frequency_ghz <= 0) {
            fail(p + "frequency_ghz", "frequency_ghz > 0");
        }
        if (i > 0 && !(r.frequency_ghz > m.resonators[i - 1].frequency_ghz)) {
            fail(p + "frequency_ghz", "frequencies strictly increasing");
        }
        if (!(r.linewidth_mhz > 0) || !std::isfinite(r.linewidth_mhz)) {
            fail(p + "linewidth_mhz", "linewidth_mhz > 0");
        }
        if (r.dispersive_shift_mhz == 0 || !std::isfinite(r.dispersive_shift_mhz)) {
            fail(p + "dispersive_shift_mhz", "dispersive_shift_mhz != 0");
        }
        if (!(r.amplitude > 0) || !std::isfinite(r.amplitude)) {
            fail(p + "amplitude", "amplitude > 0");
        }
    }
    std::vector<bool> used(m.resonators.size(), false);
    for (std::size_t i = 0; i < m.qubits.size(); ++i) {
        const auto &q = m.qubits[i];
        std::string p = "qubit[" + std::to_string(i) + "].";
        if (!(q.t1_us > 0)) {
            fail(p + "t1_us", "t1_us > 0");
        }
        if (!(q.p_excitation >= 0 && q.p_excitation < 0.5)) {
            fail(p + "p_excitation", "0 <= p_excitation < 0.5");
        }
        if (q.resonator_index >= m.resonators.size() || used[q.resonator_index]) {
            fail(p + "resonator", "qubit-to-resonator assignment is a bijection");
        }
        used[q.resonator_index] = true;
    }
}

/// Five resonators at the Table-1 frequencies, identity qubit assignment.
inline DeviceModel default_device() {
    DeviceModel m;
    for (std::size_t i = 0; i < std::size(defaults::kFrequenciesGhz); ++i) {
        m.resonators.push_back({defaults::kFrequenciesGhz[i], defaults::kLinewidthMhz,
                                defaults::kDispersiveShiftMhz, defaults::kAmplitude});
        m.qubits.push_back({defaults::kT1Us, defaults::kExcitation, i});
    }
    m.n_samples = defaults::kSamples;
    m.sample_rate_mhz = defaults::kSampleRateMhz;
    m.noise_sigma = defaults::kNoiseSigma;
    validate(m);
    return m;
}

/// Stretches resonator spacings about the first resonator by `factor`.
/// A factor of 1000 pushes the Lorentzian tails to ~zero (crosstalk off).
inline DeviceModel scale_spacing(DeviceModel m, double factor) {
    double f0 = m.resonators.front().frequency_ghz;
    for (auto &r : m.resonators) {
        r.frequency_ghz = f0 + (r.frequency_ghz - f0) * factor;
    }
    validate(m);
    return m;
}

/// Renders the configuration text accepted by `load_device`. Every field is
/// written, so `load_device(render_device(m)) == m`.
inline std::string render_device(const DeviceModel &m) {
    using text::format_double;
    std::string out = "# rxleak device configuration\n[device]\n";
    out += "n_qubits = " + std::to_string(m.n_qubits()) + "\n";
    out += "n_samples = " + std::to_string(m.n_samples) + "\n";
    out += "sample_rate_mhz = " + format_double(m.sample_rate_mhz) + "\n";
    out += "noise_sigma = " + format_double(m.noise_sigma) + "\n";
    for (std::size_t i = 0; i < m.resonators.size(); ++i) {
        const auto &r = m.resonators[i];
        out += "\n[resonator." + std::to_string(i) + "]\n";
        out += "frequency_ghz = " + format_double(r.frequency_ghz) + "\n";
        out += "linewidth_mhz = " + format_double(r.linewidth_mhz) + "\n";
        out += "dispersive_shift_mhz = " + format_double(r.dispersive_shift_mhz) + "\n";
        out += "amplitude = " + format_double(r.amplitude) + "\n";
    }
    for (std::size_t i = 0; i < m.qubits.size(); ++i) {
        const auto &q = m.qubits[i];
        out += "\n[qubit." + std::to_string(i) + "]\n";
        out += "t1_us = " + format_double(q.t1_us) + "\n";
        out += "p_excitation = " + format_double(q.p_excitation) + "\n";
        out += "resonator = " + std::to_string(q.resonator_index) + "\n";
    }
    return out;
}

namespace detail {

struct ConfigValue {
    std::string value;
    std::size_t line;
};
using ConfigSection = std::map<std::string, ConfigValue>;

inline std::map<std::string, ConfigSection> parse_sections(std::string_view doc) {
    std::map<std::string, ConfigSection> sections;
    std::string current;
    std::size_t line_no = 0;
    for (auto raw : text::split(doc, '\n')) {
        ++line_no;
        auto line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError("unterminated section header", line_no);
            }
            current = std::string(text::trim(line.substr(1, line.size() - 2)));
            if (current.empty()) {
                throw ParseError("empty section name", line_no);
            }
            if (sections.count(current)) {
                throw ParseError("duplicate section [" + current + "]", line_no);
            }
            sections[current];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("expected 'key = value'", line_no);
        }
        if (current.empty()) {
            throw ParseError("key outside of any section", line_no);
        }
        std::string key(text::trim(line.substr(0, eq)));
        std::string value(text::trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ParseError("empty key", line_no);
        }
        auto &sec = sections[current];
        if (sec.count(key)) {
            throw ParseError("duplicate key '" + key + "' in [" + current + "]", line_no);
        }
        sec[key] = {value, line_no};
    }
    return sections;
}

inline void apply_resonator_keys(const std::string &section, const ConfigSection &keys, ResonatorParams &r,
                                 bool allow_frequency) {
    for (const auto &[key, v] : keys) {
        if (key == "frequency_ghz" && allow_frequency) {
            r.frequency_ghz = text::parse_double(v.value, v.line);
        } else if (key == "linewidth_mhz") {
            r.linewidth_mhz = text::parse_double(v.value, v.line);
        } else if (key == "dispersive_shift_mhz") {
            r.dispersive_shift_mhz = text::parse_double(v.value, v.line);
        } else if (key == "amplitude") {
            r.amplitude = text::parse_double(v.value, v.line);
        } else {
            throw ParseError("unknown key '" + key + "' in [" + section + "]", v.line);
        }
    }
}

inline void apply_qubit_keys(const std::string &section, const ConfigSection &keys, QubitParams &q,
                             bool allow_resonator) {
    for (const auto &[key, v] : keys) {
        if (key == "t1_us") {
            q.t1_us = text::parse_double(v.value, v.line);
        } else if (key == "p_excitation") {
            q.p_excitation = text::parse_double(v.value, v.line);
        } else if (key == "resonator" && allow_resonator) {
            q.resonator_index = text::parse_uint(v.value, v.line);
        } else {
            throw ParseError("unknown key '" + key + "' in [" + section + "]", v.line);
        }
    }
}

inline std::size_t section_index(const std::string &name, std::string_view prefix, std::size_t line) {
    auto digits = std::string_view(name).substr(prefix.size());
    if (digits.empty()) {
        throw ParseError("section [" + name + "] needs an index", line);
    }
    return text::parse_uint(digits, line);
}

}  // namespace detail

/// Parses the device configuration document (see README for the schema).
/// Missing fields fall back to `default_device()`; unknown sections and keys
/// are rejected.
inline DeviceModel load_device(std::string_view doc) {
    auto sections = detail::parse_sections(doc);
    DeviceModel m = default_device();
    const DeviceModel base = m;

    std::size_t n = base.n_qubits();
    if (auto it = sections.find("device"); it != sections.end()) {
        for (const auto &[key, v] : it->second) {
            if (key == "n_qubits") {
                n = text::parse_uint(v.value, v.line);
                if (n == 0) {
                    throw ValidationError("device.n_qubits violates invariant: at least one qubit");
                }
            } else if (key == "n_samples") {
                m.n_samples = text::parse_uint(v.value, v.line);
            } else if (key == "sample_rate_mhz") {
                m.sample_rate_mhz = text::parse_double(v.value, v.line);
            } else if (key == "noise_sigma") {
                m.noise_sigma = text::parse_double(v.value, v.line);
            } else {
                throw ParseError("unknown key '" + key + "' in [device]", v.line);
            }
        }
    }

    m.resonators.resize(n, ResonatorParams{0.0, defaults::kLinewidthMhz, defaults::kDispersiveShiftMhz,
                                           defaults::kAmplitude});
    m.qubits.resize(n, QubitParams{defaults::kT1Us, defaults::kExcitation, 0});
    for (std::size_t i = base.n_qubits(); i < n; ++i) {
        m.qubits[i].resonator_index = i;
    }
    std::vector<bool> frequency_given(n, false);

    if (auto it = sections.find("resonators"); it != sections.end()) {
        for (auto &r : m.resonators) {
            detail::apply_resonator_keys("resonators", it->second, r, false);
        }
    }
    if (auto it = sections.find("qubits"); it != sections.end()) {
        for (auto &q : m.qubits) {
            detail::apply_qubit_keys("qubits", it->second, q, false);
        }
    }
    for (const auto &[name, keys] : sections) {
        std::size_t line = keys.empty() ? 0 : keys.begin()->second.line;
        if (name == "device" || name == "resonators" || name == "qubits") {
            continue;
        }
        if (name.rfind("resonator.", 0) == 0) {
            auto i = detail::section_index(name, "resonator.", line);
            if (i >= n) {
                throw ValidationError("section [" + name + "] out of range for n_qubits = " + std::to_string(n));
            }
            detail::apply_resonator_keys(name, keys, m.resonators[i], true);
            frequency_given[i] = frequency_given[i] || keys.count("frequency_ghz");
        } else if (name.rfind("qubit.", 0) == 0) {
            auto i = detail::section_index(name, "qubit.", line);
            if (i >= n) {
                throw ValidationError("section [" + name + "] out of range for n_qubits = " + std::to_string(n));
            }
            detail::apply_qubit_keys(name, keys, m.qubits[i], true);
        } else {
            throw ParseError("unknown section [" + name + "]", line);
        }
    }
    for (std::size_t i = base.n_qubits(); i < n; ++i) {
        if (!frequency_given[i]) {
            throw ValidationError("resonator[" + std::to_string(i) + "].frequency_ghz is required (no default)");
        }
    }
    validate(m);
    return m;
}

}  // namespace rxleak
