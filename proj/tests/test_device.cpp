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

#include <functional>

#include "gtest/gtest.h"

#include "rxleak/device.hpp"

using namespace rxleak;

TEST(DefaultDevice, table_frequencies_and_geometry) {
    auto d = default_device();
    ASSERT_EQ(d.n_qubits(), 5u);
    std::vector<double> f;
    for (const auto &r : d.resonators) {
        f.push_back(r.frequency_ghz);
    }
    ASSERT_EQ(f, (std::vector<double>{7.06, 7.10, 7.15, 7.20, 7.25}));
    ASSERT_EQ(d.n_samples, 500u);
    ASSERT_EQ(d.sample_rate_mhz, 500.0);
    ASSERT_DOUBLE_EQ(d.duration_us(), 1.0);
    for (std::size_t i = 0; i < 5; ++i) {
        ASSERT_EQ(d.qubits[i].resonator_index, i);
    }
    ASSERT_NO_THROW(validate(d));
}

static std::string validation_message(const DeviceModel &d) {
    try {
        validate(d);
    } catch (const ValidationError &e) {
        return e.what();
    }
    return "";
}

TEST(Validate, single_field_mutations_name_the_field) {
    auto base = default_device();
    struct Case {
        std::function<void(DeviceModel &)> mutate;
        std::string field;
    };
    std::vector<Case> cases = {
        {[](DeviceModel &d) { d.resonators[1].frequency_ghz = 7.06; }, "resonator[1].frequency_ghz"},
        {[](DeviceModel &d) { d.resonators[2].linewidth_mhz = 0; }, "resonator[2].linewidth_mhz"},
        {[](DeviceModel &d) { d.resonators[3].dispersive_shift_mhz = 0; }, "resonator[3].dispersive_shift_mhz"},
        {[](DeviceModel &d) { d.resonators[4].amplitude = -1; }, "resonator[4].amplitude"},
        {[](DeviceModel &d) { d.qubits[0].t1_us = 0; }, "qubit[0].t1_us"},
        {[](DeviceModel &d) { d.qubits[1].p_excitation = 0.5; }, "qubit[1].p_excitation"},
        {[](DeviceModel &d) { d.qubits[2].resonator_index = 0; }, "qubit[2].resonator"},
        {[](DeviceModel &d) { d.noise_sigma = -1; }, "device.noise_sigma"},
        {[](DeviceModel &d) { d.sample_rate_mhz = 0; }, "device.sample_rate_mhz"},
        {[](DeviceModel &d) { d.qubits.pop_back(); }, "device"},
    };
    for (const auto &c : cases) {
        auto d = base;
        c.mutate(d);
        auto msg = validation_message(d);
        ASSERT_EQ(msg.rfind(c.field + " violates invariant", 0), 0u) << msg;
    }
}

TEST(LoadDevice, empty_document_is_default) {
    ASSERT_EQ(load_device(""), default_device());
    ASSERT_EQ(load_device("# only a comment\n\n"), default_device());
}

TEST(LoadDevice, single_override) {
    auto d = load_device("[device]\nnoise_sigma = 0\n");
    auto expected = default_device();
    expected.noise_sigma = 0;
    ASSERT_EQ(d, expected);
}

TEST(LoadDevice, equal_frequencies_rejected) {
    try {
        load_device("[resonator.1]\nfrequency_ghz = 7.06\n");
        FAIL();
    } catch (const ValidationError &e) {
        ASSERT_NE(std::string(e.what()).find("frequencies strictly increasing"), std::string::npos);
    }
}

TEST(LoadDevice, schema_errors) {
    ASSERT_THROW(load_device("[device]\nnoise = 1\n"), ParseError);
    ASSERT_THROW(load_device("[resonatorz]\n"), ParseError);
    ASSERT_THROW(load_device("[device]\nnoise_sigma = 1\nnoise_sigma = 2\n"), ParseError);
    ASSERT_THROW(load_device("noise_sigma = 1\n"), ParseError);
    ASSERT_THROW(load_device("[device\n"), ParseError);
    ASSERT_THROW(load_device("[device]\nnoise_sigma = abc\n"), ParseError);
    ASSERT_THROW(load_device("[resonator.9]\nlinewidth_mhz = 1\n"), ValidationError);
    try {
        load_device("[device]\n\nbogus = 1\n");
        FAIL();
    } catch (const ParseError &e) {
        ASSERT_EQ(e.line(), 3u);
    }
}

TEST(LoadDevice, shared_sections_and_growth) {
    auto d = load_device(
        "[resonators]\nlinewidth_mhz = 4\n"
        "[qubits]\nt1_us = 50\n"
        "[device]\nn_qubits = 6\n"
        "[resonator.5]\nfrequency_ghz = 7.31\n"
        "[qubit.2]\np_excitation = 0.1\n");
    ASSERT_EQ(d.n_qubits(), 6u);
    ASSERT_EQ(d.resonators[5].frequency_ghz, 7.31);
    for (const auto &r : d.resonators) {
        ASSERT_EQ(r.linewidth_mhz, 4.0);
    }
    for (const auto &q : d.qubits) {
        ASSERT_EQ(q.t1_us, 50.0);
    }
    ASSERT_EQ(d.qubits[2].p_excitation, 0.1);
    ASSERT_EQ(d.qubits[5].resonator_index, 5u);
    ASSERT_THROW(load_device("[device]\nn_qubits = 6\n"), ValidationError);
}

TEST(LoadDevice, render_round_trip) {
    auto d = default_device();
    ASSERT_EQ(load_device(render_device(d)), d);
    d.noise_sigma = 0.123456789012345;
    d.resonators[2].dispersive_shift_mhz = -3.25;
    d.qubits[4].t1_us = 1e9;
    std::swap(d.qubits[0].resonator_index, d.qubits[1].resonator_index);
    ASSERT_EQ(load_device(render_device(d)), d);
    auto three = load_device("[device]\nn_qubits = 3\n");
    ASSERT_EQ(three.n_qubits(), 3u);
    ASSERT_EQ(load_device(render_device(three)), three);
}

TEST(ScaleSpacing, stretches_about_first_resonator) {
    auto d = scale_spacing(default_device(), 1000);
    ASSERT_DOUBLE_EQ(d.resonators[0].frequency_ghz, 7.06);
    ASSERT_NEAR(d.resonators[1].frequency_ghz, 7.06 + 40.0, 1e-9);
    ASSERT_NEAR(d.resonators[4].frequency_ghz, 7.06 + 190.0, 1e-9);
}
