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

#include <cstring>
#include <filesystem>
#include <sstream>

#include "gtest/gtest.h"

#include "rxleak/dataset_io.hpp"
#include "test_util.hpp"

using namespace rxleak;

namespace {

std::string to_bytes(std::span<const ShotRecord> records, std::uint64_t seed = 5) {
    std::ostringstream out;
    write_traces(out, records, 500.0, seed);
    return out.str();
}

std::vector<ShotRecord> sample_shots(std::size_t n, bool trajectory = true) {
    auto d = default_device();
    std::vector<ShotRecord> out;
    for (std::size_t k = 0; k < n; ++k) {
        auto prep = BitString::from_index(k % 32, 5);
        auto rng = shot_rng(7, k);
        auto s = simulate_shot(d, prep, rng, k);
        if (!trajectory) {
            s.trajectory.reset();
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string message_of(const std::string &bytes) {
    try {
        read_traces_buffer(bytes);
    } catch (const FormatError &e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(TraceFile, round_trip_to_float32) {
    auto shots = sample_shots(100);
    auto bytes = to_bytes(shots, 42);
    ASSERT_EQ(bytes.size(), kTraceHeaderBytes + 100 * (5 + 8 + 25 + 8 * 5 * 500));
    ASSERT_EQ(bytes.substr(0, 4), "QRXT");
    auto f = read_traces_buffer(bytes);
    ASSERT_EQ(f.header, header_for(shots, 500.0, 42));
    ASSERT_EQ(f.header.seed, 42u);
    ASSERT_TRUE(f.header.has_trajectory());
    ASSERT_EQ(f.records.size(), shots.size());
    for (std::size_t i = 0; i < shots.size(); ++i) {
        const auto &a = shots[i];
        const auto &b = f.records[i];
        ASSERT_EQ(a.preparation, b.preparation);
        ASSERT_EQ(a.shot_index, b.shot_index);
        ASSERT_EQ(a.trajectory->transitions, b.trajectory->transitions);
        for (std::size_t n = 0; n < a.traces.size(); ++n) {
            ASSERT_EQ(static_cast<float>(a.traces[n].real()), b.traces[n].real());
            ASSERT_EQ(static_cast<float>(a.traces[n].imag()), b.traces[n].imag());
        }
    }
}

TEST(TraceFile, external_data_without_trajectory) {
    auto shots = sample_shots(10, false);
    auto f = read_traces_buffer(to_bytes(shots, 0));
    ASSERT_FALSE(f.header.has_trajectory());
    ASSERT_EQ(f.records[3].shot_index, 3u);
    ASSERT_FALSE(f.records[3].trajectory.has_value());
}

TEST(TraceFile, writing_is_byte_deterministic) {
    auto shots = sample_shots(20);
    ASSERT_EQ(to_bytes(shots), to_bytes(sample_shots(20)));

    auto path = (std::filesystem::temp_directory_path() / "rxleak_io_test.qrxt").string();
    write_traces(path, shots, 500.0, 5);
    ASSERT_EQ(read_file_bytes(path), to_bytes(shots));
    TraceWriter w(path, header_for(shots, 500.0, 5));
    for (const auto &s : shots) {
        w.add(s);
    }
    ASSERT_THROW(w.add(shots[0]), ValidationError);
    w.close();
    ASSERT_EQ(read_file_bytes(path), to_bytes(shots));
    ASSERT_EQ(read_traces(path).records.size(), 20u);
    std::filesystem::remove(path);
}

TEST(TraceFile, truncation_names_byte_offset) {
    auto bytes = to_bytes(sample_shots(3, false));
    const std::size_t per = 5 + 8 * 5 * 500;
    auto cut = bytes.substr(0, kTraceHeaderBytes + per + per / 2);
    auto msg = message_of(cut);
    ASSERT_NE(msg.find("truncated"), std::string::npos) << msg;
    ASSERT_NE(msg.find("byte offset " + std::to_string(kTraceHeaderBytes + per)), std::string::npos) << msg;
    ASSERT_NE(message_of(bytes.substr(0, 20)).find("truncated"), std::string::npos);
    ASSERT_NE(message_of(bytes + "x").find("trailing"), std::string::npos);
}

TEST(TraceFile, header_validation) {
    auto bytes = to_bytes(sample_shots(2, false));

    auto wrong_dims = bytes;
    std::uint32_t five = 5;
    std::vector<ShotRecord> four_qubit;
    {
        auto d = default_device();
        d.resonators.pop_back();
        d.qubits.pop_back();
        Rng rng(1);
        for (int k = 0; k < 2; ++k) {
            auto s = simulate_shot(d, BitString(4), rng, k);
            s.trajectory.reset();
            four_qubit.push_back(s);
        }
    }
    wrong_dims = to_bytes(four_qubit);
    std::memcpy(wrong_dims.data() + 8, &five, 4);
    auto msg = message_of(wrong_dims);
    ASSERT_NE(msg.find("dimension mismatch: header declares 5 qubits, payload sized for 4"), std::string::npos) << msg;

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    ASSERT_NE(message_of(bad_magic).find("magic"), std::string::npos);
    auto bad_version = bytes;
    bad_version[4] = 9;
    ASSERT_NE(message_of(bad_version).find("version 9"), std::string::npos);
    auto bad_bit = bytes;
    bad_bit[kTraceHeaderBytes] = 2;
    ASSERT_THROW(read_traces_buffer(bad_bit), FormatError);
    ASSERT_THROW(read_traces("/nonexistent/rxleak.qrxt"), FormatError);
}

TEST(OutcomesCsv, examples) {
    auto one = parse_outcomes_csv("00000,00000\n");
    ASSERT_EQ(one.size(), 1u);
    ASSERT_EQ(one[0].prep.str(), "00000");
    try {
        parse_outcomes_csv("0000,00000\n");
        FAIL();
    } catch (const ParseError &e) {
        ASSERT_EQ(e.line(), 1u);
        ASSERT_NE(std::string(e.what()).find("ragged"), std::string::npos);
    }
    try {
        parse_outcomes_csv("prep,measured\n00000,00000\n00000,0000\n");
        FAIL();
    } catch (const ParseError &e) {
        ASSERT_EQ(e.line(), 3u);
    }
    try {
        parse_outcomes_csv("00000,00000\n0000,0000\n");
        FAIL();
    } catch (const ParseError &e) {
        ASSERT_EQ(e.line(), 2u);
    }
    ASSERT_THROW(parse_outcomes_csv("0a000,00000\n"), ParseError);
    ASSERT_THROW(parse_outcomes_csv("00000\n"), ParseError);
}

TEST(OutcomesCsv, balanced_file_round_trip) {
    std::vector<Outcome> all;
    for (const auto &p : all_basis_states(5)) {
        for (int k = 0; k < 100; ++k) {
            all.push_back({p, p});
        }
    }
    auto path = (std::filesystem::temp_directory_path() / "rxleak_outcomes_test.csv").string();
    {
        std::ofstream out(path);
        out << outcomes_csv(all);
    }
    auto back = import_outcomes_csv(path);
    std::filesystem::remove(path);
    ASSERT_EQ(back.size(), 3200u);
    std::map<BitString, int> hist;
    for (const auto &o : back) {
        ++hist[o.prep];
    }
    ASSERT_EQ(hist.size(), 32u);
    for (const auto &[p, c] : hist) {
        ASSERT_EQ(c, 100);
    }
    ASSERT_THROW(import_outcomes_csv("/nonexistent/outcomes.csv"), ValidationError);
}
