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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rxleak/bits.hpp"
#include "rxleak/errors.hpp"
#include "rxleak/text.hpp"
#include "rxleak/trace_sim.hpp"

namespace rxleak {

// ---------------------------------------------------------------------------
// QRXT trace files, version 1. All integers and floats are little-endian.
//
//   header (44 bytes)
//     char[4] magic "QRXT"
//     u32     version
//     u32     n_qubits
//     u32     n_samples
//     f64     sample_rate_mhz
//     u64     n_shots
//     u64     seed            0 for external data
//     u32     flags           bit 0: trajectory block present
//   per shot
//     u8[n_qubits]            preparation bits
//     trajectory block        only if flags bit 0
//       u64   shot_index
//       per qubit: u8 kind (0 none, 1 relaxation, 2 excitation), u32 sample
//     f32[n_qubits][n_samples][2]   I then Q, channel-major

inline constexpr char kTraceMagic[4] = {'Q', 'R', 'X', 'T'};
inline constexpr std::uint32_t kTraceVersion = 1;
inline constexpr std::size_t kTraceHeaderBytes = 44;
inline constexpr std::uint32_t kFlagTrajectory = 1;

struct TraceFileHeader {
    std::uint32_t version = kTraceVersion;
    std::uint32_t n_qubits = 0;
    std::uint32_t n_samples = 0;
    double sample_rate_mhz = 0;
    std::uint64_t n_shots = 0;
    std::uint64_t seed = 0;
    std::uint32_t flags = 0;

    bool has_trajectory() const {
        return flags & kFlagTrajectory;
    }
    std::uint64_t shot_bytes() const {
        return shot_bytes_for(n_qubits);
    }
    std::uint64_t shot_bytes_for(std::uint64_t nq) const {
        return nq + (has_trajectory() ? 8 + 5 * nq : 0) + 8 * nq * std::uint64_t{n_samples};
    }

    bool operator==(const TraceFileHeader &) const = default;
};

namespace detail {

class ByteWriter {
   public:
    explicit ByteWriter(std::ostream &out) : out_(out) {
    }
    template <typename T>
    void put(T v) {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
        auto u = std::bit_cast<U>(v);
        char buf[sizeof(U)];
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            buf[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
        }
        out_.write(buf, sizeof(U));
    }
    void bytes(const char *p, std::size_t n) {
        out_.write(p, static_cast<std::streamsize>(n));
    }

   private:
    std::ostream &out_;
};

/// Reads from an in-memory buffer and names the byte offset on failure.
class ByteReader {
   public:
    ByteReader(const std::string &buf, std::size_t pos = 0) : buf_(buf), pos_(pos) {
    }
    template <typename T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
        need(sizeof(U));
        U u = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            u |= static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(U);
        return std::bit_cast<T>(u);
    }
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) {
            throw FormatError("truncated payload at byte offset " + std::to_string(pos_) + ": need " +
                              std::to_string(n) + " bytes, file has " + std::to_string(buf_.size()));
        }
    }
    std::size_t pos() const {
        return pos_;
    }

   private:
    const std::string &buf_;
    std::size_t pos_;
};

}  // namespace detail

inline void write_header(std::ostream &out, const TraceFileHeader &h) {
    detail::ByteWriter w(out);
    w.bytes(kTraceMagic, 4);
    w.put(h.version);
    w.put(h.n_qubits);
    w.put(h.n_samples);
    w.put(h.sample_rate_mhz);
    w.put(h.n_shots);
    w.put(h.seed);
    w.put(h.flags);
}

inline void write_shot(std::ostream &out, const TraceFileHeader &h, const ShotRecord &shot) {
    if (shot.n_qubits != h.n_qubits || shot.n_samples != h.n_samples ||
        shot.traces.size() != std::size_t{h.n_qubits} * h.n_samples || shot.preparation.size() != h.n_qubits) {
        throw ValidationError("shot " + std::to_string(shot.shot_index) + " dimensions differ from the file header");
    }
    if (shot.trajectory.has_value() != h.has_trajectory()) {
        throw ValidationError("records must either all carry a trajectory or none");
    }
    detail::ByteWriter w(out);
    for (std::size_t q = 0; q < h.n_qubits; ++q) {
        w.put(static_cast<std::uint8_t>(shot.preparation[q]));
    }
    if (h.has_trajectory()) {
        w.put(shot.shot_index);
        for (std::size_t q = 0; q < h.n_qubits; ++q) {
            const auto &t = shot.trajectory->transitions[q];
            w.put(static_cast<std::uint8_t>(t ? static_cast<std::uint8_t>(t->kind) : 0));
            w.put(static_cast<std::uint32_t>(t ? t->sample : 0));
        }
    }
    for (const auto &z : shot.traces) {
        w.put(static_cast<float>(z.real()));
        w.put(static_cast<float>(z.imag()));
    }
}

/// Streams shots to a file whose shot count is known up front.
class TraceWriter {
   public:
    TraceWriter(const std::string &path, const TraceFileHeader &header)
        : out_(path, std::ios::binary | std::ios::trunc), header_(header) {
        if (!out_) {
            throw FormatError("cannot open '" + path + "' for writing");
        }
        write_header(out_, header_);
    }
    void add(const ShotRecord &shot) {
        if (written_ == header_.n_shots) {
            throw ValidationError("more shots than the header declares");
        }
        write_shot(out_, header_, shot);
        ++written_;
    }
    void close() {
        if (written_ != header_.n_shots) {
            throw ValidationError("wrote " + std::to_string(written_) + " shots, header declares " +
                                  std::to_string(header_.n_shots));
        }
        out_.close();
        if (!out_) {
            throw FormatError("write failed");
        }
    }

   private:
    std::ofstream out_;
    TraceFileHeader header_;
    std::uint64_t written_ = 0;
};

inline TraceFileHeader header_for(std::span<const ShotRecord> records, double sample_rate_mhz, std::uint64_t seed) {
    if (records.empty()) {
        throw ValidationError("cannot write an empty record set");
    }
    TraceFileHeader h;
    h.n_qubits = static_cast<std::uint32_t>(records.front().n_qubits);
    h.n_samples = static_cast<std::uint32_t>(records.front().n_samples);
    h.sample_rate_mhz = sample_rate_mhz;
    h.n_shots = records.size();
    h.seed = seed;
    h.flags = records.front().trajectory ? kFlagTrajectory : 0;
    return h;
}

inline void write_traces(std::ostream &out, std::span<const ShotRecord> records, double sample_rate_mhz,
                         std::uint64_t seed) {
    auto h = header_for(records, sample_rate_mhz, seed);
    write_header(out, h);
    for (const auto &r : records) {
        write_shot(out, h, r);
    }
}

inline void write_traces(const std::string &path, std::span<const ShotRecord> records, double sample_rate_mhz,
                         std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open '" + path + "' for writing");
    }
    write_traces(out, records, sample_rate_mhz, seed);
    out.close();
    if (!out) {
        throw FormatError("write to '" + path + "' failed");
    }
}

struct TraceFile {
    TraceFileHeader header;
    std::vector<ShotRecord> records;
};

/// Parses and checks the header against the buffer length before any
/// allocation sized by header fields.
inline TraceFileHeader parse_header(const std::string &buf) {
    if (buf.size() < 4 || std::memcmp(buf.data(), kTraceMagic, 4) != 0) {
        throw FormatError("bad magic: not a QRXT trace file");
    }
    detail::ByteReader r(buf, 4);
    TraceFileHeader h;
    h.version = r.get<std::uint32_t>();
    if (h.version != kTraceVersion) {
        throw FormatError("unsupported trace format version " + std::to_string(h.version) + " (expected " +
                          std::to_string(kTraceVersion) + ")");
    }
    h.n_qubits = r.get<std::uint32_t>();
    h.n_samples = r.get<std::uint32_t>();
    h.sample_rate_mhz = r.get<double>();
    h.n_shots = r.get<std::uint64_t>();
    h.seed = r.get<std::uint64_t>();
    h.flags = r.get<std::uint32_t>();
    if (h.flags & ~kFlagTrajectory) {
        throw FormatError("unknown header flags " + std::to_string(h.flags));
    }
    if (h.n_qubits == 0 || h.n_samples == 0) {
        throw FormatError("header declares an empty shot (n_qubits or n_samples is 0)");
    }

    const std::uint64_t payload = buf.size() - kTraceHeaderBytes;
    const std::uint64_t per = h.shot_bytes();
    const bool overflow = h.n_shots > 0 && per > (std::uint64_t{1} << 62) / h.n_shots;
    if (!overflow && h.n_shots * per == payload) {
        return h;
    }
    if (h.n_shots > 0) {
        for (std::uint64_t nq = 1; nq <= 64; ++nq) {
            if (nq != h.n_qubits && h.shot_bytes_for(nq) * h.n_shots == payload) {
                throw FormatError("dimension mismatch: header declares " + std::to_string(h.n_qubits) +
                                  " qubits, payload sized for " + std::to_string(nq));
            }
        }
    }
    if (overflow || h.n_shots * per > payload) {
        std::uint64_t complete = payload / per;
        throw FormatError("truncated payload: shot " + std::to_string(complete) + " starts at byte offset " +
                          std::to_string(kTraceHeaderBytes + complete * per) + " and needs " + std::to_string(per) +
                          " bytes, but the file ends at byte offset " + std::to_string(buf.size()));
    }
    throw FormatError("trailing data after byte offset " + std::to_string(kTraceHeaderBytes + h.n_shots * per));
}

inline TraceFile read_traces_buffer(const std::string &buf) {
    TraceFile f;
    f.header = parse_header(buf);
    const auto &h = f.header;
    detail::ByteReader r(buf, kTraceHeaderBytes);
    f.records.reserve(h.n_shots);
    for (std::uint64_t s = 0; s < h.n_shots; ++s) {
        ShotRecord rec;
        rec.n_qubits = h.n_qubits;
        rec.n_samples = h.n_samples;
        rec.shot_index = s;
        rec.preparation = BitString(h.n_qubits);
        for (std::size_t q = 0; q < h.n_qubits; ++q) {
            auto at = r.pos();
            auto b = r.get<std::uint8_t>();
            if (b > 1) {
                throw FormatError("preparation byte " + std::to_string(b) + " at byte offset " + std::to_string(at));
            }
            rec.preparation.set(q, b);
        }
        if (h.has_trajectory()) {
            rec.shot_index = r.get<std::uint64_t>();
            StateTrajectory traj{rec.preparation, std::vector<std::optional<Transition>>(h.n_qubits)};
            for (std::size_t q = 0; q < h.n_qubits; ++q) {
                auto at = r.pos();
                auto kind = r.get<std::uint8_t>();
                auto sample = r.get<std::uint32_t>();
                if (kind > 2 || (kind && sample >= h.n_samples)) {
                    throw FormatError("invalid transition record at byte offset " + std::to_string(at));
                }
                if (kind) {
                    traj.transitions[q] = Transition{static_cast<TransitionKind>(kind), sample};
                }
            }
            rec.trajectory = std::move(traj);
        }
        rec.traces.resize(std::size_t{h.n_qubits} * h.n_samples);
        for (auto &z : rec.traces) {
            float re = r.get<float>();
            float im = r.get<float>();
            z = Complex(re, im);
        }
        f.records.push_back(std::move(rec));
    }
    return f;
}

inline std::string read_file_bytes(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline TraceFile read_traces(const std::string &path) {
    return read_traces_buffer(read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// Outcome CSV: "prep,measured" per line, optional header row.

inline std::vector<Outcome> parse_outcomes_csv(std::string_view doc) {
    std::vector<Outcome> out;
    std::size_t width = 0;
    std::size_t line_no = 0;
    for (auto raw : text::lines(doc)) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty()) {
            continue;
        }
        if (line_no == 1 && line == "prep,measured") {
            continue;
        }
        auto cells = text::split(line, ',');
        if (cells.size() != 2) {
            throw ParseError("expected 2 columns (prep,measured), found " + std::to_string(cells.size()), line_no);
        }
        Outcome o;
        try {
            o.prep = BitString::parse(text::trim(cells[0]));
            o.measured = BitString::parse(text::trim(cells[1]));
        } catch (const ValidationError &e) {
            throw ParseError(e.what(), line_no);
        }
        if (o.prep.empty()) {
            throw ParseError("empty bit-string", line_no);
        }
        if (o.prep.size() != o.measured.size()) {
            throw ParseError("ragged lengths: prep has " + std::to_string(o.prep.size()) + " bits, measured has " +
                                 std::to_string(o.measured.size()),
                             line_no);
        }
        if (width == 0) {
            width = o.prep.size();
        } else if (o.prep.size() != width) {
            throw ParseError("ragged lengths: " + std::to_string(o.prep.size()) + " bits, earlier rows have " +
                                 std::to_string(width),
                             line_no);
        }
        out.push_back(std::move(o));
    }
    return out;
}

inline std::vector<Outcome> import_outcomes_csv(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open outcomes file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_outcomes_csv(ss.str());
}

inline std::string outcomes_csv(std::span<const Outcome> outcomes) {
    std::string out = "prep,measured\n";
    for (const auto &o : outcomes) {
        out += o.prep.str() + "," + o.measured.str() + "\n";
    }
    return out;
}

}  // namespace rxleak
