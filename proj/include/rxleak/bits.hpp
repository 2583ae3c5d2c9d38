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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rxleak/errors.hpp"

namespace rxleak {

/// Ordered classical bit-string, one entry per qubit. Bit 0 is printed first
/// and is the most significant bit of `index()`, so "10000" has index 16.
class BitString {
   public:
    BitString() = default;
    explicit BitString(std::size_t n) : bits_(n, 0) {
    }

    static BitString parse(std::string_view text) {
        BitString out(text.size());
        for (std::size_t i = 0; i < text.size(); ++i) {
            char c = text[i];
            if (c != '0' && c != '1') {
                throw ValidationError(
                    "malformed bit-string '" + std::string(text) + "': character '" + std::string(1, c) +
                    "' at position " + std::to_string(i));
            }
            out.bits_[i] = c == '1';
        }
        return out;
    }

    static BitString from_index(std::uint64_t index, std::size_t n) {
        BitString out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.bits_[n - 1 - i] = (index >> i) & 1;
        }
        return out;
    }

    std::uint64_t index() const {
        std::uint64_t v = 0;
        for (auto b : bits_) {
            v = (v << 1) | b;
        }
        return v;
    }

    std::size_t size() const {
        return bits_.size();
    }
    bool empty() const {
        return bits_.empty();
    }
    bool operator[](std::size_t i) const {
        return bits_[i] != 0;
    }
    void set(std::size_t i, bool v) {
        bits_[i] = v;
    }
    std::size_t count_ones() const {
        std::size_t n = 0;
        for (auto b : bits_) {
            n += b;
        }
        return n;
    }

    std::string str() const {
        std::string s(bits_.size(), '0');
        for (std::size_t i = 0; i < bits_.size(); ++i) {
            if (bits_[i]) {
                s[i] = '1';
            }
        }
        return s;
    }

    BitString operator^(const BitString &other) const {
        if (other.size() != size()) {
            throw ValidationError(
                "bit-string length mismatch: " + std::to_string(size()) + " vs " + std::to_string(other.size()));
        }
        BitString out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            out.bits_[i] = bits_[i] ^ other.bits_[i];
        }
        return out;
    }

    /// Bits at the given positions, in the order given.
    BitString select(const std::vector<std::size_t> &positions) const {
        BitString out(positions.size());
        for (std::size_t i = 0; i < positions.size(); ++i) {
            out.bits_[i] = bits_.at(positions[i]);
        }
        return out;
    }

    bool operator==(const BitString &) const = default;
    auto operator<=>(const BitString &) const = default;

   private:
    std::vector<std::uint8_t> bits_;
};

/// All 2^n basis states in index order.
inline std::vector<BitString> all_basis_states(std::size_t n) {
    std::vector<BitString> out;
    out.reserve(std::size_t{1} << n);
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << n); ++k) {
        out.push_back(BitString::from_index(k, n));
    }
    return out;
}

/// One discriminated shot: what was prepared and what was read out.
struct Outcome {
    BitString prep;
    BitString measured;

    bool operator==(const Outcome &) const = default;
};

}  // namespace rxleak
