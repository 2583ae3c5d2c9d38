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
#include <limits>
#include <vector>

#include "rxleak/device.hpp"
#include "rxleak/rng.hpp"

namespace rxleak::testing {

/// Default device without noise or transitions.
inline DeviceModel quiet_device() {
    auto d = default_device();
    d.noise_sigma = 0;
    for (auto &q : d.qubits) {
        q.t1_us = std::numeric_limits<double>::infinity();
        q.p_excitation = 0;
    }
    return d;
}

inline DeviceModel single_qubit_device(double sigma = 0) {
    DeviceModel d;
    d.resonators.push_back({7.0, defaults::kLinewidthMhz, defaults::kDispersiveShiftMhz, 1.0});
    d.qubits.push_back({std::numeric_limits<double>::infinity(), 0.0, 0});
    d.noise_sigma = sigma;
    return d;
}

}  // namespace rxleak::testing
