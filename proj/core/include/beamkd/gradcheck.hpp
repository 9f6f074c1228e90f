// SPDX-License-Identifier: Apache-2.0
//
// beamkd - sensing-aided mmWave beam prediction and cross-modal distillation
// Copyright (C) 2026 The beamkd authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace beamkd {

struct GradSuiteEntry {
    std::string name;
    double max_rel_error = 0.0;
    int configurations = 0;
};

inline constexpr double kGradTolerance = 1e-4;

// Central-difference checks of every analytic gradient, in 64-bit, over seeded random configurations.
std::vector<GradSuiteEntry> gradient_suite(int configurations = 20, std::uint64_t seed = 2024);

} // namespace beamkd
