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

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace beamkd {

// Error taxonomy. The CLI maps each family onto a distinct exit code.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VersionError : DataError {
    using DataError::DataError;
};

struct TruncatedError : DataError {
    using DataError::DataError;
};

struct DigestError : DataError {
    using DataError::DataError;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

inline constexpr double kSpeedOfLight = 299792458.0;

// "No coverage" marker for dB quantities (log of a zero magnitude).
inline constexpr double kNoCoverage = -std::numeric_limits<double>::infinity();

inline bool is_no_coverage(double db) { return std::isinf(db) && db < 0.0; }

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    bool operator==(const Vec3&) const = default;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

// Mixes a base seed with stream identifiers into an independent 64-bit seed (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0)
{
    auto step = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return step(step(step(step(base) ^ a) ^ b) ^ c);
}

} // namespace beamkd
