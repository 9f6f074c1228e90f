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

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "beamkd/common.hpp"

namespace beamkd {

using json = nlohmann::json;

// Reads fields out of a JSON object and rejects any key that was never asked for.
// Call finish() once every expected field has been consumed.
class StrictObject {
public:
    StrictObject(const json& j, std::string context);

    bool has(const std::string& key) const;

    template <typename T>
    T get(const std::string& key, const T& fallback)
    {
        used_.insert(key);
        if (!j_.contains(key))
            return fallback;
        return convert<T>(key);
    }

    template <typename T>
    T require(const std::string& key)
    {
        used_.insert(key);
        if (!j_.contains(key))
            throw ConfigError(context_ + ": missing required key '" + key + "'");
        return convert<T>(key);
    }

    // Sub-object access; marks the key as used. Returns an empty object when absent.
    const json& section(const std::string& key);

    void finish() const;

    const std::string& context() const { return context_; }

private:
    template <typename T>
    T convert(const std::string& key) const
    {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(context_ + "." + key + ": " + e.what());
        }
    }

    const json& j_;
    std::string context_;
    std::set<std::string> used_;
};

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// Canonical form: keys sorted (nlohmann object ordering), no whitespace.
std::string canonical_json(const json& j);
std::string json_digest(const json& j);

// Little-endian append/read helpers for binary blobs.
void append_f32(std::vector<std::uint8_t>& out, float v);
void append_f64(std::vector<std::uint8_t>& out, double v);
float read_f32(std::span<const std::uint8_t> in, std::size_t offset);
double read_f64(std::span<const std::uint8_t> in, std::size_t offset);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const json& j, const std::string& context);

} // namespace beamkd
