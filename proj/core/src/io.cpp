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

#include "beamkd/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace beamkd {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

StrictObject::StrictObject(const json& j, std::string context)
    : j_(j), context_(std::move(context))
{
    if (!j_.is_object())
        throw ConfigError(context_ + ": expected a JSON object");
}

bool StrictObject::has(const std::string& key) const { return j_.contains(key); }

const json& StrictObject::section(const std::string& key)
{
    static const json empty = json::object();
    used_.insert(key);
    if (!j_.contains(key))
        return empty;
    const json& s = j_.at(key);
    if (!s.is_object())
        throw ConfigError(context_ + "." + key + ": expected a JSON object");
    return s;
}

void StrictObject::finish() const
{
    for (const auto& [key, value] : j_.items())
        if (!used_.contains(key))
            throw ConfigError(context_ + ": unknown key '" + key + "'");
}

Sha256 sha256(std::span<const std::uint8_t> bytes)
{
    Sha256 out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
        throw std::runtime_error("SHA-256 computation failed");
    return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (auto b : bytes)
        os << std::setw(2) << static_cast<int>(b);
    return os.str();
}

std::string sha256_hex(std::string_view text)
{
    auto d = sha256({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    return to_hex(d);
}

std::string canonical_json(const json& j) { return j.dump(); }

std::string json_digest(const json& j) { return sha256_hex(canonical_json(j)); }

void append_f32(std::vector<std::uint8_t>& out, float v)
{
    auto bits = std::bit_cast<std::array<std::uint8_t, 4>>(v);
    out.insert(out.end(), bits.begin(), bits.end());
}

void append_f64(std::vector<std::uint8_t>& out, double v)
{
    auto bits = std::bit_cast<std::array<std::uint8_t, 8>>(v);
    out.insert(out.end(), bits.begin(), bits.end());
}

float read_f32(std::span<const std::uint8_t> in, std::size_t offset)
{
    std::array<std::uint8_t, 4> bits{};
    std::memcpy(bits.data(), in.data() + offset, 4);
    return std::bit_cast<float>(bits);
}

double read_f64(std::span<const std::uint8_t> in, std::size_t offset)
{
    std::array<std::uint8_t, 8> bits{};
    std::memcpy(bits.data(), in.data() + offset, 8);
    return std::bit_cast<double>(bits);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw DataError("short write to " + path.string());
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j)
{
    write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw DataError("cannot write " + path.string());
    out << text;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json& j, const std::string& context)
{
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(context + ": expected [x, y, z]");
    Vec3 v{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    if (!v.finite())
        throw ConfigError(context + ": non-finite component");
    return v;
}

} // namespace beamkd
