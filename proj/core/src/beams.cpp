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

#include "beamkd/beams.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace beamkd {

void ArrayGeometry::validate() const
{
    if (rows < 1 || cols < 1)
        throw ConfigError("array geometry needs at least one element");
    if (!(element_spacing_wavelengths > 0.0))
        throw ConfigError("array element spacing must be > 0");
    if (!(carrier_hz > 0.0))
        throw ConfigError("array carrier frequency must be > 0");
}

SteeringVector steering_vector(const ArrayGeometry& geom, double azimuth_deg, double elevation_deg)
{
    if (!(std::abs(azimuth_deg) <= 90.0) || !(std::abs(elevation_deg) <= 90.0))
        throw std::invalid_argument("steering direction outside the array half-space");
    const double az = deg2rad(azimuth_deg);
    const double el = deg2rad(elevation_deg);
    const double vertical = std::sin(el);
    const double horizontal = std::cos(el) * std::sin(az);
    const double k = 2.0 * std::numbers::pi * geom.element_spacing_wavelengths;

    SteeringVector a;
    a.entries.resize(geom.size());
    for (int m = 0; m < geom.rows; ++m)
        for (int n = 0; n < geom.cols; ++n)
            a.entries[m * geom.cols + n] = std::polar(1.0, k * (m * vertical + n * horizontal));
    return a;
}

double array_response_db(const CVector& weights, const CVector& steering)
{
    if (weights.size() != steering.size())
        throw std::invalid_argument("array_response_db: dimension mismatch");
    const double mag = std::abs(weights.dot(steering));  // dot() conjugates its left operand
    if (mag == 0.0)
        return kNoCoverage;
    return 10.0 * std::log10(mag);
}

double beam_similarity(const CVector& wi, const CVector& wj)
{
    if (wi.size() != wj.size())
        throw std::invalid_argument("beam_similarity: dimension mismatch");
    const double ni = wi.norm();
    const double nj = wj.norm();
    if (ni == 0.0 || nj == 0.0)
        throw std::invalid_argument("beam_similarity: zero-norm weight vector");
    return std::min(1.0, std::abs(wi.dot(wj)) / (ni * nj));
}

CodebookSpec CodebookSpec::default_spec()
{
    CodebookSpec s;
    s.multi_beam = {
        {2, 1, {0, 0}, true}, {2, 1, {1, 1}, true}, {2, 2, {0, 0}, true},
        {2, 2, {1, 1}, true}, {2, 1, {0, 1}, true}, {2, 1, {1, 0}, true},
        {3, 5, {0, 0, 0}, false}, {3, 5, {1, 1, 1}, false}, {3, 6, {0, 0, 0}, false},
        {3, 6, {1, 1, 1}, false}, {3, 7, {0, 0, 0}, false}, {3, 7, {1, 1, 1}, false},
    };
    return s;
}

Codebook build_codebook(const CodebookSpec& spec)
{
    spec.geometry.validate();
    if (spec.azimuth_count < 1 || spec.elevation_count < 1)
        throw ConfigError("codebook grid needs at least one azimuth and one elevation");
    if (!(spec.azimuth_span_deg > 0.0 && spec.azimuth_span_deg <= 180.0) ||
        !(spec.elevation_span_deg > 0.0 && spec.elevation_span_deg <= 180.0))
        throw ConfigError("codebook sector spans must lie in (0, 180] degrees");

    // Grid points are cell centres of the sector.
    auto grid_direction = [&](int col, int row) {
        const double az = -0.5 * spec.azimuth_span_deg + (col + 0.5) * spec.azimuth_span_deg / spec.azimuth_count;
        const double el = -0.5 * spec.elevation_span_deg + (row + 0.5) * spec.elevation_span_deg / spec.elevation_count;
        return Direction{az, el};
    };

    std::vector<std::vector<std::pair<int, int>>> groups;  // (col, row) per lobe
    for (int row = 0; row < spec.elevation_count; ++row)
        for (int col = 0; col < spec.azimuth_count; ++col)
            groups.push_back({{col, row}});

    for (const auto& rule : spec.multi_beam) {
        if (rule.components < 2 || rule.components > 3)
            throw ConfigError("multi-beam rules combine 2 or 3 lobes");
        if (static_cast<int>(rule.elevation_rows.size()) != rule.components)
            throw ConfigError("multi-beam rule needs one elevation row per lobe");
        for (int r : rule.elevation_rows)
            if (r < 0 || r >= spec.elevation_count)
                throw ConfigError("multi-beam rule references a missing elevation row");
        for (int base = 0; base < spec.azimuth_count; ++base) {
            std::vector<std::pair<int, int>> lobes;
            bool fits = true;
            for (int k = 0; k < rule.components; ++k) {
                int col = base + k * rule.azimuth_stride;
                if (rule.wrap)
                    col = ((col % spec.azimuth_count) + spec.azimuth_count) % spec.azimuth_count;
                else if (col < 0 || col >= spec.azimuth_count)
                    fits = false;
                lobes.emplace_back(col, rule.elevation_rows[static_cast<std::size_t>(k)]);
            }
            if (fits)
                groups.push_back(std::move(lobes));
        }
    }

    std::set<std::vector<std::pair<int, int>>> seen;
    for (const auto& g : groups) {
        auto key = g;
        std::sort(key.begin(), key.end());
        if (std::adjacent_find(key.begin(), key.end()) != key.end())
            throw ConfigError("codebook spec repeats a direction inside one pattern");
        if (!seen.insert(key).second)
            throw ConfigError("codebook spec produces duplicate directions");
    }

    Codebook cb;
    cb.spec = spec;
    cb.patterns.reserve(groups.size());
    for (const auto& g : groups) {
        BeamPattern p;
        p.index = static_cast<int>(cb.patterns.size());
        p.weights = CVector::Zero(spec.geometry.size());
        for (auto [col, row] : g) {
            const Direction d = grid_direction(col, row);
            const auto a = steering_vector(spec.geometry, d.azimuth_deg, d.elevation_deg).entries;
            p.weights += a / a.norm();
            p.components.push_back(d);
        }
        const double n = p.weights.norm();
        if (n == 0.0)
            throw ConfigError("codebook pattern " + std::to_string(p.index) + " cancels to zero");
        p.weights /= n;
        cb.patterns.push_back(std::move(p));
    }
    return cb;
}

std::vector<double> similarity_table(const Codebook& codebook)
{
    const auto b = static_cast<std::size_t>(codebook.size());
    std::vector<double> table(b * b);
    for (std::size_t i = 0; i < b; ++i) {
        table[i * b + i] = 1.0;
        for (std::size_t j = i + 1; j < b; ++j) {
            const double s = beam_similarity(codebook.patterns[i], codebook.patterns[j]);
            table[i * b + j] = s;
            table[j * b + i] = s;
        }
    }
    return table;
}

ArrayGeometry array_geometry_from_json(const json& j)
{
    ArrayGeometry g;
    StrictObject o(j, "array");
    g.rows = o.get("rows", g.rows);
    g.cols = o.get("cols", g.cols);
    g.element_spacing_wavelengths = o.get("element_spacing_wavelengths", g.element_spacing_wavelengths);
    g.carrier_hz = o.get("carrier_hz", g.carrier_hz);
    o.finish();
    return g;
}

json to_json(const ArrayGeometry& g)
{
    return {{"rows", g.rows}, {"cols", g.cols}, {"element_spacing_wavelengths", g.element_spacing_wavelengths},
            {"carrier_hz", g.carrier_hz}};
}

CodebookSpec codebook_spec_from_json(const json& j)
{
    CodebookSpec s = CodebookSpec::default_spec();
    StrictObject o(j, "codebook");
    s.geometry = array_geometry_from_json(o.section("array"));
    s.azimuth_span_deg = o.get("azimuth_span_deg", s.azimuth_span_deg);
    s.elevation_span_deg = o.get("elevation_span_deg", s.elevation_span_deg);
    s.azimuth_count = o.get("azimuth_count", s.azimuth_count);
    s.elevation_count = o.get("elevation_count", s.elevation_count);
    if (o.has("multi_beam")) {
        s.multi_beam.clear();
        for (const auto& r : o.require<json>("multi_beam")) {
            StrictObject ro(r, "codebook.multi_beam[]");
            MultiBeamRule rule;
            rule.components = ro.require<int>("components");
            rule.azimuth_stride = ro.require<int>("azimuth_stride");
            rule.elevation_rows = ro.require<std::vector<int>>("elevation_rows");
            rule.wrap = ro.get("wrap", false);
            ro.finish();
            s.multi_beam.push_back(std::move(rule));
        }
    }
    o.finish();
    return s;
}

json to_json(const CodebookSpec& s)
{
    json rules = json::array();
    for (const auto& r : s.multi_beam)
        rules.push_back({{"components", r.components},
                         {"azimuth_stride", r.azimuth_stride},
                         {"elevation_rows", r.elevation_rows},
                         {"wrap", r.wrap}});
    return {{"array", to_json(s.geometry)},
            {"azimuth_span_deg", s.azimuth_span_deg},
            {"elevation_span_deg", s.elevation_span_deg},
            {"azimuth_count", s.azimuth_count},
            {"elevation_count", s.elevation_count},
            {"multi_beam", std::move(rules)}};
}

void write_codebook(const Codebook& codebook, const std::filesystem::path& stem)
{
    std::vector<std::uint8_t> blob;
    blob.reserve(static_cast<std::size_t>(codebook.size() * codebook.geometry().size()) * 16);
    json patterns = json::array();
    for (const auto& p : codebook.patterns) {
        for (const auto& w : p.weights) {
            append_f64(blob, w.real());
            append_f64(blob, w.imag());
        }
        json dirs = json::array();
        for (const auto& d : p.components)
            dirs.push_back({d.azimuth_deg, d.elevation_deg});
        patterns.push_back({{"index", p.index}, {"directions", std::move(dirs)}});
    }
    auto bin = stem;
    bin += ".bin";
    auto meta_path = stem;
    meta_path += ".json";
    write_file_bytes(bin, blob);
    const json meta{{"format", "beamkd-codebook"},
                    {"version", 1},
                    {"spec", to_json(codebook.spec)},
                    {"size", codebook.size()},
                    {"elements", codebook.geometry().size()},
                    {"weights_file", bin.filename().string()},
                    {"weights_layout", "pattern-major, element-minor, interleaved float64 (re, im), little-endian"},
                    {"weights_sha256", to_hex(sha256(blob))},
                    {"patterns", std::move(patterns)}};
    write_json_file(meta_path, meta);
}

Codebook read_codebook(const std::filesystem::path& stem)
{
    auto meta_path = stem;
    meta_path += ".json";
    const json meta = read_json_file(meta_path);
    if (meta.value("version", 0) != 1)
        throw VersionError("unsupported codebook version in " + meta_path.string());
    Codebook cb = build_codebook(codebook_spec_from_json(meta.at("spec")));
    const auto blob = read_file_bytes(meta_path.parent_path() / meta.at("weights_file").get<std::string>());
    const auto n = static_cast<std::size_t>(cb.geometry().size());
    if (blob.size() != static_cast<std::size_t>(cb.size()) * n * 16)
        throw TruncatedError("codebook weight file has the wrong size");
    if (to_hex(sha256(blob)) != meta.at("weights_sha256").get<std::string>())
        throw DigestError("codebook weight digest mismatch");
    std::size_t off = 0;
    for (auto& p : cb.patterns)
        for (Eigen::Index k = 0; k < p.weights.size(); ++k, off += 16)
            p.weights[k] = {read_f64(blob, off), read_f64(blob, off + 8)};
    return cb;
}

} // namespace beamkd
