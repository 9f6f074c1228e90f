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

#include "beamkd/dataset.hpp"

#include <algorithm>
#include <numeric>

namespace beamkd {

namespace {

BuildingBox vehicle_box(const VehicleState& v, const SceneConfig& scene)
{
    return {{v.position.x - 0.5 * scene.vehicle_length, v.position.y - 0.5 * scene.vehicle_width, 0.0},
            {v.position.x + 0.5 * scene.vehicle_length, v.position.y + 0.5 * scene.vehicle_width, scene.vehicle_height},
            0.0};
}

double normal01(Rng& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

double unit01(Rng& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng);
}

} // namespace

void DatasetConfig::validate() const
{
    if (window < 1)
        throw ConfigError("dataset.window must be >= 1");
    if (radar.max_points < 1)
        throw ConfigError("dataset.radar.max_points must be >= 1");
    if (radar.min_returns < 1 || radar.max_returns < radar.min_returns || radar.max_returns > 3)
        throw ConfigError("dataset.radar returns per vehicle must satisfy 1 <= min <= max <= 3");
    if (!(radar.fov_deg > 0.0 && radar.fov_deg <= 360.0) || !(radar.max_range_m > 0.0))
        throw ConfigError("dataset.radar field of view and range must be positive");
    if (radar.velocity_sigma < 0 || radar.azimuth_sigma_deg < 0 || radar.altitude_sigma_deg < 0 || radar.depth_sigma_m < 0 ||
        radar.clutter_max < 0 || !(radar.clutter_prob >= 0.0 && radar.clutter_prob <= 1.0))
        throw ConfigError("dataset.radar noise and clutter settings must be non-negative");
    if (grid.width < 1 || grid.height < 1 || !(grid.cell_size > 0.0) || !(grid.falloff_m >= 0.0))
        throw ConfigError("dataset.grid needs positive dimensions");
    if (gps.slots < 1 || gps.position_sigma_m < 0 || gps.velocity_sigma < 0)
        throw ConfigError("dataset.gps needs >= 1 slot and non-negative noise");
    if (episodes < 1)
        throw ConfigError("dataset.episodes must be >= 1");
    double total = 0.0;
    for (double f : split_fractions) {
        if (!(f >= 0.0))
            throw ConfigError("dataset.split_fractions must be non-negative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("dataset.split_fractions must sum to 1");
}

RadarFrame highest_point_sampling(const std::vector<RadarPoint>& raw, int k)
{
    if (k < 1)
        throw std::invalid_argument("HPS needs K >= 1");
    std::vector<std::size_t> keep(raw.size());
    std::iota(keep.begin(), keep.end(), 0);
    if (raw.size() > static_cast<std::size_t>(k)) {
        std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) { return raw[a][2] > raw[b][2]; });
        keep.resize(static_cast<std::size_t>(k));
        std::sort(keep.begin(), keep.end());
    }
    RadarFrame f;
    f.points.assign(static_cast<std::size_t>(k), RadarPoint{0.0, 0.0, 0.0, 0.0});
    f.valid.assign(static_cast<std::size_t>(k), false);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        f.points[i] = raw[keep[i]];
        f.valid[i] = true;
    }
    return f;
}

std::vector<RadarPoint> radar_returns(const std::vector<VehicleState>& vehicles, const std::vector<BuildingBox>& buildings,
                                      const Vec3& radar_position, const SceneConfig& scene, const RadarConfig& config,
                                      Rng& rng)
{
    std::vector<BuildingBox> bodies;
    bodies.reserve(vehicles.size());
    for (const auto& v : vehicles)
        bodies.push_back(vehicle_box(v, scene));

    auto blocked = [&](const Vec3& p, std::size_t self) {
        for (const auto& b : buildings)
            if (segment_intersects_box(radar_position, p, b))
                return true;
        if (config.occlusion_by_vehicles)
            for (std::size_t o = 0; o < bodies.size(); ++o)
                if (o != self && segment_intersects_box(radar_position, p, bodies[o]))
                    return true;
        return false;
    };

    std::vector<RadarPoint> raw;
    std::uniform_int_distribution<int> count_dist(config.min_returns, config.max_returns);
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        const auto& v = vehicles[i];
        const int returns = count_dist(rng);
        for (int r = 0; r < returns; ++r) {
            const double u1 = unit01(rng), u2 = unit01(rng), u3 = unit01(rng);
            const double n1 = normal01(rng), n2 = normal01(rng), n3 = normal01(rng), n4 = normal01(rng);
            Vec3 p = v.position;
            if (config.body_spread)
                p = {v.position.x + (u1 - 0.5) * scene.vehicle_length, v.position.y + (u2 - 0.5) * scene.vehicle_width,
                     u3 * scene.vehicle_height};
            const Vec3 d = p - radar_position;
            const double range = d.norm();
            const double az = rad2deg(std::atan2(d.x, d.y));
            if (range <= 0.0 || range > config.max_range_m || std::abs(az) > 0.5 * config.fov_deg)
                continue;
            if (blocked(p, i))
                continue;
            const double alt = rad2deg(std::atan2(d.z, std::hypot(d.x, d.y)));
            const double radial = v.velocity.dot(d) / range;
            raw.push_back({radial + config.velocity_sigma * n1, az + config.azimuth_sigma_deg * n2,
                           alt + config.altitude_sigma_deg * n3, std::max(1e-3, range + config.depth_sigma_m * n4)});
        }
    }
    for (int c = 0; c < config.clutter_max; ++c) {
        const double keep = unit01(rng);
        const double az = (unit01(rng) - 0.5) * std::min(config.fov_deg, 180.0);
        const double alt = -30.0 + 60.0 * unit01(rng);
        const double depth = 5.0 + (config.max_range_m - 5.0) * unit01(rng);
        const double vel = config.velocity_sigma * normal01(rng);
        if (keep < config.clutter_prob)
            raw.push_back({vel, az, alt, depth});
    }
    std::stable_sort(raw.begin(), raw.end(), [](const RadarPoint& a, const RadarPoint& b) { return a[1] < b[1]; });
    return raw;
}

RadarFrame synthesize_radar(const std::vector<VehicleState>& vehicles, const std::vector<BuildingBox>& buildings,
                            const Vec3& radar_position, const SceneConfig& scene, const RadarConfig& config, Rng& rng)
{
    return highest_point_sampling(radar_returns(vehicles, buildings, radar_position, scene, config, rng), config.max_points);
}

BevGrid synthesize_bev(const std::vector<VehicleState>& vehicles, const std::vector<BuildingBox>& buildings,
                       const SceneConfig& scene, const GridConfig& grid)
{
    BevGrid g;
    g.height = grid.height;
    g.width = grid.width;
    g.cell_size = grid.cell_size;
    g.occupancy.assign(static_cast<std::size_t>(grid.height * grid.width), 0.0);

    auto paint = [&](double x0, double x1, double y0, double y1) {
        for (int r = 0; r < grid.height; ++r) {
            const double cy0 = grid.y_min + r * grid.cell_size;
            const double cy1 = cy0 + grid.cell_size;
            for (int c = 0; c < grid.width; ++c) {
                const double cx0 = grid.x_min + c * grid.cell_size;
                const double cx1 = cx0 + grid.cell_size;
                double value = 0.0;
                if (x0 < cx1 && x1 > cx0 && y0 < cy1 && y1 > cy0) {
                    value = 1.0;
                } else if (grid.falloff_m > 0.0) {
                    const double mx = 0.5 * (cx0 + cx1), my = 0.5 * (cy0 + cy1);
                    const double dx = std::max({x0 - mx, 0.0, mx - x1});
                    const double dy = std::max({y0 - my, 0.0, my - y1});
                    value = std::max(0.0, 1.0 - std::hypot(dx, dy) / grid.falloff_m);
                }
                auto& cell = g.occupancy[static_cast<std::size_t>(r * grid.width + c)];
                cell = std::clamp(std::max(cell, value), 0.0, 1.0);
            }
        }
    };

    if (grid.include_buildings)
        for (const auto& b : buildings)
            paint(b.min_corner.x, b.max_corner.x, b.min_corner.y, b.max_corner.y);
    for (const auto& v : vehicles)
        paint(v.position.x - 0.5 * scene.vehicle_length, v.position.x + 0.5 * scene.vehicle_length,
              v.position.y - 0.5 * scene.vehicle_width, v.position.y + 0.5 * scene.vehicle_width);
    return g;
}

GpsFrame synthesize_gps(const std::vector<VehicleState>& vehicles, const GpsConfig& config, Rng& rng)
{
    GpsFrame f;
    f.slots.assign(static_cast<std::size_t>(config.slots), {0.0, 0.0, 0.0, 0.0});
    f.valid.assign(static_cast<std::size_t>(config.slots), false);
    for (const auto& v : vehicles) {
        const double n1 = normal01(rng), n2 = normal01(rng), n3 = normal01(rng), n4 = normal01(rng);
        if (v.id < 0 || v.id >= config.slots)
            continue;
        const auto slot = static_cast<std::size_t>(v.id);
        f.slots[slot] = {v.position.x + config.position_sigma_m * n1, v.position.y + config.position_sigma_m * n2,
                         v.velocity.x + config.velocity_sigma * n3, v.velocity.y + config.velocity_sigma * n4};
        f.valid[slot] = true;
    }
    return f;
}

SampleShape sample_shape(const DatasetConfig& c, int beams)
{
    return {c.window, c.radar.max_points, c.grid.height, c.grid.width, c.gps.slots, beams};
}

std::vector<Sample> build_samples(const Episode& episode, int episode_id, const Codebook& codebook,
                                  const ChannelConfig& channel, const DatasetConfig& config)
{
    const int p = config.window;
    const int length = static_cast<int>(episode.frames.size());
    if (length <= p)
        throw DataError("episode of " + std::to_string(length) + " frames is too short for window " + std::to_string(p));

    const auto& scene = episode.config;
    const std::uint64_t seed = scene.seed;
    const PathTracer tracer(environment_of(episode), scene.bs_position, channel.max_reflections);
    const SampleShape shape = sample_shape(config, codebook.size());

    struct FrameFeatures {
        std::vector<float> radar, radar_mask, bev, gps, gps_mask;
    };
    std::vector<FrameFeatures> feats(static_cast<std::size_t>(length));
    for (int k = 0; k < length; ++k) {
        const auto& vehicles = episode.frames[static_cast<std::size_t>(k)].vehicles;
        Rng radar_rng(mix_seed(seed, static_cast<std::uint64_t>(k), 0x4ADA));
        Rng gps_rng(mix_seed(seed, static_cast<std::uint64_t>(k), 0x6B5));
        const RadarFrame radar = synthesize_radar(vehicles, episode.buildings, scene.bs_position, scene, config.radar, radar_rng);
        const BevGrid bev = synthesize_bev(vehicles, episode.buildings, scene, config.grid);
        const GpsFrame gps = synthesize_gps(vehicles, config.gps, gps_rng);
        auto& f = feats[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < radar.points.size(); ++i) {
            for (double v : radar.points[i])
                f.radar.push_back(static_cast<float>(v));
            f.radar_mask.push_back(radar.valid[i] ? 1.0f : 0.0f);
        }
        for (double v : bev.occupancy)
            f.bev.push_back(static_cast<float>(v));
        for (std::size_t i = 0; i < gps.slots.size(); ++i) {
            for (double v : gps.slots[i])
                f.gps.push_back(static_cast<float>(v));
            f.gps_mask.push_back(gps.valid[i] ? 1.0f : 0.0f);
        }
    }

    // Labels for steps P..L-1; vehicles without any in-sector path are left out of the sum.
    const std::uint64_t shadow_seed = mix_seed(seed, 0x5AD);
    std::vector<std::vector<float>> rss(static_cast<std::size_t>(length));
    for (int k = p; k < length; ++k) {
        const auto& frame = episode.frames[static_cast<std::size_t>(k)];
        const Eigen::MatrixXd m = rss_matrix(frame, tracer, codebook, channel, shadow_seed, k);
        std::vector<double> sum(static_cast<std::size_t>(codebook.size()), 0.0);
        int covered = 0;
        for (Eigen::Index v = 0; v < m.rows(); ++v) {
            if (m.row(v).unaryExpr([](double x) { return is_no_coverage(x) ? 0.0 : 1.0; }).sum() == 0.0)
                continue;
            ++covered;
            for (Eigen::Index b = 0; b < m.cols(); ++b)
                sum[static_cast<std::size_t>(b)] += m(v, b);
        }
        if (covered == 0)
            continue;
        auto& out = rss[static_cast<std::size_t>(k)];
        out.reserve(sum.size());
        for (double s : sum)
            out.push_back(static_cast<float>(s));
    }

    std::vector<Sample> samples;
    for (int t = p - 1; t + 1 < length; ++t) {
        const auto& target = rss[static_cast<std::size_t>(t + 1)];
        if (target.empty())
            continue;
        Sample s;
        s.episode_id = episode_id;
        s.t = t;
        s.rss_vector = target;
        s.label = optimal_beam(std::span<const float>(s.rss_vector));
        for (int k = t - p + 1; k <= t; ++k) {
            const auto& f = feats[static_cast<std::size_t>(k)];
            s.radar_points.insert(s.radar_points.end(), f.radar.begin(), f.radar.end());
            s.radar_mask.insert(s.radar_mask.end(), f.radar_mask.begin(), f.radar_mask.end());
            s.bev.insert(s.bev.end(), f.bev.begin(), f.bev.end());
            s.gps.insert(s.gps.end(), f.gps.begin(), f.gps.end());
            s.gps_mask.insert(s.gps_mask.end(), f.gps_mask.begin(), f.gps_mask.end());
        }
        samples.push_back(std::move(s));
    }
    (void)shape;
    return samples;
}

Split split_dataset(const std::vector<Sample>& samples, const std::array<double, 3>& fractions, std::uint64_t seed)
{
    if (samples.empty())
        throw DataError("cannot split an empty sample set");
    double total = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0))
            throw std::invalid_argument("split fractions must be non-negative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");

    std::vector<int> episodes;
    std::map<int, std::vector<int>> members;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int e = samples[i].episode_id;
        if (!members.contains(e))
            episodes.push_back(e);
        members[e].push_back(static_cast<int>(i));
    }
    Rng rng(mix_seed(seed, 0x5917));
    std::shuffle(episodes.begin(), episodes.end(), rng);

    std::vector<int> order;
    order.reserve(samples.size());
    for (int e : episodes)
        order.insert(order.end(), members[e].begin(), members[e].end());

    const auto n = static_cast<long>(order.size());
    const long n_train = std::min(n, std::lround(fractions[0] * static_cast<double>(n)));
    const long n_val = std::min(n - n_train, std::lround(fractions[1] * static_cast<double>(n)));
    Split s;
    s.train.assign(order.begin(), order.begin() + n_train);
    s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    s.test.assign(order.begin() + n_train + n_val, order.end());
    return s;
}

namespace {

constexpr std::size_t kAlign = 64;

struct SectionSpec {
    std::string name;
    std::vector<int> shape;  // leading dimension is the sample count
    std::size_t per_sample;
};

std::vector<SectionSpec> sections_for(const SampleShape& s, int n)
{
    const int P = s.window, K = s.radar_points, H = s.grid_height, W = s.grid_width, S = s.gps_slots, B = s.beams;
    auto sz = [](std::initializer_list<int> dims) {
        std::size_t v = 1;
        for (int d : dims)
            v *= static_cast<std::size_t>(d);
        return v;
    };
    return {
        {"radar_points", {n, P, K, 4}, sz({P, K, 4})},
        {"radar_mask", {n, P, K}, sz({P, K})},
        {"bev", {n, P, H, W}, sz({P, H, W})},
        {"gps", {n, P, S, 4}, sz({P, S, 4})},
        {"gps_mask", {n, P, S}, sz({P, S})},
        {"rss", {n, B}, sz({B})},
        {"label", {n}, 1},
        {"episode_id", {n}, 1},
        {"t", {n}, 1},
    };
}

std::vector<float>& field(Sample& s, const std::string& name)
{
    if (name == "radar_points")
        return s.radar_points;
    if (name == "radar_mask")
        return s.radar_mask;
    if (name == "bev")
        return s.bev;
    if (name == "gps")
        return s.gps;
    if (name == "gps_mask")
        return s.gps_mask;
    return s.rss_vector;
}

void pad_to(std::vector<std::uint8_t>& blob, std::size_t align)
{
    while (blob.size() % align != 0)
        blob.push_back(0);
}

json shape_to_json(const SampleShape& s)
{
    return {{"window", s.window},       {"radar_points", s.radar_points}, {"grid_height", s.grid_height},
            {"grid_width", s.grid_width}, {"gps_slots", s.gps_slots},       {"beams", s.beams}};
}

} // namespace

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir)
{
    const auto& m = dataset.manifest;
    const int n = static_cast<int>(dataset.samples.size());
    std::filesystem::create_directories(dir);

    std::vector<std::uint8_t> blob;
    json sections = json::array();
    for (const auto& sec : sections_for(m.shape, n)) {
        pad_to(blob, kAlign);
        const std::size_t offset = blob.size();
        for (const auto& s : dataset.samples) {
            if (sec.name == "label" || sec.name == "episode_id" || sec.name == "t") {
                const int v = sec.name == "label" ? s.label : (sec.name == "episode_id" ? s.episode_id : s.t);
                append_f32(blob, static_cast<float>(v));
                continue;
            }
            const auto& values = field(const_cast<Sample&>(s), sec.name);
            if (values.size() != sec.per_sample)
                throw DataError("sample field '" + sec.name + "' does not match the declared shape");
            for (float v : values)
                append_f32(blob, v);
        }
        sections.push_back({{"name", sec.name},
                            {"dtype", "float32"},
                            {"shape", sec.shape},
                            {"offset", offset},
                            {"nbytes", blob.size() - offset}});
    }
    pad_to(blob, kAlign);
    const std::size_t digest_offset = blob.size();
    const Sha256 digest = sha256(blob);
    blob.insert(blob.end(), digest.begin(), digest.end());

    const json manifest{
        {"format", "beamkd-dataset"},
        {"version", kDatasetFormatVersion},
        {"byte_order", "little-endian"},
        {"alignment", kAlign},
        {"counts",
         {{"samples", n},
          {"train", m.split.train.size()},
          {"val", m.split.val.size()},
          {"test", m.split.test.size()}}},
        {"shape", shape_to_json(m.shape)},
        {"sections", std::move(sections)},
        {"digest_offset", digest_offset},
        {"tensors_sha256", to_hex(digest)},
        {"split", {{"train", m.split.train}, {"val", m.split.val}, {"test", m.split.test}}},
        {"seed", m.seed},
        {"config_digest", m.config_digest},
        {"codebook", {{"size", m.codebook_size}, {"spec_digest", m.codebook_digest}}},
    };
    write_file_bytes(dir / "tensors.bin", blob);
    write_json_file(dir / "manifest.json", manifest);
}

Dataset read_dataset(const std::filesystem::path& dir)
{
    json manifest;
    try {
        manifest = read_json_file(dir / "manifest.json");
    } catch (const ConfigError& e) {
        throw DataError(e.what());
    }
    if (manifest.value("format", "") != "beamkd-dataset")
        throw DataError("not a beamkd dataset: " + dir.string());
    if (manifest.value("version", -1) != kDatasetFormatVersion)
        throw VersionError("dataset version " + manifest.value("version", json(-1)).dump() + " is not supported (expected " +
                           std::to_string(kDatasetFormatVersion) + ")");

    Dataset ds;
    auto& m = ds.manifest;
    try {
        const auto& sh = manifest.at("shape");
        m.shape = {sh.at("window").get<int>(),    sh.at("radar_points").get<int>(), sh.at("grid_height").get<int>(),
                   sh.at("grid_width").get<int>(), sh.at("gps_slots").get<int>(),    sh.at("beams").get<int>()};
        m.split.train = manifest.at("split").at("train").get<std::vector<int>>();
        m.split.val = manifest.at("split").at("val").get<std::vector<int>>();
        m.split.test = manifest.at("split").at("test").get<std::vector<int>>();
        m.seed = manifest.at("seed").get<std::uint64_t>();
        m.config_digest = manifest.at("config_digest").get<std::string>();
        m.codebook_size = manifest.at("codebook").at("size").get<int>();
        m.codebook_digest = manifest.at("codebook").at("spec_digest").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed dataset manifest: ") + e.what());
    }

    const int n = manifest.at("counts").at("samples").get<int>();
    const auto blob = read_file_bytes(dir / "tensors.bin");
    const auto digest_offset = manifest.at("digest_offset").get<std::size_t>();
    if (blob.size() < digest_offset + 32)
        throw TruncatedError("tensors.bin is truncated: " + std::to_string(blob.size()) + " bytes, expected " +
                             std::to_string(digest_offset + 32));
    if (blob.size() != digest_offset + 32)
        throw DataError("tensors.bin has trailing bytes");
    const Sha256 actual = sha256(std::span<const std::uint8_t>(blob.data(), digest_offset));
    if (!std::equal(actual.begin(), actual.end(), blob.begin() + static_cast<std::ptrdiff_t>(digest_offset)) ||
        to_hex(actual) != manifest.at("tensors_sha256").get<std::string>())
        throw DigestError("tensors.bin digest mismatch");

    ds.samples.resize(static_cast<std::size_t>(n));
    const auto specs = sections_for(m.shape, n);
    const auto& declared = manifest.at("sections");
    if (declared.size() != specs.size())
        throw DataError("dataset manifest declares an unexpected section list");
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto& sec = specs[k];
        if (declared[k].at("name").get<std::string>() != sec.name)
            throw DataError("dataset section order mismatch at " + sec.name);
        std::size_t off = declared[k].at("offset").get<std::size_t>();
        if (off + static_cast<std::size_t>(n) * sec.per_sample * 4 > digest_offset)
            throw TruncatedError("section " + sec.name + " runs past the end of the data");
        for (auto& s : ds.samples) {
            if (sec.name == "label" || sec.name == "episode_id" || sec.name == "t") {
                const int v = static_cast<int>(read_f32(blob, off));
                off += 4;
                (sec.name == "label" ? s.label : (sec.name == "episode_id" ? s.episode_id : s.t)) = v;
                continue;
            }
            auto& values = field(s, sec.name);
            values.resize(sec.per_sample);
            for (auto& v : values) {
                v = read_f32(blob, off);
                off += 4;
            }
        }
    }
    return ds;
}

std::vector<int> label_histogram(const std::vector<Sample>& samples, int beams)
{
    std::vector<int> h(static_cast<std::size_t>(beams), 0);
    for (const auto& s : samples)
        if (s.label >= 0 && s.label < beams)
            ++h[static_cast<std::size_t>(s.label)];
    return h;
}

double top_label_coverage(const std::vector<int>& histogram, int top)
{
    auto sorted = histogram;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    if (total == 0.0)
        return 0.0;
    const auto k = std::min(sorted.size(), static_cast<std::size_t>(std::max(top, 0)));
    return std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / total;
}

Eigen::MatrixXd radar_features(const std::vector<Sample>& samples, const std::vector<int>& indices)
{
    if (indices.empty())
        return {};
    const auto& first = samples[static_cast<std::size_t>(indices.front())];
    const auto points = static_cast<Eigen::Index>(first.radar_mask.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(indices.size()), points * 5);
    constexpr double scale[4] = {20.0, 90.0, 45.0, 100.0};
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto& s = samples[static_cast<std::size_t>(indices[r])];
        for (Eigen::Index p = 0; p < points; ++p) {
            for (int c = 0; c < 4; ++c)
                x(static_cast<Eigen::Index>(r), p * 5 + c) = s.radar_points[static_cast<std::size_t>(p * 4 + c)] / scale[c];
            x(static_cast<Eigen::Index>(r), p * 5 + 4) = s.radar_mask[static_cast<std::size_t>(p)];
        }
    }
    return x;
}

Eigen::MatrixXd bev_features(const std::vector<Sample>& samples, const std::vector<int>& indices)
{
    if (indices.empty())
        return {};
    const auto cols = static_cast<Eigen::Index>(samples[static_cast<std::size_t>(indices.front())].bev.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(indices.size()), cols);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto& s = samples[static_cast<std::size_t>(indices[r])];
        for (Eigen::Index c = 0; c < cols; ++c)
            x(static_cast<Eigen::Index>(r), c) = s.bev[static_cast<std::size_t>(c)];
    }
    return x;
}

Eigen::MatrixXd gps_features(const std::vector<Sample>& samples, const std::vector<int>& indices)
{
    if (indices.empty())
        return {};
    const auto slots = static_cast<Eigen::Index>(samples[static_cast<std::size_t>(indices.front())].gps_mask.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(indices.size()), slots * 5);
    constexpr double scale[4] = {100.0, 10.0, 20.0, 5.0};
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto& s = samples[static_cast<std::size_t>(indices[r])];
        for (Eigen::Index p = 0; p < slots; ++p) {
            for (int c = 0; c < 4; ++c)
                x(static_cast<Eigen::Index>(r), p * 5 + c) = s.gps[static_cast<std::size_t>(p * 4 + c)] / scale[c];
            x(static_cast<Eigen::Index>(r), p * 5 + 4) = s.gps_mask[static_cast<std::size_t>(p)];
        }
    }
    return x;
}

DatasetConfig dataset_config_from_json(const json& j)
{
    DatasetConfig c;
    StrictObject o(j, "dataset");
    c.window = o.get("window", c.window);
    c.episodes = o.get("episodes", c.episodes);
    c.seed = o.get("seed", c.seed);
    if (o.has("split_fractions")) {
        const auto f = o.require<std::vector<double>>("split_fractions");
        if (f.size() != 3)
            throw ConfigError("dataset.split_fractions needs three entries");
        c.split_fractions = {f[0], f[1], f[2]};
    }

    StrictObject r(o.section("radar"), "dataset.radar");
    auto& rc = c.radar;
    rc.max_points = r.get("max_points", rc.max_points);
    rc.fov_deg = r.get("fov_deg", rc.fov_deg);
    rc.max_range_m = r.get("max_range_m", rc.max_range_m);
    rc.min_returns = r.get("min_returns", rc.min_returns);
    rc.max_returns = r.get("max_returns", rc.max_returns);
    rc.body_spread = r.get("body_spread", rc.body_spread);
    rc.occlusion_by_vehicles = r.get("occlusion_by_vehicles", rc.occlusion_by_vehicles);
    rc.velocity_sigma = r.get("velocity_sigma", rc.velocity_sigma);
    rc.azimuth_sigma_deg = r.get("azimuth_sigma_deg", rc.azimuth_sigma_deg);
    rc.altitude_sigma_deg = r.get("altitude_sigma_deg", rc.altitude_sigma_deg);
    rc.depth_sigma_m = r.get("depth_sigma_m", rc.depth_sigma_m);
    rc.clutter_max = r.get("clutter_max", rc.clutter_max);
    rc.clutter_prob = r.get("clutter_prob", rc.clutter_prob);
    r.finish();

    StrictObject g(o.section("grid"), "dataset.grid");
    auto& gc = c.grid;
    gc.x_min = g.get("x_min", gc.x_min);
    gc.y_min = g.get("y_min", gc.y_min);
    gc.cell_size = g.get("cell_size", gc.cell_size);
    gc.width = g.get("width", gc.width);
    gc.height = g.get("height", gc.height);
    gc.falloff_m = g.get("falloff_m", gc.falloff_m);
    gc.include_buildings = g.get("include_buildings", gc.include_buildings);
    g.finish();

    StrictObject p(o.section("gps"), "dataset.gps");
    c.gps.slots = p.get("slots", c.gps.slots);
    c.gps.position_sigma_m = p.get("position_sigma_m", c.gps.position_sigma_m);
    c.gps.velocity_sigma = p.get("velocity_sigma", c.gps.velocity_sigma);
    p.finish();
    o.finish();
    return c;
}

json to_json(const DatasetConfig& c)
{
    const auto& r = c.radar;
    const auto& g = c.grid;
    return {{"window", c.window},
            {"episodes", c.episodes},
            {"seed", c.seed},
            {"split_fractions", c.split_fractions},
            {"radar",
             {{"max_points", r.max_points},
              {"fov_deg", r.fov_deg},
              {"max_range_m", r.max_range_m},
              {"min_returns", r.min_returns},
              {"max_returns", r.max_returns},
              {"body_spread", r.body_spread},
              {"occlusion_by_vehicles", r.occlusion_by_vehicles},
              {"velocity_sigma", r.velocity_sigma},
              {"azimuth_sigma_deg", r.azimuth_sigma_deg},
              {"altitude_sigma_deg", r.altitude_sigma_deg},
              {"depth_sigma_m", r.depth_sigma_m},
              {"clutter_max", r.clutter_max},
              {"clutter_prob", r.clutter_prob}}},
            {"grid",
             {{"x_min", g.x_min},
              {"y_min", g.y_min},
              {"cell_size", g.cell_size},
              {"width", g.width},
              {"height", g.height},
              {"falloff_m", g.falloff_m},
              {"include_buildings", g.include_buildings}}},
            {"gps",
             {{"slots", c.gps.slots}, {"position_sigma_m", c.gps.position_sigma_m}, {"velocity_sigma", c.gps.velocity_sigma}}}};
}

} // namespace beamkd
