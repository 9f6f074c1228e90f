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

#include "beamkd/scene.hpp"

#include <algorithm>
#include <numeric>

namespace beamkd {

namespace {

double standard_normal(Rng& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

double uniform(Rng& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    return lo == hi ? lo : u(rng);
}

std::vector<BuildingBox> layout_buildings(const SceneConfig& c)
{
    std::vector<BuildingBox> out;
    const auto& b = c.buildings;
    if (!b.enabled)
        return out;
    Rng rng(mix_seed(c.seed, 0xB0B0));
    const double near_front = -b.setback_m;
    const double far_front = c.road_width() + b.setback_m;
    for (int side = 0; side < 2; ++side) {
        for (double x = 0.0; x + b.length_m <= c.road_length + 1e-9; x += b.length_m + b.gap_m) {
            const double h = uniform(rng, b.height_min_m, b.height_max_m);
            BuildingBox box;
            if (side == 0) {
                box.min_corner = {x, near_front - b.depth_m, 0.0};
                box.max_corner = {x + b.length_m, near_front, h};
            } else {
                box.min_corner = {x, far_front, 0.0};
                box.max_corner = {x + b.length_m, far_front + b.depth_m, h};
            }
            box.reflection_loss_db = b.reflection_loss_db;
            out.push_back(box);
        }
    }
    return out;
}

} // namespace

void SceneConfig::validate() const
{
    if (lane_count != 2 && lane_count != 3)
        throw ConfigError("scene.lane_count must be 2 or 3");
    if (!(lane_width > vehicle_width) || !(vehicle_width > 0.0))
        throw ConfigError("scene.lane_width must exceed vehicle_width > 0");
    if (!(road_length > 0.0) || !(min_spacing >= vehicle_length) || !(vehicle_length > 0.0))
        throw ConfigError("scene.road_length and min_spacing must be positive, min_spacing >= vehicle_length");
    if (vehicle_count < 1)
        throw ConfigError("scene.vehicle_count must be >= 1");
    const long slots = static_cast<long>(std::floor(road_length / min_spacing));
    if (static_cast<long>(vehicle_count) > slots * lane_count)
        throw ConfigError("cannot place vehicles: " + std::to_string(vehicle_count) + " vehicles need more than " +
                          std::to_string(slots * lane_count) + " lane slots of " + std::to_string(min_spacing) + " m");
    if (vehicle_count > 40)
        throw ConfigError("scene.vehicle_count must be <= 40");
    if (!(time_step > 0.0))
        throw ConfigError("scene.time_step must be > 0");
    if (episode_length < 1 || episode_length > 200)
        throw ConfigError("scene.episode_length must be in [1, 200]");
    if (!(speed_min >= 0.0) || !(speed_max >= speed_min))
        throw ConfigError("scene speed range must satisfy 0 <= speed_min <= speed_max");
    if (!(speed_jitter >= 0.0) || !(lateral_noise >= 0.0) || !(lane_change_prob >= 0.0 && lane_change_prob <= 1.0))
        throw ConfigError("scene noise parameters must be non-negative, lane_change_prob in [0, 1]");
    if (!bs_position.finite())
        throw ConfigError("scene.bs_position must be finite");
    if (buildings.enabled && (!(buildings.length_m > 0.0) || !(buildings.depth_m > 0.0) ||
                              !(buildings.height_max_m >= buildings.height_min_m) || !(buildings.height_min_m > 0.0) ||
                              !(buildings.gap_m >= 0.0) || !(buildings.reflection_loss_db >= 0.0)))
        throw ConfigError("scene.buildings has an invalid dimension or loss");
}

Scene build_scene(const SceneConfig& config)
{
    config.validate();

    Scene scene;
    scene.config = config;
    scene.bs_position = config.bs_position;
    scene.buildings = layout_buildings(config);

    Rng rng(mix_seed(config.seed, 0x5CE7E));
    const int slots_per_lane = static_cast<int>(std::floor(config.road_length / config.min_spacing));
    std::vector<int> slots(static_cast<std::size_t>(slots_per_lane * config.lane_count));
    std::iota(slots.begin(), slots.end(), 0);
    std::shuffle(slots.begin(), slots.end(), rng);
    slots.resize(static_cast<std::size_t>(config.vehicle_count));
    std::sort(slots.begin(), slots.end());

    std::vector<double> lane_speed(static_cast<std::size_t>(config.lane_count));
    for (auto& s : lane_speed)
        s = uniform(rng, config.speed_min, config.speed_max);

    int id = 0;
    for (int slot : slots) {
        const int lane = slot / slots_per_lane;
        const int pos = slot % slots_per_lane;
        VehicleState v;
        v.id = id++;
        v.lane = lane;
        v.position = {(pos + 0.5) * config.min_spacing, config.lane_center(lane), config.vehicle_height};
        const double speed = std::clamp(lane_speed[static_cast<std::size_t>(lane)] + config.speed_jitter * standard_normal(rng),
                                        config.speed_min, config.speed_max);
        v.velocity = {speed, 0.0, 0.0};
        scene.vehicles.push_back(v);
    }
    return scene;
}

std::vector<VehicleState> step_vehicles(const std::vector<VehicleState>& frame, const SceneConfig& config, Rng& rng)
{
    std::vector<VehicleState> next;
    next.reserve(frame.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double max_off = config.max_lateral_offset();

    for (const auto& v : frame) {
        VehicleState n = v;

        n.position.x = v.position.x + v.velocity.x * config.time_step;
        if (n.position.x >= config.road_length)
            n.position.x = std::fmod(n.position.x, config.road_length);

        const double speed_noise = standard_normal(rng);
        n.velocity = {std::clamp(v.velocity.x + config.speed_jitter * speed_noise, config.speed_min, config.speed_max), 0.0, 0.0};

        double offset = v.position.y - config.lane_center(v.lane);
        const double change_draw = unit(rng);
        const double side_draw = unit(rng);
        if (config.lane_change_prob > 0.0 && change_draw < config.lane_change_prob) {
            int target = v.lane + (side_draw < 0.5 ? -1 : 1);
            if (target < 0 || target >= config.lane_count)
                target = v.lane + (target < 0 ? 1 : -1);
            n.lane = std::clamp(target, 0, config.lane_count - 1);
            offset = 0.0;
        }
        offset = std::clamp(0.8 * offset + config.lateral_noise * standard_normal(rng), -max_off, max_off);
        n.position.y = config.lane_center(n.lane) + offset;
        next.push_back(n);
    }
    return next;
}

Episode generate_episode(const SceneConfig& config)
{
    const Scene scene = build_scene(config);
    Episode ep;
    ep.config = config;
    ep.buildings = scene.buildings;
    ep.frames.reserve(static_cast<std::size_t>(config.episode_length));
    ep.frames.push_back({0.0, scene.vehicles});

    Rng rng(mix_seed(config.seed, 0x40B1));
    for (int k = 1; k < config.episode_length; ++k)
        ep.frames.push_back({k * config.time_step, step_vehicles(ep.frames.back().vehicles, config, rng)});
    return ep;
}

bool inside_lane(const VehicleState& v, const SceneConfig& config)
{
    if (v.lane < 0 || v.lane >= config.lane_count)
        return false;
    if (!(v.position.x >= 0.0 && v.position.x < config.road_length))
        return false;
    return std::abs(v.position.y - config.lane_center(v.lane)) <= config.max_lateral_offset() + 1e-12;
}

SceneConfig scene_config_from_json(const json& j)
{
    SceneConfig c;
    StrictObject o(j, "scene");
    c.lane_count = o.get("lane_count", c.lane_count);
    c.lane_width = o.get("lane_width", c.lane_width);
    c.road_length = o.get("road_length", c.road_length);
    if (o.has("bs_position"))
        c.bs_position = vec3_from_json(o.require<json>("bs_position"), "scene.bs_position");
    c.ground_reflection = o.get("ground_reflection", c.ground_reflection);
    c.ground_reflection_loss_db = o.get("ground_reflection_loss_db", c.ground_reflection_loss_db);
    c.vehicle_count = o.get("vehicle_count", c.vehicle_count);
    c.speed_min = o.get("speed_min", c.speed_min);
    c.speed_max = o.get("speed_max", c.speed_max);
    c.speed_jitter = o.get("speed_jitter", c.speed_jitter);
    c.lateral_noise = o.get("lateral_noise", c.lateral_noise);
    c.lane_change_prob = o.get("lane_change_prob", c.lane_change_prob);
    c.min_spacing = o.get("min_spacing", c.min_spacing);
    c.vehicle_length = o.get("vehicle_length", c.vehicle_length);
    c.vehicle_width = o.get("vehicle_width", c.vehicle_width);
    c.vehicle_height = o.get("vehicle_height", c.vehicle_height);
    c.time_step = o.get("time_step", c.time_step);
    c.episode_length = o.get("episode_length", c.episode_length);
    c.seed = o.get("seed", c.seed);

    StrictObject b(o.section("buildings"), "scene.buildings");
    auto& r = c.buildings;
    r.enabled = b.get("enabled", r.enabled);
    r.setback_m = b.get("setback_m", r.setback_m);
    r.depth_m = b.get("depth_m", r.depth_m);
    r.length_m = b.get("length_m", r.length_m);
    r.gap_m = b.get("gap_m", r.gap_m);
    r.height_min_m = b.get("height_min_m", r.height_min_m);
    r.height_max_m = b.get("height_max_m", r.height_max_m);
    r.reflection_loss_db = b.get("reflection_loss_db", r.reflection_loss_db);
    b.finish();
    o.finish();
    return c;
}

json to_json(const SceneConfig& c)
{
    const auto& r = c.buildings;
    return json{
        {"lane_count", c.lane_count},
        {"lane_width", c.lane_width},
        {"road_length", c.road_length},
        {"bs_position", vec3_to_json(c.bs_position)},
        {"ground_reflection", c.ground_reflection},
        {"ground_reflection_loss_db", c.ground_reflection_loss_db},
        {"vehicle_count", c.vehicle_count},
        {"speed_min", c.speed_min},
        {"speed_max", c.speed_max},
        {"speed_jitter", c.speed_jitter},
        {"lateral_noise", c.lateral_noise},
        {"lane_change_prob", c.lane_change_prob},
        {"min_spacing", c.min_spacing},
        {"vehicle_length", c.vehicle_length},
        {"vehicle_width", c.vehicle_width},
        {"vehicle_height", c.vehicle_height},
        {"time_step", c.time_step},
        {"episode_length", c.episode_length},
        {"seed", c.seed},
        {"buildings",
         {{"enabled", r.enabled},
          {"setback_m", r.setback_m},
          {"depth_m", r.depth_m},
          {"length_m", r.length_m},
          {"gap_m", r.gap_m},
          {"height_min_m", r.height_min_m},
          {"height_max_m", r.height_max_m},
          {"reflection_loss_db", r.reflection_loss_db}}},
    };
}

json to_json(const Episode& episode)
{
    json buildings = json::array();
    for (const auto& b : episode.buildings)
        buildings.push_back({{"min", vec3_to_json(b.min_corner)},
                             {"max", vec3_to_json(b.max_corner)},
                             {"reflection_loss_db", b.reflection_loss_db}});
    json frames = json::array();
    for (const auto& f : episode.frames) {
        json vehicles = json::array();
        for (const auto& v : f.vehicles)
            vehicles.push_back({{"id", v.id},
                                {"lane", v.lane},
                                {"position", vec3_to_json(v.position)},
                                {"velocity", vec3_to_json(v.velocity)}});
        frames.push_back({{"t", f.timestamp}, {"vehicles", std::move(vehicles)}});
    }
    return json{{"config", to_json(episode.config)}, {"buildings", std::move(buildings)}, {"frames", std::move(frames)}};
}

} // namespace beamkd
