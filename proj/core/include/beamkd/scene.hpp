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
#include <vector>

#include "beamkd/common.hpp"
#include "beamkd/io.hpp"

namespace beamkd {

// Axis-aligned box; one scalar loss stands in for the facade material.
struct BuildingBox {
    Vec3 min_corner;
    Vec3 max_corner;
    double reflection_loss_db = 6.0;

    bool operator==(const BuildingBox&) const = default;
};

struct VehicleState {
    int id = 0;
    Vec3 position;  // x along the road, y across it, z = antenna/roof height
    Vec3 velocity;  // m/s
    int lane = 0;

    bool operator==(const VehicleState&) const = default;
};

// Two rows of buildings flank the road, one per side.
struct BuildingRowSpec {
    double setback_m = 6.0;   // gap between the road edge and the facade
    double depth_m = 12.0;
    double length_m = 22.0;
    double gap_m = 6.0;
    double height_min_m = 12.0;
    double height_max_m = 30.0;
    double reflection_loss_db = 6.0;
    bool enabled = true;

    bool operator==(const BuildingRowSpec&) const = default;
};

struct SceneConfig {
    int lane_count = 2;
    double lane_width = 3.5;
    double road_length = 120.0;
    BuildingRowSpec buildings;
    Vec3 bs_position{60.0, -3.0, 6.0};  // sidewalk between the near facades and the road
    bool ground_reflection = true;
    double ground_reflection_loss_db = 8.0;

    int vehicle_count = 8;
    double speed_min = 6.0;
    double speed_max = 14.0;
    double speed_jitter = 0.2;        // std of per-step speed perturbation, m/s
    double lateral_noise = 0.05;      // std of per-step lateral drift, m
    double lane_change_prob = 0.0;    // per vehicle per step
    double min_spacing = 9.0;         // bumper-to-bumper slot length, m
    double vehicle_length = 4.5;
    double vehicle_width = 1.8;
    double vehicle_height = 1.5;

    double time_step = 0.1;
    int episode_length = 200;
    std::uint64_t seed = 0;

    bool operator==(const SceneConfig&) const = default;

    double road_width() const { return lane_count * lane_width; }
    double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
    // Largest lateral deviation from the lane centre that keeps the body inside the lane.
    double max_lateral_offset() const { return 0.5 * (lane_width - vehicle_width); }

    void validate() const;
};

struct Scene {
    SceneConfig config;
    std::vector<BuildingBox> buildings;
    Vec3 bs_position;
    std::vector<VehicleState> vehicles;  // initial states

    bool operator==(const Scene&) const = default;
};

struct Frame {
    double timestamp = 0.0;
    std::vector<VehicleState> vehicles;

    bool operator==(const Frame&) const = default;
};

struct Episode {
    SceneConfig config;
    std::vector<BuildingBox> buildings;
    std::vector<Frame> frames;

    bool operator==(const Episode&) const = default;
};

Scene build_scene(const SceneConfig& config);

// Advances every vehicle by one time step. Lateral drift and speed noise come from rng.
std::vector<VehicleState> step_vehicles(const std::vector<VehicleState>& frame, const SceneConfig& config, Rng& rng);

Episode generate_episode(const SceneConfig& config);

// True when the vehicle footprint lies inside its lane and the road span.
bool inside_lane(const VehicleState& v, const SceneConfig& config);

SceneConfig scene_config_from_json(const json& j);
json to_json(const SceneConfig& config);
json to_json(const Episode& episode);

} // namespace beamkd
