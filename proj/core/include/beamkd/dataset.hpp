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
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamkd/beams.hpp"
#include "beamkd/channel.hpp"
#include "beamkd/scene.hpp"

namespace beamkd {

// One radar return: radial velocity (m/s), azimuth (deg), altitude (deg), depth (m).
using RadarPoint = std::array<double, 4>;

struct RadarConfig {
    int max_points = 32;              // K
    double fov_deg = 180.0;
    double max_range_m = 150.0;
    int min_returns = 1;
    int max_returns = 3;
    bool body_spread = true;          // returns scatter over the vehicle body
    bool occlusion_by_vehicles = true;
    double velocity_sigma = 0.1;
    double azimuth_sigma_deg = 0.5;
    double altitude_sigma_deg = 0.5;
    double depth_sigma_m = 0.1;
    int clutter_max = 4;
    double clutter_prob = 0.3;        // per candidate clutter point

    bool operator==(const RadarConfig&) const = default;
};

struct RadarFrame {
    std::vector<RadarPoint> points;   // exactly K rows, invalid rows are zero
    std::vector<bool> valid;
};

struct GridConfig {
    double x_min = 0.0;
    double y_min = -8.0;
    double cell_size = 2.0;
    int width = 64;    // cells along x
    int height = 12;   // cells along y
    double falloff_m = 0.0;
    bool include_buildings = true;

    bool operator==(const GridConfig&) const = default;
};

struct BevGrid {
    int height = 0;
    int width = 0;
    double cell_size = 0.0;
    std::vector<double> occupancy;    // row-major [height][width], values in [0, 1]

    double at(int row, int col) const { return occupancy[static_cast<std::size_t>(row * width + col)]; }
};

struct GpsConfig {
    int slots = 40;
    double position_sigma_m = 0.5;
    double velocity_sigma = 0.2;

    bool operator==(const GpsConfig&) const = default;
};

struct GpsFrame {
    std::vector<std::array<double, 4>> slots;  // (x, y, vx, vy)
    std::vector<bool> valid;
};

struct DatasetConfig {
    int window = 4;  // P
    RadarConfig radar;
    GridConfig grid;
    GpsConfig gps;
    int episodes = 10;
    std::uint64_t seed = 1;
    std::array<double, 3> split_fractions{0.70, 0.15, 0.15};

    void validate() const;
    bool operator==(const DatasetConfig&) const = default;
};

// Keeps the K highest-altitude returns in their original order; pads with invalid rows.
RadarFrame highest_point_sampling(const std::vector<RadarPoint>& raw, int k);

// Raw returns ordered by azimuth, before HPS.
std::vector<RadarPoint> radar_returns(const std::vector<VehicleState>& vehicles, const std::vector<BuildingBox>& buildings,
                                      const Vec3& radar_position, const SceneConfig& scene, const RadarConfig& config,
                                      Rng& rng);

RadarFrame synthesize_radar(const std::vector<VehicleState>& vehicles, const std::vector<BuildingBox>& buildings,
                            const Vec3& radar_position, const SceneConfig& scene, const RadarConfig& config, Rng& rng);

BevGrid synthesize_bev(const std::vector<VehicleState>& vehicles, const std::vector<BuildingBox>& buildings,
                       const SceneConfig& scene, const GridConfig& grid);

GpsFrame synthesize_gps(const std::vector<VehicleState>& vehicles, const GpsConfig& config, Rng& rng);

// Flattened P-step window; oldest frame first. The label belongs to step t + 1.
struct Sample {
    std::vector<float> radar_points;  // [P, K, 4]
    std::vector<float> radar_mask;    // [P, K]
    std::vector<float> bev;           // [P, H, W]
    std::vector<float> gps;           // [P, S, 4]
    std::vector<float> gps_mask;      // [P, S]
    std::vector<float> rss_vector;    // [B] dBm, summed over covered vehicles
    int label = 0;
    int episode_id = 0;
    int t = 0;                        // last step inside the window

    bool operator==(const Sample&) const = default;
};

struct SampleShape {
    int window = 0;
    int radar_points = 0;
    int grid_height = 0;
    int grid_width = 0;
    int gps_slots = 0;
    int beams = 0;

    bool operator==(const SampleShape&) const = default;
};

SampleShape sample_shape(const DatasetConfig& config, int beams);

std::vector<Sample> build_samples(const Episode& episode, int episode_id, const Codebook& codebook,
                                  const ChannelConfig& channel, const DatasetConfig& config);

struct Split {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;

    bool operator==(const Split&) const = default;
};

struct DatasetManifest {
    SampleShape shape;
    Split split;
    std::uint64_t seed = 0;
    std::string config_digest;    // hex SHA-256 of the generating config
    std::string codebook_digest;  // hex SHA-256 of the codebook definition
    int codebook_size = 0;

    bool operator==(const DatasetManifest&) const = default;
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<Sample> samples;

    bool operator==(const Dataset&) const = default;
};

// Episode-level shuffle, then contiguous cuts at the requested fractions.
Split split_dataset(const std::vector<Sample>& samples, const std::array<double, 3>& fractions, std::uint64_t seed);

inline constexpr int kDatasetFormatVersion = 1;

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

std::vector<int> label_histogram(const std::vector<Sample>& samples, int beams);
// Share of samples covered by the `top` most frequent labels.
double top_label_coverage(const std::vector<int>& histogram, int top);

// Model inputs. Rows follow `indices`; columns are normalised per modality.
Eigen::MatrixXd radar_features(const std::vector<Sample>& samples, const std::vector<int>& indices);
Eigen::MatrixXd bev_features(const std::vector<Sample>& samples, const std::vector<int>& indices);
Eigen::MatrixXd gps_features(const std::vector<Sample>& samples, const std::vector<int>& indices);

DatasetConfig dataset_config_from_json(const json& j);
json to_json(const DatasetConfig& c);

} // namespace beamkd
