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

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "beamkd/beams.hpp"
#include "beamkd/scene.hpp"

namespace beamkd {

struct PropagationPath {
    double azimuth_deg = 0.0;     // departure angles at the transmitter
    double elevation_deg = 0.0;
    double delay_s = 0.0;
    double length_m = 0.0;
    int reflection_count = 0;
    double surface_loss_db = 0.0;
    bool in_sector = true;        // false when the path leaves behind the array

    bool operator==(const PropagationPath&) const = default;
};

struct PathSet {
    int vehicle_id = -1;
    std::vector<PropagationPath> paths;  // ascending length
};

struct PathLossModel {
    double p0_db = 61.34;
    double exponent_los = 2.0;
    double exponent_reflected = 3.0;
    double shadow_sigma_db = 4.0;
    double carrier_hz = 28e9;

    double exponent_for(const PropagationPath& p) const { return p.reflection_count == 0 ? exponent_los : exponent_reflected; }
    void validate() const;
    bool operator==(const PathLossModel&) const = default;
};

struct ChannelConfig {
    PathLossModel path_loss;
    int max_reflections = 2;
    // false: sum of per-path dB terms (default). true: 10 log10 of summed linear powers.
    bool power_domain_combining = false;

    void validate() const;
    bool operator==(const ChannelConfig&) const = default;
};

// Open-interior test: a segment touching a face or an edge is not blocked.
bool segment_intersects_box(const Vec3& a, const Vec3& b, const BuildingBox& box);

// Static reflecting geometry seen by the tracer.
struct Environment {
    std::vector<BuildingBox> buildings;
    bool ground_reflection = true;
    double ground_reflection_loss_db = 8.0;
};

Environment environment_of(const Scene& scene);
Environment environment_of(const Episode& episode);

// Image-method tracer for a fixed transmitter. Mirror images of the transmitter
// are computed once and reused for every receiver.
class PathTracer {
public:
    PathTracer(Environment env, Vec3 tx, int max_reflections);

    PathSet trace(const Vec3& rx, int vehicle_id = -1) const;

    const Vec3& tx() const { return tx_; }

private:
    struct Face {
        int axis;          // plane normal axis
        double value;      // plane coordinate
        double outward;    // +1 or -1
        double lo[3];      // face rectangle bounds (unused on the normal axis)
        double hi[3];
        double loss_db;
    };

    bool occluded(const Vec3& a, const Vec3& b) const;
    bool on_face(const Face& f, const Vec3& p) const;
    PropagationPath make_path(const Vec3& first_hop, double length, int reflections, double loss) const;

    Environment env_;
    Vec3 tx_;
    int max_reflections_;
    std::vector<Face> faces_;
    std::vector<Vec3> image1_;               // per face
    std::vector<std::vector<Vec3>> image2_;  // per (face1, face2)
};

PathSet trace_paths(const Scene& scene, const Vec3& rx, int max_reflections);

// P0 + 10 alpha log10(d) + shadow + surface losses. Rejects d below the 1 m reference.
double path_loss_db(const PropagationPath& path, const PathLossModel& model, double shadow_sample_db);

// exp(-j 2 pi f_c tau). Labels never depend on it since the RSS uses magnitudes only.
std::complex<double> path_phase(const PropagationPath& path, double carrier_hz);

// One N(0, sigma^2) draw per path, keyed by (seed, time step, vehicle).
std::vector<double> shadow_samples(std::uint64_t seed, int time_step, int vehicle_id, std::size_t path_count, double sigma_db);

double rss_for_beam(const PathSet& pathset, const CVector& beam_weights, const PathLossModel& model,
                    const ArrayGeometry& geom, std::span<const double> shadow, bool power_domain = false);
inline double rss_for_beam(const PathSet& pathset, const BeamPattern& beam, const PathLossModel& model,
                           const ArrayGeometry& geom, std::span<const double> shadow, bool power_domain = false)
{
    return rss_for_beam(pathset, beam.weights, model, geom, shadow, power_domain);
}

// RSS of one path set for every beam of the codebook.
std::vector<double> rss_row(const PathSet& pathset, const Codebook& codebook, const PathLossModel& model,
                            std::span<const double> shadow, bool power_domain = false);

// Matrix [V x B] of S_v(c_b); rows follow the frame's vehicle order.
Eigen::MatrixXd rss_matrix(const Frame& frame, const PathTracer& tracer, const Codebook& codebook,
                           const ChannelConfig& channel, std::uint64_t shadow_seed, int time_step);

// argmax_b sum_v rss[v][b], lowest index on ties. Throws DataError when no beam is feasible.
int optimal_beam(const Eigen::MatrixXd& rss);
int optimal_beam(std::span<const double> rss_vector);
int optimal_beam(std::span<const float> rss_vector);

ChannelConfig channel_config_from_json(const json& j);
json to_json(const ChannelConfig& c);
json to_json(const PathSet& ps);

} // namespace beamkd
