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
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamkd/common.hpp"
#include "beamkd/io.hpp"

namespace beamkd {

using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Uniform rectangular array. Element (m, n) sits in row m (vertical) and column n
// (horizontal); the flattened index is m * cols + n.
struct ArrayGeometry {
    int rows = 4;
    int cols = 16;
    double element_spacing_wavelengths = 0.5;
    double carrier_hz = 28e9;

    int size() const { return rows * cols; }
    void validate() const;
    bool operator==(const ArrayGeometry&) const = default;
};

// Angles in degrees. Azimuth is measured in the horizontal plane from broadside
// (positive toward +x); elevation is measured from the horizontal plane.
struct Direction {
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;
    bool operator==(const Direction&) const = default;
};

struct SteeringVector {
    CVector entries;
};

SteeringVector steering_vector(const ArrayGeometry& geom, double azimuth_deg, double elevation_deg);

struct BeamPattern {
    int index = 0;
    CVector weights;                    // unit L2 norm
    std::vector<Direction> components;  // 1 to 3 lobes
};

// 10 log10 |w^H a|; kNoCoverage when the inner product vanishes.
double array_response_db(const CVector& weights, const CVector& steering);
inline double array_response_db(const BeamPattern& w, const SteeringVector& a)
{
    return array_response_db(w.weights, a.entries);
}

// |w_i^H w_j| / (|w_i| |w_j|), clamped to [0, 1].
double beam_similarity(const CVector& wi, const CVector& wj);
inline double beam_similarity(const BeamPattern& wi, const BeamPattern& wj)
{
    return beam_similarity(wi.weights, wj.weights);
}

// Multi-lobe patterns: for every base column i the lobes sit at columns i, i+s, i+2s, ...
// in the listed grid rows. Without wrap, combinations running off the grid are skipped.
struct MultiBeamRule {
    int components = 2;
    int azimuth_stride = 1;
    std::vector<int> elevation_rows;
    bool wrap = false;
};

struct CodebookSpec {
    ArrayGeometry geometry;
    double azimuth_span_deg = 180.0;
    double elevation_span_deg = 70.0;
    int azimuth_count = 16;
    int elevation_count = 2;
    std::vector<MultiBeamRule> multi_beam;

    // 32 single beams + 96 pairs + 24 triples = 152 patterns.
    static CodebookSpec default_spec();
};

struct Codebook {
    CodebookSpec spec;
    std::vector<BeamPattern> patterns;

    int size() const { return static_cast<int>(patterns.size()); }
    const ArrayGeometry& geometry() const { return spec.geometry; }
};

Codebook build_codebook(const CodebookSpec& spec);

// Row-major B x B table of beam_similarity over every pair of patterns.
std::vector<double> similarity_table(const Codebook& codebook);

CodebookSpec codebook_spec_from_json(const json& j);
json to_json(const CodebookSpec& spec);
ArrayGeometry array_geometry_from_json(const json& j);
json to_json(const ArrayGeometry& geom);

// <stem>.json carries metadata, <stem>.bin the interleaved little-endian float64 (re, im) weights.
void write_codebook(const Codebook& codebook, const std::filesystem::path& stem);
Codebook read_codebook(const std::filesystem::path& stem);

} // namespace beamkd
