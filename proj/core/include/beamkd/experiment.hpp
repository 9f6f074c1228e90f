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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "beamkd/beams.hpp"
#include "beamkd/channel.hpp"
#include "beamkd/dataset.hpp"
#include "beamkd/distill.hpp"
#include "beamkd/metrics.hpp"
#include "beamkd/nn.hpp"
#include "beamkd/scene.hpp"

namespace beamkd {

inline const std::vector<std::string> kMethods{"teacher", "withoutKD", "KD", "RKD-manifold", "RKD-beamStr", "RKD-both"};

struct ExperimentConfig {
    std::string name = "experiment";
    SceneConfig scene;
    ChannelConfig channel;
    CodebookSpec codebook = CodebookSpec::default_spec();
    DatasetConfig dataset;
    TeacherWidths teacher;
    StudentWidths student;
    TrainConfig teacher_train;
    TrainConfig student_train;
    DistillConfig distill;
    std::string method = "RKD-both";
    std::vector<std::uint64_t> seeds{1};
    std::string output_dir = "runs";

    void validate() const;
};

ExperimentConfig experiment_config_from_json(const json& j);
// Fully expanded form; its canonical dump is the digest input.
json to_json(const ExperimentConfig& c);
std::string config_digest(const ExperimentConfig& c);

// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON when possible, else taken as a string.
void apply_override(json& doc, const std::string& assignment);

// Episode e uses scene seed mix_seed(dataset.seed, e, scene.seed).
SceneConfig episode_scene_config(const ExperimentConfig& c, int episode);
std::vector<Episode> generate_episodes(const ExperimentConfig& c);
Dataset generate_dataset(const ExperimentConfig& c, const Codebook& codebook);

struct FeatureSet {
    Matrix radar, bev, gps;
    std::vector<int> labels;
    std::vector<std::vector<float>> rss;
    std::size_t size() const { return labels.size(); }
};

FeatureSet make_features(const Dataset& d, const std::vector<int>& indices);

Matrix gather_rows(const Matrix& m, std::span<const int> rows);

// Per-method distillation switches on top of the configured DistillConfig.
DistillConfig method_distill_config(const DistillConfig& base, const std::string& method);

struct TeacherRun {
    Teacher model;
    TrainHistory history;
    MetricsReport test;
};

struct StudentRun {
    Mlp model;
    Mlp projection;  // teacher mid -> student mid, used by the KL term
    TrainHistory history;
    MetricsReport test;
};

struct SplitFeatures {
    FeatureSet train, val, test;
};

SplitFeatures split_features(const Dataset& d);

TeacherRun train_teacher(const ExperimentConfig& c, const SplitFeatures& data, std::uint64_t seed);
StudentRun train_student(const ExperimentConfig& c, const SplitFeatures& data, const Teacher* teacher,
                         const std::vector<double>& similarity, const Eigen::MatrixXcd& weights,
                         const std::string& method, std::uint64_t seed);

Matrix teacher_probabilities(const Teacher& t, const FeatureSet& f);
Matrix student_probabilities(const Mlp& s, const FeatureSet& f);

struct SeedResult {
    std::uint64_t seed = 0;
    std::map<std::string, MetricsReport> reports;  // method -> test report
};

struct ReproduceResult {
    std::vector<SeedResult> seeds;
    std::size_t teacher_params = 0;
    std::size_t student_params = 0;
    std::map<std::string, double> median_mpr;
    std::map<std::string, double> median_rss;

    double param_ratio() const
    {
        return teacher_params == 0 ? 0.0 : static_cast<double>(student_params) / static_cast<double>(teacher_params);
    }
};

// Teacher plus every student method on each seed; optional run directory receives per-seed artifacts.
ReproduceResult reproduce(const ExperimentConfig& c, const Dataset& data, const Codebook& codebook,
                          const std::vector<std::uint64_t>& seeds, const std::filesystem::path* run_dir = nullptr);

json to_json(const ReproduceResult& r);
std::string reproduce_table(const ReproduceResult& r);

// Exact counts for the configured shapes.
std::size_t teacher_parameter_count(const ExperimentConfig& c);
std::size_t student_parameter_count(const ExperimentConfig& c);

// Parses "3", "1..3" or "1,4,9".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

} // namespace beamkd
