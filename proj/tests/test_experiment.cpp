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

#include <gtest/gtest.h>

#include "beamkd/experiment.hpp"

using namespace beamkd;

TEST(Experiment, DefaultConfigRoundTripsAndValidates)
{
    const ExperimentConfig c;
    c.validate();
    const json j = to_json(c);
    const ExperimentConfig back = experiment_config_from_json(j);
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(config_digest(back), config_digest(c));
    EXPECT_EQ(config_digest(c).size(), 64u);
}

TEST(Experiment, UnknownKeysAreRejected)
{
    json j = to_json(ExperimentConfig{});
    j["scene"]["lanes"] = 3;
    EXPECT_THROW(experiment_config_from_json(j), ConfigError);
    json top = to_json(ExperimentConfig{});
    top["extra"] = true;
    EXPECT_THROW(experiment_config_from_json(top), ConfigError);
}

TEST(Experiment, UnknownMethodIsRejected)
{
    json j = to_json(ExperimentConfig{});
    j["method"] = "RKD-everything";
    EXPECT_THROW(experiment_config_from_json(j), ConfigError);
}

TEST(Experiment, OverridesEditNestedValues)
{
    json j = to_json(ExperimentConfig{});
    apply_override(j, "distill.alpha=0.25");
    apply_override(j, "name=probe");
    apply_override(j, "seeds=[4,5]");
    EXPECT_DOUBLE_EQ(j["distill"]["alpha"].get<double>(), 0.25);
    EXPECT_EQ(j["name"], "probe");
    const ExperimentConfig c = experiment_config_from_json(j);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
    EXPECT_NE(config_digest(c), config_digest(ExperimentConfig{}));
    EXPECT_THROW(apply_override(j, "no_equals"), ConfigError);
    EXPECT_THROW(apply_override(j, "a..b=1"), ConfigError);
    EXPECT_THROW(apply_override(j, "name.inner=1"), ConfigError);
}

TEST(Experiment, SeedLists)
{
    EXPECT_EQ(parse_seed_list("3"), (std::vector<std::uint64_t>{3}));
    EXPECT_EQ(parse_seed_list("1..3"), (std::vector<std::uint64_t>{1, 2, 3}));
    EXPECT_EQ(parse_seed_list("1,4,9"), (std::vector<std::uint64_t>{1, 4, 9}));
    EXPECT_THROW(parse_seed_list("3..1"), ConfigError);
    EXPECT_THROW(parse_seed_list("x"), ConfigError);
    EXPECT_THROW(parse_seed_list(""), ConfigError);
}

TEST(Experiment, MethodSwitches)
{
    const DistillConfig base;
    const auto none = method_distill_config(base, "withoutKD");
    EXPECT_FALSE(none.kl_mid_enabled || none.kl_end_enabled || none.latent_enabled || none.output_enabled);
    const auto kd = method_distill_config(base, "KD");
    EXPECT_TRUE(kd.kl_mid_enabled && kd.kl_end_enabled);
    EXPECT_FALSE(kd.latent_enabled || kd.output_enabled);
    const auto man = method_distill_config(base, "RKD-manifold");
    EXPECT_TRUE(man.latent_enabled && !man.output_enabled && !man.kl_end_enabled);
    const auto beam = method_distill_config(base, "RKD-beamStr");
    EXPECT_TRUE(beam.output_enabled && !beam.latent_enabled);
    const auto both = method_distill_config(base, "RKD-both");
    EXPECT_TRUE(both.output_enabled && both.latent_enabled);
    EXPECT_THROW(method_distill_config(base, "bogus"), ConfigError);
}

TEST(Experiment, StudentStaysWithinParameterBudget)
{
    const ExperimentConfig c;
    EXPECT_GT(teacher_parameter_count(c), 0u);
    EXPECT_LE(static_cast<double>(student_parameter_count(c)) / teacher_parameter_count(c), 0.15);
}

TEST(Experiment, EpisodeSeedsDiffer)
{
    const ExperimentConfig c;
    EXPECT_NE(episode_scene_config(c, 0).seed, episode_scene_config(c, 1).seed);
    EXPECT_EQ(episode_scene_config(c, 2).seed, episode_scene_config(c, 2).seed);
}

TEST(Experiment, GatherRows)
{
    Matrix m(3, 2);
    m << 1, 2, 3, 4, 5, 6;
    const std::vector<int> rows{2, 0};
    const Matrix g = gather_rows(m, rows);
    EXPECT_EQ(g(0, 0), 5.0);
    EXPECT_EQ(g(1, 1), 2.0);
}
