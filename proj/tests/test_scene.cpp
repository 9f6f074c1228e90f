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

#include <set>

#include "beamkd/scene.hpp"

using namespace beamkd;

namespace {

SceneConfig quiet_config()
{
    SceneConfig c;
    c.speed_jitter = 0.0;
    c.lateral_noise = 0.0;
    c.buildings.enabled = false;
    return c;
}

} // namespace

TEST(Scene, SingleVehicleSitsOnTheRoad)
{
    SceneConfig c;
    c.vehicle_count = 1;
    const Scene s = build_scene(c);
    ASSERT_EQ(s.vehicles.size(), 1u);
    const auto& v = s.vehicles[0];
    EXPECT_TRUE(v.lane == 0 || v.lane == 1);
    EXPECT_TRUE(inside_lane(v, c));
    EXPECT_DOUBLE_EQ(v.position.z, c.vehicle_height);
}

TEST(Scene, BuildIsDeterministic)
{
    SceneConfig c;
    c.seed = 77;
    EXPECT_EQ(build_scene(c), build_scene(c));
    EXPECT_EQ(generate_episode(c), generate_episode(c));
}

TEST(Scene, RejectsOverfullRoad)
{
    SceneConfig c;
    c.vehicle_count = 1000;
    c.road_length = 50.0;
    try {
        build_scene(c);
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("cannot place vehicles"), std::string::npos);
    }
}

TEST(Scene, NoiselessStepAdvancesByVelocityTimesDt)
{
    const SceneConfig c = quiet_config();
    VehicleState v;
    v.position = {10.0, c.lane_center(0), c.vehicle_height};
    v.velocity = {10.0, 0.0, 0.0};
    Rng rng(3);
    const auto next = step_vehicles({v}, c, rng);
    EXPECT_NEAR(next[0].position.x, 11.0, 1e-12);
    EXPECT_DOUBLE_EQ(next[0].position.y, v.position.y);
}

TEST(Scene, WrapsAtTheRoadEnd)
{
    const SceneConfig c = quiet_config();
    VehicleState v;
    v.lane = 1;
    v.position = {c.road_length - 0.5, c.lane_center(1), c.vehicle_height};
    v.velocity = {10.0, 0.0, 0.0};
    Rng rng(3);
    const auto next = step_vehicles({v}, c, rng);
    EXPECT_NEAR(next[0].position.x, 0.5, 1e-9);
    EXPECT_EQ(next[0].lane, 1);
}

TEST(Scene, NoisyStepsStayInsideLanes)
{
    SceneConfig c;
    c.lateral_noise = 0.4;
    c.speed_jitter = 2.0;
    c.lane_change_prob = 0.1;
    Rng rng(11);
    auto frame = build_scene(c).vehicles;
    for (int k = 0; k < 100; ++k) {
        frame = step_vehicles(frame, c, rng);
        for (const auto& v : frame) {
            ASSERT_TRUE(inside_lane(v, c)) << "step " << k << " vehicle " << v.id;
            ASSERT_GE(v.velocity.x, c.speed_min);
            ASSERT_LE(v.velocity.x, c.speed_max);
        }
    }
}

TEST(Scene, EpisodeLengthOneGivesOneFrame)
{
    SceneConfig c;
    c.episode_length = 1;
    EXPECT_EQ(generate_episode(c).frames.size(), 1u);
}

TEST(Scene, SeedChangesTrajectories)
{
    SceneConfig a, b;
    a.seed = 5;
    b.seed = 6;
    EXPECT_NE(generate_episode(a).frames.back().vehicles, generate_episode(b).frames.back().vehicles);
}

TEST(Scene, FullEpisodeKeepsInvariants)
{
    SceneConfig c;
    c.vehicle_count = 40;
    c.road_length = 200.0;
    c.episode_length = 200;
    c.lane_change_prob = 0.02;
    const Episode e = generate_episode(c);
    ASSERT_EQ(e.frames.size(), 200u);
    for (std::size_t k = 0; k < e.frames.size(); ++k) {
        const auto& f = e.frames[k];
        EXPECT_DOUBLE_EQ(f.timestamp, static_cast<double>(k) * c.time_step);
        if (k > 0)
            EXPECT_GT(f.timestamp, e.frames[k - 1].timestamp);
        std::set<int> ids;
        for (const auto& v : f.vehicles) {
            EXPECT_TRUE(ids.insert(v.id).second);
            EXPECT_TRUE(inside_lane(v, c));
            EXPECT_TRUE(v.position.finite());
        }
        EXPECT_EQ(ids.size(), 40u);
    }
}

TEST(Scene, BuildingsFlankTheRoad)
{
    SceneConfig c;
    const Scene s = build_scene(c);
    ASSERT_FALSE(s.buildings.empty());
    for (const auto& b : s.buildings) {
        EXPECT_LT(b.min_corner.x, b.max_corner.x);
        EXPECT_LT(b.min_corner.y, b.max_corner.y);
        EXPECT_LT(b.min_corner.z, b.max_corner.z);
        // Nothing intrudes on the road strip.
        EXPECT_TRUE(b.max_corner.y <= 0.0 || b.min_corner.y >= c.road_width());
    }
}

TEST(Scene, ConfigJsonRoundTripAndStrictKeys)
{
    SceneConfig c;
    c.lane_count = 3;
    c.seed = 42;
    c.bs_position = {10.0, -2.0, 7.5};
    EXPECT_EQ(scene_config_from_json(to_json(c)), c);

    json j = to_json(c);
    j["lanes"] = 2;
    EXPECT_THROW(scene_config_from_json(j), ConfigError);
}

TEST(Scene, RejectsLaneCountOutsideRange)
{
    SceneConfig c;
    c.lane_count = 4;
    EXPECT_THROW(build_scene(c), ConfigError);
}
