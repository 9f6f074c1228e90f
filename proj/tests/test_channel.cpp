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

#include <algorithm>

#include "beamkd/channel.hpp"
#include "oracle.hpp"

using namespace beamkd;

namespace {

Scene open_scene(Vec3 tx)
{
    Scene s;
    s.config.ground_reflection = false;
    s.config.buildings.enabled = false;
    s.bs_position = tx;
    return s;
}

// A slab long and tall enough to act as an infinite wall y in [y0, y0 + 1].
BuildingBox wall_at(double y0)
{
    return {{-1e4, y0, 0.0}, {1e4, y0 + 1.0, 1e4}, 6.0};
}

std::vector<double> lengths(const PathSet& ps)
{
    std::vector<double> out;
    for (const auto& p : ps.paths)
        out.push_back(p.length_m);
    return out;
}

// Straight-line per-path sum, independent of the library's steering and response code.
double brute_rss(const PathSet& ps, const CVector& w, const ArrayGeometry& g, const PathLossModel& m,
                 const std::vector<double>& shadow)
{
    double sum = 0.0;
    bool any = false;
    for (std::size_t l = 0; l < ps.paths.size(); ++l) {
        const auto& p = ps.paths[l];
        if (!p.in_sector)
            continue;
        any = true;
        std::complex<double> acc = 0.0;
        for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < g.cols; ++c) {
                const double phase = 2.0 * std::numbers::pi * g.element_spacing_wavelengths *
                                     (r * std::sin(deg2rad(p.elevation_deg)) +
                                      c * std::cos(deg2rad(p.elevation_deg)) * std::sin(deg2rad(p.azimuth_deg)));
                acc += std::conj(w[r * g.cols + c]) * std::polar(1.0, phase);
            }
        const double alpha = p.reflection_count == 0 ? m.exponent_los : m.exponent_reflected;
        const double pl = m.p0_db + 10.0 * alpha * std::log10(p.length_m) + shadow[l] + p.surface_loss_db;
        sum += 10.0 * std::log10(std::abs(acc)) - pl;
    }
    return any ? sum : kNoCoverage;
}

PropagationPath los_path(double az, double el, double length)
{
    PropagationPath p;
    p.azimuth_deg = az;
    p.elevation_deg = el;
    p.length_m = length;
    p.delay_s = length / kSpeedOfLight;
    return p;
}

} // namespace

TEST(Channel, FreeSpaceHasOneLosPath)
{
    const Scene s = open_scene({0.0, 0.0, 10.0});
    const Vec3 rx{30.0, 4.0, 1.5};
    const PathSet ps = trace_paths(s, rx, 2);
    ASSERT_EQ(ps.paths.size(), 1u);
    EXPECT_EQ(ps.paths[0].reflection_count, 0);
    EXPECT_NEAR(ps.paths[0].length_m, (rx - s.bs_position).norm(), 1e-12);
    EXPECT_NEAR(ps.paths[0].delay_s, ps.paths[0].length_m / kSpeedOfLight, 1e-20);
}

TEST(Channel, SingleWallMatchesMirrorImage)
{
    Scene s = open_scene({0.0, 0.0, 10.0});
    s.buildings.push_back(wall_at(5.0));
    const Vec3 rx{30.0, 0.0, 1.5};
    const PathSet ps = trace_paths(s, rx, 2);
    ASSERT_EQ(ps.paths.size(), 2u);
    const Vec3 image{0.0, 10.0, 10.0};
    EXPECT_EQ(ps.paths[1].reflection_count, 1);
    EXPECT_NEAR(ps.paths[1].length_m, (image - rx).norm(), 1e-9);
    EXPECT_DOUBLE_EQ(ps.paths[1].surface_loss_db, 6.0);
}

TEST(Channel, BlockingBuildingRemovesLos)
{
    Scene s = open_scene({0.0, 0.0, 10.0});
    s.buildings.push_back({{10.0, -3.0, 0.0}, {15.0, 3.0, 40.0}, 6.0});
    const PathSet ps = trace_paths(s, {30.0, 0.0, 1.5}, 2);
    for (const auto& p : ps.paths)
        EXPECT_NE(p.reflection_count, 0);
    EXPECT_TRUE(segment_intersects_box({0.0, 0.0, 10.0}, {30.0, 0.0, 1.5}, s.buildings[0]));
}

TEST(Channel, SegmentTouchingAFaceIsNotBlocked)
{
    const BuildingBox b{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, 0.0};
    EXPECT_FALSE(segment_intersects_box({-1.0, 1.0, 0.5}, {2.0, 1.0, 0.5}, b));
    EXPECT_TRUE(segment_intersects_box({-1.0, 0.5, 0.5}, {2.0, 0.5, 0.5}, b));
}

TEST(Channel, GroundBounceLength)
{
    Scene s = open_scene({0.0, 0.0, 6.0});
    s.config.ground_reflection = true;
    const Vec3 rx{20.0, 5.0, 1.5};
    const PathSet ps = trace_paths(s, rx, 1);
    ASSERT_EQ(ps.paths.size(), 2u);
    EXPECT_NEAR(ps.paths[1].length_m, (Vec3{0.0, 0.0, -6.0} - rx).norm(), 1e-9);
    EXPECT_LT(ps.paths[1].elevation_deg, 0.0);
}

TEST(Channel, PathsSortedAndReciprocal)
{
    SceneConfig c;
    c.seed = 9;
    const Scene scene = build_scene(c);
    const Environment env = environment_of(scene);
    Rng rng(4);
    std::uniform_real_distribution<double> ux(5.0, 115.0), uy(0.5, 6.5);
    for (int k = 0; k < 30; ++k) {
        const Vec3 rx{ux(rng), uy(rng), 1.5};
        const PathSet fwd = PathTracer(env, scene.bs_position, 2).trace(rx);
        const PathSet back = PathTracer(env, rx, 2).trace(scene.bs_position);
        const auto lf = lengths(fwd), lb = lengths(back);
        EXPECT_TRUE(std::is_sorted(lf.begin(), lf.end()));
        ASSERT_EQ(lf.size(), lb.size());
        for (std::size_t i = 0; i < lf.size(); ++i)
            EXPECT_NEAR(lf[i], lb[i], 1e-9);
    }
}

TEST(Channel, PathLossValues)
{
    PathLossModel m;
    const PropagationPath one = los_path(0, 0, 1.0);
    EXPECT_DOUBLE_EQ(path_loss_db(one, m, 0.0), m.p0_db);
    EXPECT_NEAR(path_loss_db(los_path(0, 0, 100.0), m, 0.0), 101.34, 1e-12);
    EXPECT_EQ(path_loss_db(los_path(0, 0, 37.0), m, 1.5), path_loss_db(los_path(0, 0, 37.0), m, 1.5));
    EXPECT_THROW(path_loss_db(los_path(0, 0, 0.5), m, 0.0), std::invalid_argument);
}

TEST(Channel, PathLossGrowsWithLength)
{
    PathLossModel m;
    double prev = -1e300;
    for (double d = 1.0; d < 500.0; d *= 1.3) {
        const double v = path_loss_db(los_path(0, 0, d), m, 0.7);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(Channel, PathPhase)
{
    const double fc = 28e9;
    PropagationPath p;
    EXPECT_EQ(path_phase(p, fc), std::complex<double>(1.0, 0.0));
    p.delay_s = 1.0 / (2.0 * fc);
    const auto half = path_phase(p, fc);
    EXPECT_NEAR(half.real(), -1.0, 1e-12);
    EXPECT_NEAR(half.imag(), 0.0, 1e-12);

    Rng rng(2);
    std::uniform_real_distribution<double> u(0.0, 2e-9);
    for (int k = 0; k < 100; ++k) {
        p.delay_s = u(rng);
        const auto z = path_phase(p, fc);
        const oracle::Real ph = -2 * oracle::pi() * oracle::Real(fc) * oracle::Real(p.delay_s);
        EXPECT_NEAR(z.real(), static_cast<double>(boost::multiprecision::cos(ph)), 1e-12);
        EXPECT_NEAR(z.imag(), static_cast<double>(boost::multiprecision::sin(ph)), 1e-12);
        EXPECT_NEAR(std::abs(z), 1.0, 1e-15);
    }
}

TEST(Channel, MatchedSingleLosPath)
{
    ArrayGeometry g;
    const PathLossModel m;
    PathSet ps;
    ps.paths.push_back(los_path(20.0, -5.0, 40.0));
    const auto a = steering_vector(g, 20.0, -5.0).entries;
    const CVector w = a / a.norm();
    const std::vector<double> shadow{0.0};
    const double expected = 10.0 * std::log10(std::sqrt(static_cast<double>(g.size()))) - path_loss_db(ps.paths[0], m, 0.0);
    EXPECT_NEAR(rss_for_beam(ps, w, m, g, shadow), expected, 1e-10);
}

TEST(Channel, TwoIdenticalPathsDoubleTheDbValue)
{
    ArrayGeometry g;
    const PathLossModel m;
    PathSet one, two;
    one.paths.push_back(los_path(10.0, 3.0, 25.0));
    two.paths = {one.paths[0], one.paths[0]};
    const CVector w = build_codebook(CodebookSpec::default_spec()).patterns[17].weights;
    const double single = rss_for_beam(one, w, m, g, std::vector<double>{0.0});
    EXPECT_DOUBLE_EQ(rss_for_beam(two, w, m, g, std::vector<double>{0.0, 0.0}), 2.0 * single);
}

TEST(Channel, PowerDomainCombining)
{
    ArrayGeometry g;
    const PathLossModel m;
    PathSet ps;
    ps.paths = {los_path(10.0, 3.0, 25.0), los_path(-30.0, 1.0, 60.0)};
    const CVector w = build_codebook(CodebookSpec::default_spec()).patterns[40].weights;
    const std::vector<double> shadow{0.3, -1.2};
    double linear = 0.0;
    for (std::size_t l = 0; l < 2; ++l) {
        PathSet single;
        single.paths = {ps.paths[l]};
        linear += std::pow(10.0, rss_for_beam(single, w, m, g, std::vector<double>{shadow[l]}) / 10.0);
    }
    EXPECT_NEAR(rss_for_beam(ps, w, m, g, shadow, true), 10.0 * std::log10(linear), 1e-10);
}

TEST(Channel, EmptyPathSetIsNoCoverage)
{
    PathSet ps;
    const CVector w = CVector::Ones(64) / 8.0;
    EXPECT_TRUE(is_no_coverage(rss_for_beam(ps, w, PathLossModel{}, ArrayGeometry{}, std::vector<double>{})));
    PathSet behind;
    behind.paths.push_back(los_path(0.0, 0.0, 10.0));
    behind.paths[0].in_sector = false;
    EXPECT_TRUE(is_no_coverage(rss_for_beam(behind, w, PathLossModel{}, ArrayGeometry{}, std::vector<double>{0.0})));
}

TEST(Channel, RandomThreePathSetMatchesBruteForce)
{
    const Codebook cb = build_codebook(CodebookSpec::default_spec());
    const PathLossModel m;
    Rng rng(21);
    std::uniform_real_distribution<double> az(-89.0, 89.0), el(-30.0, 30.0), len(2.0, 300.0);
    std::normal_distribution<double> sh(0.0, 4.0);
    for (int k = 0; k < 50; ++k) {
        PathSet ps;
        std::vector<double> shadow;
        for (int l = 0; l < 3; ++l) {
            auto p = los_path(az(rng), el(rng), len(rng));
            p.reflection_count = l;
            p.surface_loss_db = 6.0 * l;
            ps.paths.push_back(p);
            shadow.push_back(sh(rng));
        }
        const auto row = rss_row(ps, cb, m, shadow);
        for (int b = 0; b < cb.size(); b += 7) {
            const double ref = brute_rss(ps, cb.patterns[b].weights, cb.geometry(), m, shadow);
            EXPECT_NEAR(rss_for_beam(ps, cb.patterns[b], m, cb.geometry(), shadow), ref, 1e-9);
            EXPECT_NEAR(row[b], ref, 1e-9);
        }
    }
}

TEST(Channel, RssMatrixMatchesElementwise)
{
    SceneConfig c;
    c.vehicle_count = 5;
    c.seed = 3;
    const Episode e = generate_episode(c);
    const Codebook cb = build_codebook(CodebookSpec::default_spec());
    const ChannelConfig ch;
    const PathTracer tracer(environment_of(e), c.bs_position, ch.max_reflections);
    const Frame& f = e.frames[10];
    const Eigen::MatrixXd m = rss_matrix(f, tracer, cb, ch, 99, 10);
    ASSERT_EQ(m.rows(), 5);
    ASSERT_EQ(m.cols(), 152);
    for (int v = 0; v < 5; ++v) {
        const auto& veh = f.vehicles[static_cast<std::size_t>(v)];
        const PathSet ps = tracer.trace(veh.position, veh.id);
        const auto shadow = shadow_samples(99, 10, veh.id, ps.paths.size(), ch.path_loss.shadow_sigma_db);
        for (int b = 0; b < 152; ++b) {
            const double ref = brute_rss(ps, cb.patterns[b].weights, cb.geometry(), ch.path_loss, shadow);
            if (is_no_coverage(ref))
                EXPECT_TRUE(is_no_coverage(m(v, b)));
            else
                EXPECT_NEAR(m(v, b), ref, 1e-9);
        }
    }
}

TEST(Channel, SingleVehicleRowEqualsRssForBeam)
{
    SceneConfig c;
    c.vehicle_count = 1;
    const Episode e = generate_episode(c);
    const Codebook cb = build_codebook(CodebookSpec::default_spec());
    const ChannelConfig ch;
    const PathTracer tracer(environment_of(e), c.bs_position, ch.max_reflections);
    const Frame& f = e.frames[0];
    const Eigen::MatrixXd m = rss_matrix(f, tracer, cb, ch, 5, 0);
    const PathSet ps = tracer.trace(f.vehicles[0].position, f.vehicles[0].id);
    const auto shadow = shadow_samples(5, 0, f.vehicles[0].id, ps.paths.size(), ch.path_loss.shadow_sigma_db);
    for (int b = 0; b < cb.size(); ++b)
        EXPECT_EQ(m(0, b), rss_for_beam(ps, cb.patterns[b], ch.path_loss, cb.geometry(), shadow));
}

TEST(Channel, PermutingTheCodebookPermutesColumns)
{
    SceneConfig c;
    c.vehicle_count = 3;
    const Episode e = generate_episode(c);
    Codebook cb = build_codebook(CodebookSpec::default_spec());
    const ChannelConfig ch;
    const PathTracer tracer(environment_of(e), c.bs_position, ch.max_reflections);
    const Eigen::MatrixXd m = rss_matrix(e.frames[4], tracer, cb, ch, 1, 4);
    Codebook reversed = cb;
    std::reverse(reversed.patterns.begin(), reversed.patterns.end());
    const Eigen::MatrixXd r = rss_matrix(e.frames[4], tracer, reversed, ch, 1, 4);
    for (int b = 0; b < cb.size(); ++b)
        for (int v = 0; v < 3; ++v)
            EXPECT_EQ(m(v, b), r(v, cb.size() - 1 - b));
}

TEST(Channel, OptimalBeamRules)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(3, 12, -100.0);
    m.col(7).array() += 5.0;
    EXPECT_EQ(optimal_beam(m), 7);

    Eigen::MatrixXd t = Eigen::MatrixXd::Constant(2, 12, -100.0);
    t.col(3).array() = -50.0;
    t.col(9).array() = -50.0;
    EXPECT_EQ(optimal_beam(t), 3);

    Rng rng(8);
    std::normal_distribution<double> n(-80.0, 10.0);
    for (int k = 0; k < 200; ++k) {
        Eigen::MatrixXd r(10, 20);
        for (Eigen::Index i = 0; i < r.size(); ++i)
            r.data()[i] = n(rng);
        int best = 0;
        double best_sum = -1e300;
        for (int b = 0; b < 20; ++b) {
            double s = 0.0;
            for (int v = 0; v < 10; ++v)
                s += r(v, b);
            if (s > best_sum) {
                best_sum = s;
                best = b;
            }
        }
        EXPECT_EQ(optimal_beam(r), best);
    }

    const Eigen::MatrixXd dead = Eigen::MatrixXd::Constant(2, 5, kNoCoverage);
    EXPECT_THROW(optimal_beam(dead), DataError);
}

TEST(Channel, ShadowSamplesAreKeyedAndDeterministic)
{
    EXPECT_EQ(shadow_samples(1, 2, 3, 4, 4.0), shadow_samples(1, 2, 3, 4, 4.0));
    EXPECT_NE(shadow_samples(1, 2, 3, 4, 4.0), shadow_samples(1, 2, 4, 4, 4.0));
    for (double s : shadow_samples(1, 2, 3, 4, 0.0))
        EXPECT_EQ(s, 0.0);
}

TEST(Channel, ConfigJsonRoundTrip)
{
    ChannelConfig c;
    c.max_reflections = 1;
    c.power_domain_combining = true;
    c.path_loss.exponent_reflected = 3.5;
    EXPECT_EQ(channel_config_from_json(to_json(c)), c);
    json bad = to_json(c);
    bad["max_reflections"] = 3;
    EXPECT_THROW(channel_config_from_json(bad), ConfigError);
}
