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

#include "beamkd/channel.hpp"

#include <algorithm>

namespace beamkd {

namespace {

constexpr double kGeomEps = 1e-9;

} // namespace

bool segment_intersects_box(const Vec3& a, const Vec3& b, const BuildingBox& box)
{
    double t0 = kGeomEps;
    double t1 = 1.0 - kGeomEps;
    for (int axis = 0; axis < 3; ++axis) {
        const double o = a[axis];
        const double d = b[axis] - a[axis];
        const double lo = box.min_corner[axis] + kGeomEps;
        const double hi = box.max_corner[axis] - kGeomEps;
        if (std::abs(d) < 1e-300) {
            if (o <= lo || o >= hi)
                return false;
            continue;
        }
        double ta = (lo - o) / d;
        double tb = (hi - o) / d;
        if (ta > tb)
            std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 >= t1)
            return false;
    }
    return true;
}

namespace {

Vec3 mirror(const Vec3& p, int axis, double value)
{
    Vec3 q = p;
    if (axis == 0)
        q.x = 2.0 * value - p.x;
    else if (axis == 1)
        q.y = 2.0 * value - p.y;
    else
        q.z = 2.0 * value - p.z;
    return q;
}

// Point where segment a->b crosses the plane coordinate[axis] = value; false if it does not.
bool cross_plane(const Vec3& a, const Vec3& b, int axis, double value, Vec3& hit)
{
    const double d = b[axis] - a[axis];
    if (std::abs(d) < 1e-300)
        return false;
    const double s = (value - a[axis]) / d;
    if (s <= 0.0 || s >= 1.0)
        return false;
    hit = a + (b - a) * s;
    return true;
}

} // namespace

void PathLossModel::validate() const
{
    if (!(exponent_los > 0.0) || !(exponent_reflected > 0.0))
        throw ConfigError("path-loss exponent must be > 0");
    if (!(shadow_sigma_db >= 0.0))
        throw ConfigError("shadow_sigma_db must be >= 0");
    if (!(carrier_hz > 0.0) || !std::isfinite(p0_db))
        throw ConfigError("carrier_hz must be > 0 and p0_db finite");
}

void ChannelConfig::validate() const
{
    path_loss.validate();
    if (max_reflections < 0 || max_reflections > 2)
        throw ConfigError("channel.max_reflections must be 0, 1 or 2");
}

Environment environment_of(const Scene& scene)
{
    return {scene.buildings, scene.config.ground_reflection, scene.config.ground_reflection_loss_db};
}

Environment environment_of(const Episode& episode)
{
    return {episode.buildings, episode.config.ground_reflection, episode.config.ground_reflection_loss_db};
}

PathTracer::PathTracer(Environment env, Vec3 tx, int max_reflections)
    : env_(std::move(env)), tx_(tx), max_reflections_(max_reflections)
{
    if (max_reflections < 0 || max_reflections > 2)
        throw std::invalid_argument("max_reflections must be 0, 1 or 2");

    constexpr double inf = std::numeric_limits<double>::infinity();
    if (env_.ground_reflection)
        faces_.push_back({2, 0.0, +1.0, {-inf, -inf, -inf}, {inf, inf, inf}, env_.ground_reflection_loss_db});
    for (const auto& box : env_.buildings) {
        for (int axis = 0; axis < 3; ++axis) {
            for (int side = 0; side < 2; ++side) {
                // Building floors rest on the ground and never reflect.
                if (axis == 2 && side == 0)
                    continue;
                Face f{};
                f.axis = axis;
                f.value = side == 0 ? box.min_corner[axis] : box.max_corner[axis];
                f.outward = side == 0 ? -1.0 : 1.0;
                for (int k = 0; k < 3; ++k) {
                    f.lo[k] = box.min_corner[k];
                    f.hi[k] = box.max_corner[k];
                }
                f.loss_db = box.reflection_loss_db;
                faces_.push_back(f);
            }
        }
    }

    const std::size_t nf = faces_.size();
    image1_.resize(nf);
    image2_.assign(nf, {});
    for (std::size_t i = 0; i < nf; ++i) {
        image1_[i] = mirror(tx_, faces_[i].axis, faces_[i].value);
        if (max_reflections_ >= 2) {
            image2_[i].resize(nf);
            for (std::size_t j = 0; j < nf; ++j)
                image2_[i][j] = mirror(image1_[i], faces_[j].axis, faces_[j].value);
        }
    }
}

bool PathTracer::occluded(const Vec3& a, const Vec3& b) const
{
    return std::any_of(env_.buildings.begin(), env_.buildings.end(),
                       [&](const BuildingBox& box) { return segment_intersects_box(a, b, box); });
}

bool PathTracer::on_face(const Face& f, const Vec3& p) const
{
    for (int k = 0; k < 3; ++k) {
        if (k == f.axis)
            continue;
        if (p[k] < f.lo[k] - kGeomEps || p[k] > f.hi[k] + kGeomEps)
            return false;
    }
    return true;
}

PropagationPath PathTracer::make_path(const Vec3& first_hop, double length, int reflections, double loss) const
{
    const Vec3 d = first_hop - tx_;
    PropagationPath p;
    p.azimuth_deg = rad2deg(std::atan2(d.x, d.y));
    p.elevation_deg = rad2deg(std::atan2(d.z, std::hypot(d.x, d.y)));
    p.in_sector = d.y >= 0.0;
    p.length_m = length;
    p.delay_s = length / kSpeedOfLight;
    p.reflection_count = reflections;
    p.surface_loss_db = loss;
    return p;
}

PathSet PathTracer::trace(const Vec3& rx, int vehicle_id) const
{
    PathSet out;
    out.vehicle_id = vehicle_id;

    if (!occluded(tx_, rx))
        out.paths.push_back(make_path(rx, (rx - tx_).norm(), 0, 0.0));

    auto outside = [](const Face& f, const Vec3& p) { return f.outward * (p[f.axis] - f.value) > kGeomEps; };

    const std::size_t nf = faces_.size();
    if (max_reflections_ >= 1) {
        for (std::size_t i = 0; i < nf; ++i) {
            const Face& f = faces_[i];
            if (!outside(f, tx_) || !outside(f, rx))
                continue;
            Vec3 q;
            if (!cross_plane(rx, image1_[i], f.axis, f.value, q) || !on_face(f, q))
                continue;
            if (occluded(tx_, q) || occluded(q, rx))
                continue;
            out.paths.push_back(make_path(q, (image1_[i] - rx).norm(), 1, f.loss_db));
        }
    }
    if (max_reflections_ >= 2) {
        for (std::size_t i = 0; i < nf; ++i) {
            const Face& f1 = faces_[i];
            if (!outside(f1, tx_))
                continue;
            for (std::size_t j = 0; j < nf; ++j) {
                if (i == j)
                    continue;
                const Face& f2 = faces_[j];
                if (!outside(f2, rx) || !outside(f2, image1_[i]))
                    continue;
                Vec3 q2, q1;
                if (!cross_plane(rx, image2_[i][j], f2.axis, f2.value, q2) || !on_face(f2, q2))
                    continue;
                if (!outside(f1, q2))
                    continue;
                if (!cross_plane(q2, image1_[i], f1.axis, f1.value, q1) || !on_face(f1, q1))
                    continue;
                if (occluded(tx_, q1) || occluded(q1, q2) || occluded(q2, rx))
                    continue;
                out.paths.push_back(make_path(q1, (image2_[i][j] - rx).norm(), 2, f1.loss_db + f2.loss_db));
            }
        }
    }

    std::stable_sort(out.paths.begin(), out.paths.end(),
                     [](const PropagationPath& a, const PropagationPath& b) { return a.length_m < b.length_m; });
    return out;
}

PathSet trace_paths(const Scene& scene, const Vec3& rx, int max_reflections)
{
    return PathTracer(environment_of(scene), scene.bs_position, max_reflections).trace(rx);
}

double path_loss_db(const PropagationPath& path, const PathLossModel& model, double shadow_sample_db)
{
    if (!(path.length_m >= 1.0))
        throw std::invalid_argument("path length below the 1 m reference distance");
    return model.p0_db + 10.0 * model.exponent_for(path) * std::log10(path.length_m) + shadow_sample_db +
           path.surface_loss_db;
}

std::complex<double> path_phase(const PropagationPath& path, double carrier_hz)
{
    if (!(path.delay_s >= 0.0))
        throw std::invalid_argument("negative path delay");
    return std::polar(1.0, -2.0 * std::numbers::pi * carrier_hz * path.delay_s);
}

std::vector<double> shadow_samples(std::uint64_t seed, int time_step, int vehicle_id, std::size_t path_count, double sigma_db)
{
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(time_step), static_cast<std::uint64_t>(vehicle_id), 0x5AD0));
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> out(path_count);
    for (auto& s : out)
        s = sigma_db * n(rng);
    return out;
}

namespace {

double combine(std::span<const double> terms, bool power_domain)
{
    if (terms.empty())
        return kNoCoverage;
    if (!power_domain) {
        double sum = 0.0;
        for (double t : terms)
            sum += t;
        return sum;
    }
    double linear = 0.0;
    for (double t : terms)
        linear += std::pow(10.0, t / 10.0);
    return linear > 0.0 ? 10.0 * std::log10(linear) : kNoCoverage;
}

} // namespace

double rss_for_beam(const PathSet& pathset, const CVector& beam_weights, const PathLossModel& model,
                    const ArrayGeometry& geom, std::span<const double> shadow, bool power_domain)
{
    if (shadow.size() != pathset.paths.size())
        throw std::invalid_argument("rss_for_beam: one shadow sample per path required");
    std::vector<double> terms;
    for (std::size_t l = 0; l < pathset.paths.size(); ++l) {
        const auto& p = pathset.paths[l];
        if (!p.in_sector)
            continue;
        const auto a = steering_vector(geom, p.azimuth_deg, p.elevation_deg);
        terms.push_back(array_response_db(beam_weights, a.entries) - path_loss_db(p, model, shadow[l]));
    }
    return combine(terms, power_domain);
}

std::vector<double> rss_row(const PathSet& pathset, const Codebook& codebook, const PathLossModel& model,
                            std::span<const double> shadow, bool power_domain)
{
    if (shadow.size() != pathset.paths.size())
        throw std::invalid_argument("rss_row: one shadow sample per path required");
    std::vector<CVector> steering;
    std::vector<double> losses;
    for (std::size_t l = 0; l < pathset.paths.size(); ++l) {
        const auto& p = pathset.paths[l];
        if (!p.in_sector)
            continue;
        steering.push_back(steering_vector(codebook.geometry(), p.azimuth_deg, p.elevation_deg).entries);
        losses.push_back(path_loss_db(p, model, shadow[l]));
    }
    std::vector<double> row(static_cast<std::size_t>(codebook.size()));
    std::vector<double> terms(steering.size());
    for (std::size_t b = 0; b < row.size(); ++b) {
        const auto& w = codebook.patterns[b].weights;
        for (std::size_t l = 0; l < steering.size(); ++l)
            terms[l] = array_response_db(w, steering[l]) - losses[l];
        row[b] = combine(terms, power_domain);
    }
    return row;
}

Eigen::MatrixXd rss_matrix(const Frame& frame, const PathTracer& tracer, const Codebook& codebook,
                           const ChannelConfig& channel, std::uint64_t shadow_seed, int time_step)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(frame.vehicles.size()), codebook.size());
    for (std::size_t v = 0; v < frame.vehicles.size(); ++v) {
        const auto& veh = frame.vehicles[v];
        const PathSet ps = tracer.trace(veh.position, veh.id);
        const auto shadow =
            shadow_samples(shadow_seed, time_step, veh.id, ps.paths.size(), channel.path_loss.shadow_sigma_db);
        const auto row = rss_row(ps, codebook, channel.path_loss, shadow, channel.power_domain_combining);
        for (std::size_t b = 0; b < row.size(); ++b)
            out(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(b)) = row[b];
    }
    return out;
}

namespace {

template <typename T>
int argmax_lowest(std::span<const T> values)
{
    if (values.empty())
        throw std::invalid_argument("optimal_beam: empty codebook");
    int best = -1;
    for (std::size_t b = 0; b < values.size(); ++b) {
        const T v = values[b];
        if (std::isnan(v) || is_no_coverage(static_cast<double>(v)))
            continue;
        if (best < 0 || v > values[static_cast<std::size_t>(best)])
            best = static_cast<int>(b);
    }
    if (best < 0)
        throw DataError("no feasible beam");
    return best;
}

} // namespace

int optimal_beam(const Eigen::MatrixXd& rss)
{
    if (rss.cols() < 1)
        throw std::invalid_argument("optimal_beam: empty codebook");
    std::vector<double> sums(static_cast<std::size_t>(rss.cols()), 0.0);
    for (Eigen::Index b = 0; b < rss.cols(); ++b)
        for (Eigen::Index v = 0; v < rss.rows(); ++v)
            sums[static_cast<std::size_t>(b)] += rss(v, b);
    return optimal_beam(std::span<const double>(sums));
}

int optimal_beam(std::span<const double> rss_vector) { return argmax_lowest(rss_vector); }
int optimal_beam(std::span<const float> rss_vector) { return argmax_lowest(rss_vector); }

ChannelConfig channel_config_from_json(const json& j)
{
    ChannelConfig c;
    StrictObject o(j, "channel");
    c.max_reflections = o.get("max_reflections", c.max_reflections);
    c.power_domain_combining = o.get("power_domain_combining", c.power_domain_combining);
    StrictObject pl(o.section("path_loss"), "channel.path_loss");
    auto& m = c.path_loss;
    m.p0_db = pl.get("p0_db", m.p0_db);
    m.exponent_los = pl.get("exponent_los", m.exponent_los);
    m.exponent_reflected = pl.get("exponent_reflected", m.exponent_reflected);
    m.shadow_sigma_db = pl.get("shadow_sigma_db", m.shadow_sigma_db);
    m.carrier_hz = pl.get("carrier_hz", m.carrier_hz);
    pl.finish();
    o.finish();
    c.validate();
    return c;
}

json to_json(const ChannelConfig& c)
{
    const auto& m = c.path_loss;
    return {{"max_reflections", c.max_reflections},
            {"power_domain_combining", c.power_domain_combining},
            {"path_loss",
             {{"p0_db", m.p0_db},
              {"exponent_los", m.exponent_los},
              {"exponent_reflected", m.exponent_reflected},
              {"shadow_sigma_db", m.shadow_sigma_db},
              {"carrier_hz", m.carrier_hz}}}};
}

json to_json(const PathSet& ps)
{
    json paths = json::array();
    for (const auto& p : ps.paths)
        paths.push_back({{"azimuth_deg", p.azimuth_deg},
                         {"elevation_deg", p.elevation_deg},
                         {"delay_s", p.delay_s},
                         {"length_m", p.length_m},
                         {"reflection_count", p.reflection_count},
                         {"surface_loss_db", p.surface_loss_db},
                         {"in_sector", p.in_sector}});
    return {{"vehicle_id", ps.vehicle_id}, {"paths", std::move(paths)}};
}

} // namespace beamkd
