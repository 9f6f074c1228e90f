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

// Acceptance driver: one PASS/FAIL line per criterion.
// usage: beamkd_acceptance <source-dir> <cli-binary> <work-dir>
// BEAMKD_ACCEPTANCE_ONLY=2,5 restricts the run to the listed criteria.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "beamkd/experiment.hpp"
#include "beamkd/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace beamkd;

namespace {

struct Context {
    fs::path source;
    fs::path cli;
    fs::path work;
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ExperimentConfig load_config(const Context& ctx, const std::string& name)
{
    return experiment_config_from_json(read_json_file(ctx.source / "configs" / name));
}

// ---- 1 -------------------------------------------------------------------------

Outcome gradients(const Context&)
{
    const auto t0 = Clock::now();
    const auto entries = gradient_suite(20, 2024);
    const double elapsed = seconds_since(t0);
    double worst = 0.0;
    std::string worst_name;
    for (const auto& e : entries)
        if (e.max_rel_error >= worst) {
            worst = e.max_rel_error;
            worst_name = e.name;
        }
    const bool ok = worst <= kGradTolerance && elapsed < 120.0;
    return {ok, fmt("%zu gradient checks x 20 configs, worst %.3g (%s), %.1f s", entries.size(), worst,
                    worst_name.c_str(), elapsed)};
}

// ---- 2 -------------------------------------------------------------------------

Vec3 mirror(Vec3 p, int axis, double plane)
{
    double* c[3] = {&p.x, &p.y, &p.z};
    *c[axis] = 2.0 * plane - *c[axis];
    return p;
}

double coord(const Vec3& p, int axis) { return axis == 0 ? p.x : axis == 1 ? p.y : p.z; }

// Independent per-element evaluation of the received strength for one vehicle.
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
        sum += 10.0 * std::log10(std::abs(acc)) -
               (m.p0_db + 10.0 * alpha * std::log10(p.length_m) + shadow[l] + p.surface_loss_db);
    }
    return any ? sum : kNoCoverage;
}

Outcome channel_oracle(const Context&)
{
    const Codebook cb = build_codebook(CodebookSpec::default_spec());
    const ChannelConfig ch;
    Rng rng(20240);
    std::uniform_int_distribution<int> wall_count(0, 2), axis_pick(0, 1), vehicles(1, 3);
    std::uniform_real_distribution<double> gap(4.0, 25.0), u(0.0, 1.0);
    int scenes = 0, length_fail = 0, count_fail = 0, rss_fail = 0, label_fail = 0;
    double worst_len = 0.0, worst_rss = 0.0;
    std::array<int, 3> by_walls{};

    for (int s = 0; s < 200; ++s) {
        const int walls = wall_count(rng);
        const int axis = axis_pick(rng);
        ++by_walls[static_cast<std::size_t>(walls)];
        const Vec3 tx{60.0, -3.0, 6.0};
        // Slabs perpendicular to `axis`, one below and one above the transmitter.
        const double lo = coord(tx, axis) - gap(rng), hi = coord(tx, axis) + gap(rng);
        std::vector<BuildingBox> boxes;
        std::vector<double> planes;
        auto slab = [&](double face, bool below) {
            Vec3 a{-1e4, -1e4, 0.0}, b{1e4, 1e4, 1e4};
            double* ca[3] = {&a.x, &a.y, &a.z};
            double* cb_[3] = {&b.x, &b.y, &b.z};
            *ca[axis] = below ? face - 1.0 : face;
            *cb_[axis] = below ? face : face + 1.0;
            boxes.push_back({a, b, 3.0 + 6.0 * u(rng)});
            planes.push_back(face);
        };
        if (walls >= 1)
            slab(lo, true);
        if (walls == 2)
            slab(hi, false);
        const PathTracer tracer(Environment{boxes, false, 0.0}, tx, 2);

        Frame frame;
        const int nv = vehicles(rng);
        for (int v = 0; v < nv; ++v) {
            VehicleState st;
            st.id = v;
            double x = 60.0 + 100.0 * (u(rng) - 0.5), y = 1.0 + 10.0 * u(rng);
            // Keep receivers strictly between the slabs.
            double& along = axis == 0 ? x : y;
            const double top = walls == 2 ? hi : coord(tx, axis) + 30.0;
            along = lo + 0.5 + (top - lo - 1.0) * u(rng);
            st.position = {x, y, 1.5};
            frame.vehicles.push_back(st);
        }

        Eigen::MatrixXd brute(nv, cb.size());
        for (int v = 0; v < nv; ++v) {
            const Vec3 rx = frame.vehicles[static_cast<std::size_t>(v)].position;
            const PathSet ps = tracer.trace(rx, v);
            std::vector<double> expect{(tx - rx).norm()};
            for (double p : planes)
                expect.push_back((mirror(tx, axis, p) - rx).norm());
            if (planes.size() == 2) {
                expect.push_back((mirror(mirror(tx, axis, planes[0]), axis, planes[1]) - rx).norm());
                expect.push_back((mirror(mirror(tx, axis, planes[1]), axis, planes[0]) - rx).norm());
            }
            std::sort(expect.begin(), expect.end());
            if (ps.paths.size() != expect.size()) {
                ++count_fail;
                continue;
            }
            for (std::size_t l = 0; l < expect.size(); ++l) {
                const double err = std::abs(ps.paths[l].length_m - expect[l]);
                worst_len = std::max(worst_len, err);
                length_fail += err > 1e-9;
            }
            const auto shadow = shadow_samples(7, s, v, ps.paths.size(), ch.path_loss.shadow_sigma_db);
            for (int b = 0; b < cb.size(); ++b) {
                const double ref = brute_rss(ps, cb.patterns[static_cast<std::size_t>(b)].weights, cb.geometry(),
                                             ch.path_loss, shadow);
                brute(v, b) = ref;
                const double lib = rss_for_beam(ps, cb.patterns[static_cast<std::size_t>(b)], ch.path_loss,
                                                cb.geometry(), shadow);
                if (is_no_coverage(ref) != is_no_coverage(lib)) {
                    ++rss_fail;
                } else if (!is_no_coverage(ref)) {
                    worst_rss = std::max(worst_rss, std::abs(lib - ref));
                    rss_fail += std::abs(lib - ref) > 1e-9;
                }
            }
        }
        const Eigen::MatrixXd lib = rss_matrix(frame, tracer, cb, ch, 7, s);
        for (Eigen::Index i = 0; i < lib.size(); ++i) {
            const double a = lib.data()[i], b = brute.data()[i];
            if (is_no_coverage(a) != is_no_coverage(b) || (!is_no_coverage(a) && std::abs(a - b) > 1e-9))
                ++rss_fail;
        }
        // Brute-force argmax of the vehicle sum.
        int best = -1;
        double best_v = 0.0;
        for (int b = 0; b < cb.size(); ++b) {
            double sum = 0.0;
            for (int v = 0; v < nv; ++v)
                sum += brute(v, b);
            if (std::isfinite(sum) && (best < 0 || sum > best_v)) {
                best = b;
                best_v = sum;
            }
        }
        int label = -1;
        try {
            label = optimal_beam(lib);
        } catch (const DataError&) {
        }
        label_fail += label != best;
        ++scenes;
    }
    const bool ok = length_fail == 0 && count_fail == 0 && rss_fail == 0 && label_fail == 0;
    return {ok, fmt("%d scenes (%d/%d/%d with 0/1/2 walls), path-count mismatches %d, length errors > 1e-9: %d "
                    "(worst %.2e m), rss mismatches %d (worst %.2e dB), label mismatches %d",
                    scenes, by_walls[0], by_walls[1], by_walls[2], count_fail, length_fail, worst_len, rss_fail,
                    worst_rss, label_fail)};
}

// ---- 3 -------------------------------------------------------------------------

Outcome hyperbolic(const Context&)
{
    Rng rng(31);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.05, 1.5);
    int violations = 0;
    double worst_slack = std::numeric_limits<double>::infinity(), worst_sym = 0.0, worst_id = 0.0, worst_mobius = 0.0;
    constexpr int dim = 8;
    auto point = [&](double c) {
        Eigen::VectorXd v(dim);
        const double s = scale(rng);
        for (int i = 0; i < dim; ++i)
            v[i] = s * n(rng);
        return exp_map(v, c);
    };
    for (double c : {0.5, 1.0, 2.0}) {
        for (int t = 0; t < 10000; ++t) {
            const auto x = point(c), y = point(c), z = point(c);
            const double dxy = poincare_distance(x, y, c), dyx = poincare_distance(y, x, c);
            const double dyz = poincare_distance(y, z, c), dxz = poincare_distance(x, z, c);
            const double dxx = poincare_distance(x, x, c);
            const double slack = dxy + dyz - dxz;
            worst_slack = std::min(worst_slack, slack);
            worst_sym = std::max(worst_sym, std::abs(dxy - dyx));
            worst_id = std::max(worst_id, std::abs(dxx));
            violations += dxy < 0.0 || dyz < 0.0 || dxz < 0.0;
            violations += std::abs(dxx) > 1e-9;
            violations += std::abs(dxy - dyx) > 1e-12;
            violations += slack < -1e-9;
            const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
            const double e1 = (mobius_add(x, zero, c) - x).norm(), e2 = mobius_add(-x, x, c).norm();
            worst_mobius = std::max({worst_mobius, e1, e2});
            violations += e1 > 1e-12 || e2 > 1e-12;
        }
    }
    return {violations == 0,
            fmt("30000 triples over c in {0.5,1,2}: violations %d, min triangle slack %.2e, max |d(x,y)-d(y,x)| %.2e, "
                "max d(x,x) %.2e, max mobius identity error %.2e",
                violations, worst_slack, worst_sym, worst_id, worst_mobius)};
}

// ---- 4 -------------------------------------------------------------------------

Outcome metrics_oracle(const Context&)
{
    Rng rng(44);
    constexpr int beams = 20, n = 1000, instances = 1000;
    std::uniform_int_distribution<int> coarse(0, 15), pick(0, beams - 1), level(-100, -80);
    int topk_fail = 0, mpr_fail = 0, oracle_fail = 0;
    Matrix p(n, beams);
    std::vector<int> labels(n), pred(n), best(n);
    std::vector<std::vector<float>> rss(n, std::vector<float>(beams));
    std::vector<int> order(beams);
    for (int inst = 0; inst < instances; ++inst) {
        for (int i = 0; i < n; ++i) {
            for (int b = 0; b < beams; ++b) {
                p(i, b) = coarse(rng);
                rss[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] = static_cast<float>(level(rng));
            }
            labels[static_cast<std::size_t>(i)] = pick(rng);
            pred[static_cast<std::size_t>(i)] = pick(rng);
        }
        std::array<int, 4> hits{};
        const std::array<int, 4> ks{1, 5, 10, beams};
        double mpr_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p(i, a) > p(i, b); });
            const auto pos = std::find(order.begin(), order.end(), labels[static_cast<std::size_t>(i)]) - order.begin();
            for (std::size_t k = 0; k < ks.size(); ++k)
                hits[k] += pos < ks[k];
            // Rank from a descending sort: first slot holding the predicted value.
            auto row = rss[static_cast<std::size_t>(i)];
            const float v = row[static_cast<std::size_t>(pred[static_cast<std::size_t>(i)])];
            std::sort(row.begin(), row.end(), std::greater<>());
            const int rank = static_cast<int>(std::find(row.begin(), row.end(), v) - row.begin()) + 1;
            mpr_sum += (beams - rank + 1.0) / beams;
            const auto& r = rss[static_cast<std::size_t>(i)];
            best[static_cast<std::size_t>(i)] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
        }
        for (std::size_t k = 0; k < ks.size(); ++k)
            topk_fail += top_k_accuracy(p, labels, ks[k]) != hits[k] / static_cast<double>(n);
        mpr_fail += mpr(pred, rss).value != mpr_sum / n * 100.0;
        oracle_fail += mpr(best, rss).value != 100.0 || top_k_accuracy(p, labels, beams) != 1.0;
    }
    return {topk_fail == 0 && mpr_fail == 0 && oracle_fail == 0,
            fmt("%d instances (B=%d, n=%d): top-k mismatches %d, MPR mismatches %d, oracle-predictor failures %d",
                instances, beams, n, topk_fail, mpr_fail, oracle_fail)};
}

// ---- 5 -------------------------------------------------------------------------

Outcome codebook(const Context& ctx)
{
    const Codebook cb = build_codebook(load_config(ctx, "default.json").codebook);
    const auto t = similarity_table(cb);
    const auto b = static_cast<std::size_t>(cb.size());
    double norm_err = 0.0, diag_err = 0.0, sym_err = 0.0;
    for (const auto& p : cb.patterns)
        norm_err = std::max(norm_err, std::abs(p.weights.norm() - 1.0));
    for (std::size_t i = 0; i < b; ++i) {
        diag_err = std::max(diag_err, std::abs(t[i * b + i] - 1.0));
        for (std::size_t j = 0; j < b; ++j)
            sym_err = std::max(sym_err, std::abs(t[i * b + j] - t[j * b + i]));
    }
    const bool ok = cb.size() == 152 && norm_err <= 1e-12 && diag_err <= 1e-12 && sym_err <= 1e-12;
    return {ok, fmt("%d patterns, max unit-norm error %.2e, max |s_ii - 1| %.2e, max asymmetry %.2e", cb.size(),
                    norm_err, diag_err, sym_err)};
}

// ---- 6, 9 (share the desk dataset) ----------------------------------------------

struct Desk {
    ExperimentConfig config;
    Codebook codebook;
    Dataset data;
};

Desk& desk(const Context& ctx)
{
    static std::unique_ptr<Desk> d;
    if (!d) {
        d = std::make_unique<Desk>();
        d->config = load_config(ctx, "desk_2lane.json");
        d->codebook = build_codebook(d->config.codebook);
        d->data = generate_dataset(d->config, d->codebook);
    }
    return *d;
}

Outcome distillation(const Context& ctx)
{
    const auto t0 = Clock::now();
    Desk& d = desk(ctx);
    const ReproduceResult r = reproduce(d.config, d.data, d.codebook, {1, 2, 3});
    const double elapsed = seconds_since(t0);
    const double rkd = r.median_mpr.at("RKD-both"), kd = r.median_mpr.at("KD"), base = r.median_mpr.at("withoutKD");
    const bool ok = rkd >= base && kd >= base && elapsed <= 1200.0;
    std::string detail = fmt("%zu samples, median MPR RKD-both %.3f, KD %.3f, withoutKD %.3f, teacher %.3f, %.0f s",
                             d.data.samples.size(), rkd, kd, base, r.median_mpr.at("teacher"), elapsed);
    if (rkd < base || kd < base) {
        detail += "; per-seed deltas vs withoutKD:";
        for (const auto& s : r.seeds)
            detail += fmt(" s%llu RKD %+.3f KD %+.3f", static_cast<unsigned long long>(s.seed),
                          s.reports.at("RKD-both").mpr_percent - s.reports.at("withoutKD").mpr_percent,
                          s.reports.at("KD").mpr_percent - s.reports.at("withoutKD").mpr_percent);
    }
    return {ok, detail};
}

Outcome dataset_sanity(const Context& ctx)
{
    Desk& d = desk(ctx);
    std::size_t good = 0;
    for (const auto& s : d.data.samples)
        good += s.label == optimal_beam(std::span<const float>(s.rss_vector));
    const auto hist = label_histogram(d.data.samples, d.codebook.size());
    const double cover = top_label_coverage(hist, 10);
    std::vector<int> sorted = hist;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::string top;
    for (int i = 0; i < 10; ++i)
        top += (i ? "," : "") + std::to_string(sorted[static_cast<std::size_t>(i)]);
    std::string detail = fmt("%zu/%zu labels equal argmax; top-10 label counts [%s] cover %.1f%%", good,
                             d.data.samples.size(), top.c_str(), 100.0 * cover);
    if (cover <= 0.5)
        detail += " (warning: weak label concentration)";
    return {good == d.data.samples.size(), detail};
}

// ---- 7 -------------------------------------------------------------------------

Outcome parameters(const Context& ctx)
{
    bool ok = true;
    std::string detail;
    for (const char* name : {"default.json", "desk_2lane.json"}) {
        const ExperimentConfig c = load_config(ctx, name);
        const auto t = teacher_parameter_count(c), s = student_parameter_count(c);
        const double ratio = static_cast<double>(s) / static_cast<double>(t);
        ok = ok && ratio <= 0.15;
        detail += fmt("%s%s student %zu / teacher %zu = %.4f", detail.empty() ? "" : "; ", name, s, t, ratio);
    }
    return {ok, detail};
}

// ---- 8 -------------------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Metric files of a run, keyed by path relative to the run root.
std::map<std::string, std::string> metric_files(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().extension() != ".json" || e.path().filename() == "manifest.json")
            continue;
        out[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
}

Outcome determinism(const Context& ctx)
{
    std::vector<std::map<std::string, std::string>> runs;
    for (int k = 0; k < 2; ++k) {
        const fs::path out = ctx.work / ("determinism_" + std::to_string(k));
        fs::remove_all(out);
        const std::string cmd = "\"" + ctx.cli.string() + "\" reproduce --config \"" +
                                (ctx.source / "configs" / "smoke.json").string() + "\" --out \"" + out.string() +
                                "\" > \"" + (ctx.work / ("determinism_" + std::to_string(k) + ".log")).string() +
                                "\" 2>&1";
        if (std::system(cmd.c_str()) != 0)
            return {false, "reproduce run " + std::to_string(k) + " failed: " + cmd};
        fs::path root;
        for (const auto& e : fs::directory_iterator(out))
            if (e.is_directory())
                root = e.path();
        if (root.empty())
            return {false, "no run directory under " + out.string()};
        runs.push_back(metric_files(root));
    }
    const bool same = runs[0] == runs[1] && !runs[0].empty();

    const ExperimentConfig c = load_config(ctx, "smoke.json");
    const Codebook cb = build_codebook(c.codebook);
    const Dataset d = generate_dataset(c, cb);
    const fs::path dir = ctx.work / "roundtrip";
    fs::remove_all(dir);
    write_dataset(d, dir);
    const Dataset back = read_dataset(dir);
    const fs::path dir2 = ctx.work / "roundtrip2";
    fs::remove_all(dir2);
    write_dataset(back, dir2);
    bool bytes = true;
    for (const auto& e : fs::directory_iterator(dir))
        bytes = bytes && slurp(e.path()) == slurp(dir2 / e.path().filename());
    const bool round = back == d && bytes;
    return {same && round, fmt("%zu metric JSON files %s across two runs; dataset round trip (%zu samples) %s",
                               runs[0].size(), same ? "byte-identical" : "DIFFER", d.samples.size(),
                               round ? "bit-exact" : "NOT bit-exact")};
}

} // namespace

int main(int argc, char** argv)
{
    if (argc != 4) {
        std::cerr << "usage: " << argv[0] << " <source-dir> <cli-binary> <work-dir>\n";
        return 2;
    }
    const Context ctx{argv[1], argv[2], argv[3]};
    fs::create_directories(ctx.work);

    std::set<int> only;
    if (const char* env = std::getenv("BEAMKD_ACCEPTANCE_ONLY")) {
        std::stringstream ss(env);
        std::string item;
        while (std::getline(ss, item, ','))
            only.insert(std::stoi(item));
    }

    const std::vector<std::pair<int, Outcome (*)(const Context&)>> criteria{
        {1, gradients}, {2, channel_oracle}, {3, hyperbolic}, {4, metrics_oracle}, {5, codebook},
        {6, distillation}, {7, parameters}, {8, determinism}, {9, dataset_sanity}};

    int failures = 0;
    for (const auto& [id, run] : criteria) {
        if (!only.empty() && !only.count(id))
            continue;
        Outcome o;
        try {
            o = run(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
