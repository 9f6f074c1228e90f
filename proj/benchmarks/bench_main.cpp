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

#include <benchmark/benchmark.h>

#include "beamkd/experiment.hpp"

using namespace beamkd;

namespace {

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed)
{
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = n(rng);
    return m;
}

const Codebook& default_codebook()
{
    static const Codebook cb = build_codebook(CodebookSpec::default_spec());
    return cb;
}

} // namespace

static void BM_SteeringVector(benchmark::State& state)
{
    const ArrayGeometry g;
    double az = -60.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(steering_vector(g, az, 5.0));
        az = az > 60.0 ? -60.0 : az + 0.37;
    }
}
BENCHMARK(BM_SteeringVector);

static void BM_RssRow(benchmark::State& state)
{
    SceneConfig c;
    c.vehicle_count = 1;
    const Scene s = build_scene(c);
    const PathSet ps = trace_paths(s, s.vehicles.front().position, 2);
    const std::vector<double> shadow(ps.paths.size(), 0.0);
    const ChannelConfig ch;
    for (auto _ : state)
        benchmark::DoNotOptimize(rss_row(ps, default_codebook(), ch.path_loss, shadow));
    state.counters["paths"] = static_cast<double>(ps.paths.size());
}
BENCHMARK(BM_RssRow);

static void BM_TraceFrame(benchmark::State& state)
{
    SceneConfig c;
    c.vehicle_count = static_cast<int>(state.range(0));
    const Scene s = build_scene(c);
    const PathTracer tracer(environment_of(s), s.bs_position, 2);
    for (auto _ : state)
        for (const auto& v : s.vehicles)
            benchmark::DoNotOptimize(tracer.trace(v.position, v.id));
}
BENCHMARK(BM_TraceFrame)->Arg(8)->Arg(16);

static void BM_StudentForward(benchmark::State& state)
{
    Rng rng(1);
    const Mlp student = make_student(640, 152, StudentWidths{}, rng);
    const Matrix x = gaussian(state.range(0), 640, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(student.forward(x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StudentForward)->Arg(1)->Arg(64);

static void BM_TeacherForward(benchmark::State& state)
{
    Rng rng(1);
    const Teacher teacher(640, 3072, 800, 152, TeacherWidths{}, rng);
    const Matrix r = gaussian(state.range(0), 640, 2), b = gaussian(state.range(0), 3072, 3),
                 g = gaussian(state.range(0), 800, 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(teacher.forward({&r, &b, &g}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TeacherForward)->Arg(1)->Arg(64);

static void BM_LatentRelational(benchmark::State& state)
{
    const Matrix t = gaussian(state.range(0), 128, 5), s = gaussian(state.range(0), 128, 6);
    const DistillConfig c;
    for (auto _ : state)
        benchmark::DoNotOptimize(latent_relational_loss(t, s, c));
}
BENCHMARK(BM_LatentRelational)->Arg(32)->Arg(64);

static void BM_OutputRelational(benchmark::State& state)
{
    const Eigen::MatrixXcd w = codebook_matrix(default_codebook());
    const Matrix z = gaussian(state.range(0), w.rows(), 7);
    const Matrix teacher = beam_similarity_matrix(gaussian(state.range(0), w.rows(), 8), w,
                                                  OutputMode::straight_through).similarity;
    const DistillConfig c;
    for (auto _ : state)
        benchmark::DoNotOptimize(output_relational_loss(teacher, z, w, c));
}
BENCHMARK(BM_OutputRelational)->Arg(32)->Arg(64);
BENCHMARK_MAIN();
