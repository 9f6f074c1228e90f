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
#include <numeric>

#include "beamkd/metrics.hpp"

using namespace beamkd;

namespace {

// Sort-based reference: stable sort keeps the lower index ahead on ties.
int sorted_position(const std::vector<double>& p, int label)
{
    std::vector<int> idx(p.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(b)]; });
    return static_cast<int>(std::find(idx.begin(), idx.end(), label) - idx.begin());
}

std::vector<std::vector<float>> random_rss(int n, int beams, Rng& rng)
{
    std::uniform_int_distribution<int> level(-120, -60);  // integer levels force ties
    std::vector<std::vector<float>> out(static_cast<std::size_t>(n), std::vector<float>(static_cast<std::size_t>(beams)));
    for (auto& r : out)
        for (auto& v : r)
            v = static_cast<float>(level(rng));
    return out;
}

} // namespace

TEST(Metrics, TopKMatchesSortOracle)
{
    Rng rng(1);
    constexpr int beams = 20, n = 1000;
    std::uniform_int_distribution<int> coarse(0, 9);
    std::uniform_int_distribution<int> pick(0, beams - 1);
    Matrix p(n, beams);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        for (int b = 0; b < beams; ++b)
            p(i, b) = coarse(rng) / 10.0;
        labels[static_cast<std::size_t>(i)] = pick(rng);
    }
    for (int k = 1; k <= beams; ++k) {
        int hits = 0;
        for (int i = 0; i < n; ++i) {
            std::vector<double> row(p.row(i).data(), p.row(i).data() + beams);
            hits += sorted_position(row, labels[static_cast<std::size_t>(i)]) < k;
        }
        EXPECT_DOUBLE_EQ(top_k_accuracy(p, labels, k), hits / static_cast<double>(n)) << "k=" << k;
    }
    EXPECT_DOUBLE_EQ(top_k_accuracy(p, labels, beams), 1.0);
}

TEST(Metrics, TiesResolveToLowestIndex)
{
    Matrix p(1, 4);
    p << 0.25, 0.25, 0.25, 0.25;
    EXPECT_EQ(predictions(p)[0], 0);
    const std::vector<int> l2{2};
    EXPECT_DOUBLE_EQ(top_k_accuracy(p, l2, 2), 0.0);
    EXPECT_DOUBLE_EQ(top_k_accuracy(p, l2, 3), 1.0);
}

TEST(Metrics, RankMatchesCountingOracle)
{
    Rng rng(2);
    const auto rss = random_rss(1000, 20, rng);
    std::uniform_int_distribution<int> pick(0, 19);
    for (const auto& row : rss) {
        const int y = pick(rng);
        int better = 0;
        for (float v : row)
            better += v > row[static_cast<std::size_t>(y)];
        EXPECT_EQ(beam_rank(row, y), better + 1);
        EXPECT_DOUBLE_EQ(percentile(row, y), (20.0 - better) / 20.0);
    }
}

TEST(Metrics, OracleAndWorstPredictors)
{
    Rng rng(3);
    std::uniform_real_distribution<float> u(-120.0f, -60.0f);
    constexpr int beams = 20, n = 200;
    std::vector<std::vector<float>> rss(n, std::vector<float>(beams));
    std::vector<int> best(n), worst(n);
    for (int i = 0; i < n; ++i) {
        for (auto& v : rss[static_cast<std::size_t>(i)])
            v = u(rng);
        const auto& r = rss[static_cast<std::size_t>(i)];
        best[static_cast<std::size_t>(i)] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
        worst[static_cast<std::size_t>(i)] = static_cast<int>(std::min_element(r.begin(), r.end()) - r.begin());
    }
    EXPECT_DOUBLE_EQ(mpr(best, rss).value, 100.0);
    EXPECT_NEAR(mpr(worst, rss).value, 100.0 / beams, 1e-12);
}

TEST(Metrics, SentinelSamplesAreExcluded)
{
    std::vector<std::vector<float>> rss{{-70.0f, -80.0f}, {static_cast<float>(kNoCoverage), -90.0f}, {-60.0f, -65.0f}};
    const std::vector<int> pred{0, 0, 1};
    const Aggregate m = mpr(pred, rss);
    EXPECT_EQ(m.used, 2);
    EXPECT_EQ(m.excluded, 1);
    EXPECT_DOUBLE_EQ(m.value, 75.0);
    EXPECT_DOUBLE_EQ(mean_rss(pred, rss).value, -67.5);
    const std::vector<int> only{0};
    const std::vector<std::vector<float>> dead{{static_cast<float>(kNoCoverage), -1.0f}};
    EXPECT_THROW(mpr(only, dead), DataError);
}

TEST(Metrics, EmptyAndMismatchedInputs)
{
    const std::vector<int> none;
    EXPECT_THROW(mpr(none, {}), DataError);
    EXPECT_THROW(top_k_accuracy(Matrix(0, 3), none, 1), DataError);
    const std::vector<int> one{0};
    EXPECT_THROW(top_k_accuracy(Matrix::Ones(1, 3), one, 4), std::invalid_argument);
}

TEST(Metrics, ReportJsonRoundTrip)
{
    Rng rng(4);
    constexpr int n = 50, beams = 8;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix p(n, beams);
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p.data()[i] = u(rng);
    std::vector<int> labels(n);
    for (auto& l : labels)
        l = static_cast<int>(u(rng) * beams);
    const auto rss = random_rss(n, beams, rng);
    const MetricsReport r = evaluate(p, labels, rss, {1, 5, 10});
    EXPECT_DOUBLE_EQ(r.top_k.at(10), 1.0);  // clamped to B
    EXPECT_EQ(metrics_report_from_json(json::parse(to_json(r).dump())), r);
    EXPECT_NE(report_table_row("KD", r).find("KD"), std::string::npos);
}
