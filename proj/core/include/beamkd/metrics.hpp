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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "beamkd/io.hpp"
#include "beamkd/nn.hpp"

namespace beamkd {

// Position of `label` when indices are ordered by descending probability, ties by lowest index (0-based).
int probability_position(std::span<const double> probs, int label);

double top_k_accuracy(const Matrix& probabilities, std::span<const int> labels, int k);

// 1 + #{b : S(b) > S(pred)}.
int beam_rank(std::span<const float> rss, int predicted);
// (B - rank + 1) / B.
double percentile(std::span<const float> rss, int predicted);

struct Aggregate {
    double value = 0.0;
    int used = 0;
    int excluded = 0;  // samples whose RSS at the prediction is the no-coverage sentinel
};

Aggregate mean_rss(std::span<const int> predicted, const std::vector<std::vector<float>>& rss);
// Percent in (0, 100].
Aggregate mpr(std::span<const int> predicted, const std::vector<std::vector<float>>& rss);

// Argmax per row, lowest index on ties.
std::vector<int> predictions(const Matrix& probabilities);

struct MetricsReport {
    std::map<int, double> top_k;  // k -> accuracy
    double mean_rss_dbm = 0.0;
    double mpr_percent = 0.0;
    int samples = 0;
    int excluded = 0;

    bool operator==(const MetricsReport&) const = default;
};

MetricsReport evaluate(const Matrix& probabilities, std::span<const int> labels,
                       const std::vector<std::vector<float>>& rss, const std::vector<int>& ks = {1, 5, 10});

json to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const json& j);

// Fixed-width rows: method, top-1, top-5, top-10, MPR, RSS.
std::string report_table_header();
std::string report_table_row(const std::string& method, const MetricsReport& r);

} // namespace beamkd
