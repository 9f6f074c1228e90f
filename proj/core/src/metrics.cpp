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

#include "beamkd/metrics.hpp"

#include <cstdio>

namespace beamkd {

int probability_position(std::span<const double> probs, int label)
{
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
        throw std::invalid_argument("label out of range");
    const double p = probs[static_cast<std::size_t>(label)];
    int pos = 0;
    for (std::size_t b = 0; b < probs.size(); ++b)
        if (probs[b] > p || (probs[b] == p && static_cast<int>(b) < label))
            ++pos;
    return pos;
}

double top_k_accuracy(const Matrix& probabilities, std::span<const int> labels, int k)
{
    if (labels.empty() || probabilities.rows() == 0)
        throw DataError("top-k accuracy over an empty set");
    if (static_cast<std::size_t>(probabilities.rows()) != labels.size())
        throw std::invalid_argument("top_k_accuracy: one label per row expected");
    if (k < 1 || k > probabilities.cols())
        throw std::invalid_argument("top_k_accuracy: k must lie in [1, B]");
    int hits = 0;
    for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
        const auto row = probabilities.row(i);
        if (probability_position(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                 labels[static_cast<std::size_t>(i)]) < k)
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

int beam_rank(std::span<const float> rss, int predicted)
{
    if (predicted < 0 || static_cast<std::size_t>(predicted) >= rss.size())
        throw std::invalid_argument("predicted beam out of range");
    const float s = rss[static_cast<std::size_t>(predicted)];
    int rank = 1;
    for (float v : rss)
        if (v > s)
            ++rank;
    return rank;
}

double percentile(std::span<const float> rss, int predicted)
{
    const auto b = static_cast<double>(rss.size());
    return (b - beam_rank(rss, predicted) + 1.0) / b;
}

namespace {

template <typename F>
Aggregate average(std::span<const int> predicted, const std::vector<std::vector<float>>& rss, F term)
{
    if (predicted.empty())
        throw DataError("metric over an empty set");
    if (predicted.size() != rss.size())
        throw std::invalid_argument("one prediction per RSS vector expected");
    Aggregate a;
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const auto& row = rss[i];
        const int y = predicted[i];
        if (y < 0 || static_cast<std::size_t>(y) >= row.size())
            throw std::invalid_argument("predicted beam out of range");
        if (!std::isfinite(row[static_cast<std::size_t>(y)])) {
            ++a.excluded;
            continue;
        }
        sum += term(row, y);
        ++a.used;
    }
    if (a.used == 0)
        throw DataError("every sample hit the no-coverage sentinel");
    a.value = sum / a.used;
    return a;
}

} // namespace

Aggregate mean_rss(std::span<const int> predicted, const std::vector<std::vector<float>>& rss)
{
    return average(predicted, rss, [](const std::vector<float>& row, int y) { return static_cast<double>(row[y]); });
}

Aggregate mpr(std::span<const int> predicted, const std::vector<std::vector<float>>& rss)
{
    Aggregate a = average(predicted, rss, [](const std::vector<float>& row, int y) { return percentile(row, y); });
    a.value *= 100.0;
    return a;
}

std::vector<int> predictions(const Matrix& probabilities)
{
    std::vector<int> out(static_cast<std::size_t>(probabilities.rows()));
    for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index b = 1; b < probabilities.cols(); ++b)
            if (probabilities(i, b) > probabilities(i, best))
                best = b;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

MetricsReport evaluate(const Matrix& probabilities, std::span<const int> labels, const std::vector<std::vector<float>>& rss,
                       const std::vector<int>& ks)
{
    MetricsReport r;
    r.samples = static_cast<int>(labels.size());
    for (int k : ks)
        r.top_k[k] = top_k_accuracy(probabilities, labels, std::min<int>(k, static_cast<int>(probabilities.cols())));
    const auto pred = predictions(probabilities);
    const Aggregate m = mpr(pred, rss);
    const Aggregate s = mean_rss(pred, rss);
    r.mpr_percent = m.value;
    r.mean_rss_dbm = s.value;
    r.excluded = m.excluded;
    return r;
}

json to_json(const MetricsReport& r)
{
    json top = json::object();
    for (const auto& [k, v] : r.top_k)
        top[std::to_string(k)] = v;
    return {{"top_k", top},
            {"mean_rss_dbm", r.mean_rss_dbm},
            {"mpr_percent", r.mpr_percent},
            {"samples", r.samples},
            {"excluded", r.excluded}};
}

MetricsReport metrics_report_from_json(const json& j)
{
    MetricsReport r;
    for (const auto& [k, v] : j.at("top_k").items())
        r.top_k[std::stoi(k)] = v.get<double>();
    r.mean_rss_dbm = j.at("mean_rss_dbm").get<double>();
    r.mpr_percent = j.at("mpr_percent").get<double>();
    r.samples = j.at("samples").get<int>();
    r.excluded = j.at("excluded").get<int>();
    return r;
}

std::string report_table_header()
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %8s %8s %8s %9s %11s", "method", "top-1", "top-5", "top-10", "MPR(%)",
                  "RSS(dBm)");
    return buf;
}

std::string report_table_row(const std::string& method, const MetricsReport& r)
{
    auto top = [&](int k) {
        const auto it = r.top_k.find(k);
        return it == r.top_k.end() ? std::nan("") : it->second;
    };
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %8.4f %8.4f %8.4f %9.3f %11.3f", method.c_str(), top(1), top(5), top(10),
                  r.mpr_percent, r.mean_rss_dbm);
    return buf;
}

} // namespace beamkd
