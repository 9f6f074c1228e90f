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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamkd/common.hpp"
#include "beamkd/io.hpp"

namespace beamkd {

// Row-major so that one row is one sample.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shape-tagged flat buffer used at the file boundary.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> shape, std::vector<double> data);
    static Tensor from_matrix(const Matrix& m);
    Matrix to_matrix() const;
    std::size_t numel() const;
    bool operator==(const Tensor&) const = default;
};

struct DenseLayer {
    Matrix weight;  // [in x out]
    Matrix bias;    // [1 x out]
};

// One trainable array plus its gradient buffer.
struct ParamRef {
    std::string name;
    Matrix* value = nullptr;
    Matrix* grad = nullptr;
};

class Mlp {
public:
    struct Cache {
        std::vector<Matrix> inputs;   // input of each layer
        std::vector<Matrix> outputs;  // activated output of each layer
        Matrix mid;
    };

    Mlp() = default;
    // widths = {in, h1, ..., out}. Hidden layers use ReLU; the last one only when relu_output.
    Mlp(std::vector<int> widths, int mid_layer, bool relu_output, Rng& rng);

    const std::vector<int>& widths() const { return widths_; }
    int mid_layer() const { return mid_layer_; }
    bool relu_output() const { return relu_output_; }
    int input_dim() const { return widths_.front(); }
    int output_dim() const { return widths_.back(); }
    int mid_dim() const { return mid_layer_ < 0 ? 0 : widths_[static_cast<std::size_t>(mid_layer_) + 1]; }
    std::size_t parameter_count() const;

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
    // Accumulates parameter gradients and returns dL/dx. d_mid (optional) is added at the mid layer.
    Matrix backward(const Cache& cache, const Matrix& d_out, const Matrix* d_mid = nullptr);

    void zero_grad();
    void append_params(std::vector<ParamRef>& out, const std::string& prefix);

private:
    std::vector<int> widths_;
    int mid_layer_ = -1;
    bool relu_output_ = false;
    std::vector<DenseLayer> layers_;
    std::vector<DenseLayer> grads_;
};

struct TeacherWidths {
    std::vector<int> radar{256, 128};
    std::vector<int> bev{256, 128};
    std::vector<int> gps{128};
    std::vector<int> fusion{512, 256};  // hidden widths; the last is the mid feature
    bool operator==(const TeacherWidths&) const = default;
};

struct StudentWidths {
    std::vector<int> hidden{128, 128, 128, 128, 128};  // six dense layers with the output layer
    int mid_layer = 2;
    bool operator==(const StudentWidths&) const = default;
};

struct TeacherInputs {
    const Matrix* radar = nullptr;
    const Matrix* bev = nullptr;
    const Matrix* gps = nullptr;
};

// Per-modality encoders, concatenation, fusion trunk.
class Teacher {
public:
    struct Cache {
        Mlp::Cache radar, bev, gps, fusion;
    };

    Teacher() = default;
    Teacher(int radar_dim, int bev_dim, int gps_dim, int beams, const TeacherWidths& widths, Rng& rng);

    Matrix forward(const TeacherInputs& in, Cache* cache = nullptr) const;
    void backward(const Cache& cache, const Matrix& d_logits);
    const Matrix& mid(const Cache& cache) const { return cache.fusion.mid; }

    std::size_t parameter_count() const;
    void zero_grad();
    void append_params(std::vector<ParamRef>& out);

    Mlp& radar() { return radar_; }
    Mlp& bev() { return bev_; }
    Mlp& gps() { return gps_; }
    Mlp& fusion() { return fusion_; }
    const Mlp& fusion() const { return fusion_; }

private:
    Mlp radar_, bev_, gps_, fusion_;
};

Mlp make_student(int radar_dim, int beams, const StudentWidths& widths, Rng& rng);

// Row-wise, max-shifted.
Matrix softmax(const Matrix& logits);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct FocalResult {
    double loss = 0.0;   // batch mean
    Matrix grad;         // dL/dlogits, already divided by the batch size
    int clamped = 0;     // samples whose p_{b*} fell below the epsilon floor
};

inline constexpr double kFocalEpsilon = 1e-12;

// -(1 - p)^gamma ln p on a single probability.
double focal_loss_value(double p_label, double gamma);
FocalResult focal_loss(const Matrix& logits, std::span<const int> labels, double gamma);

struct TrainConfig {
    int epochs = 50;
    int batch_size = 64;
    double lr0 = 5e-4;
    double lr_decay_abs_per_epoch = 5e-6;
    int decay_start_epoch = 15;
    int restart_interval_epochs = 10;
    std::string restart_mode = "reset";  // "reset" or "none"
    double momentum = 0.0;
    double focal_gamma = 2.0;
    std::uint64_t seed = 1;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

// Epochs are 1-based.
double learning_rate(const TrainConfig& config, int epoch);

class Sgd {
public:
    Sgd(std::vector<ParamRef> params, double momentum);
    // Throws NumericalError on a non-finite gradient before touching any parameter.
    void step(double lr);
    const std::vector<ParamRef>& params() const { return params_; }

private:
    std::vector<ParamRef> params_;
    std::vector<Matrix> velocity_;
    double momentum_;
};

std::size_t parameter_count(const std::vector<ParamRef>& params);
std::vector<double> flatten_values(const std::vector<ParamRef>& params);
std::vector<double> flatten_grads(const std::vector<ParamRef>& params);
void assign_values(const std::vector<ParamRef>& params, std::span<const double> flat);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

// Central differences against `analytic` on up to `samples` coordinates (all when 0).
// rel = |a - n| / max(|a|, |n|, floor).
GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss, std::span<const double> point,
                           std::span<const double> analytic, double eps = 1e-6, std::size_t samples = 0,
                           std::uint64_t seed = 0, double floor = 1e-8);

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_mpr = 0.0;
    std::map<std::string, double> components;  // per-epoch means of the loss terms
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_val_mpr = 0.0;
};

struct BatchResult {
    double loss = 0.0;
    std::map<std::string, double> components;
};

// Generic loop: seeded shuffling, SGD with the schedule, best-validation snapshot restored at the end.
// `step` fills gradients for a batch of training positions; `validate` returns the validation MPR.
TrainHistory train(std::vector<ParamRef> params, int train_count, const TrainConfig& config,
                   const std::function<BatchResult(std::span<const int>)>& step, const std::function<double()>& validate);

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

// JSON header plus little-endian float32 blob, in the order of `params`.
void write_checkpoint(const std::vector<ParamRef>& params, const json& header, const std::filesystem::path& stem);
json read_checkpoint(const std::vector<ParamRef>& params, const std::filesystem::path& stem);

TrainConfig train_config_from_json(const json& j);
json to_json(const TrainConfig& c);
TeacherWidths teacher_widths_from_json(const json& j);
json to_json(const TeacherWidths& w);
StudentWidths student_widths_from_json(const json& j);
json to_json(const StudentWidths& w);

} // namespace beamkd
