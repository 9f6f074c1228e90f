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

#include <set>
#include <span>
#include <string>
#include <vector>

#include "beamkd/beams.hpp"
#include "beamkd/nn.hpp"

namespace beamkd {

enum class Manifold { euclidean, cosine, hyperbolic };
enum class RelationDistance { huber, squared };
enum class OutputMode { soft_expected, straight_through };

std::string to_string(Manifold m);
Manifold manifold_from_string(const std::string& s);

struct DistillConfig {
    double alpha = 0.5;
    double temperature = 2.0;
    double curvature = 1.0;
    RelationDistance distance = RelationDistance::huber;
    double huber_delta = 1.0;
    std::set<Manifold> manifolds{Manifold::euclidean, Manifold::cosine, Manifold::hyperbolic};
    bool normalize_euclidean = true;
    OutputMode output_mode = OutputMode::soft_expected;
    bool latent_enabled = true;   // relational term on mid features
    bool output_enabled = true;   // beam-steering relational term
    bool kl_mid_enabled = true;
    bool kl_end_enabled = true;
    // "sum" adds every (i, j) pair; "mean" divides each relational term by n^2.
    std::string pair_reduction = "sum";

    void validate() const;
    bool operator==(const DistillConfig&) const = default;
};

struct LossGrad {
    double loss = 0.0;
    Matrix grad;          // w.r.t. the student-side input
    Matrix grad_teacher;  // w.r.t. the teacher-side input; only the KL term fills it
};

// T^2 * mean_i KL(softmax(t_i / T) || softmax(s_i / T)), natural log.
LossGrad kd_kl_loss(const Matrix& teacher, const Matrix& student, double temperature);
// Printed form kept for comparison only: -T^2 * mean_i sum_k softmax(t)_k ln(softmax(t)_k / softmax(s)_k).
double kd_kl_loss_literal(const Matrix& teacher, const Matrix& student, double temperature);

double kd_total_loss(double focal, double kl_mid, double kl_end, double alpha);
double rkd_total_loss(double focal, double latent_relational, double output_relational, double alpha);

Matrix pairwise_euclidean(const Matrix& x, bool normalize);
Matrix pairwise_cosine(const Matrix& x, int* guarded = nullptr);

inline constexpr double kBallMargin = 1e-5;

Eigen::VectorXd exp_map(const Eigen::VectorXd& x, double c);
Eigen::VectorXd mobius_add(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double c);
// (2 / sqrt c) artanh(sqrt c * |(-x) (+) y|) for points inside the ball, evaluated through the
// equivalent arcosh(1 + 2c|x - y|^2 / ((1 - c|x|^2)(1 - c|y|^2))) / sqrt c.
double poincare_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double c);
// Rows pass through exp_map and the boundary clamp, then pairwise distances.
Matrix pairwise_hyperbolic(const Matrix& x, double c, int* clamped = nullptr);

Matrix relation_matrix(const Matrix& x, Manifold m, const DistillConfig& config, int* events = nullptr);

struct RelationalResult {
    double loss = 0.0;
    Matrix grad;
    std::map<std::string, double> per_manifold;
    int clamp_events = 0;
    int guard_events = 0;
};

// sum over enabled manifolds of sum_ij d(r^T_ij, r^S_ij); teacher relations are constants.
RelationalResult latent_relational_loss(const Matrix& teacher, const Matrix& student, const DistillConfig& config);

// Teacher side: similarity of hard beams.
Matrix hard_beam_similarity(std::span<const int> beams, const std::vector<double>& table, int codebook_size);

// Codebook weights stacked as rows [B x N].
Eigen::MatrixXcd codebook_matrix(const Codebook& codebook);

struct BeamSimilarityResult {
    Matrix similarity;       // student relation used in the loss
    Matrix probabilities;    // softmax of the logits
    Eigen::MatrixXcd expected;  // w-bar rows [n x N]
    int guarded = 0;
};

BeamSimilarityResult beam_similarity_matrix(const Matrix& logits, const Eigen::MatrixXcd& weights,
                                            OutputMode mode = OutputMode::soft_expected);

// sum_ij (s^T_ij - s^S_ij)^2 with the gradient carried back to the student logits.
LossGrad output_relational_loss(const Matrix& teacher_similarity, const Matrix& student_logits,
                                const Eigen::MatrixXcd& weights, const DistillConfig& config);

DistillConfig distill_config_from_json(const json& j);
json to_json(const DistillConfig& c);

} // namespace beamkd
