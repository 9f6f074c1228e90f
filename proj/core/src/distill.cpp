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

#include "beamkd/distill.hpp"

#include <algorithm>

namespace beamkd {

namespace {

constexpr double kNormGuard = 1e-12;

double max_ball_norm(double c) { return (1.0 - kBallMargin) / std::sqrt(c); }

// d(t, s) and its derivative in s.
double relation_distance(double t, double s, const DistillConfig& cfg, double* ds)
{
    const double e = s - t;
    if (cfg.distance == RelationDistance::squared) {
        *ds = 2.0 * e;
        return e * e;
    }
    const double d = cfg.huber_delta;
    if (std::abs(e) <= d) {
        *ds = e;
        return 0.5 * e * e;
    }
    *ds = e > 0 ? d : -d;
    return d * (std::abs(e) - 0.5 * d);
}

Matrix raw_distances(const Matrix& x)
{
    const Eigen::Index n = x.rows();
    Matrix r = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (x.row(i) - x.row(j)).norm();
            r(i, j) = d;
            r(j, i) = d;
        }
    return r;
}

double mean_off_diagonal(const Matrix& r)
{
    const Eigen::Index n = r.rows();
    return r.sum() / static_cast<double>(n * (n - 1));
}

// dL/dx from dL/dr for raw Euclidean distances; pairs at zero distance contribute nothing.
Matrix euclidean_backward(const Matrix& x, const Matrix& r, const Matrix& g)
{
    const Eigen::Index n = x.rows();
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && r(i, j) > 0.0)
                a(i, j) = (g(i, j) + g(j, i)) / r(i, j);
    Matrix dx = -(a * x);
    dx += a.rowwise().sum().asDiagonal() * x;
    return dx;
}

struct CosineState {
    Matrix u;
    Eigen::VectorXd norms;
    std::vector<bool> guarded;
};

CosineState normalise_rows(const Matrix& x)
{
    CosineState s;
    s.u = x;
    s.norms.resize(x.rows());
    s.guarded.assign(static_cast<std::size_t>(x.rows()), false);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double nrm = x.row(i).norm();
        if (nrm < kNormGuard) {
            nrm = kNormGuard;
            s.guarded[static_cast<std::size_t>(i)] = true;
        }
        s.norms[i] = nrm;
        s.u.row(i) /= nrm;
    }
    return s;
}

struct BallState {
    Matrix y;                     // points used for the distances
    std::vector<bool> clamped;
    Eigen::VectorXd raw_norm;     // |exp_map(x)| before the clamp
    Eigen::VectorXd conformal;    // 1 - c|y|^2, evaluated without cancellation
};

BallState to_ball(const Matrix& x, double c)
{
    BallState b;
    b.y.resize(x.rows(), x.cols());
    b.clamped.assign(static_cast<std::size_t>(x.rows()), false);
    b.raw_norm.resize(x.rows());
    b.conformal.resize(x.rows());
    const double limit = max_ball_norm(c);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::VectorXd y = exp_map(x.row(i).transpose(), c);
        const double nrm = y.norm();
        b.raw_norm[i] = nrm;
        // c|y|^2 = tanh^2(sqrt(c)|x|), so the factor is sech^2 there.
        const double ch = std::cosh(std::sqrt(c) * x.row(i).norm());
        b.conformal[i] = 1.0 / (ch * ch);
        if (nrm > limit) {
            y *= limit / nrm;
            b.clamped[static_cast<std::size_t>(i)] = true;
            b.conformal[i] = kBallMargin * (2.0 - kBallMargin);
        }
        b.y.row(i) = y.transpose();
    }
    return b;
}

// arcosh(1 + z) / sqrt c with z = 2c|yi - yj|^2 / (a_i a_j). Equal to the Mobius form, but the
// artanh there loses most of its digits once both points sit close to the boundary.
Matrix ball_distances(const BallState& b, double c)
{
    const Matrix& y = b.y;
    const Eigen::Index n = y.rows();
    Matrix r = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double z = 2.0 * c * (y.row(i) - y.row(j)).squaredNorm() / (b.conformal[i] * b.conformal[j]);
            const double d = std::log1p(z + std::sqrt(z * (z + 2.0))) / std::sqrt(c);
            r(i, j) = d;
            r(j, i) = d;
        }
    return r;
}

// Gradient of the ball distance through the arcosh form
// d = arcosh(1 + 2c|yi - yj|^2 / ((1 - c|yi|^2)(1 - c|yj|^2))) / sqrt c.
Matrix hyperbolic_backward(const Matrix& x, const BallState& b, const Matrix& g, double c)
{
    const Eigen::Index n = x.rows();
    const double sc = std::sqrt(c);
    Matrix dy = Matrix::Zero(n, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = b.conformal[i];
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j)
                continue;
            const double w = g(i, j) + g(j, i);
            if (w == 0.0)
                continue;
            const auto diff = b.y.row(i) - b.y.row(j);
            const double delta = diff.squaredNorm();
            if (delta == 0.0)
                continue;
            const double bb = b.conformal[j];
            const double gm1 = 2.0 * c * delta / (a * bb);  // gamma - 1
            const double dd_dgamma = 1.0 / (sc * std::sqrt(gm1 * (gm1 + 2.0)));
            dy.row(i) += w * dd_dgamma * (4.0 * c / (a * bb) * diff + 4.0 * c * c * delta / (a * a * bb) * b.y.row(i));
        }
    }

    const double limit = max_ball_norm(c);
    Matrix dx(n, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::RowVectorXd gy = dy.row(i);
        if (b.clamped[static_cast<std::size_t>(i)]) {
            // y = limit * e / |e| with e = exp_map(x)
            const Eigen::RowVectorXd unit = b.y.row(i) / limit;
            gy = (limit / b.raw_norm[i]) * (gy - gy.dot(unit) * unit);
        }
        const Eigen::RowVectorXd xi = x.row(i);
        const double r = xi.norm();
        const double u = sc * r;
        double f, fprime_over_r;  // exp_map(x) = f(r) x
        if (u < 1e-3) {
            f = 1.0 - u * u / 3.0 + 2.0 * u * u * u * u / 15.0;
            fprime_over_r = -2.0 * c / 3.0 + 8.0 * c * c * r * r / 15.0;
        } else {
            const double t = std::tanh(u);
            f = t / u;
            fprime_over_r = ((1.0 - t * t) * u - t) / (sc * r * r * r);
        }
        dx.row(i) = f * gy + fprime_over_r * xi.dot(gy) * xi;
    }
    return dx;
}

} // namespace

std::string to_string(Manifold m)
{
    switch (m) {
    case Manifold::euclidean:
        return "euclidean";
    case Manifold::cosine:
        return "cosine";
    case Manifold::hyperbolic:
        return "hyperbolic";
    }
    return "unknown";
}

Manifold manifold_from_string(const std::string& s)
{
    if (s == "euclidean")
        return Manifold::euclidean;
    if (s == "cosine")
        return Manifold::cosine;
    if (s == "hyperbolic")
        return Manifold::hyperbolic;
    throw ConfigError("unknown manifold '" + s + "' (euclidean, cosine, hyperbolic)");
}

void DistillConfig::validate() const
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ConfigError("distill.alpha must lie in [0, 1]");
    if (!(temperature > 0.0))
        throw ConfigError("distill.temperature must be > 0");
    if (!(curvature > 0.0))
        throw ConfigError("distill.curvature must be > 0");
    if (!(huber_delta > 0.0))
        throw ConfigError("distill.huber_delta must be > 0");
    if (pair_reduction != "sum" && pair_reduction != "mean")
        throw ConfigError("distill.pair_reduction must be \"sum\" or \"mean\"");
    if (latent_enabled && manifolds.empty())
        throw ConfigError("distill.latent_enabled needs at least one manifold");
    if (!latent_enabled && !output_enabled && !kl_mid_enabled && !kl_end_enabled)
        throw ConfigError("distill enables no loss");
}

// ---- KL ----------------------------------------------------------------------

LossGrad kd_kl_loss(const Matrix& teacher, const Matrix& student, double temperature)
{
    if (teacher.rows() != student.rows() || teacher.cols() != student.cols())
        throw std::invalid_argument("kd_kl_loss: teacher and student shapes differ");
    if (!(temperature > 0.0))
        throw std::invalid_argument("kd_kl_loss: temperature must be > 0");
    const double n = static_cast<double>(teacher.rows());
    const Matrix p = softmax(Matrix(teacher / temperature));
    const Matrix q = softmax(Matrix(student / temperature));
    LossGrad r;
    r.grad_teacher.resize(teacher.rows(), teacher.cols());
    for (Eigen::Index i = 0; i < teacher.rows(); ++i) {
        const Eigen::RowVectorXd zt = teacher.row(i) / temperature;
        const Eigen::RowVectorXd zs = student.row(i) / temperature;
        const double lt = zt.maxCoeff() + std::log((zt.array() - zt.maxCoeff()).exp().sum());
        const double ls = zs.maxCoeff() + std::log((zs.array() - zs.maxCoeff()).exp().sum());
        // ln p - ln q, free of log(0)
        const Eigen::RowVectorXd gap = ((zt.array() - lt) - (zs.array() - ls)).matrix();
        const double kl = p.row(i).dot(gap);
        r.loss += kl;
        r.grad_teacher.row(i) = temperature * p.row(i).cwiseProduct((gap.array() - kl).matrix()) / n;
    }
    r.loss *= temperature * temperature / n;
    r.grad = temperature * (q - p) / n;
    return r;
}

double kd_kl_loss_literal(const Matrix& teacher, const Matrix& student, double temperature)
{
    if (teacher.rows() != student.rows() || teacher.cols() != student.cols())
        throw std::invalid_argument("kd_kl_loss_literal: teacher and student shapes differ");
    const Matrix p = softmax(teacher);
    const Matrix q = softmax(student);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index k = 0; k < p.cols(); ++k)
            if (p(i, k) > 0.0)
                sum += p(i, k) * std::log(p(i, k) / q(i, k));
    return -temperature * temperature * sum / static_cast<double>(p.rows());
}

double kd_total_loss(double focal, double kl_mid, double kl_end, double alpha)
{
    return (1.0 - alpha) * focal + alpha * (kl_mid + kl_end);
}

double rkd_total_loss(double focal, double latent_relational, double output_relational, double alpha)
{
    return (1.0 - alpha) * focal + alpha * (latent_relational + output_relational);
}

// ---- relations ---------------------------------------------------------------

Matrix pairwise_euclidean(const Matrix& x, bool normalize)
{
    if (x.rows() < 2)
        throw std::invalid_argument("pairwise relations need at least two rows");
    Matrix r = raw_distances(x);
    if (normalize) {
        const double mu = mean_off_diagonal(r);
        if (mu > 0.0)
            r /= mu;
    }
    return r;
}

Matrix pairwise_cosine(const Matrix& x, int* guarded)
{
    if (x.rows() < 2)
        throw std::invalid_argument("pairwise relations need at least two rows");
    const CosineState s = normalise_rows(x);
    Matrix r = s.u * s.u.transpose();
    r.diagonal().setOnes();
    r = r.cwiseMax(-1.0).cwiseMin(1.0);
    if (guarded)
        *guarded += static_cast<int>(std::count(s.guarded.begin(), s.guarded.end(), true));
    return r;
}

Eigen::VectorXd exp_map(const Eigen::VectorXd& x, double c)
{
    if (!(c > 0.0))
        throw std::invalid_argument("exp_map: curvature must be > 0");
    const double r = x.norm();
    if (r == 0.0)
        return Eigen::VectorXd::Zero(x.size());
    const double u = std::sqrt(c) * r;
    return (std::tanh(u) / u) * x;
}

Eigen::VectorXd mobius_add(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double c)
{
    if (x.size() != y.size())
        throw std::invalid_argument("mobius_add: dimension mismatch");
    const double x2 = x.squaredNorm(), y2 = y.squaredNorm();
    if (!(c * x2 < 1.0) || !(c * y2 < 1.0))
        throw std::invalid_argument("mobius_add: argument on or outside the ball boundary");
    const double xy = x.dot(y);
    const double den = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
    return ((1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y) / den;
}

double poincare_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double c)
{
    const double ax = 1.0 - c * x.squaredNorm(), ay = 1.0 - c * y.squaredNorm();
    if (!(ax > 0.0) || !(ay > 0.0))
        throw std::invalid_argument("poincare_distance: argument on or outside the ball boundary");
    // arcosh form: symmetric by construction and free of the artanh cancellation near |z| = 1.
    const double z = 2.0 * c * (x - y).squaredNorm() / (ax * ay);
    return std::log1p(z + std::sqrt(z * (z + 2.0))) / std::sqrt(c);
}

Matrix pairwise_hyperbolic(const Matrix& x, double c, int* clamped)
{
    if (x.rows() < 2)
        throw std::invalid_argument("pairwise relations need at least two rows");
    const BallState b = to_ball(x, c);
    if (clamped)
        *clamped += static_cast<int>(std::count(b.clamped.begin(), b.clamped.end(), true));
    return ball_distances(b, c);
}

Matrix relation_matrix(const Matrix& x, Manifold m, const DistillConfig& config, int* events)
{
    switch (m) {
    case Manifold::euclidean:
        return pairwise_euclidean(x, config.normalize_euclidean);
    case Manifold::cosine:
        return pairwise_cosine(x, events);
    case Manifold::hyperbolic:
        return pairwise_hyperbolic(x, config.curvature, events);
    }
    throw std::logic_error("unhandled manifold");
}

RelationalResult latent_relational_loss(const Matrix& teacher, const Matrix& student, const DistillConfig& config)
{
    if (teacher.rows() != student.rows())
        throw std::invalid_argument("latent_relational_loss: batch sizes differ");
    if (student.rows() < 2)
        throw std::invalid_argument("latent_relational_loss: need at least two samples");
    const Eigen::Index n = student.rows();
    const double scale = config.pair_reduction == "mean" ? 1.0 / static_cast<double>(n * n) : 1.0;

    RelationalResult res;
    res.grad = Matrix::Zero(student.rows(), student.cols());
    for (Manifold m : config.manifolds) {
        int teacher_events = 0;
        const Matrix rt = relation_matrix(teacher, m, config, &teacher_events);
        Matrix rs, g(n, n);
        double loss = 0.0;
        auto accumulate = [&](const Matrix& s) {
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    double d;
                    loss += scale * relation_distance(rt(i, j), s(i, j), config, &d);
                    g(i, j) = scale * d;
                }
        };
        switch (m) {
        case Manifold::euclidean: {
            const Matrix raw = raw_distances(student);
            const double mu = config.normalize_euclidean ? mean_off_diagonal(raw) : 0.0;
            rs = mu > 0.0 ? Matrix(raw / mu) : raw;
            accumulate(rs);
            Matrix h = g;
            if (mu > 0.0) {
                const double shift = g.cwiseProduct(raw).sum() / (mu * mu * static_cast<double>(n * (n - 1)));
                h = g / mu;
                h.array() -= shift;
            }
            res.grad += euclidean_backward(student, raw, h);
            break;
        }
        case Manifold::cosine: {
            const CosineState s = normalise_rows(student);
            res.guard_events += static_cast<int>(std::count(s.guarded.begin(), s.guarded.end(), true));
            rs = s.u * s.u.transpose();
            rs.diagonal().setOnes();
            accumulate(rs);
            Matrix sym = g + g.transpose();
            sym.diagonal().setZero();
            const Matrix du = sym * s.u;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (s.guarded[static_cast<std::size_t>(i)])
                    res.grad.row(i) += du.row(i) / s.norms[i];
                else
                    res.grad.row(i) += (du.row(i) - du.row(i).dot(s.u.row(i)) * s.u.row(i)) / s.norms[i];
            }
            break;
        }
        case Manifold::hyperbolic: {
            const BallState b = to_ball(student, config.curvature);
            res.clamp_events += static_cast<int>(std::count(b.clamped.begin(), b.clamped.end(), true)) + teacher_events;
            rs = ball_distances(b, config.curvature);
            accumulate(rs);
            res.grad += hyperbolic_backward(student, b, g, config.curvature);
            break;
        }
        }
        res.per_manifold[to_string(m)] = loss;
        res.loss += loss;
    }
    return res;
}

// ---- beam-steering relation ----------------------------------------------------

Matrix hard_beam_similarity(std::span<const int> beams, const std::vector<double>& table, int codebook_size)
{
    const auto b = static_cast<std::size_t>(codebook_size);
    if (table.size() != b * b)
        throw std::invalid_argument("similarity table does not match the codebook size");
    const auto n = static_cast<Eigen::Index>(beams.size());
    Matrix s(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const int bi = beams[static_cast<std::size_t>(i)], bj = beams[static_cast<std::size_t>(j)];
            if (bi < 0 || bi >= codebook_size || bj < 0 || bj >= codebook_size)
                throw std::invalid_argument("beam index out of range");
            s(i, j) = table[static_cast<std::size_t>(bi) * b + static_cast<std::size_t>(bj)];
        }
    return s;
}

Eigen::MatrixXcd codebook_matrix(const Codebook& codebook)
{
    Eigen::MatrixXcd w(codebook.size(), codebook.geometry().size());
    for (int b = 0; b < codebook.size(); ++b)
        w.row(b) = codebook.patterns[static_cast<std::size_t>(b)].weights.transpose();
    return w;
}

namespace {

struct SoftSimilarity {
    Matrix s;
    Eigen::MatrixXcd gram;  // g_ij = wbar_i^H wbar_j
    Eigen::VectorXd norms;
};

SoftSimilarity soft_similarity(const Eigen::MatrixXcd& wbar, int* guarded)
{
    SoftSimilarity r;
    const Eigen::Index n = wbar.rows();
    r.norms = wbar.rowwise().norm();
    for (Eigen::Index i = 0; i < n; ++i)
        if (r.norms[i] < kNormGuard) {
            r.norms[i] = kNormGuard;
            if (guarded)
                ++*guarded;
        }
    r.gram = wbar.conjugate() * wbar.transpose();
    r.s.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            r.s(i, j) = i == j ? 1.0 : std::min(1.0, std::abs(r.gram(i, j)) / (r.norms[i] * r.norms[j]));
    return r;
}

std::vector<int> argmax_rows(const Matrix& p)
{
    std::vector<int> out(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index b = 1; b < p.cols(); ++b)
            if (p(i, b) > p(i, best))
                best = b;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

Matrix hard_similarity_from_weights(const std::vector<int>& beams, const Eigen::MatrixXcd& weights)
{
    const auto n = static_cast<Eigen::Index>(beams.size());
    Matrix s(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto wi = weights.row(beams[static_cast<std::size_t>(i)]);
            const auto wj = weights.row(beams[static_cast<std::size_t>(j)]);
            s(i, j) = i == j ? 1.0 : std::min(1.0, std::abs(wi.conjugate().dot(wj)) / (wi.norm() * wj.norm()));
        }
    return s;
}

} // namespace

BeamSimilarityResult beam_similarity_matrix(const Matrix& logits, const Eigen::MatrixXcd& weights, OutputMode mode)
{
    if (logits.cols() != weights.rows())
        throw std::invalid_argument("beam_similarity_matrix: logits width differs from the codebook size");
    BeamSimilarityResult r;
    r.probabilities = softmax(logits);
    r.expected = r.probabilities.cast<std::complex<double>>() * weights;
    if (mode == OutputMode::soft_expected)
        r.similarity = soft_similarity(r.expected, &r.guarded).s;
    else
        r.similarity = hard_similarity_from_weights(argmax_rows(r.probabilities), weights);
    return r;
}

LossGrad output_relational_loss(const Matrix& teacher_similarity, const Matrix& student_logits,
                                const Eigen::MatrixXcd& weights, const DistillConfig& config)
{
    const Eigen::Index n = student_logits.rows();
    if (teacher_similarity.rows() != n || teacher_similarity.cols() != n)
        throw std::invalid_argument("output_relational_loss: teacher relation does not match the batch");
    if (student_logits.cols() != weights.rows())
        throw std::invalid_argument("output_relational_loss: logits width differs from the codebook size");
    const double scale = config.pair_reduction == "mean" ? 1.0 / static_cast<double>(n * n) : 1.0;

    const Matrix p = softmax(student_logits);
    const Eigen::MatrixXcd wbar = p.cast<std::complex<double>>() * weights;
    const SoftSimilarity soft = soft_similarity(wbar, nullptr);
    const Matrix used =
        config.output_mode == OutputMode::soft_expected ? soft.s : hard_similarity_from_weights(argmax_rows(p), weights);

    LossGrad r;
    const Matrix diff = teacher_similarity - used;
    r.loss = scale * diff.squaredNorm();
    const Matrix ds = -2.0 * scale * diff;  // dL/ds_ij

    // Gradient w.r.t. wbar through the soft relation, also in straight-through mode.
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXd self = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j)
                continue;
            const double w = ds(i, j) + ds(j, i);
            const double mag = std::abs(soft.gram(i, j));
            if (w == 0.0 || mag == 0.0 || soft.s(i, j) >= 1.0)
                continue;
            m(i, j) = w * std::conj(soft.gram(i, j)) / (mag * soft.norms[i] * soft.norms[j]);
            self[i] += w * soft.s(i, j) / (soft.norms[i] * soft.norms[i]);
        }
    const Eigen::MatrixXcd v = m * wbar - self.asDiagonal() * wbar;
    const Matrix dp = (v * weights.adjoint()).real();
    r.grad.resize(n, student_logits.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double inner = p.row(i).dot(dp.row(i));
        r.grad.row(i) = p.row(i).cwiseProduct((dp.row(i).array() - inner).matrix());
    }
    return r;
}

// ---- config --------------------------------------------------------------------

DistillConfig distill_config_from_json(const json& j)
{
    DistillConfig c;
    StrictObject o(j, "distill");
    c.alpha = o.get("alpha", c.alpha);
    c.temperature = o.get("temperature", c.temperature);
    c.curvature = o.get("curvature", c.curvature);
    const auto dist = o.get<std::string>("distance", "huber");
    if (dist == "huber")
        c.distance = RelationDistance::huber;
    else if (dist == "squared")
        c.distance = RelationDistance::squared;
    else
        throw ConfigError("distill.distance must be \"huber\" or \"squared\"");
    c.huber_delta = o.get("huber_delta", c.huber_delta);
    if (o.has("manifolds")) {
        c.manifolds.clear();
        for (const auto& m : o.require<std::vector<std::string>>("manifolds"))
            c.manifolds.insert(manifold_from_string(m));
    }
    c.normalize_euclidean = o.get("normalize_euclidean", c.normalize_euclidean);
    const auto mode = o.get<std::string>("output_mode", "soft-expected");
    if (mode == "soft-expected")
        c.output_mode = OutputMode::soft_expected;
    else if (mode == "straight-through")
        c.output_mode = OutputMode::straight_through;
    else
        throw ConfigError("distill.output_mode must be \"soft-expected\" or \"straight-through\"");
    c.latent_enabled = o.get("latent_enabled", c.latent_enabled);
    c.output_enabled = o.get("output_enabled", c.output_enabled);
    c.kl_mid_enabled = o.get("kl_mid_enabled", c.kl_mid_enabled);
    c.kl_end_enabled = o.get("kl_end_enabled", c.kl_end_enabled);
    c.pair_reduction = o.get("pair_reduction", c.pair_reduction);
    o.finish();
    c.validate();
    return c;
}

json to_json(const DistillConfig& c)
{
    std::vector<std::string> manifolds;
    for (Manifold m : c.manifolds)
        manifolds.push_back(to_string(m));
    return {{"alpha", c.alpha},
            {"temperature", c.temperature},
            {"curvature", c.curvature},
            {"distance", c.distance == RelationDistance::huber ? "huber" : "squared"},
            {"huber_delta", c.huber_delta},
            {"manifolds", manifolds},
            {"normalize_euclidean", c.normalize_euclidean},
            {"output_mode", c.output_mode == OutputMode::soft_expected ? "soft-expected" : "straight-through"},
            {"latent_enabled", c.latent_enabled},
            {"output_enabled", c.output_enabled},
            {"kl_mid_enabled", c.kl_mid_enabled},
            {"kl_end_enabled", c.kl_end_enabled},
            {"pair_reduction", c.pair_reduction}};
}

} // namespace beamkd
