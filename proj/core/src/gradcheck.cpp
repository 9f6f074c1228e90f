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

#include "beamkd/gradcheck.hpp"

#include "beamkd/distill.hpp"
#include "beamkd/nn.hpp"

namespace beamkd {

namespace {

constexpr double kEps = 1e-6;

// FNV-1a, so the per-entry streams do not depend on the standard library's std::hash.
std::uint64_t name_key(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr double kFloor = 1e-6;
// Coordinates whose gradient is below a thousandth of the largest one are judged on that scale;
// their finite differences are dominated by roundoff in the loss value.
constexpr double kScaleFloor = 1e-3;

double floor_for(const std::vector<double>& analytic)
{
    double m = 0.0;
    for (double a : analytic)
        m = std::max(m, std::abs(a));
    return std::max(kFloor, kScaleFloor * m);
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng)
{
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = n(rng);
    return m;
}

std::vector<int> random_labels(int n, int classes, Rng& rng)
{
    std::uniform_int_distribution<int> u(0, classes - 1);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& v : out)
        v = u(rng);
    return out;
}

// Checks d f / d x for a matrix-valued argument.
double check_matrix(const std::function<double(const Matrix&)>& f, const Matrix& x, const Matrix& grad)
{
    const std::vector<double> point(x.data(), x.data() + x.size());
    const std::vector<double> analytic(grad.data(), grad.data() + grad.size());
    auto loss = [&](std::span<const double> v) {
        Matrix m = Eigen::Map<const Matrix>(v.data(), x.rows(), x.cols());
        return f(m);
    };
    return grad_check(loss, point, analytic, kEps, 0, 0, floor_for(analytic)).max_rel_error;
}

// Checks a loss over the parameters of `params`; `fill` must zero and refill the gradients.
double check_params(const std::vector<ParamRef>& params, const std::function<double()>& fill)
{
    for (const auto& p : params)
        p.grad->setZero();
    fill();
    const auto point = flatten_values(params);
    const auto analytic = flatten_grads(params);
    auto loss = [&](std::span<const double> v) {
        assign_values(params, v);
        return fill();
    };
    const double err = grad_check(loss, point, analytic, kEps, 0, 0, floor_for(analytic)).max_rel_error;
    assign_values(params, point);
    return err;
}

Eigen::MatrixXcd small_codebook()
{
    CodebookSpec spec;
    spec.geometry.rows = 2;
    spec.geometry.cols = 4;
    spec.azimuth_count = 4;
    spec.elevation_count = 2;
    spec.multi_beam = {{2, 1, {0, 0}, false}, {3, 1, {1, 1, 1}, false}};
    return codebook_matrix(build_codebook(spec));
}

std::vector<double> similarity_of(const Eigen::MatrixXcd& w)
{
    const auto b = static_cast<std::size_t>(w.rows());
    std::vector<double> t(b * b);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j)
            t[i * b + j] = i == j ? 1.0 : beam_similarity(w.row(i).transpose(), w.row(j).transpose());
    return t;
}

DistillConfig relational_config(const std::set<Manifold>& manifolds, RelationDistance d, double c, bool normalize)
{
    DistillConfig cfg;
    cfg.manifolds = manifolds;
    cfg.distance = d;
    cfg.curvature = c;
    cfg.normalize_euclidean = normalize;
    return cfg;
}

} // namespace

std::vector<GradSuiteEntry> gradient_suite(int configurations, std::uint64_t seed)
{
    std::vector<GradSuiteEntry> out;
    auto run = [&](const std::string& name, const std::function<double(Rng&, int)>& one) {
        GradSuiteEntry e{name, 0.0, configurations};
        for (int k = 0; k < configurations; ++k) {
            Rng rng(mix_seed(seed, name_key(name), static_cast<std::uint64_t>(k)));
            e.max_rel_error = std::max(e.max_rel_error, one(rng, k));
        }
        out.push_back(e);
    };
    const double gammas[] = {0.0, 0.5, 1.0, 2.0, 3.0};
    const double temps[] = {1.0, 2.0, 4.0};
    const double curvatures[] = {0.5, 1.0, 2.0};

    run("focal", [&](Rng& rng, int k) {
        const Matrix z = random_matrix(5, 7, 2.0, rng);
        const auto y = random_labels(5, 7, rng);
        const double g = gammas[k % 5];
        return check_matrix([&](const Matrix& m) { return focal_loss(m, y, g).loss; }, z, focal_loss(z, y, g).grad);
    });

    run("focal-through-mlp", [&](Rng& rng, int k) {
        Mlp net({6, 9, 5}, 0, false, rng);
        std::vector<ParamRef> params;
        net.append_params(params, "net");
        const Matrix x = random_matrix(4, 6, 1.0, rng);
        const auto y = random_labels(4, 5, rng);
        const double g = gammas[k % 5];
        return check_params(params, [&] {
            net.zero_grad();
            Mlp::Cache c;
            const FocalResult f = focal_loss(net.forward(x, &c), y, g);
            net.backward(c, f.grad);
            return f.loss;
        });
    });

    run("kl-end", [&](Rng& rng, int k) {
        const Matrix t = random_matrix(4, 6, 2.0, rng), s = random_matrix(4, 6, 2.0, rng);
        const double T = temps[k % 3];
        return check_matrix([&](const Matrix& m) { return kd_kl_loss(t, m, T).loss; }, s, kd_kl_loss(t, s, T).grad);
    });

    run("kl-mid", [&](Rng& rng, int k) {
        // Student mid features and the projection applied to teacher mid features.
        Mlp proj({7, 5}, -1, false, rng);
        std::vector<ParamRef> params;
        proj.append_params(params, "proj");
        const Matrix tmid = random_matrix(4, 7, 1.0, rng);
        const Matrix smid = random_matrix(4, 5, 1.0, rng).cwiseAbs();
        const double T = temps[k % 3];
        const double e1 = check_params(params, [&] {
            proj.zero_grad();
            Mlp::Cache c;
            const LossGrad kl = kd_kl_loss(proj.forward(tmid, &c), smid, T);
            proj.backward(c, kl.grad_teacher);
            return kl.loss;
        });
        const Matrix projected = proj.forward(tmid);
        const double e2 = check_matrix([&](const Matrix& m) { return kd_kl_loss(projected, m, T).loss; }, smid,
                                       kd_kl_loss(projected, smid, T).grad);
        return std::max(e1, e2);
    });

    const std::vector<std::pair<std::string, std::set<Manifold>>> sets{
        {"euclidean", {Manifold::euclidean}},
        {"cosine", {Manifold::cosine}},
        {"hyperbolic", {Manifold::hyperbolic}},
        {"all", {Manifold::euclidean, Manifold::cosine, Manifold::hyperbolic}},
    };
    for (const auto& [label, set] : sets)
        for (auto dist : {RelationDistance::huber, RelationDistance::squared}) {
            const std::string name =
                "latent-" + label + (dist == RelationDistance::huber ? "-huber" : "-squared");
            run(name, [&, set = set, dist](Rng& rng, int k) {
                const DistillConfig cfg = relational_config(set, dist, curvatures[k % 3], k % 2 == 0);
                const Matrix t = random_matrix(6, 7, 1.5, rng);
                const Matrix s = random_matrix(6, 5, 0.7, rng);
                return check_matrix([&](const Matrix& m) { return latent_relational_loss(t, m, cfg).loss; }, s,
                                    latent_relational_loss(t, s, cfg).grad);
            });
        }

    const Eigen::MatrixXcd w = small_codebook();
    const auto table = similarity_of(w);
    const int beams = static_cast<int>(w.rows());

    run("output-soft-expected", [&](Rng& rng, int) {
        DistillConfig cfg;
        const Matrix z = random_matrix(5, beams, 1.5, rng);
        const Matrix st = hard_beam_similarity(random_labels(5, beams, rng), table, beams);
        return check_matrix([&](const Matrix& m) { return output_relational_loss(st, m, w, cfg).loss; }, z,
                            output_relational_loss(st, z, w, cfg).grad);
    });

    auto objective = [&](const std::string& name, bool relational) {
        run(name, [&, relational](Rng& rng, int k) {
            Mlp net({6, 8, 7, beams}, 1, false, rng);
            std::vector<ParamRef> params;
            net.append_params(params, "student");
            Mlp proj({9, 7}, -1, false, rng);
            if (!relational)
                proj.append_params(params, "proj");
            const Matrix x = random_matrix(5, 6, 1.0, rng);
            const auto y = random_labels(5, beams, rng);
            const Matrix tmid = random_matrix(5, 9, 1.0, rng).cwiseAbs();
            const Matrix tlogits = random_matrix(5, beams, 2.0, rng);
            const Matrix st = hard_beam_similarity(random_labels(5, beams, rng), table, beams);
            DistillConfig cfg;
            cfg.alpha = 0.25 + 0.5 * (k % 3) / 2.0;
            cfg.curvature = curvatures[k % 3];
            cfg.pair_reduction = k % 2 ? "mean" : "sum";
            return check_params(params, [&] {
                net.zero_grad();
                proj.zero_grad();
                Mlp::Cache c;
                const Matrix logits = net.forward(x, &c);
                const FocalResult f = focal_loss(logits, y, 2.0);
                Matrix d_logits = (1.0 - cfg.alpha) * f.grad;
                Matrix d_mid = Matrix::Zero(c.mid.rows(), c.mid.cols());
                double a = 0.0, b = 0.0;
                if (relational) {
                    const RelationalResult rel = latent_relational_loss(tmid, c.mid, cfg);
                    const LossGrad o = output_relational_loss(st, logits, w, cfg);
                    d_mid += cfg.alpha * rel.grad;
                    d_logits += cfg.alpha * o.grad;
                    a = rel.loss;
                    b = o.loss;
                } else {
                    Mlp::Cache pc;
                    const LossGrad mid = kd_kl_loss(proj.forward(tmid, &pc), c.mid, cfg.temperature);
                    const LossGrad end = kd_kl_loss(tlogits, logits, cfg.temperature);
                    d_mid += cfg.alpha * mid.grad;
                    d_logits += cfg.alpha * end.grad;
                    proj.backward(pc, cfg.alpha * mid.grad_teacher);
                    a = mid.loss;
                    b = end.loss;
                }
                net.backward(c, d_logits, &d_mid);
                return relational ? rkd_total_loss(f.loss, a, b, cfg.alpha) : kd_total_loss(f.loss, a, b, cfg.alpha);
            });
        });
    };
    objective("kd-total", false);
    objective("rkd-total", true);
    return out;
}

} // namespace beamkd
