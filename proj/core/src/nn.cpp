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

#include "beamkd/nn.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace beamkd {

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d))
{
    if (numel() != data.size())
        throw std::invalid_argument("tensor shape does not match its data length");
}

std::size_t Tensor::numel() const
{
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0)
            throw std::invalid_argument("negative tensor dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor Tensor::from_matrix(const Matrix& m)
{
    return Tensor({static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                  std::vector<double>(m.data(), m.data() + m.size()));
}

Matrix Tensor::to_matrix() const
{
    if (shape.size() != 2)
        throw std::invalid_argument("to_matrix needs a rank-2 tensor");
    return Eigen::Map<const Matrix>(data.data(), shape[0], shape[1]);
}

// ---- Mlp -------------------------------------------------------------------

Mlp::Mlp(std::vector<int> widths, int mid_layer, bool relu_output, Rng& rng)
    : widths_(std::move(widths)), mid_layer_(mid_layer), relu_output_(relu_output)
{
    if (widths_.size() < 2)
        throw ConfigError("an MLP needs at least an input and an output width");
    for (int w : widths_)
        if (w < 1)
            throw ConfigError("MLP widths must be positive");
    const int count = static_cast<int>(widths_.size()) - 1;
    if (mid_layer_ >= count)
        throw ConfigError("MLP mid layer index out of range");

    for (int l = 0; l < count; ++l) {
        const int in = widths_[static_cast<std::size_t>(l)];
        const int out = widths_[static_cast<std::size_t>(l) + 1];
        std::normal_distribution<double> he(0.0, std::sqrt(2.0 / in));
        DenseLayer layer{Matrix(in, out), Matrix::Zero(1, out)};
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
            layer.weight.data()[i] = he(rng);
        layers_.push_back(std::move(layer));
        grads_.push_back({Matrix::Zero(in, out), Matrix::Zero(1, out)});
    }
}

std::size_t Mlp::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers_)
        n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

Matrix Mlp::forward(const Matrix& x, Cache* cache) const
{
    if (layers_.empty())
        throw std::logic_error("forward on an empty MLP");
    if (x.cols() != input_dim())
        throw std::invalid_argument("MLP input has " + std::to_string(x.cols()) + " columns, expected " +
                                    std::to_string(input_dim()));
    if (cache) {
        cache->inputs.resize(layers_.size());
        cache->outputs.resize(layers_.size());
    }
    Matrix h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix z = h * layers_[l].weight;
        z.rowwise() += layers_[l].bias.row(0);
        if (l + 1 < layers_.size() || relu_output_)
            z = z.cwiseMax(0.0);
        if (cache)
            cache->inputs[l] = std::move(h);
        h = std::move(z);
        if (cache) {
            cache->outputs[l] = h;
            if (static_cast<int>(l) == mid_layer_)
                cache->mid = h;
        }
    }
    return h;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& d_out, const Matrix* d_mid)
{
    Matrix g = d_out;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        if (static_cast<int>(k) == mid_layer_ && d_mid)
            g += *d_mid;
        if (k + 1 < layers_.size() || relu_output_)
            g = g.cwiseProduct((cache.outputs[k].array() > 0.0).cast<double>().matrix());
        grads_[k].weight.noalias() += cache.inputs[k].transpose() * g;
        grads_[k].bias += g.colwise().sum();
        g = (g * layers_[k].weight.transpose()).eval();
    }
    return g;
}

void Mlp::zero_grad()
{
    for (auto& g : grads_) {
        g.weight.setZero();
        g.bias.setZero();
    }
}

void Mlp::append_params(std::vector<ParamRef>& out, const std::string& prefix)
{
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::string base = prefix + ".l" + std::to_string(l);
        out.push_back({base + ".weight", &layers_[l].weight, &grads_[l].weight});
        out.push_back({base + ".bias", &layers_[l].bias, &grads_[l].bias});
    }
}

// ---- Teacher / student -----------------------------------------------------

namespace {

std::vector<int> chain(int in, const std::vector<int>& hidden, int out = -1)
{
    std::vector<int> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    if (out > 0)
        w.push_back(out);
    return w;
}

} // namespace

Teacher::Teacher(int radar_dim, int bev_dim, int gps_dim, int beams, const TeacherWidths& w, Rng& rng)
{
    if (w.radar.empty() || w.bev.empty() || w.gps.empty() || w.fusion.empty())
        throw ConfigError("teacher encoders and fusion trunk need at least one hidden layer");
    radar_ = Mlp(chain(radar_dim, w.radar), -1, true, rng);
    bev_ = Mlp(chain(bev_dim, w.bev), -1, true, rng);
    gps_ = Mlp(chain(gps_dim, w.gps), -1, true, rng);
    const int fused = w.radar.back() + w.bev.back() + w.gps.back();
    fusion_ = Mlp(chain(fused, w.fusion, beams), static_cast<int>(w.fusion.size()) - 1, false, rng);
}

Matrix Teacher::forward(const TeacherInputs& in, Cache* cache) const
{
    if (!in.radar || !in.bev || !in.gps)
        throw std::invalid_argument("teacher needs radar, BEV and GPS inputs");
    const Matrix r = radar_.forward(*in.radar, cache ? &cache->radar : nullptr);
    const Matrix b = bev_.forward(*in.bev, cache ? &cache->bev : nullptr);
    const Matrix g = gps_.forward(*in.gps, cache ? &cache->gps : nullptr);
    Matrix z(r.rows(), r.cols() + b.cols() + g.cols());
    z << r, b, g;
    return fusion_.forward(z, cache ? &cache->fusion : nullptr);
}

void Teacher::backward(const Cache& cache, const Matrix& d_logits)
{
    const Matrix dz = fusion_.backward(cache.fusion, d_logits);
    const Eigen::Index rc = radar_.output_dim(), bc = bev_.output_dim(), gc = gps_.output_dim();
    radar_.backward(cache.radar, dz.leftCols(rc));
    bev_.backward(cache.bev, dz.middleCols(rc, bc));
    gps_.backward(cache.gps, dz.rightCols(gc));
}

std::size_t Teacher::parameter_count() const
{
    return radar_.parameter_count() + bev_.parameter_count() + gps_.parameter_count() + fusion_.parameter_count();
}

void Teacher::zero_grad()
{
    radar_.zero_grad();
    bev_.zero_grad();
    gps_.zero_grad();
    fusion_.zero_grad();
}

void Teacher::append_params(std::vector<ParamRef>& out)
{
    radar_.append_params(out, "teacher.radar");
    bev_.append_params(out, "teacher.bev");
    gps_.append_params(out, "teacher.gps");
    fusion_.append_params(out, "teacher.fusion");
}

Mlp make_student(int radar_dim, int beams, const StudentWidths& w, Rng& rng)
{
    return Mlp(chain(radar_dim, w.hidden, beams), w.mid_layer, false, rng);
}

// ---- losses ----------------------------------------------------------------

Matrix softmax(const Matrix& logits)
{
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - m).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits)
{
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

double focal_loss_value(double p_label, double gamma)
{
    const double p = std::max(p_label, kFocalEpsilon);
    return -std::pow(1.0 - p, gamma) * std::log(p);
}

FocalResult focal_loss(const Matrix& logits, std::span<const int> labels, double gamma)
{
    if (static_cast<std::size_t>(logits.rows()) != labels.size())
        throw std::invalid_argument("focal_loss: one label per row expected");
    if (!(gamma >= 0.0))
        throw std::invalid_argument("focal_loss: gamma must be >= 0");
    FocalResult r;
    const Matrix p = softmax(logits);
    const auto n = static_cast<double>(labels.size());
    r.grad = Matrix::Zero(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= logits.cols())
            throw std::invalid_argument("focal_loss: label out of range");
        double py = p(i, y);
        if (py < kFocalEpsilon) {
            py = kFocalEpsilon;
            ++r.clamped;
        }
        const double q = 1.0 - py;
        r.loss += -std::pow(q, gamma) * std::log(py);
        // dL/dp_y * p_y; the (1-p)^(gamma-1) factor vanishes with p_y ln p_y at p_y = 1.
        const double lead = (q > 0.0 && gamma > 0.0) ? gamma * std::pow(q, gamma - 1.0) * py * std::log(py) : 0.0;
        const double scale = lead - std::pow(q, gamma);
        for (Eigen::Index j = 0; j < logits.cols(); ++j)
            r.grad(i, j) = scale * ((j == y ? 1.0 : 0.0) - p(i, j)) / n;
    }
    r.loss /= n;
    return r;
}

// ---- optimisation ----------------------------------------------------------

void TrainConfig::validate() const
{
    if (epochs < 1 || batch_size < 1)
        throw ConfigError("train.epochs and train.batch_size must be >= 1");
    if (!(lr0 > 0.0) || !(lr_decay_abs_per_epoch >= 0.0))
        throw ConfigError("train.lr0 must be > 0 and lr_decay_abs_per_epoch >= 0");
    if (decay_start_epoch < 1 || restart_interval_epochs < 0)
        throw ConfigError("train.decay_start_epoch must be >= 1, restart_interval_epochs >= 0");
    if (restart_mode != "reset" && restart_mode != "none")
        throw ConfigError("train.restart_mode must be \"reset\" or \"none\"");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ConfigError("train.momentum must lie in [0, 1)");
    if (!(focal_gamma >= 0.0))
        throw ConfigError("train.focal_gamma must be >= 0");
    for (int e = 1; e <= epochs; ++e)
        if (!(learning_rate(*this, e) > 0.0))
            throw ConfigError("learning rate reaches " + std::to_string(learning_rate(*this, e)) + " at epoch " +
                              std::to_string(e));
}

double learning_rate(const TrainConfig& c, int epoch)
{
    if (epoch < c.decay_start_epoch)
        return c.lr0;
    int k = epoch - c.decay_start_epoch;
    if (c.restart_mode == "reset" && c.restart_interval_epochs > 0)
        k %= c.restart_interval_epochs;
    return c.lr0 - k * c.lr_decay_abs_per_epoch;
}

Sgd::Sgd(std::vector<ParamRef> params, double momentum) : params_(std::move(params)), momentum_(momentum)
{
    for (const auto& p : params_)
        velocity_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
}

void Sgd::step(double lr)
{
    for (const auto& p : params_) {
        if (p.grad->rows() != p.value->rows() || p.grad->cols() != p.value->cols())
            throw std::invalid_argument("gradient shape mismatch for " + p.name);
        if (!p.grad->allFinite())
            throw NumericalError("non-finite gradient in " + p.name);
    }
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& v = velocity_[k];
        if (momentum_ > 0.0) {
            v = momentum_ * v + *params_[k].grad;
            *params_[k].value -= lr * v;
        } else {
            *params_[k].value -= lr * *params_[k].grad;
        }
    }
}

std::size_t parameter_count(const std::vector<ParamRef>& params)
{
    std::size_t n = 0;
    for (const auto& p : params)
        n += static_cast<std::size_t>(p.value->size());
    return n;
}

std::vector<double> flatten_values(const std::vector<ParamRef>& params)
{
    std::vector<double> out;
    out.reserve(parameter_count(params));
    for (const auto& p : params)
        out.insert(out.end(), p.value->data(), p.value->data() + p.value->size());
    return out;
}

std::vector<double> flatten_grads(const std::vector<ParamRef>& params)
{
    std::vector<double> out;
    out.reserve(parameter_count(params));
    for (const auto& p : params)
        out.insert(out.end(), p.grad->data(), p.grad->data() + p.grad->size());
    return out;
}

void assign_values(const std::vector<ParamRef>& params, std::span<const double> flat)
{
    if (flat.size() != parameter_count(params))
        throw std::invalid_argument("assign_values: size mismatch");
    std::size_t off = 0;
    for (const auto& p : params) {
        std::copy_n(flat.data() + off, p.value->size(), p.value->data());
        off += static_cast<std::size_t>(p.value->size());
    }
}

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss, std::span<const double> point,
                           std::span<const double> analytic, double eps, std::size_t samples, std::uint64_t seed,
                           double floor)
{
    if (point.size() != analytic.size())
        throw std::invalid_argument("grad_check: gradient size mismatch");
    std::vector<std::size_t> coords(point.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (samples > 0 && samples < coords.size()) {
        Rng rng(mix_seed(seed, 0x6C));
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(samples);
        std::sort(coords.begin(), coords.end());
    }
    GradCheckResult r;
    std::vector<double> x(point.begin(), point.end());
    for (std::size_t i : coords) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double up = loss(x);
        x[i] = keep - eps;
        const double down = loss(x);
        x[i] = keep;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic[i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
        if (r.checked == 0 || rel > r.max_rel_error) {
            r.max_rel_error = rel;
            r.worst_index = i;
        }
        ++r.checked;
    }
    return r;
}

TrainHistory train(std::vector<ParamRef> params, int train_count, const TrainConfig& config,
                   const std::function<BatchResult(std::span<const int>)>& step, const std::function<double()>& validate)
{
    config.validate();
    if (train_count < 1)
        throw DataError("training split is empty");
    Rng rng(mix_seed(config.seed, 0x7EA1));
    std::vector<int> order(static_cast<std::size_t>(train_count));
    std::iota(order.begin(), order.end(), 0);
    Sgd opt(params, config.momentum);

    TrainHistory h;
    std::vector<Matrix> best;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        const double lr = learning_rate(config, epoch);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        for (int start = 0; start < train_count; start += config.batch_size) {
            const int len = std::min(config.batch_size, train_count - start);
            for (const auto& p : params)
                p.grad->setZero();
            const BatchResult r = step(std::span<const int>(order).subspan(static_cast<std::size_t>(start),
                                                                          static_cast<std::size_t>(len)));
            if (!std::isfinite(r.loss))
                throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
            opt.step(lr);
            rec.train_loss += r.loss * len;
            for (const auto& [k, v] : r.components)
                rec.components[k] += v * len;
        }
        rec.train_loss /= train_count;
        for (auto& [k, v] : rec.components)
            v /= train_count;
        rec.val_mpr = validate();
        if (epoch == 1 || rec.val_mpr > h.best_val_mpr) {
            h.best_epoch = epoch;
            h.best_val_mpr = rec.val_mpr;
            best.clear();
            for (const auto& p : params)
                best.push_back(*p.value);
        }
        h.epochs.push_back(std::move(rec));
    }
    for (std::size_t k = 0; k < params.size(); ++k)
        *params[k].value = best[k];
    return h;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path)
{
    std::vector<std::string> keys;
    if (!history.epochs.empty())
        for (const auto& [k, v] : history.epochs.front().components)
            keys.push_back(k);
    std::string out = "epoch,lr,train_loss,val_mpr";
    for (const auto& k : keys)
        out += "," + k;
    out += "\n";
    char buf[64];
    for (const auto& e : history.epochs) {
        out += std::to_string(e.epoch);
        for (double v : {e.lr, e.train_loss, e.val_mpr}) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        }
        for (const auto& k : keys) {
            const auto it = e.components.find(k);
            std::snprintf(buf, sizeof buf, ",%.17g", it == e.components.end() ? 0.0 : it->second);
            out += buf;
        }
        out += "\n";
    }
    write_text_file(path, out);
}

void write_checkpoint(const std::vector<ParamRef>& params, const json& header, const std::filesystem::path& stem)
{
    std::vector<std::uint8_t> blob;
    json layout = json::array();
    for (const auto& p : params) {
        layout.push_back({{"name", p.name}, {"shape", {p.value->rows(), p.value->cols()}}});
        for (Eigen::Index i = 0; i < p.value->size(); ++i)
            append_f32(blob, static_cast<float>(p.value->data()[i]));
    }
    auto bin = stem;
    bin += ".bin";
    auto meta = stem;
    meta += ".json";
    json j = header;
    j["format"] = "beamkd-checkpoint";
    j["version"] = 1;
    j["dtype"] = "float32";
    j["byte_order"] = "little-endian";
    j["parameters"] = std::move(layout);
    j["parameter_count"] = parameter_count(params);
    j["blob"] = bin.filename().string();
    j["blob_sha256"] = to_hex(sha256(blob));
    write_file_bytes(bin, blob);
    write_json_file(meta, j);
}

json read_checkpoint(const std::vector<ParamRef>& params, const std::filesystem::path& stem)
{
    auto meta = stem;
    meta += ".json";
    const json j = read_json_file(meta);
    if (j.value("format", "") != "beamkd-checkpoint")
        throw DataError("not a beamkd checkpoint: " + meta.string());
    if (j.value("version", -1) != 1)
        throw VersionError("unsupported checkpoint version in " + meta.string());
    const auto& layout = j.at("parameters");
    if (layout.size() != params.size())
        throw DataError("checkpoint parameter list does not match the model");
    const auto blob = read_file_bytes(meta.parent_path() / j.at("blob").get<std::string>());
    if (blob.size() != parameter_count(params) * 4)
        throw TruncatedError("checkpoint blob has the wrong size");
    if (to_hex(sha256(blob)) != j.at("blob_sha256").get<std::string>())
        throw DigestError("checkpoint blob digest mismatch");
    std::size_t off = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& p = params[k];
        const auto shape = layout[k].at("shape").get<std::vector<Eigen::Index>>();
        if (layout[k].at("name").get<std::string>() != p.name || shape.size() != 2 || shape[0] != p.value->rows() ||
            shape[1] != p.value->cols())
            throw DataError("checkpoint entry " + std::to_string(k) + " does not match " + p.name);
        for (Eigen::Index i = 0; i < p.value->size(); ++i, off += 4)
            p.value->data()[i] = read_f32(blob, off);
    }
    return j;
}

TrainConfig train_config_from_json(const json& j)
{
    TrainConfig c;
    StrictObject o(j, "train");
    c.epochs = o.get("epochs", c.epochs);
    c.batch_size = o.get("batch_size", c.batch_size);
    c.lr0 = o.get("lr0", c.lr0);
    c.lr_decay_abs_per_epoch = o.get("lr_decay_abs_per_epoch", c.lr_decay_abs_per_epoch);
    c.decay_start_epoch = o.get("decay_start_epoch", c.decay_start_epoch);
    c.restart_interval_epochs = o.get("restart_interval_epochs", c.restart_interval_epochs);
    c.restart_mode = o.get("restart_mode", c.restart_mode);
    c.momentum = o.get("momentum", c.momentum);
    c.focal_gamma = o.get("focal_gamma", c.focal_gamma);
    c.seed = o.get("seed", c.seed);
    o.finish();
    return c;
}

json to_json(const TrainConfig& c)
{
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr0", c.lr0},
            {"lr_decay_abs_per_epoch", c.lr_decay_abs_per_epoch},
            {"decay_start_epoch", c.decay_start_epoch},
            {"restart_interval_epochs", c.restart_interval_epochs},
            {"restart_mode", c.restart_mode},
            {"momentum", c.momentum},
            {"focal_gamma", c.focal_gamma},
            {"seed", c.seed}};
}

TeacherWidths teacher_widths_from_json(const json& j)
{
    TeacherWidths w;
    StrictObject o(j, "teacher");
    w.radar = o.get("radar", w.radar);
    w.bev = o.get("bev", w.bev);
    w.gps = o.get("gps", w.gps);
    w.fusion = o.get("fusion", w.fusion);
    o.finish();
    return w;
}

json to_json(const TeacherWidths& w)
{
    return {{"radar", w.radar}, {"bev", w.bev}, {"gps", w.gps}, {"fusion", w.fusion}};
}

StudentWidths student_widths_from_json(const json& j)
{
    StudentWidths w;
    StrictObject o(j, "student");
    w.hidden = o.get("hidden", w.hidden);
    w.mid_layer = o.get("mid_layer", w.mid_layer);
    o.finish();
    if (w.hidden.empty() || w.mid_layer < 0 || w.mid_layer >= static_cast<int>(w.hidden.size()))
        throw ConfigError("student.mid_layer must index one of the hidden layers");
    return w;
}

json to_json(const StudentWidths& w)
{
    return {{"hidden", w.hidden}, {"mid_layer", w.mid_layer}};
}

} // namespace beamkd
