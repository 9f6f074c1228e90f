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

#include "beamkd/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace beamkd {

namespace {

int radar_dim(const DatasetConfig& d) { return d.window * d.radar.max_points * 5; }
int bev_dim(const DatasetConfig& d) { return d.window * d.grid.height * d.grid.width; }
int gps_dim(const DatasetConfig& d) { return d.window * d.gps.slots * 5; }

std::size_t mlp_count(const std::vector<int>& widths)
{
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        n += static_cast<std::size_t>(widths[l]) * static_cast<std::size_t>(widths[l + 1]) +
             static_cast<std::size_t>(widths[l + 1]);
    return n;
}

int codebook_size(const ExperimentConfig& c) { return build_codebook(c.codebook).size(); }

double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<int> argmax_rows(const Matrix& m)
{
    return predictions(m);
}

TrainConfig with_seed(TrainConfig t, std::uint64_t seed)
{
    t.seed = mix_seed(t.seed, seed);
    return t;
}

} // namespace

void ExperimentConfig::validate() const
{
    scene.validate();
    channel.validate();
    dataset.validate();
    teacher_train.validate();
    student_train.validate();
    distill.validate();
    build_codebook(codebook);
    if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end())
        throw ConfigError("unknown method '" + method + "'");
    if (seeds.empty())
        throw ConfigError("seeds must not be empty");
    if (scene.episode_length <= dataset.window)
        throw ConfigError("scene.episode_length must exceed dataset.window so every episode yields a sample");
    if (student.hidden.empty() || student.mid_layer < 0 || student.mid_layer >= static_cast<int>(student.hidden.size()))
        throw ConfigError("student.mid_layer must index one of the hidden layers");
}

ExperimentConfig experiment_config_from_json(const json& j)
{
    if (!j.is_object())
        throw ConfigError("experiment config must be a JSON object");
    ExperimentConfig c;
    StrictObject o(j, "config");
    c.name = o.get("name", c.name);
    c.scene = scene_config_from_json(o.section("scene"));
    c.channel = channel_config_from_json(o.section("channel"));
    c.codebook = codebook_spec_from_json(o.section("codebook"));
    c.dataset = dataset_config_from_json(o.section("dataset"));
    c.teacher = teacher_widths_from_json(o.section("teacher"));
    c.student = student_widths_from_json(o.section("student"));
    c.teacher_train = train_config_from_json(o.section("teacher_train"));
    c.student_train = train_config_from_json(o.section("student_train"));
    c.distill = distill_config_from_json(o.section("distill"));
    c.method = o.get("method", c.method);
    c.seeds = o.get("seeds", c.seeds);
    c.output_dir = o.get("output_dir", c.output_dir);
    o.finish();
    c.validate();
    return c;
}

json to_json(const ExperimentConfig& c)
{
    return {{"name", c.name},
            {"scene", to_json(c.scene)},
            {"channel", to_json(c.channel)},
            {"codebook", to_json(c.codebook)},
            {"dataset", to_json(c.dataset)},
            {"teacher", to_json(c.teacher)},
            {"student", to_json(c.student)},
            {"teacher_train", to_json(c.teacher_train)},
            {"student_train", to_json(c.student_train)},
            {"distill", to_json(c.distill)},
            {"method", c.method},
            {"seeds", c.seeds},
            {"output_dir", c.output_dir}};
}

std::string config_digest(const ExperimentConfig& c) { return json_digest(to_json(c)); }

void apply_override(json& doc, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;

    json* node = &doc;
    std::stringstream ss(path);
    std::string key;
    std::vector<std::string> keys;
    while (std::getline(ss, key, '.')) {
        if (key.empty())
            throw ConfigError("override '" + assignment + "' has an empty key segment");
        keys.push_back(key);
    }
    for (std::size_t k = 0; k + 1 < keys.size(); ++k) {
        if (!node->is_object())
            throw ConfigError("override '" + assignment + "' walks into a non-object");
        node = &(*node)[keys[k]];
        if (node->is_null())
            *node = json::object();
    }
    if (!node->is_object())
        throw ConfigError("override '" + assignment + "' walks into a non-object");
    (*node)[keys.back()] = std::move(value);
}

SceneConfig episode_scene_config(const ExperimentConfig& c, int episode)
{
    SceneConfig s = c.scene;
    s.seed = mix_seed(c.dataset.seed, static_cast<std::uint64_t>(episode), c.scene.seed);
    return s;
}

std::vector<Episode> generate_episodes(const ExperimentConfig& c)
{
    std::vector<Episode> out;
    for (int e = 0; e < c.dataset.episodes; ++e)
        out.push_back(generate_episode(episode_scene_config(c, e)));
    return out;
}

Dataset generate_dataset(const ExperimentConfig& c, const Codebook& codebook)
{
    Dataset d;
    for (int e = 0; e < c.dataset.episodes; ++e) {
        const Episode ep = generate_episode(episode_scene_config(c, e));
        auto samples = build_samples(ep, e, codebook, c.channel, c.dataset);
        std::move(samples.begin(), samples.end(), std::back_inserter(d.samples));
    }
    auto& m = d.manifest;
    m.shape = sample_shape(c.dataset, codebook.size());
    m.split = split_dataset(d.samples, c.dataset.split_fractions, c.dataset.seed);
    m.seed = c.dataset.seed;
    const json generation{{"scene", to_json(c.scene)},
                          {"channel", to_json(c.channel)},
                          {"codebook", to_json(c.codebook)},
                          {"dataset", to_json(c.dataset)}};
    m.config_digest = json_digest(generation);
    m.codebook_digest = json_digest(to_json(codebook.spec));
    m.codebook_size = codebook.size();
    return d;
}

Matrix gather_rows(const Matrix& m, std::span<const int> rows)
{
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
    return out;
}

FeatureSet make_features(const Dataset& d, const std::vector<int>& indices)
{
    FeatureSet f;
    f.radar = radar_features(d.samples, indices);
    f.bev = bev_features(d.samples, indices);
    f.gps = gps_features(d.samples, indices);
    for (int i : indices) {
        const auto& s = d.samples[static_cast<std::size_t>(i)];
        f.labels.push_back(s.label);
        f.rss.push_back(s.rss_vector);
    }
    return f;
}

SplitFeatures split_features(const Dataset& d)
{
    const auto& s = d.manifest.split;
    if (s.train.empty() || s.val.empty() || s.test.empty())
        throw DataError("every split needs at least one sample");
    return {make_features(d, s.train), make_features(d, s.val), make_features(d, s.test)};
}

DistillConfig method_distill_config(const DistillConfig& base, const std::string& method)
{
    DistillConfig c = base;
    c.kl_mid_enabled = c.kl_end_enabled = c.latent_enabled = c.output_enabled = false;
    if (method == "KD") {
        c.kl_mid_enabled = base.kl_mid_enabled;
        c.kl_end_enabled = base.kl_end_enabled;
    } else if (method == "RKD-manifold") {
        c.latent_enabled = true;
    } else if (method == "RKD-beamStr") {
        c.output_enabled = true;
    } else if (method == "RKD-both") {
        c.latent_enabled = c.output_enabled = true;
    } else if (method != "withoutKD" && method != "teacher") {
        throw ConfigError("unknown method '" + method + "'");
    }
    return c;
}

Matrix teacher_probabilities(const Teacher& t, const FeatureSet& f)
{
    return softmax(t.forward({&f.radar, &f.bev, &f.gps}));
}

Matrix student_probabilities(const Mlp& s, const FeatureSet& f) { return softmax(s.forward(f.radar)); }

TeacherRun train_teacher(const ExperimentConfig& c, const SplitFeatures& data, std::uint64_t seed)
{
    const int beams = static_cast<int>(data.train.rss.front().size());
    Rng init(mix_seed(seed, 0x7EAC));
    TeacherRun run;
    run.model = Teacher(static_cast<int>(data.train.radar.cols()), static_cast<int>(data.train.bev.cols()),
                        static_cast<int>(data.train.gps.cols()), beams, c.teacher, init);
    std::vector<ParamRef> params;
    run.model.append_params(params);
    const auto& tr = data.train;
    const double gamma = c.teacher_train.focal_gamma;

    auto step = [&](std::span<const int> pos) {
        const Matrix r = gather_rows(tr.radar, pos), b = gather_rows(tr.bev, pos), g = gather_rows(tr.gps, pos);
        std::vector<int> labels;
        for (int p : pos)
            labels.push_back(tr.labels[static_cast<std::size_t>(p)]);
        Teacher::Cache cache;
        const Matrix logits = run.model.forward({&r, &b, &g}, &cache);
        const FocalResult f = focal_loss(logits, labels, gamma);
        run.model.backward(cache, f.grad);
        return BatchResult{f.loss, {{"focal", f.loss}}};
    };
    auto validate = [&] { return mpr(predictions(teacher_probabilities(run.model, data.val)), data.val.rss).value; };
    run.history = train(params, static_cast<int>(tr.size()), with_seed(c.teacher_train, seed), step, validate);
    const Matrix p = teacher_probabilities(run.model, data.test);
    run.test = evaluate(p, data.test.labels, data.test.rss);
    return run;
}

StudentRun train_student(const ExperimentConfig& c, const SplitFeatures& data, const Teacher* teacher,
                         const std::vector<double>& similarity, const Eigen::MatrixXcd& weights,
                         const std::string& method, std::uint64_t seed)
{
    const DistillConfig dc = method_distill_config(c.distill, method);
    const bool distilled = method != "withoutKD";
    if (distilled && !teacher)
        throw std::invalid_argument("method " + method + " needs a trained teacher");
    const auto& tr = data.train;
    const int beams = static_cast<int>(tr.rss.front().size());

    Rng init(mix_seed(seed, 0x57D));
    StudentRun run;
    run.model = make_student(static_cast<int>(tr.radar.cols()), beams, c.student, init);
    std::vector<ParamRef> params;
    run.model.append_params(params, "student");

    // The teacher is frozen: its train-split outputs are computed once.
    Matrix t_mid, t_logits;
    std::vector<int> t_beams;
    if (distilled) {
        Teacher::Cache cache;
        t_logits = teacher->forward({&tr.radar, &tr.bev, &tr.gps}, &cache);
        t_mid = teacher->mid(cache);
        t_beams = argmax_rows(t_logits);
    }
    const bool kl_mid = dc.kl_mid_enabled && distilled;
    if (kl_mid) {
        run.projection = Mlp({static_cast<int>(t_mid.cols()), run.model.mid_dim()}, -1, false, init);
        run.projection.append_params(params, "projection");
    }
    const double alpha = distilled ? dc.alpha : 0.0;
    const double gamma = c.student_train.focal_gamma;

    auto step = [&](std::span<const int> pos) {
        const Matrix x = gather_rows(tr.radar, pos);
        std::vector<int> labels;
        for (int p : pos)
            labels.push_back(tr.labels[static_cast<std::size_t>(p)]);
        Mlp::Cache cache;
        const Matrix logits = run.model.forward(x, &cache);
        const FocalResult f = focal_loss(logits, labels, gamma);
        BatchResult out;
        out.components["focal"] = f.loss;
        Matrix d_logits = (1.0 - alpha) * f.grad;
        Matrix d_mid = Matrix::Zero(cache.mid.rows(), cache.mid.cols());
        double extra = 0.0;

        if (distilled && dc.kl_end_enabled) {
            const LossGrad kl = kd_kl_loss(gather_rows(t_logits, pos), logits, dc.temperature);
            d_logits += alpha * kl.grad;
            out.components["kl_end"] = kl.loss;
            extra += kl.loss;
        }
        if (kl_mid) {
            Mlp::Cache pc;
            const Matrix projected = run.projection.forward(gather_rows(t_mid, pos), &pc);
            const LossGrad kl = kd_kl_loss(projected, cache.mid, dc.temperature);
            d_mid += alpha * kl.grad;
            run.projection.backward(pc, alpha * kl.grad_teacher);
            out.components["kl_mid"] = kl.loss;
            extra += kl.loss;
        }
        // Relations need at least two samples; a trailing singleton batch trains on focal alone.
        if (pos.size() >= 2 && dc.latent_enabled) {
            const RelationalResult rel = latent_relational_loss(gather_rows(t_mid, pos), cache.mid, dc);
            d_mid += alpha * rel.grad;
            out.components["latent_rel"] = rel.loss;
            extra += rel.loss;
        }
        if (pos.size() >= 2 && dc.output_enabled) {
            std::vector<int> tb;
            for (int p : pos)
                tb.push_back(t_beams[static_cast<std::size_t>(p)]);
            const Matrix st = hard_beam_similarity(tb, similarity, beams);
            const LossGrad o = output_relational_loss(st, logits, weights, dc);
            d_logits += alpha * o.grad;
            out.components["output_rel"] = o.loss;
            extra += o.loss;
        }
        run.model.backward(cache, d_logits, &d_mid);
        out.loss = (1.0 - alpha) * f.loss + alpha * extra;
        return out;
    };
    auto validate = [&] { return mpr(predictions(student_probabilities(run.model, data.val)), data.val.rss).value; };
    run.history = train(params, static_cast<int>(tr.size()), with_seed(c.student_train, seed), step, validate);
    run.test = evaluate(student_probabilities(run.model, data.test), data.test.labels, data.test.rss);
    return run;
}

std::size_t teacher_parameter_count(const ExperimentConfig& c)
{
    const auto& t = c.teacher;
    auto chain = [](int in, std::vector<int> hidden) {
        hidden.insert(hidden.begin(), in);
        return hidden;
    };
    std::vector<int> fusion = chain(t.radar.back() + t.bev.back() + t.gps.back(), t.fusion);
    fusion.push_back(codebook_size(c));
    return mlp_count(chain(radar_dim(c.dataset), t.radar)) + mlp_count(chain(bev_dim(c.dataset), t.bev)) +
           mlp_count(chain(gps_dim(c.dataset), t.gps)) + mlp_count(fusion);
}

std::size_t student_parameter_count(const ExperimentConfig& c)
{
    std::vector<int> w{radar_dim(c.dataset)};
    w.insert(w.end(), c.student.hidden.begin(), c.student.hidden.end());
    w.push_back(codebook_size(c));
    return mlp_count(w);
}

ReproduceResult reproduce(const ExperimentConfig& c, const Dataset& data, const Codebook& codebook,
                          const std::vector<std::uint64_t>& seeds, const std::filesystem::path* run_dir)
{
    const SplitFeatures sf = split_features(data);
    const auto table = similarity_table(codebook);
    const auto weights = codebook_matrix(codebook);
    ReproduceResult res;
    res.teacher_params = teacher_parameter_count(c);
    res.student_params = student_parameter_count(c);

    for (std::uint64_t seed : seeds) {
        SeedResult sr;
        sr.seed = seed;
        TeacherRun teacher = train_teacher(c, sf, seed);
        sr.reports["teacher"] = teacher.test;
        std::filesystem::path seed_dir;
        if (run_dir) {
            seed_dir = *run_dir / ("seed-" + std::to_string(seed));
            std::filesystem::create_directories(seed_dir);
            write_history_csv(teacher.history, seed_dir / "history_teacher.csv");
        }
        for (const auto& method : kMethods) {
            if (method == "teacher")
                continue;
            StudentRun s = train_student(c, sf, &teacher.model, table, weights, method, seed);
            sr.reports[method] = s.test;
            if (run_dir)
                write_history_csv(s.history, seed_dir / ("history_" + method + ".csv"));
        }
        if (run_dir) {
            json m = json::object();
            for (const auto& [k, v] : sr.reports)
                m[k] = to_json(v);
            write_json_file(seed_dir / "metrics.json", m);
        }
        res.seeds.push_back(std::move(sr));
    }
    for (const auto& method : kMethods) {
        std::vector<double> mprs, rss;
        for (const auto& s : res.seeds) {
            mprs.push_back(s.reports.at(method).mpr_percent);
            rss.push_back(s.reports.at(method).mean_rss_dbm);
        }
        res.median_mpr[method] = median(mprs);
        res.median_rss[method] = median(rss);
    }
    return res;
}

json to_json(const ReproduceResult& r)
{
    json seeds = json::array();
    for (const auto& s : r.seeds) {
        json reports = json::object();
        for (const auto& [k, v] : s.reports)
            reports[k] = to_json(v);
        seeds.push_back({{"seed", s.seed}, {"reports", reports}});
    }
    return {{"seeds", seeds},
            {"median_mpr_percent", r.median_mpr},
            {"median_rss_dbm", r.median_rss},
            {"teacher_parameters", r.teacher_params},
            {"student_parameters", r.student_params},
            {"student_teacher_ratio", r.param_ratio()}};
}

std::string reproduce_table(const ReproduceResult& r)
{
    std::string out;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-16s %14s %16s", "method", "median MPR(%)", "median RSS(dBm)");
    out += buf;
    for (const auto& s : r.seeds) {
        std::snprintf(buf, sizeof buf, " %10s", ("MPR s" + std::to_string(s.seed)).c_str());
        out += buf;
    }
    out += "\n";
    for (const auto& method : kMethods) {
        std::snprintf(buf, sizeof buf, "%-16s %14.3f %16.3f", method.c_str(), r.median_mpr.at(method),
                      r.median_rss.at(method));
        out += buf;
        for (const auto& s : r.seeds) {
            std::snprintf(buf, sizeof buf, " %10.3f", s.reports.at(method).mpr_percent);
            out += buf;
        }
        out += "\n";
    }
    std::snprintf(buf, sizeof buf, "parameters: teacher %zu, student %zu, ratio %.4f\n", r.teacher_params,
                  r.student_params, r.param_ratio());
    out += buf;
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text)
{
    auto number = [&](const std::string& s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("bad seed '" + s + "' in '" + text + "'");
        return static_cast<std::uint64_t>(std::stoull(s));
    };
    std::vector<std::uint64_t> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const auto lo = number(text.substr(0, dots));
        const auto hi = number(text.substr(dots + 2));
        if (hi < lo || hi - lo > 1000)
            throw ConfigError("bad seed range '" + text + "'");
        for (auto s = lo; s <= hi; ++s)
            out.push_back(s);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(number(item));
    if (out.empty())
        throw ConfigError("empty seed list");
    return out;
}

} // namespace beamkd
