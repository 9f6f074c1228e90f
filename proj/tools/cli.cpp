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

#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "beamkd/experiment.hpp"
#include "beamkd/gradcheck.hpp"

namespace beamkd::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir;
    std::string seed_text;
    std::vector<std::string> overrides;
    std::optional<double> assert_mpr_min;
    std::vector<std::string> assert_topk;
    bool power_domain = false;
    std::string dataset_dir;
    std::string teacher_stem;
    std::string checkpoint_stem;
    std::string method;
};

struct Loaded {
    ExperimentConfig config;
    std::string digest;
    std::vector<std::uint64_t> seeds;
};

Loaded load(const Options& o)
{
    if (o.config_path.empty())
        throw ConfigError("--config is required");
    json doc = read_json_file(o.config_path);
    for (const auto& s : o.overrides)
        apply_override(doc, s);
    if (o.power_domain)
        apply_override(doc, "channel.power_domain_combining=true");
    Loaded l;
    l.config = experiment_config_from_json(doc);
    l.digest = config_digest(l.config);
    l.seeds = o.seed_text.empty() ? l.config.seeds : parse_seed_list(o.seed_text);
    return l;
}

std::string seed_tag(const std::vector<std::uint64_t>& seeds)
{
    if (seeds.size() == 1)
        return "s" + std::to_string(seeds.front());
    bool contiguous = true;
    for (std::size_t i = 1; i < seeds.size(); ++i)
        contiguous = contiguous && seeds[i] == seeds[i - 1] + 1;
    if (contiguous)
        return "s" + std::to_string(seeds.front()) + "-" + std::to_string(seeds.back());
    std::string t = "s";
    for (std::size_t i = 0; i < seeds.size(); ++i)
        t += (i ? "_" : "") + std::to_string(seeds[i]);
    return t;
}

// Work happens in <id>.partial and is renamed into place only on success.
class RunDir {
public:
    RunDir(const fs::path& out, const std::string& id) : final_(out / id), partial_(out / (id + ".partial"))
    {
        fs::remove_all(partial_);
        fs::create_directories(partial_);
    }
    ~RunDir()
    {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(partial_, ec);
        }
    }
    RunDir(const RunDir&) = delete;
    RunDir& operator=(const RunDir&) = delete;

    const fs::path& path() const { return partial_; }
    const fs::path& final_path() const { return final_; }

    void commit()
    {
        fs::remove_all(final_);
        fs::rename(partial_, final_);
        committed_ = true;
    }

private:
    fs::path final_;
    fs::path partial_;
    bool committed_ = false;
};

fs::path out_root(const Options& o, const ExperimentConfig& c) { return o.out_dir.empty() ? fs::path(c.output_dir) : fs::path(o.out_dir); }

void write_run_manifest(const RunDir& dir, const std::string& subcommand, const std::string& id, const Loaded& l,
                        const Options& o, const json& extra = json::object())
{
    json m{{"subcommand", subcommand},
           {"run_id", id},
           {"config_digest", l.digest},
           {"seeds", l.seeds},
           {"overrides", o.overrides},
           {"power_domain_flag", o.power_domain},
           {"config", to_json(l.config)}};
    for (const auto& [k, v] : extra.items())
        m[k] = v;
    write_json_file(dir.path() / "manifest.json", m);
}

Dataset obtain_dataset(const Options& o, const ExperimentConfig& c, const Codebook& codebook)
{
    if (o.dataset_dir.empty())
        return generate_dataset(c, codebook);
    Dataset d = read_dataset(o.dataset_dir);
    if (d.manifest.codebook_size != codebook.size())
        throw DataError("dataset was built for " + std::to_string(d.manifest.codebook_size) + " beams, config has " +
                        std::to_string(codebook.size()));
    if (d.manifest.shape != sample_shape(c.dataset, codebook.size()))
        throw DataError("dataset tensor shapes differ from the configured dataset section");
    return d;
}

json teacher_header(const ExperimentConfig& c, const SplitFeatures& f, int beams, std::uint64_t seed,
                    const std::string& digest)
{
    return {{"role", "teacher"},
            {"widths", to_json(c.teacher)},
            {"inputs", {{"radar", f.train.radar.cols()}, {"bev", f.train.bev.cols()}, {"gps", f.train.gps.cols()}}},
            {"beams", beams},
            {"seed", seed},
            {"config_digest", digest}};
}

json student_header(const ExperimentConfig& c, const SplitFeatures& f, int beams, std::uint64_t seed,
                    const std::string& digest, const std::string& method)
{
    return {{"role", "student"},
            {"method", method},
            {"widths", to_json(c.student)},
            {"inputs", {{"radar", f.train.radar.cols()}}},
            {"beams", beams},
            {"seed", seed},
            {"config_digest", digest}};
}

fs::path meta_path(const fs::path& stem)
{
    auto p = stem;
    p += ".json";
    return p;
}

Teacher load_teacher(const fs::path& stem)
{
    const json h = read_json_file(meta_path(stem));
    if (h.value("role", "") != "teacher")
        throw DataError(stem.string() + " is not a teacher checkpoint");
    Rng unused(0);
    const auto& in = h.at("inputs");
    Teacher t(in.at("radar").get<int>(), in.at("bev").get<int>(), in.at("gps").get<int>(), h.at("beams").get<int>(),
              teacher_widths_from_json(h.at("widths")), unused);
    std::vector<ParamRef> params;
    t.append_params(params);
    read_checkpoint(params, stem);
    return t;
}

Mlp load_student(const fs::path& stem)
{
    const json h = read_json_file(meta_path(stem));
    if (h.value("role", "") != "student")
        throw DataError(stem.string() + " is not a student checkpoint");
    Rng unused(0);
    Mlp s = make_student(h.at("inputs").at("radar").get<int>(), h.at("beams").get<int>(),
                         student_widths_from_json(h.at("widths")), unused);
    std::vector<ParamRef> params;
    s.append_params(params, "student");
    read_checkpoint(params, stem);
    return s;
}

void write_report(const fs::path& dir, const std::string& method, const MetricsReport& r, const std::string& digest)
{
    json j = to_json(r);
    j["method"] = method;
    j["config_digest"] = digest;
    write_json_file(dir / "report.json", j);
    write_text_file(dir / "report.txt", report_table_header() + "\n" + report_table_row(method, r) + "\n");
    std::cout << report_table_header() << "\n" << report_table_row(method, r) << "\n";
}

bool check_assertions(const Options& o, const MetricsReport& r)
{
    bool ok = true;
    if (o.assert_mpr_min && !(r.mpr_percent >= *o.assert_mpr_min)) {
        std::cerr << "assertion failed: MPR " << r.mpr_percent << " < " << *o.assert_mpr_min << "\n";
        ok = false;
    }
    for (const auto& a : o.assert_topk) {
        const auto eq = a.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--assert-topk expects k=min_accuracy, got '" + a + "'");
        const int k = std::stoi(a.substr(0, eq));
        const double min = std::stod(a.substr(eq + 1));
        const auto it = r.top_k.find(k);
        if (it == r.top_k.end())
            throw ConfigError("--assert-topk: top-" + std::to_string(k) + " is not reported");
        if (!(it->second >= min)) {
            std::cerr << "assertion failed: top-" << k << " " << it->second << " < " << min << "\n";
            ok = false;
        }
    }
    return ok;
}

std::string run_id(const std::string& sub, const Loaded& l) { return sub + "-" + l.digest.substr(0, 12) + "-" + seed_tag(l.seeds); }

// ---- subcommands -----------------------------------------------------------

int cmd_scene_gen(const Options& o)
{
    const Loaded l = load(o);
    const std::string id = run_id("scene-gen", l);
    RunDir dir(out_root(o, l.config), id);
    fs::create_directories(dir.path() / "episodes");
    const auto episodes = generate_episodes(l.config);
    for (std::size_t e = 0; e < episodes.size(); ++e) {
        char name[32];
        std::snprintf(name, sizeof name, "episode_%03zu.json", e);
        write_json_file(dir.path() / "episodes" / name, to_json(episodes[e]));
    }
    write_run_manifest(dir, "scene-gen", id, l, o, {{"episodes", episodes.size()}});
    dir.commit();
    std::cout << "wrote " << episodes.size() << " episodes to " << dir.final_path().string() << "\n";
    return kOk;
}

int cmd_dataset_gen(const Options& o)
{
    const Loaded l = load(o);
    const std::string id = run_id("dataset-gen", l);
    RunDir dir(out_root(o, l.config), id);
    const Codebook codebook = build_codebook(l.config.codebook);
    const Dataset d = generate_dataset(l.config, codebook);
    write_dataset(d, dir.path() / "dataset");
    write_codebook(codebook, dir.path() / "codebook");

    const auto hist = label_histogram(d.samples, codebook.size());
    const double coverage = top_label_coverage(hist, 10);
    write_json_file(dir.path() / "label_histogram.json",
                    {{"histogram", hist}, {"top10_coverage", coverage}, {"samples", d.samples.size()}});
    write_run_manifest(dir, "dataset-gen", id, l, o,
                       {{"samples", d.samples.size()},
                        {"split_sizes",
                         {d.manifest.split.train.size(), d.manifest.split.val.size(), d.manifest.split.test.size()}}});
    dir.commit();
    std::cout << "samples " << d.samples.size() << " (train " << d.manifest.split.train.size() << ", val "
              << d.manifest.split.val.size() << ", test " << d.manifest.split.test.size() << ")\n";
    std::cout << "top-10 label coverage " << coverage << "\n";
    if (coverage <= 0.5)
        std::cerr << "warning: label histogram is not concentrated (top-10 coverage " << coverage << ")\n";
    return kOk;
}

int cmd_train_teacher(const Options& o)
{
    const Loaded l = load(o);
    const std::uint64_t seed = l.seeds.front();
    const std::string id = run_id("train-teacher", l);
    const Codebook codebook = build_codebook(l.config.codebook);
    const Dataset d = obtain_dataset(o, l.config, codebook);
    RunDir dir(out_root(o, l.config), id);
    const SplitFeatures f = split_features(d);
    TeacherRun t = train_teacher(l.config, f, seed);
    std::vector<ParamRef> params;
    t.model.append_params(params);
    write_checkpoint(params, teacher_header(l.config, f, codebook.size(), seed, l.digest), dir.path() / "teacher");
    write_history_csv(t.history, dir.path() / "history.csv");
    write_report(dir.path(), "teacher", t.test, l.digest);
    write_run_manifest(dir, "train-teacher", id, l, o,
                       {{"parameters", t.model.parameter_count()}, {"best_epoch", t.history.best_epoch}});
    dir.commit();
    return check_assertions(o, t.test) ? kOk : kAssertionFailed;
}

int cmd_distill(const Options& o)
{
    const Loaded l = load(o);
    const std::uint64_t seed = l.seeds.front();
    const std::string method = o.method.empty() ? l.config.method : o.method;
    if (method == "teacher" || std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end())
        throw ConfigError("distill needs a student method, got '" + method + "'");
    const std::string id = run_id("distill-" + method, l);
    const Codebook codebook = build_codebook(l.config.codebook);
    const Dataset d = obtain_dataset(o, l.config, codebook);
    const Teacher loaded = o.teacher_stem.empty() ? Teacher() : load_teacher(o.teacher_stem);
    RunDir dir(out_root(o, l.config), id);
    const SplitFeatures f = split_features(d);

    Teacher teacher = loaded;
    if (o.teacher_stem.empty()) {
        TeacherRun t = train_teacher(l.config, f, seed);
        teacher = t.model;
        std::vector<ParamRef> tp;
        teacher.append_params(tp);
        write_checkpoint(tp, teacher_header(l.config, f, codebook.size(), seed, l.digest), dir.path() / "teacher");
        write_history_csv(t.history, dir.path() / "history_teacher.csv");
    }
    StudentRun s = train_student(l.config, f, &teacher, similarity_table(codebook), codebook_matrix(codebook), method, seed);
    std::vector<ParamRef> params;
    s.model.append_params(params, "student");
    write_checkpoint(params, student_header(l.config, f, codebook.size(), seed, l.digest, method), dir.path() / "student");
    if (s.projection.layers().size() > 0) {
        std::vector<ParamRef> pp;
        s.projection.append_params(pp, "projection");
        write_checkpoint(pp, {{"role", "projection"}, {"config_digest", l.digest}}, dir.path() / "projection");
    }
    write_history_csv(s.history, dir.path() / "history.csv");
    write_report(dir.path(), method, s.test, l.digest);
    write_run_manifest(dir, "distill", id, l, o,
                       {{"method", method},
                        {"teacher_parameters", teacher.parameter_count()},
                        {"student_parameters", s.model.parameter_count()},
                        {"best_epoch", s.history.best_epoch}});
    dir.commit();
    return check_assertions(o, s.test) ? kOk : kAssertionFailed;
}

int cmd_evaluate(const Options& o)
{
    if (o.checkpoint_stem.empty())
        throw ConfigError("evaluate needs --checkpoint STEM");
    const Loaded l = load(o);
    const Codebook codebook = build_codebook(l.config.codebook);
    const Dataset d = obtain_dataset(o, l.config, codebook);
    const json header = read_json_file(meta_path(o.checkpoint_stem));
    const std::string role = header.value("role", "");
    const SplitFeatures f = split_features(d);
    Matrix probs;
    if (role == "teacher")
        probs = teacher_probabilities(load_teacher(o.checkpoint_stem), f.test);
    else if (role == "student")
        probs = student_probabilities(load_student(o.checkpoint_stem), f.test);
    else
        throw DataError("checkpoint role '" + role + "' cannot be evaluated");
    const MetricsReport r = evaluate(probs, f.test.labels, f.test.rss);
    const std::string id = run_id("evaluate", l);
    RunDir dir(out_root(o, l.config), id);
    const std::string label = role == "teacher" ? "teacher" : header.value("method", "student");
    write_report(dir.path(), label, r, l.digest);
    write_run_manifest(dir, "evaluate", id, l, o,
                       {{"checkpoint", fs::absolute(o.checkpoint_stem).string()},
                        {"checkpoint_config_digest", header.value("config_digest", "")}});
    dir.commit();
    return check_assertions(o, r) ? kOk : kAssertionFailed;
}

int cmd_grad_check(const Options& o)
{
    const auto entries = gradient_suite(20, 2024);
    bool ok = true;
    json results = json::array();
    for (const auto& e : entries) {
        const bool pass = e.max_rel_error <= kGradTolerance;
        ok = ok && pass;
        std::printf("%-28s max_rel_err %.3e over %d configs  %s\n", e.name.c_str(), e.max_rel_error, e.configurations,
                    pass ? "PASS" : "FAIL");
        results.push_back({{"name", e.name}, {"max_rel_error", e.max_rel_error}, {"pass", pass}});
    }
    if (!o.out_dir.empty()) {
        const json identity{{"suite", "gradient"}, {"configurations", 20}, {"seed", 2024}};
        RunDir dir(o.out_dir, "grad-check-" + json_digest(identity).substr(0, 12));
        write_json_file(dir.path() / "gradcheck.json",
                        {{"tolerance", kGradTolerance}, {"results", results}, {"pass", ok}});
        dir.commit();
    }
    return ok ? kOk : kAssertionFailed;
}

int cmd_reproduce(const Options& o)
{
    const Loaded l = load(o);
    const std::string id = run_id("reproduce", l);
    const Codebook codebook = build_codebook(l.config.codebook);
    const Dataset d = obtain_dataset(o, l.config, codebook);
    RunDir dir(out_root(o, l.config), id);
    const fs::path root = dir.path();
    const ReproduceResult r = reproduce(l.config, d, codebook, l.seeds, &root);
    const auto hist = label_histogram(d.samples, codebook.size());
    json j = to_json(r);
    j["config_digest"] = l.digest;
    j["label_histogram"] = hist;
    j["top10_label_coverage"] = top_label_coverage(hist, 10);
    write_json_file(root / "reproduce.json", j);
    const std::string table = reproduce_table(r);
    write_text_file(root / "table.txt", table);
    write_run_manifest(dir, "reproduce", id, l, o, {{"samples", d.samples.size()}});
    dir.commit();
    std::cout << table;
    bool ok = true;
    if (o.assert_mpr_min)
        for (const auto& m : kMethods)
            if (!(r.median_mpr.at(m) >= *o.assert_mpr_min)) {
                std::cerr << "assertion failed: median MPR of " << m << " is " << r.median_mpr.at(m) << "\n";
                ok = false;
            }
    return ok ? kOk : kAssertionFailed;
}

} // namespace

int run(int argc, char** argv)
{
    CLI::App app{"beamkd: sensing-aided mmWave beam prediction with cross-modal distillation"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", o.config_path, "experiment config (JSON)");
        if (needs_config)
            c->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed_text, "seed, range a..b or list a,b,c");
        sub->add_option("--out", o.out_dir, "output root; runs land in <out>/<run-id>/");
        sub->add_option("--set", o.overrides, "override key.path=value (repeatable)");
        sub->add_option("--assert-mpr-min", o.assert_mpr_min, "exit 1 when MPR falls below this percent");
        sub->add_option("--assert-topk", o.assert_topk, "k=min_accuracy, exit 1 when top-k falls below (repeatable)");
        sub->add_flag("--power-domain", o.power_domain, "combine paths in the power domain");
    };
    auto* scene = app.add_subcommand("scene-gen", "generate episodes and export them as JSON");
    auto* dataset = app.add_subcommand("dataset-gen", "build, split and serialise the dataset");
    auto* teacher = app.add_subcommand("train-teacher", "train the multimodal teacher");
    auto* distill = app.add_subcommand("distill", "train a radar-only student");
    auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
    auto* grad = app.add_subcommand("grad-check", "finite-difference check of every analytic gradient");
    auto* repro = app.add_subcommand("reproduce", "teacher and every student method across seeds");
    for (auto* s : {scene, dataset, teacher, distill, eval, repro})
        common(s, true);
    grad->add_option("--out", o.out_dir, "optional output root for gradcheck.json");
    for (auto* s : {teacher, distill, eval, repro})
        s->add_option("--dataset", o.dataset_dir, "read a dataset directory instead of generating one");
    distill->add_option("--teacher", o.teacher_stem, "teacher checkpoint stem; trained inline when absent");
    distill->add_option("--method", o.method, "withoutKD, KD, RKD-manifold, RKD-beamStr or RKD-both");
    eval->add_option("--checkpoint", o.checkpoint_stem, "checkpoint stem (without .json/.bin)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*scene)
            return cmd_scene_gen(o);
        if (*dataset)
            return cmd_dataset_gen(o);
        if (*teacher)
            return cmd_train_teacher(o);
        if (*distill)
            return cmd_distill(o);
        if (*eval)
            return cmd_evaluate(o);
        if (*grad)
            return cmd_grad_check(o);
        if (*repro)
            return cmd_reproduce(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternalError;
    }
    return kInternalError;
}

} // namespace beamkd::cli
