/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: tools/dvp.cpp
 *
 * Copyright 2026 The dvp authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "dvp/conditioning/conditioning.hpp"
#include "dvp/eval/evaluation.hpp"
#include "dvp/eval/self_reenactment.hpp"
#include "dvp/fitting/solver.hpp"
#include "dvp/nn/trainer.hpp"
#include "dvp/nn/weights_io.hpp"
#include "dvp/pipeline/dataset_io.hpp"
#include "dvp/pipeline/editor_service.hpp"
#include "dvp/pipeline/project_config.hpp"
#include "dvp/pipeline/synthetic_scene.hpp"
#include "dvp/transfer/transfer.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using namespace dvp;

namespace {

std::atomic<bool> interrupted{false};

void on_signal(int) { interrupted = true; }

ProjectConfig load_config(const std::string& path)
{
    return path.empty() ? ProjectConfig{} : load_project_config(path);
}

struct LoadedDataset
{
    Dataset data;
    FaceBasis basis;
};

LoadedDataset load_dataset(const std::string& dir)
{
    LoadedDataset d{read_dataset(dir), {}};
    d.basis = make_basis(d.data.basis);
    return d;
}

/// Reads the meta file only; frames are not needed.
std::pair<CameraIntrinsics, BasisSpec> dataset_setup(const std::string& dir)
{
    const fs::path meta_path = fs::path(dir) / "dataset.json";
    std::ifstream in(meta_path);
    require(static_cast<bool>(in), ErrorCode::io_error, "no dataset.json in " + dir);
    try
    {
        const auto meta = nlohmann::json::parse(in);
        return {camera_from_json(meta.at("camera")), basis_spec_from_json(meta.at("basis"))};
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, meta_path.string() + ": " + e.what());
    }
}

void log(const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); }

std::string fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<RasterImage> truth_frames(const std::string& path)
{
    const fs::path p(path);
    return fs::exists(p / "dataset.json") ? read_frames(p / "frames") : read_frames(p);
}

// --- commands ---------------------------------------------------------------

struct SynthArgs
{
    std::string config, out;
    std::optional<int> frames, size;
    std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a)
{
    ProjectConfig cfg = load_config(a.config);
    SceneConfig scene = cfg.scene;
    scene.width = a.size.value_or(cfg.width);
    scene.height = a.size.value_or(cfg.height);
    if (a.frames)
        scene.frames = *a.frames;
    if (a.seed)
        scene.seed = *a.seed;
    const FaceBasis basis = make_basis(cfg.basis);
    const SyntheticScene s(basis, scene);
    const auto vertices = default_landmark_vertices(basis);
    Dataset d;
    d.camera = s.camera();
    d.basis = cfg.basis;
    for (int f = 0; f < scene.frames; ++f)
    {
        d.frames.push_back(s.frame(f));
        d.landmarks.push_back(s.landmarks(f, vertices));
        d.ground_truth.push_back(s.parameters(f));
    }
    write_dataset(a.out, d);
    std::printf("synth: %d frames %dx%d -> %s\n", scene.frames, scene.width, scene.height, a.out.c_str());
}

struct FitArgs
{
    std::string config, dataset, out;
};

void run_fit(const FitArgs& a)
{
    const ProjectConfig cfg = load_config(a.config);
    const LoadedDataset d = load_dataset(a.dataset);
    const TrackResult track = track_sequence(d.data.frames, d.data.landmarks, d.basis, d.data.camera, cfg.solver,
                           neutral_parameters(d.basis));
    write_parameter_sequence(a.out, track.records);
    int flagged = 0;
    for (const auto& r : track.records)
        flagged += r.flagged ? 1 : 0;
    std::printf("fit: %zu frames, %d flagged -> %s\n", track.records.size(), flagged, a.out.c_str());
}

struct TransferArgs
{
    std::string config, source, target, out;
    std::optional<double> rotation_scale, translation_scale;
    std::optional<int> source_ref, target_ref;
    bool no_pose = false, no_expression = false, no_gaze = false, identity = false;
};

void run_transfer(const TransferArgs& a)
{
    const ProjectConfig cfg = load_config(a.config);
    TransferSpec spec = cfg.transfer;
    if (a.rotation_scale)
        spec.rotation_scale = *a.rotation_scale;
    if (a.translation_scale)
        spec.translation_scale = *a.translation_scale;
    if (a.source_ref)
        spec.source_reference_frame = *a.source_ref;
    if (a.target_ref)
        spec.target_reference_frame = *a.target_ref;
    spec.pose = spec.pose && !a.no_pose;
    spec.expression = spec.expression && !a.no_expression;
    spec.gaze = spec.gaze && !a.no_gaze;
    spec.identity_geometry = spec.identity_geometry || a.identity;
    const TransferResult r =
        apply_transfer(read_parameter_sequence(a.source), read_parameter_sequence(a.target), spec);
    write_parameter_sequence(a.out, r.sequence);
    std::printf("transfer: %zu frames (%d reused the last target frame) -> %s\n", r.sequence.size(),
                r.repeated_target_frames, a.out.c_str());
}

struct TrainArgs
{
    std::string config, dataset, params, out, loss;
    std::optional<int> iterations, batch, window;
    std::optional<std::uint64_t> seed, init_seed;
    std::optional<double> init_stddev;
    bool train_split = false;
};

void run_train(const TrainArgs& a)
{
    const ProjectConfig cfg = load_config(a.config);
    const LoadedDataset d = load_dataset(a.dataset);
    std::vector<FaceParameters> params = read_parameter_sequence(a.params);
    std::vector<RasterImage> frames = d.data.frames;
    require(params.size() == frames.size(), ErrorCode::shape_mismatch,
            "parameter file has " + std::to_string(params.size()) + " frames, dataset " +
                std::to_string(frames.size()));
    if (a.train_split)
    {
        const std::size_t k = self_reenactment_split_index(params.size());
        params.resize(k);
        frames.resize(k);
    }
    require(d.data.camera.width == d.data.camera.height, ErrorCode::invalid_argument,
            "the network works on square frames");
    nn::TrainConfig tc = cfg.training;
    if (a.iterations)
        tc.iterations = *a.iterations;
    if (a.batch)
        tc.batch_size = *a.batch;
    if (a.seed)
        tc.seed = *a.seed;
    const int window = a.window.value_or(cfg.window_size);
    const auto corpus = build_corpus(params, frames, d.basis, d.data.camera, window);
    nn::TranslationModel<float> model(nn::make_generator_config(d.data.camera.width, window),
                                      nn::make_discriminator_config(window));
    model.init_weights(a.init_seed.value_or(cfg.init_seed), a.init_stddev.value_or(cfg.init_stddev));
    const auto result = nn::train(corpus, model, tc, [&](const nn::LossRecord& r) {
        if (r.iteration % 50 == 0)
            log("iteration " + std::to_string(r.iteration) + " gen_adv " + fixed(r.gen_adv) + " gen_l1 " +
                fixed(r.gen_l1) + " disc " + fixed(r.disc));
    });
    nn::save_weights(a.out, result.weights);
    if (!a.loss.empty())
        nn::write_loss_csv(a.loss, result.history);
    require(!result.aborted, ErrorCode::non_finite,
            "training diverged at iteration " + std::to_string(result.aborted_at) +
                "; the last checkpoint was written to " + a.out);
    std::printf("train: %zu pairs, %d iterations, window %d -> %s\n", corpus.size(), tc.iterations, window,
                a.out.c_str());
}

struct InferArgs
{
    std::string dataset, params, weights, out;
    std::size_t start = 0;
    std::optional<std::size_t> count;
};

void run_infer(const InferArgs& a)
{
    const auto [cam, spec] = dataset_setup(a.dataset);
    const FaceBasis basis = make_basis(spec);
    const std::vector<FaceParameters> params = read_parameter_sequence(a.params);
    auto model = std::make_shared<nn::TranslationModel<float>>(
        nn::TranslationModel<float>::from_weights(nn::load_weights(a.weights)));
    const auto& gc = model->generator.config();
    require(gc.input_size == cam.width && gc.input_size == cam.height, ErrorCode::shape_mismatch,
            "weights were trained at " + std::to_string(gc.input_size) + " pixels, dataset is " +
                std::to_string(cam.width) + "x" + std::to_string(cam.height));
    const int window = gc.input_channels / channels_per_frame;
    require(a.start < params.size(), ErrorCode::out_of_range, "start frame outside the parameter sequence");
    const std::size_t end = a.count ? std::min(params.size(), a.start + *a.count) : params.size();
    WindowSequence seq(basis, params, cam, window, WindowPadding::replicate);
    ensure_directory(a.out);
    for (std::size_t f = a.start; f < end; ++f)
        write_png(fs::path(a.out) / numbered("frame", f - a.start, "png"),
                  denormalize(nn::generate(model->generator, seq.window(f))));
    std::printf("infer: %zu frames -> %s\n", end - a.start, a.out.c_str());
}

struct EvaluateArgs
{
    std::string pred, truth, out, label, params, dataset;
    std::size_t start = 0;
    double max_error = 100.0;
};

void run_evaluate(const EvaluateArgs& a)
{
    const std::vector<RasterImage> pred = read_frames(a.pred);
    const std::vector<RasterImage> all_truth = truth_frames(a.truth);
    require(a.start + pred.size() <= all_truth.size(), ErrorCode::shape_mismatch,
            "predictions run past the end of the ground truth");
    const std::vector<RasterImage> truth(all_truth.begin() + static_cast<std::ptrdiff_t>(a.start),
                                         all_truth.begin() + static_cast<std::ptrdiff_t>(a.start + pred.size()));
    std::vector<std::vector<bool>> masks;
    if (!a.params.empty())
    {
        require(!a.dataset.empty(), ErrorCode::invalid_argument, "--params needs --dataset for the face model");
        const auto [cam, spec] = dataset_setup(a.dataset);
        const FaceBasis basis = make_basis(spec);
        const auto params = read_parameter_sequence(a.params);
        require(a.start + pred.size() <= params.size(), ErrorCode::shape_mismatch,
                "predictions run past the end of the parameter sequence");
        for (std::size_t i = 0; i < pred.size(); ++i)
            masks.push_back(face_mask(basis, params[a.start + i], cam));
    }
    const ErrorReport r = make_report(pred, truth, {0, pred.front().width, 0, a.label}, masks);
    write_report(a.out, r, a.max_error);
    std::printf("evaluate: %zu frames, mean error %s%s -> %s\n", pred.size(), fixed(r.sequence_mean).c_str(),
                masks.empty() ? "" : (", foreground " + fixed(r.foreground_mean)).c_str(), a.out.c_str());
}

struct ServeArgs
{
    std::string config, dataset, params, weights, log;
    std::size_t frame = 0;
    std::optional<int> port;
    std::optional<std::string> bind;
};

void run_serve(const ServeArgs& a)
{
    const ProjectConfig cfg = load_config(a.config);
    const auto [cam, spec] = dataset_setup(a.dataset);
    const FaceBasis basis = make_basis(spec);
    std::shared_ptr<nn::TranslationModel<float>> model;
    std::shared_ptr<nn::Generator<float>> generator;
    int window = cfg.window_size;
    if (!a.weights.empty())
    {
        model = std::make_shared<nn::TranslationModel<float>>(
            nn::TranslationModel<float>::from_weights(nn::load_weights(a.weights)));
        generator = std::shared_ptr<nn::Generator<float>>(model, &model->generator);
        window = model->generator.config().input_channels / channels_per_frame;
    }
    EditorSession session(basis, cam, read_parameter_sequence(a.params), a.frame, window, generator);
    ServiceConfig sc = cfg.service;
    if (a.port)
        sc.port = *a.port;
    if (a.bind)
        sc.bind = *a.bind;
    const std::string log_path = a.log.empty() ? sc.request_log : a.log;
    EditorService service(session, sc, log_path);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::thread watcher([&] {
        while (!interrupted)
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        service.stop();
    });
    std::printf("serve: http://%s:%d/v1/ (request log %s)\n", sc.bind.c_str(), sc.port, log_path.c_str());
    std::fflush(stdout);
    const bool ok = service.listen();
    interrupted = true;
    watcher.join();
    require(ok, ErrorCode::io_error, "cannot listen on " + sc.bind + ":" + std::to_string(sc.port));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"dvp: face tracking, parameter transfer and portrait reenactment"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "dvp 0.1.0");

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Render a synthetic dataset with ground-truth parameters");
    s->add_option("--config", synth.config, "Project config (JSON)")->check(CLI::ExistingFile);
    s->add_option("--out", synth.out, "Output dataset directory")->required();
    s->add_option("--frames", synth.frames, "Number of frames");
    s->add_option("--seed", synth.seed, "Scene seed");
    s->add_option("--size", synth.size, "Square frame size in pixels");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Track a dataset, write per-frame parameters (JSON lines)");
    f->add_option("--config", fit.config, "Project config (JSON)")->check(CLI::ExistingFile);
    f->add_option("--dataset", fit.dataset, "Dataset directory")->required();
    f->add_option("--out", fit.out, "Output parameter file")->required();

    TransferArgs tr;
    auto* t = app.add_subcommand("transfer", "Transfer source motion onto a target sequence");
    t->add_option("--config", tr.config, "Project config (JSON)")->check(CLI::ExistingFile);
    t->add_option("--source", tr.source, "Source parameter file")->required();
    t->add_option("--target", tr.target, "Target parameter file")->required();
    t->add_option("--out", tr.out, "Output parameter file")->required();
    t->add_option("--rotation-scale", tr.rotation_scale, "Scale of the transferred rotation");
    t->add_option("--translation-scale", tr.translation_scale, "Scale of the transferred translation");
    t->add_option("--source-ref", tr.source_ref, "Source reference frame");
    t->add_option("--target-ref", tr.target_ref, "Target reference frame");
    t->add_flag("--no-pose", tr.no_pose, "Keep the target's head pose");
    t->add_flag("--no-expression", tr.no_expression, "Keep the target's expression");
    t->add_flag("--no-gaze", tr.no_gaze, "Keep the target's gaze");
    t->add_flag("--identity", tr.identity, "Also transfer identity geometry deltas");

    TrainArgs train;
    auto* n = app.add_subcommand("train", "Train the rendering-to-video network");
    n->add_option("--config", train.config, "Project config (JSON)")->check(CLI::ExistingFile);
    n->add_option("--dataset", train.dataset, "Dataset directory")->required();
    n->add_option("--params", train.params, "Tracked parameter file")->required();
    n->add_option("--out", train.out, "Output weights file")->required();
    n->add_option("--loss", train.loss, "Loss history CSV");
    n->add_option("--iterations", train.iterations, "Training iterations");
    n->add_option("--batch", train.batch, "Batch size");
    n->add_option("--window", train.window, "Temporal window N_w");
    n->add_option("--seed", train.seed, "Shuffle and dropout seed");
    n->add_option("--init-seed", train.init_seed, "Weight initialization seed");
    n->add_option("--init-stddev", train.init_stddev, "Weight initialization stddev");
    n->add_flag("--train-split", train.train_split, "Train on the first two thirds only");

    InferArgs inf;
    auto* i = app.add_subcommand("infer", "Synthesize frames from a parameter sequence");
    i->add_option("--dataset", inf.dataset, "Dataset directory (camera and face model)")->required();
    i->add_option("--params", inf.params, "Parameter file")->required();
    i->add_option("--weights", inf.weights, "Weights file")->required();
    i->add_option("--out", inf.out, "Output frame directory")->required();
    i->add_option("--start", inf.start, "First frame to synthesize");
    i->add_option("--count", inf.count, "Number of frames");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Photometric error maps against ground truth");
    e->add_option("--pred", ev.pred, "Predicted frame directory")->required();
    e->add_option("--truth", ev.truth, "Ground-truth dataset or frame directory")->required();
    e->add_option("--out", ev.out, "Report directory")->required();
    e->add_option("--start", ev.start, "Ground-truth frame matching the first prediction");
    e->add_option("--params", ev.params, "Parameter file for foreground masks");
    e->add_option("--dataset", ev.dataset, "Dataset for the face model used by the masks");
    e->add_option("--label", ev.label, "Report label");
    e->add_option("--max-error", ev.max_error, "Top of the heat map scale")->check(CLI::PositiveNumber);

    ServeArgs sv;
    auto* v = app.add_subcommand("serve", "Run the interactive editor service");
    v->add_option("--config", sv.config, "Project config (JSON)")->check(CLI::ExistingFile);
    v->add_option("--dataset", sv.dataset, "Dataset directory (camera and face model)")->required();
    v->add_option("--params", sv.params, "Fitted target parameter file")->required();
    v->add_option("--weights", sv.weights, "Weights file; without it only conditioning previews are served");
    v->add_option("--frame", sv.frame, "Target frame to edit");
    v->add_option("--port", sv.port, "Port");
    v->add_option("--bind", sv.bind, "Bind address");
    v->add_option("--log", sv.log, "Request log (JSON lines)");

    try
    {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex)
    {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex)
    {
        return app.exit(ex);
    } catch (const CLI::CallForVersion& ex)
    {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex)
    {
        std::fprintf(stderr, "error: E_USAGE: %s\n", ex.what());
        return 2;
    }

    try
    {
        if (s->parsed())
            run_synth(synth);
        else if (f->parsed())
            run_fit(fit);
        else if (t->parsed())
            run_transfer(tr);
        else if (n->parsed())
            run_train(train);
        else if (i->parsed())
            run_infer(inf);
        else if (e->parsed())
            run_evaluate(ev);
        else if (v->parsed())
            run_serve(sv);
    } catch (const Error& ex)
    {
        std::fprintf(stderr, "error: %s: %s\n", std::string(to_string(ex.code())).c_str(), ex.what());
        return 1;
    } catch (const std::exception& ex)
    {
        std::fprintf(stderr, "error: E_INTERNAL: %s\n", ex.what());
        return 1;
    }
    return 0;
}
