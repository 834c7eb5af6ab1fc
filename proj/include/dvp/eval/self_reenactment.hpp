/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/eval/self_reenactment.hpp
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
#pragma once

#ifndef DVP_EVAL_SELF_REENACTMENT_HPP
#define DVP_EVAL_SELF_REENACTMENT_HPP

#include "dvp/conditioning/conditioning.hpp"
#include "dvp/core/error.hpp"
#include "dvp/eval/evaluation.hpp"
#include "dvp/nn/model.hpp"
#include "dvp/nn/trainer.hpp"
#include "dvp/render/face_renderer.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dvp {

struct SelfReenactmentConfig
{
    int window_size = default_window_size;
    nn::TrainConfig train;
    std::uint64_t init_seed = 1;
    double init_stddev = nn::init_stddev;
    std::size_t corpus_limit = 0; ///< keep at most this many training pairs (the most recent); 0 keeps all
    NearestNeighborWeights neighbor;
    std::string label;
};

struct SelfReenactmentResult
{
    ErrorReport trained;
    ErrorReport untrained;
    ErrorReport nearest_neighbor;
    nn::TrainResult training;
    std::vector<RasterImage> predictions; ///< test third, 8-bit
    std::size_t corpus_size = 0;
};

/// Pixels covered by the face under `params`.
inline std::vector<bool> face_mask(const FaceBasis& basis, const FaceParameters& params, const CameraIntrinsics& cam)
{
    const VisibilityBuffer vis = rasterize_face(basis, pose_face(basis, params, cam), cam);
    std::vector<bool> mask(static_cast<std::size_t>(cam.width) * cam.height);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x)
            mask[static_cast<std::size_t>(y) * cam.width + x] = vis.at(x, y).covered();
    return mask;
}

inline std::string suffixed(const std::string& label, const char* suffix)
{
    return label.empty() ? std::string(suffix) : label + "/" + suffix;
}

/**
 * Trains on the first two thirds of a tracked sequence and synthesizes the
 * last third from its own parameters. Test windows draw their history from
 * the preceding parameters, training frames included. Reports the trained
 * network, the same network before training, and the parameter-space
 * nearest-neighbor frame from the training portion.
 */
inline SelfReenactmentResult run_self_reenactment(const FaceBasis& basis, const CameraIntrinsics& cam,
                                                  const std::vector<FaceParameters>& params,
                                                  const std::vector<RasterImage>& frames,
                                                  const SelfReenactmentConfig& config,
                                                  const std::function<void(const nn::LossRecord&)>& progress = {})
{
    require(params.size() == frames.size(), ErrorCode::shape_mismatch, "need one parameter set per frame");
    require(cam.width == cam.height, ErrorCode::invalid_argument, "the network works on square frames");
    const std::size_t n = params.size();
    const std::size_t split = self_reenactment_split_index(n);
    require(split >= static_cast<std::size_t>(config.window_size), ErrorCode::invalid_argument,
            "training portion is shorter than the window");

    const std::vector<FaceParameters> train_params(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(split));
    const std::vector<RasterImage> train_frames(frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(split));
    std::vector<TrainingPair> corpus = build_corpus(train_params, train_frames, basis, cam, config.window_size);
    if (config.corpus_limit > 0 && corpus.size() > config.corpus_limit)
        corpus.erase(corpus.begin(), corpus.end() - static_cast<std::ptrdiff_t>(config.corpus_limit));

    SelfReenactmentResult result;
    result.corpus_size = corpus.size();
    nn::TranslationModel<float> model(nn::make_generator_config(cam.width, config.window_size),
                                      nn::make_discriminator_config(config.window_size));
    model.init_weights(config.init_seed, config.init_stddev);

    WindowSequence windows(basis, params, cam, config.window_size, WindowPadding::replicate);
    std::vector<ConditioningWindow> test_windows;
    std::vector<RasterImage> truth;
    std::vector<std::vector<bool>> masks;
    for (std::size_t f = split; f < n; ++f)
    {
        test_windows.push_back(windows.window(f));
        truth.push_back(frames[f]);
        masks.push_back(face_mask(basis, params[f], cam));
    }
    const ReportFingerprint fp{config.window_size, cam.width, corpus.size(), config.label};

    const auto untrained = nn::infer_sequence<float>(test_windows, model.generator);
    result.untrained = make_report(untrained, truth, fp, masks);
    result.untrained.fingerprint.label = suffixed(config.label, "untrained");

    result.training = nn::train(corpus, model, config.train, progress);
    require(!result.training.aborted, ErrorCode::non_finite,
            "training diverged at iteration " + std::to_string(result.training.aborted_at));
    result.predictions = nn::infer_sequence<float>(test_windows, model.generator);
    result.trained = make_report(result.predictions, truth, fp, masks);

    const double scale = head_scale(basis);
    std::vector<RasterImage> neighbors;
    for (std::size_t f = split; f < n; ++f)
        neighbors.push_back(nearest_neighbor_baseline(params[f], train_params, train_frames, config.neighbor, scale));
    result.nearest_neighbor = make_report(neighbors, truth, fp, masks);
    result.nearest_neighbor.fingerprint.label = suffixed(config.label, "nearest_neighbor");
    return result;
}

struct AblationCase
{
    std::string label;
    int window_size = default_window_size;
    int resolution = 32;
    std::size_t corpus_limit = 0;
};

struct AblationDataset
{
    CameraIntrinsics camera;
    std::vector<FaceParameters> params;
    std::vector<RasterImage> frames;
};

struct AblationEntry
{
    AblationCase setup;
    SelfReenactmentResult result;
};

/// Runs the protocol once per case; `dataset(resolution)` supplies frames and tracked parameters.
inline std::vector<AblationEntry> ablation_suite(const FaceBasis& basis, const std::vector<AblationCase>& cases,
                                                 const std::function<AblationDataset(int)>& dataset,
                                                 const SelfReenactmentConfig& base)
{
    std::vector<AblationEntry> out;
    for (const auto& c : cases)
    {
        const AblationDataset data = dataset(c.resolution);
        SelfReenactmentConfig cfg = base;
        cfg.window_size = c.window_size;
        cfg.corpus_limit = c.corpus_limit;
        cfg.label = c.label;
        out.push_back({c, run_self_reenactment(basis, data.camera, data.params, data.frames, cfg)});
    }
    return out;
}

/// Side-by-side heat maps of one test frame across cases (resampled to the largest resolution).
inline RasterImage ablation_grid(const std::vector<AblationEntry>& entries, std::size_t frame, double max_error = 100.0)
{
    require(!entries.empty(), ErrorCode::invalid_argument, "no ablation entries");
    int size = 0;
    for (const auto& e : entries)
    {
        require(frame < e.result.trained.maps.size(), ErrorCode::out_of_range, "frame outside the test portion");
        size = std::max(size, e.result.trained.maps[frame].width);
    }
    RasterImage grid(size * static_cast<int>(entries.size()), size);
    for (std::size_t k = 0; k < entries.size(); ++k)
    {
        const RasterImage img = error_map_image(entries[k].result.trained.maps[frame], max_error);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int c = 0; c < 3; ++c)
                    grid.at(static_cast<int>(k) * size + x, y, c) =
                        img.at(x * img.width / size, y * img.height / size, c);
    }
    return grid;
}

} // namespace dvp

#endif /* DVP_EVAL_SELF_REENACTMENT_HPP */
