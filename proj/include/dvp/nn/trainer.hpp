/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/nn/trainer.hpp
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

#ifndef DVP_NN_TRAINER_HPP
#define DVP_NN_TRAINER_HPP

#include "dvp/conditioning/conditioning.hpp"
#include "dvp/core/error.hpp"
#include "dvp/nn/adam.hpp"
#include "dvp/nn/losses.hpp"
#include "dvp/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dvp::nn {

struct TrainConfig
{
    double lambda_l1 = default_lambda_l1;
    int batch_size = 4;
    int iterations = 1000;
    double learning_rate = 2e-4;
    double first_momentum = 0.5;
    double second_momentum = 0.999;
    std::uint64_t seed = 1; ///< shuffling and dropout masks
    int checkpoint_interval = 50;
};

inline void validate(const TrainConfig& c)
{
    require(c.lambda_l1 > 0.0 && c.batch_size > 0 && c.iterations >= 0 && c.learning_rate > 0.0 &&
                c.first_momentum >= 0.0 && c.first_momentum < 1.0 && c.second_momentum > 0.0 &&
                c.second_momentum < 1.0 && c.checkpoint_interval > 0,
            ErrorCode::out_of_range, "invalid training configuration");
}

struct LossRecord
{
    int iteration = 0;
    double gen_adv = 0.0;
    double gen_l1 = 0.0;
    double disc = 0.0;
};

struct TrainResult
{
    NetworkWeights weights;
    std::vector<LossRecord> history;
    bool aborted = false; ///< a loss went non-finite; `weights` is the last good checkpoint
    int aborted_at = -1;
};

/// Window volume as a (1, 9 N_w, H, W) tensor.
template <typename T>
Tensor<T> window_tensor(const ConditioningWindow& w)
{
    check_structure(w);
    Tensor<T> t(1, w.channels(), w.height, w.width);
    std::transform(w.data.begin(), w.data.end(), t.data.begin(), [](float v) { return static_cast<T>(v); });
    return t;
}

/// Normalized image as a (1, 3, H, W) tensor.
template <typename T>
Tensor<T> image_tensor(const RasterImage& img)
{
    require(img.space == ColorSpace::normalized, ErrorCode::invalid_argument, "network images are normalized");
    Tensor<T> t(1, 3, img.height, img.width);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                t.at(0, c, y, x) = static_cast<T>(img.at(x, y, c));
    return t;
}

/// Sample `i` of a (N, 3, H, W) tensor as a normalized image; values are clamped to [-1, 1].
template <typename T>
RasterImage tensor_image(const Tensor<T>& t, int i = 0)
{
    require(t.c == 3, ErrorCode::shape_mismatch, "image tensors have 3 channels");
    RasterImage img(t.w, t.h, ColorSpace::normalized);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x)
                img.at(x, y, c) = std::clamp(static_cast<double>(t.at(i, c, y, x)), -1.0, 1.0);
    return img;
}

template <typename T>
Tensor<T> stack(std::span<const Tensor<T>* const> items)
{
    const Tensor<T>& f = *items.front();
    Tensor<T> out(static_cast<int>(items.size()), f.c, f.h, f.w);
    for (std::size_t i = 0; i < items.size(); ++i)
    {
        require(items[i]->same_shape(f), ErrorCode::shape_mismatch, "batch elements differ in shape");
        std::copy_n(items[i]->data.data(), f.size(), out.sample(static_cast<int>(i)));
    }
    return out;
}

namespace detail {

template <typename T>
bool all_finite(const std::vector<Parameter<T>*>& params)
{
    for (auto* p : params)
        for (T v : p->value)
            if (!std::isfinite(v))
                return false;
    return true;
}

} // namespace detail

/**
 * Alternates one discriminator and one generator Adam step per batch.
 * Generator objective: -mean log D(x, G(x)) + lambda * mean |y - G(x)|.
 * Batches are drawn from a seeded permutation, reshuffled every epoch.
 * `on_iteration` (optional) sees every loss record as it is produced.
 */
template <typename T>
TrainResult train(const std::vector<TrainingPair>& corpus, TranslationModel<T>& model, const TrainConfig& config,
                  const std::function<void(const LossRecord&)>& on_iteration = {})
{
    validate(config);
    require(!corpus.empty(), ErrorCode::invalid_argument, "training corpus is empty");
    const auto& gc = model.generator.config();
    std::vector<Tensor<T>> inputs, targets;
    inputs.reserve(corpus.size());
    targets.reserve(corpus.size());
    for (const auto& pair : corpus)
    {
        require(pair.window.width == gc.input_size && pair.window.height == gc.input_size &&
                    pair.window.channels() == gc.input_channels,
                ErrorCode::shape_mismatch, "corpus windows do not match the generator input");
        inputs.push_back(window_tensor<T>(pair.window));
        targets.push_back(image_tensor<T>(pair.ground_truth));
    }

    auto gen_params = model.generator.parameters();
    auto disc_params = model.discriminator.parameters();
    const AdamConfig adam{config.learning_rate, config.first_momentum, config.second_momentum, 1e-8};
    Adam<T> gen_opt(gen_params.trainable, adam), disc_opt(disc_params.trainable, adam);

    std::seed_seq shuffle_seed{config.seed, std::uint64_t{1}}, dropout_seed{config.seed, std::uint64_t{2}};
    std::mt19937_64 shuffle_rng(shuffle_seed), dropout_rng(dropout_seed);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();

    TrainResult result;
    result.weights = model.weights();
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), corpus.size());
    std::vector<const Tensor<T>*> xb(batch), yb(batch);
    for (int it = 0; it < config.iterations; ++it)
    {
        for (std::size_t b = 0; b < batch; ++b)
        {
            if (cursor == order.size())
            {
                std::shuffle(order.begin(), order.end(), shuffle_rng);
                cursor = 0;
            }
            xb[b] = &inputs[order[cursor]];
            yb[b] = &targets[order[cursor]];
            ++cursor;
        }
        const Tensor<T> x = stack<T>(xb), y = stack<T>(yb);

        const Tensor<T> fake = model.generator.forward(x, Mode::train, &dropout_rng);

        disc_params.zero_grad();
        const Tensor<T> real_scores = model.discriminator.forward(x, y, Mode::train);
        model.discriminator.backward(adversarial_gradient(real_scores, true));
        const Tensor<T> fake_scores = model.discriminator.forward(x, fake, Mode::train);
        model.discriminator.backward(adversarial_gradient(fake_scores, false));
        const double disc_loss = loss_adversarial(real_scores, fake_scores).discriminator;
        disc_opt.step();

        gen_params.zero_grad();
        const Tensor<T> gen_scores = model.discriminator.forward(x, fake, Mode::train);
        Tensor<T> dimg = model.discriminator.backward(adversarial_gradient(gen_scores, true));
        Tensor<T> dl1 = l1_gradient(fake, y);
        for (std::size_t i = 0; i < dimg.size(); ++i)
            dimg.data[i] += static_cast<T>(config.lambda_l1) * dl1.data[i];
        model.generator.backward(dimg);
        gen_opt.step();

        const LossRecord rec{it, loss_adversarial(real_scores, gen_scores).generator, loss_l1(fake, y), disc_loss};
        if (!std::isfinite(rec.gen_adv) || !std::isfinite(rec.gen_l1) || !std::isfinite(rec.disc) ||
            !detail::all_finite(gen_params.trainable) || !detail::all_finite(disc_params.trainable))
        {
            result.aborted = true;
            result.aborted_at = it;
            return result;
        }
        result.history.push_back(rec);
        if (on_iteration)
            on_iteration(rec);
        if ((it + 1) % config.checkpoint_interval == 0 || it + 1 == config.iterations)
            result.weights = model.weights();
    }
    return result;
}

inline void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::io_error, "cannot write " + path.string());
    out << "iteration,gen_adv,gen_l1,disc\n";
    char line[160];
    for (const auto& r : history)
    {
        std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g\n", r.iteration, r.gen_adv, r.gen_l1, r.disc);
        out << line;
    }
    require(static_cast<bool>(out), ErrorCode::io_error, "failed writing " + path.string());
}

/// Deterministic inference on one window: normalized image in (-1, 1).
template <typename T>
RasterImage generate(Generator<T>& generator, const ConditioningWindow& window)
{
    const auto& gc = generator.config();
    require(window.width == gc.input_size && window.height == gc.input_size && window.channels() == gc.input_channels,
            ErrorCode::shape_mismatch,
            "window " + std::to_string(window.channels()) + "x" + std::to_string(window.height) + "x" +
                std::to_string(window.width) + " does not match the generator input");
    return tensor_image(generator.forward(window_tensor<T>(window), Mode::infer));
}

/// One 8-bit frame per window.
template <typename T>
std::vector<RasterImage> infer_sequence(std::span<const ConditioningWindow> windows, Generator<T>& generator)
{
    std::vector<RasterImage> frames;
    frames.reserve(windows.size());
    for (const auto& w : windows)
        frames.push_back(denormalize(generate(generator, w)));
    return frames;
}

} // namespace dvp::nn

#endif /* DVP_NN_TRAINER_HPP */
