/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/nn/networks.hpp
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

#ifndef DVP_NN_NETWORKS_HPP
#define DVP_NN_NETWORKS_HPP

#include "dvp/core/error.hpp"
#include "dvp/nn/layers.hpp"
#include "dvp/nn/tensor.hpp"

#include <bit>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dvp::nn {

inline constexpr double init_stddev = 0.2;
inline constexpr double default_leaky_slope = 0.2;
inline constexpr double default_bn_momentum = 0.99;

/// Full-resolution lists, innermost up module first.
inline const std::vector<int> reference_down_channels{64, 128, 256, 512, 512, 512, 512, 512};
inline const std::vector<int> reference_up_channels{512, 512, 512, 512, 256, 128, 64, 3};
inline const std::vector<double> reference_dropout{0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0};

struct GeneratorConfig
{
    int input_size = 256;
    int input_channels = 99;
    std::vector<int> down_channels;
    std::vector<int> up_channels;   ///< up module k = 0 is the innermost
    std::vector<double> dropout;    ///< per up module
    std::vector<bool> skips;        ///< per up module; module 0 has nothing to skip from
    int final_width = 64;           ///< feature width inside the last up module, before its 3-channel output
    double leaky_slope = default_leaky_slope;
    double bn_momentum = default_bn_momentum;

    int depth() const noexcept { return static_cast<int>(down_channels.size()); }
};

inline void validate(const GeneratorConfig& c)
{
    require(c.input_size >= 2 && std::has_single_bit(static_cast<unsigned>(c.input_size)), ErrorCode::invalid_argument,
            "generator input size must be a power of two");
    require(c.depth() >= 1 && (1 << c.depth()) == c.input_size, ErrorCode::invalid_argument,
            "generator depth must equal log2(input size)");
    require(static_cast<int>(c.up_channels.size()) == c.depth() && static_cast<int>(c.dropout.size()) == c.depth() &&
                static_cast<int>(c.skips.size()) == c.depth(),
            ErrorCode::invalid_argument, "generator lists must have one entry per level");
    require(c.up_channels.back() == 3, ErrorCode::invalid_argument, "the last up module must output 3 channels");
    require(c.input_channels > 0 && c.final_width > 0, ErrorCode::invalid_argument,
            "generator needs input channels and a positive final width");
    for (double p : c.dropout)
        require(p >= 0.0 && p < 1.0, ErrorCode::out_of_range, "dropout probability outside [0, 1)");
    for (int ch : c.down_channels)
        require(ch > 0, ErrorCode::invalid_argument, "channel counts must be positive");
    for (int ch : c.up_channels)
        require(ch > 0, ErrorCode::invalid_argument, "channel counts must be positive");
}

/**
 * Configuration for a W x W input: depth log2(W); the down list keeps the
 * head of the reference list, the up list mirrors it and ends in 3 channels,
 * dropout keeps the innermost entries. At 256 this is the reference network.
 */
inline GeneratorConfig make_generator_config(int input_size, int window_size)
{
    require(input_size >= 2 && std::has_single_bit(static_cast<unsigned>(input_size)), ErrorCode::invalid_argument,
            "input size must be a power of two");
    const int depth = std::countr_zero(static_cast<unsigned>(input_size));
    require(depth <= static_cast<int>(reference_down_channels.size()), ErrorCode::invalid_argument,
            "input sizes above 256 are not configured");
    GeneratorConfig c;
    c.input_size = input_size;
    c.input_channels = 9 * window_size;
    c.down_channels.assign(reference_down_channels.begin(), reference_down_channels.begin() + depth);
    for (int k = 0; k < depth; ++k)
        c.up_channels.push_back(k + 1 < depth ? c.down_channels[static_cast<std::size_t>(depth - 2 - k)] : 3);
    c.dropout.assign(reference_dropout.begin(), reference_dropout.begin() + depth);
    c.skips.assign(static_cast<std::size_t>(depth), true);
    c.skips[0] = false;
    c.final_width = c.down_channels[0];
    validate(c);
    return c;
}

struct DiscriminatorConfig
{
    int input_channels = 102;
    std::vector<int> channels{64, 128, 256, 512};
    double leaky_slope = default_leaky_slope;
    double bn_momentum = default_bn_momentum;
};

inline DiscriminatorConfig make_discriminator_config(int window_size)
{
    DiscriminatorConfig c;
    c.input_channels = 9 * window_size + 3;
    return c;
}

inline void validate(const DiscriminatorConfig& c)
{
    require(c.input_channels > 3 && !c.channels.empty(), ErrorCode::invalid_argument,
            "discriminator needs conditioning channels and at least one block");
}

enum class Mode { train, infer };

/// Collects pointers to every trainable parameter and BN state array, in a fixed order.
template <typename T>
struct ParameterList
{
    std::vector<Parameter<T>*> trainable;
    std::vector<Parameter<T>*> state;

    void zero_grad()
    {
        for (auto* p : trainable)
            p->zero_grad();
    }

    std::size_t count() const
    {
        std::size_t n = 0;
        for (auto* p : trainable)
            n += p->size();
        return n;
    }
};

template <typename T>
void initialize(ParameterList<T>& params, std::mt19937_64& rng, double stddev = init_stddev)
{
    require(stddev > 0.0 && std::isfinite(stddev), ErrorCode::out_of_range, "init stddev must be positive");
    for (auto* p : params.trainable)
    {
        const std::string& n = p->name;
        if (n.ends_with(".weight"))
            fill_normal(*p, rng, stddev);
        else if (n.ends_with(".gamma"))
            std::fill(p->value.begin(), p->value.end(), T(1));
        else
            std::fill(p->value.begin(), p->value.end(), T(0));
    }
    for (auto* p : params.state)
        std::fill(p->value.begin(), p->value.end(), p->name.ends_with(".running_var") ? T(1) : T(0));
}

/**
 * U-Net style generator. Down module: conv 4x4 s2 p1, BN (not on the first),
 * leaky ReLU. Up module: deconv 4x4 s2 p1, BN (not on the last), dropout,
 * ReLU, then two 3x3 refinement convs each followed by ReLU; in the last
 * module the second refinement maps final_width features to RGB and feeds the
 * final TanH instead.
 */
template <typename T>
class Generator
{
public:
    explicit Generator(GeneratorConfig config) : config_(std::move(config))
    {
        validate(config_);
        const int depth = config_.depth();
        int in = config_.input_channels;
        for (int j = 0; j < depth; ++j)
        {
            const std::string name = "gen.down" + std::to_string(j);
            Down d{Conv2d<T>(name + ".conv", in, config_.down_channels[j], 4, 2, 1), std::nullopt,
                   LeakyRelu<T>(config_.leaky_slope)};
            if (j > 0)
                d.bn.emplace(name + ".bn", config_.down_channels[j], config_.bn_momentum);
            down_.push_back(std::move(d));
            in = config_.down_channels[j];
        }
        for (int k = 0; k < depth; ++k)
        {
            const std::string name = "gen.up" + std::to_string(k);
            if (k > 0 && config_.skips[k])
                in += config_.down_channels[static_cast<std::size_t>(depth - 1 - k)];
            const int out = config_.up_channels[k];
            const bool last = k + 1 == depth;
            // a 3-channel ReLU stack dies easily; the last module works wide and narrows at the end
            const int width = last ? config_.final_width : out;
            Up u{ConvTranspose2d<T>(name + ".deconv", in, width, 4, 2, 1),
                 std::nullopt,
                 Dropout<T>(config_.dropout[k]),
                 LeakyRelu<T>(0.0),
                 Conv2d<T>(name + ".refine0", width, width, 3, 1, 1),
                 LeakyRelu<T>(0.0),
                 Conv2d<T>(name + ".refine1", width, out, 3, 1, 1),
                 LeakyRelu<T>(0.0)};
            if (!last)
                u.bn.emplace(name + ".bn", width, config_.bn_momentum);
            up_.push_back(std::move(u));
            in = out;
        }
    }

    const GeneratorConfig& config() const noexcept { return config_; }

    ParameterList<T> parameters()
    {
        ParameterList<T> list;
        for (auto& d : down_)
        {
            append(list.trainable, d.conv.parameters());
            if (d.bn)
            {
                append(list.trainable, d.bn->parameters());
                append(list.state, d.bn->state());
            }
        }
        for (auto& u : up_)
        {
            append(list.trainable, u.deconv.parameters());
            if (u.bn)
            {
                append(list.trainable, u.bn->parameters());
                append(list.state, u.bn->state());
            }
            append(list.trainable, u.refine0.parameters());
            append(list.trainable, u.refine1.parameters());
        }
        return list;
    }

    /// `rng` draws fresh dropout masks in train mode; nullptr reuses the previous masks.
    Tensor<T> forward(const Tensor<T>& x, Mode mode, std::mt19937_64* rng = nullptr)
    {
        require(x.c == config_.input_channels && x.h == config_.input_size && x.w == config_.input_size,
                ErrorCode::shape_mismatch,
                "generator expects " + std::to_string(config_.input_channels) + "x" +
                    std::to_string(config_.input_size) + "x" + std::to_string(config_.input_size) + " input, got " +
                    x.shape_string());
        const bool train = mode == Mode::train;
        const int depth = config_.depth();
        std::vector<Tensor<T>> skips(static_cast<std::size_t>(depth));
        Tensor<T> h = x;
        for (int j = 0; j < depth; ++j)
        {
            Down& d = down_[j];
            h = d.conv.forward(h);
            if (d.bn)
                h = d.bn->forward(h, train);
            h = d.act.forward(h);
            skips[j] = h;
        }
        for (int k = 0; k < depth; ++k)
        {
            Up& u = up_[k];
            if (k > 0 && config_.skips[k])
                h = concat_channels(h, skips[static_cast<std::size_t>(depth - 1 - k)]);
            h = u.deconv.forward(h);
            if (u.bn)
                h = u.bn->forward(h, train);
            h = u.dropout.forward(h, train, rng);
            h = u.act0.forward(h);
            h = u.refine0.forward(h);
            h = u.act1.forward(h);
            h = u.refine1.forward(h);
            if (k + 1 < depth)
                h = u.act2.forward(h);
        }
        return tanh_.forward(h);
    }

    /// Accumulates parameter gradients for the last train-mode forward; returns d(loss)/d(input).
    Tensor<T> backward(const Tensor<T>& dy)
    {
        const int depth = config_.depth();
        std::vector<std::optional<Tensor<T>>> skip_grads(static_cast<std::size_t>(depth));
        Tensor<T> g = tanh_.backward(dy);
        for (int k = depth - 1; k >= 0; --k)
        {
            Up& u = up_[k];
            if (k + 1 < depth)
                g = u.act2.backward(g);
            g = u.refine1.backward(g);
            g = u.act1.backward(g);
            g = u.refine0.backward(g);
            g = u.act0.backward(g);
            g = u.dropout.backward(g);
            if (u.bn)
                g = u.bn->backward(g);
            g = u.deconv.backward(g);
            if (k > 0 && config_.skips[k])
            {
                const int skip_level = depth - 1 - k;
                auto [main, skip] = split_channels(g, config_.up_channels[static_cast<std::size_t>(k - 1)]);
                skip_grads[static_cast<std::size_t>(skip_level)] = std::move(skip);
                g = std::move(main);
            }
        }
        for (int j = depth - 1; j >= 0; --j)
        {
            if (skip_grads[j])
                add_into(g, *skip_grads[j]);
            Down& d = down_[j];
            g = d.act.backward(g);
            if (d.bn)
                g = d.bn->backward(g);
            g = d.conv.backward(g);
        }
        return g;
    }

private:
    struct Down
    {
        Conv2d<T> conv;
        std::optional<BatchNorm2d<T>> bn;
        LeakyRelu<T> act;
    };
    struct Up
    {
        ConvTranspose2d<T> deconv;
        std::optional<BatchNorm2d<T>> bn;
        Dropout<T> dropout;
        LeakyRelu<T> act0;
        Conv2d<T> refine0;
        LeakyRelu<T> act1;
        Conv2d<T> refine1;
        LeakyRelu<T> act2;
    };

    static void append(std::vector<Parameter<T>*>& to, const std::vector<Parameter<T>*>& from)
    {
        to.insert(to.end(), from.begin(), from.end());
    }

    GeneratorConfig config_;
    std::vector<Down> down_;
    std::vector<Up> up_;
    Tanh<T> tanh_;
};

/**
 * PatchGAN-style discriminator on [conditioning, image]: stride-2 conv blocks
 * with leaky ReLU (BN on all but the first), then a 3x3 one-channel head and
 * a logistic. A W x W input gives a (W / 2^blocks)^2 score map.
 */
template <typename T>
class Discriminator
{
public:
    explicit Discriminator(DiscriminatorConfig config) : config_(std::move(config))
    {
        validate(config_);
        int in = config_.input_channels;
        for (std::size_t b = 0; b < config_.channels.size(); ++b)
        {
            const std::string name = "disc.block" + std::to_string(b);
            Block blk{Conv2d<T>(name + ".conv", in, config_.channels[b], 4, 2, 1), std::nullopt,
                      LeakyRelu<T>(config_.leaky_slope)};
            if (b > 0)
                blk.bn.emplace(name + ".bn", config_.channels[b], config_.bn_momentum);
            blocks_.push_back(std::move(blk));
            in = config_.channels[b];
        }
        head_ = Conv2d<T>("disc.head", in, 1, 3, 1, 1);
    }

    const DiscriminatorConfig& config() const noexcept { return config_; }

    ParameterList<T> parameters()
    {
        ParameterList<T> list;
        for (auto& b : blocks_)
        {
            for (auto* p : b.conv.parameters())
                list.trainable.push_back(p);
            if (b.bn)
            {
                for (auto* p : b.bn->parameters())
                    list.trainable.push_back(p);
                for (auto* p : b.bn->state())
                    list.state.push_back(p);
            }
        }
        for (auto* p : head_.parameters())
            list.trainable.push_back(p);
        return list;
    }

    Tensor<T> forward(const Tensor<T>& conditioning, const Tensor<T>& image, Mode mode)
    {
        require(image.c == 3 && conditioning.n == image.n && conditioning.h == image.h && conditioning.w == image.w,
                ErrorCode::shape_mismatch,
                "discriminator inputs " + conditioning.shape_string() + " and " + image.shape_string() +
                    " do not match");
        require(conditioning.c + 3 == config_.input_channels, ErrorCode::shape_mismatch,
                "discriminator expects " + std::to_string(config_.input_channels - 3) + " conditioning channels");
        const int min_size = 1 << blocks_.size();
        require(image.h >= min_size && image.w >= min_size, ErrorCode::shape_mismatch,
                "discriminator input smaller than its downsampling factor");
        conditioning_channels_ = conditioning.c;
        const bool train = mode == Mode::train;
        Tensor<T> h = concat_channels(conditioning, image);
        for (auto& b : blocks_)
        {
            h = b.conv.forward(h);
            if (b.bn)
                h = b.bn->forward(h, train);
            h = b.act.forward(h);
        }
        return sigmoid_.forward(head_.forward(h));
    }

    /// Returns d(loss)/d(image) and accumulates parameter gradients.
    Tensor<T> backward(const Tensor<T>& dscore)
    {
        Tensor<T> g = head_.backward(sigmoid_.backward(dscore));
        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it)
        {
            g = it->act.backward(g);
            if (it->bn)
                g = it->bn->backward(g);
            g = it->conv.backward(g);
        }
        return split_channels(g, conditioning_channels_).second;
    }

private:
    struct Block
    {
        Conv2d<T> conv;
        std::optional<BatchNorm2d<T>> bn;
        LeakyRelu<T> act;
    };

    DiscriminatorConfig config_;
    std::vector<Block> blocks_;
    Conv2d<T> head_;
    Sigmoid<T> sigmoid_;
    int conditioning_channels_ = 0;
};

} // namespace dvp::nn

#endif /* DVP_NN_NETWORKS_HPP */
