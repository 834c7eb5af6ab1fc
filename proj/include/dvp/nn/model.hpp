/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/nn/model.hpp
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

#ifndef DVP_NN_MODEL_HPP
#define DVP_NN_MODEL_HPP

#include "dvp/core/error.hpp"
#include "dvp/nn/networks.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dvp::nn {

struct WeightArray
{
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;

    friend bool operator==(const WeightArray&, const WeightArray&) = default;
};

/// Snapshot of both networks: trainable arrays followed by BN running statistics.
struct NetworkWeights
{
    GeneratorConfig generator;
    DiscriminatorConfig discriminator;
    std::uint64_t init_seed = 0;
    std::vector<WeightArray> arrays;

    const WeightArray* find(const std::string& name) const
    {
        for (const auto& a : arrays)
            if (a.name == name)
                return &a;
        return nullptr;
    }
};

inline bool operator==(const GeneratorConfig& a, const GeneratorConfig& b)
{
    return a.input_size == b.input_size && a.input_channels == b.input_channels &&
           a.down_channels == b.down_channels && a.up_channels == b.up_channels && a.dropout == b.dropout &&
           a.skips == b.skips && a.final_width == b.final_width && a.leaky_slope == b.leaky_slope && a.bn_momentum == b.bn_momentum;
}

inline bool operator==(const DiscriminatorConfig& a, const DiscriminatorConfig& b)
{
    return a.input_channels == b.input_channels && a.channels == b.channels && a.leaky_slope == b.leaky_slope &&
           a.bn_momentum == b.bn_momentum;
}

inline bool operator==(const NetworkWeights& a, const NetworkWeights& b)
{
    return a.generator == b.generator && a.discriminator == b.discriminator && a.init_seed == b.init_seed &&
           a.arrays == b.arrays;
}

/// Generator and discriminator pair.
template <typename T>
class TranslationModel
{
public:
    TranslationModel(GeneratorConfig gen, DiscriminatorConfig disc)
        : generator(std::move(gen)), discriminator(std::move(disc))
    {
        require(generator.config().input_channels + 3 == discriminator.config().input_channels,
                ErrorCode::shape_mismatch, "discriminator must see the generator's conditioning plus 3 image channels");
    }

    Generator<T> generator;
    Discriminator<T> discriminator;
    std::uint64_t init_seed = 0;

    /// Conv and deconv weights ~ N(0, stddev^2), biases 0, BN scale 1 and shift 0; generator first.
    void init_weights(std::uint64_t seed, double stddev = init_stddev)
    {
        init_seed = seed;
        std::mt19937_64 rng(seed);
        auto g = generator.parameters();
        initialize(g, rng, stddev);
        auto d = discriminator.parameters();
        initialize(d, rng, stddev);
    }

    std::vector<Parameter<T>*> all_arrays()
    {
        std::vector<Parameter<T>*> out;
        auto g = generator.parameters();
        auto d = discriminator.parameters();
        for (auto* v : {&g.trainable, &g.state, &d.trainable, &d.state})
            out.insert(out.end(), v->begin(), v->end());
        return out;
    }

    NetworkWeights weights()
    {
        NetworkWeights w{generator.config(), discriminator.config(), init_seed, {}};
        for (auto* p : all_arrays())
        {
            WeightArray a{p->name, p->shape, {}};
            a.values.reserve(p->size());
            for (T v : p->value)
                a.values.push_back(static_cast<float>(v));
            w.arrays.push_back(std::move(a));
        }
        return w;
    }

    void load(const NetworkWeights& w)
    {
        require(w.generator == generator.config() && w.discriminator == discriminator.config(),
                ErrorCode::shape_mismatch, "weights were saved for a different network configuration");
        auto arrays = all_arrays();
        require(arrays.size() == w.arrays.size(), ErrorCode::format_error, "weight array count mismatch");
        for (std::size_t k = 0; k < arrays.size(); ++k)
        {
            const WeightArray& a = w.arrays[k];
            require(a.name == arrays[k]->name && a.shape == arrays[k]->shape && a.values.size() == arrays[k]->size(),
                    ErrorCode::format_error, "weight array '" + a.name + "' does not match '" + arrays[k]->name + "'");
            for (std::size_t i = 0; i < a.values.size(); ++i)
            {
                require(std::isfinite(a.values[i]), ErrorCode::non_finite, "non-finite value in '" + a.name + "'");
                arrays[k]->value[i] = static_cast<T>(a.values[i]);
            }
        }
        init_seed = w.init_seed;
    }

    static TranslationModel from_weights(const NetworkWeights& w)
    {
        TranslationModel m(w.generator, w.discriminator);
        m.load(w);
        return m;
    }
};

} // namespace dvp::nn

#endif /* DVP_NN_MODEL_HPP */
