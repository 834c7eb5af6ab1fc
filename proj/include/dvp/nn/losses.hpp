/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/nn/losses.hpp
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

#ifndef DVP_NN_LOSSES_HPP
#define DVP_NN_LOSSES_HPP

#include "dvp/core/error.hpp"
#include "dvp/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace dvp::nn {

inline constexpr double log_clamp = 1e-12;
inline constexpr double default_lambda_l1 = 100.0;

inline double clamped_log(double v)
{
    return std::log(std::max(v, log_clamp));
}

struct AdversarialLoss
{
    double generator = 0.0;     ///< -mean log D(fake)
    double discriminator = 0.0; ///< -mean log D(real) - mean log(1 - D(fake))
};

template <typename T>
AdversarialLoss loss_adversarial(const Tensor<T>& real, const Tensor<T>& fake)
{
    require(!real.data.empty() && !fake.data.empty(), ErrorCode::invalid_argument, "empty score maps");
    double lr = 0.0, lf = 0.0, lg = 0.0;
    for (T v : real.data)
        lr += clamped_log(v);
    for (T v : fake.data)
    {
        lf += clamped_log(1.0 - v);
        lg += clamped_log(v);
    }
    const double nr = static_cast<double>(real.size()), nf = static_cast<double>(fake.size());
    return {-lg / nf, -lr / nr - lf / nf};
}

/// d/dscores of -mean log(s) (target 1) or -mean log(1 - s) (target 0). Zero where the clamp is active.
template <typename T>
Tensor<T> adversarial_gradient(const Tensor<T>& scores, bool target_real)
{
    Tensor<T> g(scores.n, scores.c, scores.h, scores.w);
    const double n = static_cast<double>(scores.size());
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        const double s = scores.data[i];
        if (target_real)
            g.data[i] = s > log_clamp ? static_cast<T>(-1.0 / (s * n)) : T(0);
        else
            g.data[i] = 1.0 - s > log_clamp ? static_cast<T>(1.0 / ((1.0 - s) * n)) : T(0);
    }
    return g;
}

template <typename T>
double loss_l1(const Tensor<T>& pred, const Tensor<T>& truth)
{
    require_same_shape(pred, truth, "loss_l1");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        s += std::abs(static_cast<double>(pred.data[i]) - truth.data[i]);
    return s / static_cast<double>(pred.size());
}

/// sign(pred - truth) / count; 0 where they are equal.
template <typename T>
Tensor<T> l1_gradient(const Tensor<T>& pred, const Tensor<T>& truth)
{
    require_same_shape(pred, truth, "l1_gradient");
    Tensor<T> g(pred.n, pred.c, pred.h, pred.w);
    const T inv = static_cast<T>(1.0 / static_cast<double>(pred.size()));
    for (std::size_t i = 0; i < g.size(); ++i)
        g.data[i] = pred.data[i] > truth.data[i] ? inv : (pred.data[i] < truth.data[i] ? -inv : T(0));
    return g;
}

} // namespace dvp::nn

#endif /* DVP_NN_LOSSES_HPP */
