/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/nn/adam.hpp
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

#ifndef DVP_NN_ADAM_HPP
#define DVP_NN_ADAM_HPP

#include "dvp/core/error.hpp"
#include "dvp/nn/layers.hpp"

#include <cmath>
#include <vector>

namespace dvp::nn {

struct AdamConfig
{
    double learning_rate = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction; moments kept in double.
template <typename T>
class Adam
{
public:
    Adam(std::vector<Parameter<T>*> params, AdamConfig config) : params_(std::move(params)), config_(config)
    {
        require(config_.learning_rate > 0.0 && config_.beta1 >= 0.0 && config_.beta1 < 1.0 && config_.beta2 >= 0.0 &&
                    config_.beta2 < 1.0 && config_.epsilon > 0.0,
                ErrorCode::out_of_range, "invalid optimizer settings");
        for (auto* p : params_)
        {
            m_.emplace_back(p->size(), 0.0);
            v_.emplace_back(p->size(), 0.0);
        }
    }

    void step()
    {
        ++t_;
        const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params_.size(); ++k)
        {
            Parameter<T>& p = *params_[k];
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i)
            {
                const double g = p.grad[i];
                m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
                v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
                p.value[i] -= static_cast<T>(config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon));
            }
        }
    }

    long steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return config_; }

private:
    std::vector<Parameter<T>*> params_;
    AdamConfig config_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

} // namespace dvp::nn

#endif /* DVP_NN_ADAM_HPP */
