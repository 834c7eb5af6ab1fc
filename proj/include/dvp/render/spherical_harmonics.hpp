/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/render/spherical_harmonics.hpp
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

#ifndef DVP_RENDER_SPHERICAL_HARMONICS_HPP
#define DVP_RENDER_SPHERICAL_HARMONICS_HPP

#include "dvp/core/error.hpp"
#include "dvp/model/face_parameters.hpp"

#include "Eigen/Core"

#include <array>
#include <cmath>
#include <numbers>

namespace dvp {

/**
 * Real spherical harmonics for bands 0..2 evaluated at a unit direction, in
 * the order (l, m) = (0,0), (1,-1), (1,0), (1,1), (2,-2), (2,-1), (2,0), (2,1), (2,2).
 */
inline std::array<double, sh_coefficients_per_channel> sh_basis(const Eigen::Vector3d& n)
{
    const double pi = std::numbers::pi;
    const double c0 = 0.5 / std::sqrt(pi);
    const double c1 = std::sqrt(3.0 / (4.0 * pi));
    const double c2 = 0.5 * std::sqrt(15.0 / pi);
    const double c20 = 0.25 * std::sqrt(5.0 / pi);
    const double c22 = 0.25 * std::sqrt(15.0 / pi);
    const double x = n.x(), y = n.y(), z = n.z();
    return {c0,
            c1 * y,
            c1 * z,
            c1 * x,
            c2 * x * y,
            c2 * y * z,
            c20 * (3.0 * z * z - 1.0),
            c2 * x * z,
            c22 * (x * x - y * y)};
}

/// Diffuse radiance r * sum_b gamma_b Y_b(n), per color channel.
inline Eigen::Vector3d shade_vertex(const Eigen::Vector3d& albedo, const Eigen::Vector3d& normal,
                                    const std::array<double, sh_coefficient_count>& gamma)
{
    require(std::abs(normal.norm() - 1.0) <= 1e-6, ErrorCode::invalid_argument, "shade_vertex: normal is not unit");
    const auto y = sh_basis(normal);
    Eigen::Vector3d out;
    for (int c = 0; c < 3; ++c)
    {
        double irradiance = 0.0;
        for (int b = 0; b < sh_coefficients_per_channel; ++b)
            irradiance += gamma[c * sh_coefficients_per_channel + b] * y[b];
        out[c] = albedo[c] * irradiance;
    }
    return out;
}

} // namespace dvp

#endif /* DVP_RENDER_SPHERICAL_HARMONICS_HPP */
