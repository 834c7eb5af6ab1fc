/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/model/face_parameters.hpp
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

#ifndef DVP_MODEL_FACE_PARAMETERS_HPP
#define DVP_MODEL_FACE_PARAMETERS_HPP

#include "dvp/core/error.hpp"
#include "dvp/model/face_basis.hpp"

#include "Eigen/Core"
#include "Eigen/Geometry"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace dvp {

/// Number of SH bands used for shading; band count squared coefficients per channel.
inline constexpr int sh_bands = 3;
inline constexpr int sh_coefficients_per_channel = sh_bands * sh_bands;
inline constexpr int sh_coefficient_count = 3 * sh_coefficients_per_channel;
inline constexpr int gaze_dimension = 4;
/// Gaze angles are bounded to [-gaze_limit, +gaze_limit] radians.
inline constexpr double gaze_limit = std::numbers::pi / 4.0;

inline constexpr double unit_quaternion_tolerance = 1e-9;

/**
 * Per-frame face parameters.
 *
 * Gaze is (left yaw, left pitch, right yaw, right pitch). SH coefficients are
 * channel-major: sh[c * 9 + b] is band function b of color channel c.
 */
struct FaceParameters
{
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;
    Eigen::VectorXd delta;
    std::array<double, gaze_dimension> gaze{};
    std::array<double, sh_coefficient_count> sh{};

    /// 6 pose + |alpha| + |beta| + |delta| + 4 gaze + 27 SH.
    int free_parameter_count() const noexcept
    {
        return 6 + static_cast<int>(alpha.size() + beta.size() + delta.size()) + gaze_dimension +
               sh_coefficient_count;
    }

    friend bool operator==(const FaceParameters& a, const FaceParameters& b)
    {
        return a.rotation.coeffs() == b.rotation.coeffs() && a.translation == b.translation &&
               a.alpha.size() == b.alpha.size() && a.alpha == b.alpha && a.beta.size() == b.beta.size() &&
               a.beta == b.beta && a.delta.size() == b.delta.size() && a.delta == b.delta && a.gaze == b.gaze &&
               a.sh == b.sh;
    }
};

/**
 * Moderate frontal-ish illumination: a constant term that maps albedo to about
 * 0.8 of itself plus a light coming from the upper left of the camera.
 */
inline std::array<double, sh_coefficient_count> default_illumination()
{
    std::array<double, sh_coefficient_count> sh{};
    const double y0 = 0.5 / std::sqrt(std::numbers::pi);
    for (int c = 0; c < 3; ++c)
    {
        sh[c * 9 + 0] = 0.8 / y0;
        sh[c * 9 + 1] = -0.35; // y (image down is +y, so negative lights from above)
        sh[c * 9 + 2] = -0.55; // z (towards the camera is -z)
        sh[c * 9 + 3] = -0.25; // x
    }
    return sh;
}

/// Neutral face at the origin of the coefficient spaces, facing the camera.
inline FaceParameters neutral_parameters(const FaceBasis& basis,
                                         const Eigen::Vector3d& translation = Eigen::Vector3d(0.0, 0.0, 4.0))
{
    FaceParameters p;
    p.translation = translation;
    p.alpha = Eigen::VectorXd::Zero(basis.num_geometry());
    p.beta = Eigen::VectorXd::Zero(basis.num_reflectance());
    p.delta = Eigen::VectorXd::Zero(basis.num_expression());
    p.sh = default_illumination();
    return p;
}

inline bool is_unit(const Eigen::Quaterniond& q, double tolerance = unit_quaternion_tolerance)
{
    return std::abs(q.norm() - 1.0) <= tolerance;
}

/// Checks dimensions against the basis and the quaternion/gaze invariants.
inline void validate(const FaceParameters& p, const FaceBasis& basis)
{
    require(p.alpha.size() == basis.num_geometry() && p.beta.size() == basis.num_reflectance() &&
                p.delta.size() == basis.num_expression(),
            ErrorCode::shape_mismatch, "parameter dimensions do not match the basis");
    require(is_unit(p.rotation), ErrorCode::invalid_argument,
            "rotation quaternion is not unit (norm " + std::to_string(p.rotation.norm()) + ")");
    for (double g : p.gaze)
    {
        require(std::abs(g) <= gaze_limit + 1e-12, ErrorCode::out_of_range, "gaze angle outside [-pi/4, pi/4]");
    }
}

/**
 * Rigidly transforms stacked vertices: v_i -> R v_i + t.
 */
inline Eigen::VectorXd apply_rigid_pose(const Eigen::VectorXd& vertices, const Eigen::Quaterniond& rotation,
                                        const Eigen::Vector3d& translation)
{
    require(is_unit(rotation), ErrorCode::invalid_argument, "apply_rigid_pose: rotation quaternion is not unit");
    require(vertices.size() % 3 == 0, ErrorCode::shape_mismatch, "vertex vector length is not a multiple of 3");
    const Eigen::Matrix3d r = rotation.toRotationMatrix();
    Eigen::VectorXd out(vertices.size());
    const Eigen::Index n = vertices.size() / 3;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        out.segment<3>(3 * i) = r * vertices.segment<3>(3 * i) + translation;
    }
    return out;
}

} // namespace dvp

#endif /* DVP_MODEL_FACE_PARAMETERS_HPP */
