/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/model/rotation.hpp
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

#ifndef DVP_MODEL_ROTATION_HPP
#define DVP_MODEL_ROTATION_HPP

#include "Eigen/Core"
#include "Eigen/Geometry"

#include <cmath>

namespace dvp {

/// Unit quaternion for the axis-angle vector omega (angle = |omega|).
inline Eigen::Quaterniond exp_map(const Eigen::Vector3d& omega)
{
    const double angle = omega.norm();
    if (angle < 1e-12)
    {
        // First-order expansion; exact at zero.
        Eigen::Quaterniond q(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
        return q.normalized();
    }
    return Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
}

/// Axis-angle vector of a unit quaternion, angle in [0, pi].
inline Eigen::Vector3d log_map(const Eigen::Quaterniond& q_in)
{
    Eigen::Quaterniond q = q_in;
    if (q.w() < 0.0)
    {
        q.coeffs() = -q.coeffs();
    }
    const Eigen::Vector3d v = q.vec();
    const double s = v.norm();
    if (s < 1e-12)
    {
        return 2.0 * v;
    }
    const double angle = 2.0 * std::atan2(s, q.w());
    return v * (angle / s);
}

/// Geodesic distance on SO(3), in radians.
inline double rotation_angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b)
{
    return log_map(a.conjugate() * b).norm();
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v)
{
    Eigen::Matrix3d m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

constexpr double degrees(double radians) { return radians * 180.0 / 3.14159265358979323846; }
constexpr double radians(double degrees) { return degrees * 3.14159265358979323846 / 180.0; }

} // namespace dvp

#endif /* DVP_MODEL_ROTATION_HPP */
