/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/render/camera.hpp
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

#ifndef DVP_RENDER_CAMERA_HPP
#define DVP_RENDER_CAMERA_HPP

#include "dvp/core/error.hpp"

#include "Eigen/Core"

#include <algorithm>
#include <cmath>
#include <string>

namespace dvp {

/// Pinhole intrinsics. Camera looks down +z, image x right, image y down.
struct CameraIntrinsics
{
    double focal_length_px = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    double diagonal() const noexcept { return std::hypot(static_cast<double>(width), static_cast<double>(height)); }

    friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// f = 1.2 * max(W, H), principal point at the image center.
inline CameraIntrinsics default_camera(int width, int height)
{
    return {1.2 * std::max(width, height), 0.5 * width, 0.5 * height, width, height};
}

inline void validate(const CameraIntrinsics& cam)
{
    require(cam.width > 0 && cam.height > 0, ErrorCode::invalid_argument, "camera image size must be positive");
    require(cam.focal_length_px > 0.0, ErrorCode::invalid_argument, "focal length must be positive");
    require(cam.cx >= 0.0 && cam.cx <= cam.width && cam.cy >= 0.0 && cam.cy <= cam.height,
            ErrorCode::invalid_argument, "principal point outside the image");
}

/// Perspective projection p = (f x / z + cx, f y / z + cy).
inline Eigen::Vector2d project(const Eigen::Vector3d& point, const CameraIntrinsics& cam)
{
    require(point.z() > 0.0, ErrorCode::behind_camera,
            "point at depth " + std::to_string(point.z()) + " is not in front of the camera");
    return {cam.focal_length_px * point.x() / point.z() + cam.cx, cam.focal_length_px * point.y() / point.z() + cam.cy};
}

/// d(project)/d(point), a 2x3 matrix.
inline Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& point, const CameraIntrinsics& cam)
{
    const double inv_z = 1.0 / point.z();
    const double f = cam.focal_length_px;
    Eigen::Matrix<double, 2, 3> j;
    j << f * inv_z, 0.0, -f * point.x() * inv_z * inv_z, 0.0, f * inv_z, -f * point.y() * inv_z * inv_z;
    return j;
}

} // namespace dvp

#endif /* DVP_RENDER_CAMERA_HPP */
