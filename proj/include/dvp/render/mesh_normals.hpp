/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/render/mesh_normals.hpp
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

#ifndef DVP_RENDER_MESH_NORMALS_HPP
#define DVP_RENDER_MESH_NORMALS_HPP

#include "dvp/core/error.hpp"
#include "dvp/model/face_basis.hpp"

#include "Eigen/Core"

#include <span>
#include <string>
#include <vector>

namespace dvp {

/**
 * Area-weighted vertex normals. Zero-area triangles contribute nothing; a
 * vertex whose accumulated normal vanishes is an error.
 */
inline std::vector<Eigen::Vector3d> compute_vertex_normals(const Eigen::VectorXd& vertices,
                                                           std::span<const Triangle> triangles)
{
    const auto n = static_cast<std::size_t>(vertices.size() / 3);
    std::vector<Eigen::Vector3d> normals(n, Eigen::Vector3d::Zero());
    for (const auto& t : triangles)
    {
        const Eigen::Vector3d p0 = vertices.segment<3>(3 * t[0]);
        const Eigen::Vector3d p1 = vertices.segment<3>(3 * t[1]);
        const Eigen::Vector3d p2 = vertices.segment<3>(3 * t[2]);
        // |cross| is twice the area, so summing raw cross products weights by area.
        const Eigen::Vector3d face = (p1 - p0).cross(p2 - p0);
        if (face.squaredNorm() == 0.0)
            continue;
        for (int idx : t)
            normals[static_cast<std::size_t>(idx)] += face;
    }
    for (std::size_t i = 0; i < n; ++i)
    {
        const double len = normals[i].norm();
        require(len > 0.0, ErrorCode::invalid_argument,
                "vertex " + std::to_string(i) + " has no non-degenerate incident triangle");
        normals[i] /= len;
    }
    return normals;
}

} // namespace dvp

#endif /* DVP_RENDER_MESH_NORMALS_HPP */
