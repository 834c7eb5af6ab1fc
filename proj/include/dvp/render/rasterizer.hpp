/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/render/rasterizer.hpp
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

#ifndef DVP_RENDER_RASTERIZER_HPP
#define DVP_RENDER_RASTERIZER_HPP

#include "dvp/core/error.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/render/camera.hpp"

#include "Eigen/Core"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace dvp {

/// Vertices closer than this to the camera plane are not rasterized.
inline constexpr double near_plane = 1e-3;

struct ScreenVertex
{
    double x = 0.0;
    double y = 0.0;
    double depth = 0.0; ///< camera-space z
};

/// What covers one pixel: the winning triangle and perspective-correct barycentric weights.
struct Fragment
{
    int triangle = -1;
    std::array<double, 3> weights{};
    double depth = 0.0;

    bool covered() const noexcept { return triangle >= 0; }
};

struct VisibilityBuffer
{
    int width = 0;
    int height = 0;
    std::vector<Fragment> fragments;

    const Fragment& at(int x, int y) const noexcept { return fragments[static_cast<std::size_t>(y) * width + x]; }

    std::size_t covered_count() const noexcept
    {
        return static_cast<std::size_t>(
            std::count_if(fragments.begin(), fragments.end(), [](const Fragment& f) { return f.covered(); }));
    }
};

enum class CullMode { none, back };

/// Projects camera-space stacked vertices. Vertices behind the near plane keep their depth and get x = y = 0.
inline std::vector<ScreenVertex> project_vertices(const Eigen::VectorXd& camera_vertices, const CameraIntrinsics& cam)
{
    const auto n = static_cast<std::size_t>(camera_vertices.size() / 3);
    std::vector<ScreenVertex> out(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const Eigen::Vector3d p = camera_vertices.segment<3>(3 * static_cast<Eigen::Index>(i));
        out[i].depth = p.z();
        if (p.z() > near_plane)
        {
            const Eigen::Vector2d s = project(p, cam);
            out[i].x = s.x();
            out[i].y = s.y();
        }
    }
    return out;
}

/**
 * Z-buffered triangle rasterization sampled at pixel centers (x + 0.5, y + 0.5).
 *
 * A sample is inside a triangle when all three edge functions are >= 0, so
 * shared edges are covered by both neighbours. The depth test is strict
 * less-than and triangles are visited in index order, so equal depths keep
 * the lower triangle index. With back-face culling, a triangle is front-facing
 * when its projected winding is clockwise in (x right, y down) image
 * coordinates, which corresponds to an outward normal facing the camera.
 * Triangles with any vertex behind the near plane are skipped.
 */
inline VisibilityBuffer rasterize_triangles(std::span<const ScreenVertex> vertices, std::span<const Triangle> triangles,
                                            int width, int height, CullMode cull = CullMode::back)
{
    VisibilityBuffer buffer{width, height, std::vector<Fragment>(static_cast<std::size_t>(width) * height)};
    for (std::size_t ti = 0; ti < triangles.size(); ++ti)
    {
        const auto& tri = triangles[ti];
        const ScreenVertex& a = vertices[static_cast<std::size_t>(tri[0])];
        const ScreenVertex& b = vertices[static_cast<std::size_t>(tri[1])];
        const ScreenVertex& c = vertices[static_cast<std::size_t>(tri[2])];
        if (a.depth <= near_plane || b.depth <= near_plane || c.depth <= near_plane)
            continue;
        const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (area == 0.0)
            continue;
        if (cull == CullMode::back && area > 0.0)
            continue;

        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}) - 0.5)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}) - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}) - 0.5)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}) - 0.5)));
        const double inv_area = 1.0 / area;
        for (int py = y0; py <= y1; ++py)
        {
            const double sy = py + 0.5;
            for (int px = x0; px <= x1; ++px)
            {
                const double sx = px + 0.5;
                // Barycentric coordinates from signed sub-areas, normalized by the full area.
                const double l0 = ((b.x - sx) * (c.y - sy) - (b.y - sy) * (c.x - sx)) * inv_area;
                const double l1 = ((c.x - sx) * (a.y - sy) - (c.y - sy) * (a.x - sx)) * inv_area;
                const double l2 = ((a.x - sx) * (b.y - sy) - (a.y - sy) * (b.x - sx)) * inv_area;
                if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0)
                    continue;
                const double w0 = l0 / a.depth, w1 = l1 / b.depth, w2 = l2 / c.depth;
                const double inv_depth = w0 + w1 + w2;
                const double depth = 1.0 / inv_depth;
                Fragment& frag = buffer.fragments[static_cast<std::size_t>(py) * width + px];
                if (frag.covered() && !(depth < frag.depth))
                    continue;
                frag.triangle = static_cast<int>(ti);
                frag.depth = depth;
                frag.weights = {w0 / inv_depth, w1 / inv_depth, w2 / inv_depth};
            }
        }
    }
    return buffer;
}

} // namespace dvp

#endif /* DVP_RENDER_RASTERIZER_HPP */
