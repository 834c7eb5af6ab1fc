/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/render/face_renderer.hpp
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

#ifndef DVP_RENDER_FACE_RENDERER_HPP
#define DVP_RENDER_FACE_RENDERER_HPP

#include "dvp/core/error.hpp"
#include "dvp/core/image.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/model/synthesize_basis.hpp"
#include "dvp/render/camera.hpp"
#include "dvp/render/mesh_normals.hpp"
#include "dvp/render/rasterizer.hpp"
#include "dvp/render/spherical_harmonics.hpp"

#include "Eigen/Core"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace dvp {

/// Everything per-vertex that the three conditioning renders share.
struct PosedFace
{
    Eigen::VectorXd model_vertices;  ///< evaluate_geometry(alpha, delta)
    Eigen::VectorXd camera_vertices; ///< R v + t
    std::vector<ScreenVertex> screen;
    std::vector<Eigen::Vector3d> camera_normals;
    Eigen::VectorXd albedo; ///< unclamped reflectance
};

inline PosedFace pose_face(const FaceBasis& basis, const FaceParameters& params, const CameraIntrinsics& cam)
{
    validate(params, basis);
    PosedFace posed;
    posed.model_vertices = evaluate_geometry(basis, params.alpha, params.delta);
    posed.camera_vertices = apply_rigid_pose(posed.model_vertices, params.rotation, params.translation);
    posed.screen = project_vertices(posed.camera_vertices, cam);
    posed.camera_normals = compute_vertex_normals(posed.camera_vertices, basis.triangles);
    posed.albedo = evaluate_reflectance_raw(basis, params.beta);
    return posed;
}

inline VisibilityBuffer rasterize_face(const FaceBasis& basis, const PosedFace& posed, const CameraIntrinsics& cam)
{
    return rasterize_triangles(posed.screen, basis.triangles, cam.width, cam.height, CullMode::back);
}

namespace detail {

template <typename F>
Eigen::Vector3d interpolate(const FaceBasis& basis, const Fragment& frag, F&& per_vertex)
{
    const auto& tri = basis.triangles[static_cast<std::size_t>(frag.triangle)];
    return frag.weights[0] * per_vertex(tri[0]) + frag.weights[1] * per_vertex(tri[1]) +
           frag.weights[2] * per_vertex(tri[2]);
}

} // namespace detail

/// Shaded color of one covered fragment in [0, 255]; albedo clamped to [0, 1] after interpolation.
inline Eigen::Vector3d shade_fragment(const FaceBasis& basis, const PosedFace& posed, const FaceParameters& params,
                                      const Fragment& frag)
{
    const Eigen::Vector3d albedo =
        detail::interpolate(basis, frag, [&](int i) -> Eigen::Vector3d { return posed.albedo.segment<3>(3 * i); })
            .cwiseMax(0.0)
            .cwiseMin(1.0);
    const Eigen::Vector3d normal =
        detail::interpolate(basis, frag, [&](int i) -> Eigen::Vector3d { return posed.camera_normals[i]; })
            .normalized();
    return (255.0 * shade_vertex(albedo, normal, params.sh)).cwiseMax(0.0).cwiseMin(255.0);
}

inline RasterImage shade_visibility(const FaceBasis& basis, const PosedFace& posed, const FaceParameters& params,
                                    const VisibilityBuffer& visibility)
{
    RasterImage image(visibility.width, visibility.height, ColorSpace::raw);
    for (int y = 0; y < visibility.height; ++y)
    {
        for (int x = 0; x < visibility.width; ++x)
        {
            const Fragment& frag = visibility.at(x, y);
            if (!frag.covered())
                continue;
            const Eigen::Vector3d c = shade_fragment(basis, posed, params, frag);
            for (int k = 0; k < 3; ++k)
                image.at(x, y, k) = c[k];
        }
    }
    return image;
}

/// Shaded face under the parameters' SH illumination; background is black.
inline RasterImage rasterize_color(const FaceBasis& basis, const FaceParameters& params, const CameraIntrinsics& cam)
{
    validate(cam);
    const PosedFace posed = pose_face(basis, params, cam);
    return shade_visibility(basis, posed, params, rasterize_face(basis, posed, cam));
}

/**
 * Correspondence code of a vertex: its canonical (average geometry) position
 * affinely mapped from the model's bounding box to [0, 255]^3. Depends on the
 * vertex only, never on the pose or coefficients.
 */
inline std::vector<Eigen::Vector3d> correspondence_codes(const FaceBasis& basis)
{
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (int i = 0; i < basis.vertex_count; ++i)
    {
        lo = lo.cwiseMin(basis.average_vertex(i));
        hi = hi.cwiseMax(basis.average_vertex(i));
    }
    const Eigen::Vector3d extent = hi - lo;
    std::vector<Eigen::Vector3d> codes(static_cast<std::size_t>(basis.vertex_count));
    for (int i = 0; i < basis.vertex_count; ++i)
        codes[i] = 255.0 * (basis.average_vertex(i) - lo).cwiseQuotient(extent);
    return codes;
}

inline RasterImage rasterize_correspondence(const FaceBasis& basis, const FaceParameters& params,
                                            const CameraIntrinsics& cam)
{
    validate(cam);
    const PosedFace posed = pose_face(basis, params, cam);
    const VisibilityBuffer visibility = rasterize_face(basis, posed, cam);
    const auto codes = correspondence_codes(basis);
    RasterImage image(cam.width, cam.height, ColorSpace::raw);
    for (int y = 0; y < cam.height; ++y)
    {
        for (int x = 0; x < cam.width; ++x)
        {
            const Fragment& frag = visibility.at(x, y);
            if (!frag.covered())
                continue;
            const Eigen::Vector3d c = detail::interpolate(basis, frag, [&](int i) { return codes[i]; });
            for (int k = 0; k < 3; ++k)
                image.at(x, y, k) = c[k];
        }
    }
    return image;
}

/// Pupil disk radius relative to the projected eye radius.
inline constexpr double pupil_radius_ratio = 0.3;
inline constexpr int eye_polygon_sides = 24;

/// Screen-space layout of one eye in the gaze image.
struct EyeLayout
{
    bool visible = false;
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double radius = 0.0; ///< projected eye radius, pixels
    std::vector<Eigen::Vector2d> sclera;
    double openness = 1.0; ///< 1 open, 0 closed; the sclera is clipped to |y - center.y| < openness * radius
    Eigen::Vector2d pupil_center = Eigen::Vector2d::Zero();
    double pupil_radius = 0.0;
};

/// 1 - clamp(delta_closure / (2 sigma_closure), 0, 1).
inline double eye_openness(const FaceBasis& basis, const FaceParameters& params)
{
    const double sigma = basis.expression_stddev[eye_closure_dimension];
    return 1.0 - std::clamp(params.delta[eye_closure_dimension] / (2.0 * sigma), 0.0, 1.0);
}

/// Canonical eye center displaced by the mean deformation of the eye-region vertices.
inline Eigen::Vector3d deformed_eye_center(const FaceBasis& basis, const EyeAnnotation& eye,
                                           const Eigen::VectorXd& model_vertices)
{
    Eigen::Vector3d shift = Eigen::Vector3d::Zero();
    for (int v : eye.vertices)
        shift += model_vertices.segment<3>(3 * v) - basis.average_vertex(v);
    return eye.center + shift / static_cast<double>(eye.vertices.size());
}

/**
 * Eye layout used by the gaze image. Yaw moves the pupil towards +x and pitch
 * towards -y (up); gaze_limit maps to a displacement of one projected eye
 * radius. The pupil center is clamped to the eye disk.
 */
inline std::array<EyeLayout, 2> gaze_layout(const FaceBasis& basis, const FaceParameters& params,
                                            const CameraIntrinsics& cam, const Eigen::VectorXd& model_vertices)
{
    std::array<EyeLayout, 2> layout;
    const Eigen::Matrix3d rot = params.rotation.toRotationMatrix();
    const double openness = eye_openness(basis, params);
    for (int e = 0; e < 2; ++e)
    {
        const EyeAnnotation& eye = basis.eyes[e];
        require(!eye.vertices.empty(), ErrorCode::invalid_argument, "basis has no eye annotations");
        EyeLayout& out = layout[e];
        const Eigen::Vector3d center = rot * deformed_eye_center(basis, eye, model_vertices) + params.translation;
        const Eigen::Vector3d normal = rot * eye.normal;
        if (center.z() <= near_plane || normal.dot(center) >= 0.0)
            continue;
        Eigen::Vector3d u = rot * Eigen::Vector3d::UnitX();
        u = (u - u.dot(normal) * normal).normalized();
        const Eigen::Vector3d w = normal.cross(u);
        bool all_in_front = true;
        for (int k = 0; k < eye_polygon_sides; ++k)
        {
            const double a = 2.0 * std::numbers::pi * k / eye_polygon_sides;
            const Eigen::Vector3d p = center + eye.radius * (std::cos(a) * u + std::sin(a) * w);
            if (p.z() <= near_plane)
            {
                all_in_front = false;
                break;
            }
            out.sclera.push_back(project(p, cam));
        }
        if (!all_in_front)
        {
            out.sclera.clear();
            continue;
        }
        out.visible = true;
        out.center = project(center, cam);
        out.radius = cam.focal_length_px * eye.radius / center.z();
        out.openness = openness;
        const double yaw = params.gaze[2 * e];
        const double pitch = params.gaze[2 * e + 1];
        Eigen::Vector2d offset(yaw / gaze_limit * out.radius, -pitch / gaze_limit * out.radius);
        if (offset.norm() > out.radius)
            offset *= out.radius / offset.norm();
        out.pupil_center = out.center + offset;
        out.pupil_radius = pupil_radius_ratio * out.radius;
    }
    return layout;
}

inline std::array<EyeLayout, 2> gaze_layout(const FaceBasis& basis, const FaceParameters& params,
                                            const CameraIntrinsics& cam)
{
    validate(params, basis);
    return gaze_layout(basis, params, cam, evaluate_geometry(basis, params.alpha, params.delta));
}

namespace detail {

/// Point-in-convex-polygon by consistent edge-function signs.
inline bool inside_convex(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p)
{
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < poly.size(); ++i)
    {
        const Eigen::Vector2d& a = poly[i];
        const Eigen::Vector2d& b = poly[(i + 1) % poly.size()];
        const double e = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
        has_pos |= e > 0.0;
        has_neg |= e < 0.0;
        if (has_pos && has_neg)
            return false;
    }
    return true;
}

} // namespace detail

/**
 * Gaze image: black background, white sclera (the projected eye disk, clipped
 * vertically by the eyelid openness) and a pure blue pupil disk.
 */
inline RasterImage rasterize_gaze(const FaceBasis& basis, const FaceParameters& params, const CameraIntrinsics& cam)
{
    validate(cam);
    const auto layout = gaze_layout(basis, params, cam);
    RasterImage image(cam.width, cam.height, ColorSpace::raw);
    for (const EyeLayout& eye : layout)
    {
        if (!eye.visible || eye.openness <= 0.0)
            continue;
        const double half_height = eye.openness * eye.radius;
        double min_x = eye.center.x(), max_x = eye.center.x();
        for (const auto& p : eye.sclera)
        {
            min_x = std::min(min_x, p.x());
            max_x = std::max(max_x, p.x());
        }
        min_x = std::min(min_x, eye.pupil_center.x() - eye.pupil_radius);
        max_x = std::max(max_x, eye.pupil_center.x() + eye.pupil_radius);
        const int x0 = std::max(0, static_cast<int>(std::floor(min_x)));
        const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(max_x)));
        const int y0 = std::max(0, static_cast<int>(std::floor(eye.center.y() - half_height)));
        const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(eye.center.y() + half_height)));
        for (int y = y0; y <= y1; ++y)
        {
            for (int x = x0; x <= x1; ++x)
            {
                const Eigen::Vector2d s(x + 0.5, y + 0.5);
                if (!(std::abs(s.y() - eye.center.y()) < half_height))
                    continue;
                if ((s - eye.pupil_center).norm() < eye.pupil_radius)
                {
                    image.at(x, y, 0) = 0.0;
                    image.at(x, y, 1) = 0.0;
                    image.at(x, y, 2) = 255.0;
                }
                else if (detail::inside_convex(eye.sclera, s))
                {
                    image.at(x, y, 0) = 255.0;
                    image.at(x, y, 1) = 255.0;
                    image.at(x, y, 2) = 255.0;
                }
            }
        }
    }
    return image;
}

/**
 * Inverse of the pupil mapping: gaze angles from tracked iris centers relative
 * to the projected eye layout, clamped to [-gaze_limit, gaze_limit]. Eyes that
 * are not visible get zero gaze.
 */
inline std::array<double, gaze_dimension> gaze_from_iris(const std::array<EyeLayout, 2>& layout,
                                                          const std::array<Eigen::Vector2d, 2>& iris)
{
    std::array<double, gaze_dimension> gaze{};
    for (int e = 0; e < 2; ++e)
    {
        if (!layout[e].visible || layout[e].radius <= 0.0)
            continue;
        const Eigen::Vector2d d = (iris[e] - layout[e].center) / layout[e].radius;
        gaze[2 * e] = std::clamp(d.x() * gaze_limit, -gaze_limit, gaze_limit);
        gaze[2 * e + 1] = std::clamp(-d.y() * gaze_limit, -gaze_limit, gaze_limit);
    }
    return gaze;
}

} // namespace dvp

#endif /* DVP_RENDER_FACE_RENDERER_HPP */
