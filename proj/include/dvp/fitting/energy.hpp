/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/fitting/energy.hpp
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

#ifndef DVP_FITTING_ENERGY_HPP
#define DVP_FITTING_ENERGY_HPP

#include "dvp/core/error.hpp"
#include "dvp/core/image.hpp"
#include "dvp/fitting/landmarks.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/render/camera.hpp"
#include "dvp/render/face_renderer.hpp"

#include "Eigen/Core"

#include <cmath>
#include <vector>

namespace dvp {

struct EnergyWeights
{
    double photo = 1.0;
    double land = 10.0;
    double reg = 0.05;
};

inline void validate(const EnergyWeights& w)
{
    require(w.photo >= 0.0 && w.land >= 0.0 && w.reg >= 0.0, ErrorCode::invalid_argument,
            "energy weights must be non-negative");
    require(w.photo + w.land + w.reg > 0.0, ErrorCode::invalid_argument, "energy weights are all zero");
}

/// Synthesized minus observed color, divided by 255, for every covered pixel of the render.
struct PhotometricResiduals
{
    std::vector<int> pixels;  ///< row-major pixel indices, ascending
    Eigen::VectorXd values;   ///< 3 per pixel

    double l1() const { return values.cwiseAbs().sum(); }
};

struct LandmarkResiduals
{
    Eigen::VectorXd values; ///< 2 per landmark, (x, y)
    int dropped = 0;        ///< landmarks whose vertex is behind the camera; their rows are 0

    double squared_norm() const { return values.squaredNorm(); }
};

/// Render state reused by the residual and the finite-difference Jacobian.
struct RenderState
{
    PosedFace posed;
    VisibilityBuffer visibility;
};

inline RenderState render_state(const FaceBasis& basis, const FaceParameters& params, const CameraIntrinsics& cam)
{
    RenderState s;
    s.posed = pose_face(basis, params, cam);
    s.visibility = rasterize_face(basis, s.posed, cam);
    return s;
}

inline void require_frame(const RasterImage& frame, const CameraIntrinsics& cam)
{
    require(frame.width == cam.width && frame.height == cam.height, ErrorCode::shape_mismatch,
            "frame is " + std::to_string(frame.width) + "x" + std::to_string(frame.height) + ", camera expects " +
                std::to_string(cam.width) + "x" + std::to_string(cam.height));
    require(frame.space == ColorSpace::raw, ErrorCode::invalid_argument, "frame must hold raw [0, 255] samples");
}

inline PhotometricResiduals residuals_photo(const RasterImage& frame, const FaceBasis& basis,
                                            const FaceParameters& params, const RenderState& state)
{
    PhotometricResiduals out;
    const auto& vis = state.visibility;
    for (int i = 0; i < vis.width * vis.height; ++i)
        if (vis.fragments[static_cast<std::size_t>(i)].covered())
            out.pixels.push_back(i);
    require(!out.pixels.empty(), ErrorCode::empty_foreground, "the face covers no pixel of the frame");
    out.values.resize(3 * static_cast<Eigen::Index>(out.pixels.size()));
    for (std::size_t k = 0; k < out.pixels.size(); ++k)
    {
        const int x = out.pixels[k] % vis.width;
        const int y = out.pixels[k] / vis.width;
        const Eigen::Vector3d c = shade_fragment(basis, state.posed, params, vis.at(x, y));
        for (int ch = 0; ch < 3; ++ch)
            out.values[3 * static_cast<Eigen::Index>(k) + ch] = (c[ch] - frame.at(x, y, ch)) / 255.0;
    }
    return out;
}

inline PhotometricResiduals residuals_photo(const RasterImage& frame, const FaceBasis& basis,
                                            const FaceParameters& params, const CameraIntrinsics& cam)
{
    validate(cam);
    require_frame(frame, cam);
    return residuals_photo(frame, basis, params, render_state(basis, params, cam));
}

inline LandmarkResiduals residuals_landmark(const LandmarkSet& landmarks, const FaceBasis& basis,
                                            const FaceParameters& params, const CameraIntrinsics& cam,
                                            const Eigen::VectorXd& model_vertices)
{
    validate(landmarks, basis);
    LandmarkResiduals out;
    out.values = Eigen::VectorXd::Zero(2 * landmark_count);
    const double inv_diag = 1.0 / cam.diagonal();
    for (int j = 0; j < landmark_count; ++j)
    {
        const Landmark& l = landmarks.landmarks[static_cast<std::size_t>(j)];
        const Eigen::Vector3d x = params.rotation * model_vertices.segment<3>(3 * l.vertex) + params.translation;
        if (x.z() <= near_plane)
        {
            ++out.dropped;
            continue;
        }
        out.values.segment<2>(2 * j) = l.confidence * inv_diag * (project(x, cam) - l.position);
    }
    return out;
}

inline LandmarkResiduals residuals_landmark(const LandmarkSet& landmarks, const FaceBasis& basis,
                                            const FaceParameters& params, const CameraIntrinsics& cam)
{
    validate(params, basis);
    return residuals_landmark(landmarks, basis, params, cam, evaluate_geometry(basis, params.alpha, params.delta));
}

/// c_k / sigma_k for alpha, then beta, then delta.
inline Eigen::VectorXd residual_reg(const FaceParameters& params, const FaceBasis& basis)
{
    validate(params, basis);
    const int na = basis.num_geometry(), nb = basis.num_reflectance(), nd = basis.num_expression();
    Eigen::VectorXd r(na + nb + nd);
    r.head(na) = params.alpha.cwiseQuotient(basis.geometry_stddev);
    r.segment(na, nb) = params.beta.cwiseQuotient(basis.reflectance_stddev);
    r.tail(nd) = params.delta.cwiseQuotient(basis.expression_stddev);
    return r;
}

struct EnergyTerms
{
    double photo = 0.0; ///< sum of |r|
    double land = 0.0;  ///< sum of r^2
    double reg = 0.0;   ///< sum of r^2
    double total = 0.0;
    int dropped_landmarks = 0;
};

inline EnergyTerms energy_terms(const RasterImage& frame, const LandmarkSet& landmarks, const FaceBasis& basis,
                                const FaceParameters& params, const EnergyWeights& weights,
                                const CameraIntrinsics& cam)
{
    validate(weights);
    validate(cam);
    require_frame(frame, cam);
    EnergyTerms e;
    const RenderState state = render_state(basis, params, cam);
    if (weights.photo > 0.0)
        e.photo = residuals_photo(frame, basis, params, state).l1();
    const LandmarkResiduals lr = residuals_landmark(landmarks, basis, params, cam, state.posed.model_vertices);
    e.land = lr.squared_norm();
    e.dropped_landmarks = lr.dropped;
    e.reg = residual_reg(params, basis).squaredNorm();
    e.total = weights.photo * e.photo + weights.land * e.land + weights.reg * e.reg;
    return e;
}

/// E = w_photo E_photo + w_land E_land + w_reg E_reg.
inline double total_energy(const RasterImage& frame, const LandmarkSet& landmarks, const FaceBasis& basis,
                           const FaceParameters& params, const EnergyWeights& weights, const CameraIntrinsics& cam)
{
    return energy_terms(frame, landmarks, basis, params, weights, cam).total;
}

} // namespace dvp

#endif /* DVP_FITTING_ENERGY_HPP */
