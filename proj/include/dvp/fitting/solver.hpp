/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/fitting/solver.hpp
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

#ifndef DVP_FITTING_SOLVER_HPP
#define DVP_FITTING_SOLVER_HPP

#include "dvp/core/error.hpp"
#include "dvp/core/image.hpp"
#include "dvp/fitting/energy.hpp"
#include "dvp/fitting/landmarks.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/model/parameters_io.hpp"
#include "dvp/model/rotation.hpp"
#include "dvp/render/camera.hpp"
#include "dvp/render/face_renderer.hpp"

#include "Eigen/Cholesky"
#include "Eigen/Core"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace dvp {

enum class FitMode { full, tracking };

/// Which parameter groups the solver moves. Gaze is never solved.
struct ActiveSet
{
    bool pose = true;
    bool identity = true; ///< alpha and beta
    bool expression = true;
    bool illumination = true;

    static ActiveSet for_mode(FitMode mode)
    {
        ActiveSet a;
        a.identity = mode == FitMode::full;
        return a;
    }

    static ActiveSet rigid() { return {true, false, false, false}; }

    int size(const FaceBasis& basis) const
    {
        return (pose ? 6 : 0) + (identity ? basis.num_geometry() + basis.num_reflectance() : 0) +
               (expression ? basis.num_expression() : 0) + (illumination ? sh_coefficient_count : 0);
    }
};

/// Column offsets of each group in the solver vector; -1 when inactive.
struct ColumnLayout
{
    int rotation = -1, translation = -1, alpha = -1, beta = -1, delta = -1, sh = -1;
    int count = 0;

    ColumnLayout(const ActiveSet& a, const FaceBasis& basis)
    {
        auto take = [&](bool on, int n) {
            if (!on)
                return -1;
            const int at = count;
            count += n;
            return at;
        };
        rotation = take(a.pose, 3);
        translation = take(a.pose, 3);
        alpha = take(a.identity, basis.num_geometry());
        beta = take(a.identity, basis.num_reflectance());
        delta = take(a.expression, basis.num_expression());
        sh = take(a.illumination, sh_coefficient_count);
    }
};

/// params (+) step: rotation is updated on the left, exp(omega) R; everything else additively.
inline FaceParameters apply_increment(const FaceParameters& params, const ColumnLayout& layout,
                                      const Eigen::VectorXd& step)
{
    require(step.size() == layout.count, ErrorCode::shape_mismatch, "step size does not match the active set");
    FaceParameters p = params;
    if (layout.rotation >= 0)
        p.rotation = (exp_map(step.segment<3>(layout.rotation)) * params.rotation).normalized();
    if (layout.translation >= 0)
        p.translation += step.segment<3>(layout.translation);
    if (layout.alpha >= 0)
        p.alpha += step.segment(layout.alpha, p.alpha.size());
    if (layout.beta >= 0)
        p.beta += step.segment(layout.beta, p.beta.size());
    if (layout.delta >= 0)
        p.delta += step.segment(layout.delta, p.delta.size());
    if (layout.sh >= 0)
        for (int k = 0; k < sh_coefficient_count; ++k)
            p.sh[static_cast<std::size_t>(k)] += step[layout.sh + k];
    return p;
}

/// Analytic d(landmark residual)/d(active parameters), 132 x layout.count.
inline Eigen::MatrixXd landmark_jacobian(const LandmarkSet& landmarks, const FaceBasis& basis,
                                         const FaceParameters& params, const CameraIntrinsics& cam,
                                         const ColumnLayout& layout)
{
    validate(landmarks, basis);
    const Eigen::VectorXd model = evaluate_geometry(basis, params.alpha, params.delta);
    const Eigen::Matrix3d rot = params.rotation.toRotationMatrix();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * landmark_count, layout.count);
    for (int j = 0; j < landmark_count; ++j)
    {
        const Landmark& l = landmarks.landmarks[static_cast<std::size_t>(j)];
        const Eigen::Vector3d rv = rot * model.segment<3>(3 * l.vertex);
        const Eigen::Vector3d x = rv + params.translation;
        if (x.z() <= near_plane)
            continue;
        const Eigen::Matrix<double, 2, 3> jp = (l.confidence / cam.diagonal()) * projection_jacobian(x, cam);
        if (layout.rotation >= 0)
            jac.block<2, 3>(2 * j, layout.rotation) = -jp * skew(rv);
        if (layout.translation >= 0)
            jac.block<2, 3>(2 * j, layout.translation) = jp;
        const Eigen::Matrix<double, 2, 3> jr = jp * rot;
        if (layout.alpha >= 0)
            jac.block(2 * j, layout.alpha, 2, basis.num_geometry()) =
                jr * basis.geometry_basis.middleRows(3 * l.vertex, 3);
        if (layout.delta >= 0)
            jac.block(2 * j, layout.delta, 2, basis.num_expression()) =
                jr * basis.expression_basis.middleRows(3 * l.vertex, 3);
    }
    return jac;
}

/// Analytic d(residual_reg)/d(active parameters): 1/sigma on the matching diagonal entries.
inline Eigen::MatrixXd regularizer_jacobian(const FaceBasis& basis, const ColumnLayout& layout)
{
    const int na = basis.num_geometry(), nb = basis.num_reflectance(), nd = basis.num_expression();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(na + nb + nd, layout.count);
    for (int k = 0; layout.alpha >= 0 && k < na; ++k)
        jac(k, layout.alpha + k) = 1.0 / basis.geometry_stddev[k];
    for (int k = 0; layout.beta >= 0 && k < nb; ++k)
        jac(na + k, layout.beta + k) = 1.0 / basis.reflectance_stddev[k];
    for (int k = 0; layout.delta >= 0 && k < nd; ++k)
        jac(na + nb + k, layout.delta + k) = 1.0 / basis.expression_stddev[k];
    return jac;
}

/**
 * Forward-difference photometric Jacobian over the foreground of `state`.
 * Rows whose pixel changes coverage under the perturbation are left at 0.
 * Reflectance and illumination columns reuse the base visibility.
 */
inline Eigen::MatrixXd photometric_jacobian(const FaceBasis& basis, const FaceParameters& params,
                                            const CameraIntrinsics& cam, const RenderState& state,
                                            const PhotometricResiduals& base, const ColumnLayout& layout,
                                            double step)
{
    const auto rows = static_cast<Eigen::Index>(base.values.size());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(rows, layout.count);
    const double scale = 1.0 / (255.0 * step);
    const int width = state.visibility.width;

    std::vector<Eigen::Vector3d> shaded0(base.pixels.size());
    for (std::size_t k = 0; k < base.pixels.size(); ++k)
        shaded0[k] = shade_fragment(basis, state.posed, params,
                                    state.visibility.at(base.pixels[k] % width, base.pixels[k] / width));

    auto fill = [&](int col, const PosedFace& posed, const VisibilityBuffer& vis, const FaceParameters& p) {
        for (std::size_t k = 0; k < base.pixels.size(); ++k)
        {
            const Fragment& frag = vis.at(base.pixels[k] % width, base.pixels[k] / width);
            if (!frag.covered())
                continue;
            const Eigen::Vector3d d = (shade_fragment(basis, posed, p, frag) - shaded0[k]) * scale;
            jac.block<3, 1>(3 * static_cast<Eigen::Index>(k), col) = d;
        }
    };

    for (int col = 0; col < layout.count; ++col)
    {
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(layout.count);
        delta[col] = step;
        const FaceParameters p = apply_increment(params, layout, delta);
        const bool shading_only = (layout.beta >= 0 && col >= layout.beta && col < layout.beta + basis.num_reflectance()) ||
                                  (layout.sh >= 0 && col >= layout.sh);
        if (shading_only)
        {
            PosedFace posed = state.posed;
            if (layout.beta >= 0 && col >= layout.beta && col < layout.beta + basis.num_reflectance())
                posed.albedo += step * basis.reflectance_basis.col(col - layout.beta);
            fill(col, posed, state.visibility, p);
        }
        else
        {
            const RenderState s = render_state(basis, p, cam);
            fill(col, s.posed, s.visibility, p);
        }
    }
    return jac;
}

struct FitConfig
{
    EnergyWeights weights;
    int max_iters = 7;
    double convergence = 1e-5;      ///< relative energy decrease
    double fd_step = 1e-4;
    double irls_epsilon = 1e-4;
    double initial_damping = 1e-4;  ///< relative to the mean diagonal of the normal matrix
    int max_damping_steps = 12;     ///< x10 escalations before giving up on an iteration
    int landmark_warmup_iters = 10; ///< rigid landmark-only iterations before a full-mode fit
};

/// One linearization: stacked residuals, Jacobian, IRLS weights and the resulting normal equations.
struct SolverWorkspace
{
    ActiveSet active;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    Eigen::VectorXd weights; ///< per residual row
    Eigen::MatrixXd normal;  ///< J^T W J
    Eigen::VectorXd rhs;     ///< -J^T W F
    int photo_rows = 0;
    int landmark_rows = 0;
    int reg_rows = 0;
};

inline SolverWorkspace build_workspace(const RasterImage& frame, const LandmarkSet& landmarks,
                                       const FaceBasis& basis, const FaceParameters& params,
                                       const CameraIntrinsics& cam, const ActiveSet& active, const FitConfig& config)
{
    const ColumnLayout layout(active, basis);
    const RenderState state = render_state(basis, params, cam);
    SolverWorkspace ws;
    ws.active = active;

    PhotometricResiduals photo;
    Eigen::MatrixXd jp(0, layout.count);
    if (config.weights.photo > 0.0)
    {
        photo = residuals_photo(frame, basis, params, state);
        jp = photometric_jacobian(basis, params, cam, state, photo, layout, config.fd_step);
    }
    const LandmarkResiduals land = residuals_landmark(landmarks, basis, params, cam, state.posed.model_vertices);
    const Eigen::MatrixXd jl = landmark_jacobian(landmarks, basis, params, cam, layout);
    const Eigen::VectorXd reg = residual_reg(params, basis);
    const Eigen::MatrixXd jr = regularizer_jacobian(basis, layout);

    ws.photo_rows = static_cast<int>(photo.values.size());
    ws.landmark_rows = static_cast<int>(land.values.size());
    ws.reg_rows = static_cast<int>(reg.size());
    const Eigen::Index rows = ws.photo_rows + ws.landmark_rows + ws.reg_rows;
    ws.residuals.resize(rows);
    ws.residuals << photo.values, land.values, reg;
    ws.jacobian.resize(rows, layout.count);
    ws.jacobian << jp, jl, jr;

    // The l1 term is replaced by the quadratic |r| ~ r^2 / (2 max(|r0|, eps)) around the current residual.
    ws.weights.resize(rows);
    for (int i = 0; i < ws.photo_rows; ++i)
        ws.weights[i] = config.weights.photo / (2.0 * std::max(std::abs(photo.values[i]), config.irls_epsilon));
    ws.weights.segment(ws.photo_rows, ws.landmark_rows).setConstant(config.weights.land);
    ws.weights.tail(ws.reg_rows).setConstant(config.weights.reg);

    const Eigen::MatrixXd weighted = ws.weights.cwiseSqrt().asDiagonal() * ws.jacobian;
    ws.normal = Eigen::MatrixXd::Zero(layout.count, layout.count);
    ws.normal.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
    ws.normal = ws.normal.selfadjointView<Eigen::Lower>();
    ws.rhs = -(weighted.transpose() * (ws.weights.cwiseSqrt().asDiagonal() * ws.residuals));
    return ws;
}

struct FitResult
{
    FaceParameters params;
    bool flagged = false;
    int iterations = 0;
    int active_dof = 0;
    int dropped_landmarks = 0;
    std::vector<double> energies; ///< initial energy, then one entry per accepted step
};

namespace detail {

inline double energy_or_inf(const RasterImage& frame, const LandmarkSet& landmarks, const FaceBasis& basis,
                            const FaceParameters& params, const EnergyWeights& weights, const CameraIntrinsics& cam)
{
    try
    {
        const double e = total_energy(frame, landmarks, basis, params, weights, cam);
        return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
    } catch (const Error& e)
    {
        if (e.code() == ErrorCode::empty_foreground || e.code() == ErrorCode::behind_camera)
            return std::numeric_limits<double>::infinity();
        throw;
    }
}

/// Damped IRLS / Gauss-Newton iterations. Returns nullopt when no linear system could be factorized.
inline std::optional<FitResult> levenberg_marquardt(const RasterImage& frame, const LandmarkSet& landmarks,
                                                    const FaceBasis& basis, const FaceParameters& init,
                                                    const CameraIntrinsics& cam, const ActiveSet& active,
                                                    const FitConfig& config, int iterations)
{
    const ColumnLayout layout(active, basis);
    FitResult result;
    result.params = init;
    result.active_dof = layout.count;
    double energy = total_energy(frame, landmarks, basis, init, config.weights, cam);
    result.energies.push_back(energy);
    bool factorized_once = false;
    double mu = -1.0;

    for (int it = 0; it < iterations; ++it)
    {
        const SolverWorkspace ws = build_workspace(frame, landmarks, basis, result.params, cam, active, config);
        const double mean_diag = std::max(ws.normal.diagonal().mean(), 1e-12);
        if (mu < 0.0)
            mu = config.initial_damping * mean_diag;

        bool accepted = false;
        double candidate_energy = energy;
        Eigen::VectorXd last_step;
        for (int attempt = 0; attempt <= config.max_damping_steps; ++attempt, mu *= 10.0)
        {
            Eigen::MatrixXd damped = ws.normal;
            damped.diagonal().array() += mu;
            const Eigen::LLT<Eigen::MatrixXd> llt(damped);
            if (llt.info() != Eigen::Success)
                continue;
            last_step = llt.solve(ws.rhs);
            if (!last_step.allFinite())
                continue;
            factorized_once = true;
            const FaceParameters candidate = apply_increment(result.params, layout, last_step);
            candidate_energy = energy_or_inf(frame, landmarks, basis, candidate, config.weights, cam);
            if (candidate_energy < energy)
            {
                accepted = true;
                break;
            }
        }
        if (!factorized_once)
            return std::nullopt;
        // Steps that gain less than the tolerance are not taken: the current parameters are the solution.
        if (!accepted || energy - candidate_energy < config.convergence * energy)
            break;
        result.params = apply_increment(result.params, layout, last_step);
        mu = std::max(mu / 10.0, 1e-12 * mean_diag);
        result.iterations = it + 1;
        result.energies.push_back(candidate_energy);
        energy = candidate_energy;
    }
    return result;
}

} // namespace detail

/**
 * Fits one frame. Tracking mode moves pose, expression and illumination (97
 * DoF at full model size); full mode additionally moves identity and starts
 * with a few rigid landmark-only iterations. Gaze is copied from the iris
 * landmarks afterwards.
 */
inline FitResult fit_frame(const RasterImage& frame, const LandmarkSet& landmarks, const FaceBasis& basis,
                           const FaceParameters& init, FitMode mode, const CameraIntrinsics& cam,
                           const FitConfig& config = {})
{
    validate(init, basis);
    validate(landmarks, basis);
    validate(cam);
    validate(config.weights);
    require_frame(frame, cam);
    require(config.max_iters >= 0, ErrorCode::invalid_argument, "max_iters must be non-negative");

    // Empty foreground at the initialization is an error, not a flag.
    if (config.weights.photo > 0.0)
        (void)residuals_photo(frame, basis, init, cam);

    FaceParameters start = init;
    if (config.landmark_warmup_iters > 0 && config.weights.land > 0.0)
    {
        FitConfig rigid = config;
        rigid.weights = {0.0, config.weights.land, config.weights.reg};
        if (auto warm = detail::levenberg_marquardt(frame, landmarks, basis, start, cam, ActiveSet::rigid(), rigid,
                                                    config.landmark_warmup_iters))
            start = warm->params;
    }

    auto solved = detail::levenberg_marquardt(frame, landmarks, basis, start, cam, ActiveSet::for_mode(mode), config,
                                              config.max_iters);
    FitResult result;
    if (!solved)
    {
        result.params = init;
        result.flagged = true;
        result.active_dof = ActiveSet::for_mode(mode).size(basis);
        return result;
    }
    result = std::move(*solved);
    if (mode == FitMode::tracking)
    {
        result.params.alpha = init.alpha;
        result.params.beta = init.beta;
    }
    result.params.gaze = gaze_from_iris(gaze_layout(basis, result.params, cam), landmarks.iris);
    result.dropped_landmarks =
        residuals_landmark(landmarks, basis, result.params, cam).dropped;
    return result;
}

struct TrackResult
{
    std::vector<ParameterRecord> records;
    std::vector<FitResult> fits;
};

/**
 * Frame 0 in full mode from `init`, later frames in tracking mode from the
 * previous solution. A frame that fails is flagged and repeats the previous
 * parameters.
 */
inline TrackResult track_sequence(const std::vector<RasterImage>& frames, const std::vector<LandmarkSet>& landmarks,
                                  const FaceBasis& basis, const CameraIntrinsics& cam, const FitConfig& config,
                                  const FaceParameters& init)
{
    require(!frames.empty(), ErrorCode::invalid_argument, "track_sequence needs at least one frame");
    require(frames.size() == landmarks.size(), ErrorCode::shape_mismatch,
            "need one landmark set per frame (" + std::to_string(frames.size()) + " frames, " +
                std::to_string(landmarks.size()) + " landmark sets)");
    TrackResult out;
    FaceParameters previous = init;
    for (std::size_t f = 0; f < frames.size(); ++f)
    {
        const FitMode mode = f == 0 ? FitMode::full : FitMode::tracking;
        FitResult fit;
        try
        {
            fit = fit_frame(frames[f], landmarks[f], basis, previous, mode, cam, config);
        } catch (const Error& e)
        {
            if (e.code() != ErrorCode::empty_foreground && e.code() != ErrorCode::solver_failure)
                throw;
            fit.params = previous;
            fit.flagged = true;
        }
        out.records.push_back({fit.params, fit.flagged});
        previous = fit.params;
        out.fits.push_back(std::move(fit));
    }
    return out;
}

} // namespace dvp

#endif /* DVP_FITTING_SOLVER_HPP */
