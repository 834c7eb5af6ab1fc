/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/transfer/transfer.hpp
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

#ifndef DVP_TRANSFER_TRANSFER_HPP
#define DVP_TRANSFER_TRANSFER_HPP

#include "dvp/core/error.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/model/rotation.hpp"

#include "Eigen/Core"
#include "Eigen/Geometry"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

namespace dvp {

/// Parameters relative to a reference frame.
struct RelativeParameters
{
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity(); ///< R R_ref^-1
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Eigen::VectorXd delta;
    std::array<double, gaze_dimension> gaze{};
};

inline RelativeParameters make_relative(const FaceParameters& params, const FaceParameters& reference)
{
    require(params.delta.size() == reference.delta.size(), ErrorCode::shape_mismatch,
            "expression dimensions differ between parameters and reference");
    RelativeParameters d;
    d.rotation = (params.rotation * reference.rotation.conjugate()).normalized();
    d.translation = params.translation - reference.translation;
    d.delta = params.delta - reference.delta;
    for (int k = 0; k < gaze_dimension; ++k)
        d.gaze[k] = params.gaze[k] - reference.gaze[k];
    return d;
}

/// Inverse of make_relative; identity, reflectance and illumination come from the reference.
inline FaceParameters apply_relative(const FaceParameters& reference, const RelativeParameters& d)
{
    require(d.delta.size() == reference.delta.size(), ErrorCode::shape_mismatch,
            "expression dimensions differ between delta and reference");
    FaceParameters p = reference;
    p.rotation = (d.rotation * reference.rotation).normalized();
    p.translation = reference.translation + d.translation;
    p.delta = reference.delta + d.delta;
    for (int k = 0; k < gaze_dimension; ++k)
        p.gaze[k] = reference.gaze[k] + d.gaze[k];
    return p;
}

struct TransferSpec
{
    bool pose = true;
    bool expression = true;
    bool gaze = true;
    bool identity_geometry = false;
    double rotation_scale = 1.0;
    double translation_scale = 1.0;
    std::array<bool, 3> translation_axes{true, true, true};
    int source_reference_frame = 0;
    int target_reference_frame = 0;
};

inline void validate(const TransferSpec& s)
{
    require(s.pose || s.expression || s.gaze || s.identity_geometry, ErrorCode::invalid_argument,
            "transfer spec enables no component");
    require(s.rotation_scale >= 0.0 && s.rotation_scale <= 1.0 && s.translation_scale >= 0.0 &&
                s.translation_scale <= 1.0,
            ErrorCode::out_of_range, "transfer scales must lie in [0, 1]");
}

inline nlohmann::json to_json(const TransferSpec& s)
{
    return {{"pose", s.pose},
            {"expression", s.expression},
            {"gaze", s.gaze},
            {"identity_geometry", s.identity_geometry},
            {"rotation_scale", s.rotation_scale},
            {"translation_scale", s.translation_scale},
            {"translation_axes", {s.translation_axes[0], s.translation_axes[1], s.translation_axes[2]}},
            {"source_reference_frame", s.source_reference_frame},
            {"target_reference_frame", s.target_reference_frame}};
}

/// Missing keys keep their defaults.
inline TransferSpec transfer_spec_from_json(const nlohmann::json& j)
{
    try
    {
        TransferSpec s;
        s.pose = j.value("pose", s.pose);
        s.expression = j.value("expression", s.expression);
        s.gaze = j.value("gaze", s.gaze);
        s.identity_geometry = j.value("identity_geometry", s.identity_geometry);
        s.rotation_scale = j.value("rotation_scale", s.rotation_scale);
        s.translation_scale = j.value("translation_scale", s.translation_scale);
        if (j.contains("translation_axes"))
            for (int k = 0; k < 3; ++k)
                s.translation_axes[k] = j.at("translation_axes").at(k).get<bool>();
        s.source_reference_frame = j.value("source_reference_frame", s.source_reference_frame);
        s.target_reference_frame = j.value("target_reference_frame", s.target_reference_frame);
        validate(s);
        return s;
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, std::string("malformed transfer spec: ") + e.what());
    }
}

struct TransferResult
{
    std::vector<FaceParameters> sequence;
    int repeated_target_frames = 0; ///< output frames that reused the last target frame
};

namespace detail {

inline bool all_axes(const std::array<bool, 3>& a) { return a[0] && a[1] && a[2]; }

} // namespace detail

/**
 * One output frame per source frame. Target identity, reflectance and
 * illumination are always kept; each enabled component becomes the target
 * reference plus the (scaled) source delta, each disabled one keeps the
 * target's own per-frame value. Rotation: R_tref exp(s log(R_sref^-1 R_sf)).
 *
 * When the two references hold the same value and no scaling or masking
 * applies, the reference cancels algebraically and the source value is used
 * as is, so self-transfer is exact.
 */
inline TransferResult apply_transfer(const std::vector<FaceParameters>& source,
                                     const std::vector<FaceParameters>& target, const TransferSpec& spec)
{
    validate(spec);
    require(!source.empty() && !target.empty(), ErrorCode::invalid_argument, "transfer sequences must be nonempty");
    require(spec.source_reference_frame >= 0 && spec.source_reference_frame < static_cast<int>(source.size()),
            ErrorCode::out_of_range, "source reference frame outside the source sequence");
    require(spec.target_reference_frame >= 0 && spec.target_reference_frame < static_cast<int>(target.size()),
            ErrorCode::out_of_range, "target reference frame outside the target sequence");
    const FaceParameters& sref = source[static_cast<std::size_t>(spec.source_reference_frame)];
    const FaceParameters& tref = target[static_cast<std::size_t>(spec.target_reference_frame)];
    require(sref.delta.size() == tref.delta.size() && sref.alpha.size() == tref.alpha.size(),
            ErrorCode::shape_mismatch, "source and target use different model dimensions");

    const bool same_rotation = sref.rotation.coeffs() == tref.rotation.coeffs() && spec.rotation_scale == 1.0;
    const bool same_translation =
        sref.translation == tref.translation && spec.translation_scale == 1.0 && detail::all_axes(spec.translation_axes);
    const bool same_delta = sref.delta == tref.delta;
    const bool same_gaze = sref.gaze == tref.gaze;
    const bool same_alpha = sref.alpha == tref.alpha;

    TransferResult out;
    out.sequence.reserve(source.size());
    for (std::size_t f = 0; f < source.size(); ++f)
    {
        const FaceParameters& s = source[f];
        if (f >= target.size())
            ++out.repeated_target_frames;
        const FaceParameters& t = target[std::min(f, target.size() - 1)];
        FaceParameters o = t;
        if (spec.pose)
        {
            if (same_rotation)
                o.rotation = s.rotation;
            else
            {
                const Eigen::Vector3d w = spec.rotation_scale * log_map(sref.rotation.conjugate() * s.rotation);
                o.rotation = (tref.rotation * exp_map(w)).normalized();
            }
            if (same_translation)
                o.translation = s.translation;
            else
                for (int k = 0; k < 3; ++k)
                    o.translation[k] = tref.translation[k] + (spec.translation_axes[k]
                                                                  ? spec.translation_scale * (s.translation[k] - sref.translation[k])
                                                                  : 0.0);
        }
        if (spec.expression)
            o.delta = same_delta ? s.delta : Eigen::VectorXd(tref.delta + (s.delta - sref.delta));
        if (spec.gaze)
            for (int k = 0; k < gaze_dimension; ++k)
                o.gaze[k] = same_gaze ? s.gaze[k]
                                      : std::clamp(tref.gaze[k] + (s.gaze[k] - sref.gaze[k]), -gaze_limit, gaze_limit);
        if (spec.identity_geometry)
            o.alpha = same_alpha ? s.alpha : Eigen::VectorXd(tref.alpha + (s.alpha - sref.alpha));
        out.sequence.push_back(std::move(o));
    }
    return out;
}

/// User edits from the editor. Empty containers mean "no edit".
struct ParameterEdit
{
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero(); ///< axis-angle, composed on the left
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    std::map<int, double> expression;                   ///< index -> additive delta
    std::array<double, gaze_dimension> gaze{};          ///< additive
    std::map<int, double> alpha;                        ///< index -> replacement value
};

struct EditResult
{
    FaceParameters params;
    bool gaze_clamped = false;
};

inline EditResult edit_parameters(const FaceParameters& params, const ParameterEdit& edit)
{
    EditResult r{params, false};
    FaceParameters& p = r.params;
    for (const auto& [k, v] : edit.expression)
        require(k >= 0 && k < p.delta.size(), ErrorCode::out_of_range,
                "expression edit index " + std::to_string(k) + " out of range");
    for (const auto& [k, v] : edit.alpha)
        require(k >= 0 && k < p.alpha.size(), ErrorCode::out_of_range,
                "geometry edit index " + std::to_string(k) + " out of range");

    if (!edit.rotation.isZero(0.0))
        p.rotation = (exp_map(edit.rotation) * params.rotation).normalized();
    p.translation += edit.translation;
    for (const auto& [k, v] : edit.expression)
        p.delta[k] += v;
    for (int k = 0; k < gaze_dimension; ++k)
    {
        const double g = params.gaze[k] + edit.gaze[k];
        p.gaze[k] = std::clamp(g, -gaze_limit, gaze_limit);
        r.gaze_clamped |= p.gaze[k] != g;
    }
    for (const auto& [k, v] : edit.alpha)
        p.alpha[k] = v;
    return r;
}

inline ParameterEdit parameter_edit_from_json(const nlohmann::json& j)
{
    try
    {
        ParameterEdit e;
        if (j.contains("rotation"))
            for (int k = 0; k < 3; ++k)
                e.rotation[k] = j.at("rotation").at(k).get<double>();
        if (j.contains("translation"))
            for (int k = 0; k < 3; ++k)
                e.translation[k] = j.at("translation").at(k).get<double>();
        if (j.contains("gaze"))
            for (int k = 0; k < gaze_dimension; ++k)
                e.gaze[k] = j.at("gaze").at(k).get<double>();
        if (j.contains("expression"))
            for (const auto& [key, value] : j.at("expression").items())
                e.expression[std::stoi(key)] = value.get<double>();
        if (j.contains("alpha"))
            for (const auto& [key, value] : j.at("alpha").items())
                e.alpha[std::stoi(key)] = value.get<double>();
        return e;
    } catch (const nlohmann::json::exception& ex)
    {
        throw Error(ErrorCode::format_error, std::string("malformed edit: ") + ex.what());
    } catch (const std::logic_error&)
    {
        throw Error(ErrorCode::format_error, "malformed edit: component index is not an integer");
    }
}

inline nlohmann::json to_json(const ParameterEdit& e)
{
    nlohmann::json expression = nlohmann::json::object(), alpha = nlohmann::json::object();
    for (const auto& [k, v] : e.expression)
        expression[std::to_string(k)] = v;
    for (const auto& [k, v] : e.alpha)
        alpha[std::to_string(k)] = v;
    return {{"rotation", {e.rotation.x(), e.rotation.y(), e.rotation.z()}},
            {"translation", {e.translation.x(), e.translation.y(), e.translation.z()}},
            {"gaze", e.gaze},
            {"expression", expression},
            {"alpha", alpha}};
}

} // namespace dvp

#endif /* DVP_TRANSFER_TRANSFER_HPP */
