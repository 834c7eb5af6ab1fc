/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/pipeline/synthetic_scene.hpp
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

#ifndef DVP_PIPELINE_SYNTHETIC_SCENE_HPP
#define DVP_PIPELINE_SYNTHETIC_SCENE_HPP

#include "dvp/core/error.hpp"
#include "dvp/core/image.hpp"
#include "dvp/fitting/landmarks.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/model/rotation.hpp"
#include "dvp/render/camera.hpp"
#include "dvp/render/face_renderer.hpp"

#include "Eigen/Core"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace dvp {

struct SceneConfig
{
    std::uint64_t seed = 3;
    int frames = 300;
    int width = 64;
    int height = 64;
    double noise = 2.0;          ///< pixel noise stddev, 8-bit units
    double landmark_noise = 0.3; ///< pixels
    double identity_scale = 0.5; ///< identity coefficients drawn at this many stddevs
    double yaw_amplitude = 0.35; ///< radians
    double pitch_amplitude = 0.15;
    double roll_amplitude = 0.08;
    double expression_amplitude = 1.0; ///< stddevs
    double gaze_amplitude = 0.25;      ///< radians
    double hair_swing = 0.6;           ///< image widths per radian of lagged yaw
    double hair_lag = 8.0;             ///< frames
};

inline void validate(const SceneConfig& c)
{
    require(c.frames >= 1 && c.width >= 8 && c.height >= 8, ErrorCode::invalid_argument,
            "scene needs at least one frame of at least 8x8 pixels");
    require(c.noise >= 0.0 && c.landmark_noise >= 0.0 && c.identity_scale >= 0.0 && c.hair_lag >= 1.0,
            ErrorCode::out_of_range, "scene noise, identity scale and hair lag must be non-negative");
    require(c.yaw_amplitude >= 0.0 && c.yaw_amplitude < 1.2 && c.pitch_amplitude >= 0.0 && c.pitch_amplitude < 0.8 &&
                c.roll_amplitude >= 0.0 && c.roll_amplitude < 0.8 && c.gaze_amplitude >= 0.0 &&
                c.gaze_amplitude <= gaze_limit && c.expression_amplitude >= 0.0,
            ErrorCode::out_of_range, "scene motion amplitudes are outside the model range");
}

/// Smooth signal in [-1, 1]: three sinusoids with seeded periods (25 to 150 frames) and phases.
class SmoothCurve
{
public:
    SmoothCurve() = default;
    explicit SmoothCurve(std::mt19937_64& rng)
    {
        std::uniform_real_distribution<double> period(25.0, 150.0), phase(0.0, 2.0 * std::numbers::pi),
            weight(0.5, 1.0);
        double total = 0.0;
        for (auto& t : terms_)
        {
            t = {2.0 * std::numbers::pi / period(rng), phase(rng), weight(rng)};
            total += t[2];
        }
        for (auto& t : terms_)
            t[2] /= total;
    }

    double operator()(double frame) const
    {
        double v = 0.0;
        for (const auto& t : terms_)
            v += t[2] * std::sin(t[0] * frame + t[1]);
        return v;
    }

private:
    std::array<std::array<double, 3>, 3> terms_{};
};

/**
 * Scripted head video: a seeded identity and illumination, smooth pose,
 * expression and gaze curves, a static background and a hair shape whose
 * horizontal swing trails the head yaw (it follows an exponential moving
 * average of the yaw), so a single frame does not determine it.
 */
class SyntheticScene
{
public:
    static constexpr int animated_expressions = 6;

    SyntheticScene(const FaceBasis& basis, SceneConfig config) : basis_(&basis), config_(config)
    {
        validate(config_);
        camera_ = default_camera(config_.width, config_.height);
        std::mt19937_64 rng(config_.seed);
        std::normal_distribution<double> normal;
        identity_ = neutral_parameters(basis);
        for (int k = 0; k < basis.num_geometry(); ++k)
            identity_.alpha[k] = config_.identity_scale * basis.geometry_stddev[k] * normal(rng);
        for (int k = 0; k < basis.num_reflectance(); ++k)
            identity_.beta[k] = config_.identity_scale * basis.reflectance_stddev[k] * normal(rng);
        for (double& s : identity_.sh)
            s += 0.03 * normal(rng);
        for (auto* c : {&yaw_, &pitch_, &roll_, &tx_, &ty_, &tz_, &gaze_x_, &gaze_y_})
            *c = SmoothCurve(rng);
        for (auto& c : expression_)
            c = SmoothCurve(rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (auto& c : background_colors_)
            c = Eigen::Vector3d(40.0 + 180.0 * unit(rng), 40.0 + 180.0 * unit(rng), 40.0 + 180.0 * unit(rng));
        for (auto& b : blobs_)
            b = Eigen::Vector3d(unit(rng), unit(rng), 0.1 + 0.15 * unit(rng));
        hair_color_ = Eigen::Vector3d(60.0 + 40.0 * unit(rng), 35.0 + 25.0 * unit(rng), 20.0 + 20.0 * unit(rng));
        noise_seed_ = rng();
        build_hair_swing();
    }

    const SceneConfig& config() const noexcept { return config_; }
    const CameraIntrinsics& camera() const noexcept { return camera_; }
    const FaceBasis& basis() const noexcept { return *basis_; }

    /// Ground-truth parameters of frame f.
    FaceParameters parameters(int f) const
    {
        require(f >= 0 && f < config_.frames, ErrorCode::out_of_range, "frame index outside the scene");
        FaceParameters p = identity_;
        const double t = f;
        p.rotation = exp_map(Eigen::Vector3d(config_.pitch_amplitude * pitch_(t), config_.yaw_amplitude * yaw_(t),
                                             config_.roll_amplitude * roll_(t)));
        p.translation += Eigen::Vector3d(0.12 * tx_(t), 0.08 * ty_(t), 0.25 * tz_(t));
        const int n = std::min(animated_expressions, basis_->num_expression());
        for (int k = 0; k < n; ++k)
            p.delta[k] = config_.expression_amplitude * basis_->expression_stddev[k] * expression_[k](t);
        const double gx = config_.gaze_amplitude * gaze_x_(t), gy = 0.5 * config_.gaze_amplitude * gaze_y_(t);
        p.gaze = {gx, gy, gx, gy};
        return p;
    }

    std::vector<FaceParameters> trajectory() const
    {
        std::vector<FaceParameters> out;
        out.reserve(static_cast<std::size_t>(config_.frames));
        for (int f = 0; f < config_.frames; ++f)
            out.push_back(parameters(f));
        return out;
    }

    /// Horizontal hair offset of frame f in pixels.
    double hair_offset(int f) const { return hair_swing_.at(static_cast<std::size_t>(f)); }

    RasterImage background() const
    {
        RasterImage img(config_.width, config_.height);
        for (int y = 0; y < config_.height; ++y)
            for (int x = 0; x < config_.width; ++x)
            {
                const double u = (x + 0.5) / config_.width, v = (y + 0.5) / config_.height;
                Eigen::Vector3d c = (1.0 - v) * background_colors_[0] + v * background_colors_[1];
                for (std::size_t b = 0; b < blobs_.size(); ++b)
                {
                    const double d2 = (u - blobs_[b].x()) * (u - blobs_[b].x()) + (v - blobs_[b].y()) * (v - blobs_[b].y());
                    const double w = std::exp(-d2 / (2.0 * blobs_[b].z() * blobs_[b].z()));
                    c = (1.0 - 0.6 * w) * c + 0.6 * w * background_colors_[2 + b];
                }
                for (int k = 0; k < 3; ++k)
                    img.at(x, y, k) = c[k];
            }
        return img;
    }

    /// Noise-free composite of background, hair and face, in [0, 255].
    RasterImage clean_frame(int f) const
    {
        const FaceParameters p = parameters(f);
        RasterImage img = background();
        const PosedFace posed = pose_face(*basis_, p, camera_);
        const VisibilityBuffer vis = rasterize_face(*basis_, posed, camera_);

        // Hair: an ellipse hanging from the crown, drawn behind the face.
        const Eigen::Vector3d crown = p.rotation * Eigen::Vector3d(0.0, -0.85, 0.25) + p.translation;
        const Eigen::Vector2d anchor = project(crown, camera_);
        const double scale = camera_.focal_length_px / crown.z();
        const double rx = 0.95 * scale, ry = 0.55 * scale;
        const Eigen::Vector2d center = anchor + Eigen::Vector2d(hair_offset(f), 0.15 * scale);
        for (int y = 0; y < config_.height; ++y)
            for (int x = 0; x < config_.width; ++x)
            {
                const double dx = (x + 0.5 - center.x()) / rx, dy = (y + 0.5 - center.y()) / ry;
                const double r2 = dx * dx + dy * dy;
                if (r2 < 1.0)
                {
                    // Soft edge over the outer 15% of the radius.
                    const double a = std::clamp((1.0 - std::sqrt(r2)) / 0.15, 0.0, 1.0);
                    const double shade = 0.85 + 0.15 * dy;
                    for (int k = 0; k < 3; ++k)
                        img.at(x, y, k) = (1.0 - a) * img.at(x, y, k) + a * shade * hair_color_[k];
                }
            }
        for (int y = 0; y < config_.height; ++y)
            for (int x = 0; x < config_.width; ++x)
            {
                const Fragment& frag = vis.at(x, y);
                if (!frag.covered())
                    continue;
                const Eigen::Vector3d c = shade_fragment(*basis_, posed, p, frag);
                for (int k = 0; k < 3; ++k)
                    img.at(x, y, k) = c[k];
            }
        return img;
    }

    /// Observed frame: clean composite plus seeded Gaussian noise, rounded to 8 bits.
    RasterImage frame(int f) const
    {
        RasterImage img = clean_frame(f);
        std::mt19937_64 rng(noise_seed_ ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(f + 1)));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& v : img.data)
        {
            const double n = config_.noise > 0.0 ? config_.noise * normal(rng) : 0.0;
            v = std::clamp(std::round(v + n), 0.0, 255.0);
        }
        return img;
    }

    /// Landmark detections: exact projections plus seeded pixel noise.
    LandmarkSet landmarks(int f, const std::vector<int>& vertices) const
    {
        LandmarkSet set = landmarks_from_parameters(*basis_, parameters(f), camera_, vertices);
        std::mt19937_64 rng(noise_seed_ + 0x51ull * static_cast<std::uint64_t>(f + 1));
        std::normal_distribution<double> normal(0.0, config_.landmark_noise > 0.0 ? config_.landmark_noise : 1.0);
        if (config_.landmark_noise > 0.0)
            for (auto& l : set.landmarks)
                l.position += Eigen::Vector2d(normal(rng), normal(rng));
        return set;
    }

private:
    void build_hair_swing()
    {
        hair_swing_.resize(static_cast<std::size_t>(config_.frames));
        const double a = 1.0 / config_.hair_lag;
        double ema = config_.yaw_amplitude * yaw_(0.0);
        for (int f = 0; f < config_.frames; ++f)
        {
            const double yaw = config_.yaw_amplitude * yaw_(static_cast<double>(f));
            ema += a * (yaw - ema);
            hair_swing_[static_cast<std::size_t>(f)] = -config_.hair_swing * config_.width * (yaw - ema);
        }
    }

    const FaceBasis* basis_;
    SceneConfig config_;
    CameraIntrinsics camera_;
    FaceParameters identity_;
    SmoothCurve yaw_, pitch_, roll_, tx_, ty_, tz_, gaze_x_, gaze_y_;
    std::array<SmoothCurve, animated_expressions> expression_;
    std::array<Eigen::Vector3d, 4> background_colors_;
    std::array<Eigen::Vector3d, 2> blobs_;
    Eigen::Vector3d hair_color_;
    std::uint64_t noise_seed_ = 0;
    std::vector<double> hair_swing_;
};

} // namespace dvp

#endif /* DVP_PIPELINE_SYNTHETIC_SCENE_HPP */
