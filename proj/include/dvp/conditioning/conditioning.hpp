/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/conditioning/conditioning.hpp
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

#ifndef DVP_CONDITIONING_CONDITIONING_HPP
#define DVP_CONDITIONING_CONDITIONING_HPP

#include "dvp/core/error.hpp"
#include "dvp/core/image.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/render/camera.hpp"
#include "dvp/render/face_renderer.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dvp {

inline constexpr int default_window_size = 11;
inline constexpr int channels_per_frame = 9;

/// [0, 255] -> [-1, +1] by x / 127.5 - 1.
inline RasterImage normalize(const RasterImage& raw)
{
    require(raw.space == ColorSpace::raw, ErrorCode::invalid_argument, "normalize expects a raw image");
    RasterImage out(raw.width, raw.height, ColorSpace::normalized);
    for (std::size_t i = 0; i < raw.data.size(); ++i)
    {
        const double v = raw.data[i];
        require(v >= 0.0 && v <= 255.0, ErrorCode::out_of_range,
                "sample " + std::to_string(v) + " outside [0, 255]");
        out.data[i] = v / 127.5 - 1.0;
    }
    return out;
}

/// [-1, +1] -> integral [0, 255], rounding to nearest.
inline RasterImage denormalize(const RasterImage& img)
{
    require(img.space == ColorSpace::normalized, ErrorCode::invalid_argument, "denormalize expects a normalized image");
    RasterImage out(img.width, img.height, ColorSpace::raw);
    for (std::size_t i = 0; i < img.data.size(); ++i)
    {
        const double v = img.data[i];
        require(v >= -1.0 && v <= 1.0, ErrorCode::out_of_range, "sample " + std::to_string(v) + " outside [-1, 1]");
        out.data[i] = std::round((v + 1.0) * 127.5);
    }
    return out;
}

/// The three normalized conditioning images of one frame.
struct ConditioningFrame
{
    RasterImage color;
    RasterImage correspondence;
    RasterImage gaze;

    const RasterImage& image(int kind) const { return kind == 0 ? color : kind == 1 ? correspondence : gaze; }
};

inline ConditioningFrame render_conditioning_frame(const FaceBasis& basis, const FaceParameters& params,
                                                   const CameraIntrinsics& cam)
{
    return {normalize(rasterize_color(basis, params, cam)), normalize(rasterize_correspondence(basis, params, cam)),
            normalize(rasterize_gaze(basis, params, cam))};
}

/**
 * Space-time conditioning volume, channel-major (C, H, W). Slot s (0 oldest,
 * window_size - 1 current) holds channels 9 s .. 9 s + 8 as color RGB,
 * correspondence RGB, gaze RGB.
 */
struct ConditioningWindow
{
    int width = 0;
    int height = 0;
    int window_size = 0;
    std::vector<float> data;

    int channels() const noexcept { return channels_per_frame * window_size; }

    std::size_t index(int c, int y, int x) const noexcept
    {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }

    float at(int c, int y, int x) const noexcept { return data[index(c, y, x)]; }

    friend bool operator==(const ConditioningWindow&, const ConditioningWindow&) = default;
};

inline void check_structure(const ConditioningWindow& w)
{
    require(w.window_size >= 1 && w.width > 0 && w.height > 0, ErrorCode::invalid_argument,
            "conditioning window needs positive dimensions");
    require(w.data.size() == static_cast<std::size_t>(w.channels()) * w.width * w.height, ErrorCode::shape_mismatch,
            "conditioning window data does not hold 9 N_w channels");
}

inline ConditioningWindow assemble_window(std::span<const ConditioningFrame* const> frames)
{
    require(!frames.empty(), ErrorCode::invalid_argument, "a window needs at least one frame");
    const int w = frames.front()->color.width, h = frames.front()->color.height;
    ConditioningWindow out{w, h, static_cast<int>(frames.size()), {}};
    out.data.resize(static_cast<std::size_t>(out.channels()) * w * h);
    for (int s = 0; s < out.window_size; ++s)
    {
        for (int kind = 0; kind < 3; ++kind)
        {
            const RasterImage& img = frames[static_cast<std::size_t>(s)]->image(kind);
            require(img.width == w && img.height == h, ErrorCode::shape_mismatch,
                    "conditioning frames differ in size");
            require(img.space == ColorSpace::normalized, ErrorCode::invalid_argument,
                    "conditioning frames must be normalized");
            for (int ch = 0; ch < 3; ++ch)
            {
                const int c = channels_per_frame * s + 3 * kind + ch;
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        out.data[out.index(c, y, x)] = static_cast<float>(img.at(x, y, ch));
            }
        }
    }
    check_structure(out);
    return out;
}

inline ConditioningWindow assemble_window(std::span<const ConditioningFrame> frames)
{
    std::vector<const ConditioningFrame*> ptrs;
    for (const auto& f : frames)
        ptrs.push_back(&f);
    return assemble_window(std::span<const ConditioningFrame* const>(ptrs));
}

enum class WindowPadding { replicate, none };

/**
 * Conditioning windows over a parameter sequence, rendered on demand and
 * cached per frame. With replicate padding window i covers frames
 * i - N_w + 1 .. i with negative indices clamped to 0; without padding window
 * i covers i .. i + N_w - 1.
 */
class WindowSequence
{
public:
    WindowSequence(const FaceBasis& basis, std::vector<FaceParameters> params, const CameraIntrinsics& cam,
                   int window_size, WindowPadding padding)
        : basis_(&basis), params_(std::move(params)), cam_(cam), window_size_(window_size), padding_(padding),
          cache_(params_.size())
    {
        require(!params_.empty(), ErrorCode::invalid_argument, "parameter sequence is empty");
        require(window_size >= 1, ErrorCode::invalid_argument, "window size must be positive");
        validate(cam);
    }

    std::size_t size() const noexcept
    {
        if (padding_ == WindowPadding::replicate)
            return params_.size();
        return params_.size() >= static_cast<std::size_t>(window_size_) ? params_.size() - window_size_ + 1 : 0;
    }

    /// Index of the parameter frame whose conditioning is the current (last) slot of window i.
    std::size_t current_frame(std::size_t i) const
    {
        return padding_ == WindowPadding::replicate ? i : i + window_size_ - 1;
    }

    const ConditioningFrame& frame(std::size_t f)
    {
        require(f < params_.size(), ErrorCode::out_of_range, "frame index out of range");
        if (!cache_[f])
            cache_[f] = render_conditioning_frame(*basis_, params_[f], cam_);
        return *cache_[f];
    }

    ConditioningWindow window(std::size_t i)
    {
        require(i < size(), ErrorCode::out_of_range, "window index out of range");
        const auto last = static_cast<std::ptrdiff_t>(current_frame(i));
        std::vector<const ConditioningFrame*> slots;
        for (std::ptrdiff_t k = last - window_size_ + 1; k <= last; ++k)
            slots.push_back(&frame(static_cast<std::size_t>(std::max<std::ptrdiff_t>(k, 0))));
        return assemble_window(std::span<const ConditioningFrame* const>(slots));
    }

    /// Drops cached renders older than frame f.
    void release_before(std::size_t f)
    {
        for (std::size_t k = 0; k < std::min(f, cache_.size()); ++k)
            cache_[k].reset();
    }

private:
    const FaceBasis* basis_;
    std::vector<FaceParameters> params_;
    CameraIntrinsics cam_;
    int window_size_;
    WindowPadding padding_;
    std::vector<std::optional<ConditioningFrame>> cache_;
};

inline std::vector<ConditioningWindow> sliding_windows(const std::vector<FaceParameters>& params,
                                                       const FaceBasis& basis, const CameraIntrinsics& cam,
                                                       int window_size, WindowPadding padding)
{
    WindowSequence seq(basis, params, cam, window_size, padding);
    std::vector<ConditioningWindow> out;
    for (std::size_t i = 0; i < seq.size(); ++i)
        out.push_back(seq.window(i));
    return out;
}

struct TrainingPair
{
    ConditioningWindow window;
    RasterImage ground_truth; ///< normalized
};

/// N_t - (N_w - 1) pairs: the window ending at frame f with ground-truth frame f.
inline std::vector<TrainingPair> build_corpus(const std::vector<FaceParameters>& params,
                                              const std::vector<RasterImage>& frames, const FaceBasis& basis,
                                              const CameraIntrinsics& cam, int window_size)
{
    require(params.size() == frames.size(), ErrorCode::shape_mismatch,
            "need one parameter set per video frame (" + std::to_string(params.size()) + " vs " +
                std::to_string(frames.size()) + ")");
    require(window_size >= 1 && params.size() >= static_cast<std::size_t>(window_size), ErrorCode::invalid_argument,
            "sequence of " + std::to_string(params.size()) + " frames is shorter than the window size " +
                std::to_string(window_size));
    WindowSequence seq(basis, params, cam, window_size, WindowPadding::none);
    std::vector<TrainingPair> corpus;
    corpus.reserve(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i)
    {
        const RasterImage& gt = frames[seq.current_frame(i)];
        require(gt.width == cam.width && gt.height == cam.height, ErrorCode::shape_mismatch,
                "video frame size does not match the camera");
        corpus.push_back({seq.window(i), normalize(gt)});
        seq.release_before(i + 1);
    }
    return corpus;
}

} // namespace dvp

#endif /* DVP_CONDITIONING_CONDITIONING_HPP */
