/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/core/image.hpp
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

#ifndef DVP_CORE_IMAGE_HPP
#define DVP_CORE_IMAGE_HPP

#include "dvp/core/error.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace dvp {

/// Value range a RasterImage's samples live in.
enum class ColorSpace {
    raw,        ///< [0, 255]
    normalized, ///< [-1, +1], black = -1, white = +1
};

/**
 * A 3-channel image with interleaved, row-major real samples.
 *
 * Sample (x, y, c) lives at data[(y * width + x) * 3 + c].
 */
struct RasterImage
{
    int width = 0;
    int height = 0;
    ColorSpace space = ColorSpace::raw;
    std::vector<double> data;

    static constexpr int channels = 3;

    RasterImage() = default;

    RasterImage(int width, int height, ColorSpace space = ColorSpace::raw)
        : width(width), height(height), space(space),
          data(static_cast<std::size_t>(width) * height * channels, space == ColorSpace::raw ? 0.0 : -1.0)
    {
        require(width > 0 && height > 0, ErrorCode::invalid_argument, "image dimensions must be positive");
    }

    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }

    std::size_t index(int x, int y, int c = 0) const noexcept
    {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }

    double& at(int x, int y, int c) noexcept { return data[index(x, y, c)]; }
    double at(int x, int y, int c) const noexcept { return data[index(x, y, c)]; }

    bool same_size(const RasterImage& other) const noexcept
    {
        return width == other.width && height == other.height;
    }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

inline void require_same_size(const RasterImage& a, const RasterImage& b, const std::string& what)
{
    require(a.same_size(b), ErrorCode::shape_mismatch,
            what + ": image sizes differ (" + std::to_string(a.width) + "x" + std::to_string(a.height) +
                " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) + ")");
}

} // namespace dvp

#endif /* DVP_CORE_IMAGE_HPP */
