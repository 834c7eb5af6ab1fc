/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/core/png_io.hpp
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

#ifndef DVP_CORE_PNG_IO_HPP
#define DVP_CORE_PNG_IO_HPP

#include "dvp/core/error.hpp"
#include "dvp/core/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace dvp {

namespace detail {

inline std::vector<std::uint8_t> to_rgb8(const RasterImage& image)
{
    require(image.space == ColorSpace::raw, ErrorCode::invalid_argument,
            "PNG output expects a raw [0,255] image; denormalize first");
    std::vector<std::uint8_t> bytes(image.data.size());
    for (std::size_t i = 0; i < image.data.size(); ++i)
    {
        const double v = std::clamp(std::nearbyint(image.data[i]), 0.0, 255.0);
        bytes[i] = static_cast<std::uint8_t>(v);
    }
    return bytes;
}

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t length)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

inline void png_flush_noop(png_structp) {}

struct PngReadBuffer
{
    const std::uint8_t* data;
    std::size_t size;
    std::size_t offset;
};

inline void png_read_from_buffer(png_structp png, png_bytep out, png_size_t length)
{
    auto* buffer = static_cast<PngReadBuffer*>(png_get_io_ptr(png));
    if (buffer->offset + length > buffer->size)
    {
        png_error(png, "truncated PNG stream");
    }
    std::copy_n(buffer->data + buffer->offset, length, out);
    buffer->offset += length;
}

} // namespace detail

/**
 * Encodes a raw image as an 8-bit RGB PNG. Samples are rounded to the nearest
 * integer and clamped to [0, 255]. The encoding carries no timestamps, so
 * equal images give byte-identical streams.
 */
inline std::vector<std::uint8_t> encode_png(const RasterImage& image)
{
    const auto pixels = detail::to_rgb8(image);
    std::vector<std::uint8_t> out;

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::io_error, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr)
    {
        png_destroy_write_struct(&png, nullptr);
        throw Error(ErrorCode::io_error, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::io_error, "PNG encoding failed");
    }
    png_set_write_fn(png, &out, detail::png_write_to_vector, detail::png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
    for (int y = 0; y < image.height; ++y)
    {
        rows[y] = const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(y) * image.width * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

/// Decodes an 8-bit PNG (gray, RGB or RGBA; alpha is dropped) into a raw image.
inline RasterImage decode_png(const std::vector<std::uint8_t>& bytes)
{
    require(bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0, ErrorCode::format_error,
            "not a PNG stream");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::io_error, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr)
    {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error(ErrorCode::io_error, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::format_error, "PNG decoding failed");
    }
    detail::PngReadBuffer buffer{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &buffer, detail::png_read_from_buffer);
    png_read_info(png, info);

    const auto width = static_cast<int>(png_get_image_width(png, info));
    const auto height = static_cast<int>(png_get_image_height(png, info));
    const auto color_type = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16)
        png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color_type & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height * 3);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
    {
        rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RasterImage image(width, height, ColorSpace::raw);
    std::copy(pixels.begin(), pixels.end(), image.data.begin());
    return image;
}

inline void write_png(const std::filesystem::path& path, const RasterImage& image)
{
    const auto bytes = encode_png(image);
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    require(file != nullptr, ErrorCode::io_error, "cannot open " + path.string() + " for writing");
    require(std::fwrite(bytes.data(), 1, bytes.size(), file.get()) == bytes.size(), ErrorCode::io_error,
            "short write to " + path.string());
}

inline RasterImage read_png(const std::filesystem::path& path)
{
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.string().c_str(), "rb"), &std::fclose);
    require(file != nullptr, ErrorCode::io_error, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes;
    std::uint8_t chunk[65536];
    std::size_t n = 0;
    while ((n = std::fread(chunk, 1, sizeof(chunk), file.get())) > 0)
    {
        bytes.insert(bytes.end(), chunk, chunk + n);
    }
    return decode_png(bytes);
}

} // namespace dvp

#endif /* DVP_CORE_PNG_IO_HPP */
