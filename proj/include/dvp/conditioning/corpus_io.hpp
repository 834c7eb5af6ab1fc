/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/conditioning/corpus_io.hpp
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

#ifndef DVP_CONDITIONING_CORPUS_IO_HPP
#define DVP_CONDITIONING_CORPUS_IO_HPP

#include "dvp/conditioning/conditioning.hpp"
#include "dvp/core/binary_io.hpp"
#include "dvp/core/error.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dvp {

inline constexpr std::uint32_t corpus_format_version = 1;

/*
 * "DVPC" u32 version, u32 W, u32 H, u32 N_w,
 * f32 volume (9 N_w, H, W), f32 ground truth (3, H, W), all little-endian.
 */
inline std::vector<std::uint8_t> serialize_pair(const TrainingPair& pair)
{
    check_structure(pair.window);
    const int w = pair.window.width, h = pair.window.height;
    require(pair.ground_truth.width == w && pair.ground_truth.height == h, ErrorCode::shape_mismatch,
            "ground truth and window differ in size");
    BinaryWriter out;
    out.write_magic("DVPC");
    out.write(corpus_format_version);
    out.write(static_cast<std::uint32_t>(w));
    out.write(static_cast<std::uint32_t>(h));
    out.write(static_cast<std::uint32_t>(pair.window.window_size));
    out.write_span(std::span<const float>(pair.window.data));
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.write(static_cast<float>(pair.ground_truth.at(x, y, c)));
    return out.bytes();
}

inline TrainingPair deserialize_pair(std::vector<std::uint8_t> bytes)
{
    BinaryReader in(std::move(bytes));
    in.expect_magic("DVPC");
    const auto version = in.read<std::uint32_t>();
    require(version == corpus_format_version, ErrorCode::format_error,
            "unsupported corpus version " + std::to_string(version));
    const auto w = in.read<std::uint32_t>(), h = in.read<std::uint32_t>(), nw = in.read<std::uint32_t>();
    require(w > 0 && h > 0 && nw > 0 && w <= 1u << 14 && h <= 1u << 14 && nw <= 1024, ErrorCode::format_error,
            "implausible corpus header");
    TrainingPair pair;
    pair.window = {static_cast<int>(w), static_cast<int>(h), static_cast<int>(nw), {}};
    pair.window.data = in.read_vector<float>(static_cast<std::size_t>(channels_per_frame) * nw * w * h);
    pair.ground_truth = RasterImage(static_cast<int>(w), static_cast<int>(h), ColorSpace::normalized);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < static_cast<int>(h); ++y)
            for (int x = 0; x < static_cast<int>(w); ++x)
                pair.ground_truth.at(x, y, c) = in.read<float>();
    require(in.at_end(), ErrorCode::format_error, "trailing bytes after corpus pair");
    return pair;
}

inline std::filesystem::path corpus_pair_path(const std::filesystem::path& root, const std::string& name,
                                              std::size_t index)
{
    char file[32];
    std::snprintf(file, sizeof file, "pair_%06zu.dvpc", index);
    return root / name / file;
}

/// Writes root/<name>/pair_000000.dvpc, ... and returns the number of files.
inline std::size_t save_corpus(const std::filesystem::path& root, const std::string& name,
                               const std::vector<TrainingPair>& corpus)
{
    std::error_code ec;
    std::filesystem::create_directories(root / name, ec);
    require(!ec, ErrorCode::io_error, "cannot create " + (root / name).string() + ": " + ec.message());
    for (std::size_t i = 0; i < corpus.size(); ++i)
    {
        write_file_bytes(corpus_pair_path(root, name, i), serialize_pair(corpus[i]));
    }
    return corpus.size();
}

inline std::vector<TrainingPair> load_corpus(const std::filesystem::path& root, const std::string& name)
{
    require(std::filesystem::is_directory(root / name), ErrorCode::io_error,
            "corpus directory " + (root / name).string() + " does not exist");
    std::vector<TrainingPair> corpus;
    for (std::size_t i = 0;; ++i)
    {
        const auto path = corpus_pair_path(root, name, i);
        if (!std::filesystem::exists(path))
            break;
        corpus.push_back(deserialize_pair(read_file_bytes(path)));
    }
    return corpus;
}

} // namespace dvp

#endif /* DVP_CONDITIONING_CORPUS_IO_HPP */
