/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/pipeline/dataset_io.hpp
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

#ifndef DVP_PIPELINE_DATASET_IO_HPP
#define DVP_PIPELINE_DATASET_IO_HPP

#include "dvp/core/error.hpp"
#include "dvp/core/image.hpp"
#include "dvp/core/png_io.hpp"
#include "dvp/fitting/landmarks.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/parameters_io.hpp"
#include "dvp/model/synthesize_basis.hpp"
#include "dvp/render/camera.hpp"

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace dvp {

/// How to rebuild the face model: the synthetic basis is a pure function of these.
struct BasisSpec
{
    std::uint64_t seed = 7;
    int vertices = 512;
    BasisDims dims;

    friend bool operator==(const BasisSpec& a, const BasisSpec& b)
    {
        return a.seed == b.seed && a.vertices == b.vertices && a.dims.geometry == b.dims.geometry &&
               a.dims.reflectance == b.dims.reflectance && a.dims.expression == b.dims.expression;
    }
};

inline FaceBasis make_basis(const BasisSpec& spec)
{
    return synthesize_basis(spec.seed, spec.vertices, spec.dims);
}

inline nlohmann::json to_json(const BasisSpec& b)
{
    return {{"seed", b.seed},
            {"vertices", b.vertices},
            {"geometry", b.dims.geometry},
            {"reflectance", b.dims.reflectance},
            {"expression", b.dims.expression}};
}

inline BasisSpec basis_spec_from_json(const nlohmann::json& j, BasisSpec b = {})
{
    b.seed = j.value("seed", b.seed);
    b.vertices = j.value("vertices", b.vertices);
    b.dims.geometry = j.value("geometry", b.dims.geometry);
    b.dims.reflectance = j.value("reflectance", b.dims.reflectance);
    b.dims.expression = j.value("expression", b.dims.expression);
    return b;
}

inline nlohmann::json to_json(const CameraIntrinsics& c)
{
    return {{"width", c.width}, {"height", c.height}, {"focal_length_px", c.focal_length_px}, {"cx", c.cx}, {"cy", c.cy}};
}

/// Width and height are required; the rest defaults to default_camera.
inline CameraIntrinsics camera_from_json(const nlohmann::json& j)
{
    CameraIntrinsics c = default_camera(j.at("width").get<int>(), j.at("height").get<int>());
    c.focal_length_px = j.value("focal_length_px", c.focal_length_px);
    c.cx = j.value("cx", c.cx);
    c.cy = j.value("cy", c.cy);
    validate(c);
    return c;
}

inline std::string numbered(const char* prefix, std::size_t index, const char* ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06zu.%s", prefix, index, ext);
    return buf;
}

inline void ensure_directory(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
}

/// frame_000000.png, frame_000001.png, ...
inline void write_frames(const std::filesystem::path& dir, const std::vector<RasterImage>& frames)
{
    ensure_directory(dir);
    for (std::size_t f = 0; f < frames.size(); ++f)
        write_png(dir / numbered("frame", f, "png"), frames[f]);
}

/// Reads the contiguous run frame_000000.png, frame_000001.png, ...
inline std::vector<RasterImage> read_frames(const std::filesystem::path& dir)
{
    require(std::filesystem::is_directory(dir), ErrorCode::io_error, "frame directory " + dir.string() + " does not exist");
    std::vector<RasterImage> frames;
    for (std::size_t f = 0;; ++f)
    {
        const auto path = dir / numbered("frame", f, "png");
        if (!std::filesystem::exists(path))
            break;
        frames.push_back(read_png(path));
        require(frames.back().width == frames.front().width && frames.back().height == frames.front().height,
                ErrorCode::shape_mismatch, path.string() + " differs in size from the first frame");
    }
    require(!frames.empty(), ErrorCode::io_error, "no frame_000000.png in " + dir.string());
    return frames;
}

inline void write_landmark_dir(const std::filesystem::path& dir, const std::vector<LandmarkSet>& sets)
{
    ensure_directory(dir);
    for (std::size_t f = 0; f < sets.size(); ++f)
        write_landmarks(dir / numbered("frame", f, "json"), sets[f]);
}

inline std::vector<LandmarkSet> read_landmark_dir(const std::filesystem::path& dir, std::size_t count)
{
    require(std::filesystem::is_directory(dir), ErrorCode::io_error,
            "landmark directory " + dir.string() + " does not exist");
    std::vector<LandmarkSet> sets;
    for (std::size_t f = 0; f < count; ++f)
    {
        const auto path = dir / numbered("frame", f, "json");
        require(std::filesystem::exists(path), ErrorCode::io_error, "missing landmarks " + path.string());
        sets.push_back(read_landmarks(path));
    }
    return sets;
}

/*
 * Dataset directory:
 *   dataset.json          camera, basis spec, frame count
 *   frames/frame_NNNNNN.png
 *   landmarks/frame_NNNNNN.json
 *   parameters.jsonl      ground truth, synthetic datasets only
 */
struct Dataset
{
    CameraIntrinsics camera;
    BasisSpec basis;
    std::vector<RasterImage> frames;
    std::vector<LandmarkSet> landmarks;
    std::vector<FaceParameters> ground_truth;
};

inline constexpr int dataset_format_version = 1;

inline void write_dataset(const std::filesystem::path& dir, const Dataset& d)
{
    require(d.frames.size() == d.landmarks.size(), ErrorCode::shape_mismatch, "one landmark set per frame");
    require(d.ground_truth.empty() || d.ground_truth.size() == d.frames.size(), ErrorCode::shape_mismatch,
            "ground truth must cover every frame");
    ensure_directory(dir);
    const nlohmann::json meta{{"version", dataset_format_version},
                              {"frames", d.frames.size()},
                              {"camera", to_json(d.camera)},
                              {"basis", to_json(d.basis)},
                              {"ground_truth", !d.ground_truth.empty()}};
    std::ofstream out(dir / "dataset.json", std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::io_error, "cannot write " + (dir / "dataset.json").string());
    out << meta.dump(2) << '\n';
    out.close();
    write_frames(dir / "frames", d.frames);
    write_landmark_dir(dir / "landmarks", d.landmarks);
    if (!d.ground_truth.empty())
        write_parameter_sequence(dir / "parameters.jsonl", d.ground_truth);
}

inline Dataset read_dataset(const std::filesystem::path& dir)
{
    const auto meta_path = dir / "dataset.json";
    require(std::filesystem::exists(meta_path), ErrorCode::io_error, "no dataset.json in " + dir.string());
    nlohmann::json meta;
    try
    {
        std::ifstream in(meta_path);
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, meta_path.string() + ": " + e.what());
    }
    require(meta.value("version", 0) == dataset_format_version, ErrorCode::format_error,
            "unsupported dataset version in " + meta_path.string());
    Dataset d;
    try
    {
        d.camera = camera_from_json(meta.at("camera"));
        d.basis = basis_spec_from_json(meta.at("basis"));
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, meta_path.string() + ": " + e.what());
    }
    d.frames = read_frames(dir / "frames");
    require(d.frames.size() == meta.value("frames", std::size_t{0}), ErrorCode::io_error,
            "dataset lists " + std::to_string(meta.value("frames", std::size_t{0})) + " frames, found a run of " +
                std::to_string(d.frames.size()));
    require(d.frames.front().width == d.camera.width && d.frames.front().height == d.camera.height,
            ErrorCode::shape_mismatch, "frames do not match the dataset camera");
    d.landmarks = read_landmark_dir(dir / "landmarks", d.frames.size());
    if (std::filesystem::exists(dir / "parameters.jsonl"))
    {
        d.ground_truth = read_parameter_sequence(dir / "parameters.jsonl");
        require(d.ground_truth.size() == d.frames.size(), ErrorCode::shape_mismatch,
                "ground truth does not cover every frame");
    }
    return d;
}

} // namespace dvp

#endif /* DVP_PIPELINE_DATASET_IO_HPP */
