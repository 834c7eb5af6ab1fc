/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/fitting/landmarks.hpp
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

#ifndef DVP_FITTING_LANDMARKS_HPP
#define DVP_FITTING_LANDMARKS_HPP

#include "dvp/core/error.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/render/camera.hpp"
#include "dvp/render/face_renderer.hpp"

#include "Eigen/Core"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace dvp {

inline constexpr int landmark_count = 66;

struct Landmark
{
    Eigen::Vector2d position = Eigen::Vector2d::Zero(); ///< pixels
    int vertex = 0;
    double confidence = 1.0;
};

/// Sparse 2D detections tied to model vertices, plus per-eye iris centers.
struct LandmarkSet
{
    std::vector<Landmark> landmarks;
    std::array<Eigen::Vector2d, 2> iris{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
};

inline void validate(const LandmarkSet& set, const FaceBasis& basis)
{
    require(static_cast<int>(set.landmarks.size()) == landmark_count, ErrorCode::invalid_argument,
            "landmark set must have exactly 66 entries, has " + std::to_string(set.landmarks.size()));
    for (const auto& l : set.landmarks)
    {
        require(l.vertex >= 0 && l.vertex < basis.vertex_count, ErrorCode::out_of_range,
                "landmark vertex index " + std::to_string(l.vertex) + " out of range");
        require(l.confidence >= 0.0 && l.confidence <= 1.0, ErrorCode::out_of_range,
                "landmark confidence outside [0, 1]");
    }
}

/**
 * 66 well-spread vertices on the face side of the template, picked by
 * farthest-point sampling starting from the most frontal vertex.
 */
inline std::vector<int> default_landmark_vertices(const FaceBasis& basis)
{
    std::vector<int> candidates;
    for (int i = 0; i < basis.vertex_count; ++i)
    {
        const Eigen::Vector3d p = basis.average_vertex(i);
        if (p.z() < -0.35 && p.y() > -0.6)
            candidates.push_back(i);
    }
    if (static_cast<int>(candidates.size()) < landmark_count)
    {
        candidates.resize(static_cast<std::size_t>(basis.vertex_count));
        for (int i = 0; i < basis.vertex_count; ++i)
            candidates[i] = i;
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](int a, int b) { return basis.average_vertex(a).z() < basis.average_vertex(b).z(); });
    }
    int first = candidates.front();
    for (int c : candidates)
        if (basis.average_vertex(c).z() < basis.average_vertex(first).z())
            first = c;

    std::vector<int> chosen{first};
    std::vector<double> distance(candidates.size(), std::numeric_limits<double>::infinity());
    while (static_cast<int>(chosen.size()) < landmark_count)
    {
        const Eigen::Vector3d last = basis.average_vertex(chosen.back());
        std::size_t best = 0;
        for (std::size_t k = 0; k < candidates.size(); ++k)
        {
            distance[k] = std::min(distance[k], (basis.average_vertex(candidates[k]) - last).norm());
            if (distance[k] > distance[best])
                best = k;
        }
        chosen.push_back(candidates[best]);
    }
    return chosen;
}

/**
 * Noise-free detections for known parameters: exact projections of the model
 * vertices and iris centers at the rendered pupil positions.
 */
inline LandmarkSet landmarks_from_parameters(const FaceBasis& basis, const FaceParameters& params,
                                             const CameraIntrinsics& cam, const std::vector<int>& vertices)
{
    require(static_cast<int>(vertices.size()) == landmark_count, ErrorCode::invalid_argument,
            "landmark vertex list must have 66 entries");
    LandmarkSet set;
    const Eigen::VectorXd model = evaluate_geometry(basis, params.alpha, params.delta);
    for (int v : vertices)
    {
        const Eigen::Vector3d x = params.rotation * model.segment<3>(3 * v) + params.translation;
        Landmark l;
        l.vertex = v;
        if (x.z() > near_plane)
            l.position = project(x, cam);
        else
            l.confidence = 0.0;
        set.landmarks.push_back(l);
    }
    const auto layout = gaze_layout(basis, params, cam, model);
    for (int e = 0; e < 2; ++e)
        set.iris[e] = layout[e].visible ? layout[e].pupil_center : layout[e].center;
    return set;
}

inline nlohmann::json to_json(const LandmarkSet& set)
{
    nlohmann::json points = nlohmann::json::array();
    for (const auto& l : set.landmarks)
        points.push_back({{"x", l.position.x()}, {"y", l.position.y()}, {"vertex", l.vertex}, {"confidence", l.confidence}});
    return {{"landmarks", points},
            {"iris_left", {set.iris[0].x(), set.iris[0].y()}},
            {"iris_right", {set.iris[1].x(), set.iris[1].y()}}};
}

inline LandmarkSet landmarks_from_json(const nlohmann::json& j)
{
    try
    {
        LandmarkSet set;
        for (const auto& p : j.at("landmarks"))
        {
            Landmark l;
            l.position = {p.at("x").get<double>(), p.at("y").get<double>()};
            l.vertex = p.at("vertex").get<int>();
            l.confidence = p.value("confidence", 1.0);
            set.landmarks.push_back(l);
        }
        set.iris[0] = {j.at("iris_left").at(0).get<double>(), j.at("iris_left").at(1).get<double>()};
        set.iris[1] = {j.at("iris_right").at(0).get<double>(), j.at("iris_right").at(1).get<double>()};
        require(static_cast<int>(set.landmarks.size()) == landmark_count, ErrorCode::format_error,
                "landmark file must hold exactly 66 landmarks");
        return set;
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, std::string("malformed landmark document: ") + e.what());
    }
}

inline void write_landmarks(const std::filesystem::path& path, const LandmarkSet& set)
{
    std::ofstream out(path);
    require(out.good(), ErrorCode::io_error, "cannot open " + path.string() + " for writing");
    out << to_json(set).dump() << '\n';
}

inline LandmarkSet read_landmarks(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), ErrorCode::io_error, "cannot open " + path.string());
    try
    {
        return landmarks_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e)
    {
        throw Error(ErrorCode::format_error, path.string() + ": " + e.what());
    }
}

} // namespace dvp

#endif /* DVP_FITTING_LANDMARKS_HPP */
