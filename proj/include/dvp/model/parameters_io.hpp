/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/model/parameters_io.hpp
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

#ifndef DVP_MODEL_PARAMETERS_IO_HPP
#define DVP_MODEL_PARAMETERS_IO_HPP

#include "dvp/core/error.hpp"
#include "dvp/model/face_parameters.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace dvp {

namespace detail {

template <typename Range>
nlohmann::json finite_array(const Range& values, const char* group)
{
    nlohmann::json a = nlohmann::json::array();
    for (double v : values)
    {
        require(std::isfinite(v), ErrorCode::non_finite, std::string("non-finite value in parameter group ") + group);
        a.push_back(v);
    }
    return a;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j, const char* group)
{
    require(j.contains(group) && j.at(group).is_array(), ErrorCode::format_error,
            std::string("missing parameter group '") + group + "'");
    const auto& a = j.at(group);
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

template <std::size_t N>
std::array<double, N> array_from_json(const nlohmann::json& j, const char* group)
{
    const Eigen::VectorXd v = vector_from_json(j, group);
    require(v.size() == static_cast<Eigen::Index>(N), ErrorCode::format_error,
            std::string("parameter group '") + group + "' has wrong length");
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = v[static_cast<Eigen::Index>(i)];
    return out;
}

} // namespace detail

/// Named-group JSON form; doubles are written in shortest round-trip form.
inline nlohmann::json to_json(const FaceParameters& p)
{
    const auto& q = p.rotation;
    return nlohmann::json{
        {"rotation", detail::finite_array(std::array<double, 4>{q.w(), q.x(), q.y(), q.z()}, "rotation")},
        {"translation", detail::finite_array(p.translation, "translation")},
        {"alpha", detail::finite_array(p.alpha, "alpha")},
        {"beta", detail::finite_array(p.beta, "beta")},
        {"delta", detail::finite_array(p.delta, "delta")},
        {"gaze", detail::finite_array(p.gaze, "gaze")},
        {"sh", detail::finite_array(p.sh, "sh")},
    };
}

inline FaceParameters parameters_from_json(const nlohmann::json& j)
{
    FaceParameters p;
    const auto q = detail::array_from_json<4>(j, "rotation");
    p.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
    const auto t = detail::array_from_json<3>(j, "translation");
    p.translation = Eigen::Vector3d(t[0], t[1], t[2]);
    p.alpha = detail::vector_from_json(j, "alpha");
    p.beta = detail::vector_from_json(j, "beta");
    p.delta = detail::vector_from_json(j, "delta");
    p.gaze = detail::array_from_json<gaze_dimension>(j, "gaze");
    p.sh = detail::array_from_json<sh_coefficient_count>(j, "sh");
    return p;
}

/// One line of a parameter sequence file.
struct ParameterRecord
{
    FaceParameters params;
    bool flagged = false;
};

inline void write_parameter_sequence(const std::filesystem::path& path, const std::vector<ParameterRecord>& records)
{
    std::ofstream out(path);
    require(out.good(), ErrorCode::io_error, "cannot open " + path.string() + " for writing");
    for (std::size_t f = 0; f < records.size(); ++f)
    {
        nlohmann::json j = to_json(records[f].params);
        j["frame"] = f;
        j["flagged"] = records[f].flagged;
        out << j.dump() << '\n';
    }
    require(out.good(), ErrorCode::io_error, "write failed: " + path.string());
}

inline void write_parameter_sequence(const std::filesystem::path& path, const std::vector<FaceParameters>& sequence)
{
    std::vector<ParameterRecord> records;
    records.reserve(sequence.size());
    for (const auto& p : sequence)
        records.push_back({p, false});
    write_parameter_sequence(path, records);
}

inline std::vector<ParameterRecord> read_parameter_records(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), ErrorCode::io_error, "cannot open " + path.string());
    std::vector<ParameterRecord> records;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line))
    {
        ++line_number;
        if (line.empty())
            continue;
        nlohmann::json j;
        try
        {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e)
        {
            throw Error(ErrorCode::format_error, path.string() + ":" + std::to_string(line_number) + ": " + e.what());
        }
        ParameterRecord r;
        r.params = parameters_from_json(j);
        r.flagged = j.value("flagged", false);
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<FaceParameters> read_parameter_sequence(const std::filesystem::path& path)
{
    std::vector<FaceParameters> out;
    for (auto& r : read_parameter_records(path))
        out.push_back(std::move(r.params));
    return out;
}

} // namespace dvp

#endif /* DVP_MODEL_PARAMETERS_IO_HPP */
