/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/pipeline/project_config.hpp
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

#ifndef DVP_PIPELINE_PROJECT_CONFIG_HPP
#define DVP_PIPELINE_PROJECT_CONFIG_HPP

#include "dvp/conditioning/conditioning.hpp"
#include "dvp/core/error.hpp"
#include "dvp/fitting/solver.hpp"
#include "dvp/nn/trainer.hpp"
#include "dvp/pipeline/dataset_io.hpp"
#include "dvp/pipeline/synthetic_scene.hpp"
#include "dvp/transfer/transfer.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <string>

namespace dvp {

inline constexpr int project_config_version = 1;

struct ProjectPaths
{
    std::string frames;    ///< directory of frame_NNNNNN.png
    std::string landmarks; ///< directory of frame_NNNNNN.json
    std::string output;
};

struct ServiceConfig
{
    std::string bind = "127.0.0.1";
    int port = 8080;
    std::string request_log = "editor_requests.jsonl";
};

/// Everything a CLI run needs; each section falls back to its defaults when absent.
struct ProjectConfig
{
    ProjectPaths paths;
    int width = 64;
    int height = 64;
    BasisSpec basis;
    FitConfig solver;
    int window_size = default_window_size;
    nn::TrainConfig training;
    std::uint64_t init_seed = 1;
    double init_stddev = nn::init_stddev;
    TransferSpec transfer;
    ServiceConfig service;
    SceneConfig scene;

    CameraIntrinsics camera() const { return default_camera(width, height); }
};

inline nlohmann::json to_json(const FitConfig& c)
{
    return {{"w_photo", c.weights.photo},
            {"w_land", c.weights.land},
            {"w_reg", c.weights.reg},
            {"max_iters", c.max_iters},
            {"convergence", c.convergence},
            {"fd_step", c.fd_step},
            {"irls_epsilon", c.irls_epsilon},
            {"initial_damping", c.initial_damping},
            {"max_damping_steps", c.max_damping_steps},
            {"landmark_warmup_iters", c.landmark_warmup_iters}};
}

inline FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig c = {})
{
    c.weights.photo = j.value("w_photo", c.weights.photo);
    c.weights.land = j.value("w_land", c.weights.land);
    c.weights.reg = j.value("w_reg", c.weights.reg);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.convergence = j.value("convergence", c.convergence);
    c.fd_step = j.value("fd_step", c.fd_step);
    c.irls_epsilon = j.value("irls_epsilon", c.irls_epsilon);
    c.initial_damping = j.value("initial_damping", c.initial_damping);
    c.max_damping_steps = j.value("max_damping_steps", c.max_damping_steps);
    c.landmark_warmup_iters = j.value("landmark_warmup_iters", c.landmark_warmup_iters);
    validate(c.weights);
    require(c.max_iters >= 0 && c.convergence >= 0.0 && c.fd_step > 0.0 && c.irls_epsilon > 0.0 &&
                c.initial_damping > 0.0 && c.max_damping_steps >= 1 && c.landmark_warmup_iters >= 0,
            ErrorCode::out_of_range, "solver settings out of range");
    return c;
}

inline nlohmann::json to_json(const nn::TrainConfig& c)
{
    return {{"lambda_l1", c.lambda_l1},           {"batch_size", c.batch_size},
            {"iterations", c.iterations},         {"learning_rate", c.learning_rate},
            {"first_momentum", c.first_momentum}, {"second_momentum", c.second_momentum},
            {"seed", c.seed},                     {"checkpoint_interval", c.checkpoint_interval}};
}

inline nn::TrainConfig train_config_from_json(const nlohmann::json& j, nn::TrainConfig c = {})
{
    c.lambda_l1 = j.value("lambda_l1", c.lambda_l1);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.iterations = j.value("iterations", c.iterations);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.first_momentum = j.value("first_momentum", c.first_momentum);
    c.second_momentum = j.value("second_momentum", c.second_momentum);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
    nn::validate(c);
    return c;
}

inline nlohmann::json to_json(const SceneConfig& c)
{
    return {{"seed", c.seed},
            {"frames", c.frames},
            {"noise", c.noise},
            {"landmark_noise", c.landmark_noise},
            {"identity_scale", c.identity_scale},
            {"yaw_amplitude", c.yaw_amplitude},
            {"pitch_amplitude", c.pitch_amplitude},
            {"roll_amplitude", c.roll_amplitude},
            {"expression_amplitude", c.expression_amplitude},
            {"gaze_amplitude", c.gaze_amplitude},
            {"hair_swing", c.hair_swing},
            {"hair_lag", c.hair_lag}};
}

/// Image size comes from the project, not the scene section.
inline SceneConfig scene_config_from_json(const nlohmann::json& j, SceneConfig c = {})
{
    c.seed = j.value("seed", c.seed);
    c.frames = j.value("frames", c.frames);
    c.noise = j.value("noise", c.noise);
    c.landmark_noise = j.value("landmark_noise", c.landmark_noise);
    c.identity_scale = j.value("identity_scale", c.identity_scale);
    c.yaw_amplitude = j.value("yaw_amplitude", c.yaw_amplitude);
    c.pitch_amplitude = j.value("pitch_amplitude", c.pitch_amplitude);
    c.roll_amplitude = j.value("roll_amplitude", c.roll_amplitude);
    c.expression_amplitude = j.value("expression_amplitude", c.expression_amplitude);
    c.gaze_amplitude = j.value("gaze_amplitude", c.gaze_amplitude);
    c.hair_swing = j.value("hair_swing", c.hair_swing);
    c.hair_lag = j.value("hair_lag", c.hair_lag);
    return c;
}

inline nlohmann::json to_json(const ProjectConfig& c)
{
    return {{"version", project_config_version},
            {"paths", {{"frames", c.paths.frames}, {"landmarks", c.paths.landmarks}, {"output", c.paths.output}}},
            {"camera", {{"width", c.width}, {"height", c.height}}},
            {"basis", to_json(c.basis)},
            {"solver", to_json(c.solver)},
            {"window_size", c.window_size},
            {"training", to_json(c.training)},
            {"init_seed", c.init_seed},
            {"init_stddev", c.init_stddev},
            {"transfer", to_json(c.transfer)},
            {"service",
             {{"bind", c.service.bind}, {"port", c.service.port}, {"request_log", c.service.request_log}}},
            {"scene", to_json(c.scene)}};
}

inline void validate(const ProjectConfig& c, bool check_paths)
{
    require(c.width >= 8 && c.height >= 8 && c.width <= 4096 && c.height <= 4096, ErrorCode::out_of_range,
            "image size out of range");
    require(c.window_size >= 1 && c.window_size <= 64, ErrorCode::out_of_range, "window size out of range");
    require(c.basis.vertices >= 64 && c.basis.dims.geometry > 0 && c.basis.dims.reflectance > 0 &&
                c.basis.dims.expression > 1,
            ErrorCode::out_of_range, "basis dimensions out of range");
    require(c.init_stddev > 0.0 && c.init_stddev < 10.0, ErrorCode::out_of_range, "init stddev out of range");
    require(c.service.port >= 0 && c.service.port <= 65535, ErrorCode::out_of_range, "service port out of range");
    validate(c.transfer);
    nn::validate(c.training);
    SceneConfig scene = c.scene;
    scene.width = c.width;
    scene.height = c.height;
    validate(scene);
    if (check_paths)
        for (const auto* p : {&c.paths.frames, &c.paths.landmarks})
            require(p->empty() || std::filesystem::exists(*p), ErrorCode::io_error, "path " + *p + " does not exist");
}

/// Missing keys keep their defaults; `check_paths` requires the input paths to exist.
inline ProjectConfig project_config_from_json(const nlohmann::json& j, bool check_paths = true)
{
    ProjectConfig c;
    try
    {
        require(j.is_object(), ErrorCode::format_error, "project config must be a JSON object");
        require(j.value("version", project_config_version) == project_config_version, ErrorCode::format_error,
                "unsupported project config version");
        if (j.contains("paths"))
        {
            const auto& p = j.at("paths");
            c.paths.frames = p.value("frames", c.paths.frames);
            c.paths.landmarks = p.value("landmarks", c.paths.landmarks);
            c.paths.output = p.value("output", c.paths.output);
        }
        if (j.contains("camera"))
        {
            c.width = j.at("camera").value("width", c.width);
            c.height = j.at("camera").value("height", c.height);
        }
        if (j.contains("basis"))
            c.basis = basis_spec_from_json(j.at("basis"), c.basis);
        if (j.contains("solver"))
            c.solver = fit_config_from_json(j.at("solver"), c.solver);
        c.window_size = j.value("window_size", c.window_size);
        if (j.contains("training"))
            c.training = train_config_from_json(j.at("training"), c.training);
        c.init_seed = j.value("init_seed", c.init_seed);
        c.init_stddev = j.value("init_stddev", c.init_stddev);
        if (j.contains("transfer"))
            c.transfer = transfer_spec_from_json(j.at("transfer"));
        if (j.contains("service"))
        {
            const auto& s = j.at("service");
            c.service.bind = s.value("bind", c.service.bind);
            c.service.port = s.value("port", c.service.port);
            c.service.request_log = s.value("request_log", c.service.request_log);
        }
        if (j.contains("scene"))
            c.scene = scene_config_from_json(j.at("scene"), c.scene);
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, std::string("project config: ") + e.what());
    }
    validate(c, check_paths);
    return c;
}

inline ProjectConfig load_project_config(const std::filesystem::path& path, bool check_paths = true)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io_error, "cannot open config " + path.string());
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, path.string() + ": " + e.what());
    }
    return project_config_from_json(j, check_paths);
}

inline void save_project_config(const std::filesystem::path& path, const ProjectConfig& c)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::io_error, "cannot write " + path.string());
    out << to_json(c).dump(2) << '\n';
}

} // namespace dvp

#endif /* DVP_PIPELINE_PROJECT_CONFIG_HPP */
