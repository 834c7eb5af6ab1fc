/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/pipeline/editor_session.hpp
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

#ifndef DVP_PIPELINE_EDITOR_SESSION_HPP
#define DVP_PIPELINE_EDITOR_SESSION_HPP

#include "dvp/conditioning/conditioning.hpp"
#include "dvp/core/error.hpp"
#include "dvp/core/png_io.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/parameters_io.hpp"
#include "dvp/nn/model.hpp"
#include "dvp/nn/trainer.hpp"
#include "dvp/render/face_renderer.hpp"
#include "dvp/transfer/transfer.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dvp {

/// Error raised for a malformed edit, naming the offending field.
struct EditRejected
{
    std::string field;
    ErrorCode code;
    std::string message;
};

/**
 * Editable copy of one fitted target frame. Edits compose through
 * edit_parameters; every accepted mutation is appended to a JSON-lines log
 * that replay_request_log turns back into the same state. Thread-safe.
 */
class EditorSession
{
public:
    EditorSession(const FaceBasis& basis, const CameraIntrinsics& cam, std::vector<FaceParameters> target,
                  std::size_t frame, int window_size, std::shared_ptr<nn::Generator<float>> generator = nullptr)
        : basis_(&basis), cam_(cam), target_(std::move(target)), frame_(frame), window_size_(window_size),
          generator_(std::move(generator))
    {
        require(frame_ < target_.size(), ErrorCode::out_of_range, "editor frame outside the target sequence");
        require(window_size_ >= 1, ErrorCode::invalid_argument, "window size must be positive");
        validate(cam_);
        for (const auto& p : target_)
            validate(p, basis);
        if (generator_)
        {
            const auto& gc = generator_->config();
            require(gc.input_size == cam_.width && gc.input_size == cam_.height &&
                        gc.input_channels == channels_per_frame * window_size_,
                    ErrorCode::shape_mismatch, "network does not match the editor resolution or window size");
        }
        initial_ = target_[frame_];
        current_ = initial_;
    }

    struct Snapshot
    {
        FaceParameters params;
        std::uint64_t version = 0;
        bool gaze_clamped = false;
    };

    Snapshot snapshot() const
    {
        std::lock_guard lock(mutex_);
        return {current_, version_, gaze_clamped_};
    }

    const FaceParameters& initial() const noexcept { return initial_; }
    bool has_network() const noexcept { return generator_ != nullptr; }

    /// Parses and applies an edit; throws EditRejected with the field at fault.
    Snapshot edit(const nlohmann::json& body)
    {
        const ParameterEdit e = parse_edit(body);
        std::optional<std::int64_t> seq;
        if (body.contains("client_seq"))
        {
            if (!body.at("client_seq").is_number_integer())
                throw EditRejected{"client_seq", ErrorCode::format_error, "client_seq must be an integer"};
            seq = body.at("client_seq").get<std::int64_t>();
        }
        std::lock_guard lock(mutex_);
        // retried request: already applied
        if (seq && last_client_seq_ && *seq <= *last_client_seq_)
            return {current_, version_, gaze_clamped_};
        EditResult r;
        try
        {
            r = edit_parameters(current_, e);
            validate(r.params, *basis_);
        } catch (const Error& err)
        {
            throw EditRejected{field_of(err.what()), err.code(), err.what()};
        }
        current_ = r.params;
        gaze_clamped_ = r.gaze_clamped;
        ++version_;
        if (seq)
            last_client_seq_ = seq;
        log_.push_back({{"seq", log_.size()}, {"op", "edit"}, {"edit", to_json(e)}});
        return {current_, version_, gaze_clamped_};
    }

    Snapshot reset()
    {
        std::lock_guard lock(mutex_);
        current_ = initial_;
        gaze_clamped_ = false;
        ++version_;
        log_.push_back({{"seq", log_.size()}, {"op", "reset"}});
        return {current_, version_, gaze_clamped_};
    }

    std::vector<nlohmann::json> request_log() const
    {
        std::lock_guard lock(mutex_);
        return log_;
    }

    nlohmann::json state_json(const Snapshot& s) const
    {
        nlohmann::json expression = nlohmann::json::array(), alpha = nlohmann::json::array();
        for (Eigen::Index k = 0; k < basis_->expression_stddev.size(); ++k)
            expression.push_back({-3.0 * basis_->expression_stddev[k], 3.0 * basis_->expression_stddev[k]});
        for (Eigen::Index k = 0; k < basis_->geometry_stddev.size(); ++k)
            alpha.push_back({-3.0 * basis_->geometry_stddev[k], 3.0 * basis_->geometry_stddev[k]});
        return {{"params", to_json(s.params)},
                {"version", s.version},
                {"gaze_clamped", s.gaze_clamped},
                {"bounds",
                 {{"gaze", {-gaze_limit, gaze_limit}}, {"expression", expression}, {"alpha", alpha}}}};
    }

    nlohmann::json meta_json() const
    {
        return {{"resolution", {cam_.width, cam_.height}},
                {"window_size", window_size_},
                {"frame", frame_},
                {"frames", target_.size()},
                {"vertices", basis_->vertex_count},
                {"geometry", basis_->num_geometry()},
                {"reflectance", basis_->num_reflectance()},
                {"expression", basis_->num_expression()},
                {"parameter_count", initial_.free_parameter_count()},
                {"has_network", has_network()}};
    }

    /// Color conditioning image of `params`, 8-bit.
    RasterImage conditioning_image(const FaceParameters& params) const
    {
        return rasterize_color(*basis_, params, cam_);
    }

    /// History from the target sequence, the edited parameters in the current slot.
    ConditioningWindow window_for(const FaceParameters& params) const
    {
        std::vector<ConditioningFrame> frames;
        for (int s = window_size_ - 1; s >= 1; --s)
        {
            const std::size_t f = frame_ >= static_cast<std::size_t>(s) ? frame_ - s : 0;
            frames.push_back(render_conditioning_frame(*basis_, target_[f], cam_));
        }
        frames.push_back(render_conditioning_frame(*basis_, params, cam_));
        return assemble_window(std::span<const ConditioningFrame>(frames));
    }

    /// Network output for `params`; generator inference is serialized.
    RasterImage output_image(const FaceParameters& params) const
    {
        require(generator_ != nullptr, ErrorCode::invalid_argument, "no network weights loaded");
        const ConditioningWindow w = window_for(params);
        std::lock_guard lock(generator_mutex_);
        const RasterImage out = nn::generate(*generator_, w);
        for (double v : out.data)
            require(std::isfinite(v), ErrorCode::non_finite, "network output is not finite");
        return denormalize(out);
    }

    static ParameterEdit parse_edit(const nlohmann::json& body)
    {
        if (!body.is_object())
            throw EditRejected{"", ErrorCode::format_error, "edit body must be a JSON object"};
        static const std::vector<std::string> known{"rotation", "translation", "expression", "gaze", "alpha"};
        for (const auto& [key, value] : body.items())
        {
            if (key == "client_seq")
                continue;
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw EditRejected{key, ErrorCode::format_error, "unknown edit field '" + key + "'"};
            try
            {
                (void)parameter_edit_from_json(nlohmann::json{{key, value}});
            } catch (const Error& e)
            {
                throw EditRejected{key, e.code(), e.what()};
            }
        }
        nlohmann::json fields = body;
        fields.erase("client_seq");
        return parameter_edit_from_json(fields);
    }

private:
    static std::string field_of(const std::string& message)
    {
        for (const char* f : {"expression", "geometry", "gaze", "rotation", "translation"})
            if (message.find(f) != std::string::npos)
                return std::string(f) == "geometry" ? "alpha" : f;
        return "";
    }

    const FaceBasis* basis_;
    CameraIntrinsics cam_;
    std::vector<FaceParameters> target_;
    std::size_t frame_;
    int window_size_;
    std::shared_ptr<nn::Generator<float>> generator_;
    FaceParameters initial_, current_;
    std::uint64_t version_ = 0;
    bool gaze_clamped_ = false;
    std::optional<std::int64_t> last_client_seq_;
    std::vector<nlohmann::json> log_;
    mutable std::mutex mutex_;
    mutable std::mutex generator_mutex_;
};

/// Replays a request log from the initial parameters through edit_parameters.
/// An "init" entry replaces the starting point.
inline FaceParameters replay_request_log(FaceParameters initial, const std::vector<nlohmann::json>& log)
{
    FaceParameters p = initial;
    for (const auto& entry : log)
    {
        const std::string op = entry.at("op").get<std::string>();
        if (op == "init")
            p = initial = parameters_from_json(entry.at("params"));
        else if (op == "reset")
            p = initial;
        else if (op == "edit")
            p = edit_parameters(p, parameter_edit_from_json(entry.at("edit"))).params;
        else
            throw Error(ErrorCode::format_error, "unknown request log op '" + op + "'");
    }
    return p;
}

inline std::vector<nlohmann::json> read_request_log(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io_error, "cannot open request log " + path.string());
    std::vector<nlohmann::json> log;
    std::string line;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        try
        {
            log.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e)
        {
            throw Error(ErrorCode::format_error, "request log " + path.string() + ": " + e.what());
        }
    }
    return log;
}

} // namespace dvp

#endif /* DVP_PIPELINE_EDITOR_SESSION_HPP */
