/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/pipeline/editor_service.hpp
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

#ifndef DVP_PIPELINE_EDITOR_SERVICE_HPP
#define DVP_PIPELINE_EDITOR_SERVICE_HPP

#include "dvp/pipeline/editor_session.hpp"
#include "dvp/pipeline/project_config.hpp"

#include "httplib.h"

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <functional>
#include <thread>

namespace dvp {

enum class PreviewMode { conditioning = 0, output = 1 };

/// Last rendered preview of one mode.
struct Preview
{
    std::uint64_t version = 0;   ///< state version the image was rendered from
    std::int64_t rendered_at_ms = 0;
    std::vector<std::uint8_t> png;
    std::string error;           ///< non-empty if the render failed
    ErrorCode code = ErrorCode::invalid_argument;
    bool valid = false;
};

/**
 * Single synthesis thread. Requests only mark a mode dirty; the worker always
 * renders the newest session state, so a burst of edits costs one render.
 */
class RenderWorker
{
public:
    explicit RenderWorker(const EditorSession& session) : session_(session), epoch_(std::chrono::steady_clock::now())
    {
        thread_ = std::thread([this] { run(); });
    }

    ~RenderWorker()
    {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
        }
        cv_.notify_all();
        thread_.join();
    }

    RenderWorker(const RenderWorker&) = delete;
    RenderWorker& operator=(const RenderWorker&) = delete;

    /// Blocks until a preview rendered from version >= `version` exists.
    Preview await(PreviewMode mode, std::uint64_t version)
    {
        std::unique_lock lock(mutex_);
        auto& slot = slots_[static_cast<int>(mode)];
        if (!(slot.valid && slot.version >= version))
        {
            dirty_[static_cast<int>(mode)] = true;
            cv_.notify_all();
            cv_.wait(lock, [&] { return stop_ || (slot.valid && slot.version >= version); });
        }
        return slot;
    }

    /// Last preview, possibly stale; schedules a refresh if older than `version`.
    std::optional<Preview> latest(PreviewMode mode, std::uint64_t version)
    {
        std::lock_guard lock(mutex_);
        auto& slot = slots_[static_cast<int>(mode)];
        if (!slot.valid)
            return std::nullopt;
        if (slot.version < version)
        {
            dirty_[static_cast<int>(mode)] = true;
            cv_.notify_all();
        }
        return slot;
    }

    std::uint64_t renders() const
    {
        std::lock_guard lock(mutex_);
        return renders_;
    }

private:
    void run()
    {
        for (;;)
        {
            int mode = -1;
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [&] { return stop_ || dirty_[0] || dirty_[1]; });
                if (stop_)
                    return;
                mode = dirty_[0] ? 0 : 1; // conditioning first, it is cheap
                dirty_[mode] = false;
            }
            const auto snap = session_.snapshot();
            Preview p;
            p.version = snap.version;
            p.valid = true;
            try
            {
                p.png = encode_png(mode == 0 ? session_.conditioning_image(snap.params)
                                             : session_.output_image(snap.params));
            } catch (const Error& e)
            {
                p.error = e.what();
                p.code = e.code();
            } catch (const std::exception& e)
            {
                p.error = e.what();
                p.code = ErrorCode::solver_failure;
            }
            p.rendered_at_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch_)
                    .count();
            {
                std::lock_guard lock(mutex_);
                slots_[mode] = std::move(p);
                ++renders_;
            }
            cv_.notify_all();
        }
    }

    const EditorSession& session_;
    std::chrono::steady_clock::time_point epoch_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::array<Preview, 2> slots_;
    std::array<bool, 2> dirty_{false, false};
    std::uint64_t renders_ = 0;
    bool stop_ = false;
    std::thread thread_;
};

/**
 * HTTP front for an EditorSession. All routes live under /v1/. Mutations are
 * appended to the request log file, which starts with the initial parameters.
 */
class EditorService
{
public:
    EditorService(EditorSession& session, ServiceConfig config, std::filesystem::path request_log = {})
        : session_(session), config_(std::move(config)), worker_(session), log_path_(std::move(request_log))
    {
        if (!log_path_.empty())
        {
            log_.open(log_path_, std::ios::binary | std::ios::trunc);
            require(log_.good(), ErrorCode::io_error, "cannot open request log " + log_path_.string());
            append_log({{"op", "init"}, {"params", to_json(session_.initial())}});
        }
        routes();
    }

    ~EditorService() { stop(); }

    /// Binds and serves until stop(); returns false if the bind fails.
    bool listen()
    {
        return server_.listen(config_.bind, config_.port);
    }

    /// Binds to a free port (for tests), returns it; serve with listen_after_bind().
    int bind_any_port() { return server_.bind_to_any_port(config_.bind); }
    bool listen_after_bind() { return server_.listen_after_bind(); }

    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

    RenderWorker& worker() noexcept { return worker_; }

private:
    static void send_error(httplib::Response& res, int status, ErrorCode code, const std::string& message,
                           const std::string& field = {})
    {
        nlohmann::json body{{"error", std::string(to_string(code))}, {"message", message}};
        if (!field.empty())
            body["field"] = field;
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    void append_log(const nlohmann::json& entry)
    {
        if (!log_.is_open())
            return;
        log_ << entry.dump() << '\n';
        log_.flush();
    }

    void send_state(httplib::Response& res, const EditorSession::Snapshot& s)
    {
        res.set_header("X-DVP-State-Version", std::to_string(s.version));
        res.set_content(session_.state_json(s).dump(), "application/json");
    }

    void routes()
    {
        server_.Get("/v1/state", [this](const httplib::Request&, httplib::Response& res) {
            send_state(res, session_.snapshot());
        });
        server_.Get("/v1/meta", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(session_.meta_json().dump(), "application/json");
        });
        server_.Post("/v1/edit", [this](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json body;
            try
            {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::exception& e)
            {
                return send_error(res, 400, ErrorCode::format_error, std::string("body is not JSON: ") + e.what());
            }
            std::lock_guard lock(mutation_mutex_);
            try
            {
                const std::size_t before = session_.request_log().size();
                const auto s = session_.edit(body);
                const auto log = session_.request_log();
                if (log.size() > before)
                    append_log(log.back());
                send_state(res, s);
            } catch (const EditRejected& e)
            {
                send_error(res, e.code == ErrorCode::out_of_range ? 422 : 400, e.code, e.message, e.field);
            }
        });
        server_.Post("/v1/reset", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mutation_mutex_);
            const auto s = session_.reset();
            append_log(session_.request_log().back());
            send_state(res, s);
        });
        server_.Get("/v1/frame", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string mode = req.has_param("mode") ? req.get_param_value("mode") : "conditioning";
            if (mode != "conditioning" && mode != "output")
                return send_error(res, 400, ErrorCode::invalid_argument, "mode must be conditioning or output",
                                  "mode");
            const bool output = mode == "output";
            if (output && !session_.has_network())
                return send_error(res, 503, ErrorCode::invalid_argument, "no network weights loaded");
            const auto current = session_.snapshot().version;
            const PreviewMode m = output ? PreviewMode::output : PreviewMode::conditioning;
            // the network preview may lag; wait=1 forces a fresh one
            std::optional<Preview> p;
            if (output && req.get_param_value("wait") != "1")
                p = worker_.latest(m, current);
            if (!p)
                p = worker_.await(m, current);
            res.set_header("X-DVP-State-Version", std::to_string(p->version));
            res.set_header("X-DVP-Current-Version", std::to_string(current));
            res.set_header("X-DVP-Rendered-At-Ms", std::to_string(p->rendered_at_ms));
            if (!p->error.empty())
                return send_error(res, 500, p->code, "synthesis failed: " + p->error);
            res.set_content(reinterpret_cast<const char*>(p->png.data()), p->png.size(), "image/png");
        });
    }

    EditorSession& session_;
    ServiceConfig config_;
    RenderWorker worker_;
    std::filesystem::path log_path_;
    std::ofstream log_;
    std::mutex mutation_mutex_;
    httplib::Server server_;
};

} // namespace dvp

#endif /* DVP_PIPELINE_EDITOR_SERVICE_HPP */
