/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/eval/evaluation.hpp
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

#ifndef DVP_EVAL_EVALUATION_HPP
#define DVP_EVAL_EVALUATION_HPP

#include "dvp/core/error.hpp"
#include "dvp/core/image.hpp"
#include "dvp/core/png_io.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/model/rotation.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace dvp {

/// Largest per-pixel RGB distance, black against white.
inline const double max_photometric_error = std::sqrt(3.0) * 255.0;

struct ErrorMap
{
    int width = 0;
    int height = 0;
    std::vector<double> values; ///< row-major
    double mean = 0.0;

    double at(int x, int y) const noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Per-pixel Euclidean RGB distance of two 8-bit-range images and its full-frame mean.
inline ErrorMap photometric_error(const RasterImage& pred, const RasterImage& truth)
{
    require(pred.width == truth.width && pred.height == truth.height, ErrorCode::shape_mismatch,
            "photometric error needs images of equal size");
    require(pred.space == ColorSpace::raw && truth.space == ColorSpace::raw, ErrorCode::invalid_argument,
            "photometric error is defined on [0, 255] images");
    ErrorMap m{pred.width, pred.height, std::vector<double>(pred.pixel_count()), 0.0};
    double sum = 0.0;
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x)
        {
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c)
            {
                const double d = pred.at(x, y, c) - truth.at(x, y, c);
                d2 += d * d;
            }
            const double e = std::sqrt(d2);
            m.values[static_cast<std::size_t>(y) * pred.width + x] = e;
            sum += e;
        }
    m.mean = sum / static_cast<double>(pred.pixel_count());
    return m;
}

/// Mean of the map over the pixels where `mask` is set; 0 for an empty mask.
inline double masked_mean(const ErrorMap& map, const std::vector<bool>& mask)
{
    require(mask.size() == map.values.size(), ErrorCode::shape_mismatch, "mask does not match the error map");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i])
        {
            sum += map.values[i];
            ++n;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

struct ReportFingerprint
{
    int window_size = 0;
    int resolution = 0;
    std::size_t corpus_size = 0;
    std::string label;
};

struct ErrorReport
{
    ReportFingerprint fingerprint;
    std::vector<ErrorMap> maps;
    std::vector<double> frame_means;
    std::vector<double> foreground_means; ///< empty when no masks were given
    double sequence_mean = 0.0;
    double foreground_mean = 0.0;
};

/// Report over paired predictions and ground truth; `masks` (optional) select foreground pixels.
inline ErrorReport make_report(std::span<const RasterImage> predictions, std::span<const RasterImage> truth,
                               ReportFingerprint fingerprint, std::span<const std::vector<bool>> masks = {})
{
    require(predictions.size() == truth.size() && !predictions.empty(), ErrorCode::shape_mismatch,
            "report needs equally many predictions and ground-truth frames");
    require(masks.empty() || masks.size() == truth.size(), ErrorCode::shape_mismatch,
            "one foreground mask per frame");
    ErrorReport r;
    r.fingerprint = std::move(fingerprint);
    for (std::size_t i = 0; i < predictions.size(); ++i)
    {
        r.maps.push_back(photometric_error(predictions[i], truth[i]));
        r.frame_means.push_back(r.maps.back().mean);
        if (!masks.empty())
            r.foreground_means.push_back(masked_mean(r.maps.back(), masks[i]));
    }
    double s = 0.0;
    for (double m : r.frame_means)
        s += m;
    r.sequence_mean = s / static_cast<double>(r.frame_means.size());
    if (!r.foreground_means.empty())
    {
        double f = 0.0;
        for (double m : r.foreground_means)
            f += m;
        r.foreground_mean = f / static_cast<double>(r.foreground_means.size());
    }
    return r;
}

/// Index of the first test frame: ceil(2N / 3).
inline std::size_t self_reenactment_split_index(std::size_t n)
{
    require(n >= 3, ErrorCode::invalid_argument, "self-reenactment needs at least 3 frames");
    return (2 * n + 2) / 3;
}

template <typename T>
struct Split
{
    std::vector<T> train;
    std::vector<T> test;
};

/// First two thirds (rounded up) for training, the rest for testing.
template <typename T>
Split<T> self_reenactment_split(const std::vector<T>& items)
{
    const std::size_t k = self_reenactment_split_index(items.size());
    return {std::vector<T>(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k)),
            std::vector<T>(items.begin() + static_cast<std::ptrdiff_t>(k), items.end())};
}

struct NearestNeighborWeights
{
    double pose = 1.0;
    double expression = 1.0;
};

/// Inter-ocular distance of the average face; normalizes translations.
inline double head_scale(const FaceBasis& basis)
{
    const double d = (basis.eye(Eye::left).center - basis.eye(Eye::right).center).norm();
    require(d > 0.0, ErrorCode::invalid_argument, "basis has coincident eye centers");
    return d;
}

/// w_pose * (geodesic angle + |dt| / scale) + w_expr * |d delta|.
inline double parameter_distance(const FaceParameters& a, const FaceParameters& b, const NearestNeighborWeights& w,
                                 double scale)
{
    require(a.delta.size() == b.delta.size(), ErrorCode::shape_mismatch, "expression dimensions differ");
    const double pose = rotation_angle_between(a.rotation, b.rotation) + (a.translation - b.translation).norm() / scale;
    return w.pose * pose + w.expression * (a.delta - b.delta).norm();
}

struct NearestNeighbor
{
    std::size_t index = 0;
    double distance = 0.0;
};

/// Exhaustive scan; ties go to the lowest index.
inline NearestNeighbor nearest_neighbor(const FaceParameters& query, std::span<const FaceParameters> corpus,
                                        const NearestNeighborWeights& w, double scale)
{
    require(!corpus.empty(), ErrorCode::invalid_argument, "nearest-neighbor corpus is empty");
    require(w.pose >= 0.0 && w.expression >= 0.0 && scale > 0.0, ErrorCode::out_of_range,
            "nearest-neighbor weights must be non-negative");
    NearestNeighbor best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < corpus.size(); ++i)
    {
        const double d = parameter_distance(query, corpus[i], w, scale);
        if (d < best.distance)
            best = {i, d};
    }
    return best;
}

/// The corpus frame whose parameters are closest to the query.
inline const RasterImage& nearest_neighbor_baseline(const FaceParameters& query,
                                                    std::span<const FaceParameters> corpus_params,
                                                    std::span<const RasterImage> corpus_frames,
                                                    const NearestNeighborWeights& w, double scale)
{
    require(corpus_params.size() == corpus_frames.size(), ErrorCode::shape_mismatch,
            "nearest-neighbor corpus needs one frame per parameter set");
    return corpus_frames[nearest_neighbor(query, corpus_params, w, scale).index];
}

/// Heat palette: black, red, yellow, white over [0, max_error].
inline std::array<double, 3> heat_color(double value, double max_error = max_photometric_error)
{
    const double t = std::clamp(value / max_error, 0.0, 1.0) * 3.0;
    const double r = std::clamp(t, 0.0, 1.0), g = std::clamp(t - 1.0, 0.0, 1.0), b = std::clamp(t - 2.0, 0.0, 1.0);
    return {255.0 * r, 255.0 * g, 255.0 * b};
}

/// Error map as an image; `max_error` sets the top of the scale.
inline RasterImage error_map_image(const ErrorMap& map, double max_error, bool heat = true)
{
    require(max_error > 0.0, ErrorCode::out_of_range, "error scale must be positive");
    RasterImage img(map.width, map.height);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x)
        {
            const double v = map.at(x, y);
            const double gray = 255.0 * std::clamp(v / max_error, 0.0, 1.0);
            const std::array<double, 3> c = heat ? heat_color(v, max_error) : std::array<double, 3>{gray, gray, gray};
            for (int k = 0; k < 3; ++k)
                img.at(x, y, k) = std::round(c[k]);
        }
    return img;
}

inline nlohmann::json summary_json(const ErrorReport& r)
{
    nlohmann::json j{{"label", r.fingerprint.label},
                     {"window_size", r.fingerprint.window_size},
                     {"resolution", r.fingerprint.resolution},
                     {"corpus_size", r.fingerprint.corpus_size},
                     {"frames", r.frame_means.size()},
                     {"sequence_mean", r.sequence_mean}};
    if (!r.foreground_means.empty())
        j["foreground_mean"] = r.foreground_mean;
    return j;
}

inline std::string format_error_value(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// Writes frames.csv, summary.json and error_NNNNNN.png heat maps into `dir`.
inline void write_report(const std::filesystem::path& dir, const ErrorReport& r, double max_error = 100.0)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
    {
        std::ofstream csv(dir / "frames.csv", std::ios::binary);
        require(static_cast<bool>(csv), ErrorCode::io_error, "cannot write " + (dir / "frames.csv").string());
        csv << (r.foreground_means.empty() ? "frame,mean_error\n" : "frame,mean_error,foreground_error\n");
        for (std::size_t i = 0; i < r.frame_means.size(); ++i)
        {
            csv << i << ',' << format_error_value(r.frame_means[i]);
            if (!r.foreground_means.empty())
                csv << ',' << format_error_value(r.foreground_means[i]);
            csv << '\n';
        }
    }
    {
        std::ofstream js(dir / "summary.json", std::ios::binary);
        require(static_cast<bool>(js), ErrorCode::io_error, "cannot write " + (dir / "summary.json").string());
        js << summary_json(r).dump(2) << '\n';
    }
    for (std::size_t i = 0; i < r.maps.size(); ++i)
    {
        char name[32];
        std::snprintf(name, sizeof name, "error_%06zu.png", i);
        write_png(dir / name, error_map_image(r.maps[i], max_error));
    }
}

} // namespace dvp

#endif /* DVP_EVAL_EVALUATION_HPP */
