/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/nn/weights_io.hpp
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

#ifndef DVP_NN_WEIGHTS_IO_HPP
#define DVP_NN_WEIGHTS_IO_HPP

#include "dvp/core/binary_io.hpp"
#include "dvp/core/error.hpp"
#include "dvp/nn/model.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dvp::nn {

inline constexpr std::uint32_t weights_format_version = 1;

inline nlohmann::json to_json(const GeneratorConfig& c)
{
    return {{"input_size", c.input_size},     {"input_channels", c.input_channels}, {"down_channels", c.down_channels},
            {"up_channels", c.up_channels},   {"dropout", c.dropout},               {"skips", c.skips},
            {"final_width", c.final_width},   {"leaky_slope", c.leaky_slope},       {"bn_momentum", c.bn_momentum}};
}

inline nlohmann::json to_json(const DiscriminatorConfig& c)
{
    return {{"input_channels", c.input_channels},
            {"channels", c.channels},
            {"leaky_slope", c.leaky_slope},
            {"bn_momentum", c.bn_momentum}};
}

inline GeneratorConfig generator_config_from_json(const nlohmann::json& j)
{
    try
    {
        GeneratorConfig c;
        c.input_size = j.at("input_size").get<int>();
        c.input_channels = j.at("input_channels").get<int>();
        c.down_channels = j.at("down_channels").get<std::vector<int>>();
        c.up_channels = j.at("up_channels").get<std::vector<int>>();
        c.dropout = j.at("dropout").get<std::vector<double>>();
        c.skips = j.at("skips").get<std::vector<bool>>();
        c.final_width = j.at("final_width").get<int>();
        c.leaky_slope = j.at("leaky_slope").get<double>();
        c.bn_momentum = j.at("bn_momentum").get<double>();
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, std::string("generator config: ") + e.what());
    }
}

inline DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j)
{
    try
    {
        DiscriminatorConfig c;
        c.input_channels = j.at("input_channels").get<int>();
        c.channels = j.at("channels").get<std::vector<int>>();
        c.leaky_slope = j.at("leaky_slope").get<double>();
        c.bn_momentum = j.at("bn_momentum").get<double>();
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, std::string("discriminator config: ") + e.what());
    }
}

/*
 * "DVPW" u32 version, u64 init seed, string config (JSON),
 * u32 array count, then per array: string name, u32 rank, u32 dims[rank], f32 values.
 * Strings are u32 length + bytes; everything little-endian.
 */
inline std::vector<std::uint8_t> serialize_weights(const NetworkWeights& w)
{
    BinaryWriter out;
    out.write_magic("DVPW");
    out.write(weights_format_version);
    out.write(static_cast<std::uint64_t>(w.init_seed));
    const nlohmann::json config{{"generator", to_json(w.generator)}, {"discriminator", to_json(w.discriminator)}};
    out.write_string(config.dump());
    out.write(static_cast<std::uint32_t>(w.arrays.size()));
    for (const auto& a : w.arrays)
    {
        out.write_string(a.name);
        out.write(static_cast<std::uint32_t>(a.shape.size()));
        std::size_t n = 1;
        for (int d : a.shape)
        {
            out.write(static_cast<std::uint32_t>(d));
            n *= static_cast<std::size_t>(d);
        }
        require(n == a.values.size(), ErrorCode::shape_mismatch, "array '" + a.name + "' does not match its shape");
        out.write_span(std::span<const float>(a.values));
    }
    return out.bytes();
}

inline NetworkWeights deserialize_weights(std::vector<std::uint8_t> bytes)
{
    BinaryReader in(std::move(bytes));
    in.expect_magic("DVPW");
    const auto version = in.read<std::uint32_t>();
    require(version == weights_format_version, ErrorCode::format_error,
            "unsupported weights version " + std::to_string(version));
    NetworkWeights w;
    w.init_seed = in.read<std::uint64_t>();
    nlohmann::json config;
    try
    {
        config = nlohmann::json::parse(in.read_string());
    } catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::format_error, std::string("weights config: ") + e.what());
    }
    require(config.is_object() && config.contains("generator") && config.contains("discriminator"),
            ErrorCode::format_error, "weights config lacks network sections");
    w.generator = generator_config_from_json(config["generator"]);
    w.discriminator = discriminator_config_from_json(config["discriminator"]);
    const auto count = in.read<std::uint32_t>();
    for (std::uint32_t k = 0; k < count; ++k)
    {
        WeightArray a;
        a.name = in.read_string();
        const auto rank = in.read<std::uint32_t>();
        require(rank >= 1 && rank <= 4, ErrorCode::format_error, "array '" + a.name + "' has an unsupported rank");
        std::size_t n = 1;
        for (std::uint32_t r = 0; r < rank; ++r)
        {
            const auto d = in.read<std::uint32_t>();
            require(d >= 1 && d <= 1u << 16, ErrorCode::format_error, "array '" + a.name + "' has a bad dimension");
            a.shape.push_back(static_cast<int>(d));
            n *= d;
        }
        a.values = in.read_vector<float>(n);
        for (float v : a.values)
            require(std::isfinite(v), ErrorCode::non_finite, "non-finite value in '" + a.name + "'");
        w.arrays.push_back(std::move(a));
    }
    require(in.at_end(), ErrorCode::format_error, "trailing bytes after weights");
    return w;
}

inline void save_weights(const std::filesystem::path& path, const NetworkWeights& w)
{
    write_file_bytes(path, serialize_weights(w));
}

inline NetworkWeights load_weights(const std::filesystem::path& path)
{
    return deserialize_weights(read_file_bytes(path));
}

} // namespace dvp::nn

#endif /* DVP_NN_WEIGHTS_IO_HPP */
