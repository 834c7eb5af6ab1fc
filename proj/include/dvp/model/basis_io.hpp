/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/model/basis_io.hpp
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

#ifndef DVP_MODEL_BASIS_IO_HPP
#define DVP_MODEL_BASIS_IO_HPP

#include "dvp/core/binary_io.hpp"
#include "dvp/core/error.hpp"
#include "dvp/model/face_basis.hpp"

#include <cstdint>
#include <filesystem>
#include <span>

namespace dvp {

inline constexpr std::uint32_t basis_format_version = 1;

/**
 * Serializes a FaceBasis to the "DVPB" binary layout (little-endian):
 *
 *   "DVPB" u32 version
 *   u32 N, u32 N_alpha, u32 N_beta, u32 N_delta, u64 seed
 *   f64 average_geometry[3N], f64 average_reflectance[3N]
 *   f64 geometry_basis[3N * N_alpha]     (column-major)
 *   f64 reflectance_basis[3N * N_beta]   (column-major)
 *   f64 expression_basis[3N * N_delta]   (column-major)
 *   f64 stddevs[N_alpha + N_beta + N_delta]
 *   u32 T, u32 triangles[3T]
 *   f64 texture_coordinates[2N]
 *   per eye (left, right): u32 K, u32 vertices[K], f64 center[3], f64 normal[3], f64 radius
 */
inline std::vector<std::uint8_t> serialize_basis(const FaceBasis& basis)
{
    BinaryWriter w;
    w.write_magic("DVPB");
    w.write(basis_format_version);
    w.write(static_cast<std::uint32_t>(basis.vertex_count));
    w.write(static_cast<std::uint32_t>(basis.num_geometry()));
    w.write(static_cast<std::uint32_t>(basis.num_reflectance()));
    w.write(static_cast<std::uint32_t>(basis.num_expression()));
    w.write(basis.seed);
    auto write_dense = [&](const auto& m) { w.write_span(std::span<const double>(m.data(), m.size())); };
    write_dense(basis.average_geometry);
    write_dense(basis.average_reflectance);
    write_dense(basis.geometry_basis);
    write_dense(basis.reflectance_basis);
    write_dense(basis.expression_basis);
    write_dense(basis.geometry_stddev);
    write_dense(basis.reflectance_stddev);
    write_dense(basis.expression_stddev);
    w.write(static_cast<std::uint32_t>(basis.triangles.size()));
    for (const auto& t : basis.triangles)
        for (int idx : t)
            w.write(static_cast<std::uint32_t>(idx));
    for (const auto& uv : basis.texture_coordinates)
    {
        w.write(uv.x());
        w.write(uv.y());
    }
    for (const auto& eye : basis.eyes)
    {
        w.write(static_cast<std::uint32_t>(eye.vertices.size()));
        for (int v : eye.vertices)
            w.write(static_cast<std::uint32_t>(v));
        for (int k = 0; k < 3; ++k)
            w.write(eye.center[k]);
        for (int k = 0; k < 3; ++k)
            w.write(eye.normal[k]);
        w.write(eye.radius);
    }
    return w.bytes();
}

inline FaceBasis deserialize_basis(std::vector<std::uint8_t> bytes)
{
    BinaryReader r(std::move(bytes));
    r.expect_magic("DVPB");
    const auto version = r.read<std::uint32_t>();
    require(version == basis_format_version, ErrorCode::format_error,
            "unsupported basis format version " + std::to_string(version));
    FaceBasis basis;
    basis.vertex_count = static_cast<int>(r.read<std::uint32_t>());
    const auto na = static_cast<Eigen::Index>(r.read<std::uint32_t>());
    const auto nb = static_cast<Eigen::Index>(r.read<std::uint32_t>());
    const auto nd = static_cast<Eigen::Index>(r.read<std::uint32_t>());
    basis.seed = r.read<std::uint64_t>();
    const Eigen::Index n3 = 3 * static_cast<Eigen::Index>(basis.vertex_count);

    auto read_vector = [&](Eigen::Index n) {
        const auto v = r.read_vector<double>(static_cast<std::size_t>(n));
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
    };
    auto read_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
        const auto v = r.read_vector<double>(static_cast<std::size_t>(rows * cols));
        return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols));
    };
    basis.average_geometry = read_vector(n3);
    basis.average_reflectance = read_vector(n3);
    basis.geometry_basis = read_matrix(n3, na);
    basis.reflectance_basis = read_matrix(n3, nb);
    basis.expression_basis = read_matrix(n3, nd);
    basis.geometry_stddev = read_vector(na);
    basis.reflectance_stddev = read_vector(nb);
    basis.expression_stddev = read_vector(nd);

    const auto triangle_count = r.read<std::uint32_t>();
    basis.triangles.resize(triangle_count);
    for (auto& t : basis.triangles)
    {
        for (int& idx : t)
        {
            idx = static_cast<int>(r.read<std::uint32_t>());
            require(idx < basis.vertex_count, ErrorCode::format_error, "triangle index out of range");
        }
    }
    basis.texture_coordinates.resize(static_cast<std::size_t>(basis.vertex_count));
    for (auto& uv : basis.texture_coordinates)
    {
        uv.x() = r.read<double>();
        uv.y() = r.read<double>();
    }
    for (auto& eye : basis.eyes)
    {
        eye.vertices.resize(r.read<std::uint32_t>());
        for (int& v : eye.vertices)
        {
            v = static_cast<int>(r.read<std::uint32_t>());
            require(v < basis.vertex_count, ErrorCode::format_error, "eye vertex index out of range");
        }
        for (int k = 0; k < 3; ++k)
            eye.center[k] = r.read<double>();
        for (int k = 0; k < 3; ++k)
            eye.normal[k] = r.read<double>();
        eye.radius = r.read<double>();
    }
    require(r.at_end(), ErrorCode::format_error, "trailing bytes after basis payload");
    return basis;
}

inline void save_basis(const std::filesystem::path& path, const FaceBasis& basis)
{
    const auto bytes = serialize_basis(basis);
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io_error, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline FaceBasis load_basis(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io_error, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_basis(std::move(bytes));
}

} // namespace dvp

#endif /* DVP_MODEL_BASIS_IO_HPP */
