/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/model/face_basis.hpp
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

#ifndef DVP_MODEL_FACE_BASIS_HPP
#define DVP_MODEL_FACE_BASIS_HPP

#include "dvp/core/error.hpp"

#include "Eigen/Core"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace dvp {

using Triangle = std::array<int, 3>;

/**
 * Eye region of the template mesh.
 *
 * The socket center and normal are given in the canonical (average geometry)
 * frame. Under a deformation, the center follows the mean displacement of the
 * region's vertices.
 */
struct EyeAnnotation
{
    std::vector<int> vertices;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    double radius = 0.0;
};

enum class Eye { left = 0, right = 1 };

/**
 * Affine geometry/reflectance model plus an expression basis over a fixed
 * triangle mesh.
 *
 * Per-vertex quantities are stacked as [x0 y0 z0 x1 y1 z1 ...]. The "left" eye
 * is the one at negative model x.
 */
struct FaceBasis
{
    int vertex_count = 0;
    std::uint64_t seed = 0;

    Eigen::VectorXd average_geometry;
    Eigen::VectorXd average_reflectance;
    Eigen::MatrixXd geometry_basis;
    Eigen::MatrixXd reflectance_basis;
    Eigen::MatrixXd expression_basis;

    Eigen::VectorXd geometry_stddev;
    Eigen::VectorXd reflectance_stddev;
    Eigen::VectorXd expression_stddev;

    std::vector<Triangle> triangles;
    std::vector<Eigen::Vector2d> texture_coordinates;
    std::array<EyeAnnotation, 2> eyes;

    int num_geometry() const noexcept { return static_cast<int>(geometry_basis.cols()); }
    int num_reflectance() const noexcept { return static_cast<int>(reflectance_basis.cols()); }
    int num_expression() const noexcept { return static_cast<int>(expression_basis.cols()); }

    const EyeAnnotation& eye(Eye which) const noexcept { return eyes[static_cast<int>(which)]; }

    Eigen::Vector3d average_vertex(int i) const { return average_geometry.segment<3>(3 * i); }
};

/// Geometry for identity coefficients alpha and expression coefficients delta.
inline Eigen::VectorXd evaluate_geometry(const FaceBasis& basis, const Eigen::VectorXd& alpha,
                                         const Eigen::VectorXd& delta)
{
    require(alpha.size() == basis.num_geometry(), ErrorCode::shape_mismatch,
            "alpha has " + std::to_string(alpha.size()) + " entries, basis expects " +
                std::to_string(basis.num_geometry()));
    require(delta.size() == basis.num_expression(), ErrorCode::shape_mismatch,
            "delta has " + std::to_string(delta.size()) + " entries, basis expects " +
                std::to_string(basis.num_expression()));
    Eigen::VectorXd v = basis.average_geometry;
    v.noalias() += basis.geometry_basis * alpha;
    v.noalias() += basis.expression_basis * delta;
    return v;
}

/// A single vertex of evaluate_geometry, without forming the full vector.
inline Eigen::Vector3d evaluate_vertex(const FaceBasis& basis, const Eigen::VectorXd& alpha,
                                       const Eigen::VectorXd& delta, int vertex)
{
    const Eigen::Index row = 3 * static_cast<Eigen::Index>(vertex);
    Eigen::Vector3d v = basis.average_geometry.segment<3>(row);
    v.noalias() += basis.geometry_basis.middleRows<3>(row) * alpha;
    v.noalias() += basis.expression_basis.middleRows<3>(row) * delta;
    return v;
}

/// Unclamped albedo a_ref + B_ref * beta. Kept for differentiation.
inline Eigen::VectorXd evaluate_reflectance_raw(const FaceBasis& basis, const Eigen::VectorXd& beta)
{
    require(beta.size() == basis.num_reflectance(), ErrorCode::shape_mismatch,
            "beta has " + std::to_string(beta.size()) + " entries, basis expects " +
                std::to_string(basis.num_reflectance()));
    Eigen::VectorXd r = basis.average_reflectance;
    r.noalias() += basis.reflectance_basis * beta;
    return r;
}

/// Albedo clamped to [0, 1] per channel, as used for rendering.
inline Eigen::VectorXd evaluate_reflectance(const FaceBasis& basis, const Eigen::VectorXd& beta)
{
    return evaluate_reflectance_raw(basis, beta).cwiseMax(0.0).cwiseMin(1.0);
}

} // namespace dvp

#endif /* DVP_MODEL_FACE_BASIS_HPP */
