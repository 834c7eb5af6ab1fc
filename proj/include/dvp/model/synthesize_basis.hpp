/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/model/synthesize_basis.hpp
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

#ifndef DVP_MODEL_SYNTHESIZE_BASIS_HPP
#define DVP_MODEL_SYNTHESIZE_BASIS_HPP

#include "dvp/core/error.hpp"
#include "dvp/model/face_basis.hpp"

#include "Eigen/Core"
#include "Eigen/QR"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace dvp {

struct BasisDims
{
    int geometry = 80;
    int reflectance = 80;
    int expression = 64;
};

/// Expression dimension that closes both eyelids for positive coefficients.
inline constexpr int eye_closure_dimension = 0;
/// Expression dimension that opens the jaw for positive coefficients.
inline constexpr int jaw_open_dimension = 1;

/// Singular value decay of the procedural bases: sigma_k = sigma_0 * decay^k.
inline constexpr double basis_singular_value_decay = 0.95;

namespace detail {

// Canonical frame: +x model right, +y down (matches image y), -z towards the camera.
inline Eigen::Vector3d sphere_direction(double theta, double phi)
{
    return {std::sin(theta) * std::cos(phi), -std::cos(theta), std::sin(theta) * std::sin(phi)};
}

inline double gaussian_bump(const Eigen::Vector3d& d, const Eigen::Vector3d& center, double width)
{
    return std::exp(-(d - center).squaredNorm() / (2.0 * width * width));
}

inline const Eigen::Vector3d& head_radii()
{
    static const Eigen::Vector3d radii(0.78, 1.0, 0.9);
    return radii;
}

inline Eigen::Vector3d eye_direction(Eye eye)
{
    const double side = eye == Eye::left ? -1.0 : 1.0;
    return Eigen::Vector3d(side * 0.36, -0.12, -0.92).normalized();
}

/// Head surface point for a unit direction: an ellipsoid with a nose, chin, brows and eye sockets.
inline Eigen::Vector3d head_surface(const Eigen::Vector3d& d)
{
    double offset = 0.0;
    offset += 0.22 * gaussian_bump(d, Eigen::Vector3d(0.0, 0.1, -1.0).normalized(), 0.12);
    offset += 0.06 * gaussian_bump(d, Eigen::Vector3d(0.0, 0.62, -0.78).normalized(), 0.15);
    for (Eye eye : {Eye::left, Eye::right})
    {
        offset -= 0.07 * gaussian_bump(d, eye_direction(eye), 0.1);
        const Eigen::Vector3d brow = (eye_direction(eye) + Eigen::Vector3d(0.0, -0.18, 0.0)).normalized();
        offset += 0.04 * gaussian_bump(d, brow, 0.1);
    }
    const Eigen::Vector3d ellipsoid = d.cwiseProduct(head_radii());
    return ellipsoid + offset * d;
}

inline Eigen::Vector3d ellipsoid_normal(const Eigen::Vector3d& d)
{
    const Eigen::Vector3d r = head_radii();
    const Eigen::Vector3d p = d.cwiseProduct(r);
    return Eigen::Vector3d(p.x() / (r.x() * r.x()), p.y() / (r.y() * r.y()), p.z() / (r.z() * r.z())).normalized();
}

inline double smoothstep(double edge0, double edge1, double x)
{
    const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

struct RingMesh
{
    std::vector<Eigen::Vector3d> directions;
    std::vector<Eigen::Vector2d> uv;
    std::vector<Triangle> triangles;
};

/// Splits `total` into `weights.size()` integer parts (each >= minimum) proportional to the weights.
inline std::vector<int> apportion(int total, const std::vector<double>& weights, int minimum)
{
    const int n = static_cast<int>(weights.size());
    std::vector<int> out(n, minimum);
    int remaining = total - n * minimum;
    double weight_sum = 0.0;
    for (double w : weights)
        weight_sum += w;
    std::vector<double> remainder(n);
    int assigned = 0;
    for (int i = 0; i < n; ++i)
    {
        const double share = remaining * weights[i] / weight_sum;
        const int whole = static_cast<int>(std::floor(share));
        out[i] += whole;
        assigned += whole;
        remainder[i] = share - whole;
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (int k = 0; k < remaining - assigned; ++k)
    {
        out[order[k % n]] += 1;
    }
    return out;
}

/**
 * Closed sphere triangulation with exactly `vertex_count` vertices: two poles
 * plus latitude rings whose vertex counts follow sin(theta). Neighbouring rings
 * of different sizes are stitched by merging their angular orderings.
 */
inline RingMesh ring_sphere(int vertex_count)
{
    const int interior = vertex_count - 2;
    int rings = std::max(3, static_cast<int>(std::lround(std::sqrt(interior / 2.0))));
    while (rings > 3 && interior < 3 * rings)
        --rings;

    std::vector<double> weights(rings);
    for (int i = 0; i < rings; ++i)
        weights[i] = std::sin(std::numbers::pi * (i + 1) / (rings + 1));
    const std::vector<int> counts = apportion(interior, weights, 3);

    RingMesh mesh;
    mesh.directions.push_back(sphere_direction(0.0, 0.0));
    mesh.uv.emplace_back(0.5, 0.0);
    std::vector<int> ring_start(rings);
    std::vector<double> ring_offset(rings);
    for (int i = 0; i < rings; ++i)
    {
        ring_start[i] = static_cast<int>(mesh.directions.size());
        ring_offset[i] = (i % 2 == 0) ? 0.0 : 0.5;
        const double theta = std::numbers::pi * (i + 1) / (rings + 1);
        for (int j = 0; j < counts[i]; ++j)
        {
            const double s = (j + ring_offset[i]) / counts[i];
            mesh.directions.push_back(sphere_direction(theta, 2.0 * std::numbers::pi * s));
            mesh.uv.emplace_back(s - std::floor(s), theta / std::numbers::pi);
        }
    }
    const int bottom = static_cast<int>(mesh.directions.size());
    mesh.directions.push_back(sphere_direction(std::numbers::pi, 0.0));
    mesh.uv.emplace_back(0.5, 1.0);

    auto add = [&](int a, int b, int c) { mesh.triangles.push_back({a, b, c}); };
    for (int j = 0; j < counts.front(); ++j)
        add(0, ring_start[0] + j, ring_start[0] + (j + 1) % counts[0]);
    for (int i = 0; i + 1 < rings; ++i)
    {
        const int a = counts[i], b = counts[i + 1];
        const int sa = ring_start[i], sb = ring_start[i + 1];
        int p = 0, q = 0;
        while (p < a || q < b)
        {
            const double next_a = (p + 1 + ring_offset[i]) / a;
            const double next_b = (q + 1 + ring_offset[i + 1]) / b;
            const bool advance_a = q >= b || (p < a && next_a <= next_b);
            if (advance_a)
            {
                add(sa + p % a, sb + q % b, sa + (p + 1) % a);
                ++p;
            }
            else
            {
                add(sa + p % a, sb + q % b, sb + (q + 1) % b);
                ++q;
            }
        }
    }
    const int last = rings - 1;
    for (int j = 0; j < counts[last]; ++j)
        add(bottom, ring_start[last] + (j + 1) % counts[last], ring_start[last] + j);

    // Orient every triangle outwards (the unit sphere is convex).
    for (auto& t : mesh.triangles)
    {
        const Eigen::Vector3d& p0 = mesh.directions[t[0]];
        const Eigen::Vector3d& p1 = mesh.directions[t[1]];
        const Eigen::Vector3d& p2 = mesh.directions[t[2]];
        if ((p1 - p0).cross(p2 - p0).dot(p0 + p1 + p2) < 0.0)
            std::swap(t[1], t[2]);
    }
    return mesh;
}

/// Gram-Schmidt via Householder QR; column signs follow the raw columns.
inline Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& raw)
{
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(raw.rows(), raw.cols());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(raw.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < raw.cols(); ++k)
    {
        if (r(k, k) < 0.0)
            q.col(k) = -q.col(k);
    }
    return q;
}

inline Eigen::VectorXd decaying_singular_values(int count, double sigma0)
{
    Eigen::VectorXd s(count);
    for (int k = 0; k < count; ++k)
        s[k] = sigma0 * std::pow(basis_singular_value_decay, k);
    return s;
}

class SeededNormal
{
public:
    explicit SeededNormal(std::uint64_t seed) : engine_(seed) {}
    double operator()() { return normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    Eigen::Vector3d unit_vector()
    {
        Eigen::Vector3d v(normal_(engine_), normal_(engine_), normal_(engine_));
        return v.normalized();
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

/// Random smooth vector field over the head: a sum of Gaussian bumps with random 3D amplitudes.
inline Eigen::VectorXd smooth_vector_field(const std::vector<Eigen::Vector3d>& dirs, SeededNormal& rng, int bumps,
                                           double min_width, double max_width, bool front_only)
{
    Eigen::VectorXd field = Eigen::VectorXd::Zero(3 * static_cast<Eigen::Index>(dirs.size()));
    for (int m = 0; m < bumps; ++m)
    {
        Eigen::Vector3d center = rng.unit_vector();
        if (front_only && center.z() > 0.0)
            center.z() = -center.z();
        const double width = rng.uniform(min_width, max_width);
        const Eigen::Vector3d amplitude(rng(), rng(), rng());
        for (std::size_t i = 0; i < dirs.size(); ++i)
        {
            field.segment<3>(3 * static_cast<Eigen::Index>(i)) += amplitude * gaussian_bump(dirs[i], center, width);
        }
    }
    return field;
}

inline Eigen::Vector3d mix(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double t) { return a + t * (b - a); }

inline Eigen::Vector3d skin_albedo(const Eigen::Vector3d& d, const Eigen::Vector2d& uv)
{
    Eigen::Vector3d c(0.78, 0.58, 0.47);
    c += Eigen::Vector3d::Constant(0.05 * std::sin(10.0 * std::numbers::pi * uv.x()) *
                                   std::sin(3.0 * std::numbers::pi * uv.y()));
    // Lips, elongated horizontally.
    const Eigen::Vector3d mouth = Eigen::Vector3d(0.0, 0.42, -0.9).normalized();
    const Eigen::Vector3d dm = d - mouth;
    const double lips = std::exp(-(dm.x() * dm.x() / 3.0 + dm.y() * dm.y() + dm.z() * dm.z()) / (2.0 * 0.07 * 0.07));
    c = mix(c, Eigen::Vector3d(0.72, 0.3, 0.3), lips);
    for (Eye eye : {Eye::left, Eye::right})
    {
        const Eigen::Vector3d brow = (eye_direction(eye) + Eigen::Vector3d(0.0, -0.2, 0.0)).normalized();
        const Eigen::Vector3d db = d - brow;
        const double b = std::exp(-(db.x() * db.x() / 3.0 + db.y() * db.y() + db.z() * db.z()) / (2.0 * 0.05 * 0.05));
        c = mix(c, Eigen::Vector3d(0.3, 0.22, 0.17), b);
        c = mix(c, Eigen::Vector3d(0.92, 0.92, 0.9), gaussian_bump(d, eye_direction(eye), 0.06));
    }
    // Hair cap over the top and back of the head.
    const double hair = std::max(smoothstep(0.35, 0.6, -d.y()), smoothstep(0.25, 0.6, d.z()) * smoothstep(-0.3, 0.2, -d.y()));
    c = mix(c, Eigen::Vector3d(0.22, 0.16, 0.11), hair);
    return c.cwiseMax(0.0).cwiseMin(1.0);
}

} // namespace detail

/**
 * Builds a deterministic procedural face model.
 *
 * The template mesh is a closed, deformed ellipsoid with a nose, brows and two
 * eye sockets. Each basis is an orthonormalized set of smooth random fields
 * whose k-th column is scaled by sigma_k = sigma_0 * 0.95^k; the coefficient
 * standard deviations equal those scales. Expression column 0 closes the
 * eyelids and column 1 opens the jaw.
 */
inline FaceBasis synthesize_basis(std::uint64_t seed, int vertex_count, BasisDims dims = {})
{
    require(vertex_count >= 64, ErrorCode::invalid_argument,
            "vertex_count must be at least 64, got " + std::to_string(vertex_count));
    require(dims.geometry > 0 && dims.reflectance > 0 && dims.expression > 0, ErrorCode::invalid_argument,
            "basis dimensions must be positive");
    require(dims.expression > jaw_open_dimension, ErrorCode::invalid_argument,
            "expression basis needs at least 2 dimensions");
    const int n3 = 3 * vertex_count;
    require(dims.geometry <= n3 && dims.reflectance <= n3 && dims.expression <= n3, ErrorCode::invalid_argument,
            "basis dimensions exceed 3 * vertex_count");

    const detail::RingMesh mesh = detail::ring_sphere(vertex_count);
    FaceBasis basis;
    basis.vertex_count = vertex_count;
    basis.seed = seed;
    basis.triangles = mesh.triangles;
    basis.texture_coordinates = mesh.uv;

    basis.average_geometry.resize(n3);
    basis.average_reflectance.resize(n3);
    for (int i = 0; i < vertex_count; ++i)
    {
        basis.average_geometry.segment<3>(3 * i) = detail::head_surface(mesh.directions[i]);
        basis.average_reflectance.segment<3>(3 * i) = detail::skin_albedo(mesh.directions[i], mesh.uv[i]);
    }

    constexpr double eye_radius = 0.12;
    for (Eye which : {Eye::left, Eye::right})
    {
        EyeAnnotation& eye = basis.eyes[static_cast<int>(which)];
        const Eigen::Vector3d d = detail::eye_direction(which);
        eye.center = detail::head_surface(d);
        eye.normal = detail::ellipsoid_normal(d);
        eye.radius = eye_radius;
        for (int i = 0; i < vertex_count; ++i)
        {
            if ((basis.average_vertex(i) - eye.center).norm() < 1.6 * eye_radius)
                eye.vertices.push_back(i);
        }
        require(eye.vertices.size() >= 3, ErrorCode::invalid_argument,
                "vertex_count " + std::to_string(vertex_count) + " is too small to carry eye annotations");
    }

    detail::SeededNormal rng(seed);

    Eigen::MatrixXd raw_geometry(n3, dims.geometry);
    for (int k = 0; k < dims.geometry; ++k)
        raw_geometry.col(k) = detail::smooth_vector_field(mesh.directions, rng, 4, 0.3, 0.8, false);

    Eigen::MatrixXd raw_reflectance(n3, dims.reflectance);
    for (int k = 0; k < dims.reflectance; ++k)
        raw_reflectance.col(k) = detail::smooth_vector_field(mesh.directions, rng, 3, 0.2, 0.6, false);

    Eigen::MatrixXd raw_expression(n3, dims.expression);
    raw_expression.setZero();
    for (int i = 0; i < vertex_count; ++i)
    {
        const Eigen::Vector3d p = basis.average_vertex(i);
        double lid = 0.0;
        for (const auto& eye : basis.eyes)
            lid += std::exp(-(p - (eye.center + Eigen::Vector3d(0.0, -0.08, 0.0))).squaredNorm() / (2.0 * 0.08 * 0.08));
        raw_expression.block<3, 1>(3 * i, eye_closure_dimension) = Eigen::Vector3d(0.0, lid, 0.0);
        const Eigen::Vector3d& d = mesh.directions[i];
        const double jaw = detail::smoothstep(0.3, 0.6, d.y()) * detail::smoothstep(0.0, 0.4, -d.z());
        raw_expression.block<3, 1>(3 * i, jaw_open_dimension) = Eigen::Vector3d(0.0, jaw, 0.3 * jaw);
    }
    for (int k = jaw_open_dimension + 1; k < dims.expression; ++k)
        raw_expression.col(k) = detail::smooth_vector_field(mesh.directions, rng, 3, 0.12, 0.4, true);

    basis.geometry_stddev = detail::decaying_singular_values(dims.geometry, 1.0);
    basis.reflectance_stddev = detail::decaying_singular_values(dims.reflectance, 1.0);
    basis.expression_stddev = detail::decaying_singular_values(dims.expression, 0.5);

    basis.geometry_basis = detail::orthonormal_columns(raw_geometry) * basis.geometry_stddev.asDiagonal();
    basis.reflectance_basis = detail::orthonormal_columns(raw_reflectance) * basis.reflectance_stddev.asDiagonal();
    basis.expression_basis = detail::orthonormal_columns(raw_expression) * basis.expression_stddev.asDiagonal();
    return basis;
}

} // namespace dvp

#endif /* DVP_MODEL_SYNTHESIZE_BASIS_HPP */
