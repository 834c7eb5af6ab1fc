/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: tests/test_support.hpp
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

#ifndef DVP_TESTS_TEST_SUPPORT_HPP
#define DVP_TESTS_TEST_SUPPORT_HPP

#include "dvp/fitting/landmarks.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/model/rotation.hpp"
#include "dvp/model/synthesize_basis.hpp"
#include "dvp/render/face_renderer.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <random>

namespace dvp::test {

/// Shared full-size model (N = 512, 80/80/64), built once per test binary.
inline const FaceBasis& reference_basis()
{
    static const FaceBasis basis = synthesize_basis(7, 512);
    return basis;
}

/// Small model for tests that render many times.
inline const FaceBasis& small_basis()
{
    static const FaceBasis basis = synthesize_basis(11, 256, {10, 10, 8});
    return basis;
}

class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal(double sigma = 1.0) { return sigma * normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    Eigen::VectorXd normal_vector(Eigen::Index n, double sigma = 1.0)
    {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v[i] = normal(sigma);
        return v;
    }

    Eigen::Vector3d unit_vector()
    {
        Eigen::Vector3d v(normal(), normal(), normal());
        return v.normalized();
    }

    Eigen::Quaterniond rotation(double max_angle)
    {
        return exp_map(unit_vector() * uniform(0.0, max_angle));
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

/// Plausible parameters: coefficients drawn at `scale` standard deviations, small head rotation.
inline FaceParameters random_parameters(const FaceBasis& basis, Rng& rng, double scale = 0.5,
                                        double max_angle = radians(15.0))
{
    FaceParameters p = neutral_parameters(basis);
    p.rotation = rng.rotation(max_angle);
    p.translation += Eigen::Vector3d(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.3, 0.3));
    for (int k = 0; k < basis.num_geometry(); ++k)
        p.alpha[k] = rng.normal(scale * basis.geometry_stddev[k]);
    for (int k = 0; k < basis.num_reflectance(); ++k)
        p.beta[k] = rng.normal(scale * basis.reflectance_stddev[k]);
    for (int k = 0; k < basis.num_expression(); ++k)
        p.delta[k] = rng.normal(scale * basis.expression_stddev[k]);
    for (double& g : p.gaze)
        g = rng.uniform(-0.5, 0.5) * gaze_limit;
    for (double& s : p.sh)
        s += rng.normal(0.05);
    return p;
}

/// A frame rendered from known parameters, with exact landmarks.
struct Scene
{
    FaceParameters truth;
    RasterImage frame;
    LandmarkSet landmarks;
};

inline Scene make_scene(const FaceBasis& basis, Rng& rng, const CameraIntrinsics& cam)
{
    Scene s;
    s.truth = random_parameters(basis, rng, 0.5, radians(15.0));
    s.frame = rasterize_color(basis, s.truth, cam);
    s.landmarks = landmarks_from_parameters(basis, s.truth, cam, default_landmark_vertices(basis));
    return s;
}

/// Largest extent of the average face's bounding box.
inline double head_size(const FaceBasis& basis)
{
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e300), hi = -lo;
    for (int i = 0; i < basis.vertex_count; ++i)
    {
        lo = lo.cwiseMin(basis.average_vertex(i));
        hi = hi.cwiseMax(basis.average_vertex(i));
    }
    return (hi - lo).maxCoeff();
}

/// 5 degrees about a random axis, 2% of head size along a random direction, 0.2 sigma expression noise.
inline FaceParameters perturb(const FaceBasis& basis, const FaceParameters& p, Rng& rng)
{
    FaceParameters q = p;
    q.rotation = (exp_map(rng.unit_vector() * radians(5.0)) * p.rotation).normalized();
    q.translation += rng.unit_vector() * 0.02 * head_size(basis);
    for (int k = 0; k < q.delta.size(); ++k)
        q.delta[k] += rng.normal(0.2 * basis.expression_stddev[k]);
    return q;
}

} // namespace dvp::test

#endif /* DVP_TESTS_TEST_SUPPORT_HPP */
