/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: tests/unit/test_face_model.cpp
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
#include "oracles.hpp"
#include "test_support.hpp"

#include "dvp/model/basis_io.hpp"
#include "dvp/model/face_basis.hpp"
#include "dvp/model/face_parameters.hpp"
#include "dvp/model/parameters_io.hpp"
#include "dvp/model/synthesize_basis.hpp"

#include "gtest/gtest.h"

#include <filesystem>
#include <map>
#include <numbers>
#include <utility>

using namespace dvp;
using dvp::test::reference_basis;
using dvp::test::Rng;

using dvp::test::naive_affine;

TEST(SynthesizeBasis, HasDefaultDimensions)
{
    const FaceBasis& b = reference_basis();
    EXPECT_EQ(b.vertex_count, 512);
    EXPECT_EQ(b.num_geometry(), 80);
    EXPECT_EQ(b.num_reflectance(), 80);
    EXPECT_EQ(b.num_expression(), 64);
    EXPECT_EQ(b.average_geometry.size(), 3 * 512);
    EXPECT_EQ(neutral_parameters(b).free_parameter_count(), 261);
}

TEST(SynthesizeBasis, IsDeterministicForASeed)
{
    const FaceBasis a = synthesize_basis(7, 512, {80, 80, 64});
    const FaceBasis b = synthesize_basis(7, 512, {80, 80, 64});
    EXPECT_EQ(serialize_basis(a), serialize_basis(b));
    const FaceBasis c = synthesize_basis(8, 512, {80, 80, 64});
    EXPECT_NE(serialize_basis(a), serialize_basis(c));
}

TEST(SynthesizeBasis, ColumnsAreOrthogonalWithDecayingScales)
{
    for (std::uint64_t seed : {1u, 7u, 1234u})
    {
        const FaceBasis b = synthesize_basis(seed, 300, {20, 20, 16});
        auto check = [](const Eigen::MatrixXd& m, const Eigen::VectorXd& sigma) {
            const Eigen::MatrixXd gram = m.transpose() * m;
            const Eigen::MatrixXd expected = sigma.array().square().matrix().asDiagonal();
            EXPECT_LT((gram - expected).cwiseAbs().maxCoeff(), 1e-9);
            for (Eigen::Index k = 1; k < sigma.size(); ++k)
                EXPECT_NEAR(sigma[k] / sigma[k - 1], basis_singular_value_decay, 1e-15);
        };
        check(b.geometry_basis, b.geometry_stddev);
        check(b.reflectance_basis, b.reflectance_stddev);
        check(b.expression_basis, b.expression_stddev);
    }
}

TEST(SynthesizeBasis, MeshIsWatertight)
{
    // Edge-count oracle: every undirected edge is used by exactly two triangles,
    // once in each direction when the mesh is consistently oriented.
    const FaceBasis& b = reference_basis();
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : b.triangles)
    {
        for (int k = 0; k < 3; ++k)
        {
            ASSERT_GE(t[k], 0);
            ASSERT_LT(t[k], b.vertex_count);
            directed[{t[k], t[(k + 1) % 3]}] += 1;
        }
    }
    for (const auto& [edge, count] : directed)
    {
        EXPECT_EQ(count, 1);
        const auto reverse = directed.find({edge.second, edge.first});
        ASSERT_NE(reverse, directed.end());
        EXPECT_EQ(reverse->second, 1);
    }
    // Closed genus-0 surface: V - E + F = 2.
    const auto edges = static_cast<long>(directed.size() / 2);
    EXPECT_EQ(b.vertex_count - edges + static_cast<long>(b.triangles.size()), 2);
}

TEST(SynthesizeBasis, OddVertexCountsStayWatertight)
{
    for (int n : {64, 97, 257, 1001})
    {
        detail::RingMesh mesh = detail::ring_sphere(n);
        EXPECT_EQ(static_cast<int>(mesh.directions.size()), n);
        std::map<std::pair<int, int>, int> directed;
        for (const auto& t : mesh.triangles)
            for (int k = 0; k < 3; ++k)
                directed[{t[k], t[(k + 1) % 3]}] += 1;
        for (const auto& [edge, count] : directed)
        {
            EXPECT_EQ(count, 1);
            EXPECT_EQ(directed.count({edge.second, edge.first}), 1u);
        }
    }
}

TEST(SynthesizeBasis, TextureCoordinatesAndEyes)
{
    const FaceBasis& b = reference_basis();
    ASSERT_EQ(static_cast<int>(b.texture_coordinates.size()), b.vertex_count);
    for (const auto& uv : b.texture_coordinates)
    {
        EXPECT_GE(uv.x(), 0.0);
        EXPECT_LE(uv.x(), 1.0);
        EXPECT_GE(uv.y(), 0.0);
        EXPECT_LE(uv.y(), 1.0);
    }
    EXPECT_LT(b.eye(Eye::left).center.x(), 0.0);
    EXPECT_GT(b.eye(Eye::right).center.x(), 0.0);
    for (const auto& eye : b.eyes)
    {
        EXPECT_GE(eye.vertices.size(), 3u);
        EXPECT_GT(eye.radius, 0.0);
        EXPECT_LT(eye.center.z(), 0.0) << "eyes face the camera (-z)";
    }
}

TEST(SynthesizeBasis, RejectsTooFewVertices)
{
    EXPECT_THROW(synthesize_basis(1, 32), Error);
    EXPECT_THROW(synthesize_basis(1, 63), Error);
    EXPECT_THROW(synthesize_basis(1, 512, {0, 80, 64}), Error);
}

TEST(EvaluateGeometry, OriginGivesAverage)
{
    const FaceBasis& b = reference_basis();
    const Eigen::VectorXd v = evaluate_geometry(b, Eigen::VectorXd::Zero(80), Eigen::VectorXd::Zero(64));
    EXPECT_EQ(v, b.average_geometry);
}

TEST(EvaluateGeometry, UnitCoefficientAddsOneColumn)
{
    const FaceBasis& b = reference_basis();
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(80);
    alpha[0] = 1.0;
    const Eigen::VectorXd v = evaluate_geometry(b, alpha, Eigen::VectorXd::Zero(64));
    EXPECT_LT((v - (b.average_geometry + b.geometry_basis.col(0))).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EvaluateGeometry, MatchesNaiveSummation)
{
    const FaceBasis& b = reference_basis();
    Rng rng(42);
    for (int draw = 0; draw < 100; ++draw)
    {
        const Eigen::VectorXd alpha = rng.normal_vector(80, 2.0);
        const Eigen::VectorXd delta = rng.normal_vector(64, 2.0);
        const Eigen::VectorXd expected =
            naive_affine(b.average_geometry, {{&b.geometry_basis, &alpha}, {&b.expression_basis, &delta}});
        EXPECT_LT((evaluate_geometry(b, alpha, delta) - expected).cwiseAbs().maxCoeff(), 1e-12);
        const int vertex = rng.integer(0, b.vertex_count - 1);
        EXPECT_LT((evaluate_vertex(b, alpha, delta, vertex) - expected.segment<3>(3 * vertex)).cwiseAbs().maxCoeff(),
                  1e-12);
    }
}

TEST(EvaluateGeometry, IsLinearAroundTheMean)
{
    const FaceBasis& b = reference_basis();
    Rng rng(3);
    for (int draw = 0; draw < 20; ++draw)
    {
        const Eigen::VectorXd alpha = rng.normal_vector(80);
        const Eigen::VectorXd delta = rng.normal_vector(64);
        const Eigen::VectorXd once = evaluate_geometry(b, alpha, delta) - b.average_geometry;
        const Eigen::VectorXd twice = evaluate_geometry(b, 2.0 * alpha, 2.0 * delta) - b.average_geometry;
        EXPECT_LT((twice - 2.0 * once).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(EvaluateGeometry, RejectsLengthMismatch)
{
    const FaceBasis& b = reference_basis();
    EXPECT_THROW(evaluate_geometry(b, Eigen::VectorXd::Zero(79), Eigen::VectorXd::Zero(64)), Error);
    EXPECT_THROW(evaluate_geometry(b, Eigen::VectorXd::Zero(80), Eigen::VectorXd::Zero(65)), Error);
}

TEST(EvaluateReflectance, OriginAndLinearity)
{
    const FaceBasis& b = reference_basis();
    EXPECT_EQ(evaluate_reflectance_raw(b, Eigen::VectorXd::Zero(80)), b.average_reflectance);
    const int k = 5;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(80);
    beta[k] = 2.0;
    const Eigen::VectorXd expected = b.average_reflectance + 2.0 * b.reflectance_basis.col(k);
    EXPECT_LT((evaluate_reflectance_raw(b, beta) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EvaluateReflectance, MatchesNaiveSummationAndClamps)
{
    const FaceBasis& b = reference_basis();
    Rng rng(17);
    for (int draw = 0; draw < 100; ++draw)
    {
        const Eigen::VectorXd beta = rng.normal_vector(80, 5.0);
        const Eigen::VectorXd expected = naive_affine(b.average_reflectance, {{&b.reflectance_basis, &beta}});
        const Eigen::VectorXd raw = evaluate_reflectance_raw(b, beta);
        EXPECT_LT((raw - expected).cwiseAbs().maxCoeff(), 1e-12);
        const Eigen::VectorXd clamped = evaluate_reflectance(b, beta);
        for (Eigen::Index i = 0; i < raw.size(); ++i)
            EXPECT_EQ(clamped[i], std::clamp(raw[i], 0.0, 1.0));
    }
    EXPECT_THROW(evaluate_reflectance(b, Eigen::VectorXd::Zero(3)), Error);
}

TEST(ApplyRigidPose, IdentityAndKnownRotation)
{
    const FaceBasis& b = reference_basis();
    EXPECT_EQ(apply_rigid_pose(b.average_geometry, Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero()),
              b.average_geometry);

    const Eigen::Vector3d t(0.5, -1.0, 3.0);
    const Eigen::Quaterniond half_turn(Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitZ()));
    const Eigen::VectorXd out = apply_rigid_pose(Eigen::Vector3d(1.0, 0.0, 0.0), half_turn, t);
    EXPECT_LT((out - (Eigen::Vector3d(-1.0, 0.0, 0.0) + t)).norm(), 1e-15);
}

TEST(ApplyRigidPose, PreservesDistancesAndComposes)
{
    const FaceBasis& b = reference_basis();
    Rng rng(5);
    for (int draw = 0; draw < 20; ++draw)
    {
        const Eigen::Quaterniond r1 = rng.rotation(std::numbers::pi);
        const Eigen::Quaterniond r2 = rng.rotation(std::numbers::pi);
        const Eigen::Vector3d t1 = rng.normal_vector(3), t2 = rng.normal_vector(3);
        const Eigen::VectorXd once = apply_rigid_pose(b.average_geometry, r1, t1);
        for (int pair = 0; pair < 50; ++pair)
        {
            const int i = rng.integer(0, b.vertex_count - 1), j = rng.integer(0, b.vertex_count - 1);
            const double before = (b.average_vertex(i) - b.average_vertex(j)).norm();
            const double after = (once.segment<3>(3 * i) - once.segment<3>(3 * j)).norm();
            EXPECT_NEAR(before, after, 1e-9);
        }
        const Eigen::VectorXd sequential = apply_rigid_pose(once, r2, t2);
        const Eigen::VectorXd composed = apply_rigid_pose(b.average_geometry, r2 * r1, r2 * t1 + t2);
        EXPECT_LT((sequential - composed).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(ApplyRigidPose, RejectsNonUnitQuaternion)
{
    const Eigen::Quaterniond q(1.0, 0.1, 0.0, 0.0);
    EXPECT_THROW(apply_rigid_pose(Eigen::Vector3d(1.0, 2.0, 3.0), q, Eigen::Vector3d::Zero()), Error);
}

TEST(FaceParameters, JsonRoundTripIsBitExact)
{
    const FaceBasis& b = reference_basis();
    Rng rng(99);
    for (int draw = 0; draw < 10; ++draw)
    {
        const FaceParameters p = dvp::test::random_parameters(b, rng);
        const std::string text = to_json(p).dump();
        const FaceParameters back = parameters_from_json(nlohmann::json::parse(text));
        EXPECT_TRUE(back == p);
        EXPECT_EQ(to_json(back).dump(), text);
    }
}

TEST(FaceParameters, SequenceFileRoundTrip)
{
    const FaceBasis& b = reference_basis();
    Rng rng(100);
    std::vector<ParameterRecord> records;
    for (int f = 0; f < 4; ++f)
        records.push_back({dvp::test::random_parameters(b, rng), f == 2});
    const auto path = std::filesystem::temp_directory_path() / "dvp_test_params.jsonl";
    write_parameter_sequence(path, records);
    const auto back = read_parameter_records(path);
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t f = 0; f < back.size(); ++f)
    {
        EXPECT_TRUE(back[f].params == records[f].params);
        EXPECT_EQ(back[f].flagged, records[f].flagged);
    }
    std::filesystem::remove(path);
}

TEST(FaceParameters, ValidateChecksInvariants)
{
    const FaceBasis& b = reference_basis();
    FaceParameters p = neutral_parameters(b);
    EXPECT_NO_THROW(validate(p, b));
    p.gaze[1] = gaze_limit + 0.01;
    EXPECT_THROW(validate(p, b), Error);
    p = neutral_parameters(b);
    p.rotation.coeffs() *= 1.001;
    EXPECT_THROW(validate(p, b), Error);
}

TEST(BasisFile, RoundTripsExactly)
{
    const FaceBasis& b = reference_basis();
    const auto path = std::filesystem::temp_directory_path() / "dvp_test_basis.dvpb";
    save_basis(path, b);
    const FaceBasis back = load_basis(path);
    EXPECT_EQ(serialize_basis(back), serialize_basis(b));
    EXPECT_EQ(back.geometry_basis, b.geometry_basis);
    EXPECT_EQ(back.triangles, b.triangles);
    std::filesystem::remove(path);

    auto bytes = serialize_basis(b);
    bytes[0] = 'X';
    EXPECT_THROW(deserialize_basis(bytes), Error);
    bytes = serialize_basis(b);
    bytes.resize(bytes.size() - 1);
    EXPECT_THROW(deserialize_basis(bytes), Error);
}
