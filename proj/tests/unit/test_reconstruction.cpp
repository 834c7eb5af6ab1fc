/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: tests/unit/test_reconstruction.cpp
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
#include "dvp/fitting/energy.hpp"
#include "dvp/fitting/landmarks.hpp"
#include "dvp/fitting/solver.hpp"
#include "dvp/render/face_renderer.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

namespace {

using namespace dvp;

const CameraIntrinsics cam64 = default_camera(64, 64);

using test::Scene;
using test::head_size;
using test::perturb;

Scene make_scene(const FaceBasis& basis, test::Rng& rng, const CameraIntrinsics& cam = cam64)
{
    return test::make_scene(basis, rng, cam);
}

// ---------------------------------------------------------------- landmarks

TEST(Landmarks, DefaultVerticesAreDistinctAndValid)
{
    const auto& basis = test::reference_basis();
    const auto v = default_landmark_vertices(basis);
    ASSERT_EQ(v.size(), 66u);
    EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 66u);
    for (int i : v)
    {
        EXPECT_GE(i, 0);
        EXPECT_LT(i, basis.vertex_count);
    }
    EXPECT_EQ(v, default_landmark_vertices(basis));
    EXPECT_EQ(default_landmark_vertices(test::small_basis()).size(), 66u);
}

TEST(Landmarks, ValidationRejectsBadSets)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(1);
    Scene s = make_scene(basis, rng);
    EXPECT_NO_THROW(validate(s.landmarks, basis));

    LandmarkSet short_set = s.landmarks;
    short_set.landmarks.pop_back();
    try
    {
        validate(short_set, basis);
        FAIL();
    } catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }

    LandmarkSet bad_vertex = s.landmarks;
    bad_vertex.landmarks[3].vertex = basis.vertex_count;
    try
    {
        validate(bad_vertex, basis);
        FAIL();
    } catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::out_of_range);
    }
}

TEST(Landmarks, JsonRoundTripIsExact)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(2);
    const Scene s = make_scene(basis, rng);
    const auto path = std::filesystem::temp_directory_path() / "dvp_landmarks_roundtrip.json";
    write_landmarks(path, s.landmarks);
    const LandmarkSet back = read_landmarks(path);
    std::filesystem::remove(path);
    ASSERT_EQ(back.landmarks.size(), 66u);
    for (std::size_t i = 0; i < 66; ++i)
    {
        EXPECT_EQ(back.landmarks[i].position, s.landmarks.landmarks[i].position);
        EXPECT_EQ(back.landmarks[i].vertex, s.landmarks.landmarks[i].vertex);
        EXPECT_EQ(back.landmarks[i].confidence, s.landmarks.landmarks[i].confidence);
    }
    EXPECT_EQ(back.iris[0], s.landmarks.iris[0]);
    EXPECT_EQ(back.iris[1], s.landmarks.iris[1]);
}

TEST(Landmarks, MalformedDocumentsAreFormatErrors)
{
    const auto path = std::filesystem::temp_directory_path() / "dvp_landmarks_bad.json";
    for (const char* text : {"{", "{\"landmarks\": []}", "{\"landmarks\": [{\"x\": 1}], \"iris_left\": [0,0]}"})
    {
        std::ofstream(path) << text;
        try
        {
            (void)read_landmarks(path);
            FAIL() << text;
        } catch (const Error& e)
        {
            EXPECT_EQ(e.code(), ErrorCode::format_error) << text;
        }
    }
    std::filesystem::remove(path);
    EXPECT_THROW((void)read_landmarks(path), Error);
}

// ---------------------------------------------------------------- residual blocks

TEST(PhotometricResiduals, ZeroOnOwnRender)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(3);
    const Scene s = make_scene(basis, rng);
    const auto r = residuals_photo(s.frame, basis, s.truth, cam64);
    EXPECT_GT(r.pixels.size(), 100u);
    EXPECT_EQ(r.values.size(), 3 * static_cast<Eigen::Index>(r.pixels.size()));
    EXPECT_EQ(r.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PhotometricResiduals, ConstantOffsetGivesConstantResidual)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(4);
    Scene s = make_scene(basis, rng);
    for (double& v : s.frame.data)
        v += 10.0;
    const auto r = residuals_photo(s.frame, basis, s.truth, cam64);
    for (Eigen::Index i = 0; i < r.values.size(); ++i)
        ASSERT_NEAR(r.values[i], -10.0 / 255.0, 1e-14);
}

TEST(PhotometricResiduals, EnergyMatchesPerPixelSummation)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(5);
    for (int trial = 0; trial < 5; ++trial)
    {
        const Scene observed = make_scene(basis, rng);
        const FaceParameters p = test::random_parameters(basis, rng, 0.5, radians(15.0));
        const RasterImage synth = rasterize_color(basis, p, cam64);
        const PosedFace posed = pose_face(basis, p, cam64);
        const VisibilityBuffer mask = rasterize_face(basis, posed, cam64);
        double oracle = 0.0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (mask.at(x, y).covered())
                    for (int c = 0; c < 3; ++c)
                        oracle += std::abs(synth.at(x, y, c) - observed.frame.at(x, y, c)) / 255.0;
        EXPECT_NEAR(residuals_photo(observed.frame, basis, p, cam64).l1(), oracle, 1e-9);
    }
}

TEST(PhotometricResiduals, Errors)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(6);
    const Scene s = make_scene(basis, rng);
    FaceParameters behind = s.truth;
    behind.translation.z() = -4.0;
    try
    {
        (void)residuals_photo(s.frame, basis, behind, cam64);
        FAIL();
    } catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::empty_foreground);
    }
    try
    {
        (void)residuals_photo(RasterImage(32, 64), basis, s.truth, cam64);
        FAIL();
    } catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
    }
}

TEST(LandmarkResidualBlock, ZeroAtModelProjections)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(7);
    const Scene s = make_scene(basis, rng);
    const auto r = residuals_landmark(s.landmarks, basis, s.truth, cam64);
    EXPECT_EQ(r.values.size(), 132);
    EXPECT_EQ(r.dropped, 0);
    EXPECT_LT(r.values.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LandmarkResidualBlock, ZeroConfidenceSilencesLandmark)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(8);
    Scene s = make_scene(basis, rng);
    s.landmarks.landmarks[10].position += Eigen::Vector2d(40.0, -25.0);
    s.landmarks.landmarks[10].confidence = 0.0;
    const auto r = residuals_landmark(s.landmarks, basis, s.truth, cam64);
    EXPECT_EQ(r.values[20], 0.0);
    EXPECT_EQ(r.values[21], 0.0);
}

TEST(LandmarkResidualBlock, DisplacementNormalizedByDiagonal)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(9);
    Scene s = make_scene(basis, rng);
    s.landmarks.landmarks[5].position -= Eigen::Vector2d(3.0, 4.0);
    const auto r = residuals_landmark(s.landmarks, basis, s.truth, cam64);
    const double d = std::sqrt(64.0 * 64.0 + 64.0 * 64.0);
    EXPECT_NEAR(r.values.segment<2>(10).norm(), 5.0 / d, 1e-12);
    EXPECT_NEAR(r.values[10], 3.0 / d, 1e-12);
    EXPECT_NEAR(r.values[11], 4.0 / d, 1e-12);
}

TEST(LandmarkResidualBlock, BehindCameraIsDroppedAndCounted)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(10);
    const Scene s = make_scene(basis, rng);
    FaceParameters p = s.truth;
    p.translation.z() = -10.0;
    const auto r = residuals_landmark(s.landmarks, basis, p, cam64);
    EXPECT_EQ(r.dropped, 66);
    EXPECT_EQ(r.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(RegularizerBlock, Examples)
{
    const auto& basis = test::reference_basis();
    FaceParameters p = neutral_parameters(basis);
    EXPECT_EQ(residual_reg(p, basis).size(), 80 + 80 + 64);
    EXPECT_EQ(residual_reg(p, basis).cwiseAbs().maxCoeff(), 0.0);
    p.alpha[0] = basis.geometry_stddev[0];
    EXPECT_DOUBLE_EQ(residual_reg(p, basis)[0], 1.0);
}

TEST(RegularizerBlock, MatchesDirectSummation)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial)
    {
        const FaceParameters p = test::random_parameters(basis, rng, 1.0);
        double oracle = 0.0;
        for (int k = 0; k < 80; ++k)
            oracle += std::pow(p.alpha[k] / basis.geometry_stddev[k], 2) + std::pow(p.beta[k] / basis.reflectance_stddev[k], 2);
        for (int k = 0; k < 64; ++k)
            oracle += std::pow(p.delta[k] / basis.expression_stddev[k], 2);
        EXPECT_NEAR(residual_reg(p, basis).squaredNorm(), oracle, 1e-12 * std::max(1.0, oracle));
    }
}

// ---------------------------------------------------------------- total energy

TEST(TotalEnergy, PerfectFitWithZeroCoefficientsIsZero)
{
    const auto& basis = test::reference_basis();
    const FaceParameters p = neutral_parameters(basis);
    const RasterImage frame = rasterize_color(basis, p, cam64);
    const LandmarkSet lm = landmarks_from_parameters(basis, p, cam64, default_landmark_vertices(basis));
    EXPECT_EQ(total_energy(frame, lm, basis, p, {}, cam64), 0.0);
}

TEST(TotalEnergy, PhotoOnlyWeightsGivePhotometricTerm)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(12);
    const Scene s = make_scene(basis, rng);
    const FaceParameters p = test::random_parameters(basis, rng);
    EXPECT_EQ(total_energy(s.frame, s.landmarks, basis, p, {1.0, 0.0, 0.0}, cam64),
              residuals_photo(s.frame, basis, p, cam64).l1());
}

TEST(TotalEnergy, MatchesTermByTermSum)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(13);
    for (int trial = 0; trial < 5; ++trial)
    {
        const Scene s = make_scene(basis, rng);
        const FaceParameters p = test::random_parameters(basis, rng);
        const EnergyWeights w{rng.uniform(0.1, 2.0), rng.uniform(0.1, 20.0), rng.uniform(0.01, 1.0)};
        const double photo = residuals_photo(s.frame, basis, p, cam64).l1();
        const double land = residuals_landmark(s.landmarks, basis, p, cam64).values.squaredNorm();
        const double reg = residual_reg(p, basis).squaredNorm();
        EXPECT_NEAR(total_energy(s.frame, s.landmarks, basis, p, w, cam64), w.photo * photo + w.land * land + w.reg * reg,
                    1e-9);
    }
}

TEST(TotalEnergy, RejectsDegenerateWeights)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(14);
    const Scene s = make_scene(basis, rng);
    EXPECT_THROW((void)total_energy(s.frame, s.landmarks, basis, s.truth, {0.0, 0.0, 0.0}, cam64), Error);
    EXPECT_THROW((void)total_energy(s.frame, s.landmarks, basis, s.truth, {-1.0, 1.0, 1.0}, cam64), Error);
}

// ---------------------------------------------------------------- jacobians and normal equations

double relative_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-30);
}

TEST(Jacobians, LandmarkAnalyticMatchesCentralDifferences)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(15);
    const Scene s = make_scene(basis, rng);
    const FaceParameters p = perturb(basis, s.truth, rng);
    const ColumnLayout layout(ActiveSet::for_mode(FitMode::full), basis);
    ASSERT_EQ(layout.count, 257);
    const Eigen::MatrixXd analytic = landmark_jacobian(s.landmarks, basis, p, cam64, layout);
    const double h = 1e-6;
    for (int col = 0; col < layout.count; ++col)
    {
        Eigen::VectorXd step = Eigen::VectorXd::Zero(layout.count);
        step[col] = h;
        const Eigen::VectorXd plus = residuals_landmark(s.landmarks, basis, apply_increment(p, layout, step), cam64).values;
        const Eigen::VectorXd minus =
            residuals_landmark(s.landmarks, basis, apply_increment(p, layout, -step), cam64).values;
        const Eigen::VectorXd fd = (plus - minus) / (2.0 * h);
        if (fd.norm() < 1e-12 && analytic.col(col).norm() < 1e-12)
            continue;
        EXPECT_LT(relative_difference(analytic.col(col), fd), 1e-4) << "column " << col;
    }
}

TEST(Jacobians, RegularizerAnalyticMatchesCentralDifferences)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(16);
    const FaceParameters p = test::random_parameters(basis, rng);
    const ColumnLayout layout(ActiveSet::for_mode(FitMode::full), basis);
    const Eigen::MatrixXd analytic = regularizer_jacobian(basis, layout);
    const double h = 1e-6;
    Eigen::MatrixXd fd(analytic.rows(), analytic.cols());
    for (int col = 0; col < layout.count; ++col)
    {
        Eigen::VectorXd step = Eigen::VectorXd::Zero(layout.count);
        step[col] = h;
        fd.col(col) = (residual_reg(apply_increment(p, layout, step), basis) -
                       residual_reg(apply_increment(p, layout, -step), basis)) /
                      (2.0 * h);
    }
    EXPECT_LT(relative_difference(analytic, fd), 1e-4);
}

TEST(Jacobians, PhotometricColumnsTrackEnergyChange)
{
    // Forward differences on the illumination block are exact up to rounding: shading is linear in gamma.
    const auto& basis = test::reference_basis();
    test::Rng rng(17);
    const Scene s = make_scene(basis, rng);
    const ColumnLayout layout(ActiveSet::for_mode(FitMode::tracking), basis);
    const RenderState state = render_state(basis, s.truth, cam64);
    const auto base = residuals_photo(s.frame, basis, s.truth, state);
    const Eigen::MatrixXd jac = photometric_jacobian(basis, s.truth, cam64, state, base, layout, 1e-4);
    EXPECT_EQ(jac.rows(), base.values.size());
    EXPECT_EQ(jac.cols(), 97);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(97);
    step[layout.sh] = 0.01;
    const auto moved = residuals_photo(s.frame, basis, apply_increment(s.truth, layout, step), cam64);
    ASSERT_EQ(moved.pixels, base.pixels);
    EXPECT_LT(relative_difference(jac * step, moved.values - base.values), 1e-3);
}

TEST(Workspace, TrackingModeSystemIs97By97)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(18);
    const Scene s = make_scene(basis, rng);
    const FaceParameters p = perturb(basis, s.truth, rng);
    const FitConfig config;
    const SolverWorkspace ws =
        build_workspace(s.frame, s.landmarks, basis, p, cam64, ActiveSet::for_mode(FitMode::tracking), config);
    EXPECT_EQ(ActiveSet::for_mode(FitMode::tracking).size(basis), 97);
    EXPECT_EQ(ws.jacobian.cols(), 97);
    EXPECT_EQ(ws.normal.rows(), 97);
    EXPECT_EQ(ws.normal.cols(), 97);
    EXPECT_EQ(ws.jacobian.rows(), ws.residuals.size());
    EXPECT_EQ(ws.weights.size(), ws.residuals.size());
    EXPECT_LE((ws.normal - ws.normal.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::MatrixXd damped = ws.normal;
    damped.diagonal().array() += config.initial_damping * ws.normal.diagonal().mean();
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(damped).info(), Eigen::Success);
}

TEST(Workspace, FullModeSolvesEverythingButGaze)
{
    const auto& basis = test::reference_basis();
    EXPECT_EQ(ActiveSet::for_mode(FitMode::full).size(basis), 261 - gaze_dimension);
    EXPECT_EQ(ActiveSet::rigid().size(basis), 6);
}

// ---------------------------------------------------------------- fit_frame

TEST(FitFrame, GroundTruthIsAFixedPointOfTheDataTerms)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(19);
    const Scene s = make_scene(basis, rng);
    FitConfig config;
    config.weights.reg = 0.0;
    const FitResult r = fit_frame(s.frame, s.landmarks, basis, s.truth, FitMode::tracking, cam64, config);
    EXPECT_FALSE(r.flagged);
    EXPECT_LT(degrees(rotation_angle_between(r.params.rotation, s.truth.rotation)), 1e-6);
    EXPECT_LT((r.params.translation - s.truth.translation).norm(), 1e-8);
    EXPECT_LT((r.params.delta - s.truth.delta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitFrame, RecoversPerturbedPoseAndKeepsIdentity)
{
    const auto& basis = test::reference_basis();
    const double size = head_size(basis);
    test::Rng rng(20);
    for (int trial = 0; trial < 4; ++trial)
    {
        const Scene s = make_scene(basis, rng);
        const FaceParameters init = perturb(basis, s.truth, rng);
        const FitResult r = fit_frame(s.frame, s.landmarks, basis, init, FitMode::tracking, cam64);
        EXPECT_FALSE(r.flagged);
        EXPECT_EQ(r.active_dof, 97);
        EXPECT_LT(degrees(rotation_angle_between(r.params.rotation, s.truth.rotation)), 0.5);
        EXPECT_LT((r.params.translation - s.truth.translation).norm(), 0.005 * size);
        for (std::size_t i = 1; i < r.energies.size(); ++i)
            EXPECT_LE(r.energies[i], r.energies[i - 1]);
        EXPECT_TRUE(r.params.alpha == init.alpha);
        EXPECT_TRUE(r.params.beta == init.beta);

        // Ground-truth photometric energy is 0; compare per residual.
        const auto photo = residuals_photo(s.frame, basis, r.params, cam64);
        EXPECT_LT(photo.l1() / static_cast<double>(photo.values.size()), 1e-3);
        for (int k = 0; k < gaze_dimension; ++k)
            EXPECT_NEAR(r.params.gaze[k], s.truth.gaze[k], 0.02);
    }
}

TEST(FitFrame, FullModeFromNeutralInitialization)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(21);
    const Scene s = make_scene(basis, rng);
    const FitResult r = fit_frame(s.frame, s.landmarks, basis, neutral_parameters(basis), FitMode::full, cam64);
    EXPECT_EQ(r.active_dof, 257);
    EXPECT_LT(degrees(rotation_angle_between(r.params.rotation, s.truth.rotation)), 1.0);
    EXPECT_LT(r.energies.back(), 0.1 * r.energies.front());
    for (std::size_t i = 1; i < r.energies.size(); ++i)
        EXPECT_LE(r.energies[i], r.energies[i - 1]);
}

TEST(FitFrame, EmptyForegroundIsAnError)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(22);
    const Scene s = make_scene(basis, rng);
    FaceParameters init = s.truth;
    init.translation = {0.0, 0.0, -5.0};
    try
    {
        (void)fit_frame(s.frame, s.landmarks, basis, init, FitMode::tracking, cam64);
        FAIL();
    } catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::empty_foreground);
    }
}

// ---------------------------------------------------------------- track_sequence

TEST(TrackSequence, SingleFrameIsOneFullFit)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(23);
    const Scene s = make_scene(basis, rng);
    const auto init = neutral_parameters(basis);
    const TrackResult t = track_sequence({s.frame}, {s.landmarks}, basis, cam64, {}, init);
    ASSERT_EQ(t.records.size(), 1u);
    const FitResult direct = fit_frame(s.frame, s.landmarks, basis, init, FitMode::full, cam64);
    EXPECT_TRUE(t.records[0].params == direct.params);
    EXPECT_EQ(t.fits[0].active_dof, 257);
}

TEST(TrackSequence, StationaryInputGivesStationaryParameters)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(24);
    const Scene s = make_scene(basis, rng);
    const std::vector<RasterImage> frames(4, s.frame);
    const std::vector<LandmarkSet> lms(4, s.landmarks);
    FitConfig config;
    config.max_iters = 30;
    const TrackResult t = track_sequence(frames, lms, basis, cam64, config, s.truth);
    for (std::size_t f = 2; f < frames.size(); ++f)
    {
        EXPECT_LT(rotation_angle_between(t.records[f].params.rotation, t.records[1].params.rotation), 1e-6);
        EXPECT_LT((t.records[f].params.translation - t.records[1].params.translation).norm(), 1e-6);
        EXPECT_LT((t.records[f].params.delta - t.records[1].params.delta).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_TRUE(t.records[f].params.alpha == t.records[0].params.alpha);
        EXPECT_TRUE(t.records[f].params.beta == t.records[0].params.beta);
    }
}

TEST(TrackSequence, SmoothSyntheticPathIsFollowed)
{
    const auto& basis = test::reference_basis();
    test::Rng rng(25);
    const FaceParameters base = test::random_parameters(basis, rng, 0.5, 0.0);
    const auto vertices = default_landmark_vertices(basis);
    std::vector<RasterImage> frames;
    std::vector<LandmarkSet> lms;
    std::vector<FaceParameters> truth;
    for (int f = 0; f < 30; ++f)
    {
        FaceParameters p = base;
        const double t = f / 29.0;
        p.rotation = exp_map(Eigen::Vector3d(0.15 * std::sin(2.0 * t), 0.35 * std::sin(3.0 * t), 0.05 * t));
        p.translation += Eigen::Vector3d(0.1 * std::sin(t), -0.05 * t, 0.1 * std::cos(2.0 * t));
        p.delta *= std::cos(4.0 * t);
        truth.push_back(p);
        frames.push_back(rasterize_color(basis, p, cam64));
        lms.push_back(landmarks_from_parameters(basis, p, cam64, vertices));
    }
    const TrackResult track = track_sequence(frames, lms, basis, cam64, {}, neutral_parameters(basis));
    ASSERT_EQ(track.records.size(), 30u);
    double mean = 0.0;
    for (int f = 0; f < 30; ++f)
    {
        EXPECT_FALSE(track.records[f].flagged);
        mean += degrees(rotation_angle_between(track.records[f].params.rotation, truth[f].rotation)) / 30.0;
    }
    EXPECT_LT(mean, 1.0);
}

TEST(TrackSequence, InputErrors)
{
    const auto& basis = test::reference_basis();
    EXPECT_THROW((void)track_sequence({}, {}, basis, cam64, {}, neutral_parameters(basis)), Error);
    test::Rng rng(26);
    const Scene s = make_scene(basis, rng);
    EXPECT_THROW((void)track_sequence({s.frame, s.frame}, {s.landmarks}, basis, cam64, {}, neutral_parameters(basis)),
                 Error);
}

} // namespace
