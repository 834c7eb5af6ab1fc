/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: tests/unit/test_evaluation.cpp
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
#include "dvp/conditioning/conditioning.hpp"
#include "dvp/eval/evaluation.hpp"
#include "dvp/eval/self_reenactment.hpp"
#include "dvp/nn/networks.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

using namespace dvp;

RasterImage filled(int w, int h, double r, double g, double b)
{
    RasterImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
        {
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
        }
    return img;
}

RasterImage random_image(test::Rng& rng, int w, int h)
{
    RasterImage img(w, h);
    for (double& v : img.data)
        v = std::round(rng.uniform(0.0, 255.0));
    return img;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

TEST(PhotometricError, ClosedForms)
{
    const auto black = filled(4, 3, 0, 0, 0), white = filled(4, 3, 255, 255, 255);
    EXPECT_NEAR(photometric_error(black, white).mean, 441.6729559300637, 1e-10);
    EXPECT_DOUBLE_EQ(max_photometric_error, std::sqrt(3.0) * 255.0);
    EXPECT_DOUBLE_EQ(photometric_error(filled(2, 2, 3, 4, 0), filled(2, 2, 0, 0, 0)).mean, 5.0);

    // One pixel off by (10, 0, 0) in a 4x4 image.
    auto a = filled(4, 4, 100, 100, 100), b = a;
    b.at(2, 1, 0) = 110;
    const ErrorMap m = photometric_error(a, b);
    EXPECT_DOUBLE_EQ(m.at(2, 1), 10.0);
    EXPECT_DOUBLE_EQ(m.mean, 10.0 / 16.0);
}

TEST(PhotometricError, MetricProperties)
{
    test::Rng rng(5);
    for (int i = 0; i < 20; ++i)
    {
        const auto a = random_image(rng, 6, 5), b = random_image(rng, 6, 5), c = random_image(rng, 6, 5);
        const auto ab = photometric_error(a, b), ba = photometric_error(b, a);
        const auto bc = photometric_error(b, c), ac = photometric_error(a, c);
        EXPECT_EQ(photometric_error(a, a).mean, 0.0);
        EXPECT_EQ(ab.values, ba.values);
        for (std::size_t k = 0; k < ab.values.size(); ++k)
        {
            EXPECT_GE(ab.values[k], 0.0);
            EXPECT_LE(ab.values[k], max_photometric_error);
            EXPECT_LE(ac.values[k], ab.values[k] + bc.values[k] + 1e-9);
        }
    }
}

TEST(PhotometricError, Preconditions)
{
    try
    {
        (void)photometric_error(filled(2, 2, 0, 0, 0), filled(3, 2, 0, 0, 0));
        FAIL();
    } catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
    }
    try
    {
        (void)photometric_error(normalize(filled(2, 2, 0, 0, 0)), filled(2, 2, 0, 0, 0));
        FAIL();
    } catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
}

TEST(Report, MaskedMeansAndDeterminism)
{
    test::Rng rng(9);
    std::vector<RasterImage> pred, truth;
    std::vector<std::vector<bool>> masks;
    for (int i = 0; i < 4; ++i)
    {
        pred.push_back(random_image(rng, 5, 4));
        truth.push_back(random_image(rng, 5, 4));
        std::vector<bool> m(20, false);
        m[static_cast<std::size_t>(i)] = true;
        masks.push_back(m);
    }
    const ErrorReport r = make_report(pred, truth, {11, 5, 7, "x"}, masks);
    double expected = 0.0, fg = 0.0;
    for (int i = 0; i < 4; ++i)
    {
        const ErrorMap m = photometric_error(pred[i], truth[i]);
        EXPECT_EQ(r.frame_means[i], m.mean);
        EXPECT_EQ(r.foreground_means[i], m.values[static_cast<std::size_t>(i)]);
        expected += m.mean / 4.0;
        fg += m.values[static_cast<std::size_t>(i)] / 4.0;
    }
    EXPECT_NEAR(r.sequence_mean, expected, 1e-12);
    EXPECT_NEAR(r.foreground_mean, fg, 1e-12);
    EXPECT_EQ(masked_mean(r.maps[0], std::vector<bool>(20, false)), 0.0);

    const auto dir = std::filesystem::temp_directory_path() / "dvp_test_report";
    std::filesystem::remove_all(dir);
    write_report(dir / "a", r);
    write_report(dir / "b", make_report(pred, truth, {11, 5, 7, "x"}, masks));
    for (const char* f : {"frames.csv", "summary.json", "error_000000.png", "error_000003.png"})
    {
        ASSERT_TRUE(std::filesystem::exists(dir / "a" / f)) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
    EXPECT_EQ(summary.at("window_size"), 11);
    EXPECT_EQ(summary.at("corpus_size"), 7);
    EXPECT_EQ(summary.at("frames"), 4);
    std::filesystem::remove_all(dir);
}

TEST(Report, RejectsMismatchedInputs)
{
    std::vector<RasterImage> a{filled(2, 2, 0, 0, 0)}, b;
    EXPECT_THROW((void)make_report(a, b, {}), Error);
    std::vector<std::vector<bool>> masks(2, std::vector<bool>(4, true));
    EXPECT_THROW((void)make_report(a, a, {}, masks), Error);
}

TEST(HeatMap, PaletteEndpoints)
{
    EXPECT_EQ(heat_color(0.0, 90.0), (std::array<double, 3>{0, 0, 0}));
    EXPECT_EQ(heat_color(30.0, 90.0), (std::array<double, 3>{255, 0, 0}));
    EXPECT_EQ(heat_color(60.0, 90.0), (std::array<double, 3>{255, 255, 0}));
    EXPECT_EQ(heat_color(500.0, 90.0), (std::array<double, 3>{255, 255, 255}));
    ErrorMap m{2, 1, {0.0, 200.0}, 100.0};
    const RasterImage gray = error_map_image(m, 100.0, false);
    EXPECT_EQ(gray.at(0, 0, 0), 0.0);
    EXPECT_EQ(gray.at(1, 0, 2), 255.0);
}

TEST(Split, TwoThirdsRoundedUp)
{
    EXPECT_EQ(self_reenactment_split_index(3), 2u);
    EXPECT_EQ(self_reenactment_split_index(300), 200u);
    EXPECT_EQ(self_reenactment_split_index(2000), 1334u);
    std::vector<int> items(2000);
    const auto s = self_reenactment_split(items);
    EXPECT_EQ(s.train.size(), 1334u);
    EXPECT_EQ(s.test.size(), 666u);
    try
    {
        (void)self_reenactment_split_index(2);
        FAIL();
    } catch (const Error& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
}

TEST(NearestNeighbor, MatchesBruteForceAndBreaksTiesLow)
{
    const FaceBasis& basis = test::small_basis();
    const double scale = head_scale(basis);
    EXPECT_GT(scale, 0.0);
    test::Rng rng(21);
    std::vector<FaceParameters> corpus;
    for (int i = 0; i < 40; ++i)
        corpus.push_back(test::random_parameters(basis, rng, 0.8, radians(25.0)));
    const NearestNeighborWeights w{1.0, 0.5};
    for (int q = 0; q < 20; ++q)
    {
        const FaceParameters query = test::random_parameters(basis, rng, 0.8, radians(25.0));
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t i = 0; i < corpus.size(); ++i)
        {
            const double angle = 2.0 * std::acos(std::min(1.0, std::abs(query.rotation.dot(corpus[i].rotation))));
            const double d = w.pose * (angle + (query.translation - corpus[i].translation).norm() / scale) +
                             w.expression * (query.delta - corpus[i].delta).norm();
            if (d < best_d)
            {
                best_d = d;
                best = i;
            }
        }
        const NearestNeighbor nn = nearest_neighbor(query, corpus, w, scale);
        EXPECT_EQ(nn.index, best);
        EXPECT_NEAR(nn.distance, best_d, 1e-9);
    }
    // Self query hits distance 0; a duplicate later in the corpus loses the tie.
    corpus.push_back(corpus[3]);
    const NearestNeighbor self = nearest_neighbor(corpus[3], corpus, w, scale);
    EXPECT_EQ(self.index, 3u);
    EXPECT_NEAR(self.distance, 0.0, 1e-12);

    std::vector<RasterImage> frames;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        frames.push_back(filled(2, 2, static_cast<double>(i), 0, 0));
    EXPECT_EQ(nearest_neighbor_baseline(corpus[7], corpus, frames, w, scale).at(0, 0, 0), 7.0);
    EXPECT_THROW((void)nearest_neighbor(corpus[0], {}, w, scale), Error);
}

TEST(WindowSize, SingleFrameWindowHasNineChannels)
{
    const FaceBasis& basis = test::small_basis();
    test::Rng rng(2);
    std::vector<FaceParameters> seq{test::random_parameters(basis, rng), test::random_parameters(basis, rng)};
    const CameraIntrinsics cam = default_camera(16, 16);
    WindowSequence one(basis, seq, cam, 1, WindowPadding::replicate);
    EXPECT_EQ(one.window(1).channels(), 9);
    EXPECT_EQ(nn::make_generator_config(16, 1).input_channels, 9);
    EXPECT_EQ(nn::make_generator_config(16, 11).input_channels, 99);
}

TEST(SelfReenactment, ProtocolShapesOnTinyScene)
{
    const FaceBasis& basis = test::small_basis();
    const CameraIntrinsics cam = default_camera(16, 16);
    test::Rng rng(4);
    std::vector<FaceParameters> params;
    std::vector<RasterImage> frames;
    for (int f = 0; f < 12; ++f)
    {
        params.push_back(test::random_parameters(basis, rng));
        frames.push_back(random_image(rng, 16, 16));
    }
    SelfReenactmentConfig cfg;
    cfg.window_size = 2;
    cfg.train.iterations = 2;
    cfg.train.batch_size = 2;
    cfg.corpus_limit = 5;
    cfg.label = "tiny";
    const auto r = run_self_reenactment(basis, cam, params, frames, cfg);
    EXPECT_EQ(r.corpus_size, 5u);
    EXPECT_EQ(r.predictions.size(), 4u);
    EXPECT_EQ(r.trained.frame_means.size(), 4u);
    EXPECT_EQ(r.trained.foreground_means.size(), 4u);
    EXPECT_EQ(r.untrained.fingerprint.label, "tiny/untrained");
    EXPECT_EQ(r.nearest_neighbor.fingerprint.label, "tiny/nearest_neighbor");
    EXPECT_EQ(r.trained.fingerprint.window_size, 2);
    EXPECT_EQ(r.training.history.size(), 2u);

    std::vector<AblationEntry> entries{{{"a", 2, 16, 5}, r}, {{"b", 2, 16, 5}, r}};
    const RasterImage grid = ablation_grid(entries, 0);
    EXPECT_EQ(grid.width, 32);
    EXPECT_EQ(grid.height, 16);
}

} // namespace
