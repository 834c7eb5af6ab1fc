/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: tests/grad_check.hpp
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

#ifndef DVP_TESTS_GRAD_CHECK_HPP
#define DVP_TESTS_GRAD_CHECK_HPP

#include "dvp/nn/losses.hpp"
#include "dvp/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <vector>

// Central finite-difference checks of every layer and a tiny end-to-end network, in double.
namespace dvp::test {

using namespace dvp::nn;

using Td = Tensor<double>;

inline Td random_tensor(int n, int c, int h, int w, std::mt19937_64& rng, double scale = 1.0)
{
    Td t(n, c, h, w);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (double& v : t.data)
        v = u(rng);
    return t;
}

inline double dot(const Td& a, const Td& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a.data[i] * b.data[i];
    return s;
}

inline constexpr double fd_step = 1e-6;
inline constexpr double fd_tolerance = 1e-4;
// Norm floor for arrays whose true gradient is zero (a bias feeding batch norm).
inline constexpr double gradient_floor = 1e-6;

/// Array norm below which central-difference roundoff on a loss of size |loss| alone reaches the tolerance.
inline double roundoff_floor(double loss, std::size_t n)
{
    return std::sqrt(double(n)) * std::abs(loss) * std::numeric_limits<double>::epsilon() / fd_step / fd_tolerance;
}

/*
 * Relative error per parameter array, ||analytic - numeric|| / max(||analytic||, ||numeric||).
 * Single elements far below the array's scale sit under the roundoff of a
 * 1e-6 central difference, so they are judged together with their array.
 */
struct GradCheck
{
    double worst = 0.0;
    std::size_t checked = 0;
    std::string where;

    void add(const std::vector<double>& analytic, const std::vector<double>& numeric, const std::string& name,
             double floor = gradient_floor)
    {
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i)
        {
            diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
            na += analytic[i] * analytic[i];
            nn += numeric[i] * numeric[i];
        }
        const double rel = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
        checked += analytic.size();
        if (rel > worst)
        {
            worst = rel;
            char buf[96];
            std::snprintf(buf, sizeof buf, " relative %.3e, |analytic| %.3e", rel, std::sqrt(na));
            where = name + buf;
        }
    }

    void merge(const GradCheck& other)
    {
        checked += other.checked;
        if (other.worst > worst)
        {
            worst = other.worst;
            where = other.where;
        }
    }

    bool ok() const noexcept { return worst < fd_tolerance; }
};

/// Central differences of `loss` w.r.t. every element of `values`.
inline void check_array(std::vector<double>& values, const std::vector<double>& analytic,
                        const std::function<double()>& loss, const std::string& name, GradCheck& report)
{
    std::vector<double> numeric(values.size());
    const double base = loss();
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        const double keep = values[i];
        values[i] = keep + fd_step;
        const double up = loss();
        values[i] = keep - fd_step;
        const double down = loss();
        values[i] = keep;
        numeric[i] = (up - down) / (2.0 * fd_step);
    }
    report.add(analytic, numeric, name, std::max(gradient_floor, roundoff_floor(base, values.size())));
}

/// Checks a single layer: L = <r, f(x)>.
template <typename Layer, typename Fwd>
GradCheck check_layer(Layer& layer, Td x, Fwd forward, std::vector<Parameter<double>*> params, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const Td y0 = forward(layer, x);
    const Td r = random_tensor(y0.n, y0.c, y0.h, y0.w, rng);
    for (auto* p : params)
        p->zero_grad();
    (void)forward(layer, x);
    const Td dx = layer.backward(r);
    GradCheck report;
    auto loss = [&] { return dot(r, forward(layer, x)); };
    check_array(x.data, dx.data, loss, "input", report);
    for (auto* p : params)
    {
        const std::vector<double> g = p->grad;
        check_array(p->value, g, loss, p->name, report);
    }
    return report;
}

inline void randomize(const std::vector<Parameter<double>*>& params, std::mt19937_64& rng, double scale = 0.5)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto* p : params)
        for (double& v : p->value)
            v = u(rng);
}

inline GradCheck check_conv2d()
{
    std::mt19937_64 rng(1);
    GradCheck all;
    for (auto [k, s, p] : {std::tuple{4, 2, 1}, std::tuple{3, 1, 1}, std::tuple{1, 1, 0}})
    {
        Conv2d<double> conv("conv", 3, 2, k, s, p);
        randomize(conv.parameters(), rng);
        all.merge(check_layer(conv, random_tensor(2, 3, 6, 6, rng), [](auto& l, const Td& x) { return l.forward(x); },
                              conv.parameters(), 2));
    }
    return all;
}

inline GradCheck check_conv_transpose2d()
{
    std::mt19937_64 rng(2);
    ConvTranspose2d<double> deconv("deconv", 3, 2, 4, 2, 1);
    randomize(deconv.parameters(), rng);
    return check_layer(deconv, random_tensor(2, 3, 3, 3, rng), [](auto& l, const Td& x) { return l.forward(x); },
                       deconv.parameters(), 3);
}

inline GradCheck check_batch_norm()
{
    std::mt19937_64 rng(3);
    BatchNorm2d<double> bn("bn", 3);
    randomize(bn.parameters(), rng);
    bn.gamma.value = {1.3, -0.7, 0.4};
    return check_layer(bn, random_tensor(3, 3, 2, 2, rng), [](auto& l, const Td& x) { return l.forward(x, true); },
                       bn.parameters(), 4);
}

inline GradCheck check_activations()
{
    std::mt19937_64 rng(4);
    // Keep inputs away from the kinks so central differences are valid.
    Td x = random_tensor(2, 2, 3, 3, rng);
    for (double& v : x.data)
        if (std::abs(v) < 1e-3)
            v = 0.5;
    LeakyRelu<double> leaky(0.2), relu(0.0);
    Tanh<double> tanh;
    Sigmoid<double> sigmoid;
    const auto fwd = [](auto& l, const Td& t) { return l.forward(t); };
    GradCheck all;
    for (const auto& r : {check_layer(leaky, x, fwd, {}, 5), check_layer(relu, x, fwd, {}, 6),
                          check_layer(tanh, x, fwd, {}, 7), check_layer(sigmoid, x, fwd, {}, 8)})
        all.merge(r);
    return all;
}

inline GradCheck check_dropout()
{
    std::mt19937_64 rng(5);
    Dropout<double> drop(0.5);
    const Td x = random_tensor(2, 2, 3, 3, rng);
    std::mt19937_64 mask_rng(9);
    (void)drop.forward(x, true, &mask_rng);
    return check_layer(drop, x, [](auto& l, const Td& t) { return l.forward(t, true, nullptr); }, {}, 10);
}

/// Concatenation feeding a conv: gradients reach both inputs through the split.
inline GradCheck check_skip_concatenation()
{
    std::mt19937_64 rng(6);
    Conv2d<double> conv("conv", 5, 2, 3, 1, 1);
    randomize(conv.parameters(), rng);
    Td a = random_tensor(2, 2, 3, 3, rng), b = random_tensor(2, 3, 3, 3, rng);
    const Td r = random_tensor(2, 2, 3, 3, rng);
    (void)conv.forward(concat_channels(a, b));
    const auto [da, db] = split_channels(conv.backward(r), 2);
    auto loss = [&] { return dot(r, conv.forward(concat_channels(a, b))); };
    GradCheck report;
    check_array(a.data, da.data, loss, "skip.main", report);
    check_array(b.data, db.data, loss, "skip.skip", report);
    return report;
}

inline GradCheck check_losses()
{
    std::mt19937_64 rng(7);
    Td pred = random_tensor(2, 3, 4, 4, rng), truth = random_tensor(2, 3, 4, 4, rng);
    GradCheck r;
    check_array(pred.data, l1_gradient(pred, truth).data, [&] { return loss_l1(pred, truth); }, "l1", r);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    Td real(2, 1, 2, 2), fake(2, 1, 2, 2);
    for (double& v : real.data)
        v = u(rng);
    for (double& v : fake.data)
        v = u(rng);
    const Td g_fake_gen = adversarial_gradient(fake, true);
    check_array(fake.data, g_fake_gen.data, [&] { return loss_adversarial(real, fake).generator; }, "gen", r);
    Td g_disc = adversarial_gradient(fake, false);
    check_array(fake.data, g_disc.data, [&] { return loss_adversarial(real, fake).discriminator; }, "disc_fake", r);
    g_disc = adversarial_gradient(real, true);
    check_array(real.data, g_disc.data, [&] { return loss_adversarial(real, fake).discriminator; }, "disc_real", r);
    return r;
}

inline GeneratorConfig tiny_generator()
{
    GeneratorConfig c;
    c.input_size = 8;
    c.input_channels = 9;
    c.down_channels = {2, 2, 2};
    c.up_channels = {2, 2, 3};
    c.dropout = {0.5, 0.0, 0.0};
    c.skips = {false, true, true};
    c.final_width = 2;
    return c;
}

inline DiscriminatorConfig tiny_discriminator()
{
    DiscriminatorConfig c;
    c.input_channels = 12;
    c.channels = {2, 2};
    return c;
}

/// Discriminator and generator objectives (lambda = 100) of a depth-3 8x8 network.
inline GradCheck check_end_to_end()
{
    TranslationModel<double> model(tiny_generator(), tiny_discriminator());
    model.init_weights(3);
    std::mt19937_64 rng(11);
    // Smaller weights keep the TanH and logistic away from saturation, which would make every check trivial.
    auto gp = model.generator.parameters();
    auto dp = model.discriminator.parameters();
    randomize(gp.trainable, rng, 0.4);
    randomize(dp.trainable, rng, 0.4);
    for (auto* p : gp.trainable)
        if (p->name.ends_with(".gamma"))
            for (double& v : p->value)
                v += 1.0;
    const Td x = random_tensor(6, 9, 8, 8, rng), y = random_tensor(6, 3, 8, 8, rng, 0.9);
    std::mt19937_64 mask_rng(12);
    (void)model.generator.forward(x, Mode::train, &mask_rng);

    const double lambda = 100.0;
    auto disc_loss = [&] {
        const Td fake = model.generator.forward(x, Mode::train, nullptr);
        const Td sr = model.discriminator.forward(x, y, Mode::train);
        const Td sf = model.discriminator.forward(x, fake, Mode::train);
        return loss_adversarial(sr, sf).discriminator;
    };
    auto gen_loss = [&] {
        const Td fake = model.generator.forward(x, Mode::train, nullptr);
        const Td sf = model.discriminator.forward(x, fake, Mode::train);
        return loss_adversarial(sf, sf).generator + lambda * loss_l1(fake, y);
    };

    GradCheck report;
    auto check_all = [&](std::vector<Parameter<double>*>& params, const std::function<double()>& loss) {
        for (auto* p : params)
        {
            const std::vector<double> g = p->grad;
            check_array(p->value, g, loss, p->name, report);
        }
    };

    // Discriminator objective.
    dp.zero_grad();
    const Td fake = model.generator.forward(x, Mode::train, nullptr);
    const Td sr = model.discriminator.forward(x, y, Mode::train);
    model.discriminator.backward(adversarial_gradient(sr, true));
    const Td sf = model.discriminator.forward(x, fake, Mode::train);
    model.discriminator.backward(adversarial_gradient(sf, false));
    check_all(dp.trainable, disc_loss);

    // Generator objective, back through the discriminator and the skip concatenations.
    gp.zero_grad();
    const Td fake2 = model.generator.forward(x, Mode::train, nullptr);
    const Td sg = model.discriminator.forward(x, fake2, Mode::train);
    Td dimg = model.discriminator.backward(adversarial_gradient(sg, true));
    const Td dl1 = l1_gradient(fake2, y);
    for (std::size_t i = 0; i < dimg.size(); ++i)
        dimg.data[i] += lambda * dl1.data[i];
    model.generator.backward(dimg);
    check_all(gp.trainable, gen_loss);

    return report;
}

} // namespace dvp::test

#endif /* DVP_TESTS_GRAD_CHECK_HPP */
