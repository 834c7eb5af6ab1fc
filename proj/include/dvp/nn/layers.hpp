/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/nn/layers.hpp
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

#ifndef DVP_NN_LAYERS_HPP
#define DVP_NN_LAYERS_HPP

#include "dvp/core/error.hpp"
#include "dvp/nn/tensor.hpp"

#include "Eigen/Core"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace dvp::nn {

/// A learnable array with its gradient accumulator.
template <typename T>
struct Parameter
{
    std::string name;
    std::vector<int> shape;
    std::vector<T> value;
    std::vector<T> grad;

    Parameter() = default;
    Parameter(std::string name, std::vector<int> shape, T fill = T(0)) : name(std::move(name)), shape(std::move(shape))
    {
        std::size_t n = 1;
        for (int d : this->shape)
            n *= static_cast<std::size_t>(d);
        value.assign(n, fill);
        grad.assign(n, T(0));
    }

    std::size_t size() const noexcept { return value.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

inline int conv_output_size(int in, int kernel, int stride, int pad)
{
    return (in + 2 * pad - kernel) / stride + 1;
}

namespace detail {

/// (C, H, W) -> (C k k, Ho Wo); out-of-image taps read 0.
template <typename T>
void im2col(const T* x, int c, int h, int w, int k, int stride, int pad, T* cols)
{
    const int ho = conv_output_size(h, k, stride, pad), wo = conv_output_size(w, k, stride, pad);
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
            {
                T* row = cols + (static_cast<std::size_t>(ci * k + ky) * k + kx) * ho * wo;
                for (int oy = 0; oy < ho; ++oy)
                {
                    const int iy = oy * stride - pad + ky;
                    for (int ox = 0; ox < wo; ++ox)
                    {
                        const int ix = ox * stride - pad + kx;
                        row[oy * wo + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                                ? x[(static_cast<std::size_t>(ci) * h + iy) * w + ix]
                                                : T(0);
                    }
                }
            }
}

/// Adjoint of im2col: accumulates columns back into (C, H, W).
template <typename T>
void col2im(const T* cols, int c, int h, int w, int k, int stride, int pad, T* x)
{
    const int ho = conv_output_size(h, k, stride, pad), wo = conv_output_size(w, k, stride, pad);
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
            {
                const T* row = cols + (static_cast<std::size_t>(ci * k + ky) * k + kx) * ho * wo;
                for (int oy = 0; oy < ho; ++oy)
                {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h)
                        continue;
                    for (int ox = 0; ox < wo; ++ox)
                    {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w)
                            x[(static_cast<std::size_t>(ci) * h + iy) * w + ix] += row[oy * wo + ox];
                    }
                }
            }
}

/// Left-to-right sum; vectorized reductions change order with buffer alignment.
template <typename T>
T sequential_sum(const T* v, Eigen::Index n)
{
    T s = T(0);
    for (Eigen::Index i = 0; i < n; ++i)
        s += v[i];
    return s;
}

} // namespace detail

/// Draws every element of `p` from N(0, stddev^2).
template <typename T>
void fill_normal(Parameter<T>& p, std::mt19937_64& rng, double stddev)
{
    std::normal_distribution<double> dist(0.0, stddev);
    for (T& v : p.value)
        v = static_cast<T>(dist(rng));
}

/// 2D convolution, weight (Cout, Cin, k, k), bias (Cout).
template <typename T>
class Conv2d
{
public:
    Conv2d() = default;
    Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad)
        : weight(name + ".weight", {out_channels, in_channels, kernel, kernel}),
          bias(name + ".bias", {out_channels}), in_(in_channels), out_(out_channels), k_(kernel), s_(stride), p_(pad)
    {
    }

    Parameter<T> weight, bias;

    int in_channels() const noexcept { return in_; }
    int out_channels() const noexcept { return out_; }

    Tensor<T> forward(const Tensor<T>& x)
    {
        require(x.c == in_, ErrorCode::shape_mismatch,
                weight.name + ": expected " + std::to_string(in_) + " input channels, got " + std::to_string(x.c));
        const int ho = conv_output_size(x.h, k_, s_, p_), wo = conv_output_size(x.w, k_, s_, p_);
        require(ho > 0 && wo > 0, ErrorCode::shape_mismatch, weight.name + ": input " + x.shape_string() + " too small");
        input_ = x;
        Tensor<T> y(x.n, out_, ho, wo);
        const int rows = in_ * k_ * k_;
        cols_.resize(static_cast<std::size_t>(rows) * ho * wo);
        ConstMatrixMap<T> wm(weight.value.data(), out_, rows);
        for (int i = 0; i < x.n; ++i)
        {
            detail::im2col(x.sample(i), in_, x.h, x.w, k_, s_, p_, cols_.data());
            MatrixMap<T> ym(y.sample(i), out_, ho * wo);
            ym.noalias() = wm * ConstMatrixMap<T>(cols_.data(), rows, ho * wo);
            for (int o = 0; o < out_; ++o)
                ym.row(o).array() += bias.value[o];
        }
        return y;
    }

    /// Accumulates weight/bias gradients and returns d(loss)/d(input).
    Tensor<T> backward(const Tensor<T>& dy)
    {
        const Tensor<T>& x = input_;
        const int ho = dy.h, wo = dy.w, rows = in_ * k_ * k_;
        Tensor<T> dx(x.n, x.c, x.h, x.w);
        std::vector<T> dcols(static_cast<std::size_t>(rows) * ho * wo);
        ConstMatrixMap<T> wm(weight.value.data(), out_, rows);
        MatrixMap<T> dw(weight.grad.data(), out_, rows);
        for (int i = 0; i < x.n; ++i)
        {
            detail::im2col(x.sample(i), in_, x.h, x.w, k_, s_, p_, cols_.data());
            ConstMatrixMap<T> dym(dy.sample(i), out_, ho * wo);
            dw.noalias() += dym * ConstMatrixMap<T>(cols_.data(), rows, ho * wo).transpose();
            for (int o = 0; o < out_; ++o)
                bias.grad[o] += detail::sequential_sum(dym.row(o).data(), dym.cols());
            MatrixMap<T>(dcols.data(), rows, ho * wo).noalias() = wm.transpose() * dym;
            detail::col2im(dcols.data(), in_, x.h, x.w, k_, s_, p_, dx.sample(i));
        }
        return dx;
    }

    std::vector<Parameter<T>*> parameters() { return {&weight, &bias}; }

private:
    int in_ = 0, out_ = 0, k_ = 0, s_ = 1, p_ = 0;
    Tensor<T> input_;
    std::vector<T> cols_;
};

/**
 * Transposed convolution, the adjoint of a Conv2d with the same geometry.
 * Weight (Cin, Cout, k, k). Kernel 4, stride 2, pad 1 exactly doubles H and W.
 */
template <typename T>
class ConvTranspose2d
{
public:
    ConvTranspose2d() = default;
    ConvTranspose2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad)
        : weight(name + ".weight", {in_channels, out_channels, kernel, kernel}),
          bias(name + ".bias", {out_channels}), in_(in_channels), out_(out_channels), k_(kernel), s_(stride), p_(pad)
    {
    }

    Parameter<T> weight, bias;

    int in_channels() const noexcept { return in_; }
    int out_channels() const noexcept { return out_; }

    Tensor<T> forward(const Tensor<T>& x)
    {
        require(x.c == in_, ErrorCode::shape_mismatch,
                weight.name + ": expected " + std::to_string(in_) + " input channels, got " + std::to_string(x.c));
        const int ho = (x.h - 1) * s_ - 2 * p_ + k_, wo = (x.w - 1) * s_ - 2 * p_ + k_;
        input_ = x;
        Tensor<T> y(x.n, out_, ho, wo);
        const int rows = out_ * k_ * k_;
        std::vector<T> cols(static_cast<std::size_t>(rows) * x.h * x.w);
        ConstMatrixMap<T> wm(weight.value.data(), in_, rows);
        for (int i = 0; i < x.n; ++i)
        {
            MatrixMap<T>(cols.data(), rows, x.h * x.w).noalias() =
                wm.transpose() * ConstMatrixMap<T>(x.sample(i), in_, x.h * x.w);
            detail::col2im(cols.data(), out_, ho, wo, k_, s_, p_, y.sample(i));
            MatrixMap<T> ym(y.sample(i), out_, ho * wo);
            for (int o = 0; o < out_; ++o)
                ym.row(o).array() += bias.value[o];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy)
    {
        const Tensor<T>& x = input_;
        const int rows = out_ * k_ * k_;
        Tensor<T> dx(x.n, x.c, x.h, x.w);
        std::vector<T> cols(static_cast<std::size_t>(rows) * x.h * x.w);
        ConstMatrixMap<T> wm(weight.value.data(), in_, rows);
        MatrixMap<T> dw(weight.grad.data(), in_, rows);
        for (int i = 0; i < x.n; ++i)
        {
            detail::im2col(dy.sample(i), out_, dy.h, dy.w, k_, s_, p_, cols.data());
            ConstMatrixMap<T> cm(cols.data(), rows, x.h * x.w);
            ConstMatrixMap<T> xm(x.sample(i), in_, x.h * x.w);
            dw.noalias() += xm * cm.transpose();
            MatrixMap<T>(dx.sample(i), in_, x.h * x.w).noalias() = wm * cm;
            ConstMatrixMap<T> dym(dy.sample(i), out_, dy.h * dy.w);
            for (int o = 0; o < out_; ++o)
                bias.grad[o] += detail::sequential_sum(dym.row(o).data(), dym.cols());
        }
        return dx;
    }

    std::vector<Parameter<T>*> parameters() { return {&weight, &bias}; }

private:
    int in_ = 0, out_ = 0, k_ = 4, s_ = 2, p_ = 1;
    Tensor<T> input_;
};

/**
 * Per-channel batch normalization. Training uses batch statistics (biased
 * variance) and updates running = momentum * running + (1 - momentum) * batch;
 * inference uses the running statistics.
 */
template <typename T>
class BatchNorm2d
{
public:
    static constexpr double epsilon = 1e-5;

    BatchNorm2d() = default;
    BatchNorm2d(std::string name, int channels, double momentum = 0.99)
        : gamma(name + ".gamma", {channels}, T(1)), beta(name + ".beta", {channels}),
          running_mean(name + ".running_mean", {channels}), running_var(name + ".running_var", {channels}, T(1)),
          channels_(channels), momentum_(momentum)
    {
    }

    Parameter<T> gamma, beta;
    Parameter<T> running_mean, running_var; ///< state, not trained

    Tensor<T> forward(const Tensor<T>& x, bool train)
    {
        require(x.c == channels_, ErrorCode::shape_mismatch, gamma.name + ": channel count mismatch");
        Tensor<T> y(x.n, x.c, x.h, x.w);
        const double count = static_cast<double>(x.n) * x.plane();
        xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
        inv_std_.assign(static_cast<std::size_t>(channels_), T(0));
        for (int c = 0; c < channels_; ++c)
        {
            double mean, var;
            if (train)
            {
                double s = 0.0;
                for (int i = 0; i < x.n; ++i)
                    for (std::size_t k = 0; k < x.plane(); ++k)
                        s += x.sample(i)[c * x.plane() + k];
                mean = s / count;
                double ss = 0.0;
                for (int i = 0; i < x.n; ++i)
                    for (std::size_t k = 0; k < x.plane(); ++k)
                    {
                        const double d = x.sample(i)[c * x.plane() + k] - mean;
                        ss += d * d;
                    }
                var = ss / count;
                running_mean.value[c] = static_cast<T>(momentum_ * running_mean.value[c] + (1.0 - momentum_) * mean);
                running_var.value[c] = static_cast<T>(momentum_ * running_var.value[c] + (1.0 - momentum_) * var);
            }
            else
            {
                mean = running_mean.value[c];
                var = running_var.value[c];
            }
            const T inv = static_cast<T>(1.0 / std::sqrt(var + epsilon));
            inv_std_[c] = inv;
            for (int i = 0; i < x.n; ++i)
                for (std::size_t k = 0; k < x.plane(); ++k)
                {
                    const std::size_t at = c * x.plane() + k;
                    const T xh = (x.sample(i)[at] - static_cast<T>(mean)) * inv;
                    xhat_.sample(i)[at] = xh;
                    y.sample(i)[at] = gamma.value[c] * xh + beta.value[c];
                }
        }
        return y;
    }

    /// Gradient of the training-mode transform (batch statistics depend on the input).
    Tensor<T> backward(const Tensor<T>& dy)
    {
        Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
        const double count = static_cast<double>(dy.n) * dy.plane();
        for (int c = 0; c < channels_; ++c)
        {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int i = 0; i < dy.n; ++i)
                for (std::size_t k = 0; k < dy.plane(); ++k)
                {
                    const std::size_t at = c * dy.plane() + k;
                    sum_dy += dy.sample(i)[at];
                    sum_dy_xhat += static_cast<double>(dy.sample(i)[at]) * xhat_.sample(i)[at];
                }
            gamma.grad[c] += static_cast<T>(sum_dy_xhat);
            beta.grad[c] += static_cast<T>(sum_dy);
            const double g = gamma.value[c] * inv_std_[c];
            for (int i = 0; i < dy.n; ++i)
                for (std::size_t k = 0; k < dy.plane(); ++k)
                {
                    const std::size_t at = c * dy.plane() + k;
                    dx.sample(i)[at] = static_cast<T>(
                        g * (dy.sample(i)[at] - sum_dy / count - xhat_.sample(i)[at] * sum_dy_xhat / count));
                }
        }
        return dx;
    }

    std::vector<Parameter<T>*> parameters() { return {&gamma, &beta}; }
    std::vector<Parameter<T>*> state() { return {&running_mean, &running_var}; }

private:
    int channels_ = 0;
    double momentum_ = 0.99;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
};

/// Leaky ReLU; slope 0 gives a plain ReLU.
template <typename T>
class LeakyRelu
{
public:
    explicit LeakyRelu(double slope = 0.2) : slope_(static_cast<T>(slope)) {}

    Tensor<T> forward(const Tensor<T>& x)
    {
        input_ = x;
        Tensor<T> y = x;
        for (T& v : y.data)
            v = v > T(0) ? v : slope_ * v;
        return y;
    }

    /// Subgradient at 0 is taken from the negative side.
    Tensor<T> backward(const Tensor<T>& dy) const
    {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (!(input_.data[i] > T(0)))
                dx.data[i] *= slope_;
        return dx;
    }

private:
    T slope_;
    Tensor<T> input_;
};

template <typename T>
class Tanh
{
public:
    Tensor<T> forward(const Tensor<T>& x)
    {
        output_ = x;
        for (T& v : output_.data)
            v = std::tanh(v);
        return output_;
    }

    Tensor<T> backward(const Tensor<T>& dy) const
    {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            dx.data[i] *= T(1) - output_.data[i] * output_.data[i];
        return dx;
    }

private:
    Tensor<T> output_;
};

template <typename T>
class Sigmoid
{
public:
    Tensor<T> forward(const Tensor<T>& x)
    {
        output_ = x;
        for (T& v : output_.data)
            v = T(1) / (T(1) + std::exp(-v));
        return output_;
    }

    Tensor<T> backward(const Tensor<T>& dy) const
    {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            dx.data[i] *= output_.data[i] * (T(1) - output_.data[i]);
        return dx;
    }

private:
    Tensor<T> output_;
};

/**
 * Inverted dropout. A new mask is drawn when an engine is passed; otherwise
 * the previous mask is reused, which keeps repeated passes identical.
 */
template <typename T>
class Dropout
{
public:
    explicit Dropout(double p = 0.0) : p_(p) {}

    double probability() const noexcept { return p_; }

    Tensor<T> forward(const Tensor<T>& x, bool train, std::mt19937_64* rng)
    {
        active_ = train && p_ > 0.0;
        if (!active_)
            return x;
        if (rng != nullptr || mask_.size() != x.size())
        {
            require(rng != nullptr, ErrorCode::invalid_argument, "dropout needs an engine to draw its first mask");
            std::bernoulli_distribution keep(1.0 - p_);
            mask_.resize(x.size());
            const T scale = static_cast<T>(1.0 / (1.0 - p_));
            for (T& m : mask_)
                m = keep(*rng) ? scale : T(0);
        }
        Tensor<T> y = x;
        for (std::size_t i = 0; i < y.size(); ++i)
            y.data[i] *= mask_[i];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) const
    {
        if (!active_)
            return dy;
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            dx.data[i] *= mask_[i];
        return dx;
    }

private:
    double p_;
    bool active_ = false;
    std::vector<T> mask_;
};

} // namespace dvp::nn

#endif /* DVP_NN_LAYERS_HPP */
