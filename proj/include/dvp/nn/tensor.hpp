/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/nn/tensor.hpp
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

#ifndef DVP_NN_TENSOR_HPP
#define DVP_NN_TENSOR_HPP

#include "dvp/core/error.hpp"

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace dvp::nn {

/// Dense NCHW tensor.
template <typename T>
struct Tensor
{
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n, int c, int h, int w, T fill = T(0))
        : n(n), c(c), h(h), w(w), data(static_cast<std::size_t>(n) * c * h * w, fill)
    {
        require(n > 0 && c > 0 && h > 0 && w > 0, ErrorCode::invalid_argument, "tensor dimensions must be positive");
    }

    std::size_t size() const noexcept { return data.size(); }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
    std::size_t sample_size() const noexcept { return static_cast<std::size_t>(c) * h * w; }

    T* sample(int i) noexcept { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
    const T* sample(int i) const noexcept { return data.data() + static_cast<std::size_t>(i) * sample_size(); }

    std::size_t index(int ni, int ci, int y, int x) const noexcept
    {
        return ((static_cast<std::size_t>(ni) * c + ci) * h + y) * w + x;
    }
    T& at(int ni, int ci, int y, int x) noexcept { return data[index(ni, ci, y, x)]; }
    T at(int ni, int ci, int y, int x) const noexcept { return data[index(ni, ci, y, x)]; }

    bool same_shape(const Tensor& o) const noexcept { return n == o.n && c == o.c && h == o.h && w == o.w; }

    std::string shape_string() const
    {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const std::string& what)
{
    require(a.same_shape(b), ErrorCode::shape_mismatch,
            what + ": shapes " + a.shape_string() + " and " + b.shape_string() + " differ");
}

/// Channel concatenation [a, b].
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b)
{
    require(a.n == b.n && a.h == b.h && a.w == b.w, ErrorCode::shape_mismatch,
            "concat: shapes " + a.shape_string() + " and " + b.shape_string() + " are incompatible");
    Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
    for (int i = 0; i < a.n; ++i)
    {
        std::copy_n(a.sample(i), a.sample_size(), out.sample(i));
        std::copy_n(b.sample(i), b.sample_size(), out.sample(i) + a.sample_size());
    }
    return out;
}

/// Inverse of concat_channels for gradients: the first `first` channels and the rest.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& t, int first)
{
    require(first > 0 && first < t.c, ErrorCode::invalid_argument, "split point outside the channel range");
    Tensor<T> a(t.n, first, t.h, t.w), b(t.n, t.c - first, t.h, t.w);
    for (int i = 0; i < t.n; ++i)
    {
        std::copy_n(t.sample(i), a.sample_size(), a.sample(i));
        std::copy_n(t.sample(i) + a.sample_size(), b.sample_size(), b.sample(i));
    }
    return {std::move(a), std::move(b)};
}

template <typename T>
void add_into(Tensor<T>& acc, const Tensor<T>& x)
{
    require_same_shape(acc, x, "add_into");
    for (std::size_t i = 0; i < acc.size(); ++i)
        acc.data[i] += x.data[i];
}

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t)
{
    Tensor<To> out(t.n, t.c, t.h, t.w);
    std::transform(t.data.begin(), t.data.end(), out.data.begin(), [](From v) { return static_cast<To>(v); });
    return out;
}

} // namespace dvp::nn

#endif /* DVP_NN_TENSOR_HPP */
