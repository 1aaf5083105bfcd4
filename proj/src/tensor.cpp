// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shuffledet {

namespace {

std::size_t checked_mul(std::size_t a, std::size_t b)
{
    if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
        throw ShapeError("tensor extent product overflows size_t");
    return a * b;
}

} // namespace

std::size_t Shape::numel() const
{
    std::size_t total = checked_mul(checked_mul(checked_mul(n, c), h), w);
    // The backing vector stores floats; its byte size must be addressable too.
    checked_mul(total, sizeof(float));
    return total;
}

std::string Shape::str() const
{
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape)
{
    std::size_t count = shape.numel();
    if (count > data_.max_size())
        throw ShapeError("tensor too large: " + shape.str());
    data_.assign(count, fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data))
{
    if (data_.size() != shape.numel())
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape.str());
}

void Tensor::check_index(std::size_t i, std::size_t j, std::size_t y, std::size_t x) const
{
    if (i >= shape_.n || j >= shape_.c || y >= shape_.h || x >= shape_.w)
        throw IndexError("index (" + std::to_string(i) + "," + std::to_string(j) + "," +
                         std::to_string(y) + "," + std::to_string(x) + ") out of range for " +
                         shape_.str());
}

float Tensor::at(std::size_t i, std::size_t j, std::size_t y, std::size_t x) const
{
    check_index(i, j, y, x);
    return data_[offset(i, j, y, x)];
}

float& Tensor::at(std::size_t i, std::size_t j, std::size_t y, std::size_t x)
{
    check_index(i, j, y, x);
    return data_[offset(i, j, y, x)];
}

std::span<const float> Tensor::plane(std::size_t i, std::size_t j) const
{
    const std::size_t hw = shape_.h * shape_.w;
    return std::span<const float>(data_).subspan((i * shape_.c + j) * hw, hw);
}

std::span<float> Tensor::plane(std::size_t i, std::size_t j)
{
    const std::size_t hw = shape_.h * shape_.w;
    return std::span<float>(data_).subspan((i * shape_.c + j) * hw, hw);
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape())
        throw ShapeError("elementwise: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    Tensor out(a.shape(), 0.0f);
    auto lhs = a.data();
    auto rhs = b.data();
    auto dst = out.data();
    if (op == ElementwiseOp::add) {
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = lhs[i] + rhs[i];
    } else {
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = lhs[i] * rhs[i];
    }
    return out;
}

float max_abs_diff(const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape())
        throw ShapeError("max_abs_diff: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    float worst = 0.0f;
    auto lhs = a.data();
    auto rhs = b.data();
    for (std::size_t i = 0; i < lhs.size(); ++i)
        worst = std::max(worst, std::fabs(lhs[i] - rhs[i]));
    return worst;
}

bool all_finite(const Tensor& t)
{
    return std::all_of(t.data().begin(), t.data().end(), [](float v) { return std::isfinite(v); });
}

} // namespace shuffledet
