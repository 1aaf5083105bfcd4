// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shuffledet/error.hpp"

namespace shuffledet {

/// Extents of an NCHW feature map.
struct Shape {
    std::size_t n = 0;
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    /// Element count; throws ShapeError if the product overflows size_t.
    std::size_t numel() const;
    std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense 4-D float tensor, NCHW, w fastest.
///
/// Element (i, j, y, x) lives at flat index ((i*c + j)*h + y)*w + x.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, float fill);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    /// Bounds-checked element access; throws IndexError.
    float at(std::size_t i, std::size_t j, std::size_t y, std::size_t x) const;
    float& at(std::size_t i, std::size_t j, std::size_t y, std::size_t x);

    std::size_t offset(std::size_t i, std::size_t j, std::size_t y, std::size_t x) const
    {
        return ((i * shape_.c + j) * shape_.h + y) * shape_.w + x;
    }

    /// Contiguous view of one (n, c) plane.
    std::span<const float> plane(std::size_t i, std::size_t j) const;
    std::span<float> plane(std::size_t i, std::size_t j);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    void check_index(std::size_t i, std::size_t j, std::size_t y, std::size_t x) const;

    Shape shape_{};
    std::vector<float> data_;
};

enum class ElementwiseOp { add, mul };

/// Per-element a (op) b; shapes must match exactly (no broadcasting).
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::add, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::mul, a, b); }

/// Largest |a - b| over all elements. Shapes must match.
float max_abs_diff(const Tensor& a, const Tensor& b);

bool all_finite(const Tensor& t);

} // namespace shuffledet
