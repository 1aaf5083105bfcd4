// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "shuffledet/postprocess.hpp"
#include "shuffledet/tensor.hpp"

namespace shuffledet::io {

std::array<std::uint8_t, 3> class_color(int class_id);

/// Inclusive pixel rectangle a box outline covers, clamped to the image:
/// columns floor(x1) .. ceil(x2) - 1, rows likewise.
struct PixelRect {
    int x0, y0, x1, y1;
};
PixelRect outline_rect(const post::Box& box, int width, int height);

/// P6 rendering of `image` with a 1-pixel outline per detection in its class
/// colour. Lower scores are drawn first so the best box ends up on top.
std::vector<std::uint8_t> render_detections(const Tensor& image, std::span<const post::Detection> dets);

} // namespace shuffledet::io
