// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shuffledet/image_io.hpp"

namespace shuffledet::io {

std::array<std::uint8_t, 3> class_color(int class_id)
{
    static constexpr std::array<std::array<std::uint8_t, 3>, 10> palette{{
        {0xFF, 0x38, 0x38},
        {0xFF, 0x9D, 0x97},
        {0xFF, 0x70, 0x1F},
        {0xFF, 0xB2, 0x1D},
        {0xCF, 0xD2, 0x31},
        {0x48, 0xF9, 0x0A},
        {0x1A, 0x93, 0x34},
        {0x00, 0xD4, 0xBB},
        {0x2C, 0x99, 0xA8},
        {0x00, 0xC2, 0xFF},
    }};
    const auto idx = static_cast<std::size_t>(class_id < 0 ? -class_id : class_id) % palette.size();
    return palette[idx];
}

PixelRect outline_rect(const post::Box& box, int width, int height)
{
    auto lo = [](float v, int limit) { return std::clamp(static_cast<int>(std::floor(v)), 0, limit - 1); };
    auto hi = [](float v, int limit) { return std::clamp(static_cast<int>(std::ceil(v)) - 1, 0, limit - 1); };
    PixelRect r{lo(box.x1, width), lo(box.y1, height), hi(box.x2, width), hi(box.y2, height)};
    r.x1 = std::max(r.x1, r.x0);
    r.y1 = std::max(r.y1, r.y0);
    return r;
}

std::vector<std::uint8_t> render_detections(const Tensor& image, std::span<const post::Detection> dets)
{
    std::vector<std::uint8_t> bytes = encode_ppm(image);
    const int width = static_cast<int>(image.shape().w);
    const int height = static_cast<int>(image.shape().h);
    const std::size_t header = bytes.size() - static_cast<std::size_t>(width) * height * 3;

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Ascending score; on equal scores the earlier detection is drawn last.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dets[a].score != dets[b].score)
            return dets[a].score < dets[b].score;
        return a > b;
    });

    auto paint = [&](int x, int y, const std::array<std::uint8_t, 3>& rgb) {
        const std::size_t at = header + (static_cast<std::size_t>(y) * width + x) * 3;
        std::copy(rgb.begin(), rgb.end(), bytes.begin() + static_cast<std::ptrdiff_t>(at));
    };
    for (std::size_t idx : order) {
        const PixelRect r = outline_rect(dets[idx].box, width, height);
        const auto rgb = class_color(dets[idx].class_id);
        for (int x = r.x0; x <= r.x1; ++x) {
            paint(x, r.y0, rgb);
            paint(x, r.y1, rgb);
        }
        for (int y = r.y0; y <= r.y1; ++y) {
            paint(r.x0, y, rgb);
            paint(r.x1, y, rgb);
        }
    }
    return bytes;
}

} // namespace shuffledet::io
