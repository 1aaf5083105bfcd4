// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shuffledet::post {

namespace {

double sigmoid(double x)
{
    return 1.0 / (1.0 + std::exp(-x));
}

} // namespace

AnchorSet AnchorSet::yolo_default()
{
    AnchorSet set;
    set.scales[0] = {8, {{{10, 13}, {16, 30}, {33, 23}}}};
    set.scales[1] = {16, {{{30, 61}, {62, 45}, {59, 119}}}};
    set.scales[2] = {32, {{{116, 90}, {156, 198}, {373, 326}}}};
    return set;
}

void AnchorSet::validate() const
{
    int previous = 0;
    for (const AnchorScale& s : scales) {
        if (s.stride <= previous)
            throw ParamError("anchors: strides must be strictly increasing");
        previous = s.stride;
        for (const auto& a : s.anchors)
            if (!(a[0] > 0.0f) || !(a[1] > 0.0f))
                throw ParamError("anchors: dimensions must be positive");
    }
}

std::vector<Detection> decode_predictions(const HeadOutputs& raw, const AnchorSet& anchors,
                                          float conf_threshold)
{
    std::vector<Detection> out;
    for (int s = 0; s < kScaleCount; ++s) {
        const Tensor& t = raw[static_cast<std::size_t>(s)];
        const Shape& shape = t.shape();
        if (shape.n != 1 || shape.c < static_cast<std::size_t>(kAnchorsPerScale) * 6 ||
            shape.c % kAnchorsPerScale != 0)
            throw ShapeError("decode: head " + std::to_string(s) + " has shape " + shape.str() +
                             ", expected (1, 3*(5+nc), H, W)");
        if (s > 0 && shape.c != raw[0].shape().c)
            throw ShapeError("decode: heads disagree on channel count");
        const std::size_t per_anchor = shape.c / kAnchorsPerScale;
        const std::size_t classes = per_anchor - 5;
        const std::size_t hw = shape.h * shape.w;
        const AnchorScale& scale = anchors.scales[static_cast<std::size_t>(s)];
        const double stride = scale.stride;
        auto data = t.data();

        for (std::size_t a = 0; a < kAnchorsPerScale; ++a) {
            const float* base = data.data() + a * per_anchor * hw;
            for (std::size_t cy = 0; cy < shape.h; ++cy)
                for (std::size_t cx = 0; cx < shape.w; ++cx) {
                    const std::size_t cell = cy * shape.w + cx;
                    const double obj = sigmoid(base[4 * hw + cell]);
                    std::size_t best = 0;
                    float best_logit = base[5 * hw + cell];
                    for (std::size_t k = 1; k < classes; ++k) {
                        const float v = base[(5 + k) * hw + cell];
                        if (v > best_logit) {
                            best_logit = v;
                            best = k;
                        }
                    }
                    const double score = obj * sigmoid(best_logit);
                    if (!(score >= conf_threshold))
                        continue;
                    const double bx = (2.0 * sigmoid(base[cell]) - 0.5 + static_cast<double>(cx)) * stride;
                    const double by = (2.0 * sigmoid(base[hw + cell]) - 0.5 + static_cast<double>(cy)) * stride;
                    const double gw = 2.0 * sigmoid(base[2 * hw + cell]);
                    const double gh = 2.0 * sigmoid(base[3 * hw + cell]);
                    const double bw = gw * gw * scale.anchors[a][0];
                    const double bh = gh * gh * scale.anchors[a][1];
                    Detection d;
                    d.class_id = static_cast<int>(best);
                    d.score = static_cast<float>(score);
                    d.box = {static_cast<float>(bx - bw / 2), static_cast<float>(by - bh / 2),
                             static_cast<float>(bx + bw / 2), static_cast<float>(by + bh / 2)};
                    out.push_back(d);
                }
        }
    }
    return out;
}

double iou_xyxy(const Box& a, const Box& b)
{
    const double iw = std::max(0.0, static_cast<double>(std::min(a.x2, b.x2)) - std::max(a.x1, b.x1));
    const double ih = std::max(0.0, static_cast<double>(std::min(a.y2, b.y2)) - std::max(a.y1, b.y1));
    const double inter = iw * ih;
    const double area_a = static_cast<double>(a.width()) * a.height();
    const double area_b = static_cast<double>(b.width()) * b.height();
    const double uni = area_a + area_b - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<std::size_t> nms_indices(std::span<const Detection> dets, float iou_threshold)
{
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    // Kept boxes bucketed by class so each candidate only checks its own class.
    std::vector<std::pair<int, std::vector<std::size_t>>> kept_by_class;
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        const Detection& d = dets[idx];
        auto bucket = std::find_if(kept_by_class.begin(), kept_by_class.end(),
                                   [&](const auto& e) { return e.first == d.class_id; });
        if (bucket == kept_by_class.end()) {
            kept_by_class.push_back({d.class_id, {}});
            bucket = std::prev(kept_by_class.end());
        }
        const bool suppressed = std::any_of(bucket->second.begin(), bucket->second.end(), [&](std::size_t k) {
            return iou_xyxy(dets[k].box, d.box) > iou_threshold;
        });
        if (!suppressed) {
            bucket->second.push_back(idx);
            kept.push_back(idx);
        }
    }
    return kept;
}

std::vector<Detection> nms(std::span<const Detection> dets, float iou_threshold)
{
    std::vector<Detection> out;
    for (std::size_t idx : nms_indices(dets, iou_threshold))
        out.push_back(dets[idx]);
    return out;
}

Letterbox letterbox_map(Extent image, Extent model)
{
    if (image.height < 1 || image.width < 1 || model.height < 1 || model.width < 1)
        throw ParamError("letterbox: sizes must be positive");
    Letterbox lb;
    lb.image = image;
    lb.model = model;
    lb.scale = std::min(static_cast<float>(model.height) / static_cast<float>(image.height),
                        static_cast<float>(model.width) / static_cast<float>(image.width));
    lb.resized.height = std::clamp(static_cast<int>(std::lround(image.height * lb.scale)), 1, model.height);
    lb.resized.width = std::clamp(static_cast<int>(std::lround(image.width * lb.scale)), 1, model.width);
    lb.pad_top = (model.height - lb.resized.height) / 2;
    lb.pad_left = (model.width - lb.resized.width) / 2;
    return lb;
}

Box apply_forward(const Letterbox& lb, const Box& box)
{
    return {box.x1 * lb.scale + static_cast<float>(lb.pad_left), box.y1 * lb.scale + static_cast<float>(lb.pad_top),
            box.x2 * lb.scale + static_cast<float>(lb.pad_left), box.y2 * lb.scale + static_cast<float>(lb.pad_top)};
}

Detection apply_inverse(const Letterbox& lb, const Detection& det)
{
    const float max_x = static_cast<float>(lb.image.width);
    const float max_y = static_cast<float>(lb.image.height);
    auto map_x = [&](float x) {
        return std::clamp((x - static_cast<float>(lb.pad_left)) / lb.scale, 0.0f, max_x);
    };
    auto map_y = [&](float y) {
        return std::clamp((y - static_cast<float>(lb.pad_top)) / lb.scale, 0.0f, max_y);
    };
    Detection out = det;
    out.box = {map_x(det.box.x1), map_y(det.box.y1), map_x(det.box.x2), map_y(det.box.y2)};
    return out;
}

Tensor letterbox_image(const Tensor& image, const Letterbox& lb)
{
    const Shape& s = image.shape();
    if (s.h != static_cast<std::size_t>(lb.image.height) || s.w != static_cast<std::size_t>(lb.image.width))
        throw ShapeError("letterbox: image " + s.str() + " does not match transform");
    const std::size_t mh = static_cast<std::size_t>(lb.model.height);
    const std::size_t mw = static_cast<std::size_t>(lb.model.width);
    Tensor out({s.n, s.c, mh, mw}, kLetterboxFill);
    const int rh = lb.resized.height, rw = lb.resized.width;
    const double fy = static_cast<double>(s.h) / rh;
    const double fx = static_cast<double>(s.w) / rw;
    const int ih = static_cast<int>(s.h), iw = static_cast<int>(s.w);
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t c = 0; c < s.c; ++c) {
            const float* src = image.plane(i, c).data();
            float* dst = out.plane(i, c).data();
            for (int y = 0; y < rh; ++y) {
                const double sy = std::clamp((y + 0.5) * fy - 0.5, 0.0, static_cast<double>(ih - 1));
                const int y0 = static_cast<int>(sy);
                const int y1 = std::min(y0 + 1, ih - 1);
                const double wy = sy - y0;
                for (int x = 0; x < rw; ++x) {
                    const double sx = std::clamp((x + 0.5) * fx - 0.5, 0.0, static_cast<double>(iw - 1));
                    const int x0 = static_cast<int>(sx);
                    const int x1 = std::min(x0 + 1, iw - 1);
                    const double wx = sx - x0;
                    const double top = src[y0 * iw + x0] * (1 - wx) + src[y0 * iw + x1] * wx;
                    const double bottom = src[y1 * iw + x0] * (1 - wx) + src[y1 * iw + x1] * wx;
                    dst[(static_cast<std::size_t>(y + lb.pad_top)) * mw + static_cast<std::size_t>(x + lb.pad_left)] =
                        static_cast<float>(top * (1 - wy) + bottom * wy);
                }
            }
        }
    return out;
}

} // namespace shuffledet::post
