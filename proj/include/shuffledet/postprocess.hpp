// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "shuffledet/tensor.hpp"

namespace shuffledet::post {

inline constexpr int kAnchorsPerScale = 3;
inline constexpr int kScaleCount = 3;

/// Axis-aligned box in corner form, pixels.
struct Box {
    float x1 = 0.0f;
    float y1 = 0.0f;
    float x2 = 0.0f;
    float y2 = 0.0f;

    float width() const { return x2 - x1; }
    float height() const { return y2 - y1; }

    friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
    int class_id = 0;
    float score = 0.0f;
    Box box;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct AnchorScale {
    int stride = 8;
    std::array<std::array<float, 2>, kAnchorsPerScale> anchors{}; // (w, h) pixels
};

/// Priors for the stride-8/16/32 heads.
struct AnchorSet {
    std::array<AnchorScale, kScaleCount> scales{};

    /// The P3/P4/P5 anchors of the YOLOv5 lineage.
    static AnchorSet yolo_default();
    /// Throws ParamError unless strides increase strictly and all anchor dims are > 0.
    void validate() const;
};

/// Head outputs at strides 8, 16 and 32, each (1, 3*(5+nc), H, W), pre-sigmoid.
using HeadOutputs = std::array<Tensor, kScaleCount>;

/// Grid/anchor decoding. Per cell (cx, cy) and anchor a with logits t:
///   center = ((2*sig(tx) - 0.5 + cx) * stride, (2*sig(ty) - 0.5 + cy) * stride)
///   size   = ((2*sig(tw))^2 * anchor_w, (2*sig(th))^2 * anchor_h)
///   score  = sig(obj) * max_k sig(cls_k), class = first argmax.
/// Candidates with score >= conf_threshold are returned in scale, anchor,
/// row, column order, in the letterboxed frame.
std::vector<Detection> decode_predictions(const HeadOutputs& raw, const AnchorSet& anchors,
                                          float conf_threshold);

/// Intersection over union; 0 when the union is empty.
double iou_xyxy(const Box& a, const Box& b);

/// Per-class greedy suppression. Candidates are visited by descending score,
/// ties by lower input index; a candidate is dropped when its IoU with a kept
/// box of the same class exceeds iou_threshold. Returns indices into `dets`
/// sorted by descending score then index.
std::vector<std::size_t> nms_indices(std::span<const Detection> dets, float iou_threshold);
std::vector<Detection> nms(std::span<const Detection> dets, float iou_threshold);

struct Extent {
    int height = 0;
    int width = 0;

    friend bool operator==(const Extent&, const Extent&) = default;
};

/// Uniform-scale resize plus symmetric padding from image frame into model frame.
struct Letterbox {
    Extent image;
    Extent model;
    Extent resized;
    float scale = 1.0f;
    int pad_left = 0;
    int pad_top = 0;
};

inline constexpr float kLetterboxFill = 114.0f / 255.0f;

Letterbox letterbox_map(Extent image, Extent model);
/// Image frame -> model frame.
Box apply_forward(const Letterbox& lb, const Box& box);
/// Model frame -> image frame, clamped to the image bounds.
Detection apply_inverse(const Letterbox& lb, const Detection& det);

/// Bilinear resize (half-pixel centers) into the padded model canvas.
Tensor letterbox_image(const Tensor& image, const Letterbox& lb);

} // namespace shuffledet::post
