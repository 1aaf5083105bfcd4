// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Slow, direct implementations used as oracles by the test suites and the
// `selftest` command. Nothing here calls into the optimised operators.
#pragma once

#include <span>
#include <vector>

#include "shuffledet/eval.hpp"
#include "shuffledet/nn_ops.hpp"
#include "shuffledet/postprocess.hpp"
#include "shuffledet/prng.hpp"
#include "shuffledet/tensor.hpp"

namespace shuffledet::reference {

/// Seven nested loops over (n, oc, oy, ox, ic, ky, kx), double accumulation.
Tensor naive_conv2d(const Tensor& input, const Tensor& weight, std::span<const float> bias,
                    const nn::ConvParams& p);

/// Per-channel (x - mean) / sqrt(var + eps) * gamma + beta.
Tensor naive_batchnorm(const Tensor& input, const nn::BnParams& bn);

/// Scans each window explicitly; out-of-range taps are skipped.
Tensor naive_maxpool2d(const Tensor& input, int kernel, int stride, int padding);

/// SPPF built from the naive operators above.
Tensor naive_sppf(const Tensor& input, const nn::FoldedConv& reduce, const nn::FoldedConv& expand, int pool_kernel);

/// Scatter of focus_slice output back to (n, c, 2h, 2w).
Tensor focus_unslice(const Tensor& sliced);

/// Destination channel of each source channel under channel_shuffle(c, g).
std::vector<std::size_t> shuffle_permutation(std::size_t channels, std::size_t groups);

/// Element-by-element decoder using Tensor::at.
std::vector<post::Detection> slow_decode(const post::HeadOutputs& raw, const post::AnchorSet& anchors,
                                         float conf_threshold);

/// O(n^2) suppression: a box survives iff no surviving box of its class that
/// precedes it in (score desc, index asc) order overlaps it beyond the threshold.
std::vector<std::size_t> brute_force_nms(std::span<const post::Detection> dets, float iou_threshold);

/// Enumerates every injective det -> gt assignment in each (image, class)
/// partition and returns the lexicographically best one under the greedy
/// preference (score order of detections, IoU then lower gt index).
eval::MatchResult exhaustive_match(std::span<const eval::ImageDetection> dets,
                                   std::span<const eval::GroundTruth> gts, double iou_threshold);

/// VOC-style AP with sentinel recall 0/1 and precision 0 endpoints.
double voc_average_precision(std::vector<std::pair<float, bool>> scored, std::size_t gt_count);

/// Whole-dataset evaluation composed from exhaustive_match and voc_average_precision.
eval::EvalReport slow_evaluate(std::span<const eval::ImageDetection> dets, std::span<const eval::GroundTruth> gts,
                               int class_count);

// Random case generators shared by the property suites and selftest.

Tensor random_tensor(Prng& prng, const Shape& shape, float lo = -1.0f, float hi = 1.0f);

struct ConvCase {
    nn::ConvParams params;
    Shape input;
};

/// Cycles through point-wise, depth-wise, grouped, strided and padded
/// families by `index % 5`, randomising the remaining fields.
ConvCase random_conv_case(Prng& prng, std::size_t index);

/// Boxes snapped to a 4-pixel grid and scores to multiples of 1/16 so that
/// IoU and score ties are common.
std::vector<post::Detection> random_scene(Prng& prng, std::size_t count, int class_count);

struct Dataset {
    std::vector<eval::ImageDetection> dets;
    std::vector<eval::GroundTruth> gts;
};

/// Small dataset: up to 3 boxes per (image, class) and detections jittered
/// from ground truth or placed at random. Scores are distinct.
Dataset random_dataset(Prng& prng, int image_count, int class_count);

} // namespace shuffledet::reference
