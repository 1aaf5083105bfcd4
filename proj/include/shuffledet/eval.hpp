// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shuffledet/postprocess.hpp"

namespace shuffledet::eval {

struct GroundTruth {
    std::string image_id;
    int class_id = 0;
    post::Box box;
};

struct ImageDetection {
    std::string image_id;
    post::Detection det;
};

struct MatchResult {
    std::vector<bool> is_tp;      // per detection
    std::vector<int> matched_gt;  // per detection, -1 when FP
    std::vector<bool> gt_matched; // per ground truth
};

/// Greedy matching inside every (image, class) partition: detections in
/// descending score order (ties: lower index first) each take the unmatched
/// ground truth with the highest IoU >= iou_threshold (ties: lower index).
MatchResult match_detections(std::span<const ImageDetection> dets, std::span<const GroundTruth> gts,
                             double iou_threshold = 0.5);

struct LabeledDetection {
    float score = 0.0f;
    bool tp = false;
};

enum class ApMethod {
    all_point,    // area under the monotone precision envelope
    eleven_point, // mean envelope precision at recall 0, 0.1, ..., 1
};

struct ApResult {
    double ap = 0.0;
    /// False when gt_count == 0; ap is then reported as 0.
    bool defined = true;
};

ApResult average_precision(std::span<const LabeledDetection> dets, std::size_t gt_count,
                           ApMethod method = ApMethod::all_point);

struct ClassMetrics {
    std::string name;
    double ap = 0.0;
    bool ap_defined = true;
    double recall = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t gt_count = 0;
};

struct EvalOptions {
    double iou_threshold = 0.5;
    ApMethod method = ApMethod::all_point;
    /// Classes without ground truth count as AP 0 in the mean when true,
    /// and are left out of it otherwise.
    bool include_undefined_in_map = true;
    std::vector<std::string> class_names;
};

struct EvalReport {
    std::vector<ClassMetrics> classes;
    double map50 = 0.0;
    /// Fraction of images with ground truth where every class present has
    /// at least one true positive of that class.
    double image_recall = 0.0;
    std::size_t image_count = 0;
};

/// Throws DataError naming the record when a class id is outside [0, class_count).
EvalReport evaluate_dataset(std::span<const ImageDetection> dets, std::span<const GroundTruth> gts,
                            int class_count, const EvalOptions& options = {});

} // namespace shuffledet::eval
