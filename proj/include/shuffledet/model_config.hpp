// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "shuffledet/postprocess.hpp"

namespace shuffledet::model {

enum class UnitStyle {
    v2_split,   // channel split, depth-wise branch, concat, shuffle
    v1_grouped, // grouped 1x1, shuffle, depth-wise, grouped 1x1, residual merge
};

std::string to_string(UnitStyle style);
UnitStyle parse_unit_style(const std::string& text);

struct ModelConfig {
    post::Extent input_size{640, 640};
    int class_count = 6;
    std::vector<int> stage_channels{24, 116, 232, 464};
    std::vector<int> stage_repeats{4, 8, 4};
    UnitStyle unit_style = UnitStyle::v2_split;
    int group_count = 2;
    bool sppf_enabled = false;
    post::AnchorSet anchors = post::AnchorSet::yolo_default();
    float fusion_epsilon = 1e-4f;
    int neck_width = 128;
    float bn_epsilon = 1e-5f;

    /// Throws ParamError on inconsistent fields.
    void validate() const;
    /// Channels of each head output: anchors * (box + objectness + classes).
    int head_channels() const { return post::kAnchorsPerScale * (5 + class_count); }
};

/// YOLOv5-style CSP backbone used only as a cost reference.
struct BaselineConfig {
    post::Extent input_size{640, 640};
    std::vector<int> stage_channels{64, 128, 256, 512, 1024};
    std::vector<int> c3_repeats{3, 9, 9, 3};
    std::vector<int> spp_kernels{5, 9, 13};
};

} // namespace shuffledet::model
