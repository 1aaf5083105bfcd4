// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shuffledet/layer_record.hpp"
#include "shuffledet/model_config.hpp"

namespace shuffledet::model {

struct LayerCost {
    std::string name;
    LayerKind kind = LayerKind::input;
    std::uint64_t params = 0;
    std::uint64_t macs = 0;
    /// Elementwise adds/multiplies outside the MAC count (bias, BN, merges).
    std::uint64_t extra_ops = 0;
    Shape output;
};

struct FlopsReport {
    std::vector<LayerCost> layers;
    std::uint64_t total_params = 0;
    std::uint64_t total_macs = 0;
    std::uint64_t total_extra_ops = 0;
};

/// Per-layer and total parameter / multiply-accumulate counts.
///
/// conv: params = C_out * (C_in/g) * kh * kw (+ C_out bias) (+ 2 * C_out BN),
///       MACs = weight params * H_out * W_out * N.
/// weighted fusion: one MAC per input element, one scalar parameter per input.
/// Everything else is free of parameters and MACs.
/// Throws AnalysisError when a record lacks shape annotations.
FlopsReport count_params_flops(std::span<const LayerRecord> records);

struct CostComparison {
    FlopsReport proposed_backbone;
    FlopsReport proposed_model;
    FlopsReport baseline_backbone;
};

/// Proposed model (backbone alone and whole detector) against the CSP/SPP
/// reference backbone at the same input size.
CostComparison compare_costs(const ModelConfig& cfg, BaselineConfig baseline = {});

} // namespace shuffledet::model
