// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON serialisation for CLI outputs. Objects are emitted with sorted keys
// and two-space indentation; floats are written in their shortest
// round-trip form.
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shuffledet/eval.hpp"
#include "shuffledet/flops.hpp"
#include "shuffledet/postprocess.hpp"

namespace shuffledet::io {

std::string detections_to_json(std::span<const post::Detection> dets, std::span<const std::string> class_names,
                               const std::string& image);

/// Reads the "detections" array of a detections document. Throws FormatError.
std::vector<post::Detection> detections_from_json(std::string_view text);

std::string eval_report_to_json(const eval::EvalReport& report);

/// Always carries proposed and baseline totals; per-layer baseline rows only
/// when `baseline_layers` is set.
std::string costs_to_json(const model::CostComparison& costs, int class_count, post::Extent input_size,
                          bool baseline_layers);

struct LatencyStats {
    std::size_t iterations = 0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
};

/// Nearest-rank percentiles over the samples. Throws ParamError when empty.
LatencyStats summarize_latency(std::vector<double> samples_ms);

std::string latency_to_json(const LatencyStats& stats, const std::string& image, post::Extent input_size);

} // namespace shuffledet::io
