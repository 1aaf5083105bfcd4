// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shuffledet/nn_ops.hpp"

namespace shuffledet::model {

enum class LayerKind {
    input,
    conv,
    channel_shuffle,
    channel_split,
    concat,
    maxpool,
    avgpool,
    upsample,
    weighted_fusion,
    add,
    activation,
    focus,
};

std::string to_string(LayerKind kind);

/// Output `port` of record `record`.
struct PortRef {
    int record = 0;
    int port = 0;
};

struct WeightSpec {
    std::string name;
    Shape shape;
};

/// One node of the declarative model graph with its shape annotations.
struct LayerRecord {
    std::string name;
    LayerKind kind = LayerKind::input;
    std::vector<PortRef> inputs;
    std::vector<Shape> input_shapes;
    std::vector<Shape> output_shapes;

    std::optional<nn::ConvParams> conv;
    bool batch_norm = false;
    bool bias = false;
    nn::Activation act = nn::Activation::identity;

    int groups = 1;                  // channel_shuffle
    int pool_kernel = 0;             // maxpool / avgpool
    int pool_stride = 0;
    int pool_padding = 0;

    /// Tensors this layer reads from the weight store.
    std::vector<WeightSpec> weights;
};

/// Throws AnalysisError if any record consumes a port not produced earlier.
void check_dag(std::span<const LayerRecord> records);

} // namespace shuffledet::model
