// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shuffledet/layer_record.hpp"
#include "shuffledet/model_config.hpp"
#include "shuffledet/nn_ops.hpp"
#include "shuffledet/postprocess.hpp"
#include "shuffledet/weight_store.hpp"

namespace shuffledet::model {

struct ExecOptions {
    int threads = 1;
    /// Called after every executed layer with its name and output shapes.
    std::function<void(const std::string&, std::span<const Shape>)> trace;
};

/// Stage outputs at strides 8, 16 and 32.
struct BackboneOutputs {
    Tensor c3;
    Tensor c4;
    Tensor c5;
};

enum class ModelScope { backbone, full };

/// Shape-annotated graph of the detector for `cfg.input_size`, batch 1.
std::vector<LayerRecord> describe_model(const ModelConfig& cfg, ModelScope scope = ModelScope::full);

/// Cost-reference backbone (Focus stem, C3 blocks, 1024-wide last stage, SPP).
/// Described only; there is no executable counterpart.
std::vector<LayerRecord> describe_baseline(const BaselineConfig& cfg);

/// Deterministic stand-in weights for every tensor `describe_model` names.
WeightStore init_weights(const ModelConfig& cfg, std::uint64_t seed);

/// Throws FormatError naming the first record whose tensor is missing or misshapen.
void validate_store(const ModelConfig& cfg, const WeightStore& store);

/// Channels of the v1 unit bottleneck: out/4 rounded up to a multiple of groups.
int v1_bottleneck_channels(int out_channels, int groups);

/// ShuffleNetV2 unit. Weights are read under `prefix` (branch1.*, branch2.*).
Tensor shuffle_unit_v2(const Tensor& input, const WeightStore& store, const std::string& prefix,
                       int out_channels, int stride, float bn_epsilon = 1e-5f, const ExecOptions& opts = {});

/// ShuffleNetV1-style residual unit with grouped 1x1 convolutions.
Tensor shuffle_unit_v1(const Tensor& input, const WeightStore& store, const std::string& prefix,
                       int out_channels, int stride, int groups, float bn_epsilon = 1e-5f,
                       const ExecOptions& opts = {});

/// Input must be (1, 3, h, w) with h and w divisible by 32.
BackboneOutputs build_backbone(const ModelConfig& cfg, const WeightStore& store, const Tensor& image,
                               const ExecOptions& opts = {});

/// sum_i w_i * F_i / (sum_i w_i + eps), with every w_i clamped at 0 from below.
Tensor weighted_fusion(std::span<const nn::TensorRef> features, std::span<const float> weights, float eps);

/// Top-down then bottom-up weighted-fusion neck and three 1x1 prediction heads.
post::HeadOutputs build_neck_head(const ModelConfig& cfg, const WeightStore& store, const Tensor& c3,
                                  const Tensor& c4, const Tensor& c5, const ExecOptions& opts = {});

struct DetectOptions {
    float conf_threshold = 0.25f;
    float iou_threshold = 0.45f;
};

/// Full pipeline: letterbox, forward, decode, NMS, map back to image pixels.
class Detector {
public:
    /// Validates the store against the config.
    Detector(ModelConfig cfg, WeightStore store);

    const ModelConfig& config() const { return cfg_; }
    const WeightStore& weights() const { return store_; }

    post::HeadOutputs forward(const Tensor& model_input, const ExecOptions& opts = {}) const;
    /// `image` is (1, 3, h, w) in [0, 1] at its native size.
    std::vector<post::Detection> detect(const Tensor& image, const DetectOptions& options,
                                        const ExecOptions& opts = {}) const;

private:
    ModelConfig cfg_;
    WeightStore store_;
};

} // namespace shuffledet::model
