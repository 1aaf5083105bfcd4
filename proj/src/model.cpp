// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "shuffledet/prng.hpp"
#include "topology.hpp"

namespace shuffledet::model {

std::string to_string(UnitStyle style)
{
    return style == UnitStyle::v2_split ? "v2_split" : "v1_grouped";
}

UnitStyle parse_unit_style(const std::string& text)
{
    if (text == "v2_split" || text == "v2")
        return UnitStyle::v2_split;
    if (text == "v1_grouped" || text == "v1")
        return UnitStyle::v1_grouped;
    throw ParamError("unknown unit style '" + text + "' (expected v2_split or v1_grouped)");
}

void ModelConfig::validate() const
{
    if (class_count < 1)
        throw ParamError("config: class_count must be >= 1");
    if (stage_repeats.size() != 3)
        throw ParamError("config: exactly three stages are required (strides 8, 16, 32)");
    if (stage_channels.size() != stage_repeats.size() + 1)
        throw ParamError("config: stage_channels needs one more entry than stage_repeats");
    for (int c : stage_channels)
        if (c < 2 || c % 2 != 0)
            throw ParamError("config: stage channels must be positive and even");
    for (int r : stage_repeats)
        if (r < 1)
            throw ParamError("config: stage repeats must be >= 1");
    if (group_count < 1)
        throw ParamError("config: group_count must be >= 1");
    if (neck_width < 1)
        throw ParamError("config: neck_width must be >= 1");
    if (!(fusion_epsilon > 0.0f) || !(bn_epsilon > 0.0f))
        throw ParamError("config: epsilons must be > 0");
    if (input_size.height < 32 || input_size.width < 32 || input_size.height % 32 != 0 ||
        input_size.width % 32 != 0)
        throw ParamError("config: input size must be a positive multiple of 32");
    anchors.validate();
    for (std::size_t s = 0; s < anchors.scales.size(); ++s)
        if (anchors.scales[s].stride != (8 << s))
            throw ParamError("config: anchor strides must be 8, 16, 32");
}

std::string to_string(LayerKind kind)
{
    switch (kind) {
    case LayerKind::input: return "input";
    case LayerKind::conv: return "conv";
    case LayerKind::channel_shuffle: return "channel_shuffle";
    case LayerKind::channel_split: return "channel_split";
    case LayerKind::concat: return "concat";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::upsample: return "upsample";
    case LayerKind::weighted_fusion: return "weighted_fusion";
    case LayerKind::add: return "add";
    case LayerKind::activation: return "activation";
    case LayerKind::focus: return "focus";
    }
    return "unknown";
}

void check_dag(std::span<const LayerRecord> records)
{
    std::set<std::string> names;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const LayerRecord& rec = records[i];
        if (!names.insert(rec.name).second)
            throw AnalysisError("duplicate layer name " + rec.name);
        for (const PortRef& in : rec.inputs) {
            if (in.record < 0 || static_cast<std::size_t>(in.record) >= i)
                throw AnalysisError(rec.name + " consumes a tensor that is not produced earlier");
            const auto& producer = records[static_cast<std::size_t>(in.record)];
            if (in.port < 0 || static_cast<std::size_t>(in.port) >= producer.output_shapes.size())
                throw AnalysisError(rec.name + " consumes a missing output port of " + producer.name);
        }
    }
}

int v1_bottleneck_channels(int out_channels, int groups)
{
    const int quarter = std::max(1, out_channels / 4);
    return (quarter + groups - 1) / groups * groups;
}

std::vector<LayerRecord> describe_model(const ModelConfig& cfg, ModelScope scope)
{
    cfg.validate();
    const Shape input{1, 3, static_cast<std::size_t>(cfg.input_size.height),
                      static_cast<std::size_t>(cfg.input_size.width)};
    detail::ShapeCtx ctx(input);
    auto feats = detail::backbone(ctx, cfg, ctx.input());
    if (scope == ModelScope::full)
        detail::neck_head(ctx, cfg, feats[0], feats[1], feats[2]);
    return ctx.take();
}

std::vector<LayerRecord> describe_baseline(const BaselineConfig& cfg)
{
    const Shape input{1, 3, static_cast<std::size_t>(cfg.input_size.height),
                      static_cast<std::size_t>(cfg.input_size.width)};
    detail::ShapeCtx ctx(input);
    detail::baseline_backbone(ctx, cfg, ctx.input());
    return ctx.take();
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Objectness/class priors for the head biases (image-size 640 reference, as in
// the YOLOv5 initialisation), so an untrained model emits few boxes.
void init_head_bias(Tensor& bias, const ModelConfig& cfg, int stride)
{
    const int per_anchor = 5 + cfg.class_count;
    const double cells = (640.0 / stride) * (640.0 / stride);
    const float obj_prior = static_cast<float>(std::log(8.0 / cells));
    const float cls_prior = static_cast<float>(std::log(0.6 / (cfg.class_count - 0.99)));
    auto data = bias.data();
    for (std::size_t c = 0; c < data.size(); ++c) {
        const int k = static_cast<int>(c) % per_anchor;
        data[c] = k == 4 ? obj_prior : (k >= 5 ? cls_prior : 0.0f);
    }
}

} // namespace

WeightStore init_weights(const ModelConfig& cfg, std::uint64_t seed)
{
    Prng prng(seed);
    WeightStore store;
    for (const LayerRecord& rec : describe_model(cfg)) {
        for (const WeightSpec& spec : rec.weights) {
            Tensor t;
            const Shape& s = spec.shape;
            if (ends_with(spec.name, ".weight")) {
                const bool head = !rec.batch_norm;
                const double fan_in = static_cast<double>(s.c * s.h * s.w);
                const float std = head ? 0.01f : static_cast<float>(std::sqrt(2.0 / fan_in));
                t = seeded_normal(prng, s, 0.0f, std);
            } else if (ends_with(spec.name, ".bias")) {
                t = Tensor(s, 0.0f);
                const int stride = rec.name == "head.p3" ? 8 : rec.name == "head.p4" ? 16 : 32;
                init_head_bias(t, cfg, stride);
            } else if (ends_with(spec.name, ".bn.gamma")) {
                t = seeded_normal(prng, s, 1.0f, 0.1f);
            } else if (ends_with(spec.name, ".bn.beta") || ends_with(spec.name, ".bn.mean")) {
                t = seeded_normal(prng, s, 0.0f, 0.1f);
            } else if (ends_with(spec.name, ".bn.var")) {
                t = seeded_normal(prng, s, 0.0f, 0.1f);
                for (float& v : t.data())
                    v = 1.0f + std::fabs(v);
            } else if (ends_with(spec.name, ".w")) {
                t = Tensor(s, 1.0f);
            } else {
                throw DataError("init_weights: no initializer for " + spec.name);
            }
            store.insert(spec.name, std::move(t));
        }
    }
    return store;
}

void validate_store(const ModelConfig& cfg, const WeightStore& store)
{
    std::set<std::string> expected;
    for (const LayerRecord& rec : describe_model(cfg))
        for (const WeightSpec& spec : rec.weights) {
            expected.insert(spec.name);
            if (!store.contains(spec.name))
                throw FormatError("weights: missing tensor '" + spec.name + "' for layer " + rec.name);
            const Shape& have = store.get(spec.name).shape();
            if (have != spec.shape)
                throw FormatError("weights: tensor '" + spec.name + "' has shape " + have.str() +
                                  ", layer " + rec.name + " needs " + spec.shape.str());
        }
    for (const auto& [name, tensor] : store)
        if (expected.count(name) == 0)
            throw FormatError("weights: tensor '" + name + "' is not used by this configuration");
}

Tensor shuffle_unit_v2(const Tensor& input, const WeightStore& store, const std::string& prefix,
                       int out_channels, int stride, float bn_epsilon, const ExecOptions& opts)
{
    detail::ExecCtx ctx(store, bn_epsilon, 1e-4f, opts);
    return detail::unit_v2(ctx, prefix, input, out_channels, stride);
}

Tensor shuffle_unit_v1(const Tensor& input, const WeightStore& store, const std::string& prefix,
                       int out_channels, int stride, int groups, float bn_epsilon, const ExecOptions& opts)
{
    detail::ExecCtx ctx(store, bn_epsilon, 1e-4f, opts);
    return detail::unit_v1(ctx, prefix, input, out_channels, stride, groups);
}

BackboneOutputs build_backbone(const ModelConfig& cfg, const WeightStore& store, const Tensor& image,
                               const ExecOptions& opts)
{
    detail::ExecCtx ctx(store, cfg.bn_epsilon, cfg.fusion_epsilon, opts);
    auto feats = detail::backbone(ctx, cfg, image);
    return {std::move(feats[0]), std::move(feats[1]), std::move(feats[2])};
}

Tensor weighted_fusion(std::span<const nn::TensorRef> features, std::span<const float> weights, float eps)
{
    if (features.size() < 2)
        throw ShapeError("weighted_fusion: needs at least two features");
    if (weights.size() != features.size())
        throw ShapeError("weighted_fusion: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(features.size()) + " features");
    const Shape& shape = features.front().get().shape();
    for (const Tensor& f : features)
        if (f.shape() != shape)
            throw ShapeError("weighted_fusion: shape mismatch " + f.shape().str() + " vs " + shape.str());
    std::vector<float> w(weights.begin(), weights.end());
    float total = eps;
    for (float& v : w) {
        v = std::max(v, 0.0f);
        total += v;
    }
    Tensor out(shape, 0.0f);
    auto dst = out.data();
    for (std::size_t k = 0; k < features.size(); ++k) {
        const float coeff = w[k] / total;
        auto src = features[k].get().data();
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] += coeff * src[i];
    }
    return out;
}

post::HeadOutputs build_neck_head(const ModelConfig& cfg, const WeightStore& store, const Tensor& c3,
                                  const Tensor& c4, const Tensor& c5, const ExecOptions& opts)
{
    detail::ExecCtx ctx(store, cfg.bn_epsilon, cfg.fusion_epsilon, opts);
    return detail::neck_head(ctx, cfg, c3, c4, c5);
}

Detector::Detector(ModelConfig cfg, WeightStore store) : cfg_(std::move(cfg)), store_(std::move(store))
{
    validate_store(cfg_, store_);
}

post::HeadOutputs Detector::forward(const Tensor& model_input, const ExecOptions& opts) const
{
    const BackboneOutputs feats = build_backbone(cfg_, store_, model_input, opts);
    return build_neck_head(cfg_, store_, feats.c3, feats.c4, feats.c5, opts);
}

std::vector<post::Detection> Detector::detect(const Tensor& image, const DetectOptions& options,
                                              const ExecOptions& opts) const
{
    const Shape& s = image.shape();
    if (s.n != 1 || s.c != 3)
        throw ShapeError("detect: expected a (1,3,h,w) image, got " + s.str());
    const auto lb = post::letterbox_map({static_cast<int>(s.h), static_cast<int>(s.w)}, cfg_.input_size);
    const Tensor input = post::letterbox_image(image, lb);
    const auto heads = forward(input, opts);
    const auto candidates = post::decode_predictions(heads, cfg_.anchors, options.conf_threshold);
    std::vector<post::Detection> out;
    for (const post::Detection& d : post::nms(candidates, options.iou_threshold))
        out.push_back(post::apply_inverse(lb, d));
    return out;
}

} // namespace shuffledet::model
