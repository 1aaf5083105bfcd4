// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
//
// The network topology is written once against a context type. ShapeCtx
// walks it symbolically and emits LayerRecords; ExecCtx runs it on tensors.
#pragma once

#include <array>
#include <initializer_list>
#include <string>
#include <vector>

#include "shuffledet/error.hpp"
#include "shuffledet/layer_record.hpp"
#include "shuffledet/model.hpp"
#include "shuffledet/nn_ops.hpp"
#include "shuffledet/weight_store.hpp"

namespace shuffledet::model::detail {

using nn::Activation;
using nn::ConvParams;

class ShapeCtx {
public:
    struct Value {
        Shape shape;
        PortRef ref;
    };
    using Refs = std::initializer_list<std::reference_wrapper<const Value>>;

    explicit ShapeCtx(const Shape& input);

    Value input() const { return {records_.front().output_shapes.front(), {0, 0}}; }
    static int channels(const Value& v) { return static_cast<int>(v.shape.c); }
    static Shape shape(const Value& v) { return v.shape; }

    Value conv(const std::string& name, const Value& x, const ConvParams& p, bool bn, bool bias, Activation act);
    Value shuffle(const std::string& name, const Value& x, int groups);
    std::pair<Value, Value> split(const std::string& name, const Value& x);
    Value concat(const std::string& name, Refs parts);
    Value maxpool(const std::string& name, const Value& x, int k, int s, int p);
    Value avgpool(const std::string& name, const Value& x, int k, int s, int p);
    Value upsample(const std::string& name, const Value& x);
    Value fuse(const std::string& name, Refs parts);
    Value add(const std::string& name, const Value& a, const Value& b);
    Value act(const std::string& name, const Value& x, Activation kind);
    Value focus(const std::string& name, const Value& x);

    std::vector<LayerRecord> take() { return std::move(records_); }

private:
    std::vector<Value> push(LayerRecord rec, std::vector<const Value*> inputs, std::vector<Shape> outputs);
    Value pool(LayerKind kind, const std::string& name, const Value& x, int k, int s, int p);

    std::vector<LayerRecord> records_;
};

class ExecCtx {
public:
    using Value = Tensor;
    using Refs = std::initializer_list<std::reference_wrapper<const Tensor>>;

    ExecCtx(const WeightStore& store, float bn_epsilon, float fusion_epsilon, const ExecOptions& opts)
        : store_(store), bn_epsilon_(bn_epsilon), fusion_epsilon_(fusion_epsilon), opts_(opts)
    {
    }

    static int channels(const Tensor& t) { return static_cast<int>(t.shape().c); }
    static Shape shape(const Tensor& t) { return t.shape(); }

    Tensor conv(const std::string& name, const Tensor& x, const ConvParams& p, bool bn, bool bias, Activation act);
    Tensor shuffle(const std::string& name, const Tensor& x, int groups);
    std::pair<Tensor, Tensor> split(const std::string& name, const Tensor& x);
    Tensor concat(const std::string& name, Refs parts);
    Tensor maxpool(const std::string& name, const Tensor& x, int k, int s, int p);
    Tensor avgpool(const std::string& name, const Tensor& x, int k, int s, int p);
    Tensor upsample(const std::string& name, const Tensor& x);
    Tensor fuse(const std::string& name, Refs parts);
    Tensor add(const std::string& name, const Tensor& a, const Tensor& b);
    Tensor act(const std::string& name, const Tensor& x, Activation kind);
    Tensor focus(const std::string& name, const Tensor& x);

private:
    Tensor traced(const std::string& name, Tensor t) const;

    const WeightStore& store_;
    float bn_epsilon_;
    float fusion_epsilon_;
    const ExecOptions& opts_;
};

template <class Ctx>
using V = typename Ctx::Value;

template <class Ctx>
V<Ctx> conv_bn(Ctx& ctx, const std::string& name, const V<Ctx>& x, const ConvParams& p, Activation act)
{
    return ctx.conv(name, x, p, true, false, act);
}

template <class Ctx>
V<Ctx> unit_v2(Ctx& ctx, const std::string& name, const V<Ctx>& x, int out, int stride)
{
    const int in = Ctx::channels(x);
    if (out % 2 != 0)
        throw ParamError(name + ": output channels must be even, got " + std::to_string(out));
    const int branch = out / 2;
    if (stride == 1) {
        if (in % 2 != 0)
            throw ParamError(name + ": stride-1 unit needs even input channels, got " + std::to_string(in));
        if (in != out)
            throw ParamError(name + ": stride-1 unit must keep channel count");
        auto [left, right] = ctx.split(name + ".split", x);
        auto r = conv_bn(ctx, name + ".branch2.pw1", right, ConvParams::pointwise(branch, branch), Activation::relu);
        r = conv_bn(ctx, name + ".branch2.dw", r, ConvParams::depthwise(branch, 3, 1), Activation::identity);
        r = conv_bn(ctx, name + ".branch2.pw2", r, ConvParams::pointwise(branch, branch), Activation::relu);
        auto cat = ctx.concat(name + ".concat", {left, r});
        return ctx.shuffle(name + ".shuffle", cat, 2);
    }
    if (stride != 2)
        throw ParamError(name + ": stride must be 1 or 2");
    auto l = conv_bn(ctx, name + ".branch1.dw", x, ConvParams::depthwise(in, 3, 2), Activation::identity);
    l = conv_bn(ctx, name + ".branch1.pw", l, ConvParams::pointwise(in, branch), Activation::relu);
    auto r = conv_bn(ctx, name + ".branch2.pw1", x, ConvParams::pointwise(in, branch), Activation::relu);
    r = conv_bn(ctx, name + ".branch2.dw", r, ConvParams::depthwise(branch, 3, 2), Activation::identity);
    r = conv_bn(ctx, name + ".branch2.pw2", r, ConvParams::pointwise(branch, branch), Activation::relu);
    auto cat = ctx.concat(name + ".concat", {l, r});
    return ctx.shuffle(name + ".shuffle", cat, 2);
}

template <class Ctx>
V<Ctx> unit_v1(Ctx& ctx, const std::string& name, const V<Ctx>& x, int out, int stride, int groups)
{
    const int in = Ctx::channels(x);
    if (stride != 1 && stride != 2)
        throw ParamError(name + ": stride must be 1 or 2");
    if (groups < 1)
        throw ParamError(name + ": groups must be positive");
    const int branch_out = stride == 1 ? out : out - in;
    if (stride == 1 && in != out)
        throw ParamError(name + ": stride-1 unit must keep channel count");
    if (branch_out < 1)
        throw ParamError(name + ": stride-2 unit must grow the channel count");
    const int mid = v1_bottleneck_channels(out, groups);
    if (in % groups != 0 || branch_out % groups != 0)
        throw ParamError(name + ": groups " + std::to_string(groups) + " must divide " + std::to_string(in) +
                         " and " + std::to_string(branch_out));
    auto b = conv_bn(ctx, name + ".gconv1", x, ConvParams::pointwise(in, mid, groups), Activation::relu);
    b = ctx.shuffle(name + ".shuffle", b, groups);
    b = conv_bn(ctx, name + ".dw", b, ConvParams::depthwise(mid, 3, stride), Activation::identity);
    b = conv_bn(ctx, name + ".gconv2", b, ConvParams::pointwise(mid, branch_out, groups), Activation::identity);
    if (stride == 1) {
        auto merged = ctx.add(name + ".add", x, b);
        return ctx.act(name + ".relu", merged, Activation::relu);
    }
    auto shortcut = ctx.avgpool(name + ".shortcut", x, 3, 2, 1);
    auto merged = ctx.concat(name + ".concat", {shortcut, b});
    return ctx.act(name + ".relu", merged, Activation::relu);
}

template <class Ctx>
V<Ctx> sppf_block(Ctx& ctx, const std::string& name, const V<Ctx>& x, int pool_kernel)
{
    const int c = Ctx::channels(x);
    if (c % 2 != 0)
        throw ParamError(name + ": channel count must be even");
    const int hidden = c / 2;
    const int pad = pool_kernel / 2;
    auto y = conv_bn(ctx, name + ".reduce", x, ConvParams::pointwise(c, hidden), Activation::silu);
    auto p1 = ctx.maxpool(name + ".pool1", y, pool_kernel, 1, pad);
    auto p2 = ctx.maxpool(name + ".pool2", p1, pool_kernel, 1, pad);
    auto p3 = ctx.maxpool(name + ".pool3", p2, pool_kernel, 1, pad);
    auto cat = ctx.concat(name + ".concat", {y, p1, p2, p3});
    return conv_bn(ctx, name + ".expand", cat, ConvParams::pointwise(4 * hidden, c), Activation::silu);
}

inline std::string stage_name(std::size_t stage)
{
    return "backbone.stage" + std::to_string(stage + 2);
}

template <class Ctx>
std::array<V<Ctx>, 3> backbone(Ctx& ctx, const ModelConfig& cfg, const V<Ctx>& image)
{
    cfg.validate();
    const Shape s = Ctx::shape(image);
    if (s.n != 1 || s.c != 3)
        throw ParamError("backbone: expected a (1,3,h,w) image, got " + s.str());
    if (s.h == 0 || s.w == 0 || s.h % 32 != 0 || s.w % 32 != 0)
        throw ParamError("backbone: image extents must be positive multiples of 32, got " + s.str());

    auto x = conv_bn(ctx, "backbone.stem.conv", image, ConvParams::standard(3, cfg.stage_channels[0], 3, 2),
                     Activation::relu);
    x = ctx.maxpool("backbone.stem.pool", x, 3, 2, 1);
    std::array<V<Ctx>, 3> outs;
    for (std::size_t stage = 0; stage < cfg.stage_repeats.size(); ++stage) {
        const int out = cfg.stage_channels[stage + 1];
        for (int j = 0; j < cfg.stage_repeats[stage]; ++j) {
            const std::string name = stage_name(stage) + "." + std::to_string(j);
            const int stride = j == 0 ? 2 : 1;
            if (cfg.unit_style == UnitStyle::v2_split)
                x = unit_v2(ctx, name, x, out, stride);
            else
                x = unit_v1(ctx, name, x, out, stride, cfg.group_count);
        }
        outs[stage] = x;
    }
    if (cfg.sppf_enabled)
        outs[2] = sppf_block(ctx, "backbone.sppf", outs[2], 5);
    return outs;
}

template <class Ctx>
std::array<V<Ctx>, 3> neck_head(Ctx& ctx, const ModelConfig& cfg, const V<Ctx>& c3, const V<Ctx>& c4,
                                const V<Ctx>& c5)
{
    const int w = cfg.neck_width;
    const int head = cfg.head_channels();
    auto lateral = [&](const std::string& name, const V<Ctx>& c) {
        return conv_bn(ctx, name, c, ConvParams::pointwise(Ctx::channels(c), w), Activation::silu);
    };
    auto smooth = [&](const std::string& name, const V<Ctx>& x) {
        return conv_bn(ctx, name, x, ConvParams::standard(w, w, 3), Activation::silu);
    };
    auto down = [&](const std::string& name, const V<Ctx>& x) {
        return conv_bn(ctx, name, x, ConvParams::standard(w, w, 3, 2), Activation::silu);
    };

    const auto l3 = lateral("neck.lateral3", c3);
    const auto l4 = lateral("neck.lateral4", c4);
    const auto t5 = lateral("neck.lateral5", c5);

    // top-down
    const auto u5 = ctx.upsample("neck.up5", t5);
    const auto t4 = smooth("neck.td4.conv", ctx.fuse("neck.td4.fuse", {l4, u5}));
    const auto u4 = ctx.upsample("neck.up4", t4);
    const auto o3 = smooth("neck.td3.conv", ctx.fuse("neck.td3.fuse", {l3, u4}));

    // bottom-up
    const auto d3 = down("neck.down3", o3);
    const auto o4 = smooth("neck.bu4.conv", ctx.fuse("neck.bu4.fuse", {t4, d3}));
    const auto d4 = down("neck.down4", o4);
    const auto o5 = smooth("neck.bu5.conv", ctx.fuse("neck.bu5.fuse", {t5, d4}));

    const auto p = ConvParams::pointwise(w, head);
    return {ctx.conv("head.p3", o3, p, false, true, Activation::identity),
            ctx.conv("head.p4", o4, p, false, true, Activation::identity),
            ctx.conv("head.p5", o5, p, false, true, Activation::identity)};
}

template <class Ctx>
V<Ctx> c3_block(Ctx& ctx, const std::string& name, const V<Ctx>& x, int out, int repeats, bool shortcut)
{
    const int in = Ctx::channels(x);
    const int hidden = out / 2;
    auto a = conv_bn(ctx, name + ".cv1", x, ConvParams::pointwise(in, hidden), Activation::silu);
    for (int j = 0; j < repeats; ++j) {
        const std::string m = name + ".m." + std::to_string(j);
        auto t = conv_bn(ctx, m + ".cv1", a, ConvParams::pointwise(hidden, hidden), Activation::silu);
        t = conv_bn(ctx, m + ".cv2", t, ConvParams::standard(hidden, hidden, 3), Activation::silu);
        a = shortcut ? ctx.add(m + ".add", a, t) : t;
    }
    auto b = conv_bn(ctx, name + ".cv2", x, ConvParams::pointwise(in, hidden), Activation::silu);
    auto cat = ctx.concat(name + ".concat", {a, b});
    return conv_bn(ctx, name + ".cv3", cat, ConvParams::pointwise(2 * hidden, out), Activation::silu);
}

template <class Ctx>
V<Ctx> spp_block(Ctx& ctx, const std::string& name, const V<Ctx>& x, int out, const std::vector<int>& kernels)
{
    const int in = Ctx::channels(x);
    const int hidden = in / 2;
    auto y = conv_bn(ctx, name + ".cv1", x, ConvParams::pointwise(in, hidden), Activation::silu);
    std::vector<V<Ctx>> pools;
    pools.reserve(kernels.size());
    for (int k : kernels)
        pools.push_back(ctx.maxpool(name + ".pool" + std::to_string(k), y, k, 1, k / 2));
    if (pools.size() != 3)
        throw ParamError(name + ": expected three pooling kernels");
    auto cat = ctx.concat(name + ".concat", {y, pools[0], pools[1], pools[2]});
    return conv_bn(ctx, name + ".cv2", cat, ConvParams::pointwise(hidden * 4, out), Activation::silu);
}

template <class Ctx>
V<Ctx> baseline_backbone(Ctx& ctx, const BaselineConfig& cfg, const V<Ctx>& image)
{
    const auto& ch = cfg.stage_channels;
    if (ch.size() != 5 || cfg.c3_repeats.size() != 4)
        throw ParamError("baseline: expected 5 stage widths and 4 C3 repeat counts");
    auto x = ctx.focus("baseline.focus", image);
    x = conv_bn(ctx, "baseline.stem", x, ConvParams::standard(12, ch[0], 3), Activation::silu);
    for (std::size_t i = 1; i < ch.size(); ++i) {
        const std::string idx = std::to_string(i);
        x = conv_bn(ctx, "baseline.down" + idx, x, ConvParams::standard(ch[i - 1], ch[i], 3, 2), Activation::silu);
        const bool last = i + 1 == ch.size();
        if (last)
            x = spp_block(ctx, "baseline.spp", x, ch[i], cfg.spp_kernels);
        x = c3_block(ctx, "baseline.c3_" + idx, x, ch[i], cfg.c3_repeats[i - 1], !last);
    }
    return x;
}

} // namespace shuffledet::model::detail
