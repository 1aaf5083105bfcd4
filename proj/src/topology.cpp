// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "topology.hpp"

namespace shuffledet::model::detail {

namespace {

Shape vec_shape(int channels)
{
    return {static_cast<std::size_t>(channels), 1, 1, 1};
}

std::vector<float> as_vector(const Tensor& t, std::size_t expected, const std::string& name)
{
    if (t.numel() != expected)
        throw ShapeError(name + ": expected " + std::to_string(expected) + " values, store has " +
                         t.shape().str());
    return {t.data().begin(), t.data().end()};
}

} // namespace

ShapeCtx::ShapeCtx(const Shape& input)
{
    LayerRecord rec;
    rec.name = "input";
    rec.kind = LayerKind::input;
    rec.output_shapes = {input};
    records_.push_back(std::move(rec));
}

std::vector<ShapeCtx::Value> ShapeCtx::push(LayerRecord rec, std::vector<const Value*> inputs,
                                            std::vector<Shape> outputs)
{
    for (const Value* v : inputs) {
        rec.inputs.push_back(v->ref);
        rec.input_shapes.push_back(v->shape);
    }
    rec.output_shapes = outputs;
    const int index = static_cast<int>(records_.size());
    records_.push_back(std::move(rec));
    std::vector<Value> values;
    for (std::size_t port = 0; port < outputs.size(); ++port)
        values.push_back({outputs[port], {index, static_cast<int>(port)}});
    return values;
}

ShapeCtx::Value ShapeCtx::conv(const std::string& name, const Value& x, const ConvParams& p, bool bn, bool bias,
                               Activation act)
{
    if (x.shape.c != static_cast<std::size_t>(p.in_channels))
        throw ParamError(name + ": input has " + std::to_string(x.shape.c) + " channels, expected " +
                         std::to_string(p.in_channels));
    LayerRecord rec;
    rec.name = name;
    rec.kind = LayerKind::conv;
    rec.conv = p;
    rec.batch_norm = bn;
    rec.bias = bias;
    rec.act = act;
    rec.weights.push_back({name + ".weight", p.weight_shape()});
    if (bias)
        rec.weights.push_back({name + ".bias", vec_shape(p.out_channels)});
    if (bn)
        for (const char* part : {".bn.gamma", ".bn.beta", ".bn.mean", ".bn.var"})
            rec.weights.push_back({name + part, vec_shape(p.out_channels)});
    return push(std::move(rec), {&x}, {p.output_shape(x.shape)}).front();
}

ShapeCtx::Value ShapeCtx::shuffle(const std::string& name, const Value& x, int groups)
{
    if (groups < 1 || x.shape.c % static_cast<std::size_t>(groups) != 0)
        throw ParamError(name + ": groups must divide channels");
    LayerRecord rec;
    rec.name = name;
    rec.kind = LayerKind::channel_shuffle;
    rec.groups = groups;
    return push(std::move(rec), {&x}, {x.shape}).front();
}

std::pair<ShapeCtx::Value, ShapeCtx::Value> ShapeCtx::split(const std::string& name, const Value& x)
{
    if (x.shape.c % 2 != 0)
        throw ShapeError(name + ": odd channel count");
    Shape half = x.shape;
    half.c /= 2;
    LayerRecord rec;
    rec.name = name;
    rec.kind = LayerKind::channel_split;
    auto outs = push(std::move(rec), {&x}, {half, half});
    return {outs[0], outs[1]};
}

ShapeCtx::Value ShapeCtx::concat(const std::string& name, Refs parts)
{
    std::vector<const Value*> inputs;
    Shape out = parts.begin()->get().shape;
    out.c = 0;
    for (const Value& v : parts) {
        if (v.shape.n != out.n || v.shape.h != out.h || v.shape.w != out.w)
            throw ShapeError(name + ": incompatible concat inputs");
        out.c += v.shape.c;
        inputs.push_back(&v);
    }
    LayerRecord rec;
    rec.name = name;
    rec.kind = LayerKind::concat;
    return push(std::move(rec), inputs, {out}).front();
}

ShapeCtx::Value ShapeCtx::pool(LayerKind kind, const std::string& name, const Value& x, int k, int s, int p)
{
    const int oh = (static_cast<int>(x.shape.h) + 2 * p - k) / s + 1;
    const int ow = (static_cast<int>(x.shape.w) + 2 * p - k) / s + 1;
    if (oh < 1 || ow < 1 || 2 * p > k)
        throw ParamError(name + ": invalid pooling window");
    LayerRecord rec;
    rec.name = name;
    rec.kind = kind;
    rec.pool_kernel = k;
    rec.pool_stride = s;
    rec.pool_padding = p;
    Shape out = x.shape;
    out.h = static_cast<std::size_t>(oh);
    out.w = static_cast<std::size_t>(ow);
    return push(std::move(rec), {&x}, {out}).front();
}

ShapeCtx::Value ShapeCtx::maxpool(const std::string& name, const Value& x, int k, int s, int p)
{
    return pool(LayerKind::maxpool, name, x, k, s, p);
}

ShapeCtx::Value ShapeCtx::avgpool(const std::string& name, const Value& x, int k, int s, int p)
{
    return pool(LayerKind::avgpool, name, x, k, s, p);
}

ShapeCtx::Value ShapeCtx::upsample(const std::string& name, const Value& x)
{
    LayerRecord rec;
    rec.name = name;
    rec.kind = LayerKind::upsample;
    Shape out = x.shape;
    out.h *= 2;
    out.w *= 2;
    return push(std::move(rec), {&x}, {out}).front();
}

ShapeCtx::Value ShapeCtx::fuse(const std::string& name, Refs parts)
{
    std::vector<const Value*> inputs;
    for (const Value& v : parts) {
        if (v.shape != parts.begin()->get().shape)
            throw ShapeError(name + ": fused features differ in shape");
        inputs.push_back(&v);
    }
    if (inputs.size() < 2)
        throw ShapeError(name + ": fusion needs at least two features");
    LayerRecord rec;
    rec.name = name;
    rec.kind = LayerKind::weighted_fusion;
    rec.weights.push_back({name + ".w", vec_shape(static_cast<int>(inputs.size()))});
    const Shape out = inputs.front()->shape;
    return push(std::move(rec), inputs, {out}).front();
}

ShapeCtx::Value ShapeCtx::add(const std::string& name, const Value& a, const Value& b)
{
    if (a.shape != b.shape)
        throw ShapeError(name + ": add operands differ in shape");
    LayerRecord rec;
    rec.name = name;
    rec.kind = LayerKind::add;
    return push(std::move(rec), {&a, &b}, {a.shape}).front();
}

ShapeCtx::Value ShapeCtx::act(const std::string& name, const Value& x, Activation kind)
{
    LayerRecord rec;
    rec.name = name;
    rec.kind = LayerKind::activation;
    rec.act = kind;
    return push(std::move(rec), {&x}, {x.shape}).front();
}

ShapeCtx::Value ShapeCtx::focus(const std::string& name, const Value& x)
{
    if (x.shape.h % 2 != 0 || x.shape.w % 2 != 0)
        throw ParamError(name + ": focus needs even spatial extents");
    LayerRecord rec;
    rec.name = name;
    rec.kind = LayerKind::focus;
    return push(std::move(rec), {&x}, {{x.shape.n, 4 * x.shape.c, x.shape.h / 2, x.shape.w / 2}}).front();
}

Tensor ExecCtx::traced(const std::string& name, Tensor t) const
{
    if (opts_.trace) {
        const Shape s = t.shape();
        opts_.trace(name, std::span<const Shape>(&s, 1));
    }
    return t;
}

Tensor ExecCtx::conv(const std::string& name, const Tensor& x, const ConvParams& p, bool bn, bool bias,
                     Activation act)
{
    const Tensor& weight = store_.get(name + ".weight");
    if (weight.shape() != p.weight_shape())
        throw ShapeError(name + ".weight: store shape " + weight.shape().str() + ", layer needs " +
                         p.weight_shape().str());
    const std::size_t out_c = static_cast<std::size_t>(p.out_channels);
    std::vector<float> b;
    if (bias)
        b = as_vector(store_.get(name + ".bias"), out_c, name + ".bias");
    Tensor y;
    if (bn) {
        nn::BnParams params;
        params.gamma = as_vector(store_.get(name + ".bn.gamma"), out_c, name + ".bn.gamma");
        params.beta = as_vector(store_.get(name + ".bn.beta"), out_c, name + ".bn.beta");
        params.running_mean = as_vector(store_.get(name + ".bn.mean"), out_c, name + ".bn.mean");
        params.running_var = as_vector(store_.get(name + ".bn.var"), out_c, name + ".bn.var");
        params.epsilon = bn_epsilon_;
        const nn::FoldedConv folded = nn::batchnorm_fold(weight, b, params);
        y = nn::conv2d(x, folded, p, opts_.threads);
    } else {
        y = nn::conv2d(x, weight, b, p, opts_.threads);
    }
    return traced(name, nn::activation(act, std::move(y)));
}

Tensor ExecCtx::shuffle(const std::string& name, const Tensor& x, int groups)
{
    return traced(name, nn::channel_shuffle(x, groups));
}

std::pair<Tensor, Tensor> ExecCtx::split(const std::string& name, const Tensor& x)
{
    auto halves = nn::channel_split(x);
    if (opts_.trace) {
        const Shape shapes[2] = {halves.first.shape(), halves.second.shape()};
        opts_.trace(name, shapes);
    }
    return halves;
}

Tensor ExecCtx::concat(const std::string& name, Refs parts)
{
    return traced(name, nn::concat_channels(parts));
}

Tensor ExecCtx::maxpool(const std::string& name, const Tensor& x, int k, int s, int p)
{
    return traced(name, nn::maxpool2d(x, k, s, p));
}

Tensor ExecCtx::avgpool(const std::string& name, const Tensor& x, int k, int s, int p)
{
    return traced(name, nn::avgpool2d(x, k, s, p));
}

Tensor ExecCtx::upsample(const std::string& name, const Tensor& x)
{
    return traced(name, nn::upsample_nearest2x(x));
}

Tensor ExecCtx::fuse(const std::string& name, Refs parts)
{
    const Tensor& w = store_.get(name + ".w");
    const auto weights = as_vector(w, parts.size(), name + ".w");
    return traced(name, weighted_fusion(std::span<const nn::TensorRef>(parts.begin(), parts.size()), weights,
                                        fusion_epsilon_));
}

Tensor ExecCtx::add(const std::string& name, const Tensor& a, const Tensor& b)
{
    return traced(name, shuffledet::add(a, b));
}

Tensor ExecCtx::act(const std::string& name, const Tensor& x, Activation kind)
{
    return traced(name, nn::activation(kind, x));
}

Tensor ExecCtx::focus(const std::string& name, const Tensor& x)
{
    return traced(name, nn::focus_slice(x));
}

} // namespace shuffledet::model::detail
