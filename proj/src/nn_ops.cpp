// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

namespace shuffledet::nn {

namespace {

std::string dims(int a, int b)
{
    return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

int out_extent(int in, int k, int s, int p)
{
    const int span = in + 2 * p - k;
    return span < 0 ? 0 : span / s + 1;
}

// First and one-past-last output index whose input coordinate
// o*stride - pad + tap falls inside [0, in).
std::pair<int, int> valid_range(int out, int in, int stride, int pad, int tap)
{
    int lo = 0;
    const int first = pad - tap;
    if (first > 0)
        lo = (first + stride - 1) / stride;
    const int last = in - 1 + pad - tap;
    int hi = last < 0 ? 0 : last / stride + 1;
    hi = std::min(hi, out);
    return {std::min(lo, hi), hi};
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn)
{
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        const std::size_t begin = count * t / workers;
        const std::size_t end = count * (t + 1) / workers;
        pool.emplace_back([&fn, begin, end] {
            for (std::size_t i = begin; i < end; ++i)
                fn(i);
        });
    }
}

void check_pool(const Shape& s, int kernel, int stride, int padding, const char* name)
{
    if (kernel < 1 || stride < 1 || padding < 0)
        throw ParamError(std::string(name) + ": kernel and stride must be >= 1, padding >= 0");
    if (2 * padding > kernel)
        throw ParamError(std::string(name) + ": padding " + std::to_string(padding) +
                         " leaves windows with no input for kernel " + std::to_string(kernel));
    if (out_extent(static_cast<int>(s.h), kernel, stride, padding) < 1 ||
        out_extent(static_cast<int>(s.w), kernel, stride, padding) < 1)
        throw ParamError(std::string(name) + ": empty output for input " + s.str());
}

} // namespace

ConvParams ConvParams::standard(int in, int out, int k, int stride, int pad)
{
    ConvParams p;
    p.in_channels = in;
    p.out_channels = out;
    p.kernel = {k, k};
    p.stride = {stride, stride};
    const int same = pad < 0 ? k / 2 : pad;
    p.padding = {same, same};
    return p;
}

ConvParams ConvParams::pointwise(int in, int out, int groups)
{
    ConvParams p;
    p.in_channels = in;
    p.out_channels = out;
    p.groups = groups;
    return p;
}

ConvParams ConvParams::depthwise(int channels, int k, int stride)
{
    ConvParams p = standard(channels, channels, k, stride);
    p.groups = channels;
    return p;
}

void ConvParams::validate() const
{
    if (in_channels < 1 || out_channels < 1 || groups < 1)
        throw ParamError("conv: channel and group counts must be positive");
    if (kernel[0] < 1 || kernel[1] < 1 || stride[0] < 1 || stride[1] < 1)
        throw ParamError("conv: kernel and stride must be positive");
    if (padding[0] < 0 || padding[1] < 0)
        throw ParamError("conv: negative padding");
    if (in_channels % groups != 0 || out_channels % groups != 0)
        throw ParamError("conv: groups " + std::to_string(groups) + " must divide in " +
                         std::to_string(in_channels) + " and out " + std::to_string(out_channels));
}

Shape ConvParams::weight_shape() const
{
    return {static_cast<std::size_t>(out_channels), static_cast<std::size_t>(in_channels / groups),
            static_cast<std::size_t>(kernel[0]), static_cast<std::size_t>(kernel[1])};
}

Shape ConvParams::output_shape(const Shape& input) const
{
    validate();
    const int oh = out_extent(static_cast<int>(input.h), kernel[0], stride[0], padding[0]);
    const int ow = out_extent(static_cast<int>(input.w), kernel[1], stride[1], padding[1]);
    if (oh < 1 || ow < 1)
        throw ParamError("conv: empty output for input " + input.str() + " kernel " +
                         dims(kernel[0], kernel[1]));
    return {input.n, static_cast<std::size_t>(out_channels), static_cast<std::size_t>(oh),
            static_cast<std::size_t>(ow)};
}

BnParams BnParams::neutral(std::size_t channels, float epsilon)
{
    BnParams bn;
    bn.gamma.assign(channels, 1.0f);
    bn.beta.assign(channels, 0.0f);
    bn.running_mean.assign(channels, 0.0f);
    bn.running_var.assign(channels, 1.0f);
    bn.epsilon = epsilon;
    return bn;
}

void BnParams::validate() const
{
    const std::size_t c = gamma.size();
    if (beta.size() != c || running_mean.size() != c || running_var.size() != c)
        throw ShapeError("batch norm: parameter arrays differ in length");
    if (!(epsilon > 0.0f))
        throw ParamError("batch norm: epsilon must be > 0");
    for (float v : running_var)
        if (!(v >= 0.0f))
            throw ParamError("batch norm: running variance must be >= 0");
}

Tensor conv2d(const Tensor& input, const Tensor& weight, std::span<const float> bias,
              const ConvParams& p, int threads)
{
    p.validate();
    const Shape& in = input.shape();
    if (in.c != static_cast<std::size_t>(p.in_channels))
        throw ParamError("conv: input has " + std::to_string(in.c) + " channels, expected " +
                         std::to_string(p.in_channels));
    if (weight.shape() != p.weight_shape())
        throw ParamError("conv: weight shape " + weight.shape().str() + " does not match " +
                         p.weight_shape().str());
    if (!bias.empty() && bias.size() != static_cast<std::size_t>(p.out_channels))
        throw ParamError("conv: bias length " + std::to_string(bias.size()) + " != out channels " +
                         std::to_string(p.out_channels));
    const Shape os = p.output_shape(in);
    Tensor out(os, 0.0f);

    const int kh = p.kernel[0], kw = p.kernel[1];
    const int sh = p.stride[0], sw = p.stride[1];
    const int ph = p.padding[0], pw = p.padding[1];
    const int ih = static_cast<int>(in.h), iw = static_cast<int>(in.w);
    const int oh = static_cast<int>(os.h), ow = static_cast<int>(os.w);
    const int cin_g = p.in_channels / p.groups;
    const int cout_g = p.out_channels / p.groups;
    const float* wdata = weight.data().data();

    parallel_for(in.n * os.c, threads, [&](std::size_t job) {
        const std::size_t i = job / os.c;
        const int oc = static_cast<int>(job % os.c);
        const int ic0 = (oc / cout_g) * cin_g;
        // Double accumulator: float sums over hundreds of taps drift past 1e-5.
        std::vector<double> acc(static_cast<std::size_t>(oh) * ow, 0.0);
        for (int ky = 0; ky < kh; ++ky) {
            const auto [oy0, oy1] = valid_range(oh, ih, sh, ph, ky);
            for (int kx = 0; kx < kw; ++kx) {
                const auto [ox0, ox1] = valid_range(ow, iw, sw, pw, kx);
                for (int icl = 0; icl < cin_g; ++icl) {
                    const float wv = wdata[((static_cast<std::size_t>(oc) * cin_g + icl) * kh + ky) * kw + kx];
                    const float* src = input.plane(i, static_cast<std::size_t>(ic0 + icl)).data();
                    for (int oy = oy0; oy < oy1; ++oy) {
                        const float* row = src + static_cast<std::size_t>(oy * sh - ph + ky) * iw;
                        double* dst = acc.data() + static_cast<std::size_t>(oy) * ow;
                        if (sw == 1) {
                            const int shift = kx - pw;
                            for (int ox = ox0; ox < ox1; ++ox)
                                dst[ox] += static_cast<double>(wv) * row[ox + shift];
                        } else {
                            for (int ox = ox0; ox < ox1; ++ox)
                                dst[ox] += static_cast<double>(wv) * row[ox * sw - pw + kx];
                        }
                    }
                }
            }
        }
        const double b = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(oc)];
        float* dst = out.plane(i, static_cast<std::size_t>(oc)).data();
        for (std::size_t k = 0; k < acc.size(); ++k)
            dst[k] = static_cast<float>(acc[k] + b);
    });
    return out;
}

Tensor channel_shuffle(const Tensor& input, int groups)
{
    const Shape& s = input.shape();
    if (groups < 1 || s.c % static_cast<std::size_t>(groups) != 0)
        throw ParamError("channel_shuffle: groups " + std::to_string(groups) + " must divide " +
                         std::to_string(s.c) + " channels");
    Tensor out(s, 0.0f);
    const std::size_t g = static_cast<std::size_t>(groups);
    const std::size_t per_group = s.c / g;
    const std::size_t hw = s.h * s.w;
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t q = 0; q < g; ++q)
            for (std::size_t r = 0; r < per_group; ++r) {
                auto src = input.plane(i, q * per_group + r);
                auto dst = out.plane(i, r * g + q);
                std::copy_n(src.begin(), hw, dst.begin());
            }
    return out;
}

std::pair<Tensor, Tensor> channel_split(const Tensor& input)
{
    const Shape& s = input.shape();
    if (s.c % 2 != 0)
        throw ShapeError("channel_split: odd channel count " + std::to_string(s.c));
    const std::size_t half = s.c / 2;
    Shape hs = s;
    hs.c = half;
    Tensor left(hs, 0.0f), right(hs, 0.0f);
    const std::size_t block = half * s.h * s.w;
    auto src = input.data();
    for (std::size_t i = 0; i < s.n; ++i) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(2 * i * block), block,
                    left.data().begin() + static_cast<std::ptrdiff_t>(i * block));
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((2 * i + 1) * block), block,
                    right.data().begin() + static_cast<std::ptrdiff_t>(i * block));
    }
    return {std::move(left), std::move(right)};
}

Tensor concat_channels(std::span<const TensorRef> parts)
{
    if (parts.empty())
        throw ShapeError("concat_channels: no inputs");
    const Shape& first = parts.front().get().shape();
    std::size_t channels = 0;
    for (const Tensor& t : parts) {
        const Shape& s = t.shape();
        if (s.n != first.n || s.h != first.h || s.w != first.w)
            throw ShapeError("concat_channels: " + s.str() + " incompatible with " + first.str());
        channels += s.c;
    }
    Shape os = first;
    os.c = channels;
    Tensor out(os, 0.0f);
    const std::size_t hw = os.h * os.w;
    auto dst = out.data().begin();
    for (std::size_t i = 0; i < os.n; ++i)
        for (const Tensor& t : parts) {
            const std::size_t block = t.shape().c * hw;
            auto src = t.data().begin() + static_cast<std::ptrdiff_t>(i * block);
            dst = std::copy_n(src, block, dst);
        }
    return out;
}

FoldedConv batchnorm_fold(const Tensor& weight, std::span<const float> bias, const BnParams& bn)
{
    bn.validate();
    const std::size_t out_c = weight.shape().n;
    if (bn.channels() != out_c)
        throw ShapeError("batchnorm_fold: " + std::to_string(bn.channels()) +
                         " BN channels for conv with " + std::to_string(out_c) + " outputs");
    if (!bias.empty() && bias.size() != out_c)
        throw ShapeError("batchnorm_fold: bias length mismatch");
    FoldedConv folded{weight, std::vector<float>(out_c)};
    const std::size_t per_out = out_c == 0 ? 0 : weight.numel() / out_c;
    auto w = folded.weight.data();
    for (std::size_t o = 0; o < out_c; ++o) {
        const float scale = bn.gamma[o] / std::sqrt(bn.running_var[o] + bn.epsilon);
        for (std::size_t k = 0; k < per_out; ++k)
            w[o * per_out + k] *= scale;
        const float b = bias.empty() ? 0.0f : bias[o];
        folded.bias[o] = (b - bn.running_mean[o]) * scale + bn.beta[o];
    }
    return folded;
}

float activate(Activation kind, float x)
{
    switch (kind) {
    case Activation::relu:
        return x > 0.0f ? x : 0.0f;
    case Activation::silu:
        return static_cast<float>(x / (1.0 + std::exp(-static_cast<double>(x))));
    case Activation::sigmoid:
        return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x))));
    case Activation::identity:
        break;
    }
    return x;
}

Tensor activation(Activation kind, Tensor input)
{
    if (kind == Activation::identity)
        return input;
    for (float& v : input.data())
        v = activate(kind, v);
    return input;
}

Tensor maxpool2d(const Tensor& input, int kernel, int stride, int padding)
{
    const Shape& s = input.shape();
    check_pool(s, kernel, stride, padding, "maxpool2d");
    const int ih = static_cast<int>(s.h), iw = static_cast<int>(s.w);
    const int oh = out_extent(ih, kernel, stride, padding);
    const int ow = out_extent(iw, kernel, stride, padding);
    Tensor out({s.n, s.c, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)}, 0.0f);
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t c = 0; c < s.c; ++c) {
            const float* src = input.plane(i, c).data();
            float* dst = out.plane(i, c).data();
            for (int oy = 0; oy < oh; ++oy) {
                const int y0 = std::max(oy * stride - padding, 0);
                const int y1 = std::min(oy * stride - padding + kernel, ih);
                for (int ox = 0; ox < ow; ++ox) {
                    const int x0 = std::max(ox * stride - padding, 0);
                    const int x1 = std::min(ox * stride - padding + kernel, iw);
                    float best = -std::numeric_limits<float>::infinity();
                    for (int y = y0; y < y1; ++y)
                        for (int x = x0; x < x1; ++x)
                            best = std::max(best, src[y * iw + x]);
                    dst[oy * ow + ox] = best;
                }
            }
        }
    return out;
}

Tensor avgpool2d(const Tensor& input, int kernel, int stride, int padding)
{
    const Shape& s = input.shape();
    check_pool(s, kernel, stride, padding, "avgpool2d");
    const int ih = static_cast<int>(s.h), iw = static_cast<int>(s.w);
    const int oh = out_extent(ih, kernel, stride, padding);
    const int ow = out_extent(iw, kernel, stride, padding);
    const float inv_area = 1.0f / static_cast<float>(kernel * kernel);
    Tensor out({s.n, s.c, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)}, 0.0f);
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t c = 0; c < s.c; ++c) {
            const float* src = input.plane(i, c).data();
            float* dst = out.plane(i, c).data();
            for (int oy = 0; oy < oh; ++oy) {
                const int y0 = std::max(oy * stride - padding, 0);
                const int y1 = std::min(oy * stride - padding + kernel, ih);
                for (int ox = 0; ox < ow; ++ox) {
                    const int x0 = std::max(ox * stride - padding, 0);
                    const int x1 = std::min(ox * stride - padding + kernel, iw);
                    float sum = 0.0f;
                    for (int y = y0; y < y1; ++y)
                        for (int x = x0; x < x1; ++x)
                            sum += src[y * iw + x];
                    dst[oy * ow + ox] = sum * inv_area;
                }
            }
        }
    return out;
}

Tensor sppf(const Tensor& input, const FoldedConv& reduce, const FoldedConv& expand, int pool_kernel,
            Activation act)
{
    const Shape& s = input.shape();
    if (s.c % 2 != 0)
        throw ParamError("sppf: channel count must be even, got " + std::to_string(s.c));
    const int c = static_cast<int>(s.c);
    const int hidden = c / 2;
    const auto reduce_p = ConvParams::pointwise(c, hidden);
    const auto expand_p = ConvParams::pointwise(4 * hidden, static_cast<int>(expand.weight.shape().n));
    Tensor x = activation(act, conv2d(input, reduce, reduce_p));
    const int pad = pool_kernel / 2;
    Tensor p1 = maxpool2d(x, pool_kernel, 1, pad);
    Tensor p2 = maxpool2d(p1, pool_kernel, 1, pad);
    Tensor p3 = maxpool2d(p2, pool_kernel, 1, pad);
    Tensor cat = concat_channels({x, p1, p2, p3});
    return activation(act, conv2d(cat, expand, expand_p));
}

Tensor focus_slice(const Tensor& input)
{
    const Shape& s = input.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0)
        throw ParamError("focus_slice: spatial extents must be even, got " + s.str());
    const std::size_t oh = s.h / 2, ow = s.w / 2;
    Tensor out({s.n, 4 * s.c, oh, ow}, 0.0f);
    // (row offset, col offset) per channel block
    constexpr std::array<std::array<std::size_t, 2>, 4> phases{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t c = 0; c < s.c; ++c) {
                const float* src = input.plane(i, c).data();
                float* dst = out.plane(i, b * s.c + c).data();
                for (std::size_t y = 0; y < oh; ++y)
                    for (std::size_t x = 0; x < ow; ++x)
                        dst[y * ow + x] = src[(2 * y + phases[b][0]) * s.w + 2 * x + phases[b][1]];
            }
    return out;
}

Tensor upsample_nearest2x(const Tensor& input)
{
    const Shape& s = input.shape();
    const std::size_t ow = 2 * s.w;
    Tensor out({s.n, s.c, 2 * s.h, ow}, 0.0f);
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t c = 0; c < s.c; ++c) {
            const float* src = input.plane(i, c).data();
            float* dst = out.plane(i, c).data();
            for (std::size_t y = 0; y < s.h; ++y) {
                float* row = dst + 2 * y * ow;
                for (std::size_t x = 0; x < s.w; ++x)
                    row[2 * x] = row[2 * x + 1] = src[y * s.w + x];
                std::memcpy(row + ow, row, ow * sizeof(float));
            }
        }
    return out;
}

} // namespace shuffledet::nn
