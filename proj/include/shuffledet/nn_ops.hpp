// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "shuffledet/tensor.hpp"

namespace shuffledet::nn {

/// Grouped 2-D convolution geometry. Covers standard (groups == 1),
/// depth-wise (groups == in == out) and point-wise (1x1 kernel) layers.
struct ConvParams {
    int in_channels = 0;
    int out_channels = 0;
    std::array<int, 2> kernel{1, 1};  // (kh, kw)
    std::array<int, 2> stride{1, 1};  // (sh, sw)
    std::array<int, 2> padding{0, 0}; // (ph, pw), zero padding
    int groups = 1;

    static ConvParams standard(int in, int out, int k, int stride = 1, int pad = -1);
    static ConvParams pointwise(int in, int out, int groups = 1);
    static ConvParams depthwise(int channels, int k, int stride = 1);

    bool is_depthwise() const { return groups == in_channels && groups == out_channels && groups > 1; }
    bool is_pointwise() const { return kernel[0] == 1 && kernel[1] == 1; }

    /// Throws ParamError on non-positive fields or a group count that does not divide both sides.
    void validate() const;
    /// (C_out, C_in / g, kh, kw)
    Shape weight_shape() const;
    /// Throws ParamError when an output extent would be < 1.
    Shape output_shape(const Shape& input) const;
};

struct BnParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    std::vector<float> running_mean;
    std::vector<float> running_var;
    float epsilon = 1e-5f;

    static BnParams neutral(std::size_t channels, float epsilon = 1e-5f);
    std::size_t channels() const { return gamma.size(); }
    void validate() const;
};

/// Convolution weights with batch norm already folded in.
struct FoldedConv {
    Tensor weight;
    std::vector<float> bias;
};

/// Cross-correlation within each group.
///
/// Every output element accumulates in the fixed order ky, kx, input channel,
/// then adds its bias, so the result is bitwise reproducible for any thread
/// count. Work is split across output planes when threads > 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, std::span<const float> bias,
              const ConvParams& p, int threads = 1);

inline Tensor conv2d(const Tensor& input, const FoldedConv& conv, const ConvParams& p, int threads = 1)
{
    return conv2d(input, conv.weight, conv.bias, p, threads);
}

/// Reshape channels to (g, c/g), transpose, flatten: input channel q*(c/g) + r
/// lands at output channel r*g + q.
Tensor channel_shuffle(const Tensor& input, int groups);

/// Halves the channel dimension. Requires even c.
std::pair<Tensor, Tensor> channel_split(const Tensor& input);

using TensorRef = std::reference_wrapper<const Tensor>;

Tensor concat_channels(std::span<const TensorRef> parts);
inline Tensor concat_channels(std::initializer_list<TensorRef> parts)
{
    return concat_channels(std::span<const TensorRef>(parts.begin(), parts.size()));
}

/// w'_o = w_o * gamma_o / sqrt(var_o + eps);
/// b'_o = (b_o - mean_o) * gamma_o / sqrt(var_o + eps) + beta_o.
/// An empty bias is treated as zeros.
FoldedConv batchnorm_fold(const Tensor& weight, std::span<const float> bias, const BnParams& bn);

enum class Activation { identity, relu, silu, sigmoid };

float activate(Activation kind, float x);
Tensor activation(Activation kind, Tensor input);

/// Square-window max pooling. Padding cells never win (-inf semantics);
/// requires 2 * padding <= kernel so no window is pure padding.
Tensor maxpool2d(const Tensor& input, int kernel, int stride, int padding);

/// Square-window average pooling; padded cells count as zeros in the divisor.
Tensor avgpool2d(const Tensor& input, int kernel, int stride, int padding);

/// 1x1 reduce to c/2 -> three chained k x k stride-1 max pools ->
/// concat [x, p1, p2, p3] -> 1x1 expand. Both 1x1 convs are followed by `act`.
Tensor sppf(const Tensor& input, const FoldedConv& reduce, const FoldedConv& expand,
            int pool_kernel = 5, Activation act = Activation::silu);

/// 2x2 space-to-depth. Channel blocks in order: (even row, even col),
/// (even row, odd col), (odd row, even col), (odd row, odd col).
Tensor focus_slice(const Tensor& input);

Tensor upsample_nearest2x(const Tensor& input);

} // namespace shuffledet::nn
