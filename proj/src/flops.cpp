// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/flops.hpp"

#include "shuffledet/error.hpp"
#include "shuffledet/model.hpp"

namespace shuffledet::model {

FlopsReport count_params_flops(std::span<const LayerRecord> records)
{
    FlopsReport report;
    for (const LayerRecord& rec : records) {
        if (rec.output_shapes.empty())
            throw AnalysisError("layer " + rec.name + " has no output shape annotation");
        LayerCost cost;
        cost.name = rec.name;
        cost.kind = rec.kind;
        cost.output = rec.output_shapes.front();
        const std::uint64_t out_elems = cost.output.numel();

        switch (rec.kind) {
        case LayerKind::conv: {
            if (!rec.conv)
                throw AnalysisError("conv layer " + rec.name + " has no convolution parameters");
            const nn::ConvParams& p = *rec.conv;
            p.validate();
            if (cost.output.c != static_cast<std::size_t>(p.out_channels))
                throw AnalysisError("conv layer " + rec.name + " output annotation disagrees with its parameters");
            const std::uint64_t weight_params = static_cast<std::uint64_t>(p.out_channels) *
                                                static_cast<std::uint64_t>(p.in_channels / p.groups) *
                                                static_cast<std::uint64_t>(p.kernel[0]) *
                                                static_cast<std::uint64_t>(p.kernel[1]);
            const std::uint64_t spatial = static_cast<std::uint64_t>(cost.output.n) * cost.output.h * cost.output.w;
            cost.params = weight_params;
            cost.macs = weight_params * spatial;
            if (rec.bias) {
                cost.params += static_cast<std::uint64_t>(p.out_channels);
                cost.extra_ops += out_elems;
            }
            if (rec.batch_norm) {
                cost.params += 2 * static_cast<std::uint64_t>(p.out_channels);
                cost.extra_ops += 2 * out_elems;
            }
            break;
        }
        case LayerKind::weighted_fusion:
            cost.params = rec.inputs.size();
            cost.macs = rec.inputs.size() * out_elems;
            break;
        case LayerKind::add:
            cost.extra_ops = out_elems;
            break;
        default:
            break;
        }
        report.total_params += cost.params;
        report.total_macs += cost.macs;
        report.total_extra_ops += cost.extra_ops;
        report.layers.push_back(std::move(cost));
    }
    return report;
}

CostComparison compare_costs(const ModelConfig& cfg, BaselineConfig baseline)
{
    baseline.input_size = cfg.input_size;
    const auto backbone = describe_model(cfg, ModelScope::backbone);
    const auto full = describe_model(cfg, ModelScope::full);
    const auto reference = describe_baseline(baseline);
    return {count_params_flops(backbone), count_params_flops(full), count_params_flops(reference)};
}

} // namespace shuffledet::model
