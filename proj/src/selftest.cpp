// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "shuffledet/eval.hpp"
#include "shuffledet/flops.hpp"
#include "shuffledet/layer_record.hpp"
#include "shuffledet/model.hpp"
#include "shuffledet/nn_ops.hpp"
#include "shuffledet/postprocess.hpp"
#include "shuffledet/prng.hpp"
#include "shuffledet/reference.hpp"
#include "shuffledet/weight_store.hpp"

namespace shuffledet {

namespace {

constexpr float kTolerance = 1e-5f;

struct Check {
    std::string name;
    std::function<std::string()> run; // empty string on success
};

std::string check_conv()
{
    Prng prng(11);
    for (std::size_t i = 0; i < 60; ++i) {
        const auto c = reference::random_conv_case(prng, i);
        const Tensor x = reference::random_tensor(prng, c.input);
        const Tensor w = reference::random_tensor(prng, c.params.weight_shape());
        const Tensor b = reference::random_tensor(prng, {static_cast<std::size_t>(c.params.out_channels), 1, 1, 1});
        const float diff = max_abs_diff(nn::conv2d(x, w, b.data(), c.params), reference::naive_conv2d(x, w, b.data(), c.params));
        if (!(diff <= kTolerance))
            return "case " + std::to_string(i) + " differs by " + std::to_string(diff);
    }
    return {};
}

std::string check_pools()
{
    Prng prng(12);
    for (int k = 1; k <= 7; k += 2)
        for (int s = 1; s <= 2; ++s) {
            const Tensor x = reference::random_tensor(prng, {1, 3, 9, 11});
            const float diff = max_abs_diff(nn::maxpool2d(x, k, s, k / 2), reference::naive_maxpool2d(x, k, s, k / 2));
            if (diff != 0.0f)
                return "maxpool k=" + std::to_string(k) + " s=" + std::to_string(s);
        }
    const Tensor x = reference::random_tensor(prng, {1, 8, 10, 10});
    nn::FoldedConv reduce{reference::random_tensor(prng, {4, 8, 1, 1}), {}};
    nn::FoldedConv expand{reference::random_tensor(prng, {8, 16, 1, 1}), {}};
    const Tensor rb = reference::random_tensor(prng, {4, 1, 1, 1});
    const Tensor eb = reference::random_tensor(prng, {8, 1, 1, 1});
    reduce.bias.assign(rb.data().begin(), rb.data().end());
    expand.bias.assign(eb.data().begin(), eb.data().end());
    const float diff = max_abs_diff(nn::sppf(x, reduce, expand, 5), reference::naive_sppf(x, reduce, expand, 5));
    if (!(diff <= kTolerance))
        return "sppf differs by " + std::to_string(diff);
    return {};
}

std::string check_batchnorm_fold()
{
    Prng prng(13);
    const auto p = nn::ConvParams::standard(4, 6, 3);
    const Tensor x = reference::random_tensor(prng, {1, 4, 7, 7});
    const Tensor w = reference::random_tensor(prng, p.weight_shape());
    nn::BnParams bn = nn::BnParams::neutral(6);
    for (std::size_t c = 0; c < 6; ++c) {
        bn.gamma[c] = 0.5f + static_cast<float>(prng.uniform());
        bn.beta[c] = static_cast<float>(prng.uniform()) - 0.5f;
        bn.running_mean[c] = static_cast<float>(prng.uniform()) - 0.5f;
        bn.running_var[c] = 0.5f + static_cast<float>(prng.uniform());
    }
    const Tensor two_pass = reference::naive_batchnorm(reference::naive_conv2d(x, w, {}, p), bn);
    const Tensor folded = nn::conv2d(x, nn::batchnorm_fold(w, {}, bn), p);
    const float diff = max_abs_diff(two_pass, folded);
    return diff <= 1e-4f ? std::string{} : "folded conv differs by " + std::to_string(diff);
}

std::string check_shuffle()
{
    for (std::size_t c = 1; c <= 64; ++c)
        for (std::size_t g = 1; g <= c; ++g) {
            if (c % g != 0)
                continue;
            std::vector<float> labels(c);
            std::iota(labels.begin(), labels.end(), 0.0f);
            const Tensor x({1, c, 1, 1}, labels);
            const Tensor y = nn::channel_shuffle(x, static_cast<int>(g));
            const auto dest = reference::shuffle_permutation(c, g);
            for (std::size_t i = 0; i < c; ++i)
                if (y.data()[dest[i]] != static_cast<float>(i))
                    return "c=" + std::to_string(c) + " g=" + std::to_string(g) + " permutation";
            if (nn::channel_shuffle(y, static_cast<int>(c / g)) != x)
                return "c=" + std::to_string(c) + " g=" + std::to_string(g) + " inverse";
        }
    return {};
}

std::string check_focus()
{
    Prng prng(14);
    const Tensor x = reference::random_tensor(prng, {2, 3, 8, 6});
    return reference::focus_unslice(nn::focus_slice(x)) == x ? std::string{} : "round trip mismatch";
}

std::string check_decode()
{
    Prng prng(15);
    post::HeadOutputs raw;
    const std::size_t sizes[3] = {8, 4, 2};
    for (std::size_t s = 0; s < 3; ++s)
        raw[s] = reference::random_tensor(prng, {1, 3 * 8, sizes[s], sizes[s]}, -4.0f, 4.0f);
    const auto anchors = post::AnchorSet::yolo_default();
    for (float conf : {0.0f, 0.05f, 0.3f}) {
        const auto fast = post::decode_predictions(raw, anchors, conf);
        const auto slow = reference::slow_decode(raw, anchors, conf);
        if (fast.size() != slow.size())
            return "candidate count at conf " + std::to_string(conf);
        for (std::size_t i = 0; i < fast.size(); ++i) {
            const auto& a = fast[i];
            const auto& b = slow[i];
            const float d = std::max({std::fabs(a.score - b.score), std::fabs(a.box.x1 - b.box.x1), std::fabs(a.box.y1 - b.box.y1),
                                      std::fabs(a.box.x2 - b.box.x2), std::fabs(a.box.y2 - b.box.y2)});
            if (a.class_id != b.class_id || d > 1e-3f)
                return "candidate " + std::to_string(i);
        }
    }
    return {};
}

std::string check_nms()
{
    Prng prng(16);
    for (int scene = 0; scene < 200; ++scene) {
        const auto dets = reference::random_scene(prng, prng.next_u64() % 60, 3);
        const float thr = static_cast<float>(prng.uniform());
        if (post::nms_indices(dets, thr) != reference::brute_force_nms(dets, thr))
            return "scene " + std::to_string(scene);
    }
    return {};
}

std::string check_eval()
{
    const std::vector<eval::LabeledDetection> ladder{{0.9f, true}, {0.8f, false}, {0.7f, true}};
    const double ap = eval::average_precision(ladder, 2).ap;
    if (std::fabs(ap - (0.5 + 0.5 * 2.0 / 3.0)) > 1e-12)
        return "hand-computed AP is " + std::to_string(ap);
    Prng prng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ds = reference::random_dataset(prng, 3, 3);
        const auto fast = eval::evaluate_dataset(ds.dets, ds.gts, 3);
        const auto slow = reference::slow_evaluate(ds.dets, ds.gts, 3);
        if (std::fabs(fast.map50 - slow.map50) > 1e-12 || std::fabs(fast.image_recall - slow.image_recall) > 1e-12)
            return "dataset " + std::to_string(trial);
        for (std::size_t c = 0; c < fast.classes.size(); ++c)
            if (fast.classes[c].tp != slow.classes[c].tp || fast.classes[c].fp != slow.classes[c].fp ||
                std::fabs(fast.classes[c].ap - slow.classes[c].ap) > 1e-12)
                return "dataset " + std::to_string(trial) + " class " + std::to_string(c);
    }
    return {};
}

std::string check_separable_cost()
{
    // Depth-wise 3x3 followed by point-wise 16->32 against a standard 3x3 conv, 8x8 output.
    auto record = [](const std::string& name, const nn::ConvParams& p, int hw) {
        model::LayerRecord r;
        r.name = name;
        r.kind = model::LayerKind::conv;
        r.conv = p;
        const Shape in{1, static_cast<std::size_t>(p.in_channels), static_cast<std::size_t>(hw), static_cast<std::size_t>(hw)};
        r.input_shapes = {in};
        r.output_shapes = {p.output_shape(in)};
        r.weights = {{name + ".weight", p.weight_shape()}};
        return r;
    };
    const std::vector<model::LayerRecord> separable{record("dw", nn::ConvParams::depthwise(16, 3), 8),
                                                    record("pw", nn::ConvParams::pointwise(16, 32), 8)};
    const std::vector<model::LayerRecord> standard{record("std", nn::ConvParams::standard(16, 32, 3), 8)};
    const auto a = model::count_params_flops(separable).total_macs;
    const auto b = model::count_params_flops(standard).total_macs;
    if (a != 41984 || b != 294912)
        return "MACs " + std::to_string(a) + " vs " + std::to_string(b);
    return {};
}

std::string check_weight_roundtrip()
{
    model::ModelConfig cfg;
    cfg.stage_repeats = {1, 1, 1};
    const auto store = model::init_weights(cfg, 5);
    const auto bytes = model::save_weights(store);
    if (model::save_weights(model::load_weights(bytes)) != bytes)
        return "bytes differ after reload";
    return {};
}

} // namespace

int run_selftest(std::ostream& out)
{
    const std::vector<Check> checks{
        {"conv2d vs naive", check_conv},
        {"maxpool2d and sppf vs naive", check_pools},
        {"batchnorm folding", check_batchnorm_fold},
        {"channel shuffle laws", check_shuffle},
        {"focus round trip", check_focus},
        {"decode vs scalar decoder", check_decode},
        {"nms vs brute force", check_nms},
        {"evaluator vs reference", check_eval},
        {"separable cost identity", check_separable_cost},
        {"weight file round trip", check_weight_roundtrip},
    };
    int failures = 0;
    for (const auto& check : checks) {
        std::string problem;
        try {
            problem = check.run();
        } catch (const std::exception& e) {
            problem = std::string("threw: ") + e.what();
        }
        if (problem.empty()) {
            out << "PASS " << check.name << "\n";
        } else {
            out << "FAIL " << check.name << ": " << problem << "\n";
            ++failures;
        }
    }
    out << (failures == 0 ? "selftest passed" : "selftest failed") << " (" << checks.size() - static_cast<std::size_t>(failures)
        << "/" << checks.size() << ")\n";
    return failures == 0 ? 0 : 1;
}

} // namespace shuffledet
