// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Usage: acceptance [--only N]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "shuffledet/error.hpp"
#include "shuffledet/eval.hpp"
#include "shuffledet/file_util.hpp"
#include "shuffledet/flops.hpp"
#include "shuffledet/model.hpp"
#include "shuffledet/nn_ops.hpp"
#include "shuffledet/postprocess.hpp"
#include "shuffledet/prng.hpp"
#include "shuffledet/reference.hpp"
#include "shuffledet/weight_store.hpp"

namespace fs = std::filesystem;
namespace nn = shuffledet::nn;
namespace ref = shuffledet::reference;
using shuffledet::Prng;
using shuffledet::Shape;
using shuffledet::Tensor;
using Clock = std::chrono::steady_clock;

namespace {

// Degraded-detector mAP50 on the bundled set, computed by the Python
// reference evaluator in tools/make_synthetic_set.py before this suite existed.
constexpr double kCorruptedMap50 = 0.20462962962962963;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 3)
{
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

std::string slurp(const fs::path& p)
{
    const auto bytes = shuffledet::io::read_file(p);
    return {bytes.begin(), bytes.end()};
}

std::string quote(const std::string& s)
{
    return "'" + s + "'";
}

struct Command {
    int code = -1;
    std::string out;
    std::string err;
};

Command run_cli(const std::string& args, const fs::path& scratch)
{
    const fs::path out = scratch / "stdout.txt";
    const fs::path err = scratch / "stderr.txt";
    const std::string cmd = quote(SHUFFLEDET_CLI) + " " + args + " > " + quote(out.string()) + " 2> " + quote(err.string());
    const int status = std::system(cmd.c_str());
    Command c;
    c.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    c.out = fs::exists(out) ? slurp(out) : "";
    c.err = fs::exists(err) ? slurp(err) : "";
    return c;
}

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("shuffledet_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

const fs::path kData = fs::path(SHUFFLEDET_SOURCE_DIR) / "data" / "synthetic";

Outcome operator_oracles()
{
    const auto start = Clock::now();
    Prng prng(101);
    float worst = 0.0f;
    std::size_t conv_cases = 0;
    for (std::size_t i = 0; i < 250; ++i, ++conv_cases) {
        const auto c = ref::random_conv_case(prng, i);
        const Tensor x = ref::random_tensor(prng, c.input);
        const Tensor w = ref::random_tensor(prng, c.params.weight_shape());
        const Tensor b = ref::random_tensor(prng, {static_cast<std::size_t>(c.params.out_channels), 1, 1, 1});
        worst = std::max(worst, shuffledet::max_abs_diff(nn::conv2d(x, w, b.data(), c.params),
                                                         ref::naive_conv2d(x, w, b.data(), c.params)));
    }
    // Full-width grid on a (8, 16, 32, 32) batch.
    const Tensor big = ref::random_tensor(prng, {8, 16, 32, 32});
    for (int k : {1, 3})
        for (int stride : {1, 2})
            for (int groups : {1, 4, 16}) {
                nn::ConvParams p;
                p.in_channels = p.out_channels = 16;
                p.kernel = {k, k};
                p.stride = {stride, stride};
                p.padding = {k / 2, k / 2};
                p.groups = groups;
                const Tensor w = ref::random_tensor(prng, p.weight_shape());
                worst = std::max(worst, shuffledet::max_abs_diff(nn::conv2d(big, w, {}, p), ref::naive_conv2d(big, w, {}, p)));
                ++conv_cases;
            }
    float pool_worst = 0.0f;
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor x = ref::random_tensor(prng, {1, 4, static_cast<std::size_t>(9 + trial % 7), static_cast<std::size_t>(8 + trial % 5)});
        const int k = 1 + 2 * (trial % 4);
        const int s = 1 + trial % 2;
        pool_worst = std::max(pool_worst, shuffledet::max_abs_diff(nn::maxpool2d(x, k, s, k / 2), ref::naive_maxpool2d(x, k, s, k / 2)));
    }
    float sppf_worst = 0.0f;
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor x = ref::random_tensor(prng, {1, 8, 13, 11});
        nn::FoldedConv reduce{ref::random_tensor(prng, {4, 8, 1, 1}), std::vector<float>(4, 0.1f)};
        nn::FoldedConv expand{ref::random_tensor(prng, {8, 16, 1, 1}), std::vector<float>(8, -0.1f)};
        sppf_worst = std::max(sppf_worst, shuffledet::max_abs_diff(nn::sppf(x, reduce, expand, 5), ref::naive_sppf(x, reduce, expand, 5)));
    }
    const double elapsed = seconds_since(start);
    const bool pass = conv_cases >= 200 && worst <= 1e-5f && pool_worst <= 1e-5f && sppf_worst <= 1e-5f && elapsed < 60.0;
    return {pass, std::to_string(conv_cases) + " conv cases, max |diff| conv " + fmt(worst) + ", maxpool " + fmt(pool_worst) +
                      ", sppf " + fmt(sppf_worst) + ", " + fmt(elapsed) + " s"};
}

Outcome shuffle_laws()
{
    std::size_t pairs = 0;
    for (std::size_t c = 1; c <= 64; ++c)
        for (std::size_t g = 1; g <= c; ++g) {
            if (c % g)
                continue;
            ++pairs;
            std::vector<float> labels(c);
            for (std::size_t i = 0; i < c; ++i)
                labels[i] = static_cast<float>(i);
            const Tensor x({1, c, 1, 1}, labels);
            const Tensor y = nn::channel_shuffle(x, static_cast<int>(g));
            std::vector<float> got(y.data().begin(), y.data().end());
            std::vector<bool> seen(c, false);
            for (float v : got) {
                const auto idx = static_cast<std::size_t>(v);
                if (idx >= c || seen[idx])
                    return {false, "not a bijection at c=" + std::to_string(c) + " g=" + std::to_string(g)};
                seen[idx] = true;
            }
            std::sort(got.begin(), got.end());
            if (got != labels)
                return {false, "multiset changed at c=" + std::to_string(c) + " g=" + std::to_string(g)};
            if (nn::channel_shuffle(y, static_cast<int>(c / g)) != x)
                return {false, "inverse law fails at c=" + std::to_string(c) + " g=" + std::to_string(g)};
        }
    return {true, std::to_string(pairs) + " (c, g) pairs, exact"};
}

shuffledet::model::LayerRecord conv_record(const std::string& name, const nn::ConvParams& p, std::size_t hw)
{
    shuffledet::model::LayerRecord r;
    r.name = name;
    r.kind = shuffledet::model::LayerKind::conv;
    r.conv = p;
    const Shape in{1, static_cast<std::size_t>(p.in_channels), hw, hw};
    r.input_shapes = {in};
    r.output_shapes = {p.output_shape(in)};
    return r;
}

Outcome separable_identity()
{
    using shuffledet::model::count_params_flops;
    std::size_t checked = 0;
    for (int k : {1, 3, 5, 7})
        for (int cin : {1, 3, 16, 24, 116})
            for (int cout : {1, 8, 32, 232, 464}) {
                const std::vector sep{conv_record("dw", nn::ConvParams::depthwise(cin, k), 8),
                                      conv_record("pw", nn::ConvParams::pointwise(cin, cout), 8)};
                const std::vector dense{conv_record("std", nn::ConvParams::standard(cin, cout, k), 8)};
                const std::uint64_t a = count_params_flops(sep).total_macs;
                const std::uint64_t b = count_params_flops(dense).total_macs;
                // a / b == 1/cout + 1/k^2  <=>  a * cout * k^2 == b * (k^2 + cout)
                const std::uint64_t kk = static_cast<std::uint64_t>(k) * k;
                if (a * static_cast<std::uint64_t>(cout) * kk != b * (kk + static_cast<std::uint64_t>(cout)))
                    return {false, "ratio identity fails at k=" + std::to_string(k) + " cin=" + std::to_string(cin) +
                                       " cout=" + std::to_string(cout)};
                ++checked;
            }
    const std::vector sep{conv_record("dw", nn::ConvParams::depthwise(16, 3), 8),
                          conv_record("pw", nn::ConvParams::pointwise(16, 32), 8)};
    const std::vector dense{conv_record("std", nn::ConvParams::standard(16, 32, 3), 8)};
    const auto a = count_params_flops(sep).total_macs;
    const auto b = count_params_flops(dense).total_macs;
    const bool worked = a == 41984 && b == 294912;
    return {worked, std::to_string(checked) + " grid points exact; 3x3 16->32 on 8x8: " + std::to_string(a) + " vs " +
                        std::to_string(b) + " MACs"};
}

std::string digits_only(const std::string& s)
{
    std::string out;
    for (char ch : s)
        if (ch != ',')
            out += ch;
    return out;
}

Outcome lightweight_backbone()
{
    const fs::path dir = scratch_dir("flops");
    const Command c = run_cli("flops --classes 6", dir);
    if (c.code != 0)
        return {false, "flops exited " + std::to_string(c.code) + ": " + c.err};
    const auto doc = nlohmann::json::parse(c.out);
    const auto proposed = doc.at("proposed_backbone_macs").get<std::uint64_t>();
    const auto baseline = doc.at("baseline_backbone_macs").get<std::uint64_t>();
    const auto input = doc.at("input_size");
    const std::string readme = digits_only(slurp(fs::path(SHUFFLEDET_SOURCE_DIR) / "README.md"));
    const bool documented = readme.find(std::to_string(proposed)) != std::string::npos &&
                            readme.find(std::to_string(baseline)) != std::string::npos;
    fs::remove_all(dir);
    const bool pass = proposed < baseline && input == nlohmann::json::array({640, 640}) && documented;
    return {pass, "proposed backbone " + std::to_string(proposed) + " MACs vs baseline " + std::to_string(baseline) +
                      " at 640x640 (ratio " + fmt(static_cast<double>(proposed) / static_cast<double>(baseline)) +
                      "); README " + (documented ? "records both" : "is missing the numbers")};
}

Outcome shape_contract()
{
    using namespace shuffledet::model;
    Prng prng(5);
    const Tensor image = ref::random_tensor(prng, {1, 3, 640, 640}, 0.0f, 1.0f);
    std::string detail;
    bool pass = true;
    for (int nc : {6, 10}) {
        ModelConfig cfg;
        cfg.class_count = nc;
        const Detector det(cfg, init_weights(cfg, 1));
        const auto feats = build_backbone(cfg, det.weights(), image);
        pass = pass && feats.c3.shape() == Shape{1, 116, 80, 80} && feats.c4.shape() == Shape{1, 232, 40, 40} &&
               feats.c5.shape() == Shape{1, 464, 20, 20};
        const auto heads = build_neck_head(cfg, det.weights(), feats.c3, feats.c4, feats.c5);
        const std::size_t ch = nc == 6 ? 33 : 45;
        pass = pass && heads[0].shape() == Shape{1, ch, 80, 80} && heads[1].shape() == Shape{1, ch, 40, 40} &&
               heads[2].shape() == Shape{1, ch, 20, 20};
        if (nc == 6)
            detail = "C3 " + feats.c3.shape().str() + ", C4 " + feats.c4.shape().str() + ", C5 " + feats.c5.shape().str();
        detail += "; nc=" + std::to_string(nc) + " heads " + std::to_string(heads[0].shape().c) + " channels";
    }
    return {pass, detail};
}

Outcome nms_equivalence()
{
    Prng prng(606);
    std::size_t boxes = 0;
    for (int scene = 0; scene < 1000; ++scene) {
        const std::size_t n = prng.next_u64() % 201;
        boxes += n;
        const auto dets = ref::random_scene(prng, n, 1 + static_cast<int>(prng.next_u64() % 4));
        const float thr = static_cast<float>(prng.uniform());
        if (shuffledet::post::nms_indices(dets, thr) != ref::brute_force_nms(dets, thr))
            return {false, "scene " + std::to_string(scene) + " differs"};
    }
    return {true, "1000 scenes (" + std::to_string(boxes) + " boxes) identical to brute force, order included"};
}

Outcome map_evaluator()
{
    namespace ev = shuffledet::eval;
    const std::vector<ev::LabeledDetection> ladder{{0.9f, true}, {0.8f, false}, {0.7f, true}};
    const double hand = ev::average_precision(ladder, 2).ap;
    if (std::fabs(hand - 0.8333) > 5e-5)
        return {false, "hand instance gives " + fmt(hand, 6)};

    const std::vector<ev::GroundTruth> gts{{"a", 0, {0, 0, 10, 10}}, {"b", 1, {3, 3, 9, 12}}};
    std::vector<ev::ImageDetection> perfect;
    for (const auto& g : gts)
        perfect.push_back({g.image_id, {g.class_id, 1.0f, g.box}});
    const auto full = ev::evaluate_dataset(perfect, gts, 2);
    if (full.map50 != 1.0 || full.image_recall != 1.0)
        return {false, "perfect detector scores " + fmt(full.map50)};

    Prng prng(707);
    std::size_t monotone_checks = 0;
    for (int trial = 0; trial < 500; ++trial) {
        auto ds = ref::random_dataset(prng, 1 + static_cast<int>(prng.next_u64() % 3), 3);
        const auto fast = ev::evaluate_dataset(ds.dets, ds.gts, 3);
        const auto slow = ref::slow_evaluate(ds.dets, ds.gts, 3);
        if (std::fabs(fast.map50 - slow.map50) > 1e-12 || std::fabs(fast.image_recall - slow.image_recall) > 1e-12)
            return {false, "dataset " + std::to_string(trial) + " disagrees with the slow reference"};

        auto shuffled = ds.dets;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[prng.next_u64() % i]);
        if (std::fabs(ev::evaluate_dataset(shuffled, ds.gts, 3).map50 - fast.map50) > 1e-12)
            return {false, "dataset " + std::to_string(trial) + " is order dependent"};

        const auto m = ev::match_detections(ds.dets, ds.gts);
        for (std::size_t i = 0; i < ds.dets.size(); ++i) {
            if (m.is_tp[i])
                continue;
            auto fewer = ds.dets;
            fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
            const auto c = static_cast<std::size_t>(ds.dets[i].det.class_id);
            if (ev::evaluate_dataset(fewer, ds.gts, 3).classes[c].ap < fast.classes[c].ap - 1e-12)
                return {false, "dropping a false positive lowered AP in dataset " + std::to_string(trial)};
            ++monotone_checks;
        }
    }
    return {true, "AP " + fmt(hand, 6) + ", perfect 1.0, 500 datasets match the reference; " +
                      std::to_string(monotone_checks) + " FP deletions monotone"};
}

Outcome synthetic_eval()
{
    const fs::path dir = scratch_dir("synthetic");
    auto score = [&](const std::string& set) {
        const Command c = run_cli("eval --classes 6 --images " + quote((kData / "images").string()) + " --labels " +
                                      quote((kData / "labels").string()) + " --detections " + quote((kData / set).string()),
                                  dir);
        if (c.code != 0)
            throw shuffledet::Error("eval on " + set + " exited " + std::to_string(c.code) + ": " + c.err);
        return nlohmann::json::parse(c.out);
    };
    const auto oracle = score("oracle");
    const auto corrupted = score("corrupted");
    const auto expected = nlohmann::json::parse(slurp(kData / "expected.json"));
    fs::remove_all(dir);
    const double om = oracle.at("map50").get<double>();
    const double cm = corrupted.at("map50").get<double>();
    const bool pass = om == 1.0 && std::fabs(cm - kCorruptedMap50) < 1e-12 &&
                      std::fabs(expected["corrupted"]["map50"].get<double>() - kCorruptedMap50) < 1e-15 &&
                      oracle.at("image_count").get<int>() == 12;
    return {pass, "12-image synthetic set: oracle mAP50 " + fmt(om, 6) + ", corrupted " + fmt(cm, 12) + " (expected " +
                      fmt(kCorruptedMap50, 12) + "). Published dataset mAP is not reproduced (needs NEU-DET/GC10-DET and trained weights)"};
}

Outcome determinism()
{
    const fs::path dir = scratch_dir("determinism");
    const std::string w = (dir / "w.syw").string();
    const std::string image = (kData / "images" / "defect_04.pgm").string();
    if (run_cli("init-weights --seed 7 --out " + quote(w), dir).code != 0)
        return {false, "init-weights failed"};
    const std::string detect = "detect --weights " + quote(w) + " --image " + quote(image) + " --conf 0.001 --json ";
    if (run_cli(detect + quote((dir / "a.json").string()), dir).code != 0 ||
        run_cli(detect + quote((dir / "b.json").string()), dir).code != 0)
        return {false, "detect failed"};
    const std::string a = slurp(dir / "a.json");
    const bool same_json = a == slurp(dir / "b.json");
    const auto count = nlohmann::json::parse(a)["detections"].size();

    const auto bytes = shuffledet::io::read_file(w);
    const auto reloaded = shuffledet::model::save_weights(shuffledet::model::load_weights(bytes));
    const bool same_weights = reloaded == bytes;
    fs::remove_all(dir);
    return {same_json && same_weights && count > 0,
            "detect JSON (" + std::to_string(count) + " detections, " + std::to_string(a.size()) + " bytes) " +
                (same_json ? "identical" : "differs") + "; weight file (" + std::to_string(bytes.size()) + " bytes) round trip " +
                (same_weights ? "identical" : "differs")};
}

Outcome end_to_end()
{
    const fs::path dir = scratch_dir("smoke");
    const std::string w = quote((dir / "w.syw").string());
    const std::string images = quote((kData / "images").string());
    const std::string labels = quote((kData / "labels").string());
    const std::vector<std::string> steps{
        "init-weights --seed 1 --classes 6 --out " + w,
        "detect --weights " + w + " --image " + quote((kData / "images" / "defect_00.pgm").string()) + " --out " +
            quote((dir / "render.ppm").string()),
        "eval --weights " + w + " --images " + images + " --labels " + labels + " --classes 6",
        "flops --classes 6",
        "selftest",
    };
    const auto start = Clock::now();
    for (const auto& step : steps) {
        const Command c = run_cli(step, dir);
        if (c.code != 0)
            return {false, "`" + step.substr(0, step.find(' ')) + "` exited " + std::to_string(c.code) + ": " + c.err};
    }
    const double elapsed = seconds_since(start);
    fs::remove_all(dir);
    return {elapsed < 120.0, "init-weights, detect, eval (12 images), flops, selftest all exit 0 in " + fmt(elapsed) + " s"};
}

} // namespace

int main(int argc, char** argv)
{
    int only = 0;
    if (argc == 3 && std::string(argv[1]) == "--only")
        only = std::atoi(argv[2]);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"operator oracles (conv2d, maxpool2d, sppf)", operator_oracles},
        {"channel shuffle laws", shuffle_laws},
        {"separable cost identity", separable_identity},
        {"lightweight backbone MACs", lightweight_backbone},
        {"shape contract", shape_contract},
        {"NMS equivalence", nms_equivalence},
        {"mAP evaluator", map_evaluator},
        {"synthetic end-to-end eval", synthetic_eval},
        {"determinism", determinism},
        {"end-to-end smoke", end_to_end},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only != 0 && static_cast<std::size_t>(only) != i + 1)
            continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
