// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "shuffledet/annotations.hpp"
#include "shuffledet/error.hpp"
#include "shuffledet/file_util.hpp"
#include "shuffledet/flops.hpp"
#include "shuffledet/image_io.hpp"
#include "shuffledet/model.hpp"
#include "shuffledet/render.hpp"
#include "shuffledet/report.hpp"
#include "shuffledet/selftest.hpp"
#include "shuffledet/weight_store.hpp"

namespace shuffledet {

namespace fs = std::filesystem;

namespace {

struct ModelOptions {
    int classes = 6;
    std::string unit = "v2";
    int groups = 2;
    bool sppf = false;
    int input_size = 640;

    model::ModelConfig config() const
    {
        model::ModelConfig cfg;
        cfg.class_count = classes;
        cfg.unit_style = model::parse_unit_style(unit);
        cfg.group_count = groups;
        cfg.sppf_enabled = sppf;
        cfg.input_size = {input_size, input_size};
        cfg.validate();
        return cfg;
    }
};

void add_model_options(CLI::App* cmd, ModelOptions& o)
{
    cmd->add_option("--classes", o.classes, "Number of defect classes (6 and 10 have named presets)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--unit", o.unit, "Backbone unit: v2 (split) or v1 (grouped)")
        ->check(CLI::IsMember({"v2", "v1", "v2_split", "v1_grouped"}));
    cmd->add_option("--groups", o.groups, "Group count for v1 units")->check(CLI::PositiveNumber);
    cmd->add_flag("--sppf", o.sppf, "Append SPPF after the last backbone stage");
    cmd->add_option("--input-size", o.input_size, "Square model input, multiple of 32")->check(CLI::PositiveNumber);
}

void emit(std::ostream& out, const std::string& path, const std::string& text)
{
    if (path.empty())
        out << text;
    else
        io::write_file_atomic(path, text);
}

model::Detector load_detector(const ModelOptions& mo, const std::string& weights)
{
    return model::Detector(mo.config(), model::load_weights_file(weights));
}

model::ExecOptions with_threads(int threads)
{
    model::ExecOptions opts;
    opts.threads = threads;
    return opts;
}

bool is_image(const fs::path& p)
{
    const auto ext = p.extension().string();
    return ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

std::vector<fs::path> list_images(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw DataError("image directory not found: " + dir.string());
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && is_image(entry.path()))
            images.push_back(entry.path());
    std::sort(images.begin(), images.end());
    return images;
}

// Runs `work(i)` for i in [0, count) on `jobs` threads. The first exception
// (lowest index) is rethrown after all workers finish.
template <typename Work>
void parallel_for(std::size_t count, int jobs, Work&& work)
{
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                work(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < std::max(1, jobs); ++t)
            pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

struct DetectArgs {
    ModelOptions model;
    std::string weights, image, out_image, json;
    float conf = 0.25f, iou = 0.45f;
    int threads = 1;
};

int cmd_detect(const DetectArgs& a, std::ostream& out)
{
    const auto detector = load_detector(a.model, a.weights);
    const Tensor image = io::read_image(a.image);
    const auto dets = detector.detect(image, {a.conf, a.iou}, with_threads(a.threads));
    const auto names = io::class_names(a.model.classes);
    if (!a.out_image.empty()) {
        const auto bytes = io::render_detections(image, dets);
        io::write_file_atomic(a.out_image, bytes);
    }
    emit(out, a.json, io::detections_to_json(dets, names, fs::path(a.image).filename().string()));
    return 0;
}

struct EvalArgs {
    ModelOptions model;
    std::string weights, images, labels, detections, json;
    float conf = 0.001f, iou = 0.6f;
    double match_iou = 0.5;
    int jobs = 1;
    bool eleven_point = false;
    bool exclude_undefined = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out)
{
    if (a.weights.empty() == a.detections.empty())
        throw ParamError("eval needs exactly one of --weights or --detections");
    const auto images = list_images(a.images);
    std::optional<model::Detector> detector;
    if (!a.weights.empty())
        detector.emplace(load_detector(a.model, a.weights));

    std::vector<std::vector<eval::GroundTruth>> gts(images.size());
    std::vector<std::vector<post::Detection>> dets(images.size());
    parallel_for(images.size(), a.jobs, [&](std::size_t i) {
        const Tensor image = io::read_image(images[i]);
        const std::string id = images[i].stem().string();
        const fs::path label = fs::path(a.labels) / (id + ".txt");
        if (fs::exists(label))
            gts[i] = io::parse_annotations_file(label, io::image_extent(image));
        if (detector) {
            dets[i] = detector->detect(image, {a.conf, a.iou});
        } else {
            const auto bytes = io::read_file(fs::path(a.detections) / (id + ".json"));
            dets[i] = io::detections_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
        }
    });

    std::vector<eval::GroundTruth> all_gts;
    std::vector<eval::ImageDetection> all_dets;
    for (std::size_t i = 0; i < images.size(); ++i) {
        all_gts.insert(all_gts.end(), gts[i].begin(), gts[i].end());
        for (const auto& d : dets[i])
            all_dets.push_back({images[i].stem().string(), d});
    }
    eval::EvalOptions options;
    options.iou_threshold = a.match_iou;
    options.method = a.eleven_point ? eval::ApMethod::eleven_point : eval::ApMethod::all_point;
    options.include_undefined_in_map = !a.exclude_undefined;
    options.class_names = io::class_names(a.model.classes);
    const auto report = eval::evaluate_dataset(all_dets, all_gts, a.model.classes, options);
    emit(out, a.json, io::eval_report_to_json(report));
    return 0;
}

struct FlopsArgs {
    ModelOptions model;
    bool baseline = false;
    std::string json;
};

int cmd_flops(const FlopsArgs& a, std::ostream& out)
{
    const auto cfg = a.model.config();
    const auto costs = model::compare_costs(cfg);
    emit(out, a.json, io::costs_to_json(costs, cfg.class_count, cfg.input_size, a.baseline));
    return 0;
}

struct BenchArgs {
    ModelOptions model;
    std::string weights, image, json;
    int iters = 10, warmup = 1, threads = 1;
};

int cmd_bench(const BenchArgs& a, std::ostream& out)
{
    const auto detector = load_detector(a.model, a.weights);
    const Tensor image = io::read_image(a.image);
    const model::DetectOptions options;
    for (int i = 0; i < a.warmup; ++i)
        detector.detect(image, options, with_threads(a.threads));
    std::vector<double> samples;
    for (int i = 0; i < a.iters; ++i) {
        const auto start = std::chrono::steady_clock::now();
        detector.detect(image, options, with_threads(a.threads));
        const std::chrono::duration<double, std::milli> took = std::chrono::steady_clock::now() - start;
        samples.push_back(took.count());
    }
    const auto cfg = detector.config();
    emit(out, a.json,
         io::latency_to_json(io::summarize_latency(samples), fs::path(a.image).filename().string(), cfg.input_size));
    return 0;
}

struct InitArgs {
    ModelOptions model;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_init(const InitArgs& a)
{
    model::save_weights_file(a.out, model::init_weights(a.model.config(), a.seed));
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Lightweight surface-defect detector"};
    app.name("shuffledet");
    app.require_subcommand(1);

    InitArgs init;
    auto* init_cmd = app.add_subcommand("init-weights", "Write a deterministic seed-initialised weight file");
    add_model_options(init_cmd, init.model);
    init_cmd->add_option("--seed", init.seed, "PRNG seed")->required();
    init_cmd->add_option("--out", init.out, "Output weight file")->required();

    DetectArgs det;
    auto* det_cmd = app.add_subcommand("detect", "Detect defects in one image");
    add_model_options(det_cmd, det.model);
    det_cmd->add_option("--weights", det.weights, "Weight file")->required()->check(CLI::ExistingFile);
    det_cmd->add_option("--image", det.image, "P5/P6 image")->required()->check(CLI::ExistingFile);
    det_cmd->add_option("--conf", det.conf, "Score threshold");
    det_cmd->add_option("--iou", det.iou, "NMS IoU threshold");
    det_cmd->add_option("--out", det.out_image, "Render boxes into this P6 file");
    det_cmd->add_option("--json", det.json, "Write detections here instead of stdout");
    det_cmd->add_option("--threads", det.threads, "Convolution worker threads")->check(CLI::PositiveNumber);

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Score detections against YOLO-format labels");
    add_model_options(eval_cmd, ev.model);
    eval_cmd->add_option("--weights", ev.weights, "Weight file (runs the detector)")->check(CLI::ExistingFile);
    eval_cmd->add_option("--detections", ev.detections, "Directory of <image>.json detections to score instead")
        ->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--images", ev.images, "Directory of P5/P6 images")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--labels", ev.labels, "Directory of <image>.txt labels")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--conf", ev.conf, "Detector score threshold");
    eval_cmd->add_option("--iou", ev.iou, "Detector NMS IoU threshold");
    eval_cmd->add_option("--match-iou", ev.match_iou, "IoU needed for a true positive");
    eval_cmd->add_option("--jobs", ev.jobs, "Images processed in parallel")->check(CLI::PositiveNumber);
    eval_cmd->add_flag("--eleven-point", ev.eleven_point, "Use 11-point interpolated AP");
    eval_cmd->add_flag("--exclude-undefined", ev.exclude_undefined, "Leave classes without labels out of mAP");
    eval_cmd->add_option("--json", ev.json, "Write the report here instead of stdout");

    FlopsArgs fl;
    auto* flops_cmd = app.add_subcommand("flops", "Count parameters and MACs of the detector and the baseline backbone");
    add_model_options(flops_cmd, fl.model);
    flops_cmd->add_flag("--baseline", fl.baseline, "Include per-layer rows for the baseline backbone");
    flops_cmd->add_option("--json", fl.json, "Write the report here instead of stdout");

    auto* self_cmd = app.add_subcommand("selftest", "Check every kernel against its slow reference");

    BenchArgs be;
    auto* bench_cmd = app.add_subcommand("bench", "Single-image latency statistics");
    add_model_options(bench_cmd, be.model);
    bench_cmd->add_option("--weights", be.weights, "Weight file")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--image", be.image, "P5/P6 image")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--iters", be.iters, "Timed iterations")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--warmup", be.warmup, "Untimed iterations")->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--threads", be.threads, "Convolution worker threads")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--json", be.json, "Write the stats here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*init_cmd)
            return cmd_init(init);
        if (*det_cmd)
            return cmd_detect(det, out);
        if (*eval_cmd)
            return cmd_eval(ev, out);
        if (*flops_cmd)
            return cmd_flops(fl, out);
        if (*self_cmd)
            return run_selftest(out);
        if (*bench_cmd)
            return cmd_bench(be, out);
    } catch (const std::exception& e) {
        err << "shuffledet: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace shuffledet
