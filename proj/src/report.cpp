// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "shuffledet/error.hpp"
#include "shuffledet/layer_record.hpp"

namespace shuffledet::io {

using nlohmann::json;

namespace {

// 0.1f would otherwise print as 0.10000000149011612.
double shortest(float v)
{
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    double out = 0.0;
    std::from_chars(buf, res.ptr, out);
    return out;
}

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

json totals(const model::FlopsReport& r)
{
    return {{"params", r.total_params}, {"macs", r.total_macs}, {"extra_ops", r.total_extra_ops},
            {"layer_count", r.layers.size()}};
}

json layer_rows(const model::FlopsReport& r)
{
    json rows = json::array();
    for (const auto& l : r.layers)
        rows.push_back({{"name", l.name},
                        {"kind", model::to_string(l.kind)},
                        {"params", l.params},
                        {"macs", l.macs},
                        {"extra_ops", l.extra_ops},
                        {"output", {l.output.n, l.output.c, l.output.h, l.output.w}}});
    return rows;
}

} // namespace

std::string detections_to_json(std::span<const post::Detection> dets, std::span<const std::string> class_names,
                               const std::string& image)
{
    json arr = json::array();
    for (const auto& d : dets) {
        const auto cls = static_cast<std::size_t>(d.class_id);
        arr.push_back({{"class_id", d.class_id},
                       {"class_name", cls < class_names.size() ? class_names[cls] : "class" + std::to_string(cls)},
                       {"score", shortest(d.score)},
                       {"box", {shortest(d.box.x1), shortest(d.box.y1), shortest(d.box.x2), shortest(d.box.y2)}}});
    }
    return dump({{"image", image}, {"detections", arr}});
}

std::vector<post::Detection> detections_from_json(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("detections json: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("detections") || !doc["detections"].is_array())
        throw FormatError("detections json: missing \"detections\" array");
    std::vector<post::Detection> out;
    std::size_t index = 0;
    for (const auto& item : doc["detections"]) {
        try {
            const auto& box = item.at("box");
            if (!box.is_array() || box.size() != 4)
                throw FormatError("box must have 4 numbers");
            post::Detection d;
            d.class_id = item.at("class_id").get<int>();
            d.score = item.at("score").get<float>();
            d.box = {box[0].get<float>(), box[1].get<float>(), box[2].get<float>(), box[3].get<float>()};
            out.push_back(d);
        } catch (const json::exception& e) {
            throw FormatError("detections json: entry " + std::to_string(index) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError("detections json: entry " + std::to_string(index) + ": " + e.what());
        }
        ++index;
    }
    return out;
}

std::string eval_report_to_json(const eval::EvalReport& report)
{
    json classes = json::array();
    for (const auto& c : report.classes)
        classes.push_back({{"name", c.name},
                           {"ap", c.ap},
                           {"ap_defined", c.ap_defined},
                           {"recall", c.recall},
                           {"tp", c.tp},
                           {"fp", c.fp},
                           {"fn", c.fn},
                           {"gt_count", c.gt_count}});
    return dump({{"classes", classes},
                 {"map50", report.map50},
                 {"image_recall", report.image_recall},
                 {"image_count", report.image_count}});
}

std::string costs_to_json(const model::CostComparison& costs, int class_count, post::Extent input_size,
                          bool baseline_layers)
{
    json proposed_model = totals(costs.proposed_model);
    proposed_model["layers"] = layer_rows(costs.proposed_model);
    json baseline = totals(costs.baseline_backbone);
    if (baseline_layers)
        baseline["layers"] = layer_rows(costs.baseline_backbone);
    return dump({{"class_count", class_count},
                 {"input_size", {input_size.height, input_size.width}},
                 {"proposed_backbone", totals(costs.proposed_backbone)},
                 {"proposed_model", proposed_model},
                 {"baseline_backbone", baseline},
                 {"proposed_backbone_macs", costs.proposed_backbone.total_macs},
                 {"baseline_backbone_macs", costs.baseline_backbone.total_macs}});
}

LatencyStats summarize_latency(std::vector<double> samples_ms)
{
    if (samples_ms.empty())
        throw ParamError("latency summary needs at least one sample");
    std::sort(samples_ms.begin(), samples_ms.end());
    auto rank = [&](double q) {
        const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples_ms.size())));
        return samples_ms[std::clamp<std::size_t>(r, 1, samples_ms.size()) - 1];
    };
    LatencyStats s;
    s.iterations = samples_ms.size();
    s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(samples_ms.size());
    s.p50_ms = rank(0.50);
    s.p95_ms = rank(0.95);
    s.min_ms = samples_ms.front();
    s.max_ms = samples_ms.back();
    return s;
}

std::string latency_to_json(const LatencyStats& stats, const std::string& image, post::Extent input_size)
{
    return dump({{"image", image},
                 {"input_size", {input_size.height, input_size.width}},
                 {"iterations", stats.iterations},
                 {"single_image_ms", {{"mean", stats.mean_ms},
                                      {"p50", stats.p50_ms},
                                      {"p95", stats.p95_ms},
                                      {"min", stats.min_ms},
                                      {"max", stats.max_ms}}}});
}

} // namespace shuffledet::io
