// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "shuffledet/error.hpp"

namespace shuffledet::eval {

MatchResult match_detections(std::span<const ImageDetection> dets, std::span<const GroundTruth> gts,
                             double iou_threshold)
{
    MatchResult result;
    result.is_tp.assign(dets.size(), false);
    result.matched_gt.assign(dets.size(), -1);
    result.gt_matched.assign(gts.size(), false);

    using Key = std::pair<std::string, int>;
    std::map<Key, std::vector<std::size_t>> gt_groups;
    for (std::size_t g = 0; g < gts.size(); ++g)
        gt_groups[{gts[g].image_id, gts[g].class_id}].push_back(g);

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].det.score > dets[b].det.score; });

    // Partitions are independent, so a single global score order visits each
    // partition's detections in its own score order.
    for (std::size_t d : order) {
        auto it = gt_groups.find({dets[d].image_id, dets[d].det.class_id});
        if (it == gt_groups.end())
            continue;
        int best = -1;
        double best_iou = iou_threshold;
        for (std::size_t g : it->second) {
            if (result.gt_matched[g])
                continue;
            const double iou = post::iou_xyxy(dets[d].det.box, gts[g].box);
            if (iou >= best_iou && (best < 0 || iou > best_iou)) {
                best = static_cast<int>(g);
                best_iou = iou;
            }
        }
        if (best >= 0) {
            result.is_tp[d] = true;
            result.matched_gt[d] = best;
            result.gt_matched[static_cast<std::size_t>(best)] = true;
        }
    }
    return result;
}

ApResult average_precision(std::span<const LabeledDetection> dets, std::size_t gt_count, ApMethod method)
{
    if (gt_count == 0)
        return {0.0, false};

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    std::vector<double> recall, precision;
    std::size_t tp = 0, fp = 0;
    for (std::size_t idx : order) {
        if (dets[idx].tp)
            ++tp;
        else
            ++fp;
        recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_count));
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    // Envelope: precision at a point becomes the best precision at any higher recall.
    for (std::size_t i = precision.size(); i-- > 1;)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);

    double ap = 0.0;
    if (method == ApMethod::all_point) {
        double previous_recall = 0.0;
        for (std::size_t i = 0; i < recall.size(); ++i) {
            ap += (recall[i] - previous_recall) * precision[i];
            previous_recall = recall[i];
        }
    } else {
        for (int t = 0; t <= 10; ++t) {
            const double level = t / 10.0;
            auto it = std::lower_bound(recall.begin(), recall.end(), level - 1e-12);
            if (it != recall.end())
                ap += precision[static_cast<std::size_t>(it - recall.begin())];
        }
        ap /= 11.0;
    }
    return {ap, true};
}

EvalReport evaluate_dataset(std::span<const ImageDetection> dets, std::span<const GroundTruth> gts,
                            int class_count, const EvalOptions& options)
{
    if (class_count < 1)
        throw DataError("evaluate: class_count must be >= 1");
    for (std::size_t i = 0; i < gts.size(); ++i)
        if (gts[i].class_id < 0 || gts[i].class_id >= class_count)
            throw DataError("ground truth #" + std::to_string(i) + " in image '" + gts[i].image_id +
                            "' has class " + std::to_string(gts[i].class_id) + " outside [0, " +
                            std::to_string(class_count) + ")");
    for (std::size_t i = 0; i < dets.size(); ++i)
        if (dets[i].det.class_id < 0 || dets[i].det.class_id >= class_count)
            throw DataError("detection #" + std::to_string(i) + " in image '" + dets[i].image_id +
                            "' has class " + std::to_string(dets[i].det.class_id) + " outside [0, " +
                            std::to_string(class_count) + ")");

    const MatchResult match = match_detections(dets, gts, options.iou_threshold);
    const std::size_t nc = static_cast<std::size_t>(class_count);

    EvalReport report;
    report.classes.resize(nc);
    std::vector<std::vector<LabeledDetection>> labeled(nc);
    for (std::size_t d = 0; d < dets.size(); ++d) {
        const auto c = static_cast<std::size_t>(dets[d].det.class_id);
        labeled[c].push_back({dets[d].det.score, match.is_tp[d]});
        if (match.is_tp[d])
            ++report.classes[c].tp;
        else
            ++report.classes[c].fp;
    }
    for (std::size_t g = 0; g < gts.size(); ++g) {
        auto& cls = report.classes[static_cast<std::size_t>(gts[g].class_id)];
        ++cls.gt_count;
        if (!match.gt_matched[g])
            ++cls.fn;
    }

    double ap_sum = 0.0;
    std::size_t ap_terms = 0;
    for (std::size_t c = 0; c < nc; ++c) {
        ClassMetrics& cls = report.classes[c];
        cls.name = c < options.class_names.size() ? options.class_names[c] : "class" + std::to_string(c);
        const ApResult ap = average_precision(labeled[c], cls.gt_count, options.method);
        cls.ap = ap.ap;
        cls.ap_defined = ap.defined;
        cls.recall = cls.gt_count == 0 ? 0.0 : static_cast<double>(cls.tp) / static_cast<double>(cls.gt_count);
        if (ap.defined || options.include_undefined_in_map) {
            ap_sum += cls.ap;
            ++ap_terms;
        }
    }
    report.map50 = ap_terms == 0 ? 0.0 : ap_sum / static_cast<double>(ap_terms);

    // image -> classes present in its ground truth, and classes with a TP
    std::map<std::string, std::set<int>> present, hit;
    for (const GroundTruth& gt : gts)
        present[gt.image_id].insert(gt.class_id);
    for (std::size_t d = 0; d < dets.size(); ++d)
        if (match.is_tp[d])
            hit[dets[d].image_id].insert(dets[d].det.class_id);
    std::size_t recognized = 0;
    for (const auto& [image, classes] : present) {
        const auto& found = hit[image];
        if (std::includes(found.begin(), found.end(), classes.begin(), classes.end()))
            ++recognized;
    }
    report.image_count = present.size();
    report.image_recall = present.empty() ? 0.0 : static_cast<double>(recognized) / static_cast<double>(present.size());
    return report;
}

} // namespace shuffledet::eval
