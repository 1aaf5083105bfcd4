// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "shuffledet/error.hpp"
#include "shuffledet/eval.hpp"
#include "shuffledet/prng.hpp"
#include "shuffledet/reference.hpp"

namespace ev = shuffledet::eval;
namespace ref = shuffledet::reference;
using shuffledet::Prng;

namespace {

ev::ImageDetection det(const std::string& image, int cls, float score, shuffledet::post::Box box)
{
    return {image, {cls, score, box}};
}

void expect_same_report(const ev::EvalReport& a, const ev::EvalReport& b)
{
    EXPECT_NEAR(a.map50, b.map50, 1e-12);
    EXPECT_NEAR(a.image_recall, b.image_recall, 1e-12);
    ASSERT_EQ(a.classes.size(), b.classes.size());
    for (std::size_t c = 0; c < a.classes.size(); ++c) {
        EXPECT_NEAR(a.classes[c].ap, b.classes[c].ap, 1e-12) << c;
        EXPECT_NEAR(a.classes[c].recall, b.classes[c].recall, 1e-12) << c;
        EXPECT_EQ(a.classes[c].tp, b.classes[c].tp) << c;
        EXPECT_EQ(a.classes[c].fp, b.classes[c].fp) << c;
        EXPECT_EQ(a.classes[c].fn, b.classes[c].fn) << c;
    }
}

} // namespace

TEST(Match, SingleOverlapIsTruePositive)
{
    // IoU = 60/100 = 0.6
    const std::vector<ev::GroundTruth> gts{{"a", 0, {0, 0, 10, 10}}};
    const std::vector<ev::ImageDetection> dets{det("a", 0, 0.9f, {0, 0, 10, 6})};
    const auto m = ev::match_detections(dets, gts);
    EXPECT_TRUE(m.is_tp[0]);
    EXPECT_EQ(m.matched_gt[0], 0);
    EXPECT_TRUE(m.gt_matched[0]);
}

TEST(Match, OneGroundTruthOneMatch)
{
    const std::vector<ev::GroundTruth> gts{{"a", 0, {0, 0, 10, 10}}};
    const std::vector<ev::ImageDetection> dets{det("a", 0, 0.7f, {0, 0, 10, 9}), det("a", 0, 0.9f, {0, 0, 10, 8})};
    const auto m = ev::match_detections(dets, gts);
    EXPECT_FALSE(m.is_tp[0]);
    EXPECT_TRUE(m.is_tp[1]);
}

TEST(Match, ClassAndImageMustAgree)
{
    const std::vector<ev::GroundTruth> gts{{"a", 0, {0, 0, 10, 10}}};
    const std::vector<ev::ImageDetection> dets{det("a", 1, 0.9f, {0, 0, 10, 10}), det("b", 0, 0.9f, {0, 0, 10, 10})};
    const auto m = ev::match_detections(dets, gts);
    EXPECT_FALSE(m.is_tp[0]);
    EXPECT_FALSE(m.is_tp[1]);
}

TEST(Match, AgreesWithExhaustiveOracle)
{
    Prng prng(1);
    for (int scene = 0; scene < 400; ++scene) {
        std::vector<ev::GroundTruth> gts;
        std::vector<ev::ImageDetection> dets;
        const auto boxes = ref::random_scene(prng, 1 + prng.next_u64() % 6, 2);
        for (const auto& b : boxes) {
            if (prng.uniform() < 0.5)
                gts.push_back({"img", b.class_id, b.box});
            else
                dets.push_back({"img", b});
        }
        // Jittered copies of ground truth so matches actually happen.
        for (const auto& g : gts)
            if (prng.uniform() < 0.6) {
                auto box = g.box;
                box.x2 += 4.0f;
                dets.push_back({"img", {g.class_id, static_cast<float>(prng.next_u64() % 8) / 8.0f, box}});
            }
        const auto fast = ev::match_detections(dets, gts, 0.5);
        const auto slow = ref::exhaustive_match(dets, gts, 0.5);
        ASSERT_EQ(fast.is_tp, slow.is_tp) << "scene " << scene;
        ASSERT_EQ(fast.matched_gt, slow.matched_gt) << "scene " << scene;
    }
}

TEST(AveragePrecision, HandComputed)
{
    const std::vector<ev::LabeledDetection> one{{0.9f, true}};
    EXPECT_DOUBLE_EQ(ev::average_precision(one, 1).ap, 1.0);

    const std::vector<ev::LabeledDetection> ladder{{0.9f, true}, {0.8f, false}, {0.7f, true}};
    const double expect = 0.5 * 1.0 + 0.5 * (2.0 / 3.0);
    EXPECT_NEAR(ev::average_precision(ladder, 2).ap, expect, 1e-12);
    EXPECT_NEAR(expect, 0.8333, 1e-4);

    const std::vector<ev::LabeledDetection> misses{{0.9f, false}, {0.5f, false}};
    EXPECT_EQ(ev::average_precision(misses, 3).ap, 0.0);
}

TEST(AveragePrecision, EmptyClassIsUndefined)
{
    const auto r = ev::average_precision({}, 0);
    EXPECT_FALSE(r.defined);
    EXPECT_EQ(r.ap, 0.0);
}

TEST(AveragePrecision, ElevenPoint)
{
    const std::vector<ev::LabeledDetection> ladder{{0.9f, true}, {0.8f, false}, {0.7f, true}};
    // Envelope is 1.0 up to recall 0.5 (6 levels) and 2/3 above it (5 levels).
    const double expect = (6 * 1.0 + 5 * (2.0 / 3.0)) / 11.0;
    EXPECT_NEAR(ev::average_precision(ladder, 2, ev::ApMethod::eleven_point).ap, expect, 1e-12);
}

TEST(AveragePrecision, MatchesVocReference)
{
    Prng prng(2);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<ev::LabeledDetection> dets;
        std::vector<std::pair<float, bool>> scored;
        std::size_t tp = 0;
        const std::size_t n = prng.next_u64() % 12;
        for (std::size_t i = 0; i < n; ++i) {
            const float score = static_cast<float>(prng.next_u64() % 1000) / 1000.0f;
            const bool hit = prng.uniform() < 0.5;
            tp += hit;
            dets.push_back({score, hit});
            scored.emplace_back(score, hit);
        }
        const std::size_t gt = tp + prng.next_u64() % 3 + (tp == 0);
        EXPECT_NEAR(ev::average_precision(dets, gt).ap, ref::voc_average_precision(scored, gt), 1e-12);
    }
}

TEST(Evaluate, PerfectDetector)
{
    const std::vector<ev::GroundTruth> gts{{"a", 0, {0, 0, 10, 10}}, {"a", 1, {20, 20, 40, 30}}, {"b", 1, {5, 5, 9, 9}}};
    std::vector<ev::ImageDetection> dets;
    for (const auto& g : gts)
        dets.push_back({g.image_id, {g.class_id, 1.0f, g.box}});
    const auto r = ev::evaluate_dataset(dets, gts, 2);
    EXPECT_EQ(r.map50, 1.0);
    EXPECT_EQ(r.image_recall, 1.0);
    for (const auto& c : r.classes) {
        EXPECT_EQ(c.ap, 1.0);
        EXPECT_EQ(c.recall, 1.0);
        EXPECT_EQ(c.fp, 0u);
        EXPECT_EQ(c.fn, 0u);
    }
}

TEST(Evaluate, NoDetections)
{
    const std::vector<ev::GroundTruth> gts{{"a", 0, {0, 0, 10, 10}}, {"b", 1, {5, 5, 9, 9}}};
    const auto r = ev::evaluate_dataset({}, gts, 2);
    EXPECT_EQ(r.map50, 0.0);
    EXPECT_EQ(r.image_recall, 0.0);
    EXPECT_EQ(r.image_count, 2u);
    for (const auto& c : r.classes) {
        EXPECT_EQ(c.ap, 0.0);
        EXPECT_EQ(c.recall, 0.0);
    }
}

TEST(Evaluate, ThreeImageHandComposition)
{
    // Class 0 reproduces the TP/FP/TP ladder over two GT (AP 5/6); class 1
    // has one GT found by its only detection (AP 1). mAP = (5/6 + 1) / 2.
    const std::vector<ev::GroundTruth> gts{
        {"i1", 0, {0, 0, 10, 10}}, {"i2", 0, {0, 0, 10, 10}}, {"i3", 1, {30, 30, 50, 50}}};
    const std::vector<ev::ImageDetection> dets{
        det("i1", 0, 0.9f, {0, 0, 10, 10}),
        det("i3", 0, 0.8f, {30, 30, 50, 50}),
        det("i2", 0, 0.7f, {1, 0, 10, 10}),
        det("i3", 1, 0.6f, {31, 30, 50, 50}),
    };
    const auto r = ev::evaluate_dataset(dets, gts, 2);
    EXPECT_NEAR(r.classes[0].ap, 5.0 / 6.0, 1e-12);
    EXPECT_NEAR(r.classes[1].ap, 1.0, 1e-12);
    EXPECT_NEAR(r.map50, (5.0 / 6.0 + 1.0) / 2.0, 1e-12);
    EXPECT_EQ(r.classes[0].fp, 1u);
    EXPECT_EQ(r.image_recall, 1.0);
}

TEST(Evaluate, UndefinedClassHandling)
{
    const std::vector<ev::GroundTruth> gts{{"a", 0, {0, 0, 10, 10}}};
    const std::vector<ev::ImageDetection> dets{det("a", 0, 0.9f, {0, 0, 10, 10})};
    auto r = ev::evaluate_dataset(dets, gts, 2);
    EXPECT_FALSE(r.classes[1].ap_defined);
    EXPECT_DOUBLE_EQ(r.map50, 0.5);
    ev::EvalOptions opts;
    opts.include_undefined_in_map = false;
    r = ev::evaluate_dataset(dets, gts, 2, opts);
    EXPECT_DOUBLE_EQ(r.map50, 1.0);
}

TEST(Evaluate, ImageRecallNeedsEveryClass)
{
    const std::vector<ev::GroundTruth> gts{{"a", 0, {0, 0, 10, 10}}, {"a", 1, {20, 20, 30, 30}}, {"b", 0, {0, 0, 5, 5}}};
    const std::vector<ev::ImageDetection> dets{det("a", 0, 0.9f, {0, 0, 10, 10}), det("b", 0, 0.8f, {0, 0, 5, 5})};
    EXPECT_DOUBLE_EQ(ev::evaluate_dataset(dets, gts, 2).image_recall, 0.5);
}

TEST(Evaluate, ClassIdOutOfRange)
{
    const std::vector<ev::GroundTruth> gts{{"a", 3, {0, 0, 10, 10}}};
    try {
        ev::evaluate_dataset({}, gts, 2);
        FAIL() << "expected DataError";
    } catch (const shuffledet::DataError& e) {
        EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos) << e.what();
    }
    const std::vector<ev::ImageDetection> dets{det("b", 2, 0.5f, {0, 0, 1, 1})};
    EXPECT_THROW(ev::evaluate_dataset(dets, {}, 2), shuffledet::DataError);
}

TEST(EvaluateProperties, MatchesSlowReference)
{
    Prng prng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto ds = ref::random_dataset(prng, 1 + static_cast<int>(prng.next_u64() % 3), 3);
        expect_same_report(ev::evaluate_dataset(ds.dets, ds.gts, 3), ref::slow_evaluate(ds.dets, ds.gts, 3));
    }
}

TEST(EvaluateProperties, PermutationInvariant)
{
    Prng prng(4);
    for (int trial = 0; trial < 500; ++trial) {
        auto ds = ref::random_dataset(prng, 3, 3);
        const auto before = ev::evaluate_dataset(ds.dets, ds.gts, 3);
        for (std::size_t i = ds.dets.size(); i > 1; --i)
            std::swap(ds.dets[i - 1], ds.dets[prng.next_u64() % i]);
        expect_same_report(before, ev::evaluate_dataset(ds.dets, ds.gts, 3));
    }
}

TEST(EvaluateProperties, DroppingFalsePositiveNeverLowersAp)
{
    Prng prng(5);
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto ds = ref::random_dataset(prng, 3, 3);
        const auto m = ev::match_detections(ds.dets, ds.gts);
        const auto before = ev::evaluate_dataset(ds.dets, ds.gts, 3);
        for (std::size_t i = 0; i < ds.dets.size(); ++i) {
            if (m.is_tp[i])
                continue;
            auto fewer = ds.dets;
            fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
            const auto after = ev::evaluate_dataset(fewer, ds.gts, 3);
            const int c = ds.dets[i].det.class_id;
            EXPECT_GE(after.classes[static_cast<std::size_t>(c)].ap, before.classes[static_cast<std::size_t>(c)].ap - 1e-12);
            ++checked;
        }
    }
    EXPECT_GT(checked, 100);
}

TEST(EvaluateProperties, MapIsClassMean)
{
    Prng prng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const auto ds = ref::random_dataset(prng, 2, 4);
        const auto r = ev::evaluate_dataset(ds.dets, ds.gts, 4);
        double sum = 0.0;
        for (const auto& c : r.classes)
            sum += c.ap;
        EXPECT_NEAR(r.map50, sum / 4.0, 1e-12);
    }
}

TEST(EvaluateProperties, UnmatchedGroundTruthLowersRecall)
{
    Prng prng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto ds = ref::random_dataset(prng, 2, 2);
        const auto before = ev::evaluate_dataset(ds.dets, ds.gts, 2);
        for (int c = 0; c < 2; ++c) {
            if (before.classes[static_cast<std::size_t>(c)].recall <= 0.0)
                continue;
            auto gts = ds.gts;
            gts.push_back({"elsewhere", c, {500, 500, 510, 510}});
            const auto after = ev::evaluate_dataset(ds.dets, gts, 2);
            EXPECT_LT(after.classes[static_cast<std::size_t>(c)].recall, before.classes[static_cast<std::size_t>(c)].recall);
        }
    }
}
