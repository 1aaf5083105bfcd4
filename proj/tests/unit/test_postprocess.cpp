// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "shuffledet/error.hpp"
#include "shuffledet/postprocess.hpp"
#include "shuffledet/prng.hpp"
#include "shuffledet/reference.hpp"

namespace post = shuffledet::post;
namespace ref = shuffledet::reference;
using shuffledet::Prng;
using shuffledet::Shape;
using shuffledet::Tensor;

namespace {

post::HeadOutputs zero_heads(std::size_t classes, std::size_t p3)
{
    const std::size_t ch = 3 * (5 + classes);
    return {Tensor({1, ch, p3, p3}, 0.0f), Tensor({1, ch, p3 / 2, p3 / 2}, 0.0f), Tensor({1, ch, p3 / 4, p3 / 4}, 0.0f)};
}

} // namespace

TEST(Anchors, DefaultIsValid)
{
    const auto a = post::AnchorSet::yolo_default();
    EXPECT_NO_THROW(a.validate());
    EXPECT_EQ(a.scales[0].stride, 8);
    EXPECT_EQ(a.scales[2].stride, 32);
    auto bad = a;
    bad.scales[1].stride = 8;
    EXPECT_THROW(bad.validate(), shuffledet::ParamError);
}

TEST(Decode, ZeroLogitsAtFirstCell)
{
    auto anchors = post::AnchorSet::yolo_default();
    anchors.scales[0].anchors[0] = {16.0f, 30.0f};
    const auto dets = post::decode_predictions(zero_heads(6, 4), anchors, 0.0f);
    ASSERT_FALSE(dets.empty());
    const auto& d = dets.front();
    EXPECT_FLOAT_EQ(d.box.x1 + d.box.width() / 2, 4.0f);
    EXPECT_FLOAT_EQ(d.box.y1 + d.box.height() / 2, 4.0f);
    EXPECT_FLOAT_EQ(d.box.width(), 16.0f);
    EXPECT_FLOAT_EQ(d.box.height(), 30.0f);
    // sigmoid(0) * sigmoid(0)
    EXPECT_FLOAT_EQ(d.score, 0.25f);
    EXPECT_EQ(d.class_id, 0);
    // 3 anchors over 16 + 4 + 1 cells.
    EXPECT_EQ(dets.size(), 63u);
}

TEST(Decode, ThresholdAboveOne)
{
    EXPECT_TRUE(post::decode_predictions(zero_heads(2, 8), post::AnchorSet::yolo_default(), 1.1f).empty());
}

TEST(Decode, MatchesScalarDecoder)
{
    Prng prng(3);
    for (int trial = 0; trial < 10; ++trial) {
        post::HeadOutputs raw;
        const std::size_t nc = 1 + prng.next_u64() % 5;
        for (std::size_t s = 0; s < 3; ++s) {
            const std::size_t side = std::size_t{8} >> s;
            raw[s] = ref::random_tensor(prng, {1, 3 * (5 + nc), side, side + 1}, -6.0f, 6.0f);
        }
        const float conf = static_cast<float>(prng.uniform() * 0.3);
        const auto fast = post::decode_predictions(raw, post::AnchorSet::yolo_default(), conf);
        const auto slow = ref::slow_decode(raw, post::AnchorSet::yolo_default(), conf);
        ASSERT_EQ(fast.size(), slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            EXPECT_EQ(fast[i].class_id, slow[i].class_id);
            EXPECT_NEAR(fast[i].score, slow[i].score, 1e-6);
            // Box coordinates reach a few hundred pixels; compare relative to magnitude.
            EXPECT_NEAR(fast[i].box.x1, slow[i].box.x1, 1e-6 * std::max(1.0f, std::fabs(slow[i].box.x1)));
            EXPECT_NEAR(fast[i].box.y2, slow[i].box.y2, 1e-6 * std::max(1.0f, std::fabs(slow[i].box.y2)));
        }
    }
}

TEST(Decode, ShapeErrors)
{
    auto heads = zero_heads(3, 8);
    heads[1] = Tensor({1, 10, 4, 4}, 0.0f);
    EXPECT_THROW(post::decode_predictions(heads, post::AnchorSet::yolo_default(), 0.1f), shuffledet::ShapeError);
    auto batched = zero_heads(3, 8);
    batched[0] = Tensor({2, 24, 8, 8}, 0.0f);
    EXPECT_THROW(post::decode_predictions(batched, post::AnchorSet::yolo_default(), 0.1f), shuffledet::ShapeError);
}

TEST(Iou, HandCases)
{
    const post::Box a{0, 0, 2, 2};
    EXPECT_DOUBLE_EQ(post::iou_xyxy(a, a), 1.0);
    EXPECT_DOUBLE_EQ(post::iou_xyxy(a, {1, 1, 3, 3}), 1.0 / 7.0);
    EXPECT_DOUBLE_EQ(post::iou_xyxy(a, {5, 5, 6, 6}), 0.0);
    EXPECT_DOUBLE_EQ(post::iou_xyxy({1, 1, 1, 1}, {1, 1, 1, 1}), 0.0);
}

TEST(Nms, SuppressesWithinClassOnly)
{
    const std::vector<post::Detection> same{{0, 0.9f, {0, 0, 10, 10}}, {0, 0.8f, {0, 0, 10, 10}}};
    const auto kept = post::nms(same, 0.5f);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].score, 0.9f);

    const std::vector<post::Detection> split{{0, 0.9f, {0, 0, 10, 10}}, {1, 0.8f, {0, 0, 10, 10}}};
    EXPECT_EQ(post::nms(split, 0.5f).size(), 2u);
}

TEST(Nms, TiesKeepLowerIndex)
{
    const std::vector<post::Detection> dets{{0, 0.5f, {0, 0, 10, 10}}, {0, 0.5f, {1, 0, 11, 10}}, {0, 0.7f, {50, 50, 60, 60}}};
    EXPECT_EQ(post::nms_indices(dets, 0.3f), (std::vector<std::size_t>{2, 0}));
}

TEST(Nms, ThresholdIsStrict)
{
    // IoU of exactly 1/3: kept at threshold 1/3, dropped just below.
    const std::vector<post::Detection> dets{{0, 0.9f, {0, 0, 2, 1}}, {0, 0.8f, {1, 0, 3, 1}}};
    EXPECT_EQ(post::nms(dets, 1.0f / 3.0f).size(), 2u);
    EXPECT_EQ(post::nms(dets, 0.33f).size(), 1u);
}

TEST(Nms, MatchesBruteForce)
{
    Prng prng(4);
    for (int scene = 0; scene < 300; ++scene) {
        const auto dets = ref::random_scene(prng, prng.next_u64() % 201, 1 + static_cast<int>(prng.next_u64() % 4));
        const float thr = static_cast<float>(prng.uniform());
        ASSERT_EQ(post::nms_indices(dets, thr), ref::brute_force_nms(dets, thr)) << "scene " << scene;
    }
}

TEST(Nms, EmptyInput)
{
    EXPECT_TRUE(post::nms_indices({}, 0.5f).empty());
}

TEST(Letterbox, SameSizeIsIdentity)
{
    const auto lb = post::letterbox_map({640, 640}, {640, 640});
    EXPECT_EQ(lb.scale, 1.0f);
    EXPECT_EQ(lb.pad_left, 0);
    EXPECT_EQ(lb.pad_top, 0);
    Prng prng(5);
    const Tensor img = ref::random_tensor(prng, {1, 3, 32, 32}, 0.0f, 1.0f);
    EXPECT_EQ(post::letterbox_image(img, post::letterbox_map({32, 32}, {32, 32})), img);
}

TEST(Letterbox, WideImagePadsVertically)
{
    const auto lb = post::letterbox_map({320, 640}, {640, 640});
    EXPECT_EQ(lb.scale, 1.0f);
    EXPECT_EQ(lb.resized, (post::Extent{320, 640}));
    EXPECT_EQ(lb.pad_top, 160);
    EXPECT_EQ(lb.pad_left, 0);
    const post::Detection d{0, 0.5f, {10, 200, 50, 260}};
    const auto back = post::apply_inverse(lb, d);
    EXPECT_EQ(back.box, (post::Box{10, 40, 50, 100}));
}

TEST(Letterbox, RoundTripInteriorBoxes)
{
    Prng prng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const post::Extent image{static_cast<int>(16 + prng.next_u64() % 900), static_cast<int>(16 + prng.next_u64() % 900)};
        const auto lb = post::letterbox_map(image, {640, 640});
        const float x1 = static_cast<float>(prng.uniform() * image.width / 2);
        const float y1 = static_cast<float>(prng.uniform() * image.height / 2);
        const post::Box box{x1, y1, x1 + image.width / 3.0f, y1 + image.height / 3.0f};
        const auto back = post::apply_inverse(lb, {0, 1.0f, post::apply_forward(lb, box)}).box;
        EXPECT_NEAR(back.x1, box.x1, 1e-6 * 1024);
        EXPECT_NEAR(back.y2, box.y2, 1e-6 * 1024);
    }
}

TEST(Letterbox, InverseClampsToImage)
{
    const auto lb = post::letterbox_map({320, 640}, {640, 640});
    const auto d = post::apply_inverse(lb, {0, 1.0f, {-20, 100, 700, 600}});
    EXPECT_EQ(d.box, (post::Box{0, 0, 640, 320}));
}

TEST(Letterbox, FillsPaddingAndKeepsConstants)
{
    const Tensor img({1, 3, 10, 20}, 0.25f);
    const auto lb = post::letterbox_map({10, 20}, {64, 64});
    const Tensor out = post::letterbox_image(img, lb);
    EXPECT_EQ(out.shape(), (Shape{1, 3, 64, 64}));
    EXPECT_EQ(lb.resized, (post::Extent{32, 64}));
    EXPECT_FLOAT_EQ(out.at(0, 0, 0, 0), post::kLetterboxFill);
    EXPECT_FLOAT_EQ(out.at(0, 2, static_cast<std::size_t>(lb.pad_top) + 5, 7), 0.25f);
    EXPECT_FLOAT_EQ(out.at(0, 1, 63, 63), post::kLetterboxFill);
}
