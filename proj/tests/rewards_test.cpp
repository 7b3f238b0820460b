#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "rvos/rewards.hpp"

using rvos::BBox;
using rvos::BinaryMask;
using rvos::GroundTruthObject;
using rvos::LabeledPoint;
using rvos::ObjectPrediction;
using rvos::RewardConfig;
using rvos::RolloutText;

namespace {

const RewardConfig kCfg;

BinaryMask square_mask(int side, int x0, int y0, int size) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(side) * side, 0);
    for (int y = y0; y < y0 + size; ++y) {
        for (int x = x0; x < x0 + size; ++x) {
            bits[static_cast<std::size_t>(y) * side + x] = 1;
        }
    }
    return BinaryMask::from_bitmap(side, side, bits);
}

GroundTruthObject gt_box(const BBox& b, const LabeledPoint& center) {
    GroundTruthObject g;
    g.bbox = b;
    g.center = center;
    return g;
}

ObjectPrediction pred_box(const BBox& b, const LabeledPoint& pos) {
    ObjectPrediction p;
    p.bbox = b;
    p.point_pos = pos;
    return p;
}

}  // namespace

TEST_CASE("threshold predicates at the exact boundary values") {
    CHECK_FALSE(rvos::iou_hit(0.49, kCfg));
    CHECK_FALSE(rvos::iou_hit(0.50, kCfg));
    CHECK(rvos::iou_hit(0.51, kCfg));

    CHECK(rvos::bbox_l1_hit(9.99, kCfg));
    CHECK_FALSE(rvos::bbox_l1_hit(10.0, kCfg));

    CHECK(rvos::point_l1_hit(29.0, kCfg));
    CHECK_FALSE(rvos::point_l1_hit(30.0, kCfg));

    CHECK_FALSE(rvos::negative_point_valid(0.0, kCfg));
    CHECK(rvos::negative_point_valid(1.0, kCfg));
    CHECK(rvos::negative_point_valid(40.0, kCfg));
    CHECK_FALSE(rvos::negative_point_valid(41.0, kCfg));
}

TEST_CASE("format rewards") {
    CHECK(rvos::reward_thinking_format({true, true}) == 1.0);
    CHECK(rvos::reward_thinking_format({false, true}) == 0.0);
    CHECK(rvos::reward_answer_format({true, true}) == 1.0);
    CHECK(rvos::reward_answer_format({true, false}) == 0.0);
    const auto flags = rvos::validate_format(RolloutText::scan(
        "<think>x</think><answer>[{'bbox_2d': [1, 2, 3, 4], 'point_pos': [2, 3, 1],"
        " 'point_neg': [9, 9, 0]}]</answer>"));
    CHECK(rvos::reward_thinking_format(flags) == 1.0);
    CHECK(rvos::reward_answer_format(flags) == 1.0);
}

TEST_CASE("reward_non_repeat") {
    CHECK(rvos::reward_non_repeat({"a", "b", "c"}) == doctest::Approx(1.0));
    CHECK(rvos::reward_non_repeat({"a", "a"}) == doctest::Approx(0.5));
    CHECK(rvos::reward_non_repeat({}) == doctest::Approx(1.0));
    CHECK(rvos::reward_non_repeat({"a", "a", "a", "b"}) == doctest::Approx(0.5));
}

TEST_CASE("reward_bbox_iou") {
    SUBCASE("two exact matches") {
        const std::vector<GroundTruthObject> gts = {gt_box({0, 0, 9, 9}, {5, 5, 1}),
                                                    gt_box({100, 0, 109, 9}, {105, 5, 1})};
        const std::vector<ObjectPrediction> preds = {pred_box({0, 0, 9, 9}, {5, 5, 1}),
                                                     pred_box({100, 0, 109, 9}, {105, 5, 1})};
        CHECK(rvos::reward_bbox_iou(preds, gts, kCfg) == doctest::Approx(1.0));
    }
    SUBCASE("matched IoUs 0.8 and 0.4 score half") {
        // Pair one: 10x8 box inside a 10x10 box, IoU 80/100. Pair two
        // (shifted right by 200): 10x4 inside 10x10, IoU 40/100.
        const std::vector<GroundTruthObject> gts = {gt_box({0, 0, 9, 9}, {5, 5, 1}),
                                                    gt_box({200, 0, 209, 9}, {205, 5, 1})};
        const std::vector<ObjectPrediction> preds = {pred_box({0, 0, 9, 7}, {5, 5, 1}),
                                                     pred_box({200, 0, 209, 3}, {205, 2, 1})};
        CHECK(rvos::reward_bbox_iou(preds, gts, kCfg) == doctest::Approx(0.5));
    }
    SUBCASE("extra predictions dilute the denominator") {
        const std::vector<GroundTruthObject> gts = {gt_box({0, 0, 9, 9}, {5, 5, 1})};
        const std::vector<ObjectPrediction> preds = {pred_box({0, 0, 9, 9}, {5, 5, 1}),
                                                     pred_box({500, 500, 509, 509}, {505, 505, 1}),
                                                     pred_box({700, 700, 709, 709}, {705, 705, 1})};
        CHECK(rvos::reward_bbox_iou(preds, gts, kCfg) == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("exact-ratio boundary boxes") {
        // Nested 1x100 column boxes make the IoU exactly area(inner)/100.
        const GroundTruthObject gt = gt_box({0, 0, 0, 99}, {0, 50, 1});
        const auto reward_for = [&](int y2) {
            return rvos::reward_bbox_iou({pred_box({0, 0, 0, y2}, {0, 0, 1})}, {gt}, kCfg);
        };
        CHECK(reward_for(48) == doctest::Approx(0.0));  // IoU 0.49
        CHECK(reward_for(49) == doctest::Approx(0.0));  // IoU 0.50, strictly-greater rule
        CHECK(reward_for(50) == doctest::Approx(1.0));  // IoU 0.51
    }
    SUBCASE("empty sides") {
        CHECK(rvos::reward_bbox_iou({}, {}, kCfg) == doctest::Approx(1.0));
        CHECK(rvos::reward_bbox_iou({pred_box({0, 0, 1, 1}, {0, 0, 1})}, {}, kCfg) ==
              doctest::Approx(0.0));
        CHECK(rvos::reward_bbox_iou({}, {gt_box({0, 0, 1, 1}, {0, 0, 1})}, kCfg) ==
              doctest::Approx(0.0));
    }
}

TEST_CASE("reward_bbox_l1") {
    const std::vector<GroundTruthObject> gts = {gt_box({0, 0, 10, 10}, {5, 5, 1})};
    SUBCASE("exact and shifted boxes") {
        CHECK(rvos::reward_bbox_l1({pred_box({0, 0, 10, 10}, {5, 5, 1})}, gts, kCfg) ==
              doctest::Approx(1.0));
        CHECK(rvos::reward_bbox_l1({pred_box({4, 4, 14, 14}, {9, 9, 1})}, gts, kCfg) ==
              doctest::Approx(1.0));
        CHECK(rvos::reward_bbox_l1({pred_box({12, 12, 22, 22}, {17, 17, 1})}, gts, kCfg) ==
              doctest::Approx(0.0));
    }
    SUBCASE("boundary distances") {
        // Corner deltas (10,10,10,9): mean 9.75, still under the threshold.
        CHECK(rvos::reward_bbox_l1({pred_box({10, 10, 20, 19}, {15, 15, 1})}, gts, kCfg) ==
              doctest::Approx(1.0));
        // Uniform shift by 10: mean exactly 10, no increment.
        CHECK(rvos::reward_bbox_l1({pred_box({10, 10, 20, 20}, {15, 15, 1})}, gts, kCfg) ==
              doctest::Approx(0.0));
    }
}

TEST_CASE("reward_point_l1") {
    const std::vector<GroundTruthObject> gts = {gt_box({0, 0, 30, 30}, {10, 10, 1})};
    const auto reward_at = [&](int x, int y) {
        return rvos::reward_point_l1({pred_box({0, 0, 30, 30}, {x, y, 1})}, gts, kCfg);
    };
    CHECK(reward_at(10, 10) == doctest::Approx(1.0));
    CHECK(reward_at(30, 15) == doctest::Approx(1.0));  // distance 25
    CHECK(reward_at(30, 25) == doctest::Approx(0.0));  // distance 35
    CHECK(reward_at(25, 24) == doctest::Approx(1.0));  // distance 29
    CHECK(reward_at(25, 25) == doctest::Approx(0.0));  // distance 30
}

TEST_CASE("reward_negative_points") {
    // Foreground strip at x in [50,59] of a 1x100 image; the distance from
    // (x,0) left of the strip is 50-x.
    std::vector<std::uint8_t> bits(100, 0);
    for (int x = 50; x < 60; ++x) bits[x] = 1;
    const auto strip = BinaryMask::from_bitmap(1, 100, bits);

    SUBCASE("single point just outside") {
        CHECK(rvos::reward_negative_points({{45, 0, 0}}, {strip}, kCfg) == doctest::Approx(1.0));
    }
    SUBCASE("inside gives nothing") {
        CHECK(rvos::reward_negative_points({{55, 0, 0}}, {strip}, kCfg) == doctest::Approx(0.0));
    }
    SUBCASE("distances 39 and 41 split the pair") {
        CHECK(rvos::reward_negative_points({{11, 0, 0}, {9, 0, 0}}, {strip}, kCfg) ==
              doctest::Approx(0.5));
    }
    SUBCASE("boundary distances") {
        CHECK(rvos::reward_negative_points({{10, 0, 0}}, {strip}, kCfg) ==
              doctest::Approx(1.0));  // exactly 40
        CHECK(rvos::reward_negative_points({{49, 0, 0}}, {strip}, kCfg) ==
              doctest::Approx(1.0));  // exactly 1
    }
    SUBCASE("no points or no masks") {
        CHECK(rvos::reward_negative_points({}, {strip}, kCfg) == doctest::Approx(0.0));
        CHECK(rvos::reward_negative_points({{0, 0, 0}}, {}, kCfg) == doctest::Approx(0.0));
    }
}

TEST_CASE("soft_length_penalty") {
    CHECK(rvos::soft_length_penalty(256, 256, kCfg) == doctest::Approx(1.0));
    CHECK(rvos::soft_length_penalty(0, 256, kCfg) == doctest::Approx(1.0));
    CHECK(rvos::soft_length_penalty(296, 256, kCfg) == doctest::Approx(0.92).epsilon(1e-12));
    CHECK(rvos::soft_length_penalty(1000, 256, kCfg) == doctest::Approx(0.0));

    SUBCASE("clamp can be disabled") {
        RewardConfig cfg;
        cfg.clamp_penalty_at_zero = false;
        CHECK(rvos::soft_length_penalty(1000, 256, cfg) == doctest::Approx(-0.488));
    }
    SUBCASE("monotone non-increasing sweep") {
        double prev = 2.0;
        for (std::size_t l = 0; l <= 1000; ++l) {
            const double s = rvos::soft_length_penalty(l, 256, kCfg);
            CHECK(s <= prev);
            prev = s;
        }
    }
}

TEST_CASE("compute_reward") {
    // One 8x8 object at (4,4) in a 32x32 frame; box (4,4,11,11), centroid
    // snaps to (8,8), and (2,4) sits 2 px outside the mask.
    GroundTruthObject gt;
    gt.bbox = BBox{4, 4, 11, 11};
    gt.center = LabeledPoint{8, 8, 1};
    gt.masks = {square_mask(32, 4, 4, 8)};
    const std::vector<GroundTruthObject> gts = {gt};
    const std::string answer =
        "[{'bbox_2d': [4, 4, 11, 11], 'point_pos': [8, 8, 1], 'point_neg': [2, 4, 0]}]";

    SUBCASE("perfect rollout maxes every component") {
        const auto rollout = RolloutText::scan("<think>Track the target. It moves right.</think>"
                                               "<answer>" + answer + "</answer>");
        const auto b = rvos::compute_reward(rollout, gts, 96, kCfg);
        CHECK(b.r_think_format == 1.0);
        CHECK(b.r_answer_format == 1.0);
        CHECK(b.r_non_repeat == doctest::Approx(1.0));
        CHECK(b.r_bbox_iou == doctest::Approx(1.0));
        CHECK(b.r_bbox_l1 == doctest::Approx(1.0));
        CHECK(b.r_point_l1 == doctest::Approx(1.0));
        CHECK(b.r_neg_point == doctest::Approx(1.0));
        CHECK(b.r_original == doctest::Approx(7.0));
        CHECK(b.penalty_s == doctest::Approx(1.0));
        CHECK(b.r_final == doctest::Approx(7.0));
        CHECK(b.l_used == 6);
        CHECK(b.l_budget == 96);
    }
    SUBCASE("missing tags leave only the vacuous non-repeat") {
        const auto b = rvos::compute_reward(RolloutText::scan("no tags here"), gts, 96, kCfg);
        CHECK(b.r_original == doctest::Approx(1.0));
        CHECK(b.r_final == doctest::Approx(1.0));
        CHECK(b.l_used == 0);
    }
    SUBCASE("over budget scales by the penalty") {
        std::string think;
        for (int i = 0; i < 296; ++i) think += "w" + std::to_string(i) + " ";
        const auto rollout =
            RolloutText::scan("<think>" + think + "</think><answer>" + answer + "</answer>");
        const auto b = rvos::compute_reward(rollout, gts, 256, kCfg);
        CHECK(b.l_used == 296);
        CHECK(b.penalty_s == doctest::Approx(0.92).epsilon(1e-12));
        CHECK(b.r_final == doctest::Approx(6.44).epsilon(1e-12));
    }
    SUBCASE("parse failure zeroes the accuracy components") {
        const auto b = rvos::compute_reward(
            RolloutText::scan("<think>a</think><answer>broken</answer>"), gts, 96, kCfg);
        CHECK(b.r_think_format == 1.0);
        CHECK(b.r_answer_format == 0.0);
        CHECK(b.r_bbox_iou == 0.0);
        CHECK(b.r_bbox_l1 == 0.0);
        CHECK(b.r_point_l1 == 0.0);
        CHECK(b.r_neg_point == 0.0);
        CHECK(b.r_original == doctest::Approx(2.0));
    }
    SUBCASE("repeated sentences halve the non-repeat term") {
        const auto rollout = RolloutText::scan(
            "<think>It moves. It moves.</think><answer>" + answer + "</answer>");
        const auto b = rvos::compute_reward(rollout, gts, 96, kCfg);
        CHECK(b.r_non_repeat == doctest::Approx(0.5));
    }
    SUBCASE("empty GT with empty answer") {
        const auto rollout =
            RolloutText::scan("<think>Nothing matches.</think><answer>[]</answer>");
        const auto b = rvos::compute_reward(rollout, {}, 96, kCfg);
        CHECK(b.r_bbox_iou == doctest::Approx(1.0));
        CHECK(b.r_bbox_l1 == doctest::Approx(1.0));
        CHECK(b.r_point_l1 == doctest::Approx(1.0));
        CHECK(b.r_neg_point == doctest::Approx(0.0));
        CHECK(b.r_original == doctest::Approx(6.0));
    }
    SUBCASE("external mask-IoU term joins the sum when provided") {
        const auto rollout = RolloutText::scan("<think>Track the target. It moves right.</think>"
                                               "<answer>" + answer + "</answer>");
        const auto b = rvos::compute_reward(rollout, gts, 96, kCfg, 0.75);
        REQUIRE(b.r_mask_iou.has_value());
        CHECK(*b.r_mask_iou == doctest::Approx(0.75));
        CHECK(b.r_original == doctest::Approx(7.75));
    }
}

TEST_CASE("matched rewards are permutation invariant") {
    std::mt19937 rng(31);
    std::uniform_int_distribution<int> coord(0, 200);
    std::uniform_int_distribution<int> size(1, 40);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ObjectPrediction> preds;
        std::vector<GroundTruthObject> gts;
        const int k = 1 + trial % 5;
        const int n = 1 + (trial / 5) % 5;
        for (int i = 0; i < k; ++i) {
            const int x = coord(rng), y = coord(rng), s = size(rng);
            preds.push_back(pred_box({x, y, x + s, y + s}, {x + s / 2, y + s / 2, 1}));
        }
        for (int j = 0; j < n; ++j) {
            const int x = coord(rng), y = coord(rng), s = size(rng);
            gts.push_back(gt_box({x, y, x + s, y + s}, {x + s / 2, y + s / 2, 1}));
        }
        auto shuffled_preds = preds;
        auto shuffled_gts = gts;
        std::shuffle(shuffled_preds.begin(), shuffled_preds.end(), rng);
        std::shuffle(shuffled_gts.begin(), shuffled_gts.end(), rng);

        CHECK(rvos::reward_bbox_iou(preds, gts, kCfg) ==
              doctest::Approx(rvos::reward_bbox_iou(shuffled_preds, shuffled_gts, kCfg)));
        CHECK(rvos::reward_bbox_l1(preds, gts, kCfg) ==
              doctest::Approx(rvos::reward_bbox_l1(shuffled_preds, shuffled_gts, kCfg)));
        CHECK(rvos::reward_point_l1(preds, gts, kCfg) ==
              doctest::Approx(rvos::reward_point_l1(shuffled_preds, shuffled_gts, kCfg)));
    }
}
