#include "rvos/rewards.hpp"

#include <algorithm>
#include <unordered_set>

namespace rvos {

namespace {

// Shared shape of the three matched accuracy rewards: optimal one-to-one
// assignment, then count the pairs whose measure clears the threshold.
template <typename Hit>
double matched_reward(const std::vector<ObjectPrediction>& preds,
                      const std::vector<GroundTruthObject>& gts, MatchCost cost, Hit&& hit) {
    if (preds.empty() && gts.empty()) {
        return 1.0;
    }
    if (preds.empty() || gts.empty()) {
        return 0.0;
    }
    const auto assignment = match_objects(preds, gts, cost);
    std::size_t hits = 0;
    for (const auto& [pi, gi] : assignment.pairs) {
        if (hit(preds[pi], gts[gi])) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(std::max(preds.size(), gts.size()));
}

}  // namespace

bool iou_hit(double iou, const RewardConfig& cfg) {
    return iou > cfg.iou_match_threshold;
}

bool bbox_l1_hit(double distance, const RewardConfig& cfg) {
    return distance < cfg.bbox_l1_threshold;
}

bool point_l1_hit(double distance, const RewardConfig& cfg) {
    return distance < cfg.point_l1_threshold;
}

bool negative_point_valid(double distance, const RewardConfig& cfg) {
    return distance > 0.0 && distance <= cfg.tau_neg;
}

double reward_thinking_format(const FormatFlags& flags) {
    return flags.think_ok ? 1.0 : 0.0;
}

double reward_answer_format(const FormatFlags& flags) {
    return flags.answer_ok ? 1.0 : 0.0;
}

double reward_non_repeat(const std::vector<std::string>& sentences) {
    if (sentences.empty()) {
        return 1.0;
    }
    const std::unordered_set<std::string> unique(sentences.begin(), sentences.end());
    return static_cast<double>(unique.size()) / static_cast<double>(sentences.size());
}

double reward_bbox_iou(const std::vector<ObjectPrediction>& preds,
                       const std::vector<GroundTruthObject>& gts, const RewardConfig& cfg) {
    return matched_reward(preds, gts, MatchCost::one_minus_bbox_iou,
                          [&](const ObjectPrediction& p, const GroundTruthObject& g) {
                              return iou_hit(bbox_iou(p.bbox, g.bbox), cfg);
                          });
}

double reward_bbox_l1(const std::vector<ObjectPrediction>& preds,
                      const std::vector<GroundTruthObject>& gts, const RewardConfig& cfg) {
    return matched_reward(preds, gts, MatchCost::bbox_l1,
                          [&](const ObjectPrediction& p, const GroundTruthObject& g) {
                              return bbox_l1_hit(bbox_l1(p.bbox, g.bbox), cfg);
                          });
}

double reward_point_l1(const std::vector<ObjectPrediction>& preds,
                       const std::vector<GroundTruthObject>& gts, const RewardConfig& cfg) {
    return matched_reward(preds, gts, MatchCost::point_l1,
                          [&](const ObjectPrediction& p, const GroundTruthObject& g) {
                              return point_l1_hit(point_l1(p.point_pos, g.center), cfg);
                          });
}

double reward_negative_points(const std::vector<LabeledPoint>& neg_points,
                              const std::vector<BinaryMask>& gt_masks, const RewardConfig& cfg) {
    if (neg_points.empty() || gt_masks.empty()) {
        return 0.0;
    }
    const double share = 1.0 / static_cast<double>(neg_points.size());
    double total = 0.0;
    for (const auto& p : neg_points) {
        const int d = signed_distance_to_masks(p, gt_masks);
        if (negative_point_valid(static_cast<double>(d), cfg)) {
            total += share;
        }
    }
    return total;
}

double soft_length_penalty(std::size_t l_used, std::size_t l_budget, const RewardConfig& cfg) {
    if (l_used <= l_budget) {
        return 1.0;
    }
    const double s = 1.0 - cfg.beta * static_cast<double>(l_used - l_budget);
    return cfg.clamp_penalty_at_zero ? std::max(0.0, s) : s;
}

RewardBreakdown compute_reward(const RolloutText& rollout,
                               const std::vector<GroundTruthObject>& gts,
                               std::size_t difficulty_budget, const RewardConfig& cfg,
                               std::optional<double> mask_iou_component) {
    RewardBreakdown out;
    const auto flags = validate_format(rollout);
    out.r_think_format = reward_thinking_format(flags);
    out.r_answer_format = reward_answer_format(flags);
    out.r_non_repeat = reward_non_repeat(split_sentences(rollout.think_text()));

    if (flags.answer_ok) {
        const auto preds = parse_answer(rollout.answer_text());
        out.r_bbox_iou = reward_bbox_iou(preds, gts, cfg);
        out.r_bbox_l1 = reward_bbox_l1(preds, gts, cfg);
        out.r_point_l1 = reward_point_l1(preds, gts, cfg);
        std::vector<LabeledPoint> neg_points;
        neg_points.reserve(preds.size());
        for (const auto& p : preds) {
            neg_points.push_back(p.point_neg);
        }
        std::vector<BinaryMask> target_masks;
        for (const auto& g : gts) {
            target_masks.insert(target_masks.end(), g.masks.begin(), g.masks.end());
        }
        out.r_neg_point = reward_negative_points(neg_points, target_masks, cfg);
    }

    out.r_mask_iou = mask_iou_component;
    out.r_original = out.r_think_format + out.r_answer_format + out.r_non_repeat + out.r_bbox_iou +
                     out.r_bbox_l1 + out.r_point_l1 + out.r_neg_point +
                     out.r_mask_iou.value_or(0.0);
    out.l_used = count_whitespace_tokens(rollout.think_text());
    out.l_budget = difficulty_budget;
    out.penalty_s = soft_length_penalty(out.l_used, out.l_budget, cfg);
    out.r_final = out.r_original * out.penalty_s;
    return out;
}

}  // namespace rvos
