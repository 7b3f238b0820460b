#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rvos/answer.hpp"
#include "rvos/geometry.hpp"
#include "rvos/matching.hpp"

namespace rvos {

struct RewardConfig {
    double iou_match_threshold = 0.5;
    double bbox_l1_threshold = 10.0;
    double point_l1_threshold = 30.0;
    double tau_neg = 40.0;
    double beta = 2e-3;
    bool clamp_penalty_at_zero = true;
};

/// All reward components of one rollout. r_original is their plain sum,
/// r_final = r_original * penalty_s.
struct RewardBreakdown {
    double r_think_format = 0.0;
    double r_answer_format = 0.0;
    double r_non_repeat = 0.0;
    double r_bbox_iou = 0.0;
    double r_bbox_l1 = 0.0;
    double r_point_l1 = 0.0;
    double r_neg_point = 0.0;
    /// Externally supplied mask-IoU accuracy term; the structured answer
    /// carries no mask, so this only appears when a caller provides it.
    std::optional<double> r_mask_iou;
    double r_original = 0.0;
    double penalty_s = 1.0;
    double r_final = 0.0;
    std::size_t l_used = 0;
    std::size_t l_budget = 0;
};

/// Per-pair increment predicates. Matched pairs score through these, so the
/// threshold semantics live in exactly one place.
bool iou_hit(double iou, const RewardConfig& cfg);                   // iou > 0.5
bool bbox_l1_hit(double distance, const RewardConfig& cfg);          // d < 10
bool point_l1_hit(double distance, const RewardConfig& cfg);         // d < 30
bool negative_point_valid(double distance, const RewardConfig& cfg); // 0 < d <= 40

double reward_thinking_format(const FormatFlags& flags);
double reward_answer_format(const FormatFlags& flags);

/// |unique| / |sentences|; 1.0 for an empty list.
double reward_non_repeat(const std::vector<std::string>& sentences);

/// Hungarian-matched pair counts over max(N, K). Both sides empty scores
/// 1.0, one side empty scores 0.0.
double reward_bbox_iou(const std::vector<ObjectPrediction>& preds,
                       const std::vector<GroundTruthObject>& gts, const RewardConfig& cfg);
double reward_bbox_l1(const std::vector<ObjectPrediction>& preds,
                      const std::vector<GroundTruthObject>& gts, const RewardConfig& cfg);
double reward_point_l1(const std::vector<ObjectPrediction>& preds,
                       const std::vector<GroundTruthObject>& gts, const RewardConfig& cfg);

/// Each point within (0, tau_neg] of some target region adds 1/K where
/// K = |neg_points|. 0.0 when there are no points or no target masks.
double reward_negative_points(const std::vector<LabeledPoint>& neg_points,
                              const std::vector<BinaryMask>& gt_masks, const RewardConfig& cfg);

/// 1 on or below budget, else 1 - beta * (l_used - l_budget), clamped below
/// at 0 unless the config disables the clamp.
double soft_length_penalty(std::size_t l_used, std::size_t l_budget, const RewardConfig& cfg);

/// Full scoring of one rollout. Accuracy components are 0 when the answer
/// does not parse; l_used counts whitespace tokens of the think span.
RewardBreakdown compute_reward(const RolloutText& rollout,
                               const std::vector<GroundTruthObject>& gts,
                               std::size_t difficulty_budget, const RewardConfig& cfg,
                               std::optional<double> mask_iou_component = std::nullopt);

}  // namespace rvos
