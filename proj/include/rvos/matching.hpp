#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rvos/answer.hpp"
#include "rvos/errors.hpp"
#include "rvos/geometry.hpp"

namespace rvos {

/// Dense rectangular cost matrix, rows = predictions, cols = ground truths.
class CostMatrix {
public:
    CostMatrix() = default;
    /// Throws NonFiniteCostError on NaN/inf entries.
    CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double at(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

/// One-to-one assignment: min(rows, cols) pairs of (pred, gt) indices,
/// sorted by pred index, plus the summed matched cost.
struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double total_cost = 0.0;
};

/// Minimum-cost assignment. Rectangular matrices are padded internally;
/// padded pairs never appear in the output. Among equal-cost optima the
/// lexicographically smallest pair list is returned.
Assignment hungarian(const CostMatrix& c);

/// Annotated target object, as derived from dataset masks or given directly.
struct GroundTruthObject {
    BBox bbox;
    LabeledPoint center{0, 0, 1};
    std::vector<BinaryMask> masks;  // optional; reward code uses them when present
};

enum class MatchCost { one_minus_bbox_iou, bbox_l1, point_l1 };

/// Builds the K×N matrix with the selected measure and solves it.
/// An empty side yields an empty assignment.
Assignment match_objects(const std::vector<ObjectPrediction>& preds,
                         const std::vector<GroundTruthObject>& gts, MatchCost cost);

}  // namespace rvos
