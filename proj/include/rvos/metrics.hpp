#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rvos/errors.hpp"
#include "rvos/geometry.hpp"

namespace rvos {

/// Region and boundary agreement for one frame.
struct FrameScore {
    double j = 0.0;
    double f = 0.0;
};

struct VideoScore {
    double j = 0.0;
    double f = 0.0;
    double jf = 0.0;
};

struct TokenStats {
    double mean = 0.0;
    double median = 0.0;
};

/// Evaluation summary: per-video scores, their aggregate, and image-level
/// IoU aggregates when the run contained single-frame queries.
struct EvalReport {
    std::map<std::string, VideoScore> per_video;
    VideoScore aggregate;
    std::optional<double> aggregate_g_iou;
    std::optional<double> aggregate_c_iou;
    TokenStats tokens;
};

/// Foreground pixels with a 4-neighbor background pixel or the image edge.
BinaryMask mask_boundary(const BinaryMask& mask);

/// Boundary F-measure for one frame. A boundary pixel counts as matched
/// when it lies within a Euclidean disc of radius
/// ceil(tolerance_frac * image diagonal) of the other boundary map.
/// 1.0 when both boundaries are empty, 0.0 when exactly one is.
double boundary_f_measure(const BinaryMask& pred, const BinaryMask& gt,
                          double tolerance_frac = 0.008);

FrameScore frame_score(const BinaryMask& pred, const BinaryMask& gt,
                       double tolerance_frac = 0.008);

/// J: mean per-frame IoU. Throws LengthMismatchError, EmptyListError,
/// DimensionMismatchError.
double region_similarity(const std::vector<BinaryMask>& pred_seq,
                         const std::vector<BinaryMask>& gt_seq);

/// F: mean per-frame boundary F-measure. Errors as region_similarity.
double contour_accuracy(const std::vector<BinaryMask>& pred_seq,
                        const std::vector<BinaryMask>& gt_seq,
                        double tolerance_frac = 0.008);

/// gIoU: mean of the per-image IoUs. Throws EmptyListError.
double g_iou(const std::vector<double>& per_image_ious);

/// cIoU: cumulative intersection over cumulative union; 1.0 when the
/// total union is zero. Throws EmptyListError, DimensionMismatchError.
double c_iou(const std::vector<std::pair<BinaryMask, BinaryMask>>& pairs);

}  // namespace rvos
