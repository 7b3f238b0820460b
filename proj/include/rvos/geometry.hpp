#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rvos/errors.hpp"

namespace rvos {

/// Axis-aligned box in pixel coordinates, origin top-left, corners inclusive.
struct BBox {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    bool valid() const { return x1 >= 0 && y1 >= 0 && x1 <= x2 && y1 <= y2; }
    std::int64_t area() const {
        return static_cast<std::int64_t>(x2 - x1 + 1) * static_cast<std::int64_t>(y2 - y1 + 1);
    }
    bool operator==(const BBox&) const = default;
};

/// Click prompt: label 1 = positive (on target), 0 = negative (background).
struct LabeledPoint {
    int x = 0;
    int y = 0;
    int label = 1;

    bool operator==(const LabeledPoint&) const = default;
};

/// H×W foreground bitmap stored as row-major run lengths.
///
/// Runs alternate background/foreground with the first run counting
/// background pixels (possibly 0). Canonical form has no zero-length runs
/// except that leading background, and no trailing zero; a single trailing
/// zero is accepted on input and dropped.
class BinaryMask {
public:
    BinaryMask() = default;

    /// Throws MaskFormatError if the run list violates the invariants.
    static BinaryMask from_runs(int height, int width, std::vector<std::int64_t> runs);
    static BinaryMask from_bitmap(int height, int width, const std::vector<std::uint8_t>& bits);
    static BinaryMask filled(int height, int width, bool foreground);

    int height() const { return height_; }
    int width() const { return width_; }
    const std::vector<std::int64_t>& runs() const { return runs_; }

    std::vector<std::uint8_t> to_bitmap() const;
    /// Foreground test; throws OutOfBoundsError.
    bool at(int x, int y) const;
    std::int64_t foreground_area() const { return area_; }
    bool has_foreground() const { return area_ > 0; }
    std::int64_t total_pixels() const {
        return static_cast<std::int64_t>(height_) * static_cast<std::int64_t>(width_);
    }

    /// Visits foreground pixels as fn(x, y) in row-major order.
    template <typename Fn>
    void for_each_foreground(Fn&& fn) const {
        std::int64_t pos = 0;
        for (std::size_t i = 0; i < runs_.size(); ++i) {
            if (i % 2 == 1) {
                for (std::int64_t p = pos; p < pos + runs_[i]; ++p) {
                    fn(static_cast<int>(p % width_), static_cast<int>(p / width_));
                }
            }
            pos += runs_[i];
        }
    }

    bool operator==(const BinaryMask&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::int64_t> runs_;
    std::int64_t area_ = 0;
};

double bbox_iou(const BBox& a, const BBox& b);

/// Mean absolute difference of the four corner coordinates.
double bbox_l1(const BBox& a, const BBox& b);

/// Manhattan distance; labels are ignored.
int point_l1(const LabeledPoint& p, const LabeledPoint& q);

/// Tight box over the foreground. Throws EmptyMaskError.
BBox mask_to_bbox(const BinaryMask& m);

/// Rounded mean of the foreground coordinates, snapped to the nearest
/// foreground pixel (Manhattan, row-major tie-break) when the rounded
/// point falls on background. Throws EmptyMaskError.
LabeledPoint mask_centroid(const BinaryMask& m);

/// 0 when p is foreground in any mask, otherwise the minimum Manhattan
/// distance from p to any foreground pixel across all masks.
/// Throws EmptyMaskError (empty list or a mask without foreground),
/// DimensionMismatchError, OutOfBoundsError.
int signed_distance_to_masks(const LabeledPoint& p, const std::vector<BinaryMask>& masks);

/// |a∩b| / |a∪b|; 1.0 when both masks are empty. Throws DimensionMismatchError.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// {intersection, union} foreground pixel counts. Throws DimensionMismatchError.
std::pair<std::int64_t, std::int64_t> mask_overlap(const BinaryMask& a, const BinaryMask& b);

/// Per-frame OR of equally sized masks. Throws on empty input or size mismatch.
BinaryMask mask_union(const std::vector<BinaryMask>& masks);

/// Exact Manhattan distance to the nearest foreground pixel, row-major,
/// 0 on foreground. Throws EmptyMaskError when the mask has no foreground.
std::vector<int> manhattan_distance_field(const BinaryMask& m);

}  // namespace rvos
