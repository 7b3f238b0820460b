#include "rvos/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace rvos {

namespace {

std::vector<std::uint8_t> boundary_bitmap(const BinaryMask& mask) {
    const int h = mask.height();
    const int w = mask.width();
    const auto bits = mask.to_bitmap();
    std::vector<std::uint8_t> out(bits.size(), 0);
    mask.for_each_foreground([&](int x, int y) {
        const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1;
        const auto idx = [&](int px, int py) {
            return static_cast<std::size_t>(py) * w + px;
        };
        if (edge || !bits[idx(x - 1, y)] || !bits[idx(x + 1, y)] ||
            !bits[idx(x, y - 1)] || !bits[idx(x, y + 1)]) {
            out[idx(x, y)] = 1;
        }
    });
    return out;
}

int tolerance_radius(int height, int width, double tolerance_frac) {
    const double diagonal =
        std::sqrt(static_cast<double>(height) * height + static_cast<double>(width) * width);
    return static_cast<int>(std::ceil(tolerance_frac * diagonal));
}

std::vector<std::uint8_t> dilate_disc(const std::vector<std::uint8_t>& bits, int h, int w,
                                      int radius) {
    std::vector<std::pair<int, int>> disc;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy <= radius * radius) disc.emplace_back(dx, dy);
        }
    }
    std::vector<std::uint8_t> out(bits.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!bits[static_cast<std::size_t>(y) * w + x]) continue;
            for (const auto& [dx, dy] : disc) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx >= 0 && ny >= 0 && nx < w && ny < h) {
                    out[static_cast<std::size_t>(ny) * w + nx] = 1;
                }
            }
        }
    }
    return out;
}

void check_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw DimensionMismatchError("mask dimensions differ: " + std::to_string(a.height()) +
                                     "x" + std::to_string(a.width()) + " vs " +
                                     std::to_string(b.height()) + "x" +
                                     std::to_string(b.width()));
    }
}

void check_sequences(const std::vector<BinaryMask>& pred_seq,
                     const std::vector<BinaryMask>& gt_seq) {
    if (pred_seq.size() != gt_seq.size()) {
        throw LengthMismatchError("sequence lengths differ: " +
                                  std::to_string(pred_seq.size()) + " vs " +
                                  std::to_string(gt_seq.size()));
    }
    if (pred_seq.empty()) throw EmptyListError("empty mask sequence");
}

}  // namespace

BinaryMask mask_boundary(const BinaryMask& mask) {
    return BinaryMask::from_bitmap(mask.height(), mask.width(), boundary_bitmap(mask));
}

double boundary_f_measure(const BinaryMask& pred, const BinaryMask& gt, double tolerance_frac) {
    check_same_shape(pred, gt);
    const auto pred_b = boundary_bitmap(pred);
    const auto gt_b = boundary_bitmap(gt);
    const auto count = [](const std::vector<std::uint8_t>& bits) {
        return std::count(bits.begin(), bits.end(), std::uint8_t{1});
    };
    const auto n_pred = count(pred_b);
    const auto n_gt = count(gt_b);
    if (n_pred == 0 && n_gt == 0) return 1.0;
    if (n_pred == 0 || n_gt == 0) return 0.0;

    const int h = pred.height();
    const int w = pred.width();
    const int r = tolerance_radius(h, w, tolerance_frac);
    const auto gt_dilated = dilate_disc(gt_b, h, w, r);
    const auto pred_dilated = dilate_disc(pred_b, h, w, r);

    std::int64_t pred_matched = 0;
    std::int64_t gt_matched = 0;
    for (std::size_t i = 0; i < pred_b.size(); ++i) {
        if (pred_b[i] && gt_dilated[i]) ++pred_matched;
        if (gt_b[i] && pred_dilated[i]) ++gt_matched;
    }
    const double precision = static_cast<double>(pred_matched) / static_cast<double>(n_pred);
    const double recall = static_cast<double>(gt_matched) / static_cast<double>(n_gt);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

FrameScore frame_score(const BinaryMask& pred, const BinaryMask& gt, double tolerance_frac) {
    return {mask_iou(pred, gt), boundary_f_measure(pred, gt, tolerance_frac)};
}

double region_similarity(const std::vector<BinaryMask>& pred_seq,
                         const std::vector<BinaryMask>& gt_seq) {
    check_sequences(pred_seq, gt_seq);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred_seq.size(); ++i) {
        sum += mask_iou(pred_seq[i], gt_seq[i]);
    }
    return sum / static_cast<double>(pred_seq.size());
}

double contour_accuracy(const std::vector<BinaryMask>& pred_seq,
                        const std::vector<BinaryMask>& gt_seq, double tolerance_frac) {
    check_sequences(pred_seq, gt_seq);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred_seq.size(); ++i) {
        sum += boundary_f_measure(pred_seq[i], gt_seq[i], tolerance_frac);
    }
    return sum / static_cast<double>(pred_seq.size());
}

double g_iou(const std::vector<double>& per_image_ious) {
    if (per_image_ious.empty()) throw EmptyListError("no per-image IoUs");
    double sum = 0.0;
    for (const double v : per_image_ious) sum += v;
    return sum / static_cast<double>(per_image_ious.size());
}

double c_iou(const std::vector<std::pair<BinaryMask, BinaryMask>>& pairs) {
    if (pairs.empty()) throw EmptyListError("no mask pairs");
    std::int64_t inter_total = 0;
    std::int64_t union_total = 0;
    for (const auto& [pred, gt] : pairs) {
        const auto [inter, uni] = mask_overlap(pred, gt);
        inter_total += inter;
        union_total += uni;
    }
    if (union_total == 0) return 1.0;
    return static_cast<double>(inter_total) / static_cast<double>(union_total);
}

}  // namespace rvos
