#include "rvos/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

namespace rvos {

namespace {

std::int64_t run_sum(const std::vector<std::int64_t>& runs) {
    return std::accumulate(runs.begin(), runs.end(), std::int64_t{0});
}

}  // namespace

BinaryMask BinaryMask::from_runs(int height, int width, std::vector<std::int64_t> runs) {
    if (height < 0 || width < 0) {
        throw MaskFormatError("mask dimensions must be non-negative");
    }
    const std::int64_t total = static_cast<std::int64_t>(height) * width;
    if (!runs.empty() && runs.back() == 0 && runs.size() > 1) {
        runs.pop_back();
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i] < 0) {
            throw MaskFormatError("negative run length at index " + std::to_string(i));
        }
        if (i > 0 && runs[i] == 0) {
            throw MaskFormatError("zero-length interior run at index " + std::to_string(i));
        }
    }
    if (run_sum(runs) != total) {
        throw MaskFormatError("run lengths sum to " + std::to_string(run_sum(runs)) +
                              ", expected " + std::to_string(total));
    }
    if (total == 0) {
        runs.clear();
    }
    BinaryMask m;
    m.height_ = height;
    m.width_ = width;
    m.runs_ = std::move(runs);
    for (std::size_t i = 1; i < m.runs_.size(); i += 2) {
        m.area_ += m.runs_[i];
    }
    return m;
}

BinaryMask BinaryMask::from_bitmap(int height, int width, const std::vector<std::uint8_t>& bits) {
    const std::int64_t total = static_cast<std::int64_t>(height) * width;
    if (static_cast<std::int64_t>(bits.size()) != total) {
        throw MaskFormatError("bitmap size does not match dimensions");
    }
    std::vector<std::int64_t> runs;
    bool current = false;  // first run counts background
    std::int64_t len = 0;
    for (std::int64_t i = 0; i < total; ++i) {
        const bool fg = bits[i] != 0;
        if (fg == current) {
            ++len;
        } else {
            runs.push_back(len);
            current = fg;
            len = 1;
        }
    }
    if (total > 0) {
        runs.push_back(len);
    }
    return from_runs(height, width, std::move(runs));
}

BinaryMask BinaryMask::filled(int height, int width, bool foreground) {
    const std::int64_t total = static_cast<std::int64_t>(height) * width;
    std::vector<std::int64_t> runs;
    if (total > 0) {
        runs = foreground ? std::vector<std::int64_t>{0, total} : std::vector<std::int64_t>{total};
    }
    return from_runs(height, width, std::move(runs));
}

std::vector<std::uint8_t> BinaryMask::to_bitmap() const {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(total_pixels()), 0);
    std::int64_t pos = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
        if (i % 2 == 1) {
            std::fill(bits.begin() + pos, bits.begin() + pos + runs_[i], std::uint8_t{1});
        }
        pos += runs_[i];
    }
    return bits;
}

bool BinaryMask::at(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) {
        throw OutOfBoundsError("pixel (" + std::to_string(x) + "," + std::to_string(y) +
                               ") outside " + std::to_string(height_) + "x" +
                               std::to_string(width_) + " mask");
    }
    const std::int64_t index = static_cast<std::int64_t>(y) * width_ + x;
    std::int64_t pos = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
        pos += runs_[i];
        if (index < pos) {
            return i % 2 == 1;
        }
    }
    return false;
}

double bbox_iou(const BBox& a, const BBox& b) {
    const int ix1 = std::max(a.x1, b.x1);
    const int iy1 = std::max(a.y1, b.y1);
    const int ix2 = std::min(a.x2, b.x2);
    const int iy2 = std::min(a.y2, b.y2);
    if (ix1 > ix2 || iy1 > iy2) {
        return 0.0;
    }
    const std::int64_t inter =
        static_cast<std::int64_t>(ix2 - ix1 + 1) * static_cast<std::int64_t>(iy2 - iy1 + 1);
    const std::int64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double bbox_l1(const BBox& a, const BBox& b) {
    const double sum = std::abs(a.x1 - b.x1) + std::abs(a.y1 - b.y1) + std::abs(a.x2 - b.x2) +
                       std::abs(a.y2 - b.y2);
    return sum / 4.0;
}

int point_l1(const LabeledPoint& p, const LabeledPoint& q) {
    return std::abs(p.x - q.x) + std::abs(p.y - q.y);
}

BBox mask_to_bbox(const BinaryMask& m) {
    if (!m.has_foreground()) {
        throw EmptyMaskError("mask_to_bbox: mask has no foreground");
    }
    BBox box{m.width() - 1, m.height() - 1, 0, 0};
    m.for_each_foreground([&](int x, int y) {
        box.x1 = std::min(box.x1, x);
        box.y1 = std::min(box.y1, y);
        box.x2 = std::max(box.x2, x);
        box.y2 = std::max(box.y2, y);
    });
    return box;
}

LabeledPoint mask_centroid(const BinaryMask& m) {
    if (!m.has_foreground()) {
        throw EmptyMaskError("mask_centroid: mask has no foreground");
    }
    std::int64_t sum_x = 0;
    std::int64_t sum_y = 0;
    m.for_each_foreground([&](int x, int y) {
        sum_x += x;
        sum_y += y;
    });
    const double n = static_cast<double>(m.foreground_area());
    const int cx = static_cast<int>(std::llround(sum_x / n));
    const int cy = static_cast<int>(std::llround(sum_y / n));
    if (m.at(cx, cy)) {
        return LabeledPoint{cx, cy, 1};
    }
    // Concave mask: snap to the closest foreground pixel, first in row-major
    // order on ties.
    LabeledPoint best{0, 0, 1};
    int best_dist = std::numeric_limits<int>::max();
    m.for_each_foreground([&](int x, int y) {
        const int d = std::abs(x - cx) + std::abs(y - cy);
        if (d < best_dist) {
            best_dist = d;
            best = LabeledPoint{x, y, 1};
        }
    });
    return best;
}

std::vector<int> manhattan_distance_field(const BinaryMask& m) {
    if (!m.has_foreground()) {
        throw EmptyMaskError("manhattan_distance_field: mask has no foreground");
    }
    const int h = m.height();
    const int w = m.width();
    const int inf = std::numeric_limits<int>::max() / 2;
    std::vector<int> dist(static_cast<std::size_t>(h) * w, inf);
    m.for_each_foreground([&](int x, int y) { dist[static_cast<std::size_t>(y) * w + x] = 0; });
    // Two raster passes give the exact L1 distance transform.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int& d = dist[static_cast<std::size_t>(y) * w + x];
            if (y > 0) d = std::min(d, dist[static_cast<std::size_t>(y - 1) * w + x] + 1);
            if (x > 0) d = std::min(d, dist[static_cast<std::size_t>(y) * w + x - 1] + 1);
        }
    }
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            int& d = dist[static_cast<std::size_t>(y) * w + x];
            if (y + 1 < h) d = std::min(d, dist[static_cast<std::size_t>(y + 1) * w + x] + 1);
            if (x + 1 < w) d = std::min(d, dist[static_cast<std::size_t>(y) * w + x + 1] + 1);
        }
    }
    return dist;
}

int signed_distance_to_masks(const LabeledPoint& p, const std::vector<BinaryMask>& masks) {
    if (masks.empty()) {
        throw EmptyMaskError("signed_distance_to_masks: no masks given");
    }
    const int h = masks.front().height();
    const int w = masks.front().width();
    for (const auto& m : masks) {
        if (m.height() != h || m.width() != w) {
            throw DimensionMismatchError("signed_distance_to_masks: mask dimensions differ");
        }
        if (!m.has_foreground()) {
            throw EmptyMaskError("signed_distance_to_masks: mask has no foreground");
        }
    }
    if (p.x < 0 || p.y < 0 || p.x >= w || p.y >= h) {
        throw OutOfBoundsError("signed_distance_to_masks: point outside mask");
    }
    int best = std::numeric_limits<int>::max();
    for (const auto& m : masks) {
        if (m.at(p.x, p.y)) {
            return 0;
        }
        const auto dist = manhattan_distance_field(m);
        best = std::min(best, dist[static_cast<std::size_t>(p.y) * w + p.x]);
    }
    return best;
}

std::pair<std::int64_t, std::int64_t> mask_overlap(const BinaryMask& a, const BinaryMask& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw DimensionMismatchError("mask_overlap: dimensions differ");
    }
    const auto ba = a.to_bitmap();
    const auto bb = b.to_bitmap();
    std::int64_t inter = 0;
    std::int64_t uni = 0;
    for (std::size_t i = 0; i < ba.size(); ++i) {
        inter += ba[i] & bb[i];
        uni += ba[i] | bb[i];
    }
    return {inter, uni};
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    const auto [inter, uni] = mask_overlap(a, b);
    if (uni == 0) {
        return 1.0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask mask_union(const std::vector<BinaryMask>& masks) {
    if (masks.empty()) {
        throw EmptyMaskError("mask_union: no masks given");
    }
    const int h = masks.front().height();
    const int w = masks.front().width();
    auto bits = masks.front().to_bitmap();
    for (std::size_t i = 1; i < masks.size(); ++i) {
        if (masks[i].height() != h || masks[i].width() != w) {
            throw DimensionMismatchError("mask_union: dimensions differ");
        }
        const auto other = masks[i].to_bitmap();
        for (std::size_t j = 0; j < bits.size(); ++j) {
            bits[j] |= other[j];
        }
    }
    return BinaryMask::from_bitmap(h, w, bits);
}

}  // namespace rvos
