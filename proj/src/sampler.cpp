#include "rvos/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace rvos {

namespace {

int clamp_frame(int frame, int lo, int hi) {
    return std::clamp(frame, lo, hi);
}

// Round-half-up of sum/count in exact integer arithmetic.
int rounded_mean(long long sum, long long count) {
    return static_cast<int>((2 * sum + count) / (2 * count));
}

KeySegment center_crop(const KeySegment& seg, int target_length) {
    if (seg.length() <= target_length) {
        return seg;
    }
    const int start = seg.start + (seg.length() - target_length) / 2;
    return {start, start + target_length - 1};
}

std::vector<int> global_candidates(int num_frames, const KeySegment& seg) {
    std::vector<int> out;
    for (int f = 0; f < num_frames; ++f) {
        if (!seg.contains(f)) {
            out.push_back(f);
        }
    }
    return out;
}

// Evenly spaced picks over the candidate list, ascending.
std::vector<int> spaced_picks(const std::vector<int>& candidates, int want) {
    const int n = static_cast<int>(candidates.size());
    const int k = std::min(want, n);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        out.push_back(candidates[static_cast<std::size_t>(
            static_cast<long long>(i) * n / k)]);
    }
    return out;
}

// Up to 3 frames per side of the segment, nearest first, before-side first.
std::vector<int> local_candidates(int num_frames, const KeySegment& seg) {
    std::vector<int> out;
    for (int d = 1; d <= 3; ++d) {
        const int before = seg.start - d;
        const int after = seg.end + d;
        if (before >= 0) out.push_back(before);
        if (after < num_frames) out.push_back(after);
    }
    return out;
}

}  // namespace

KeySegment aggregate_intervals(const std::vector<std::pair<int, int>>& intervals,
                               int num_frames) {
    if (intervals.empty()) {
        throw EmptyIntervalListError("no intervals to aggregate");
    }
    long long start_sum = 0;
    long long end_sum = 0;
    for (const auto& [start, end] : intervals) {
        if (start < 0 || start > end || end >= num_frames) {
            throw InvalidIntervalError("interval (" + std::to_string(start) + ", " +
                                       std::to_string(end) + ") is outside 0.." +
                                       std::to_string(num_frames - 1));
        }
        start_sum += start;
        end_sum += end;
    }
    const auto count = static_cast<long long>(intervals.size());
    KeySegment seg;
    seg.start = clamp_frame(rounded_mean(start_sum, count), 0, num_frames - 1);
    seg.end = clamp_frame(rounded_mean(end_sum, count), 0, num_frames - 1);
    seg.end = std::max(seg.start, seg.end);
    return seg;
}

std::pair<KeySegment, int> refine_key_segment(const VideoMeta& meta, TemporalLocalizer& localizer,
                                              const std::string& video_id,
                                              const std::string& query, const SamplerConfig& cfg) {
    const int T = meta.num_frames;
    if (T <= 1) {
        return {{0, 0}, 0};
    }
    const double threshold = cfg.delta * static_cast<double>(T);
    const int cap = std::max(static_cast<int>(std::ceil(threshold)), 1);

    KeySegment seg{0, T - 1};
    int rounds = 0;
    while (seg.length() > threshold && rounds < cfg.max_rounds) {
        std::vector<std::pair<int, int>> intervals;
        intervals.reserve(static_cast<std::size_t>(cfg.k_interval_samples));
        for (int i = 0; i < cfg.k_interval_samples; ++i) {
            auto got = localizer.localize_interval(video_id, query, seg, T);
            // Defensive clamp: backends validate their own output, but the
            // aggregate must stay inside the segment being narrowed.
            got.start = clamp_frame(got.start, seg.start, seg.end);
            got.end = clamp_frame(got.end, seg.start, seg.end);
            intervals.emplace_back(got.start, std::max(got.start, got.end));
        }
        ++rounds;
        auto refined = aggregate_intervals(intervals, T);
        refined.start = clamp_frame(refined.start, seg.start, seg.end);
        refined.end = clamp_frame(refined.end, seg.start, seg.end);
        refined.end = std::max(refined.start, refined.end);
        if (refined.length() >= seg.length()) {
            seg = center_crop(seg, cap);
            break;
        }
        seg = refined;
    }
    return {center_crop(seg, cap), rounds};
}

int locate_target_frame(const KeySegment& seg, const std::vector<double>& percentages) {
    if (percentages.empty()) {
        throw EmptyPercentagesError("no percentage samples");
    }
    double sum = 0.0;
    for (const double p : percentages) {
        if (p < 0.0 || p > 1.0) {
            throw PercentOutOfRangeError("percentage " + std::to_string(p) +
                                         " is outside [0, 1]");
        }
        sum += p;
    }
    const double mean = sum / static_cast<double>(percentages.size());
    const int offset = static_cast<int>(std::floor(static_cast<double>(seg.length()) * mean));
    return std::min(seg.start + offset, seg.end);
}

std::vector<int> sample_references(const VideoMeta& meta, const KeySegment& seg,
                                   const SamplerConfig& cfg) {
    if (cfg.t_ref <= 0) {
        return {};
    }
    const auto global = global_candidates(meta.num_frames, seg);
    switch (cfg.strategy) {
        case ReferenceStrategy::global:
            return spaced_picks(global, cfg.t_ref);
        case ReferenceStrategy::local: {
            auto local = local_candidates(meta.num_frames, seg);
            if (static_cast<int>(local.size()) > cfg.t_ref) {
                local.resize(static_cast<std::size_t>(cfg.t_ref));
            }
            return local;
        }
        case ReferenceStrategy::adaptive:
            break;
    }
    const int global_share = cfg.t_ref / 3;
    auto picks = spaced_picks(global, global_share);
    const auto local = local_candidates(meta.num_frames, seg);
    int local_budget = cfg.t_ref - global_share;
    for (const int f : local) {
        if (local_budget <= 0 || static_cast<int>(picks.size()) >= cfg.t_ref) break;
        if (std::find(picks.begin(), picks.end(), f) == picks.end()) {
            picks.push_back(f);
            --local_budget;
        }
    }
    for (const int f : global) {
        if (static_cast<int>(picks.size()) >= cfg.t_ref) break;
        if (std::find(picks.begin(), picks.end(), f) == picks.end()) {
            picks.push_back(f);
        }
    }
    return picks;
}

SamplingPlan build_sampling_plan(const VideoMeta& meta, TemporalLocalizer& localizer,
                                 const std::string& video_id, const std::string& query,
                                 const SamplerConfig& cfg) {
    SamplingPlan plan;
    if (meta.num_frames <= 1) {
        plan.key_segment = {0, 0};
        plan.target_frame = 0;
        return plan;
    }
    auto [seg, rounds] = refine_key_segment(meta, localizer, video_id, query, cfg);
    plan.key_segment = seg;
    plan.rounds_used = rounds;

    std::vector<double> percentages;
    percentages.reserve(static_cast<std::size_t>(cfg.m_percent_samples));
    for (int i = 0; i < cfg.m_percent_samples; ++i) {
        percentages.push_back(localizer.localize_percent(video_id, query, seg, meta.num_frames));
    }
    plan.target_frame = locate_target_frame(seg, percentages);
    plan.reference_frames = sample_references(meta, seg, cfg);
    return plan;
}

}  // namespace rvos
