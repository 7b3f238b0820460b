#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rvos/errors.hpp"

namespace rvos {

struct VideoMeta {
    int num_frames = 1;
    int height = 0;
    int width = 0;
    std::optional<double> fps;
};

/// Inclusive frame interval.
struct KeySegment {
    int start = 0;
    int end = 0;

    int length() const { return end - start + 1; }
    bool contains(int frame) const { return frame >= start && frame <= end; }
    bool operator==(const KeySegment&) const = default;
};

enum class ReferenceStrategy { global, local, adaptive };

struct SamplerConfig {
    double delta = 0.3;
    int k_interval_samples = 5;
    int m_percent_samples = 5;
    int t_ref = 12;
    ReferenceStrategy strategy = ReferenceStrategy::adaptive;
    int max_rounds = 8;
};

struct SamplingPlan {
    KeySegment key_segment;
    int target_frame = 0;
    std::vector<int> reference_frames;
    int rounds_used = 0;
};

/// The temporal-localization backend seam. Implementations answer interval
/// queries (coarse rounds) and percentage queries (fine round) for a video
/// and referring expression, restricted to the given segment.
class TemporalLocalizer {
public:
    virtual ~TemporalLocalizer() = default;

    virtual KeySegment localize_interval(const std::string& video_id, const std::string& query,
                                         const KeySegment& segment, int num_frames) = 0;
    virtual double localize_percent(const std::string& video_id, const std::string& query,
                                    const KeySegment& segment, int num_frames) = 0;
};

/// Componentwise mean of the intervals, rounded half-up and clamped into
/// [0, T-1] with end >= start. Throws EmptyIntervalListError,
/// InvalidIntervalError.
KeySegment aggregate_intervals(const std::vector<std::pair<int, int>>& intervals, int num_frames);

/// Coarse-to-fine narrowing: queries the localizer k times per round and
/// aggregates, repeating while the segment is longer than delta * T. A round
/// that fails to strictly shrink the segment triggers a center crop to
/// ceil(delta * T) frames. Returns the segment and the number of rounds
/// used; the result never exceeds max(ceil(delta * T), 1) frames.
std::pair<KeySegment, int> refine_key_segment(const VideoMeta& meta, TemporalLocalizer& localizer,
                                              const std::string& video_id,
                                              const std::string& query, const SamplerConfig& cfg);

/// start + floor(T_key * mean(percentages)), clamped to the segment end.
/// Throws EmptyPercentagesError, PercentOutOfRangeError.
int locate_target_frame(const KeySegment& seg, const std::vector<double>& percentages);

/// Reference frames outside the key segment. Global spaces t_ref picks
/// evenly over the remaining frames; local takes up to 3 frames per side,
/// nearest first; adaptive mixes floor(t_ref/3) global with local, padding
/// from the global order. Never returns duplicates; short lists are normal
/// on small videos.
std::vector<int> sample_references(const VideoMeta& meta, const KeySegment& seg,
                                   const SamplerConfig& cfg);

/// Full sampler pass: refine, percentage-vote the target frame, pick
/// references. Single-frame videos skip all localizer traffic.
SamplingPlan build_sampling_plan(const VideoMeta& meta, TemporalLocalizer& localizer,
                                 const std::string& video_id, const std::string& query,
                                 const SamplerConfig& cfg);

}  // namespace rvos
