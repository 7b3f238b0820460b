#include <algorithm>
#include <limits>

#include "rvos/backends.hpp"
#include "rvos/difficulty.hpp"

using nlohmann::json;

namespace rvos {

namespace {

const Query* find_query(const Dataset& ds, const std::string& video_id,
                        const std::string& query_text) {
    for (const auto& q : ds.queries) {
        if (q.video_id == video_id && q.expression == query_text) return &q;
    }
    return nullptr;
}

/// Annotated target frame, or the frame where the query's objects cover
/// the most pixels (lowest index on ties).
int resolve_target_frame(const Dataset& ds, const Query& q) {
    if (q.target_frame) return *q.target_frame;
    const VideoInfo& v = ds.video(q.video_id);
    int best_frame = 0;
    std::int64_t best_area = -1;
    for (int t = 0; t < v.num_frames; ++t) {
        std::int64_t area = 0;
        for (const auto& obj : q.gt_object_ids) {
            area += ds.gt_mask(q.video_id, obj, t).foreground_area();
        }
        if (area > best_area) {
            best_area = area;
            best_frame = t;
        }
    }
    return best_frame;
}

/// Background point at the largest Manhattan distance <= 20 from the
/// object, preferring points outside every ground-truth mask; row-major
/// order breaks ties.
LabeledPoint pick_negative_point(const BinaryMask& object_mask,
                                 const std::vector<BinaryMask>& all_masks) {
    const auto dist = manhattan_distance_field(object_mask);
    std::vector<std::uint8_t> occupied(dist.size(), 0);
    for (const auto& m : all_masks) {
        m.for_each_foreground([&](int x, int y) {
            occupied[static_cast<std::size_t>(y) * object_mask.width() + x] = 1;
        });
    }
    const int w = object_mask.width();
    LabeledPoint clear_best{0, 0, 0};
    LabeledPoint any_best{0, 0, 0};
    int clear_d = 0;
    int any_d = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const int d = dist[i];
        if (d <= 0 || d > 20) continue;
        const LabeledPoint p{static_cast<int>(i % w), static_cast<int>(i / w), 0};
        if (d > any_d) {
            any_d = d;
            any_best = p;
        }
        if (!occupied[i] && d > clear_d) {
            clear_d = d;
            clear_best = p;
        }
    }
    return clear_d > 0 ? clear_best : any_best;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

struct OracleReasoner : Reasoner {
    const Dataset& ds;
    OracleReasoner(const Dataset& ds) : ds(ds) {}

    std::string reason(const ReasonRequest& r) override {
        const Query* q = find_query(ds, r.video_id, r.query);
        if (!q) throw NoCandidateError("no fixture query matches '" + r.query + "'");
        std::vector<BinaryMask> masks;
        for (const auto& obj : q->gt_object_ids) {
            masks.push_back(ds.gt_mask(q->video_id, obj, r.target_frame));
        }
        std::vector<ObjectPrediction> preds;
        for (const auto& m : masks) {
            if (!m.has_foreground()) continue;
            ObjectPrediction p;
            p.bbox = mask_to_bbox(m);
            p.point_pos = mask_centroid(m);
            p.point_neg = pick_negative_point(m, masks);
            preds.push_back(p);
        }
        std::string think = "Scanning " + std::to_string(r.key_segment.length()) +
                            " key frames for '" + r.query + "'. The target is clearest at frame " +
                            std::to_string(r.target_frame) + ".";
        return "<think>" + think + "</think>\n<answer>" + serialize_answer(preds) + "</answer>";
    }
};

struct OracleSegmenter : Segmenter {
    const Dataset& ds;
    OracleSegmenter(const Dataset& ds) : ds(ds) {}

    BinaryMask segment(const SegmentRequest& r) override {
        const VideoInfo& v = ds.video(r.video_id);
        BinaryMask best;
        double best_iou = -1.0;
        for (const auto& obj : v.object_ids) {
            BinaryMask m = ds.gt_mask(r.video_id, obj, r.frame);
            if (!m.has_foreground()) continue;
            const double iou = bbox_iou(r.prompts.bbox, mask_to_bbox(m));
            if (iou > best_iou) {
                best_iou = iou;
                best = std::move(m);
            }
        }
        if (best_iou < 0.0) {
            throw NoCandidateError("no object with foreground at frame " +
                                   std::to_string(r.frame) + " of " + r.video_id);
        }
        return best;
    }
};

struct OraclePropagator : Propagator {
    const Dataset& ds;
    OraclePropagator(const Dataset& ds) : ds(ds) {}

    std::vector<BinaryMask> propagate(const PropagateRequest& r) override {
        const VideoInfo& v = ds.video(r.video_id);
        if (v.object_ids.empty()) {
            throw NoCandidateError("video " + r.video_id + " has no objects");
        }
        std::string best_obj;
        double best_iou = -1.0;
        for (const auto& obj : v.object_ids) {
            const double iou = mask_iou(r.seed_mask, ds.gt_mask(r.video_id, obj, r.seed_frame));
            if (iou > best_iou) {
                best_iou = iou;
                best_obj = obj;
            }
        }
        return ds.gt_mask_sequence(r.video_id, best_obj);
    }
};

struct OracleLocalizer : TemporalLocalizer {
    const Dataset& ds;
    OracleConfig cfg;
    OracleLocalizer(const Dataset& ds, const OracleConfig& cfg) : ds(ds), cfg(cfg) {}

    int jittered_target(const std::string& video_id, const std::string& query,
                        const KeySegment& segment, int num_frames) const {
        const Query* q = find_query(ds, video_id, query);
        if (!q) throw NoCandidateError("no fixture query matches '" + query + "'");
        int tgt = resolve_target_frame(ds, *q);
        if (cfg.jitter > 0) {
            std::uint64_t h = mix(cfg.seed, fnv1a64(video_id));
            h = mix(h, fnv1a64(query));
            h = mix(h, static_cast<std::uint64_t>(segment.start));
            h = mix(h, static_cast<std::uint64_t>(segment.end));
            const int span = 2 * cfg.jitter + 1;
            tgt += static_cast<int>(h % span) - cfg.jitter;
            tgt = std::clamp(tgt, 0, num_frames - 1);
        }
        return tgt;
    }

    KeySegment localize_interval(const std::string& video_id, const std::string& query,
                                 const KeySegment& segment, int num_frames) override {
        const int tgt = jittered_target(video_id, query, segment, num_frames);
        return {std::clamp(tgt - cfg.interval_halfwidth, segment.start, segment.end),
                std::clamp(tgt + cfg.interval_halfwidth, segment.start, segment.end)};
    }

    double localize_percent(const std::string& video_id, const std::string& query,
                            const KeySegment& segment, int num_frames) override {
        const int tgt = jittered_target(video_id, query, segment, num_frames);
        const double p = static_cast<double>(tgt - segment.start) / segment.length();
        return std::clamp(p, 0.0, 1.0);
    }
};

struct OracleScorer : DifficultyScorer {
    const Dataset& ds;
    OracleScorer(const Dataset& ds) : ds(ds) {}

    std::string score_difficulty(const std::string& prompt) override {
        // The rendered prompt embeds the query text verbatim, which is
        // enough to look the annotation back up.
        DifficultyScores scores{5, 5, 5, 5, 5};
        for (const auto& q : ds.queries) {
            if (!q.expression.empty() && prompt.find(q.expression) != std::string::npos) {
                if (const auto annotated = ds.difficulty_for(q.id)) scores = *annotated;
                break;
            }
        }
        nlohmann::ordered_json doc;
        static constexpr const char* kAspects[5] = {"scene", "segmentation", "temporal",
                                                    "motion", "language"};
        for (std::size_t i = 0; i < 5; ++i) doc[kAspects[i]] = scores[i];
        return doc.dump();
    }
};

}  // namespace

BackendSet make_oracle_backends(const Dataset& ds, const OracleConfig& cfg) {
    BackendSet set;
    set.reasoner = std::make_unique<OracleReasoner>(ds);
    set.segmenter = std::make_unique<OracleSegmenter>(ds);
    set.propagator = std::make_unique<OraclePropagator>(ds);
    set.localizer = std::make_unique<OracleLocalizer>(ds, cfg);
    set.scorer = std::make_unique<OracleScorer>(ds);
    return set;
}

}  // namespace rvos
