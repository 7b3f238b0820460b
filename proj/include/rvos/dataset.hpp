#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rvos/difficulty.hpp"
#include "rvos/errors.hpp"
#include "rvos/geometry.hpp"
#include "rvos/sampler.hpp"

namespace rvos {

struct VideoInfo {
    std::string id;
    std::filesystem::path dir;
    int num_frames = 1;
    int height = 0;
    int width = 0;
    std::optional<double> fps;
    /// Object ids found under masks/, sorted.
    std::vector<std::string> object_ids;
};

struct Query {
    std::string id;
    std::string video_id;
    std::string expression;
    std::vector<std::string> gt_object_ids;
    /// Annotated frame the expression refers to, when the dataset provides one.
    std::optional<int> target_frame;
};

/// Validated on load; mask pixels decode lazily through gt_mask.
struct Dataset {
    std::filesystem::path root;
    std::map<std::string, VideoInfo> videos;
    std::vector<Query> queries;
    std::map<std::string, DifficultyScores> difficulty;

    /// Throws ManifestError for an unknown id.
    const VideoInfo& video(const std::string& id) const;
    std::optional<DifficultyScores> difficulty_for(const std::string& query_id) const;

    /// Throws ManifestError, OutOfBoundsError, MissingFrameError,
    /// MaskFormatError (also when the file disagrees with the manifest
    /// dimensions).
    BinaryMask gt_mask(const std::string& video_id, const std::string& object_id,
                       int frame) const;
    std::vector<BinaryMask> gt_mask_sequence(const std::string& video_id,
                                             const std::string& object_id) const;
};

VideoMeta to_video_meta(const VideoInfo& info);

/// Loads manifest.json, queries.jsonl, and the optional difficulty.jsonl,
/// checking that every referenced video and object exists and that each
/// object directory covers every frame. Throws ManifestError or
/// MissingFrameError naming the offending path.
Dataset ingest_dataset(const std::filesystem::path& root);

}  // namespace rvos
