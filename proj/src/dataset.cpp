#include "rvos/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rvos/mask_json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rvos {

namespace {

std::string frame_stem(int frame_index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", frame_index);
    return buf;
}

json parse_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ManifestError(path.string() + ": " + e.what());
    }
}

/// Non-empty lines of a JSONL file, with 1-based line numbers.
std::vector<std::pair<int, json>> parse_jsonl_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot open " + path.string());
    std::vector<std::pair<int, json>> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.emplace_back(line_no, json::parse(line));
        } catch (const json::exception& e) {
            throw ManifestError(path.string() + ":" + std::to_string(line_no) + ": " +
                                e.what());
        }
    }
    return out;
}

int require_positive_int(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number_integer()) {
        throw ManifestError(where + ": missing integer field '" + key + "'");
    }
    const int v = obj[key].get<int>();
    if (v <= 0) throw ManifestError(where + ": '" + std::string(key) + "' must be positive");
    return v;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw ManifestError(where + ": missing string field '" + key + "'");
    }
    return obj[key].get<std::string>();
}

VideoInfo load_video(const fs::path& root, const std::string& id, const json& entry,
                     const std::string& where) {
    VideoInfo info;
    info.id = id;
    info.dir = root / id;
    info.num_frames = require_positive_int(entry, "num_frames", where);
    info.height = require_positive_int(entry, "height", where);
    info.width = require_positive_int(entry, "width", where);
    if (entry.contains("fps")) {
        if (!entry["fps"].is_number()) throw ManifestError(where + ": 'fps' must be a number");
        info.fps = entry["fps"].get<double>();
    }
    if (!fs::is_directory(info.dir)) {
        throw ManifestError("video directory missing: " + info.dir.string());
    }

    // Frame images are only consumed by live backends, so their presence is
    // optional, but a frames/ directory that exists must be complete.
    const fs::path frames = info.dir / "frames";
    if (fs::is_directory(frames)) {
        for (int t = 0; t < info.num_frames; ++t) {
            const fs::path png = frames / (frame_stem(t) + ".png");
            const fs::path pgm = frames / (frame_stem(t) + ".pgm");
            if (!fs::exists(png) && !fs::exists(pgm)) {
                throw MissingFrameError("frame image missing: " + png.string());
            }
        }
    }

    const fs::path masks = info.dir / "masks";
    if (fs::is_directory(masks)) {
        for (const auto& entry_it : fs::directory_iterator(masks)) {
            if (entry_it.is_directory()) info.object_ids.push_back(entry_it.path().filename());
        }
        std::sort(info.object_ids.begin(), info.object_ids.end());
        for (const auto& obj : info.object_ids) {
            for (int t = 0; t < info.num_frames; ++t) {
                const fs::path p = masks / obj / mask_frame_filename(t);
                if (!fs::exists(p)) throw MissingFrameError("mask missing: " + p.string());
            }
        }
    }
    return info;
}

DifficultyScores parse_score_entry(const json& entry, const std::string& where) {
    static constexpr const char* kAspects[5] = {"scene", "segmentation", "temporal", "motion",
                                                "language"};
    DifficultyScores scores{};
    for (std::size_t i = 0; i < 5; ++i) {
        if (!entry.contains(kAspects[i]) || !entry[kAspects[i]].is_number_integer()) {
            throw ManifestError(where + ": missing integer field '" + kAspects[i] + "'");
        }
        scores[i] = entry[kAspects[i]].get<int>();
        if (scores[i] < 1 || scores[i] > 10) {
            throw ManifestError(where + ": '" + kAspects[i] + "' outside 1..10");
        }
    }
    return scores;
}

}  // namespace

const VideoInfo& Dataset::video(const std::string& id) const {
    const auto it = videos.find(id);
    if (it == videos.end()) throw ManifestError("unknown video id: " + id);
    return it->second;
}

std::optional<DifficultyScores> Dataset::difficulty_for(const std::string& query_id) const {
    const auto it = difficulty.find(query_id);
    if (it == difficulty.end()) return std::nullopt;
    return it->second;
}

BinaryMask Dataset::gt_mask(const std::string& video_id, const std::string& object_id,
                            int frame) const {
    const VideoInfo& v = video(video_id);
    if (std::find(v.object_ids.begin(), v.object_ids.end(), object_id) == v.object_ids.end()) {
        throw ManifestError("unknown object id '" + object_id + "' in video " + video_id);
    }
    if (frame < 0 || frame >= v.num_frames) {
        throw OutOfBoundsError("frame " + std::to_string(frame) + " outside 0.." +
                               std::to_string(v.num_frames - 1) + " of video " + video_id);
    }
    const fs::path path = v.dir / "masks" / object_id / mask_frame_filename(frame);
    BinaryMask m = read_mask_file(path);
    if (m.height() != v.height || m.width() != v.width) {
        throw MaskFormatError(path.string() + ": mask is " + std::to_string(m.height()) + "x" +
                              std::to_string(m.width()) + " but the manifest declares " +
                              std::to_string(v.height) + "x" + std::to_string(v.width));
    }
    return m;
}

std::vector<BinaryMask> Dataset::gt_mask_sequence(const std::string& video_id,
                                                  const std::string& object_id) const {
    const VideoInfo& v = video(video_id);
    std::vector<BinaryMask> seq;
    seq.reserve(v.num_frames);
    for (int t = 0; t < v.num_frames; ++t) seq.push_back(gt_mask(video_id, object_id, t));
    return seq;
}

VideoMeta to_video_meta(const VideoInfo& info) {
    VideoMeta meta;
    meta.num_frames = info.num_frames;
    meta.height = info.height;
    meta.width = info.width;
    meta.fps = info.fps;
    return meta;
}

Dataset ingest_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw ManifestError("dataset root missing: " + root.string());
    const fs::path manifest_path = root / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw ManifestError("manifest missing: " + manifest_path.string());
    }

    Dataset ds;
    ds.root = root;

    const json manifest = parse_json_file(manifest_path);
    if (!manifest.is_object() || !manifest.contains("videos") ||
        !manifest["videos"].is_object()) {
        throw ManifestError(manifest_path.string() + ": expected top-level 'videos' object");
    }
    for (const auto& [id, entry] : manifest["videos"].items()) {
        const std::string where = manifest_path.string() + ": video '" + id + "'";
        ds.videos.emplace(id, load_video(root, id, entry, where));
    }

    const fs::path queries_path = root / "queries.jsonl";
    if (!fs::exists(queries_path)) {
        throw ManifestError("queries missing: " + queries_path.string());
    }
    std::set<std::string> seen_ids;
    for (const auto& [line_no, doc] : parse_jsonl_file(queries_path)) {
        const std::string where = queries_path.string() + ":" + std::to_string(line_no);
        Query q;
        q.id = require_string(doc, "id", where);
        q.video_id = require_string(doc, "video_id", where);
        q.expression = require_string(doc, "expression", where);
        if (!seen_ids.insert(q.id).second) {
            throw ManifestError(where + ": duplicate query id '" + q.id + "'");
        }
        const auto vit = ds.videos.find(q.video_id);
        if (vit == ds.videos.end()) {
            throw ManifestError(where + ": unknown video id '" + q.video_id + "'");
        }
        if (!doc.contains("gt_object_ids") || !doc["gt_object_ids"].is_array()) {
            throw ManifestError(where + ": missing array field 'gt_object_ids'");
        }
        for (const auto& obj : doc["gt_object_ids"]) {
            if (!obj.is_string()) {
                throw ManifestError(where + ": 'gt_object_ids' entries must be strings");
            }
            const std::string obj_id = obj.get<std::string>();
            const auto& known = vit->second.object_ids;
            if (std::find(known.begin(), known.end(), obj_id) == known.end()) {
                throw ManifestError(where + ": object '" + obj_id + "' not found under " +
                                    (vit->second.dir / "masks").string());
            }
            q.gt_object_ids.push_back(obj_id);
        }
        if (doc.contains("target_frame")) {
            if (!doc["target_frame"].is_number_integer()) {
                throw ManifestError(where + ": 'target_frame' must be an integer");
            }
            const int tf = doc["target_frame"].get<int>();
            if (tf < 0 || tf >= vit->second.num_frames) {
                throw ManifestError(where + ": 'target_frame' outside 0.." +
                                    std::to_string(vit->second.num_frames - 1));
            }
            q.target_frame = tf;
        }
        ds.queries.push_back(std::move(q));
    }

    const fs::path difficulty_path = root / "difficulty.jsonl";
    if (fs::exists(difficulty_path)) {
        for (const auto& [line_no, doc] : parse_jsonl_file(difficulty_path)) {
            const std::string where = difficulty_path.string() + ":" + std::to_string(line_no);
            const std::string qid = require_string(doc, "query_id", where);
            if (!seen_ids.count(qid)) {
                throw ManifestError(where + ": unknown query id '" + qid + "'");
            }
            ds.difficulty[qid] = parse_score_entry(doc, where);
        }
    }
    return ds;
}

}  // namespace rvos
