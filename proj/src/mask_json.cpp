#include "rvos/mask_json.hpp"

#include <cstdio>
#include <fstream>

namespace rvos {

nlohmann::ordered_json mask_to_json(const BinaryMask& m) {
    nlohmann::ordered_json doc;
    doc["height"] = m.height();
    doc["width"] = m.width();
    doc["runs"] = m.runs();
    return doc;
}

BinaryMask mask_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("height") || !doc.contains("width") ||
        !doc.contains("runs")) {
        throw MaskFormatError("mask document must contain height, width, runs");
    }
    if (!doc["height"].is_number_integer() || !doc["width"].is_number_integer() ||
        !doc["runs"].is_array()) {
        throw MaskFormatError("mask document has wrong field types");
    }
    std::vector<std::int64_t> runs;
    runs.reserve(doc["runs"].size());
    for (const auto& r : doc["runs"]) {
        if (!r.is_number_integer()) {
            throw MaskFormatError("run lengths must be integers");
        }
        runs.push_back(r.get<std::int64_t>());
    }
    return BinaryMask::from_runs(doc["height"].get<int>(), doc["width"].get<int>(),
                                 std::move(runs));
}

std::string mask_frame_filename(int frame_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%05d.mask.json", frame_index);
    return buf;
}

BinaryMask read_mask_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MissingFrameError("missing mask file: " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
        return mask_from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw MaskFormatError(path.string() + ": " + e.what());
    } catch (const MaskFormatError& e) {
        throw MaskFormatError(path.string() + ": " + e.what());
    }
}

void write_mask_file(const std::filesystem::path& path, const BinaryMask& m) {
    std::ofstream out(path);
    out << mask_to_json(m).dump() << '\n';
}

std::vector<BinaryMask> read_mask_archive(const std::filesystem::path& dir, int num_frames) {
    std::vector<BinaryMask> masks;
    masks.reserve(static_cast<std::size_t>(num_frames));
    for (int t = 0; t < num_frames; ++t) {
        masks.push_back(read_mask_file(dir / mask_frame_filename(t)));
    }
    return masks;
}

void write_mask_archive(const std::filesystem::path& dir, const std::vector<BinaryMask>& masks) {
    std::filesystem::create_directories(dir);
    for (std::size_t t = 0; t < masks.size(); ++t) {
        write_mask_file(dir / mask_frame_filename(static_cast<int>(t)), masks[t]);
    }
}

}  // namespace rvos
