#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvos/geometry.hpp"

namespace rvos {

/// Canonical mask document: {"height": H, "width": W, "runs": [...]}.
nlohmann::ordered_json mask_to_json(const BinaryMask& m);

/// Accepts any key order; throws MaskFormatError on a malformed document.
BinaryMask mask_from_json(const nlohmann::json& doc);

/// Zero-padded archive member name, e.g. frame 7 -> "00007.mask.json".
std::string mask_frame_filename(int frame_index);

/// Throws MaskFormatError naming the offending path.
BinaryMask read_mask_file(const std::filesystem::path& path);
void write_mask_file(const std::filesystem::path& path, const BinaryMask& m);

/// One mask per frame index 0..n-1. Throws MissingFrameError naming the path.
std::vector<BinaryMask> read_mask_archive(const std::filesystem::path& dir, int num_frames);
void write_mask_archive(const std::filesystem::path& dir, const std::vector<BinaryMask>& masks);

}  // namespace rvos
