#pragma once

// Request/response JSON schemas shared by the live client, the trace
// replayer, and the recording wrappers. Decoders throw
// BackendError(malformed) so callers never see raw wire data.

#include <string>
#include <vector>

#include <json.hpp>

#include "rvos/backends.hpp"

namespace rvos::wire {

inline constexpr const char* kReason = "/reason";
inline constexpr const char* kSegment = "/segment";
inline constexpr const char* kPropagate = "/propagate";
inline constexpr const char* kLocalize = "/localize";
inline constexpr const char* kScore = "/score";

nlohmann::json encode(const ReasonRequest& r);
nlohmann::json encode(const SegmentRequest& r);
nlohmann::json encode(const PropagateRequest& r);
nlohmann::json localize_request(const std::string& video_id, const std::string& query,
                                const KeySegment& segment, int num_frames,
                                const std::string& granularity);
nlohmann::json score_request(const std::string& prompt);

nlohmann::json text_response(const std::string& text);
std::string decode_text(const nlohmann::json& doc);

nlohmann::json segment_response(const BinaryMask& mask);
BinaryMask decode_segment(const nlohmann::json& doc, int height, int width);

nlohmann::json propagate_response(const std::vector<BinaryMask>& masks);
std::vector<BinaryMask> decode_propagate(const nlohmann::json& doc, int num_frames, int height,
                                         int width);

nlohmann::json interval_response(const KeySegment& seg);
/// Throws OutOfRangeError when the interval leaves the request segment.
KeySegment decode_interval(const nlohmann::json& doc, const KeySegment& segment);

nlohmann::json percent_response(double p);
/// Throws OutOfRangeError when outside [0, 1].
double decode_percent(const nlohmann::json& doc);

}  // namespace rvos::wire
