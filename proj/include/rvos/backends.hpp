#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rvos/answer.hpp"
#include "rvos/dataset.hpp"
#include "rvos/errors.hpp"
#include "rvos/geometry.hpp"
#include "rvos/sampler.hpp"

namespace rvos {

/// static_copy is accepted for the propagator role only.
enum class BackendMode { oracle, trace, live, static_copy };

BackendMode backend_mode_from_string(const std::string& name);
std::string to_string(BackendMode mode);

struct BackendEndpoint {
    BackendMode mode = BackendMode::oracle;
    std::string base_url;
    std::filesystem::path trace_path;
    double timeout_seconds = 30.0;
    /// Re-attempts after a timeout (and, for the localizer, an
    /// out-of-bounds response). Malformed payloads are never retried.
    int retries = 2;
    std::string bearer_token;
};

struct ReasonRequest {
    std::string video_id;
    std::string query;
    KeySegment key_segment;
    int target_frame = 0;
    std::vector<int> reference_frames;
};

struct SegmentRequest {
    std::string video_id;
    int frame = 0;
    /// Expected mask dimensions; live responses are validated against them.
    int height = 0;
    int width = 0;
    ObjectPrediction prompts;
};

struct PropagateRequest {
    std::string video_id;
    int seed_frame = 0;
    /// Expected sequence length.
    int num_frames = 1;
    BinaryMask seed_mask;
};

class Reasoner {
public:
    virtual ~Reasoner() = default;
    /// Raw completion text; feed through RolloutText::scan.
    virtual std::string reason(const ReasonRequest& r) = 0;
};

class Segmenter {
public:
    virtual ~Segmenter() = default;
    virtual BinaryMask segment(const SegmentRequest& r) = 0;
};

class Propagator {
public:
    virtual ~Propagator() = default;
    /// One mask per frame index 0..num_frames-1.
    virtual std::vector<BinaryMask> propagate(const PropagateRequest& r) = 0;
};

class DifficultyScorer {
public:
    virtual ~DifficultyScorer() = default;
    /// Raw scorer text; feed through parse_difficulty_response.
    virtual std::string score_difficulty(const std::string& prompt) = 0;
};

struct BackendSet {
    std::unique_ptr<Reasoner> reasoner;
    std::unique_ptr<Segmenter> segmenter;
    std::unique_ptr<Propagator> propagator;
    std::unique_ptr<TemporalLocalizer> localizer;
    std::unique_ptr<DifficultyScorer> scorer;
};

struct OracleConfig {
    /// Interval responses span target +- this many frames.
    int interval_halfwidth = 10;
    /// Deterministic pseudo-noise applied to the target frame; 0 disables.
    int jitter = 0;
    std::uint64_t seed = 0;
};

/// Mocks deriving every response from ground truth. The dataset must
/// outlive the returned set.
BackendSet make_oracle_backends(const Dataset& ds, const OracleConfig& cfg = {});

/// Replays a recorded trace file FIFO per endpoint; throws
/// TraceExhaustedError once an endpoint's entries run out and ConfigError
/// if the file is unreadable.
BackendSet make_trace_backends(const std::filesystem::path& trace_path);

/// HTTP clients for the wire protocol (POST /reason, /segment, /propagate,
/// /localize, /score under base_url).
BackendSet make_live_backends(const BackendEndpoint& endpoint);

/// Baseline propagator: replicates the seed mask to every frame.
std::unique_ptr<Propagator> make_static_copy_propagator();

/// Builds one set from per-role endpoints keyed "reasoner", "segmenter",
/// "propagator", "localizer", "scorer"; missing roles default to oracle.
/// Throws ConfigError on invalid role/mode combinations.
BackendSet make_backends(const Dataset& ds,
                         const std::map<std::string, BackendEndpoint>& roles,
                         const OracleConfig& oracle_cfg = {});

std::uint64_t fnv1a64(std::string_view bytes);
/// 16-digit hex FNV-1a of the canonical request JSON.
std::string request_hash_hex(const nlohmann::json& request);

/// Per-query call log in the trace file schema:
/// {"endpoint":…, "request_hash":…, "response":…}. Not synchronized; use
/// one recorder per worker.
class TraceRecorder {
public:
    void add(const std::string& endpoint, const nlohmann::json& request,
             const nlohmann::json& response);
    const std::vector<nlohmann::json>& entries() const { return entries_; }

private:
    std::vector<nlohmann::json> entries_;
};

void write_trace_file(const std::filesystem::path& path,
                      const std::vector<nlohmann::json>& entries);

/// Non-owning mirrors that log every call into `rec`; `inner` must outlive
/// the returned set.
BackendSet wrap_recording(const BackendSet& inner, TraceRecorder& rec);

}  // namespace rvos
