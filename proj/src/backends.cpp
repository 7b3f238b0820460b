#include "rvos/backends.hpp"

#include <deque>
#include <fstream>
#include <mutex>

#include "backend_wire.hpp"
#include "rvos/mask_json.hpp"

using nlohmann::json;

namespace rvos {

namespace wire {

namespace {

const json& require_field(const json& doc, const char* key, const char* endpoint) {
    if (!doc.is_object() || !doc.contains(key)) {
        throw BackendError(BackendError::Kind::malformed,
                           std::string(endpoint) + " response lacks '" + key + "'");
    }
    return doc[key];
}

BinaryMask mask_from_wire(const json& doc, const char* endpoint, int height, int width) {
    BinaryMask m;
    try {
        m = mask_from_json(doc);
    } catch (const MaskFormatError& e) {
        throw BackendError(BackendError::Kind::malformed,
                           std::string(endpoint) + " response mask: " + e.what());
    }
    if (m.height() != height || m.width() != width) {
        throw BackendError(BackendError::Kind::malformed,
                           std::string(endpoint) + " response mask is " +
                               std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                               ", expected " + std::to_string(height) + "x" +
                               std::to_string(width));
    }
    return m;
}

}  // namespace

json encode(const ReasonRequest& r) {
    return {{"video_id", r.video_id},
            {"query", r.query},
            {"key_segment", {r.key_segment.start, r.key_segment.end}},
            {"target_frame", r.target_frame},
            {"reference_frames", r.reference_frames}};
}

json encode(const SegmentRequest& r) {
    return {{"video_id", r.video_id},
            {"frame", r.frame},
            {"height", r.height},
            {"width", r.width},
            {"bbox_2d", {r.prompts.bbox.x1, r.prompts.bbox.y1, r.prompts.bbox.x2,
                         r.prompts.bbox.y2}},
            {"point_pos", {r.prompts.point_pos.x, r.prompts.point_pos.y, 1}},
            {"point_neg", {r.prompts.point_neg.x, r.prompts.point_neg.y, 0}}};
}

json encode(const PropagateRequest& r) {
    return {{"video_id", r.video_id},
            {"seed_frame", r.seed_frame},
            {"num_frames", r.num_frames},
            {"mask", mask_to_json(r.seed_mask)}};
}

json localize_request(const std::string& video_id, const std::string& query,
                      const KeySegment& segment, int num_frames,
                      const std::string& granularity) {
    return {{"video_id", video_id},
            {"query", query},
            {"segment", {segment.start, segment.end}},
            {"num_frames", num_frames},
            {"granularity", granularity}};
}

json score_request(const std::string& prompt) { return {{"prompt", prompt}}; }

json text_response(const std::string& text) { return {{"text", text}}; }

std::string decode_text(const json& doc) {
    const json& v = require_field(doc, "text", "text");
    if (!v.is_string()) {
        throw BackendError(BackendError::Kind::malformed, "'text' is not a string");
    }
    return v.get<std::string>();
}

json segment_response(const BinaryMask& mask) { return {{"mask", mask_to_json(mask)}}; }

BinaryMask decode_segment(const json& doc, int height, int width) {
    return mask_from_wire(require_field(doc, "mask", kSegment), kSegment, height, width);
}

json propagate_response(const std::vector<BinaryMask>& masks) {
    json arr = json::array();
    for (const auto& m : masks) arr.push_back(json(mask_to_json(m)));
    return {{"masks", std::move(arr)}};
}

std::vector<BinaryMask> decode_propagate(const json& doc, int num_frames, int height,
                                         int width) {
    const json& arr = require_field(doc, "masks", kPropagate);
    if (!arr.is_array() || static_cast<int>(arr.size()) != num_frames) {
        throw BackendError(BackendError::Kind::malformed,
                           std::string(kPropagate) + " response must carry " +
                               std::to_string(num_frames) + " masks");
    }
    std::vector<BinaryMask> out;
    out.reserve(arr.size());
    for (const auto& m : arr) out.push_back(mask_from_wire(m, kPropagate, height, width));
    return out;
}

json interval_response(const KeySegment& seg) {
    return {{"interval", {seg.start, seg.end}}};
}

KeySegment decode_interval(const json& doc, const KeySegment& segment) {
    const json& v = require_field(doc, "interval", kLocalize);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
        !v[1].is_number_integer()) {
        throw BackendError(BackendError::Kind::malformed,
                           std::string(kLocalize) + " interval must be two integers");
    }
    const KeySegment got{v[0].get<int>(), v[1].get<int>()};
    if (got.end < got.start || got.start < segment.start || got.end > segment.end) {
        throw OutOfRangeError("interval (" + std::to_string(got.start) + ", " +
                              std::to_string(got.end) + ") leaves segment (" +
                              std::to_string(segment.start) + ", " +
                              std::to_string(segment.end) + ")");
    }
    return got;
}

json percent_response(double p) { return {{"percent", p}}; }

double decode_percent(const json& doc) {
    const json& v = require_field(doc, "percent", kLocalize);
    if (!v.is_number()) {
        throw BackendError(BackendError::Kind::malformed,
                           std::string(kLocalize) + " percent must be a number");
    }
    const double p = v.get<double>();
    if (p < 0.0 || p > 1.0) {
        throw OutOfRangeError("percent " + std::to_string(p) + " outside [0, 1]");
    }
    return p;
}

}  // namespace wire

BackendMode backend_mode_from_string(const std::string& name) {
    if (name == "oracle") return BackendMode::oracle;
    if (name == "trace") return BackendMode::trace;
    if (name == "live") return BackendMode::live;
    if (name == "static_copy") return BackendMode::static_copy;
    throw ConfigError("unknown backend mode '" + name + "'");
}

std::string to_string(BackendMode mode) {
    switch (mode) {
        case BackendMode::oracle: return "oracle";
        case BackendMode::trace: return "trace";
        case BackendMode::live: return "live";
        case BackendMode::static_copy: return "static_copy";
    }
    return "oracle";
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string request_hash_hex(const json& request) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(request.dump())));
    return buf;
}

void TraceRecorder::add(const std::string& endpoint, const json& request,
                        const json& response) {
    entries_.push_back(
        {{"endpoint", endpoint}, {"request_hash", request_hash_hex(request)},
         {"response", response}});
}

void write_trace_file(const std::filesystem::path& path, const std::vector<json>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write trace file " + path.string());
    for (const auto& e : entries) out << e.dump() << "\n";
}

namespace {

/// FIFO queues per endpoint, shared by the five trace-mode backends.
class TraceQueues {
public:
    explicit TraceQueues(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open trace file " + path.string());
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json doc;
            try {
                doc = json::parse(line);
            } catch (const json::exception& e) {
                throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " +
                                  e.what());
            }
            if (!doc.is_object() || !doc.contains("endpoint") ||
                !doc["endpoint"].is_string() || !doc.contains("response")) {
                throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                                  ": expected {endpoint, request_hash, response}");
            }
            queues_[doc["endpoint"].get<std::string>()].push_back(doc["response"]);
        }
    }

    json next(const std::string& endpoint) {
        const std::lock_guard<std::mutex> lock(mu_);
        auto it = queues_.find(endpoint);
        if (it == queues_.end() || it->second.empty()) {
            throw TraceExhaustedError("no recorded response left for " + endpoint);
        }
        json out = std::move(it->second.front());
        it->second.pop_front();
        return out;
    }

private:
    std::mutex mu_;
    std::map<std::string, std::deque<json>> queues_;
};

using TraceQueuesPtr = std::shared_ptr<TraceQueues>;

struct TraceReasoner : Reasoner {
    TraceQueuesPtr q;
    explicit TraceReasoner(TraceQueuesPtr q) : q(std::move(q)) {}
    std::string reason(const ReasonRequest&) override {
        return wire::decode_text(q->next(wire::kReason));
    }
};

struct TraceSegmenter : Segmenter {
    TraceQueuesPtr q;
    explicit TraceSegmenter(TraceQueuesPtr q) : q(std::move(q)) {}
    BinaryMask segment(const SegmentRequest& r) override {
        return wire::decode_segment(q->next(wire::kSegment), r.height, r.width);
    }
};

struct TracePropagator : Propagator {
    TraceQueuesPtr q;
    explicit TracePropagator(TraceQueuesPtr q) : q(std::move(q)) {}
    std::vector<BinaryMask> propagate(const PropagateRequest& r) override {
        return wire::decode_propagate(q->next(wire::kPropagate), r.num_frames,
                                      r.seed_mask.height(), r.seed_mask.width());
    }
};

struct TraceLocalizer : TemporalLocalizer {
    TraceQueuesPtr q;
    explicit TraceLocalizer(TraceQueuesPtr q) : q(std::move(q)) {}
    KeySegment localize_interval(const std::string&, const std::string&,
                                 const KeySegment& segment, int) override {
        return wire::decode_interval(q->next(wire::kLocalize), segment);
    }
    double localize_percent(const std::string&, const std::string&, const KeySegment&,
                            int) override {
        return wire::decode_percent(q->next(wire::kLocalize));
    }
};

struct TraceScorer : DifficultyScorer {
    TraceQueuesPtr q;
    explicit TraceScorer(TraceQueuesPtr q) : q(std::move(q)) {}
    std::string score_difficulty(const std::string&) override {
        return wire::decode_text(q->next(wire::kScore));
    }
};

struct StaticCopyPropagator : Propagator {
    std::vector<BinaryMask> propagate(const PropagateRequest& r) override {
        return std::vector<BinaryMask>(static_cast<std::size_t>(r.num_frames), r.seed_mask);
    }
};

struct RecordingReasoner : Reasoner {
    Reasoner& inner;
    TraceRecorder& rec;
    RecordingReasoner(Reasoner& inner, TraceRecorder& rec) : inner(inner), rec(rec) {}
    std::string reason(const ReasonRequest& r) override {
        const std::string text = inner.reason(r);
        rec.add(wire::kReason, wire::encode(r), wire::text_response(text));
        return text;
    }
};

struct RecordingSegmenter : Segmenter {
    Segmenter& inner;
    TraceRecorder& rec;
    RecordingSegmenter(Segmenter& inner, TraceRecorder& rec) : inner(inner), rec(rec) {}
    BinaryMask segment(const SegmentRequest& r) override {
        BinaryMask m = inner.segment(r);
        rec.add(wire::kSegment, wire::encode(r), wire::segment_response(m));
        return m;
    }
};

struct RecordingPropagator : Propagator {
    Propagator& inner;
    TraceRecorder& rec;
    RecordingPropagator(Propagator& inner, TraceRecorder& rec) : inner(inner), rec(rec) {}
    std::vector<BinaryMask> propagate(const PropagateRequest& r) override {
        std::vector<BinaryMask> seq = inner.propagate(r);
        rec.add(wire::kPropagate, wire::encode(r), wire::propagate_response(seq));
        return seq;
    }
};

struct RecordingLocalizer : TemporalLocalizer {
    TemporalLocalizer& inner;
    TraceRecorder& rec;
    RecordingLocalizer(TemporalLocalizer& inner, TraceRecorder& rec)
        : inner(inner), rec(rec) {}
    KeySegment localize_interval(const std::string& video_id, const std::string& query,
                                 const KeySegment& segment, int num_frames) override {
        const KeySegment got = inner.localize_interval(video_id, query, segment, num_frames);
        rec.add(wire::kLocalize,
                wire::localize_request(video_id, query, segment, num_frames, "interval"),
                wire::interval_response(got));
        return got;
    }
    double localize_percent(const std::string& video_id, const std::string& query,
                            const KeySegment& segment, int num_frames) override {
        const double p = inner.localize_percent(video_id, query, segment, num_frames);
        rec.add(wire::kLocalize,
                wire::localize_request(video_id, query, segment, num_frames, "percent"),
                wire::percent_response(p));
        return p;
    }
};

struct RecordingScorer : DifficultyScorer {
    DifficultyScorer& inner;
    TraceRecorder& rec;
    RecordingScorer(DifficultyScorer& inner, TraceRecorder& rec) : inner(inner), rec(rec) {}
    std::string score_difficulty(const std::string& prompt) override {
        const std::string text = inner.score_difficulty(prompt);
        rec.add(wire::kScore, wire::score_request(prompt), wire::text_response(text));
        return text;
    }
};

}  // namespace

std::unique_ptr<Propagator> make_static_copy_propagator() {
    return std::make_unique<StaticCopyPropagator>();
}

BackendSet make_trace_backends(const std::filesystem::path& trace_path) {
    auto q = std::make_shared<TraceQueues>(trace_path);
    BackendSet set;
    set.reasoner = std::make_unique<TraceReasoner>(q);
    set.segmenter = std::make_unique<TraceSegmenter>(q);
    set.propagator = std::make_unique<TracePropagator>(q);
    set.localizer = std::make_unique<TraceLocalizer>(q);
    set.scorer = std::make_unique<TraceScorer>(q);
    return set;
}

BackendSet wrap_recording(const BackendSet& inner, TraceRecorder& rec) {
    BackendSet set;
    set.reasoner = std::make_unique<RecordingReasoner>(*inner.reasoner, rec);
    set.segmenter = std::make_unique<RecordingSegmenter>(*inner.segmenter, rec);
    set.propagator = std::make_unique<RecordingPropagator>(*inner.propagator, rec);
    set.localizer = std::make_unique<RecordingLocalizer>(*inner.localizer, rec);
    set.scorer = std::make_unique<RecordingScorer>(*inner.scorer, rec);
    return set;
}

BackendSet make_backends(const Dataset& ds, const std::map<std::string, BackendEndpoint>& roles,
                         const OracleConfig& oracle_cfg) {
    static constexpr const char* kRoles[5] = {"reasoner", "segmenter", "propagator",
                                              "localizer", "scorer"};
    for (const auto& [role, ep] : roles) {
        bool known = false;
        for (const char* r : kRoles) known = known || role == r;
        if (!known) throw ConfigError("unknown backend role '" + role + "'");
        if (ep.mode == BackendMode::static_copy && role != std::string("propagator")) {
            throw ConfigError("backend mode static_copy is only valid for the propagator");
        }
        if (ep.mode == BackendMode::live && ep.base_url.empty()) {
            throw ConfigError("backend role '" + role + "' is live but has no base_url");
        }
        if (ep.mode == BackendMode::trace && ep.trace_path.empty()) {
            throw ConfigError("backend role '" + role + "' is trace but has no trace_path");
        }
    }

    const auto endpoint_for = [&roles](const char* role) {
        const auto it = roles.find(role);
        return it == roles.end() ? BackendEndpoint{} : it->second;
    };

    // Same-path trace roles share one queue set, so a single recorded run
    // can feed all five endpoints.
    std::map<std::filesystem::path, BackendSet> trace_sets;
    BackendSet oracle_set;
    bool have_oracle = false;

    const auto pick = [&](const char* role, auto member) {
        const BackendEndpoint ep = endpoint_for(role);
        switch (ep.mode) {
            case BackendMode::oracle:
                if (!have_oracle) {
                    oracle_set = make_oracle_backends(ds, oracle_cfg);
                    have_oracle = true;
                }
                return std::move(oracle_set.*member);
            case BackendMode::trace: {
                auto it = trace_sets.find(ep.trace_path);
                if (it == trace_sets.end()) {
                    it = trace_sets.emplace(ep.trace_path, make_trace_backends(ep.trace_path))
                             .first;
                }
                return std::move(it->second.*member);
            }
            case BackendMode::live:
                return std::move(make_live_backends(ep).*member);
            case BackendMode::static_copy:
                return std::move(oracle_set.*member);  // unreachable; validated above
        }
        return std::move(oracle_set.*member);
    };

    BackendSet set;
    set.reasoner = pick("reasoner", &BackendSet::reasoner);
    set.segmenter = pick("segmenter", &BackendSet::segmenter);
    if (endpoint_for("propagator").mode == BackendMode::static_copy) {
        set.propagator = make_static_copy_propagator();
    } else {
        set.propagator = pick("propagator", &BackendSet::propagator);
    }
    set.localizer = pick("localizer", &BackendSet::localizer);
    set.scorer = pick("scorer", &BackendSet::scorer);
    return set;
}

}  // namespace rvos
