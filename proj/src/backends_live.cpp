#include <cmath>
#include <memory>

#include <httplib.h>

#include "backend_wire.hpp"
#include "rvos/backends.hpp"

using nlohmann::json;

namespace rvos {

namespace {

/// One HTTP POST per call with timeout retries; connections are not reused,
/// which keeps concurrent use trivially safe.
class LiveClient {
public:
    explicit LiveClient(BackendEndpoint ep) : ep_(std::move(ep)) {}

    json post(const char* path, const json& body) {
        const std::string payload = body.dump();
        for (int attempt = 0;; ++attempt) {
            httplib::Client cli(ep_.base_url);
            const auto sec = static_cast<time_t>(ep_.timeout_seconds);
            const auto usec =
                static_cast<time_t>((ep_.timeout_seconds - static_cast<double>(sec)) * 1e6);
            cli.set_connection_timeout(sec, usec);
            cli.set_read_timeout(sec, usec);
            cli.set_write_timeout(sec, usec);
            httplib::Headers headers;
            if (!ep_.bearer_token.empty()) {
                headers.emplace("Authorization", "Bearer " + ep_.bearer_token);
            }
            const auto res = cli.Post(path, headers, payload, "application/json");
            if (!res) {
                if (attempt < ep_.retries) continue;
                throw BackendError(BackendError::Kind::timeout,
                                   "POST " + ep_.base_url + path + ": " +
                                       httplib::to_string(res.error()));
            }
            if (res->status != 200) {
                throw BackendError(BackendError::Kind::http_status,
                                   "POST " + ep_.base_url + path + " returned " +
                                       std::to_string(res->status),
                                   res->status);
            }
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                throw BackendError(BackendError::Kind::malformed,
                                   "POST " + ep_.base_url + path + ": " + e.what());
            }
        }
    }

    int retries() const { return ep_.retries; }

private:
    BackendEndpoint ep_;
};

using ClientPtr = std::shared_ptr<LiveClient>;

struct LiveReasoner : Reasoner {
    ClientPtr cli;
    explicit LiveReasoner(ClientPtr cli) : cli(std::move(cli)) {}
    std::string reason(const ReasonRequest& r) override {
        return wire::decode_text(cli->post(wire::kReason, wire::encode(r)));
    }
};

struct LiveSegmenter : Segmenter {
    ClientPtr cli;
    explicit LiveSegmenter(ClientPtr cli) : cli(std::move(cli)) {}
    BinaryMask segment(const SegmentRequest& r) override {
        return wire::decode_segment(cli->post(wire::kSegment, wire::encode(r)), r.height,
                                    r.width);
    }
};

struct LivePropagator : Propagator {
    ClientPtr cli;
    explicit LivePropagator(ClientPtr cli) : cli(std::move(cli)) {}
    std::vector<BinaryMask> propagate(const PropagateRequest& r) override {
        return wire::decode_propagate(cli->post(wire::kPropagate, wire::encode(r)),
                                      r.num_frames, r.seed_mask.height(),
                                      r.seed_mask.width());
    }
};

struct LiveLocalizer : TemporalLocalizer {
    ClientPtr cli;
    explicit LiveLocalizer(ClientPtr cli) : cli(std::move(cli)) {}

    KeySegment localize_interval(const std::string& video_id, const std::string& query,
                                 const KeySegment& segment, int num_frames) override {
        const json req = wire::localize_request(video_id, query, segment, num_frames,
                                                "interval");
        // Out-of-bounds answers are rejected and asked again, up to the
        // endpoint's retry budget.
        for (int attempt = 0;; ++attempt) {
            try {
                return wire::decode_interval(cli->post(wire::kLocalize, req), segment);
            } catch (const OutOfRangeError&) {
                if (attempt >= cli->retries()) throw;
            }
        }
    }

    double localize_percent(const std::string& video_id, const std::string& query,
                            const KeySegment& segment, int num_frames) override {
        const json req = wire::localize_request(video_id, query, segment, num_frames,
                                                "percent");
        for (int attempt = 0;; ++attempt) {
            try {
                return wire::decode_percent(cli->post(wire::kLocalize, req));
            } catch (const OutOfRangeError&) {
                if (attempt >= cli->retries()) throw;
            }
        }
    }
};

struct LiveScorer : DifficultyScorer {
    ClientPtr cli;
    explicit LiveScorer(ClientPtr cli) : cli(std::move(cli)) {}
    std::string score_difficulty(const std::string& prompt) override {
        return wire::decode_text(cli->post(wire::kScore, wire::score_request(prompt)));
    }
};

}  // namespace

BackendSet make_live_backends(const BackendEndpoint& endpoint) {
    auto cli = std::make_shared<LiveClient>(endpoint);
    BackendSet set;
    set.reasoner = std::make_unique<LiveReasoner>(cli);
    set.segmenter = std::make_unique<LiveSegmenter>(cli);
    set.propagator = std::make_unique<LivePropagator>(cli);
    set.localizer = std::make_unique<LiveLocalizer>(cli);
    set.scorer = std::make_unique<LiveScorer>(cli);
    return set;
}

}  // namespace rvos
