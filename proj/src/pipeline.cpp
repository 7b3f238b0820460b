#include "rvos/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string_view>
#include <thread>

#include "rvos/answer.hpp"
#include "rvos/errors.hpp"
#include "rvos/mask_json.hpp"

namespace rvos {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

double mean_of(const std::vector<double>& xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

std::vector<BinaryMask> empty_sequence(const VideoInfo& v) {
    return std::vector<BinaryMask>(std::size_t(v.num_frames),
                                   BinaryMask::filled(v.height, v.width, false));
}

}  // namespace

std::vector<BinaryMask> gt_union_sequence(const Dataset& ds, const Query& q) {
    const VideoInfo& v = ds.video(q.video_id);
    std::vector<std::vector<BinaryMask>> per_object;
    per_object.reserve(q.gt_object_ids.size());
    for (const std::string& obj : q.gt_object_ids) {
        per_object.push_back(ds.gt_mask_sequence(q.video_id, obj));
    }
    std::vector<BinaryMask> out;
    out.reserve(std::size_t(v.num_frames));
    for (int t = 0; t < v.num_frames; ++t) {
        std::vector<BinaryMask> at_frame;
        at_frame.reserve(per_object.size());
        for (const auto& seq : per_object) at_frame.push_back(seq[std::size_t(t)]);
        out.push_back(at_frame.empty() ? BinaryMask::filled(v.height, v.width, false)
                                       : mask_union(at_frame));
    }
    return out;
}

std::pair<std::vector<BinaryMask>, RunTrace> run_query(const Dataset& ds, const Query& q,
                                                       const BackendSet& backends,
                                                       const PipelineConfig& cfg) {
    const VideoInfo& v = ds.video(q.video_id);
    RunTrace trace;
    trace.query_id = q.id;
    trace.video_id = q.video_id;
    trace.sampler_skipped = v.num_frames == 1;
    trace.propagation_skipped = v.num_frames == 1;

    const auto started = std::chrono::steady_clock::now();
    std::vector<BinaryMask> out = empty_sequence(v);
    std::string stage = "sampler";
    try {
        trace.plan = build_sampling_plan(to_video_meta(v), *backends.localizer, q.video_id,
                                         q.expression, cfg.sampler);
        trace.seed_frame = trace.plan.target_frame;

        stage = "reason";
        const std::string raw =
            backends.reasoner->reason(ReasonRequest{q.video_id, q.expression,
                                                    trace.plan.key_segment,
                                                    trace.plan.target_frame,
                                                    trace.plan.reference_frames});
        trace.rollout = raw;

        stage = "parse";
        const RolloutText rollout = RolloutText::scan(raw);
        trace.l_used = count_whitespace_tokens(rollout.think_text());
        trace.predictions = parse_answer(rollout.answer_text());

        stage = "segment";
        std::vector<BinaryMask> seeds;
        seeds.reserve(trace.predictions.size());
        for (const ObjectPrediction& pred : trace.predictions) {
            seeds.push_back(backends.segmenter->segment(SegmentRequest{
                q.video_id, trace.plan.target_frame, v.height, v.width, pred}));
        }

        stage = "propagate";
        std::vector<std::vector<BinaryMask>> sequences;
        sequences.reserve(seeds.size());
        for (BinaryMask& seed : seeds) {
            if (v.num_frames == 1) {
                sequences.push_back({std::move(seed)});
            } else {
                sequences.push_back(backends.propagator->propagate(PropagateRequest{
                    q.video_id, trace.plan.target_frame, v.num_frames, std::move(seed)}));
            }
        }

        for (int t = 0; t < v.num_frames; ++t) {
            std::vector<BinaryMask> at_frame;
            at_frame.reserve(sequences.size());
            for (const auto& seq : sequences) at_frame.push_back(seq[std::size_t(t)]);
            if (!at_frame.empty()) out[std::size_t(t)] = mask_union(at_frame);
        }
    } catch (const std::exception& e) {
        trace.failed_stage = stage;
        trace.error = e.what();
        out = empty_sequence(v);
    }
    trace.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(out), std::move(trace)};
}

EvalReport score_results(const Dataset& ds, std::vector<QueryRunResult>& results,
                         double tolerance_frac) {
    EvalReport report;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_video;
    std::vector<double> image_ious;
    std::vector<std::pair<BinaryMask, BinaryMask>> image_pairs;
    std::vector<std::size_t> token_counts;

    for (QueryRunResult& r : results) {
        const VideoInfo& v = ds.video(r.query.video_id);
        const std::vector<BinaryMask> gt = gt_union_sequence(ds, r.query);
        r.j = region_similarity(r.masks, gt);
        r.f = contour_accuracy(r.masks, gt, tolerance_frac);
        if (v.num_frames == 1) {
            image_ious.push_back(mask_iou(r.masks[0], gt[0]));
            image_pairs.emplace_back(r.masks[0], gt[0]);
        }
        auto& [js, fs] = by_video[r.query.video_id];
        js.push_back(r.j);
        fs.push_back(r.f);
        token_counts.push_back(r.trace.l_used);
    }

    std::vector<double> video_js;
    std::vector<double> video_fs;
    for (const auto& [id, scores] : by_video) {
        VideoScore vs;
        vs.j = mean_of(scores.first);
        vs.f = mean_of(scores.second);
        vs.jf = (vs.j + vs.f) / 2.0;
        report.per_video[id] = vs;
        video_js.push_back(vs.j);
        video_fs.push_back(vs.f);
    }
    report.aggregate.j = mean_of(video_js);
    report.aggregate.f = mean_of(video_fs);
    report.aggregate.jf = (report.aggregate.j + report.aggregate.f) / 2.0;
    if (!image_ious.empty()) {
        report.aggregate_g_iou = g_iou(image_ious);
        report.aggregate_c_iou = c_iou(image_pairs);
    }

    if (!token_counts.empty()) {
        std::vector<std::size_t> sorted = token_counts;
        std::sort(sorted.begin(), sorted.end());
        double total = 0.0;
        for (std::size_t n : token_counts) total += double(n);
        report.tokens.mean = total / double(token_counts.size());
        const std::size_t mid = sorted.size() / 2;
        report.tokens.median = sorted.size() % 2 == 1
                                   ? double(sorted[mid])
                                   : (double(sorted[mid - 1]) + double(sorted[mid])) / 2.0;
    }
    return report;
}

RunOutput evaluate(const Dataset& ds, const PipelineConfig& cfg) {
    OracleConfig oracle_cfg = cfg.oracle;
    oracle_cfg.seed = cfg.seed;
    const BackendSet backends = make_backends(ds, cfg.backends, oracle_cfg);

    // Trace replay hands out recorded responses FIFO per endpoint, so
    // concurrent queries would race for them.
    bool any_trace = false;
    for (const auto& [role, ep] : cfg.backends) {
        any_trace = any_trace || ep.mode == BackendMode::trace;
    }
    std::size_t workers = std::size_t(std::max(1, cfg.workers));
    if (any_trace) workers = 1;
    workers = std::min(workers, std::max<std::size_t>(1, ds.queries.size()));

    RunOutput out;
    out.results.resize(ds.queries.size());
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;

    const auto drain = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= ds.queries.size()) return;
            try {
                TraceRecorder recorder;
                const BackendSet recording = wrap_recording(backends, recorder);
                auto [masks, trace] = run_query(ds, ds.queries[i], recording, cfg);
                trace.backend_log = recorder.entries();
                out.results[i] =
                    QueryRunResult{ds.queries[i], std::move(masks), std::move(trace)};
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    if (workers == 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    out.report = score_results(ds, out.results, cfg.tolerance_frac);
    return out;
}

ordered_json report_to_json(const EvalReport& report) {
    ordered_json videos = ordered_json::object();
    for (const auto& [id, vs] : report.per_video) {
        videos[id] = ordered_json{{"J", vs.j}, {"F", vs.f}, {"JF", vs.jf}};
    }
    ordered_json aggregate{{"J", report.aggregate.j},
                           {"F", report.aggregate.f},
                           {"JF", report.aggregate.jf}};
    if (report.aggregate_g_iou) aggregate["gIoU"] = *report.aggregate_g_iou;
    if (report.aggregate_c_iou) aggregate["cIoU"] = *report.aggregate_c_iou;
    return ordered_json{{"videos", videos},
                        {"aggregate", aggregate},
                        {"tokens", ordered_json{{"mean", report.tokens.mean},
                                                {"median", report.tokens.median}}}};
}

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << body;
}

ordered_json run_log_line(const RunTrace& t) {
    ordered_json line;
    line["query_id"] = t.query_id;
    line["video_id"] = t.video_id;
    line["key_segment"] = {t.plan.key_segment.start, t.plan.key_segment.end};
    line["target_frame"] = t.plan.target_frame;
    line["reference_frames"] = t.plan.reference_frames;
    line["rounds_used"] = t.plan.rounds_used;
    line["sampler_skipped"] = t.sampler_skipped;
    line["propagation_skipped"] = t.propagation_skipped;
    line["num_predictions"] = t.predictions.size();
    line["l_used"] = t.l_used;
    line["failed_stage"] = t.failed_stage ? ordered_json(*t.failed_stage) : ordered_json(nullptr);
    line["error"] = t.error ? ordered_json(*t.error) : ordered_json(nullptr);
    line["elapsed_seconds"] = t.elapsed_seconds;
    return line;
}

}  // namespace

void write_run_outputs(const std::filesystem::path& out_dir, const RunOutput& out) {
    std::filesystem::create_directories(out_dir / "predictions");

    ordered_json tokens = ordered_json::object();
    std::vector<json> wire_entries;
    std::ostringstream run_log;
    for (const QueryRunResult& r : out.results) {
        write_mask_archive(out_dir / "predictions" / r.query.id, r.masks);
        tokens[r.query.id] = r.trace.l_used;
        wire_entries.insert(wire_entries.end(), r.trace.backend_log.begin(),
                            r.trace.backend_log.end());
        run_log << run_log_line(r.trace).dump() << '\n';
    }
    write_trace_file(out_dir / "trace.jsonl", wire_entries);
    write_text_file(out_dir / "tokens.json", tokens.dump(2) + "\n");
    write_text_file(out_dir / "report.json", report_to_json(out.report).dump(2) + "\n");
    write_text_file(out_dir / "run_log.jsonl", run_log.str());
}

std::vector<QueryRunResult> load_predictions(const Dataset& ds,
                                             const std::filesystem::path& pred_root) {
    std::filesystem::path base = pred_root;
    if (std::filesystem::is_directory(pred_root / "predictions")) base = pred_root / "predictions";

    std::map<std::string, std::size_t> tokens;
    const std::filesystem::path tokens_path = base.parent_path() / "tokens.json";
    if (std::filesystem::exists(tokens_path)) {
        std::ifstream in(tokens_path);
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw ConfigError(tokens_path.string() + ": not a JSON object");
        }
        for (const auto& [id, count] : doc.items()) {
            if (!count.is_number_unsigned()) {
                throw ConfigError(tokens_path.string() + ": token count for '" + id +
                                  "' must be a non-negative integer");
            }
            tokens[id] = count.get<std::size_t>();
        }
    }

    std::vector<QueryRunResult> results;
    results.reserve(ds.queries.size());
    for (const Query& q : ds.queries) {
        const VideoInfo& v = ds.video(q.video_id);
        QueryRunResult r;
        r.query = q;
        r.trace.query_id = q.id;
        r.trace.video_id = q.video_id;
        const std::filesystem::path dir = base / q.id;
        if (std::filesystem::is_directory(dir)) {
            r.masks = read_mask_archive(dir, v.num_frames);
            for (const BinaryMask& m : r.masks) {
                if (m.height() != v.height || m.width() != v.width) {
                    throw MaskFormatError(dir.string() + ": mask is " +
                                          std::to_string(m.height()) + "x" +
                                          std::to_string(m.width()) + ", video '" + v.id +
                                          "' is " + std::to_string(v.height) + "x" +
                                          std::to_string(v.width));
                }
            }
        } else {
            r.masks = empty_sequence(v);
        }
        const auto it = tokens.find(q.id);
        if (it != tokens.end()) r.trace.l_used = it->second;
        results.push_back(std::move(r));
    }
    return results;
}

namespace {

/// Raw lines of a JSONL file; reward inputs are parsed per line so one bad
/// rollout cannot take down the batch.
std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

DifficultyScores difficulty_from_json(const json& dict, const std::string& where) {
    static constexpr const char* kAspects[5] = {"scene", "segmentation", "temporal", "motion",
                                                "language"};
    DifficultyScores scores{};
    for (std::size_t i = 0; i < 5; ++i) {
        if (!dict.contains(kAspects[i]) || !dict[kAspects[i]].is_number_integer()) {
            throw ConfigError(where + ": difficulty dict needs integer '" +
                              std::string(kAspects[i]) + "'");
        }
        scores[i] = dict[kAspects[i]].get<int>();
    }
    return scores;
}

GroundTruthObject gt_object_from_json(const json& doc, const std::string& where) {
    if (!doc.is_object()) throw ConfigError(where + ": object entry must be a dict");
    if (!doc.contains("bbox_2d") || !doc["bbox_2d"].is_array() || doc["bbox_2d"].size() != 4) {
        throw ConfigError(where + ": object needs a 4-element 'bbox_2d'");
    }
    GroundTruthObject obj;
    int coords[4];
    for (std::size_t i = 0; i < 4; ++i) {
        if (!doc["bbox_2d"][i].is_number_integer()) {
            throw ConfigError(where + ": 'bbox_2d' entries must be integers");
        }
        coords[i] = doc["bbox_2d"][i].get<int>();
    }
    obj.bbox = BBox{coords[0], coords[1], coords[2], coords[3]};
    if (!obj.bbox.valid()) throw ConfigError(where + ": 'bbox_2d' is not a valid box");
    if (doc.contains("center")) {
        if (!doc["center"].is_array() || doc["center"].size() != 2 ||
            !doc["center"][0].is_number_integer() || !doc["center"][1].is_number_integer()) {
            throw ConfigError(where + ": 'center' must be [x, y] with integer entries");
        }
        obj.center = LabeledPoint{doc["center"][0].get<int>(), doc["center"][1].get<int>(), 1};
    } else {
        obj.center =
            LabeledPoint{(obj.bbox.x1 + obj.bbox.x2) / 2, (obj.bbox.y1 + obj.bbox.y2) / 2, 1};
    }
    if (doc.contains("masks")) {
        if (!doc["masks"].is_array()) throw ConfigError(where + ": 'masks' must be an array");
        for (const json& m : doc["masks"]) obj.masks.push_back(mask_from_json(m));
    }
    for (const auto& [key, value] : doc.items()) {
        if (key != "bbox_2d" && key != "center" && key != "masks") {
            throw ConfigError(where + ": unknown object key '" + key + "'");
        }
    }
    return obj;
}

}  // namespace

std::vector<RewardBatchItem> reward_batch(const std::filesystem::path& rollouts_path,
                                          const std::filesystem::path& gt_path,
                                          const PipelineConfig& cfg,
                                          std::optional<std::size_t> budget_override) {
    const std::vector<std::string> rollout_lines = read_lines(rollouts_path);
    const std::vector<std::string> gt_lines = read_lines(gt_path);
    if (rollout_lines.size() != gt_lines.size()) {
        throw ConfigError(rollouts_path.string() + " has " +
                          std::to_string(rollout_lines.size()) + " lines but " +
                          gt_path.string() + " has " + std::to_string(gt_lines.size()));
    }

    std::vector<RewardBatchItem> items;
    items.reserve(rollout_lines.size());
    for (std::size_t i = 0; i < rollout_lines.size(); ++i) {
        const std::string where = gt_path.filename().string() + ":" + std::to_string(i + 1);
        json gt_doc;
        try {
            gt_doc = json::parse(gt_lines[i]);
        } catch (const json::parse_error& e) {
            throw ConfigError(where + ": " + e.what());
        }
        if (!gt_doc.is_object() || !gt_doc.contains("objects") || !gt_doc["objects"].is_array()) {
            throw ConfigError(where + ": ground-truth line needs an 'objects' array");
        }
        std::vector<GroundTruthObject> gts;
        for (const json& o : gt_doc["objects"]) gts.push_back(gt_object_from_json(o, where));

        std::size_t budget = 256;
        if (budget_override) {
            budget = *budget_override;
        } else if (gt_doc.contains("budget")) {
            if (!gt_doc["budget"].is_number_unsigned() || gt_doc["budget"].get<std::size_t>() == 0) {
                throw ConfigError(where + ": 'budget' must be a positive integer");
            }
            budget = gt_doc["budget"].get<std::size_t>();
        } else if (gt_doc.contains("difficulty")) {
            const DifficultyProfile profile = aggregate_difficulty(
                difficulty_from_json(gt_doc["difficulty"], where), cfg.difficulty);
            budget = token_budget(profile, cfg.difficulty);
        }

        std::optional<double> mask_iou_term;
        if (gt_doc.contains("mask_iou")) {
            if (!gt_doc["mask_iou"].is_number()) {
                throw ConfigError(where + ": 'mask_iou' must be a number");
            }
            mask_iou_term = gt_doc["mask_iou"].get<double>();
            if (*mask_iou_term < 0.0 || *mask_iou_term > 1.0) {
                throw ConfigError(where + ": 'mask_iou' must lie in [0, 1]");
            }
        }

        // A rollout line that is not valid JSON, or lacks a "text" string,
        // still yields a breakdown: the empty rollout earns zero format
        // and accuracy rewards.
        std::string text;
        std::string id = std::to_string(i);
        const json rollout_doc = json::parse(rollout_lines[i], nullptr, false);
        if (rollout_doc.is_object()) {
            if (rollout_doc.contains("text") && rollout_doc["text"].is_string()) {
                text = rollout_doc["text"].get<std::string>();
            }
            if (rollout_doc.contains("id") && rollout_doc["id"].is_string()) {
                id = rollout_doc["id"].get<std::string>();
            }
        }
        if (id == std::to_string(i) && gt_doc.contains("id") && gt_doc["id"].is_string()) {
            id = gt_doc["id"].get<std::string>();
        }

        RewardBatchItem item;
        item.id = id;
        item.breakdown =
            compute_reward(RolloutText::scan(text), gts, budget, cfg.rewards, mask_iou_term);
        items.push_back(std::move(item));
    }
    return items;
}

ordered_json breakdown_to_json(const RewardBreakdown& b) {
    ordered_json j;
    j["r_think_format"] = b.r_think_format;
    j["r_answer_format"] = b.r_answer_format;
    j["r_non_repeat"] = b.r_non_repeat;
    j["r_bbox_iou"] = b.r_bbox_iou;
    j["r_bbox_l1"] = b.r_bbox_l1;
    j["r_point_l1"] = b.r_point_l1;
    j["r_neg_point"] = b.r_neg_point;
    if (b.r_mask_iou) j["r_mask_iou"] = *b.r_mask_iou;
    j["r_original"] = b.r_original;
    j["penalty_s"] = b.penalty_s;
    j["r_final"] = b.r_final;
    j["l_used"] = b.l_used;
    j["l_budget"] = b.l_budget;
    return j;
}

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("config: unknown key '" + key + "' in " + where);
        }
    }
}

const json* maybe(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

int read_positive_int(const json& v, const std::string& name) {
    if (!v.is_number_integer() || v.get<int>() <= 0) {
        throw ConfigError("config: " + name + " must be a positive integer");
    }
    return v.get<int>();
}

int read_nonneg_int(const json& v, const std::string& name) {
    if (!v.is_number_integer() || v.get<int>() < 0) {
        throw ConfigError("config: " + name + " must be a non-negative integer");
    }
    return v.get<int>();
}

double read_positive_double(const json& v, const std::string& name) {
    if (!v.is_number() || !(v.get<double>() > 0.0)) {
        throw ConfigError("config: " + name + " must be a positive number");
    }
    return v.get<double>();
}

std::string read_string(const json& v, const std::string& name) {
    if (!v.is_string()) throw ConfigError("config: " + name + " must be a string");
    return v.get<std::string>();
}

bool read_bool(const json& v, const std::string& name) {
    if (!v.is_boolean()) throw ConfigError("config: " + name + " must be a boolean");
    return v.get<bool>();
}

ReferenceStrategy strategy_from_string(const std::string& name) {
    if (name == "global") return ReferenceStrategy::global;
    if (name == "local") return ReferenceStrategy::local;
    if (name == "adaptive") return ReferenceStrategy::adaptive;
    throw ConfigError("config: unknown reference strategy '" + name + "'");
}

void parse_sampler(const json& obj, SamplerConfig& cfg) {
    reject_unknown_keys(obj,
                        {"delta", "k_interval_samples", "m_percent_samples", "t_ref", "strategy",
                         "max_rounds"},
                        "sampler");
    if (const json* v = maybe(obj, "delta")) {
        cfg.delta = read_positive_double(*v, "sampler.delta");
        if (cfg.delta > 1.0) throw ConfigError("config: sampler.delta must lie in (0, 1]");
    }
    if (const json* v = maybe(obj, "k_interval_samples")) {
        cfg.k_interval_samples = read_positive_int(*v, "sampler.k_interval_samples");
    }
    if (const json* v = maybe(obj, "m_percent_samples")) {
        cfg.m_percent_samples = read_positive_int(*v, "sampler.m_percent_samples");
    }
    if (const json* v = maybe(obj, "t_ref")) cfg.t_ref = read_nonneg_int(*v, "sampler.t_ref");
    if (const json* v = maybe(obj, "strategy")) {
        cfg.strategy = strategy_from_string(read_string(*v, "sampler.strategy"));
    }
    if (const json* v = maybe(obj, "max_rounds")) {
        cfg.max_rounds = read_positive_int(*v, "sampler.max_rounds");
    }
}

void parse_rewards(const json& obj, RewardConfig& cfg) {
    reject_unknown_keys(obj,
                        {"iou_match_threshold", "bbox_l1_threshold", "point_l1_threshold",
                         "tau_neg", "beta", "clamp_penalty_at_zero"},
                        "rewards");
    if (const json* v = maybe(obj, "iou_match_threshold")) {
        cfg.iou_match_threshold = read_positive_double(*v, "rewards.iou_match_threshold");
    }
    if (const json* v = maybe(obj, "bbox_l1_threshold")) {
        cfg.bbox_l1_threshold = read_positive_double(*v, "rewards.bbox_l1_threshold");
    }
    if (const json* v = maybe(obj, "point_l1_threshold")) {
        cfg.point_l1_threshold = read_positive_double(*v, "rewards.point_l1_threshold");
    }
    if (const json* v = maybe(obj, "tau_neg")) {
        cfg.tau_neg = read_positive_double(*v, "rewards.tau_neg");
    }
    if (const json* v = maybe(obj, "beta")) cfg.beta = read_positive_double(*v, "rewards.beta");
    if (const json* v = maybe(obj, "clamp_penalty_at_zero")) {
        cfg.clamp_penalty_at_zero = read_bool(*v, "rewards.clamp_penalty_at_zero");
    }
}

void parse_difficulty(const json& obj, DifficultyConfig& cfg) {
    reject_unknown_keys(obj, {"tau_easy", "tau_hard", "budget_easy", "budget_medium",
                              "budget_hard"},
                        "difficulty");
    if (const json* v = maybe(obj, "tau_easy")) {
        cfg.tau_easy = read_positive_double(*v, "difficulty.tau_easy");
    }
    if (const json* v = maybe(obj, "tau_hard")) {
        cfg.tau_hard = read_positive_double(*v, "difficulty.tau_hard");
    }
    if (cfg.tau_easy > cfg.tau_hard) {
        throw ConfigError("config: difficulty.tau_easy must not exceed tau_hard");
    }
    if (const json* v = maybe(obj, "budget_easy")) {
        cfg.budget_easy = std::size_t(read_positive_int(*v, "difficulty.budget_easy"));
    }
    if (const json* v = maybe(obj, "budget_medium")) {
        cfg.budget_medium = std::size_t(read_positive_int(*v, "difficulty.budget_medium"));
    }
    if (const json* v = maybe(obj, "budget_hard")) {
        cfg.budget_hard = std::size_t(read_positive_int(*v, "difficulty.budget_hard"));
    }
}

void parse_oracle(const json& obj, OracleConfig& cfg) {
    reject_unknown_keys(obj, {"interval_halfwidth", "jitter"}, "oracle");
    if (const json* v = maybe(obj, "interval_halfwidth")) {
        cfg.interval_halfwidth = read_positive_int(*v, "oracle.interval_halfwidth");
    }
    if (const json* v = maybe(obj, "jitter")) cfg.jitter = read_nonneg_int(*v, "oracle.jitter");
}

BackendEndpoint parse_endpoint(const json& obj, const std::string& role) {
    if (!obj.is_object()) throw ConfigError("config: backends." + role + " must be an object");
    reject_unknown_keys(obj,
                        {"mode", "base_url", "trace_path", "timeout_seconds", "retries",
                         "bearer_token"},
                        "backends." + role);
    BackendEndpoint ep;
    if (const json* v = maybe(obj, "mode")) {
        ep.mode = backend_mode_from_string(read_string(*v, "backends." + role + ".mode"));
    }
    if (const json* v = maybe(obj, "base_url")) {
        ep.base_url = read_string(*v, "backends." + role + ".base_url");
    }
    if (const json* v = maybe(obj, "trace_path")) {
        ep.trace_path = read_string(*v, "backends." + role + ".trace_path");
    }
    if (const json* v = maybe(obj, "timeout_seconds")) {
        ep.timeout_seconds = read_positive_double(*v, "backends." + role + ".timeout_seconds");
    }
    if (const json* v = maybe(obj, "retries")) {
        ep.retries = read_nonneg_int(*v, "backends." + role + ".retries");
    }
    if (const json* v = maybe(obj, "bearer_token")) {
        ep.bearer_token = read_string(*v, "backends." + role + ".bearer_token");
    }
    return ep;
}

constexpr const char* kRoles[5] = {"reasoner", "segmenter", "propagator", "localizer", "scorer"};

}  // namespace

PipelineConfig parse_pipeline_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: document must be a JSON object");
    reject_unknown_keys(doc,
                        {"workers", "seed", "tolerance_frac", "out_dir", "sampler", "rewards",
                         "difficulty", "oracle", "backends"},
                        "the top level");
    PipelineConfig cfg;
    if (const json* v = maybe(doc, "workers")) cfg.workers = read_positive_int(*v, "workers");
    if (const json* v = maybe(doc, "seed")) {
        if (!v->is_number_unsigned()) {
            throw ConfigError("config: seed must be a non-negative integer");
        }
        cfg.seed = v->get<std::uint64_t>();
    }
    if (const json* v = maybe(doc, "tolerance_frac")) {
        cfg.tolerance_frac = read_positive_double(*v, "tolerance_frac");
    }
    if (const json* v = maybe(doc, "out_dir")) cfg.out_dir = read_string(*v, "out_dir");
    if (const json* v = maybe(doc, "sampler")) parse_sampler(*v, cfg.sampler);
    if (const json* v = maybe(doc, "rewards")) parse_rewards(*v, cfg.rewards);
    if (const json* v = maybe(doc, "difficulty")) parse_difficulty(*v, cfg.difficulty);
    if (const json* v = maybe(doc, "oracle")) parse_oracle(*v, cfg.oracle);
    if (const json* v = maybe(doc, "backends")) {
        if (!v->is_object()) throw ConfigError("config: backends must be an object");
        for (const auto& [role, entry] : v->items()) {
            if (std::find_if(std::begin(kRoles), std::end(kRoles),
                             [&](const char* r) { return role == r; }) == std::end(kRoles)) {
                throw ConfigError("config: unknown backend role '" + role + "'");
            }
            cfg.backends[role] = parse_endpoint(entry, role);
        }
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
    return parse_pipeline_config(doc);
}

void apply_env_overrides(PipelineConfig& cfg, const std::map<std::string, std::string>& env) {
    const auto lookup = [&](const char* key) -> const std::string* {
        const auto it = env.find(key);
        return it == env.end() ? nullptr : &it->second;
    };
    if (const std::string* v = lookup("RVOS_WORKERS")) {
        try {
            std::size_t pos = 0;
            const int workers = std::stoi(*v, &pos);
            if (pos != v->size() || workers <= 0) throw std::invalid_argument(*v);
            cfg.workers = workers;
        } catch (const std::exception&) {
            throw ConfigError("RVOS_WORKERS: not a positive integer: '" + *v + "'");
        }
    }
    if (const std::string* v = lookup("RVOS_SEED")) {
        try {
            std::size_t pos = 0;
            cfg.seed = std::stoull(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument(*v);
        } catch (const std::exception&) {
            throw ConfigError("RVOS_SEED: not a non-negative integer: '" + *v + "'");
        }
    }
    if (const std::string* v = lookup("RVOS_OUT_DIR")) cfg.out_dir = *v;
    if (const std::string* v = lookup("RVOS_BACKEND_MODE")) {
        force_backend_mode(cfg, backend_mode_from_string(*v));
    }
    if (const std::string* v = lookup("RVOS_BACKEND_URL")) {
        for (const char* role : kRoles) {
            auto it = cfg.backends.find(role);
            if (it != cfg.backends.end() && it->second.base_url.empty()) {
                it->second.base_url = *v;
            }
        }
    }
}

void force_backend_mode(PipelineConfig& cfg, BackendMode mode) {
    for (const char* role : kRoles) {
        if (mode == BackendMode::static_copy && std::string(role) != "propagator") continue;
        cfg.backends[role].mode = mode;
    }
}

}  // namespace rvos
