#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvos/backends.hpp"
#include "rvos/dataset.hpp"
#include "rvos/errors.hpp"
#include "rvos/mask_json.hpp"
#include "rvos/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtureRoot = fs::path(RVOS_FIXTURE_DIR) / "dataset";

struct TempDir {
    fs::path path;
    TempDir() {
        std::mt19937_64 rng(std::random_device{}());
        path = fs::temp_directory_path() / ("rvos_pipeline_" + std::to_string(rng()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const rvos::Query& query_by_id(const rvos::Dataset& ds, const std::string& id) {
    for (const auto& q : ds.queries) {
        if (q.id == id) return q;
    }
    throw std::logic_error("no query " + id);
}

const rvos::QueryRunResult* result_by_id(const rvos::RunOutput& out, const std::string& id) {
    for (const auto& r : out.results) {
        if (r.query.id == id) return &r;
    }
    return nullptr;
}

bool all_background(const std::vector<rvos::BinaryMask>& masks) {
    for (const auto& m : masks) {
        if (m.has_foreground()) return false;
    }
    return !masks.empty();
}

struct GarbageReasoner : rvos::Reasoner {
    std::string reason(const rvos::ReasonRequest&) override {
        return "free-form musing without any tags";
    }
};

struct UnreachableSegmenter : rvos::Segmenter {
    rvos::BinaryMask segment(const rvos::SegmentRequest&) override {
        throw rvos::BackendError(rvos::BackendError::Kind::timeout, "segmenter unreachable");
    }
};

/// "w0 w1 ... w{n-1}" as a single non-repeating sentence.
std::string think_of_tokens(int n) {
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i > 0) out += ' ';
        out += "w" + std::to_string(i);
    }
    return out;
}

std::string wrap_rollout(const std::string& think, const std::string& answer) {
    return "<think>" + think + "</think>\n<answer>" + answer + "</answer>";
}

}  // namespace

TEST_CASE("run_query with oracle backends recovers the ground truth") {
    const auto ds = rvos::ingest_dataset(kFixtureRoot);
    const auto backends = rvos::make_oracle_backends(ds);
    const rvos::PipelineConfig cfg;

    SUBCASE("single object") {
        auto [masks, trace] = rvos::run_query(ds, query_by_id(ds, "q1"), backends, cfg);
        CHECK_FALSE(trace.failed_stage.has_value());
        CHECK_FALSE(trace.sampler_skipped);
        CHECK(trace.plan.target_frame == 2);
        CHECK(trace.predictions.size() == 1);
        CHECK(trace.l_used > 0);
        CHECK(masks == rvos::gt_union_sequence(ds, query_by_id(ds, "q1")));
    }

    SUBCASE("two objects are segmented and propagated separately") {
        auto [masks, trace] = rvos::run_query(ds, query_by_id(ds, "q2"), backends, cfg);
        CHECK_FALSE(trace.failed_stage.has_value());
        CHECK(trace.predictions.size() == 2);
        CHECK(masks == rvos::gt_union_sequence(ds, query_by_id(ds, "q2")));
    }
}

TEST_CASE("single-frame videos skip sampling and propagation") {
    const auto ds = rvos::ingest_dataset(kFixtureRoot);
    const auto backends = rvos::make_oracle_backends(ds);
    rvos::TraceRecorder recorder;
    const auto recording = rvos::wrap_recording(backends, recorder);
    const rvos::PipelineConfig cfg;

    auto [masks, trace] = rvos::run_query(ds, query_by_id(ds, "q4"), recording, cfg);
    CHECK(trace.sampler_skipped);
    CHECK(trace.propagation_skipped);
    CHECK(trace.plan.rounds_used == 0);
    CHECK(trace.plan.target_frame == 0);
    CHECK(trace.plan.reference_frames.empty());
    REQUIRE(masks.size() == 1);
    CHECK(masks[0] == ds.gt_mask("img_c", "obj1", 0));

    int reason_calls = 0;
    int segment_calls = 0;
    for (const auto& entry : recorder.entries()) {
        const std::string endpoint = entry.at("endpoint").get<std::string>();
        CHECK(endpoint != "/localize");
        CHECK(endpoint != "/propagate");
        if (endpoint == "/reason") ++reason_calls;
        if (endpoint == "/segment") ++segment_calls;
    }
    CHECK(reason_calls == 1);
    CHECK(segment_calls == 1);
}

TEST_CASE("run_query records the failing stage and yields empty masks") {
    const auto ds = rvos::ingest_dataset(kFixtureRoot);
    const rvos::PipelineConfig cfg;

    SUBCASE("rollout without tags fails at parse") {
        auto backends = rvos::make_oracle_backends(ds);
        backends.reasoner = std::make_unique<GarbageReasoner>();
        auto [masks, trace] = rvos::run_query(ds, query_by_id(ds, "q1"), backends, cfg);
        CHECK(trace.failed_stage == "parse");
        CHECK(trace.error.has_value());
        CHECK(trace.rollout == "free-form musing without any tags");
        CHECK(masks.size() == 5);
        CHECK(all_background(masks));
    }

    SUBCASE("segmenter failure is attributed to its stage") {
        auto backends = rvos::make_oracle_backends(ds);
        backends.segmenter = std::make_unique<UnreachableSegmenter>();
        auto [masks, trace] = rvos::run_query(ds, query_by_id(ds, "q1"), backends, cfg);
        CHECK(trace.failed_stage == "segment");
        CHECK(trace.error == "segmenter unreachable");
        CHECK(all_background(masks));
    }
}

TEST_CASE("gt_union_sequence merges object masks per frame") {
    const auto ds = rvos::ingest_dataset(kFixtureRoot);

    const auto single = rvos::gt_union_sequence(ds, query_by_id(ds, "q1"));
    CHECK(single == ds.gt_mask_sequence("vid_a", "obj1"));

    const auto both = rvos::gt_union_sequence(ds, query_by_id(ds, "q2"));
    REQUIRE(both.size() == 4);
    CHECK(both[1].foreground_area() == 36 + 25);

    rvos::Query empty_query{"qx", "vid_b", "nothing", {}, std::nullopt};
    CHECK(all_background(rvos::gt_union_sequence(ds, empty_query)));
}

TEST_CASE("oracle evaluation is perfect and stable across workers") {
    const auto ds = rvos::ingest_dataset(kFixtureRoot);
    rvos::PipelineConfig cfg;

    cfg.workers = 1;
    const auto serial = rvos::evaluate(ds, cfg);
    cfg.workers = 4;
    const auto parallel = rvos::evaluate(ds, cfg);
    const auto parallel_again = rvos::evaluate(ds, cfg);

    for (const auto& r : serial.results) CHECK_FALSE(r.trace.failed_stage.has_value());
    for (const auto& [id, vs] : serial.report.per_video) {
        CHECK(vs.j == 1.0);
        CHECK(vs.f == 1.0);
        CHECK(vs.jf == 1.0);
    }
    CHECK(serial.report.per_video.size() == 3);
    CHECK(serial.report.aggregate.jf == 1.0);
    REQUIRE(serial.report.aggregate_g_iou.has_value());
    REQUIRE(serial.report.aggregate_c_iou.has_value());
    CHECK(*serial.report.aggregate_g_iou == 1.0);
    CHECK(*serial.report.aggregate_c_iou == 1.0);

    double token_sum = 0.0;
    for (const auto& r : serial.results) token_sum += double(r.trace.l_used);
    CHECK(serial.report.tokens.mean == doctest::Approx(token_sum / 5.0));
    CHECK(serial.report.tokens.median > 0.0);

    const std::string serial_dump = rvos::report_to_json(serial.report).dump();
    CHECK(serial_dump == rvos::report_to_json(parallel.report).dump());
    CHECK(serial_dump == rvos::report_to_json(parallel_again.report).dump());

    const json doc = json::parse(serial_dump);
    CHECK(doc.at("videos").at("vid_a").at("J") == 1.0);
    CHECK(doc.at("aggregate").contains("gIoU"));
    CHECK(doc.at("aggregate").contains("cIoU"));
    CHECK(doc.at("tokens").contains("median"));
}

TEST_CASE("static-copy propagation freezes the seed frame") {
    const auto ds = rvos::ingest_dataset(kFixtureRoot);
    rvos::PipelineConfig cfg;
    cfg.backends["propagator"].mode = rvos::BackendMode::static_copy;

    const auto out = rvos::evaluate(ds, cfg);
    const auto* q1 = result_by_id(out, "q1");
    REQUIRE(q1 != nullptr);
    CHECK_FALSE(q1->trace.failed_stage.has_value());
    CHECK(q1->trace.plan.target_frame == 2);
    const std::vector<rvos::BinaryMask> frozen(5, ds.gt_mask("vid_a", "obj1", 2));
    CHECK(q1->masks == frozen);
    // IoU of the frame-2 box against frames 0..4 is 1/3, 3/5, 1, 3/5, 1/3.
    CHECK(q1->j == doctest::Approx(43.0 / 75.0));
    CHECK(q1->f < 1.0);

    const auto* q5 = result_by_id(out, "q5");
    REQUIRE(q5 != nullptr);
    CHECK(q5->trace.plan.target_frame == 1);
    CHECK(q5->j == doctest::Approx(281.0 / 525.0));

    CHECK(out.report.per_video.at("vid_a").j == doctest::Approx(97.0 / 175.0));
    CHECK(out.report.per_video.at("vid_a").jf < 1.0);
    CHECK(out.report.aggregate.jf < 1.0);
    // The single-frame query never propagates, so it stays perfect.
    CHECK(out.report.per_video.at("img_c").jf == 1.0);
}

TEST_CASE("run outputs round-trip through load_predictions and trace replay") {
    const auto ds = rvos::ingest_dataset(kFixtureRoot);
    TempDir tmp;
    rvos::PipelineConfig cfg;
    const auto out = rvos::evaluate(ds, cfg);
    rvos::write_run_outputs(tmp.path, out);

    CHECK(fs::exists(tmp.path / "report.json"));
    CHECK(fs::exists(tmp.path / "tokens.json"));
    CHECK(fs::exists(tmp.path / "trace.jsonl"));
    CHECK(fs::exists(tmp.path / "run_log.jsonl"));
    CHECK(fs::exists(tmp.path / "predictions/q1/00000.mask.json"));
    CHECK(fs::exists(tmp.path / "predictions/q4/00000.mask.json"));

    const std::string report_dump = rvos::report_to_json(out.report).dump();

    SUBCASE("stored predictions rescore to the same report") {
        auto loaded = rvos::load_predictions(ds, tmp.path);
        REQUIRE(loaded.size() == out.results.size());
        for (std::size_t i = 0; i < loaded.size(); ++i) {
            CHECK(loaded[i].masks == out.results[i].masks);
            CHECK(loaded[i].trace.l_used == out.results[i].trace.l_used);
        }
        const auto rescored = rvos::score_results(ds, loaded, cfg.tolerance_frac);
        CHECK(rvos::report_to_json(rescored).dump() == report_dump);
    }

    SUBCASE("trace replay reproduces the run") {
        rvos::PipelineConfig replay_cfg;
        rvos::force_backend_mode(replay_cfg, rvos::BackendMode::trace);
        for (auto& [role, ep] : replay_cfg.backends) ep.trace_path = tmp.path / "trace.jsonl";
        replay_cfg.workers = 4;  // trace mode must force serial execution
        const auto replayed = rvos::evaluate(ds, replay_cfg);
        CHECK(rvos::report_to_json(replayed.report).dump() == report_dump);
        for (std::size_t i = 0; i < replayed.results.size(); ++i) {
            CHECK(replayed.results[i].masks == out.results[i].masks);
        }
    }

    SUBCASE("a corrupted reasoner response fails one query, not the run") {
        // Replay hands entries out FIFO, so the last /reason entry belongs
        // to the last query; corrupting it leaves the others untouched.
        std::istringstream in(read_text(tmp.path / "trace.jsonl"));
        std::vector<std::string> lines;
        std::string line;
        std::size_t last_reason = 0;
        bool saw_reason = false;
        while (std::getline(in, line)) {
            lines.push_back(line);
            if (json::parse(line).at("endpoint") == "/reason") {
                last_reason = lines.size() - 1;
                saw_reason = true;
            }
        }
        REQUIRE(saw_reason);
        json entry = json::parse(lines[last_reason]);
        entry["response"]["text"] = "scrambled output with no tags";
        lines[last_reason] = entry.dump();
        std::string joined;
        for (const auto& l : lines) joined += l + "\n";
        write_text(tmp.path / "tampered.jsonl", joined);

        rvos::PipelineConfig replay_cfg;
        rvos::force_backend_mode(replay_cfg, rvos::BackendMode::trace);
        for (auto& [role, ep] : replay_cfg.backends) ep.trace_path = tmp.path / "tampered.jsonl";
        const auto replayed = rvos::evaluate(ds, replay_cfg);
        REQUIRE(replayed.results.size() == 5);

        const auto* q5 = result_by_id(replayed, "q5");
        REQUIRE(q5 != nullptr);
        CHECK(q5->trace.failed_stage == "parse");
        CHECK(q5->trace.error.has_value());
        CHECK(all_background(q5->masks));

        const auto* q1 = result_by_id(replayed, "q1");
        REQUIRE(q1 != nullptr);
        CHECK_FALSE(q1->trace.failed_stage.has_value());
        CHECK(q1->j == 1.0);
        CHECK(replayed.report.per_video.at("vid_a").jf < 1.0);
        CHECK(replayed.report.per_video.at("vid_b").jf == 1.0);
        CHECK(replayed.report.per_video.at("img_c").jf == 1.0);
    }

    SUBCASE("missing prediction directories score as empty") {
        fs::remove_all(tmp.path / "predictions/q4");
        auto loaded = rvos::load_predictions(ds, tmp.path);
        const auto rescored = rvos::score_results(ds, loaded, cfg.tolerance_frac);
        CHECK(rescored.per_video.at("img_c").jf == 0.0);
        REQUIRE(rescored.aggregate_g_iou.has_value());
        CHECK(*rescored.aggregate_g_iou == 0.0);
        CHECK(rescored.per_video.at("vid_a").jf == 1.0);
    }

    SUBCASE("prediction masks with foreign dimensions are rejected") {
        rvos::write_mask_file(tmp.path / "predictions/q4/00000.mask.json",
                              rvos::BinaryMask::filled(3, 3, true));
        CHECK_THROWS_AS(rvos::load_predictions(ds, tmp.path), rvos::MaskFormatError);
    }
}

TEST_CASE("reward_batch scores rollout lines in order") {
    TempDir tmp;
    const auto gt_mask = rvos::BinaryMask::from_runs(
        24, 24, [] {
            // 6x6 square with corner (2,2), matching bbox [2,2,7,7].
            std::vector<std::int64_t> runs{2 * 24 + 2};
            for (int row = 0; row < 6; ++row) {
                runs.push_back(6);
                if (row < 5) runs.push_back(18);
            }
            runs.push_back(24 * 24 - (7 * 24 + 8));
            return runs;
        }());
    const std::string answer =
        "[{'bbox_2d': [2, 2, 7, 7], 'point_pos': [4, 4, 1], 'point_neg': [20, 20, 0]}]";

    json gt_object = {{"bbox_2d", {2, 2, 7, 7}},
                   {"center", {4, 4}},
                   {"masks", json::array({json(rvos::mask_to_json(gt_mask))})}};
    json gt0 = {{"id", "g0"},
                {"objects", json::array({gt_object})},
                {"difficulty",
                 {{"scene", 4}, {"segmentation", 6}, {"temporal", 5}, {"motion", 3},
                  {"language", 7}}}};
    json gt1 = {{"id", "g1"}, {"objects", json::array({gt_object})}, {"budget", 96}};
    json gt2 = {{"id", "g2"}, {"objects", json::array({gt_object})}};
    json gt3 = {{"id", "g3"}, {"objects", json::array({gt_object})}, {"mask_iou", 0.8}};
    write_text(tmp.path / "gt.jsonl",
               gt0.dump() + "\n" + gt1.dump() + "\n" + gt2.dump() + "\n" + gt3.dump() + "\n");

    const std::string r0 =
        json{{"id", "r0"}, {"text", wrap_rollout(think_of_tokens(10), answer)}}.dump();
    const std::string r1 =
        json{{"text", wrap_rollout(think_of_tokens(136), answer)}}.dump();
    const std::string r2 = "this is not even json";
    const std::string r3 = json{{"text", wrap_rollout("Brief.", answer)}}.dump();
    write_text(tmp.path / "rollouts.jsonl", r0 + "\n" + r1 + "\n" + r2 + "\n" + r3 + "\n");

    const rvos::PipelineConfig cfg;
    const auto items =
        rvos::reward_batch(tmp.path / "rollouts.jsonl", tmp.path / "gt.jsonl", cfg, std::nullopt);
    REQUIRE(items.size() == 4);

    // Rollout ids win; the ground-truth id fills in when the rollout has none.
    CHECK(items[0].id == "r0");
    CHECK(items[1].id == "g1");
    CHECK(items[2].id == "g2");

    // The difficulty dict averages to 5.0, a medium budget of 176.
    CHECK(items[0].breakdown.l_budget == 176);
    CHECK(items[0].breakdown.r_final == doctest::Approx(7.0));

    // 136 tokens against a budget of 96: s = 1 - 0.002 * 40 = 0.92.
    CHECK(items[1].breakdown.l_budget == 96);
    CHECK(items[1].breakdown.l_used == 136);
    CHECK(items[1].breakdown.penalty_s == doctest::Approx(0.92));
    CHECK(items[1].breakdown.r_final == doctest::Approx(6.44));

    // The unparseable line still yields a breakdown: zero format rewards.
    CHECK(items[2].breakdown.r_think_format == 0.0);
    CHECK(items[2].breakdown.r_answer_format == 0.0);
    CHECK(items[2].breakdown.r_bbox_iou == 0.0);
    CHECK(items[2].breakdown.r_non_repeat == 1.0);
    CHECK(items[2].breakdown.r_original == doctest::Approx(1.0));
    CHECK(items[2].breakdown.l_budget == 256);

    // An external mask-IoU term joins the sum.
    REQUIRE(items[3].breakdown.r_mask_iou.has_value());
    CHECK(*items[3].breakdown.r_mask_iou == doctest::Approx(0.8));
    CHECK(items[3].breakdown.r_original == doctest::Approx(7.8));

    SUBCASE("a budget override beats per-line annotations") {
        const auto overridden = rvos::reward_batch(tmp.path / "rollouts.jsonl",
                                                   tmp.path / "gt.jsonl", cfg, 50);
        for (const auto& item : overridden) CHECK(item.breakdown.l_budget == 50);
        CHECK(overridden[1].breakdown.penalty_s == doctest::Approx(1.0 - 0.002 * 86));
    }

    SUBCASE("breakdown serialization carries every component") {
        const auto doc = rvos::breakdown_to_json(items[3].breakdown);
        CHECK(doc.at("r_mask_iou") == doctest::Approx(0.8));
        CHECK(doc.at("r_final") == doctest::Approx(7.8));
        CHECK(doc.at("l_budget") == 256);
        CHECK_FALSE(rvos::breakdown_to_json(items[0].breakdown).contains("r_mask_iou"));
    }

    SUBCASE("mismatched line counts are rejected") {
        write_text(tmp.path / "short.jsonl", r0 + "\n");
        CHECK_THROWS_AS(rvos::reward_batch(tmp.path / "short.jsonl", tmp.path / "gt.jsonl", cfg,
                                           std::nullopt),
                        rvos::ConfigError);
    }

    SUBCASE("a broken ground-truth line names its location") {
        write_text(tmp.path / "bad_gt.jsonl", gt0.dump() + "\n{{{\n" + gt2.dump() + "\n" +
                                                  gt3.dump() + "\n");
        CHECK_THROWS_WITH_AS(rvos::reward_batch(tmp.path / "rollouts.jsonl",
                                                tmp.path / "bad_gt.jsonl", cfg, std::nullopt),
                             doctest::Contains("bad_gt.jsonl:2"), rvos::ConfigError);
    }

    SUBCASE("ground truth without an objects array is rejected") {
        write_text(tmp.path / "no_objects.jsonl",
                   R"({"id":"g0"})" "\n" + gt1.dump() + "\n" + gt2.dump() + "\n" + gt3.dump() +
                       "\n");
        CHECK_THROWS_WITH_AS(rvos::reward_batch(tmp.path / "rollouts.jsonl",
                                                tmp.path / "no_objects.jsonl", cfg, std::nullopt),
                             doctest::Contains("'objects'"), rvos::ConfigError);
    }
}

TEST_CASE("pipeline config parsing") {
    SUBCASE("a full document lands in every field") {
        const json doc = json::parse(R"({
            "workers": 4,
            "seed": 7,
            "tolerance_frac": 0.01,
            "out_dir": "results",
            "sampler": {"delta": 0.5, "k_interval_samples": 3, "m_percent_samples": 2,
                        "t_ref": 6, "strategy": "local", "max_rounds": 4},
            "rewards": {"beta": 0.004, "tau_neg": 25.0, "clamp_penalty_at_zero": false},
            "difficulty": {"tau_easy": 2.5, "tau_hard": 7.0, "budget_easy": 64,
                           "budget_medium": 128, "budget_hard": 512},
            "oracle": {"interval_halfwidth": 4, "jitter": 2},
            "backends": {
                "reasoner": {"mode": "live", "base_url": "http://10.0.0.5:8000",
                             "timeout_seconds": 5.0, "retries": 1, "bearer_token": "sesame"},
                "propagator": {"mode": "static_copy"},
                "localizer": {"mode": "trace", "trace_path": "runs/trace.jsonl"}
            }
        })");
        const auto cfg = rvos::parse_pipeline_config(doc);
        CHECK(cfg.workers == 4);
        CHECK(cfg.seed == 7);
        CHECK(cfg.tolerance_frac == doctest::Approx(0.01));
        CHECK(cfg.out_dir == fs::path("results"));
        CHECK(cfg.sampler.delta == doctest::Approx(0.5));
        CHECK(cfg.sampler.strategy == rvos::ReferenceStrategy::local);
        CHECK(cfg.sampler.max_rounds == 4);
        CHECK(cfg.rewards.beta == doctest::Approx(0.004));
        CHECK_FALSE(cfg.rewards.clamp_penalty_at_zero);
        CHECK(cfg.difficulty.budget_hard == 512);
        CHECK(cfg.oracle.jitter == 2);
        CHECK(cfg.backends.at("reasoner").mode == rvos::BackendMode::live);
        CHECK(cfg.backends.at("reasoner").bearer_token == "sesame");
        CHECK(cfg.backends.at("propagator").mode == rvos::BackendMode::static_copy);
        CHECK(cfg.backends.at("localizer").trace_path == fs::path("runs/trace.jsonl"));
        CHECK(cfg.backends.count("segmenter") == 0);
    }

    SUBCASE("defaults survive an empty document") {
        const auto cfg = rvos::parse_pipeline_config(json::object());
        CHECK(cfg.workers == 1);
        CHECK(cfg.sampler.delta == doctest::Approx(0.3));
        CHECK(cfg.backends.empty());
    }

    SUBCASE("rejections") {
        CHECK_THROWS_WITH_AS(rvos::parse_pipeline_config(json::parse(R"({"worker": 2})")),
                             doctest::Contains("unknown key 'worker'"), rvos::ConfigError);
        CHECK_THROWS_AS(rvos::parse_pipeline_config(json::parse(R"({"workers": 0})")),
                        rvos::ConfigError);
        CHECK_THROWS_AS(rvos::parse_pipeline_config(json::parse(R"({"seed": -1})")),
                        rvos::ConfigError);
        CHECK_THROWS_AS(
            rvos::parse_pipeline_config(json::parse(R"({"sampler": {"delta": 1.5}})")),
            rvos::ConfigError);
        CHECK_THROWS_AS(
            rvos::parse_pipeline_config(json::parse(R"({"sampler": {"strategy": "psychic"}})")),
            rvos::ConfigError);
        CHECK_THROWS_WITH_AS(
            rvos::parse_pipeline_config(json::parse(R"({"backends": {"waiter": {}}})")),
            doctest::Contains("unknown backend role 'waiter'"), rvos::ConfigError);
        CHECK_THROWS_AS(rvos::parse_pipeline_config(
                            json::parse(R"({"difficulty": {"tau_easy": 8.0, "tau_hard": 6.0}})")),
                        rvos::ConfigError);
        CHECK_THROWS_AS(rvos::parse_pipeline_config(json::parse(R"([1, 2])")),
                        rvos::ConfigError);
    }

    SUBCASE("load_pipeline_config reads a file") {
        TempDir tmp;
        write_text(tmp.path / "config.json", R"({"workers": 3})");
        CHECK(rvos::load_pipeline_config(tmp.path / "config.json").workers == 3);
        write_text(tmp.path / "broken.json", "not json");
        CHECK_THROWS_AS(rvos::load_pipeline_config(tmp.path / "broken.json"), rvos::ConfigError);
        CHECK_THROWS_AS(rvos::load_pipeline_config(tmp.path / "absent.json"), rvos::ConfigError);
    }
}

TEST_CASE("environment overrides") {
    rvos::PipelineConfig cfg;

    SUBCASE("numeric overrides") {
        rvos::apply_env_overrides(cfg, {{"RVOS_WORKERS", "6"}, {"RVOS_SEED", "99"}});
        CHECK(cfg.workers == 6);
        CHECK(cfg.seed == 99);
        CHECK_THROWS_AS(rvos::apply_env_overrides(cfg, {{"RVOS_WORKERS", "many"}}),
                        rvos::ConfigError);
        CHECK_THROWS_AS(rvos::apply_env_overrides(cfg, {{"RVOS_SEED", "7x"}}),
                        rvos::ConfigError);
    }

    SUBCASE("out_dir override") {
        rvos::apply_env_overrides(cfg, {{"RVOS_OUT_DIR", "elsewhere"}});
        CHECK(cfg.out_dir == fs::path("elsewhere"));
    }

    SUBCASE("backend mode override touches every role") {
        rvos::apply_env_overrides(cfg, {{"RVOS_BACKEND_MODE", "trace"}});
        CHECK(cfg.backends.size() == 5);
        for (const auto& [role, ep] : cfg.backends) CHECK(ep.mode == rvos::BackendMode::trace);
        CHECK_THROWS_AS(rvos::apply_env_overrides(cfg, {{"RVOS_BACKEND_MODE", "psychic"}}),
                        rvos::ConfigError);
    }

    SUBCASE("static_copy only reaches the propagator") {
        rvos::force_backend_mode(cfg, rvos::BackendMode::static_copy);
        CHECK(cfg.backends.size() == 1);
        CHECK(cfg.backends.at("propagator").mode == rvos::BackendMode::static_copy);
    }

    SUBCASE("url override fills only blank urls") {
        cfg.backends["reasoner"].mode = rvos::BackendMode::live;
        cfg.backends["segmenter"].mode = rvos::BackendMode::live;
        cfg.backends["segmenter"].base_url = "http://pinned:1";
        rvos::apply_env_overrides(cfg, {{"RVOS_BACKEND_URL", "http://fleet:8000"}});
        CHECK(cfg.backends.at("reasoner").base_url == "http://fleet:8000");
        CHECK(cfg.backends.at("segmenter").base_url == "http://pinned:1");
    }
}
