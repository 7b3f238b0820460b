#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rvos/backends.hpp"
#include "rvos/dataset.hpp"
#include "rvos/difficulty.hpp"
#include "rvos/errors.hpp"
#include "rvos/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::map<std::string, std::string> env_overrides() {
    std::map<std::string, std::string> env;
    for (const char* key : {"RVOS_WORKERS", "RVOS_SEED", "RVOS_OUT_DIR", "RVOS_BACKEND_MODE",
                            "RVOS_BACKEND_URL"}) {
        if (const char* value = std::getenv(key)) env[key] = value;
    }
    return env;
}

std::string fixed4(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

void print_report(const rvos::EvalReport& report) {
    for (const auto& [id, vs] : report.per_video) {
        std::cout << id << "  J " << fixed4(vs.j) << "  F " << fixed4(vs.f) << "  J&F "
                  << fixed4(vs.jf) << "\n";
    }
    std::cout << "aggregate  J " << fixed4(report.aggregate.j) << "  F "
              << fixed4(report.aggregate.f) << "  J&F " << fixed4(report.aggregate.jf) << "\n";
    if (report.aggregate_g_iou) {
        std::cout << "images  gIoU " << fixed4(*report.aggregate_g_iou) << "  cIoU "
                  << fixed4(*report.aggregate_c_iou) << "\n";
    }
    std::cout << "tokens  mean " << fixed4(report.tokens.mean) << "  median "
              << fixed4(report.tokens.median) << "\n";
}

void write_text_file(const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw rvos::ConfigError("cannot write " + path.string());
    out << body;
}

/// Shared option state; CLI11 fills it, the command handlers read it.
struct Args {
    fs::path dataset;
    fs::path config;
    fs::path pred;
    fs::path report;
    fs::path rollouts;
    fs::path gt;
    fs::path trace;
    fs::path in;
    fs::path out;
    std::string video;
    std::string query;
    std::string backend_mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> budget;
    std::optional<fs::path> out_dir;
};

rvos::PipelineConfig make_config(const Args& a) {
    rvos::PipelineConfig cfg;
    if (!a.config.empty()) cfg = rvos::load_pipeline_config(a.config);
    rvos::apply_env_overrides(cfg, env_overrides());
    if (!a.backend_mode.empty()) {
        rvos::force_backend_mode(cfg, rvos::backend_mode_from_string(a.backend_mode));
    }
    if (a.seed) cfg.seed = *a.seed;
    if (a.out_dir) cfg.out_dir = *a.out_dir;
    return cfg;
}

int cmd_run(const Args& a) {
    const rvos::PipelineConfig cfg = make_config(a);
    const rvos::Dataset ds = rvos::ingest_dataset(a.dataset);
    const rvos::RunOutput out = rvos::evaluate(ds, cfg);
    rvos::write_run_outputs(cfg.out_dir, out);

    print_report(out.report);
    int failures = 0;
    for (const auto& r : out.results) failures += r.trace.failed_stage.has_value() ? 1 : 0;
    if (failures > 0) {
        std::cout << failures << " of " << out.results.size()
                  << " queries failed; see run_log.jsonl\n";
    }
    std::cout << "outputs written to " << cfg.out_dir.string() << "\n";
    return 0;
}

int cmd_evaluate(const Args& a) {
    const rvos::PipelineConfig cfg = make_config(a);
    const rvos::Dataset ds = rvos::ingest_dataset(a.dataset);
    std::vector<rvos::QueryRunResult> results = rvos::load_predictions(ds, a.pred);
    const rvos::EvalReport report = rvos::score_results(ds, results, cfg.tolerance_frac);
    write_text_file(a.report, rvos::report_to_json(report).dump(2) + "\n");
    print_report(report);
    std::cout << "report written to " << a.report.string() << "\n";
    return 0;
}

int cmd_reward(const Args& a) {
    const rvos::PipelineConfig cfg = make_config(a);
    const auto items = rvos::reward_batch(a.rollouts, a.gt, cfg, a.budget);
    std::string body;
    for (const auto& item : items) {
        ordered_json line;
        line["id"] = item.id;
        const ordered_json fields = rvos::breakdown_to_json(item.breakdown);
        line.update(fields);
        body += line.dump() + "\n";
    }
    if (a.out.empty()) {
        std::cout << body;
    } else {
        write_text_file(a.out, body);
        std::cout << items.size() << " breakdowns written to " << a.out.string() << "\n";
    }
    return 0;
}

int cmd_sample(const Args& a) {
    rvos::PipelineConfig cfg = make_config(a);
    const rvos::Dataset ds = rvos::ingest_dataset(a.dataset);
    const rvos::VideoInfo& video = ds.video(a.video);

    const bool replaying = cfg.backends.count("localizer") != 0 &&
                           cfg.backends.at("localizer").mode == rvos::BackendMode::trace;
    for (auto& [role, ep] : cfg.backends) {
        if (ep.mode == rvos::BackendMode::trace && ep.trace_path.empty()) ep.trace_path = a.trace;
    }

    rvos::OracleConfig oracle_cfg = cfg.oracle;
    oracle_cfg.seed = cfg.seed;
    const rvos::BackendSet backends = rvos::make_backends(ds, cfg.backends, oracle_cfg);

    rvos::SamplingPlan plan;
    if (replaying) {
        plan = rvos::build_sampling_plan(rvos::to_video_meta(video), *backends.localizer,
                                         a.video, a.query, cfg.sampler);
    } else {
        rvos::TraceRecorder recorder;
        const rvos::BackendSet recording = rvos::wrap_recording(backends, recorder);
        plan = rvos::build_sampling_plan(rvos::to_video_meta(video), *recording.localizer,
                                         a.video, a.query, cfg.sampler);
        rvos::write_trace_file(a.trace, recorder.entries());
    }

    ordered_json doc;
    doc["video_id"] = a.video;
    doc["key_segment"] = {plan.key_segment.start, plan.key_segment.end};
    doc["target_frame"] = plan.target_frame;
    doc["reference_frames"] = plan.reference_frames;
    doc["rounds_used"] = plan.rounds_used;
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int cmd_score_difficulty(const Args& a) {
    const rvos::PipelineConfig cfg = make_config(a);
    rvos::Dataset ds;
    if (!a.dataset.empty()) ds = rvos::ingest_dataset(a.dataset);
    rvos::OracleConfig oracle_cfg = cfg.oracle;
    oracle_cfg.seed = cfg.seed;
    const rvos::BackendSet backends = rvos::make_backends(ds, cfg.backends, oracle_cfg);

    std::ifstream in(a.in, std::ios::binary);
    if (!in) throw rvos::ConfigError("cannot open " + a.in.string());
    std::string body;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = a.in.filename().string() + ":" + std::to_string(line_no);
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw rvos::ConfigError(where + ": not a JSON object");
        }
        if (!doc.contains("query") || !doc["query"].is_string()) {
            throw rvos::ConfigError(where + ": needs a 'query' string");
        }
        const auto text_field = [&](const char* key) {
            return doc.contains(key) && doc[key].is_string() ? doc[key].get<std::string>()
                                                             : std::string{};
        };
        const std::string prompt = rvos::render_scoring_prompt(
            doc["query"].get<std::string>(), text_field("visual_desc"),
            text_field("textual_desc"));
        const rvos::DifficultyScores scores =
            rvos::parse_difficulty_response(backends.scorer->score_difficulty(prompt));
        const rvos::DifficultyProfile profile =
            rvos::aggregate_difficulty(scores, cfg.difficulty);

        ordered_json out_line;
        if (doc.contains("id") && doc["id"].is_string()) out_line["id"] = doc["id"];
        out_line["scene"] = profile.scene;
        out_line["segmentation"] = profile.segmentation;
        out_line["temporal"] = profile.temporal;
        out_line["motion"] = profile.motion;
        out_line["language"] = profile.language;
        out_line["d_score"] = profile.d_score;
        out_line["level"] = rvos::to_string(profile.level);
        out_line["token_budget"] = rvos::token_budget(profile, cfg.difficulty);
        body += out_line.dump() + "\n";
    }
    write_text_file(a.out, body);
    std::cout << line_no << " lines scored, written to " << a.out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reasoning-driven referring video object segmentation toolkit"};
    app.require_subcommand(1);
    Args a;

    const auto add_mode = [&](CLI::App* cmd) {
        cmd->add_option("--backend-mode", a.backend_mode,
                        "Force every backend role to one mode (oracle, trace, live, static_copy)");
    };
    const auto add_config = [&](CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--config", a.config, "Pipeline config JSON");
        if (required) opt->required();
    };

    CLI::App* run = app.add_subcommand("run", "Run the pipeline over a dataset and score it");
    run->add_option("--dataset", a.dataset, "Dataset root directory")->required();
    add_config(run, true);
    add_mode(run);
    run->add_option("--seed", a.seed, "Deterministic seed override");
    run->add_option("--out", a.out_dir, "Output directory (default from config)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score stored predictions against a dataset");
    evaluate->add_option("--dataset", a.dataset, "Dataset root directory")->required();
    evaluate->add_option("--pred", a.pred, "Run output directory (or bare predictions dir)")
        ->required();
    evaluate->add_option("--report", a.report, "Report JSON destination")->required();
    add_config(evaluate, false);

    CLI::App* reward = app.add_subcommand("reward", "Score rollout lines against ground truth");
    reward->add_option("--rollouts", a.rollouts, "Rollout JSONL")->required();
    reward->add_option("--gt", a.gt, "Ground-truth JSONL")->required();
    reward->add_option("--budget", a.budget, "Token budget override for every line");
    reward->add_option("--out", a.out, "Breakdown JSONL destination (default stdout)");
    add_config(reward, false);

    CLI::App* sample = app.add_subcommand("sample", "Build a sampling plan for one query");
    sample->add_option("--dataset", a.dataset, "Dataset root directory")->required();
    sample->add_option("--video", a.video, "Video id within the dataset")->required();
    sample->add_option("--query", a.query, "Referring expression")->required();
    sample->add_option("--trace", a.trace,
                       "Localizer trace file: written, or replayed under --backend-mode trace")
        ->required();
    add_config(sample, false);
    add_mode(sample);
    sample->add_option("--seed", a.seed, "Deterministic seed override");

    CLI::App* score = app.add_subcommand("score-difficulty", "Score query difficulty");
    score->add_option("--in", a.in, "Input JSONL with query/visual_desc/textual_desc")
        ->required();
    score->add_option("--out", a.out, "Scored JSONL destination")->required();
    score->add_option("--dataset", a.dataset, "Dataset for annotation-aware oracle scoring");
    add_config(score, false);
    add_mode(score);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(a);
        if (*evaluate) return cmd_evaluate(a);
        if (*reward) return cmd_reward(a);
        if (*sample) return cmd_sample(a);
        if (*score) return cmd_score_difficulty(a);
    } catch (const rvos::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
