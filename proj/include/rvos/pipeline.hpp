#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rvos/backends.hpp"
#include "rvos/dataset.hpp"
#include "rvos/difficulty.hpp"
#include "rvos/metrics.hpp"
#include "rvos/rewards.hpp"
#include "rvos/sampler.hpp"

namespace rvos {

struct PipelineConfig {
    SamplerConfig sampler;
    RewardConfig rewards;
    DifficultyConfig difficulty;
    OracleConfig oracle;
    /// Endpoints keyed "reasoner", "segmenter", "propagator", "localizer",
    /// "scorer"; missing roles run the oracle.
    std::map<std::string, BackendEndpoint> backends;
    int workers = 1;
    std::uint64_t seed = 0;
    double tolerance_frac = 0.008;
    std::filesystem::path out_dir = "rvos_out";
};

/// Everything observable about one query's pass through the stages.
struct RunTrace {
    std::string query_id;
    std::string video_id;
    SamplingPlan plan;
    bool sampler_skipped = false;
    bool propagation_skipped = false;
    std::string rollout;
    std::vector<ObjectPrediction> predictions;
    std::size_t l_used = 0;
    int seed_frame = 0;
    /// Stage that raised, when the query failed; the mask output is then
    /// all-background.
    std::optional<std::string> failed_stage;
    std::optional<std::string> error;
    double elapsed_seconds = 0.0;
    /// Recorded wire log, replayable through trace-mode backends.
    std::vector<nlohmann::json> backend_log;
};

struct QueryRunResult {
    Query query;
    std::vector<BinaryMask> masks;
    RunTrace trace;
    /// Per-query scores against the ground-truth union, filled by
    /// score_results.
    double j = 0.0;
    double f = 0.0;
};

struct RunOutput {
    std::vector<QueryRunResult> results;
    EvalReport report;
};

/// Sampler -> reasoner -> per-object segmentation -> propagation, with the
/// per-frame union as the query's mask sequence. Single-frame videos skip
/// the sampler and propagation. Stage errors are captured in the trace,
/// never thrown.
std::pair<std::vector<BinaryMask>, RunTrace> run_query(const Dataset& ds, const Query& q,
                                                       const BackendSet& backends,
                                                       const PipelineConfig& cfg);

/// Ground truth the query is scored against: the per-frame union of its
/// objects' masks.
std::vector<BinaryMask> gt_union_sequence(const Dataset& ds, const Query& q);

/// Scores every result against ground truth, filling per-query j/f.
/// Aggregate J/F/JF averages per-video scores; single-frame queries
/// additionally feed the gIoU/cIoU aggregates.
EvalReport score_results(const Dataset& ds, std::vector<QueryRunResult>& results,
                         double tolerance_frac = 0.008);

/// Runs all queries (up to cfg.workers at a time; trace-mode roles force a
/// single worker) and scores them. Per-query failures are recorded and
/// scored as empty predictions.
RunOutput evaluate(const Dataset& ds, const PipelineConfig& cfg);

nlohmann::ordered_json report_to_json(const EvalReport& report);

/// Writes predictions/<query_id>/ mask archives, tokens.json, report.json,
/// trace.jsonl, and run_log.jsonl under out_dir.
void write_run_outputs(const std::filesystem::path& out_dir, const RunOutput& out);

/// Rebuilds results from a directory written by write_run_outputs (or a
/// bare predictions directory); queries without stored masks score as
/// empty predictions.
std::vector<QueryRunResult> load_predictions(const Dataset& ds,
                                             const std::filesystem::path& pred_root);

/// One reward line: the rollout text paired with its ground truth and an
/// optional resolved budget.
struct RewardBatchItem {
    std::string id;
    RewardBreakdown breakdown;
};

/// Pairs the i-th rollout line with the i-th ground-truth line. Budget
/// precedence: override argument, then the line's "budget", then its
/// "difficulty" dict, then 256. Unparseable rollout lines score zero
/// format rewards instead of aborting.
std::vector<RewardBatchItem> reward_batch(const std::filesystem::path& rollouts_path,
                                          const std::filesystem::path& gt_path,
                                          const PipelineConfig& cfg,
                                          std::optional<std::size_t> budget_override);

nlohmann::ordered_json breakdown_to_json(const RewardBreakdown& b);

/// Parses the config document (all fields optional, unknown keys rejected)
/// and applies RVOS_-prefixed environment overrides.
PipelineConfig parse_pipeline_config(const nlohmann::json& doc);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
void apply_env_overrides(PipelineConfig& cfg,
                         const std::map<std::string, std::string>& env);

/// Forces every role's backend mode; static_copy applies to the propagator
/// only and leaves the other roles untouched.
void force_backend_mode(PipelineConfig& cfg, BackendMode mode);

}  // namespace rvos
