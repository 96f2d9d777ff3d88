#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmsc/config.hpp"
#include "mmsc/gateway.hpp"
#include "mmsc/metrics.hpp"
#include "mmsc/pipeline.hpp"
#include "mmsc/votes.hpp"

namespace mmsc {

enum class Aggregation { SelfConsistency, Single };

std::string_view to_string(Aggregation aggregation);
Aggregation parse_aggregation(std::string_view text); // throws InvalidConfig

// One named experiment: which prompts, which inputs, how many samples, how
// the votes combine.
struct RunConfig {
    std::string name;
    std::vector<PromptId> prompts;
    Modality modality = Modality::AudioOnly;
    SamplingParams sampling;
    Aggregation aggregation = Aggregation::SelfConsistency;

    int trajectories_per_utterance() const {
        return static_cast<int>(prompts.size()) * sampling.samples_per_prompt;
    }

    // Throws InvalidConfig (or IncompatibleModality) for: empty or
    // duplicated prompts, P2 under text-only input, DIRECT/COT mixed with
    // other prompts, or single aggregation with more than one sample.
    void validate() const;
};

// The nine built-in configurations, in report order: direct, cot,
// mm-sc-audio, mm-sc-text, mm-sc-audio-text, wo-P1, wo-P2, wo-P3, wo-P4.
const std::vector<RunConfig>& builtin_configs();
const RunConfig* find_builtin(std::string_view name);

// Every tunable in one place, with its default.
struct PipelineSettings {
    RunConfig run;                      // defaults to mm-sc-audio
    double min_session_score = 0.6;
    ExclusionPolicy exclusion = ExclusionPolicy::Wholesale;
    int concurrency = 4;
    BackendMode backend = BackendMode::Mock;
    bool replay_only = false;
    std::filesystem::path cache_dir = "cache";
    std::string mock_script;            // path to a mock script file, optional
    bool map_unresolved_to_fn = true;
    AlignerOptions aligner;

    PipelineSettings();
};

// Applies a flat config file on top of current values. Unknown keys are
// rejected with InvalidConfig.
void apply_flat_config(PipelineSettings& settings, const FlatConfig& config);

// Builds the gateway described by the settings: live (env-configured HTTP),
// mock (optionally scripted), or replay (cache only).
AlmGateway make_gateway(const PipelineSettings& settings);

// One prediction line of a *.pred.jsonl file.
struct UtterancePrediction {
    UtteranceId id;
    std::optional<MICode> final; // nullopt = unresolved
    VoteTally tally;
    bool tie_break_applied = false;
    std::optional<MICode> gold;
};

std::string prediction_to_jsonl(const UtterancePrediction& pred);
UtterancePrediction prediction_from_jsonl(std::string_view line);

struct RunArtifacts {
    RunConfig config;
    std::vector<Trajectory> trajectories;
    std::vector<UtterancePrediction> predictions;
    MetricsReport report;
    int tie_breaks = 0;
    int unresolved = 0;
    int score_conflicts = 0;
    std::vector<TrajectoryFailure> failures;
};

// Collect, parse, aggregate and score every utterance of the dataset under
// one configuration. Writes traj.jsonl, pred.jsonl, metrics.json and
// run-manifest.json under <out_dir>/<config.name>/. When any trajectory
// failed the artifacts are still written, the manifest says "incomplete",
// and FailedTrajectories is thrown.
RunArtifacts run_experiment(const RunConfig& config, const Dataset& dataset, AlmGateway& gateway,
                            const std::filesystem::path& out_dir,
                            bool map_unresolved_to_fn = true);

struct SuiteRow {
    std::string config_name;
    std::optional<MetricsReport> report;
    std::string error;
};

// Runs all nine built-in configurations sequentially, recording per-config
// failures without stopping, and writes report.csv / report.md.
std::vector<SuiteRow> run_ablation_suite(const Dataset& dataset, AlmGateway& gateway,
                                         const std::filesystem::path& out_dir,
                                         bool map_unresolved_to_fn = true);

std::string render_report_csv(std::span<const SuiteRow> rows);
std::string render_report_md(std::span<const SuiteRow> rows);

// Reconstructs suite rows from previously written metrics.json files.
std::vector<SuiteRow> load_suite_rows(const std::filesystem::path& out_dir);

std::string metrics_to_json(const MetricsReport& report, const std::string& name);
MetricsReport metrics_from_json(std::string_view text, std::string* name = nullptr);

} // namespace mmsc
