#include "mmsc/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <set>

#include <json.hpp>

#include "mmsc/error.hpp"
#include "mmsc/io.hpp"

namespace mmsc {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value ? value : fallback;
}

nlohmann::ordered_json config_to_json(const RunConfig& config) {
    nlohmann::ordered_json j;
    j["name"] = config.name;
    auto prompts = nlohmann::ordered_json::array();
    for (PromptId id : config.prompts) prompts.push_back(std::string(to_string(id)));
    j["prompts"] = std::move(prompts);
    j["modality"] = std::string(to_string(config.modality));
    j["temperature"] = config.sampling.temperature;
    j["top_p"] = config.sampling.top_p;
    j["samples_per_prompt"] = config.sampling.samples_per_prompt;
    j["aggregation"] = std::string(to_string(config.aggregation));
    return j;
}

std::vector<PromptId> parse_prompt_list(const std::string& raw) {
    std::vector<PromptId> prompts;
    size_t pos = 0;
    while (pos <= raw.size()) {
        size_t comma = raw.find(',', pos);
        std::string item =
            raw.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        pos = comma == std::string::npos ? raw.size() + 1 : comma + 1;
        const size_t b = item.find_first_not_of(" \t");
        const size_t e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        prompts.push_back(parse_prompt_id(item.substr(b, e - b + 1)));
    }
    return prompts;
}

} // namespace

std::string_view to_string(Aggregation aggregation) {
    switch (aggregation) {
        case Aggregation::SelfConsistency: return "self_consistency";
        case Aggregation::Single:          return "single";
    }
    return "";
}

Aggregation parse_aggregation(std::string_view text) {
    if (text == "self_consistency") return Aggregation::SelfConsistency;
    if (text == "single") return Aggregation::Single;
    raise(ErrorCode::InvalidConfig, "unknown aggregation: \"" + std::string(text) + "\"");
}

void RunConfig::validate() const {
    if (prompts.empty()) {
        raise(ErrorCode::InvalidConfig, "config \"" + name + "\" has no prompts");
    }
    std::set<PromptId> unique(prompts.begin(), prompts.end());
    if (unique.size() != prompts.size()) {
        raise(ErrorCode::InvalidConfig, "config \"" + name + "\" repeats a prompt");
    }
    if (sampling.samples_per_prompt < 1) {
        raise(ErrorCode::InvalidConfig, "config \"" + name + "\" needs at least one sample");
    }
    if (modality == Modality::TextOnly && unique.count(PromptId::P2)) {
        raise(ErrorCode::IncompatibleModality,
              "config \"" + name + "\": P2 reasons over acoustic cues and cannot run text-only");
    }
    const bool has_baseline = unique.count(PromptId::Direct) || unique.count(PromptId::Cot);
    if (has_baseline && prompts.size() != 1) {
        raise(ErrorCode::InvalidConfig,
              "config \"" + name + "\": DIRECT/COT do not combine with other prompts");
    }
    if (aggregation == Aggregation::Single && sampling.samples_per_prompt != 1) {
        raise(ErrorCode::InvalidConfig,
              "config \"" + name + "\": single aggregation takes exactly one sample");
    }
}

const std::vector<RunConfig>& builtin_configs() {
    static const std::vector<RunConfig> configs = [] {
        const std::vector<PromptId> all{PromptId::P1, PromptId::P2, PromptId::P3, PromptId::P4};
        const SamplingParams sc_sampling{};            // temperature 1.0, top-p 0.5, 3 samples
        const SamplingParams single{1.0, 0.5, 1};

        std::vector<RunConfig> out;
        out.push_back({"direct", {PromptId::Direct}, Modality::AudioOnly, single,
                       Aggregation::Single});
        out.push_back({"cot", {PromptId::Cot}, Modality::AudioOnly, single, Aggregation::Single});
        out.push_back({"mm-sc-audio", all, Modality::AudioOnly, sc_sampling,
                       Aggregation::SelfConsistency});
        out.push_back({"mm-sc-text", {PromptId::P1, PromptId::P3, PromptId::P4},
                       Modality::TextOnly, sc_sampling, Aggregation::SelfConsistency});
        out.push_back({"mm-sc-audio-text", all, Modality::AudioAndText, sc_sampling,
                       Aggregation::SelfConsistency});
        for (PromptId removed : all) {
            std::vector<PromptId> rest;
            for (PromptId id : all) {
                if (id != removed) rest.push_back(id);
            }
            out.push_back({"wo-" + std::string(to_string(removed)), rest, Modality::AudioOnly,
                           sc_sampling, Aggregation::SelfConsistency});
        }
        for (const RunConfig& config : out) config.validate();
        return out;
    }();
    return configs;
}

const RunConfig* find_builtin(std::string_view name) {
    for (const RunConfig& config : builtin_configs()) {
        if (config.name == name) return &config;
    }
    return nullptr;
}

PipelineSettings::PipelineSettings() : run(*find_builtin("mm-sc-audio")) {}

void apply_flat_config(PipelineSettings& settings, const FlatConfig& config) {
    for (const auto& [key, value] : config.entries) {
        if (key == "name") {
            settings.run.name = value;
        } else if (key == "prompts") {
            settings.run.prompts = parse_prompt_list(value);
        } else if (key == "modality") {
            settings.run.modality = parse_modality(value);
        } else if (key == "temperature") {
            settings.run.sampling.temperature = config_double(config, key);
        } else if (key == "top_p") {
            settings.run.sampling.top_p = config_double(config, key);
        } else if (key == "samples") {
            settings.run.sampling.samples_per_prompt = config_int(config, key);
        } else if (key == "aggregation") {
            settings.run.aggregation = parse_aggregation(value);
        } else if (key == "min_score") {
            settings.min_session_score = config_double(config, key);
        } else if (key == "exclusion") {
            settings.exclusion = parse_exclusion_policy(value);
        } else if (key == "concurrency") {
            settings.concurrency = config_int(config, key);
        } else if (key == "backend") {
            settings.backend = parse_backend_mode(value);
        } else if (key == "replay_only") {
            settings.replay_only = config_bool(config, key);
        } else if (key == "cache_dir") {
            settings.cache_dir = value;
        } else if (key == "mock_script") {
            settings.mock_script = value;
        } else if (key == "map_unresolved") {
            settings.map_unresolved_to_fn = config_bool(config, key);
        } else if (key == "fuzzy_max_ned") {
            settings.aligner.fuzzy_substitution_max_ned = config_double(config, key);
        } else {
            raise(ErrorCode::InvalidConfig, "unknown config key \"" + key + "\"");
        }
    }
}

AlmGateway make_gateway(const PipelineSettings& settings) {
    AlmGateway::Options options;
    options.mode = settings.replay_only ? BackendMode::Replay : settings.backend;
    options.cache_dir = settings.cache_dir;
    options.concurrency = settings.concurrency;
    options.replay_model_id = env_or("ALM_MODEL_ID", "mock");

    std::unique_ptr<Backend> backend;
    switch (options.mode) {
        case BackendMode::Live:
            backend = std::make_unique<HttpBackend>(HttpBackend::options_from_env());
            break;
        case BackendMode::Mock: {
            MockBackend::Script script;
            if (!settings.mock_script.empty()) {
                script = MockBackend::load_script(settings.mock_script);
            }
            backend = std::make_unique<MockBackend>(std::move(script));
            break;
        }
        case BackendMode::Replay:
            break;
    }
    return AlmGateway(std::move(backend), std::move(options));
}

std::string prediction_to_jsonl(const UtterancePrediction& pred) {
    nlohmann::ordered_json line;
    line["session_id"] = pred.id.session_id;
    line["index"] = pred.id.index;
    line["final"] = pred.final ? std::string(to_string(*pred.final)) : "UNRESOLVED";
    line["tally"] = {{"CT", pred.tally.count(MICode::CT)},
                     {"ST", pred.tally.count(MICode::ST)},
                     {"FN", pred.tally.count(MICode::FN)},
                     {"abstains", pred.tally.abstains}};
    line["tie_break_applied"] = pred.tie_break_applied;
    if (pred.gold) line["gold"] = std::string(to_string(*pred.gold));
    return line.dump();
}

UtterancePrediction prediction_from_jsonl(std::string_view text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(ErrorCode::MalformedInput, "prediction line is not a JSON object");
    }
    try {
        UtterancePrediction pred;
        pred.id = {doc.at("session_id").get<std::string>(), doc.at("index").get<int>()};
        const std::string final_text = doc.at("final").get<std::string>();
        if (final_text != "UNRESOLVED") pred.final = parse_code(final_text);
        const auto& tally = doc.at("tally");
        pred.tally.count(MICode::CT) = tally.at("CT").get<int>();
        pred.tally.count(MICode::ST) = tally.at("ST").get<int>();
        pred.tally.count(MICode::FN) = tally.at("FN").get<int>();
        pred.tally.abstains = tally.at("abstains").get<int>();
        pred.tie_break_applied = doc.value("tie_break_applied", false);
        if (doc.contains("gold") && !doc["gold"].is_null()) {
            pred.gold = parse_code(doc["gold"].get<std::string>());
        }
        return pred;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::MalformedInput, std::string("prediction line: ") + e.what());
    }
}

std::string metrics_to_json(const MetricsReport& report, const std::string& name) {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["n"] = report.n;
    j["accuracy"] = report.accuracy;
    j["macro_precision"] = report.macro_precision;
    j["macro_recall"] = report.macro_recall;
    j["macro_f1"] = report.macro_f1;
    j["unresolved_mapped"] = report.unresolved_mapped;
    nlohmann::ordered_json per_class;
    for (MICode code : kAllCodes) {
        const ClassMetrics& c = report.for_code(code);
        per_class[std::string(to_string(code))] = {
            {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
    }
    j["per_class"] = std::move(per_class);
    return j.dump(2) + "\n";
}

MetricsReport metrics_from_json(std::string_view text, std::string* name) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(ErrorCode::MalformedInput, "metrics file is not a JSON object");
    }
    try {
        MetricsReport report;
        if (name) *name = doc.value("name", "");
        report.n = doc.at("n").get<int64_t>();
        report.accuracy = doc.at("accuracy").get<double>();
        report.macro_precision = doc.at("macro_precision").get<double>();
        report.macro_recall = doc.at("macro_recall").get<double>();
        report.macro_f1 = doc.at("macro_f1").get<double>();
        report.unresolved_mapped = doc.value("unresolved_mapped", int64_t{0});
        for (MICode code : kAllCodes) {
            const auto& c = doc.at("per_class").at(std::string(to_string(code)));
            ClassMetrics& m = report.per_class[static_cast<size_t>(code)];
            m.precision = c.at("precision").get<double>();
            m.recall = c.at("recall").get<double>();
            m.f1 = c.at("f1").get<double>();
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::MalformedInput, std::string("metrics file: ") + e.what());
    }
}

RunArtifacts run_experiment(const RunConfig& config, const Dataset& dataset, AlmGateway& gateway,
                            const std::filesystem::path& out_dir, bool map_unresolved_to_fn) {
    config.validate();

    RunArtifacts art;
    art.config = config;

    const CacheStats stats_before = gateway.stats();
    const CollectPlan plan{config.prompts, config.modality, config.sampling};

    std::vector<MICode> gold_labels;
    std::vector<MICode> pred_labels;

    for (const EvalUtterance& utt : dataset.utterances) {
        CollectResult collected =
            gateway.collect_trajectories({utt.id, utt.transcript, utt.clip_wav}, plan);
        for (Trajectory& t : collected.trajectories) {
            art.trajectories.push_back(std::move(t));
        }
        if (!collected.ok()) {
            for (TrajectoryFailure& f : collected.failures) {
                art.failures.push_back(std::move(f));
            }
            continue;
        }

        std::vector<ParsedResponse> parsed;
        parsed.reserve(collected.trajectories.size());
        const size_t first = art.trajectories.size() - collected.trajectories.size();
        for (size_t i = first; i < art.trajectories.size(); ++i) {
            parsed.push_back(
                parse_response(art.trajectories[i].raw_response, art.trajectories[i].prompt_id));
            if (scores_conflict(parsed.back())) ++art.score_conflicts;
        }

        AggregatedPrediction agg;
        if (config.aggregation == Aggregation::Single) {
            agg.tally = tally(parsed);
            agg.final = parsed.empty() ? std::nullopt : parsed.front().label;
        } else {
            agg = aggregate(tally(parsed));
        }
        agg.utterance_id = utt.id;

        art.predictions.push_back(
            {utt.id, agg.final, agg.tally, agg.tie_break_applied, utt.gold});
        if (agg.tie_break_applied) ++art.tie_breaks;

        MICode eval_label = MICode::FN;
        if (agg.final) {
            eval_label = *agg.final;
        } else {
            ++art.unresolved;
            if (!map_unresolved_to_fn) continue;
        }
        gold_labels.push_back(utt.gold);
        pred_labels.push_back(eval_label);
    }

    art.report = metrics(confusion(gold_labels, pred_labels));
    art.report.unresolved_mapped = map_unresolved_to_fn ? art.unresolved : 0;

    const CacheStats stats_after = gateway.stats();

    const std::filesystem::path run_dir = out_dir / config.name;
    std::filesystem::create_directories(run_dir);

    std::string traj_lines;
    for (const Trajectory& t : art.trajectories) {
        traj_lines += trajectory_to_jsonl(t);
        traj_lines += '\n';
    }
    write_text_file(run_dir / (config.name + ".traj.jsonl"), traj_lines);

    std::string pred_lines;
    for (const UtterancePrediction& p : art.predictions) {
        pred_lines += prediction_to_jsonl(p);
        pred_lines += '\n';
    }
    write_text_file(run_dir / (config.name + ".pred.jsonl"), pred_lines);

    if (art.failures.empty()) {
        write_text_file(run_dir / "metrics.json", metrics_to_json(art.report, config.name));
    }

    nlohmann::ordered_json manifest;
    manifest["config"] = config_to_json(config);
    nlohmann::ordered_json templates;
    for (PromptId id : config.prompts) {
        templates[std::string(to_string(id))] = template_fingerprint(prompt_template(id));
    }
    manifest["templates"] = std::move(templates);
    manifest["backend"] = gateway.model_id();
    manifest["cache"] = {{"hits", stats_after.hits - stats_before.hits},
                         {"misses", stats_after.misses - stats_before.misses}};
    manifest["counts"] = {{"utterances", dataset.utterances.size()},
                          {"trajectories", art.trajectories.size()},
                          {"tie_breaks", art.tie_breaks},
                          {"unresolved", art.unresolved},
                          {"score_conflicts", art.score_conflicts}};
    manifest["status"] = art.failures.empty() ? "complete" : "incomplete";
    auto failures = nlohmann::ordered_json::array();
    for (const TrajectoryFailure& f : art.failures) {
        failures.push_back({{"utterance", f.utterance_id.str()},
                            {"prompt", std::string(to_string(f.prompt_id))},
                            {"sample", f.sample_index},
                            {"reason", f.reason}});
    }
    manifest["failures"] = std::move(failures);
    manifest["timestamp"] = static_cast<int64_t>(std::time(nullptr));
    write_text_file(run_dir / "run-manifest.json", manifest.dump(2) + "\n");

    if (!art.failures.empty()) {
        std::string message = std::to_string(art.failures.size()) + " trajectories failed in \"" +
                              config.name + "\":";
        const size_t shown = std::min<size_t>(art.failures.size(), 5);
        for (size_t i = 0; i < shown; ++i) {
            message += "\n  " + art.failures[i].reason;
        }
        if (shown < art.failures.size()) {
            message += "\n  ... see run-manifest.json for the full list";
        }
        raise(ErrorCode::FailedTrajectories, message);
    }
    return art;
}

std::vector<SuiteRow> run_ablation_suite(const Dataset& dataset, AlmGateway& gateway,
                                         const std::filesystem::path& out_dir,
                                         bool map_unresolved_to_fn) {
    std::vector<SuiteRow> rows;
    for (const RunConfig& config : builtin_configs()) {
        try {
            RunArtifacts art =
                run_experiment(config, dataset, gateway, out_dir, map_unresolved_to_fn);
            rows.push_back({config.name, art.report, ""});
        } catch (const Error& e) {
            rows.push_back({config.name, std::nullopt, e.what()});
        }
    }
    write_text_file(out_dir / "report.csv", render_report_csv(rows));
    write_text_file(out_dir / "report.md", render_report_md(rows));
    return rows;
}

std::string render_report_csv(std::span<const SuiteRow> rows) {
    std::string out = "method,accuracy,precision,recall,macro_f1\n";
    for (const SuiteRow& row : rows) {
        out += row.config_name;
        if (row.report) {
            out += "," + format_pct(row.report->accuracy);
            out += "," + format_pct(row.report->macro_precision);
            out += "," + format_pct(row.report->macro_recall);
            out += "," + format_pct(row.report->macro_f1);
        } else {
            out += ",,,,";
        }
        out += '\n';
    }
    return out;
}

std::string render_report_md(std::span<const SuiteRow> rows) {
    std::string out = "# Utterance coding results\n\n";
    out += "| Method | Accuracy | Precision | Recall | Macro-F1 |\n";
    out += "|---|---:|---:|---:|---:|\n";
    for (const SuiteRow& row : rows) {
        out += "| " + row.config_name + " | ";
        if (row.report) {
            out += format_pct(row.report->accuracy) + " | " +
                   format_pct(row.report->macro_precision) + " | " +
                   format_pct(row.report->macro_recall) + " | " +
                   format_pct(row.report->macro_f1) + " |\n";
        } else {
            out += "- | - | - | - |\n";
        }
    }
    out += "\nAll metrics are percentages; precision and recall are macro-averaged over CT, ST, FN.\n";
    bool any_failed = false;
    for (const SuiteRow& row : rows) {
        if (row.report) continue;
        if (!any_failed) {
            out += "\nFailed configurations:\n";
            any_failed = true;
        }
        out += "- " + row.config_name + ": " + row.error + "\n";
    }
    return out;
}

std::vector<SuiteRow> load_suite_rows(const std::filesystem::path& out_dir) {
    std::vector<SuiteRow> rows;
    std::set<std::string> seen;
    auto try_load = [&](const std::string& name) {
        const std::filesystem::path path = out_dir / name / "metrics.json";
        if (std::filesystem::exists(path)) {
            rows.push_back({name, metrics_from_json(read_text_file(path)), ""});
        } else {
            rows.push_back({name, std::nullopt, "metrics.json missing"});
        }
        seen.insert(name);
    };
    for (const RunConfig& config : builtin_configs()) {
        if (std::filesystem::is_directory(out_dir / config.name)) try_load(config.name);
    }
    std::vector<std::string> extra;
    for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (!seen.count(name) && std::filesystem::exists(entry.path() / "metrics.json")) {
            extra.push_back(name);
        }
    }
    std::sort(extra.begin(), extra.end());
    for (const std::string& name : extra) try_load(name);
    return rows;
}

} // namespace mmsc
