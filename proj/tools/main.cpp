#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include "mmsc/align.hpp"
#include "mmsc/error.hpp"
#include "mmsc/experiment.hpp"
#include "mmsc/io.hpp"
#include "mmsc/mock_server.hpp"
#include "mmsc/pipeline.hpp"
#include "mmsc/votes.hpp"
#include "mmsc/wav.hpp"

namespace {

using namespace mmsc;

std::atomic<bool> g_interrupted{false};

void on_signal(int) {
    g_interrupted = true;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::BackendUnavailable:
        case ErrorCode::BackendRejected:
        case ErrorCode::CacheMiss:
        case ErrorCode::FailedTrajectories:
            return 2;
        default:
            return 1;
    }
}

void for_each_line(const std::string& text, const std::function<void(std::string_view)>& fn) {
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string_view line(text.data() + pos, nl - pos);
        if (!line.empty()) fn(line);
        pos = nl + 1;
    }
}

void print_metrics_row(const std::string& name, const MetricsReport& report) {
    std::printf("%-18s accuracy %s  precision %s  recall %s  macro-F1 %s  (n=%lld", name.c_str(),
                format_pct(report.accuracy).c_str(), format_pct(report.macro_precision).c_str(),
                format_pct(report.macro_recall).c_str(), format_pct(report.macro_f1).c_str(),
                static_cast<long long>(report.n));
    if (report.unresolved_mapped > 0) {
        std::printf(", unresolved mapped to FN: %lld",
                    static_cast<long long>(report.unresolved_mapped));
    }
    std::printf(")\n");
}

// Shared state for subcommands that drive the gateway.
struct RunFlags {
    std::string config;
    std::string dataset;
    std::string out_dir;
    std::string backend;
    std::string cache_dir;
    std::string script;
    bool replay_only = false;
    double min_score = -1.0;
    int concurrency = -1;
};

PipelineSettings resolve_settings(const RunFlags& flags) {
    PipelineSettings settings;
    if (!flags.config.empty()) {
        if (std::filesystem::exists(flags.config)) {
            apply_flat_config(settings, parse_flat_config(read_text_file(flags.config)));
        } else if (const RunConfig* builtin = find_builtin(flags.config)) {
            settings.run = *builtin;
        } else {
            raise(ErrorCode::InvalidConfig,
                  "--config is neither a file nor a built-in config: " + flags.config);
        }
    }
    if (!flags.backend.empty()) settings.backend = parse_backend_mode(flags.backend);
    if (flags.replay_only) settings.replay_only = true;
    if (flags.min_score >= 0.0) settings.min_session_score = flags.min_score;
    if (flags.concurrency > 0) settings.concurrency = flags.concurrency;
    if (!flags.cache_dir.empty()) settings.cache_dir = flags.cache_dir;
    if (!flags.script.empty()) settings.mock_script = flags.script;
    settings.run.validate();
    return settings;
}

void add_gateway_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--config", flags.config,
                    "Config file (flat key = value) or a built-in config name");
    cmd->add_option("--dataset", flags.dataset,
                    "Directory with <id>.wav, <id>.asr.json, <id>.ref.jsonl per session")
        ->required();
    cmd->add_option("--out-dir", flags.out_dir, "Directory for run artifacts")->required();
    cmd->add_option("--backend", flags.backend, "Backend mode")
        ->check(CLI::IsMember({"live", "mock", "replay"}));
    cmd->add_flag("--replay-only", flags.replay_only,
                  "Serve every response from the cache; a miss is an error");
    cmd->add_option("--min-score", flags.min_score,
                    "Session score threshold for QC exclusion (default 0.6)");
    cmd->add_option("--concurrency", flags.concurrency,
                    "Max in-flight model requests (default 4)");
    cmd->add_option("--cache-dir", flags.cache_dir, "Response cache directory (default cache)");
    cmd->add_option("--script", flags.script, "Mock backend script file (JSON object)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Utterance-level motivational interviewing coding from session audio:\n"
                 "align reference transcripts to ASR word timestamps, cut clips, query an\n"
                 "audio-language model under several prompts, and aggregate by majority vote.\n"
                 "Env vars for the live backend: ALM_BASE_URL, ALM_API_KEY, ALM_MODEL_ID."};
    app.require_subcommand(1);

    // align
    struct {
        std::string audio, asr, ref, out;
        double min_score = PipelineSettings().min_session_score;
    } align_flags;
    auto* align_cmd = app.add_subcommand("align", "Align a reference transcript to ASR words");
    align_cmd->add_option("--audio", align_flags.audio, "Session WAV (spans are checked against it)");
    align_cmd->add_option("--asr", align_flags.asr, "ASR words JSON file")->required();
    align_cmd->add_option("--ref", align_flags.ref, "Reference transcript JSONL file")->required();
    align_cmd->add_option("--out", align_flags.out, "Output aligned JSONL file")->required();
    align_cmd->add_option("--min-score", align_flags.min_score,
                          "Session score threshold for the QC verdict (default 0.6)");
    align_cmd->callback([&] {
        const auto words = parse_asr_words(read_text_file(align_flags.asr));
        const auto reference = parse_reference_transcript(read_text_file(align_flags.ref));
        const auto aligned = align_session(words, reference, AlignerOptions{});
        const QcDecision qc = qc_filter(aligned, align_flags.min_score);

        if (!align_flags.audio.empty()) {
            const AudioBuffer audio = read_wav(read_binary_file(align_flags.audio));
            for (const AlignedUtterance& utt : aligned) {
                if (utt.span.end_s() > audio.duration_s() + 0.01) {
                    std::fprintf(stderr, "warning: %s spans past the audio (%.2fs > %.2fs)\n",
                                 utt.id.str().c_str(), utt.span.end_s(), audio.duration_s());
                }
            }
        }

        std::string lines;
        for (const AlignedUtterance& utt : aligned) {
            lines += aligned_utterance_to_jsonl(utt);
            lines += '\n';
        }
        write_text_file(align_flags.out, lines);
        const std::string session =
            reference.empty() ? std::string("?") : reference.front().id.session_id;
        std::printf("session %s: %zu utterances, score %.4f -> %s\n", session.c_str(),
                    aligned.size(), qc.session_score, qc.accept ? "accept" : "exclude");
    });

    // segment
    struct {
        std::string audio, aligned, out_dir;
    } segment_flags;
    auto* segment_cmd =
        app.add_subcommand("segment", "Cut utterance clips from session audio");
    segment_cmd->add_option("--audio", segment_flags.audio, "Session WAV")->required();
    segment_cmd->add_option("--aligned", segment_flags.aligned, "Aligned JSONL file")->required();
    segment_cmd->add_option("--out-dir", segment_flags.out_dir,
                            "Clips are written as <out-dir>/<session>/<index>.wav")
        ->required();
    segment_cmd->callback([&] {
        AlignedSession session;
        session.audio = read_wav(read_binary_file(segment_flags.audio));
        for_each_line(read_text_file(segment_flags.aligned), [&](std::string_view line) {
            session.utterances.push_back(aligned_utterance_from_jsonl(line));
        });
        if (!session.utterances.empty()) {
            session.session_id = session.utterances.front().id.session_id;
        }
        const int written = write_clips(session, segment_flags.out_dir);
        std::printf("wrote %d clips under %s\n", written, segment_flags.out_dir.c_str());
    });

    // run
    RunFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "Run one configuration over a dataset");
    add_gateway_flags(run_cmd, run_flags);
    run_cmd->callback([&] {
        const PipelineSettings settings = resolve_settings(run_flags);
        const Dataset dataset =
            build_dataset(run_flags.dataset, settings.aligner, settings.min_session_score,
                          settings.exclusion);
        std::printf("dataset: %zu utterances (%d sessions, %d excluded)\n",
                    dataset.utterances.size(), dataset.sessions_total,
                    dataset.sessions_excluded);
        AlmGateway gateway = make_gateway(settings);
        const RunArtifacts art = run_experiment(settings.run, dataset, gateway, run_flags.out_dir,
                                                settings.map_unresolved_to_fn);
        print_metrics_row(settings.run.name, art.report);
    });

    // aggregate
    struct {
        std::string traj, out;
    } aggregate_flags;
    auto* aggregate_cmd =
        app.add_subcommand("aggregate", "Aggregate a trajectory log into predictions");
    aggregate_cmd->add_option("--traj", aggregate_flags.traj, "Trajectory JSONL file")->required();
    aggregate_cmd->add_option("--out", aggregate_flags.out, "Output predictions JSONL file")
        ->required();
    aggregate_cmd->callback([&] {
        std::vector<UtteranceId> order;
        std::map<std::string, std::vector<ParsedResponse>> parsed;
        for_each_line(read_text_file(aggregate_flags.traj), [&](std::string_view line) {
            const Trajectory t = trajectory_from_jsonl(line);
            auto [it, inserted] = parsed.try_emplace(t.utterance_id.str());
            if (inserted) order.push_back(t.utterance_id);
            it->second.push_back(parse_response(t.raw_response, t.prompt_id));
        });
        std::string lines;
        for (const UtteranceId& id : order) {
            AggregatedPrediction agg = aggregate(tally(parsed[id.str()]));
            agg.utterance_id = id;
            lines += prediction_to_jsonl(
                {id, agg.final, agg.tally, agg.tie_break_applied, std::nullopt});
            lines += '\n';
        }
        write_text_file(aggregate_flags.out, lines);
        std::printf("aggregated %zu utterances\n", order.size());
    });

    // evaluate
    struct {
        std::string pred, ref, out;
        bool keep_unresolved = false;
    } evaluate_flags;
    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "Score predictions against gold codes");
    evaluate_cmd->add_option("--pred", evaluate_flags.pred, "Predictions JSONL file")->required();
    evaluate_cmd->add_option("--ref", evaluate_flags.ref, "Reference transcript JSONL with codes")
        ->required();
    evaluate_cmd->add_option("--out", evaluate_flags.out, "Write metrics JSON here");
    evaluate_cmd->add_flag("--keep-unresolved", evaluate_flags.keep_unresolved,
                           "Skip unresolved predictions instead of mapping them to FN");
    evaluate_cmd->callback([&] {
        std::map<std::string, UtterancePrediction> predictions;
        for_each_line(read_text_file(evaluate_flags.pred), [&](std::string_view line) {
            UtterancePrediction pred = prediction_from_jsonl(line);
            predictions[pred.id.str()] = pred;
        });
        std::vector<MICode> gold_labels;
        std::vector<MICode> pred_labels;
        int64_t unresolved_mapped = 0;
        for (const ReferenceUtterance& utt :
             parse_reference_transcript(read_text_file(evaluate_flags.ref))) {
            if (!utt.gold_code) continue;
            auto it = predictions.find(utt.id.str());
            if (it == predictions.end()) {
                raise(ErrorCode::LengthMismatch, "no prediction for utterance " + utt.id.str());
            }
            MICode label = MICode::FN;
            if (it->second.final) {
                label = *it->second.final;
            } else if (evaluate_flags.keep_unresolved) {
                continue;
            } else {
                ++unresolved_mapped;
            }
            gold_labels.push_back(*utt.gold_code);
            pred_labels.push_back(label);
        }
        MetricsReport report = metrics(confusion(gold_labels, pred_labels));
        report.unresolved_mapped = unresolved_mapped;
        print_metrics_row("evaluate", report);
        if (!evaluate_flags.out.empty()) {
            write_text_file(evaluate_flags.out, metrics_to_json(report, "evaluate"));
        }
    });

    // ablate
    RunFlags ablate_flags;
    auto* ablate_cmd =
        app.add_subcommand("ablate", "Run all nine built-in configurations and report");
    add_gateway_flags(ablate_cmd, ablate_flags);
    int ablate_exit = 0;
    ablate_cmd->callback([&] {
        const PipelineSettings settings = resolve_settings(ablate_flags);
        const Dataset dataset =
            build_dataset(ablate_flags.dataset, settings.aligner, settings.min_session_score,
                          settings.exclusion);
        std::printf("dataset: %zu utterances (%d sessions, %d excluded)\n",
                    dataset.utterances.size(), dataset.sessions_total,
                    dataset.sessions_excluded);
        AlmGateway gateway = make_gateway(settings);
        const auto rows = run_ablation_suite(dataset, gateway, ablate_flags.out_dir,
                                             settings.map_unresolved_to_fn);
        std::fputs(render_report_md(rows).c_str(), stdout);
        for (const SuiteRow& row : rows) {
            if (!row.report) ablate_exit = 2;
        }
    });

    // report
    std::string report_out_dir;
    auto* report_cmd =
        app.add_subcommand("report", "Re-render report.csv/report.md from run metrics");
    report_cmd->add_option("--out-dir", report_out_dir, "Directory holding per-run artifacts")
        ->required();
    report_cmd->callback([&] {
        const auto rows = load_suite_rows(report_out_dir);
        write_text_file(std::filesystem::path(report_out_dir) / "report.csv",
                        render_report_csv(rows));
        write_text_file(std::filesystem::path(report_out_dir) / "report.md",
                        render_report_md(rows));
        std::fputs(render_report_md(rows).c_str(), stdout);
    });

    // mock-backend
    struct {
        std::string host = "127.0.0.1";
        int port = 8089;
        std::string script;
    } mock_flags;
    auto* mock_cmd = app.add_subcommand(
        "mock-backend", "Serve a scripted chat-completions endpoint for offline tests");
    mock_cmd->add_option("--host", mock_flags.host, "Bind address (default 127.0.0.1)");
    mock_cmd->add_option("--port", mock_flags.port, "Port (default 8089; 0 picks a free port)");
    mock_cmd->add_option("--script", mock_flags.script,
                         "JSON object mapping utterance keys to responses");
    mock_cmd->callback([&] {
        MockBackend::Script script;
        if (!mock_flags.script.empty()) script = MockBackend::load_script(mock_flags.script);
        MockServer server(std::move(script));
        const int port = server.start(mock_flags.host, mock_flags.port);
        std::printf("mock backend listening on http://%s:%d\n", mock_flags.host.c_str(), port);
        std::fflush(stdout);
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!g_interrupted) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        server.stop();
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return ablate_exit;
}
