#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmsc/prompts.hpp"
#include "mmsc/types.hpp"

namespace mmsc {

struct SamplingParams {
    double temperature = 1.0;
    double top_p = 0.5;
    int samples_per_prompt = 3;
};

// One request to the model: instruction plus the utterance as audio and/or
// transcript text, depending on the run's modality.
struct ModelRequest {
    UtteranceId utterance_id;
    PromptId prompt_id = PromptId::P1;
    int sample_index = 0;
    std::string instruction_text;
    std::optional<std::vector<uint8_t>> audio_clip_wav;
    std::optional<std::string> transcript_text;

    Modality modality() const;
};

// One model response for one (utterance, prompt, sample) key.
struct Trajectory {
    UtteranceId utterance_id;
    PromptId prompt_id = PromptId::P1;
    int sample_index = 0;
    std::string raw_response;
    std::string backend_id;
    bool cached = false;
};

std::string trajectory_to_jsonl(const Trajectory& t);
Trajectory trajectory_from_jsonl(std::string_view line);

// Where completions come from.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    // Throws BackendUnavailable / BackendRejected.
    virtual std::string complete(const ModelRequest& request, const SamplingParams& params) = 0;
};

struct RetryPolicy {
    int attempts = 3;
    int base_delay_ms = 1000; // doubles per retry: 1s, 2s, 4s
};

// Chat-completions JSON body with multimodal content parts; audio goes in
// as base64 WAV. The utterance key rides in the standard "user" field so a
// scripted server can answer per utterance. sample_index is deliberately
// not transmitted.
std::string build_chat_request_json(const ModelRequest& request, const SamplingParams& params,
                                    const std::string& model_id);
std::string extract_chat_response_text(std::string_view body);

std::string base64_encode(const std::vector<uint8_t>& bytes);

struct HttpOptions {
    std::string base_url;
    std::string api_key;
    std::string model_id;
    RetryPolicy retry;
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpOptions options);

    // Reads ALM_BASE_URL, ALM_API_KEY, ALM_MODEL_ID.
    static HttpOptions options_from_env();

    std::string id() const override { return options_.model_id; }
    std::string complete(const ModelRequest& request, const SamplingParams& params) override;

private:
    HttpOptions options_;
};

// Deterministic in-process backend. Responses come from a script keyed by
// "session/index/PROMPT/sample", "session/index/PROMPT", "session/index",
// or "default", falling back to hash-derived synthesis.
class MockBackend : public Backend {
public:
    using Script = std::map<std::string, std::string>;

    explicit MockBackend(Script script = {});

    static Script load_script(const std::filesystem::path& path);
    static std::string synthesize(const std::string& seed, PromptId prompt);

    std::string id() const override { return "mock"; }
    std::string complete(const ModelRequest& request, const SamplingParams& params) override;

private:
    Script script_;
};

// Content-addressed response store: one JSON file per key under the cache
// directory. The stored request digest is verified on read, so a key
// collision degrades to a miss instead of returning the wrong response.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    static std::string request_digest(const ModelRequest& request, const SamplingParams& params,
                                      const std::string& model_id);
    static std::string key_for(const std::string& digest);

    struct Entry {
        std::string raw_response;
        std::string backend_id;
    };

    std::optional<Entry> lookup(const std::string& key, const std::string& digest) const;
    void store(const std::string& key, const std::string& digest, const Entry& entry) const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

enum class BackendMode { Live, Mock, Replay };

std::string_view to_string(BackendMode mode);
BackendMode parse_backend_mode(std::string_view text); // throws InvalidConfig

// The utterance as handed to the gateway: id, transcript text, and its WAV clip.
struct UtteranceInput {
    UtteranceId id;
    std::string transcript;
    std::vector<uint8_t> clip_wav;
};

struct CollectPlan {
    std::vector<PromptId> prompts;
    Modality modality = Modality::AudioOnly;
    SamplingParams sampling;
};

struct TrajectoryFailure {
    UtteranceId utterance_id;
    PromptId prompt_id = PromptId::P1;
    int sample_index = 0;
    std::string reason;
};

struct CollectResult {
    std::vector<Trajectory> trajectories; // ordered by (prompt position, sample_index)
    std::vector<TrajectoryFailure> failures;

    bool ok() const { return failures.empty(); }
};

struct CacheStats {
    int64_t hits = 0;
    int64_t misses = 0;
};

// Front door for model access: cache lookups first, then the configured
// backend; replay mode never calls out and reports misses as failures.
class AlmGateway {
public:
    struct Options {
        BackendMode mode = BackendMode::Mock;
        std::filesystem::path cache_dir = "cache";
        int concurrency = 4;
        std::string replay_model_id = "mock"; // key construction when no backend exists
    };

    AlmGateway(std::unique_ptr<Backend> backend, Options options);

    const std::string& model_id() const { return model_id_; }
    const CacheStats& stats() const { return stats_; }

    // Single request through the cache; throws on failure.
    Trajectory query(const ModelRequest& request, const SamplingParams& params);

    // Every (prompt, sample) pair exactly once, in order. Per-trajectory
    // failures are collected, never dropped; up to `concurrency` requests
    // run in flight.
    CollectResult collect_trajectories(const UtteranceInput& utterance, const CollectPlan& plan);

private:
    std::unique_ptr<Backend> backend_;
    Options options_;
    ResponseCache cache_;
    std::string model_id_;
    CacheStats stats_;
};

} // namespace mmsc
