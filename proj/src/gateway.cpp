#include <httplib.h>

#include "mmsc/gateway.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "mmsc/error.hpp"
#include "mmsc/hash.hpp"
#include "mmsc/io.hpp"

namespace mmsc {

namespace {

std::string fmt_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape_pipes(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '|') out += "%7C";
        else out.push_back(c);
    }
    return out;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value ? value : fallback;
}

} // namespace

Modality ModelRequest::modality() const {
    if (audio_clip_wav && transcript_text) return Modality::AudioAndText;
    if (audio_clip_wav) return Modality::AudioOnly;
    return Modality::TextOnly;
}

std::string trajectory_to_jsonl(const Trajectory& t) {
    nlohmann::ordered_json line;
    line["session_id"] = t.utterance_id.session_id;
    line["index"] = t.utterance_id.index;
    line["prompt"] = std::string(to_string(t.prompt_id));
    line["sample"] = t.sample_index;
    line["raw_response"] = t.raw_response;
    line["backend"] = t.backend_id;
    line["cached"] = t.cached;
    return line.dump();
}

Trajectory trajectory_from_jsonl(std::string_view text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(ErrorCode::MalformedInput, "trajectory line is not a JSON object");
    }
    try {
        return Trajectory{
            UtteranceId{doc.at("session_id").get<std::string>(), doc.at("index").get<int>()},
            parse_prompt_id(doc.at("prompt").get<std::string>()),
            doc.at("sample").get<int>(),
            doc.at("raw_response").get<std::string>(),
            doc.value("backend", std::string()),
            doc.value("cached", false),
        };
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::MalformedInput, std::string("trajectory line: ") + e.what());
    }
}

std::string base64_encode(const std::vector<uint8_t>& bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        i += 3;
    }
    const size_t rest = bytes.size() - i;
    if (rest == 1) {
        const uint32_t v = bytes[i] << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (rest == 2) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out += "=";
    }
    return out;
}

std::string build_chat_request_json(const ModelRequest& request, const SamplingParams& params,
                                    const std::string& model_id) {
    nlohmann::ordered_json content = nlohmann::ordered_json::array();
    content.push_back({{"type", "text"}, {"text", request.instruction_text}});
    if (request.audio_clip_wav) {
        content.push_back({{"type", "input_audio"},
                           {"input_audio",
                            {{"data", base64_encode(*request.audio_clip_wav)}, {"format", "wav"}}}});
    }
    if (request.transcript_text) {
        content.push_back({{"type", "text"}, {"text", "Transcript: " + *request.transcript_text}});
    }

    nlohmann::ordered_json body;
    body["model"] = model_id;
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["user"] = request.utterance_id.str();
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "user"}, {"content", std::move(content)}}});
    return body.dump();
}

std::string extract_chat_response_text(std::string_view body) {
    nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded()) {
        raise(ErrorCode::BackendRejected, "response body is not JSON");
    }
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        if (content.is_array()) {
            std::string text;
            for (const auto& part : content) {
                if (part.is_object() && part.value("type", "") == "text") {
                    text += part.value("text", "");
                }
            }
            return text;
        }
    } catch (const nlohmann::json::exception&) {
    }
    raise(ErrorCode::BackendRejected, "response body has no choices[0].message.content");
}

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty()) {
        raise(ErrorCode::InvalidConfig, "live backend needs a base URL (ALM_BASE_URL)");
    }
    if (options_.model_id.empty()) {
        raise(ErrorCode::InvalidConfig, "live backend needs a model id (ALM_MODEL_ID)");
    }
}

HttpOptions HttpBackend::options_from_env() {
    HttpOptions options;
    options.base_url = env_or("ALM_BASE_URL", "");
    options.api_key = env_or("ALM_API_KEY", "");
    options.model_id = env_or("ALM_MODEL_ID", "");
    return options;
}

std::string HttpBackend::complete(const ModelRequest& request, const SamplingParams& params) {
    const std::string body = build_chat_request_json(request, params, options_.model_id);
    httplib::Headers headers;
    if (!options_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options_.api_key);
    }

    std::string last_error;
    for (int attempt = 0; attempt < options_.retry.attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(options_.retry.base_delay_ms << (attempt - 1)));
        }
        httplib::Client client(options_.base_url);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(300, 0);
        auto res = client.Post("/v1/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            return extract_chat_response_text(res->body);
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        raise(ErrorCode::BackendRejected,
              "HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    raise(ErrorCode::BackendUnavailable,
          "gave up after " + std::to_string(options_.retry.attempts) + " attempts (" +
              last_error + ")");
}

MockBackend::MockBackend(Script script) : script_(std::move(script)) {}

MockBackend::Script MockBackend::load_script(const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(ErrorCode::MalformedInput, "mock script must be a JSON object: " + path.string());
    }
    Script script;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_string()) {
            raise(ErrorCode::MalformedInput, "mock script value for \"" + key + "\" must be a string");
        }
        script[key] = value.get<std::string>();
    }
    return script;
}

std::string MockBackend::synthesize(const std::string& seed, PromptId prompt) {
    const uint64_t h = fnv1a64(seed);
    const MICode label = kAllCodes[h % 3];
    if ((h >> 8) % 16 == 0) {
        return "I cannot determine the code for this utterance.";
    }

    std::string body = "Considering the utterance as delivered, the wording and tone were "
                       "weighed against each category.";
    if (prompt == PromptId::P3) {
        const int winner = 4 + static_cast<int>((h >> 12) % 2);
        int others[2] = {1 + static_cast<int>((h >> 16) % 3), 1 + static_cast<int>((h >> 20) % 3)};
        int scores[3];
        int next_other = 0;
        for (size_t i = 0; i < 3; ++i) {
            scores[i] = kAllCodes[i] == label ? winner : others[next_other++];
        }
        char line[64];
        std::snprintf(line, sizeof(line), "CT: %d, ST: %d, FN: %d. ", scores[0], scores[1],
                      scores[2]);
        body = std::string(line) + body;
    }
    if ((h >> 24) % 8 == 0) {
        return body + " The best fit is " + std::string(to_string(label)) + ".";
    }
    return body + "\nFINAL: " + std::string(to_string(label));
}

std::string MockBackend::complete(const ModelRequest& request, const SamplingParams&) {
    const std::string utt = request.utterance_id.str();
    const std::string prompt = std::string(to_string(request.prompt_id));
    for (const std::string& key :
         {utt + "/" + prompt + "/" + std::to_string(request.sample_index), utt + "/" + prompt,
          utt, std::string("default")}) {
        auto it = script_.find(key);
        if (it != script_.end()) return it->second;
    }
    return synthesize(utt + "|" + prompt + "|" + std::to_string(request.sample_index),
                      request.prompt_id);
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ResponseCache::request_digest(const ModelRequest& request,
                                          const SamplingParams& params,
                                          const std::string& model_id) {
    const PromptTemplate& tmpl = prompt_template(request.prompt_id);
    std::string digest = "v1";
    digest += "|model=" + escape_pipes(model_id);
    digest += "|prompt=" + std::string(to_string(request.prompt_id));
    digest += "|template=" + template_fingerprint(tmpl);
    digest += "|utterance=" + escape_pipes(request.utterance_id.str());
    digest += "|sample=" + std::to_string(request.sample_index);
    digest += "|temperature=" + fmt_number(params.temperature);
    digest += "|top_p=" + fmt_number(params.top_p);
    digest += "|modality=" + std::string(to_string(request.modality()));
    return digest;
}

std::string ResponseCache::key_for(const std::string& digest) {
    return stable_hash_hex(digest);
}

std::optional<ResponseCache::Entry> ResponseCache::lookup(const std::string& key,
                                                          const std::string& digest) const {
    const std::filesystem::path path = dir_ / (key + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;

    nlohmann::json doc = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    if (doc.value("request", "") != digest) return std::nullopt;
    if (!doc.contains("raw_response") || !doc["raw_response"].is_string()) return std::nullopt;
    return Entry{doc["raw_response"].get<std::string>(), doc.value("backend", std::string())};
}

void ResponseCache::store(const std::string& key, const std::string& digest,
                          const Entry& entry) const {
    nlohmann::ordered_json doc;
    doc["request"] = digest;
    doc["raw_response"] = entry.raw_response;
    doc["backend"] = entry.backend_id;
    doc["timestamp"] = static_cast<int64_t>(std::time(nullptr));
    atomic_write_file(dir_ / (key + ".json"), doc.dump());
}

std::string_view to_string(BackendMode mode) {
    switch (mode) {
        case BackendMode::Live:   return "live";
        case BackendMode::Mock:   return "mock";
        case BackendMode::Replay: return "replay";
    }
    return "";
}

BackendMode parse_backend_mode(std::string_view text) {
    if (text == "live") return BackendMode::Live;
    if (text == "mock") return BackendMode::Mock;
    if (text == "replay") return BackendMode::Replay;
    raise(ErrorCode::InvalidConfig, "unknown backend: \"" + std::string(text) + "\"");
}

AlmGateway::AlmGateway(std::unique_ptr<Backend> backend, Options options)
    : backend_(std::move(backend)), options_(std::move(options)), cache_(options_.cache_dir) {
    if (options_.mode != BackendMode::Replay && !backend_) {
        raise(ErrorCode::InvalidConfig, "non-replay gateway needs a backend");
    }
    model_id_ = backend_ ? backend_->id() : options_.replay_model_id;
    if (options_.concurrency < 1) options_.concurrency = 1;
}

namespace {

std::mutex g_stats_mutex;

} // namespace

Trajectory AlmGateway::query(const ModelRequest& request, const SamplingParams& params) {
    const std::string digest = ResponseCache::request_digest(request, params, model_id_);
    const std::string key = ResponseCache::key_for(digest);

    if (auto entry = cache_.lookup(key, digest)) {
        {
            std::lock_guard lock(g_stats_mutex);
            ++stats_.hits;
        }
        return Trajectory{request.utterance_id, request.prompt_id, request.sample_index,
                          entry->raw_response, entry->backend_id, true};
    }
    {
        std::lock_guard lock(g_stats_mutex);
        ++stats_.misses;
    }
    if (options_.mode == BackendMode::Replay) {
        raise(ErrorCode::CacheMiss,
              "no cached response for " + request.utterance_id.str() + "/" +
                  std::string(to_string(request.prompt_id)) + "/" +
                  std::to_string(request.sample_index) + " (key " + key + ")");
    }

    const std::string raw = backend_->complete(request, params);
    cache_.store(key, digest, {raw, backend_->id()});
    return Trajectory{request.utterance_id, request.prompt_id, request.sample_index, raw,
                      backend_->id(), false};
}

CollectResult AlmGateway::collect_trajectories(const UtteranceInput& utterance,
                                               const CollectPlan& plan) {
    std::vector<ModelRequest> requests;
    requests.reserve(plan.prompts.size() * static_cast<size_t>(plan.sampling.samples_per_prompt));
    for (PromptId prompt : plan.prompts) {
        const std::string instruction = render_prompt(prompt_template(prompt), plan.modality);
        for (int sample = 0; sample < plan.sampling.samples_per_prompt; ++sample) {
            ModelRequest request;
            request.utterance_id = utterance.id;
            request.prompt_id = prompt;
            request.sample_index = sample;
            request.instruction_text = instruction;
            if (includes_audio(plan.modality)) request.audio_clip_wav = utterance.clip_wav;
            if (includes_text(plan.modality)) request.transcript_text = utterance.transcript;
            requests.push_back(std::move(request));
        }
    }

    std::vector<std::optional<Trajectory>> done(requests.size());
    std::vector<std::optional<TrajectoryFailure>> failed(requests.size());
    std::atomic<size_t> next{0};

    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= requests.size()) break;
            try {
                done[i] = query(requests[i], plan.sampling);
            } catch (const Error& e) {
                failed[i] = TrajectoryFailure{requests[i].utterance_id, requests[i].prompt_id,
                                              requests[i].sample_index, e.what()};
            }
        }
    };

    const size_t workers =
        std::min(static_cast<size_t>(options_.concurrency), requests.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    CollectResult result;
    for (size_t i = 0; i < requests.size(); ++i) {
        if (done[i]) {
            result.trajectories.push_back(std::move(*done[i]));
        } else if (failed[i]) {
            result.failures.push_back(std::move(*failed[i]));
        }
    }
    return result;
}

} // namespace mmsc
