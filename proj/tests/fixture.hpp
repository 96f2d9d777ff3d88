#pragma once

// Synthetic session fixtures shared by the CLI and acceptance suites.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmsc/io.hpp"
#include "mmsc/types.hpp"
#include "mmsc/wav.hpp"

namespace mmsc::testfix {

struct FixtureUtterance {
    std::string speaker;
    std::string text;
    std::string code; // empty = uncoded
};

// A deterministic five-client-utterance session with counselor turns in
// between. Texts are simple enough that verbatim ASR aligns perfectly.
inline std::vector<FixtureUtterance> session_script() {
    return {
        {"therapist", "tell me about your drinking this semester", ""},
        {"client", "i want to cut back on weekends", "CT"},
        {"therapist", "what makes that hard", ""},
        {"client", "honestly the parties are the best part of college", "ST"},
        {"client", "i drink about three nights a week", "FN"},
        {"therapist", "how does that affect your classes", ""},
        {"client", "when i drink during the week it messes with my classes", "CT"},
        {"client", "i am not ready to stop completely", "ST"},
    };
}

// Writes <id>.wav, <id>.asr.json, <id>.ref.jsonl into dir. The ASR stream
// is the concatenated utterance text, one word per 0.4 s; when `noisy`,
// every seventh word is misspelled slightly.
inline void write_session(const std::filesystem::path& dir, const std::string& session_id,
                          bool noisy = false) {
    const auto script = session_script();

    nlohmann::ordered_json words = nlohmann::ordered_json::array();
    double t = 0.25;
    int word_count = 0;
    for (const FixtureUtterance& utt : script) {
        size_t pos = 0;
        while (pos < utt.text.size()) {
            size_t space = utt.text.find(' ', pos);
            if (space == std::string::npos) space = utt.text.size();
            std::string token = utt.text.substr(pos, space - pos);
            pos = space + 1;
            if (token.empty()) continue;
            ++word_count;
            if (noisy && word_count % 7 == 0) token += "z";
            words.push_back({{"text", token}, {"start", t}, {"end", t + 0.3}});
            t += 0.4;
        }
        t += 0.2; // inter-utterance pause
    }
    nlohmann::ordered_json asr;
    asr["words"] = std::move(words);
    write_text_file(dir / (session_id + ".asr.json"), asr.dump());

    std::string ref_lines;
    for (size_t i = 0; i < script.size(); ++i) {
        nlohmann::ordered_json line;
        line["session_id"] = session_id;
        line["index"] = static_cast<int>(i);
        line["speaker"] = script[i].speaker;
        line["text"] = script[i].text;
        if (!script[i].code.empty()) line["code"] = script[i].code;
        ref_lines += line.dump();
        ref_lines += '\n';
    }
    write_text_file(dir / (session_id + ".ref.jsonl"), ref_lines);

    AudioBuffer audio;
    audio.sample_rate_hz = 8000;
    audio.channels = 1;
    audio.samples.resize(static_cast<size_t>((t + 1.0) * 8000));
    for (size_t i = 0; i < audio.samples.size(); ++i) {
        audio.samples[i] = static_cast<int16_t>((i * 37) % 2048 - 1024);
    }
    write_binary_file(dir / (session_id + ".wav"), write_wav(audio));
}

// Script that makes the mock backend echo each gold code.
inline void write_echo_script(const std::filesystem::path& path,
                              const std::string& session_id) {
    nlohmann::ordered_json script;
    const auto utts = session_script();
    for (size_t i = 0; i < utts.size(); ++i) {
        if (utts[i].code.empty()) continue;
        script[session_id + "/" + std::to_string(i)] =
            "Echoing the annotation.\nFINAL: " + utts[i].code;
    }
    write_text_file(path, script.dump());
}

struct CliResult {
    int exit_code = -1;
    std::string output;
};

// Runs the CLI with stdout+stderr captured to a file under `dir`.
// `env_prefix` goes in front of the binary, e.g. "ALM_BASE_URL=... ".
inline CliResult run_cli(const std::string& cli_path, const std::string& args,
                         const std::filesystem::path& dir, const std::string& env_prefix = "") {
    static int counter = 0;
    const std::filesystem::path out = dir / ("cli-out-" + std::to_string(counter++) + ".txt");
    const std::string command =
        env_prefix + cli_path + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = read_text_file(out);
    return result;
}

} // namespace mmsc::testfix
