#include "mmsc/pipeline.hpp"

#include <algorithm>
#include <cctype>

#include "mmsc/error.hpp"
#include "mmsc/io.hpp"

namespace mmsc {

namespace {

bool is_client(const ReferenceUtterance& utt) {
    std::string speaker = utt.speaker;
    std::transform(speaker.begin(), speaker.end(), speaker.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return speaker == "client";
}

} // namespace

std::vector<SessionFiles> discover_sessions(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        raise(ErrorCode::IoError, "not a directory: " + dir.string());
    }
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const std::string suffix = ".asr.json";
        if (name.size() > suffix.size() && name.ends_with(suffix)) {
            ids.push_back(name.substr(0, name.size() - suffix.size()));
        }
    }
    std::sort(ids.begin(), ids.end());

    std::vector<SessionFiles> sessions;
    for (const std::string& id : ids) {
        SessionFiles files{id, dir / (id + ".wav"), dir / (id + ".asr.json"),
                           dir / (id + ".ref.jsonl")};
        for (const auto& path : {files.audio, files.transcript}) {
            if (!std::filesystem::exists(path)) {
                raise(ErrorCode::IoError,
                      "session " + id + " is missing " + path.filename().string());
            }
        }
        sessions.push_back(std::move(files));
    }
    return sessions;
}

AlignedSession align_session_files(const SessionFiles& files, const AlignerOptions& options,
                                   double min_session_score) {
    AlignedSession session;
    session.session_id = files.session_id;
    session.reference = parse_reference_transcript(read_text_file(files.transcript));
    const std::vector<TimedWord> words = parse_asr_words(read_text_file(files.asr_words));
    session.audio = read_wav(read_binary_file(files.audio));
    session.utterances = align_session(words, session.reference, options);
    session.qc = qc_filter(session.utterances, min_session_score);
    return session;
}

AudioBuffer slice_clamped(const AudioBuffer& audio, const TimeSpan& span) {
    const double duration = audio.duration_s();
    const double start = std::min(span.start_s(), duration);
    const double end = std::min(span.end_s(), duration);
    if (start >= end) {
        return AudioBuffer{audio.sample_rate_hz, audio.channels, {}};
    }
    return slice_audio(audio, TimeSpan(start, end));
}

int write_clips(const AlignedSession& session, const std::filesystem::path& out_dir) {
    int written = 0;
    for (const AlignedUtterance& utt : session.utterances) {
        if (!utt.gold_code) continue;
        const AudioBuffer clip = slice_clamped(session.audio, utt.span);
        write_binary_file(out_dir / utt.id.session_id / (std::to_string(utt.id.index) + ".wav"),
                          write_wav(clip));
        ++written;
    }
    return written;
}

std::string_view to_string(ExclusionPolicy policy) {
    switch (policy) {
        case ExclusionPolicy::Wholesale:    return "wholesale";
        case ExclusionPolicy::PerUtterance: return "per-utterance";
    }
    return "";
}

ExclusionPolicy parse_exclusion_policy(std::string_view text) {
    if (text == "wholesale") return ExclusionPolicy::Wholesale;
    if (text == "per-utterance") return ExclusionPolicy::PerUtterance;
    raise(ErrorCode::InvalidConfig, "unknown exclusion policy: \"" + std::string(text) + "\"");
}

Dataset build_dataset(const std::filesystem::path& dir, const AlignerOptions& options,
                      double min_session_score, ExclusionPolicy policy) {
    Dataset dataset;
    for (const SessionFiles& files : discover_sessions(dir)) {
        const AlignedSession session = align_session_files(files, options, min_session_score);
        ++dataset.sessions_total;
        if (policy == ExclusionPolicy::Wholesale && !session.qc.accept) {
            ++dataset.sessions_excluded;
            continue;
        }
        for (size_t i = 0; i < session.utterances.size(); ++i) {
            const AlignedUtterance& utt = session.utterances[i];
            if (!utt.gold_code || !is_client(session.reference[i])) continue;
            if (policy == ExclusionPolicy::PerUtterance &&
                utt.token_coverage < min_session_score) {
                ++dataset.utterances_excluded;
                continue;
            }
            EvalUtterance eval;
            eval.id = utt.id;
            eval.transcript = utt.text;
            eval.gold = *utt.gold_code;
            eval.clip_wav = write_wav(slice_clamped(session.audio, utt.span));
            dataset.utterances.push_back(std::move(eval));
        }
    }
    return dataset;
}

} // namespace mmsc
