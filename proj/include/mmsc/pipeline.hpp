#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mmsc/align.hpp"
#include "mmsc/ingest.hpp"
#include "mmsc/types.hpp"
#include "mmsc/wav.hpp"

namespace mmsc {

// One session's input artifacts on disk.
struct SessionFiles {
    std::string session_id;
    std::filesystem::path audio;      // <id>.wav
    std::filesystem::path asr_words;  // <id>.asr.json
    std::filesystem::path transcript; // <id>.ref.jsonl
};

// Sessions found in a dataset directory, sorted by id. A session exists
// when all three of its files are present; partial triples are an error.
std::vector<SessionFiles> discover_sessions(const std::filesystem::path& dir);

struct AlignedSession {
    std::string session_id;
    std::vector<ReferenceUtterance> reference;
    std::vector<AlignedUtterance> utterances;
    AudioBuffer audio;
    QcDecision qc;
};

AlignedSession align_session_files(const SessionFiles& files, const AlignerOptions& options,
                                   double min_session_score);

// Clip spans clamped into the buffer; a span entirely outside yields an
// empty (header-only) clip rather than an error.
AudioBuffer slice_clamped(const AudioBuffer& audio, const TimeSpan& span);

// Write one clip per gold-coded utterance as <out_dir>/<session>/<index>.wav.
// Returns the number of clips written.
int write_clips(const AlignedSession& session, const std::filesystem::path& out_dir);

// One utterance ready for the model: transcript text, gold code, WAV clip.
struct EvalUtterance {
    UtteranceId id;
    std::string transcript;
    MICode gold = MICode::FN;
    std::vector<uint8_t> clip_wav;
};

struct Dataset {
    std::vector<EvalUtterance> utterances;
    int sessions_total = 0;
    int sessions_excluded = 0;
    int utterances_excluded = 0;
};

// How QC failures are handled: drop whole sessions below the score
// threshold, or keep every session and drop only the utterances whose own
// token coverage falls below it.
enum class ExclusionPolicy { Wholesale, PerUtterance };

std::string_view to_string(ExclusionPolicy policy);
ExclusionPolicy parse_exclusion_policy(std::string_view text); // throws InvalidConfig

// Align every session in the directory, apply the exclusion policy, and
// slice clips for the gold-coded client utterances that remain.
Dataset build_dataset(const std::filesystem::path& dir, const AlignerOptions& options,
                      double min_session_score,
                      ExclusionPolicy policy = ExclusionPolicy::Wholesale);

} // namespace mmsc
