#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmsc/ingest.hpp"
#include "mmsc/types.hpp"

namespace mmsc {

// One step of a token-level global alignment. Match and Substitute carry
// both indices, Insert (extra ASR token) only asr_index, Delete (reference
// token absent from ASR) only ref_index.
enum class AlignOpKind { Match, Substitute, Insert, Delete };

struct AlignOp {
    AlignOpKind kind;
    std::optional<size_t> asr_index;
    std::optional<size_t> ref_index;
};

std::string_view to_string(AlignOpKind kind);

// Case-folded tokens: maximal runs of alphanumerics and apostrophes, with
// outer apostrophes trimmed; everything else separates. Digits are kept,
// empty tokens dropped.
std::vector<std::string> tokenize_normalized(std::string_view text);

// Minimum-cost global alignment under unit costs (Match 0 when tokens are
// equal, Substitute/Insert/Delete 1). Ties resolve by preferring
// Match/Substitute over Insert over Delete, scanning left to right. Covers
// every index of both sequences exactly once.
std::vector<AlignOp> align_tokens(std::span<const std::string> asr,
                                  std::span<const std::string> ref);

// Character-level edit distance divided by the longer length; 0 for two
// empty strings.
double normalized_edit_distance(std::string_view a, std::string_view b);

// Token stream derived from timed ASR words, with a map back from each
// token to the word it came from (a word may yield several tokens or none).
struct TokenizedWords {
    std::vector<std::string> tokens;
    std::vector<size_t> word_of_token;
};

TokenizedWords tokenize_words(std::span<const TimedWord> words);

// A reference utterance projected onto the ASR timeline.
struct AlignedUtterance {
    UtteranceId id;
    std::string text;
    TimeSpan span;
    double token_coverage = 0.0;
    double session_score = 0.0;
    bool empty_evidence = false; // no matched word; span interpolated from neighbors
    std::optional<MICode> gold_code;
};

struct AlignerOptions {
    // A Substitute counts toward coverage when the two tokens' normalized
    // edit distance is at most this; alignment cost is unaffected.
    double fuzzy_substitution_max_ned = 0.34;
    // Nominal width given to spans interpolated for empty-evidence utterances.
    double empty_span_width_s = 0.02;
};

// Project each utterance's reference-token range onto word timestamps:
// span from the first to the last ASR word aligned by Match/Substitute
// inside the range. token_coverage counts matched reference tokens in the
// range, session_score across the whole session. Throws NoTimedWords when
// the session has zero ASR words.
std::vector<AlignedUtterance> project_spans(std::span<const AlignOp> ops,
                                            std::span<const TimedWord> token_words,
                                            std::span<const std::string> asr_tokens,
                                            std::span<const ReferenceUtterance> utterances,
                                            const AlignerOptions& options = {});

// Convenience wrapper: tokenize both sides, align, project.
std::vector<AlignedUtterance> align_session(std::span<const TimedWord> words,
                                            std::span<const ReferenceUtterance> utterances,
                                            const AlignerOptions& options = {});

struct QcDecision {
    bool accept = false;
    double session_score = 0.0;
    std::string reason;
};

// Exclude a session when its score falls strictly below the threshold.
QcDecision qc_filter(std::span<const AlignedUtterance> session, double min_session_score);

// One AlignedUtterance as a JSONL line with fields {session_id, index,
// text, start_s, end_s, token_coverage, flags, gold_code}.
std::string aligned_utterance_to_jsonl(const AlignedUtterance& utt);
AlignedUtterance aligned_utterance_from_jsonl(std::string_view line);

} // namespace mmsc
