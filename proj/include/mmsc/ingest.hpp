#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmsc/types.hpp"

namespace mmsc {

// One token from an external ASR run, with its word-level timestamps.
struct TimedWord {
    std::string text;
    double start_s = 0.0;
    double end_s = 0.0;
};

// One utterance of the human reference transcript. gold_code is present
// for every client utterance that enters evaluation.
struct ReferenceUtterance {
    UtteranceId id;
    std::string speaker;
    std::string text;
    std::optional<MICode> gold_code;
};

// Input is a JSON document {"words": [{"text","start","end"}, ...]} with
// seconds as numbers. Whitespace-only tokens are dropped. Throws
// MalformedInput, NonMonotonic (start times decrease), NegativeSpan.
std::vector<TimedWord> parse_asr_words(std::string_view json_text);

// Input is line-delimited JSON, one utterance per line, fields
// {session_id, index, speaker, text, code?}. Utterances are returned in
// index order. Throws MalformedInput, DuplicateIndex; UnknownLabel
// propagates from code parsing.
std::vector<ReferenceUtterance> parse_reference_transcript(std::string_view jsonl_text);

} // namespace mmsc
