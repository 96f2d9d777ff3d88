#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "mmsc/prompts.hpp"
#include "mmsc/types.hpp"

namespace mmsc {

enum class ParsePath { FinalLine, LastMention, Abstained };

std::string_view to_string(ParsePath path);

// Independent 1-5 strength scores a P3 response assigns to each code.
struct EvidenceScores {
    int ct = 0;
    int st = 0;
    int fn = 0;

    bool operator==(const EvidenceScores&) const = default;
};

struct ParsedResponse {
    std::optional<MICode> label; // nullopt = abstain
    std::optional<EvidenceScores> scores;
    ParsePath parse_path = ParsePath::Abstained;
};

// Primary path: the last line of the form "FINAL: <CT|ST|FN>",
// case-insensitive and tolerant of surrounding punctuation. Fallback: the
// last standalone CT/ST/FN token. Otherwise abstains; never throws.
ParsedResponse parse_label(std::string_view raw);

// Last "CT: k" / "ST: k" / "FN: k" occurrences, each k in 1..5. Absent when
// any of the three is missing or out of range. Advisory metadata only; the
// FINAL label always wins.
std::optional<EvidenceScores> parse_scores(std::string_view raw);

// parse_label plus, for P3 only, parse_scores.
ParsedResponse parse_response(std::string_view raw, PromptId prompt);

// True when the scores' unique argmax disagrees with the parsed label.
// Logged as a diagnostic; never changes the label.
bool scores_conflict(const ParsedResponse& parsed);

struct VoteTally {
    std::array<int, 3> counts{0, 0, 0}; // indexed by MICode order CT, ST, FN
    int abstains = 0;

    int count(MICode code) const { return counts[static_cast<size_t>(code)]; }
    int& count(MICode code) { return counts[static_cast<size_t>(code)]; }
    int vote_total() const { return counts[0] + counts[1] + counts[2]; }

    bool operator==(const VoteTally&) const = default;
};

// Count labels per code; abstentions are tracked separately and stay out of
// the vote pool.
VoteTally tally(std::span<const ParsedResponse> parsed);

struct AggregatedPrediction {
    UtteranceId utterance_id;
    std::optional<MICode> final; // nullopt = unresolved (every trajectory abstained)
    VoteTally tally;
    bool tie_break_applied = false;
};

// Majority vote: unique argmax wins outright; tied maxima resolve by the
// fixed priority CT > ST > FN with tie_break_applied set. An empty vote
// pool yields an unresolved prediction.
AggregatedPrediction aggregate(const VoteTally& tally);

} // namespace mmsc
