#pragma once

#include <array>
#include <compare>
#include <string>
#include <string_view>

namespace mmsc {

// The three-way motivational interviewing code assigned to a client
// utterance: change talk, sustain talk, or follow/neutral.
enum class MICode { CT, ST, FN };

inline constexpr std::array<MICode, 3> kAllCodes{MICode::CT, MICode::ST, MICode::FN};

std::string_view to_string(MICode code);

// Accepts exactly "CT"/"ST"/"FN" after trimming whitespace and case-folding.
// Long forms ("Change Talk") are rejected here; lenient matching of model
// output belongs to the response parser. Throws UnknownLabel.
MICode parse_code(std::string_view text);

// Position of an utterance within a run: session plus 0-based index.
struct UtteranceId {
    std::string session_id;
    int index = 0;

    auto operator<=>(const UtteranceId&) const = default;

    // "session_id/index", used for cache keys and mock scripts.
    std::string str() const;
};

// Half-open time interval in seconds. Construction enforces
// 0 <= start < end; there is no other way to make one.
class TimeSpan {
public:
    TimeSpan(double start_s, double end_s);

    double start_s() const { return start_s_; }
    double end_s() const { return end_s_; }
    double duration_s() const { return end_s_ - start_s_; }

    bool operator==(const TimeSpan&) const = default;

private:
    double start_s_;
    double end_s_;
};

} // namespace mmsc
