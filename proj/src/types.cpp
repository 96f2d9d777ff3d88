#include "mmsc/types.hpp"

#include <cctype>

#include "mmsc/error.hpp"

namespace mmsc {

std::string_view to_string(MICode code) {
    switch (code) {
        case MICode::CT: return "CT";
        case MICode::ST: return "ST";
        case MICode::FN: return "FN";
    }
    return "";
}

MICode parse_code(std::string_view text) {
    size_t begin = 0;
    size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;

    std::string folded;
    folded.reserve(end - begin);
    for (size_t i = begin; i < end; ++i) {
        folded.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(text[i]))));
    }

    for (MICode code : kAllCodes) {
        if (folded == to_string(code)) return code;
    }
    raise(ErrorCode::UnknownLabel, "not a canonical MI code: \"" + std::string(text) + "\"");
}

std::string UtteranceId::str() const {
    return session_id + "/" + std::to_string(index);
}

TimeSpan::TimeSpan(double start_s, double end_s) : start_s_(start_s), end_s_(end_s) {
    if (!(start_s >= 0.0) || !(start_s < end_s)) {
        raise(ErrorCode::NegativeSpan,
              "require 0 <= start < end, got [" + std::to_string(start_s) + ", " +
                  std::to_string(end_s) + ")");
    }
}

} // namespace mmsc
