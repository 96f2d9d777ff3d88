#include "mmsc/votes.hpp"

#include <cctype>
#include <regex>

namespace mmsc {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::optional<MICode> code_from_match(std::string_view token) {
    if (token.size() != 2) return std::nullopt;
    const char a = static_cast<char>(std::toupper(static_cast<unsigned char>(token[0])));
    const char b = static_cast<char>(std::toupper(static_cast<unsigned char>(token[1])));
    if (a == 'C' && b == 'T') return MICode::CT;
    if (a == 'S' && b == 'T') return MICode::ST;
    if (a == 'F' && b == 'N') return MICode::FN;
    return std::nullopt;
}

} // namespace

std::string_view to_string(ParsePath path) {
    switch (path) {
        case ParsePath::FinalLine:   return "final_line";
        case ParsePath::LastMention: return "last_mention";
        case ParsePath::Abstained:   return "abstained";
    }
    return "";
}

ParsedResponse parse_label(std::string_view raw) {
    static const std::regex final_re(R"(FINAL\s*:?\s*(CT|ST|FN))",
                                     std::regex::icase | std::regex::optimize);

    std::optional<MICode> last_final;
    for (auto it = std::cregex_iterator(raw.data(), raw.data() + raw.size(), final_re);
         it != std::cregex_iterator(); ++it) {
        const auto& m = *it;
        const size_t before = static_cast<size_t>(m.position(0));
        if (before > 0 && is_word_char(raw[before - 1])) continue;
        const size_t after = before + static_cast<size_t>(m.length(0));
        if (after < raw.size() && is_word_char(raw[after])) continue;
        last_final = code_from_match({m[1].first, 2});
    }
    if (last_final) {
        return {last_final, std::nullopt, ParsePath::FinalLine};
    }

    // Fallback: the last uppercase CT/ST/FN standing alone as a token.
    std::optional<MICode> last_mention;
    for (size_t i = 0; i + 2 <= raw.size(); ++i) {
        const std::string_view tok = raw.substr(i, 2);
        if (tok != "CT" && tok != "ST" && tok != "FN") continue;
        if (i > 0 && is_word_char(raw[i - 1])) continue;
        if (i + 2 < raw.size() && is_word_char(raw[i + 2])) continue;
        last_mention = code_from_match(tok);
    }
    if (last_mention) {
        return {last_mention, std::nullopt, ParsePath::LastMention};
    }
    return {std::nullopt, std::nullopt, ParsePath::Abstained};
}

std::optional<EvidenceScores> parse_scores(std::string_view raw) {
    static const std::regex score_re(R"((CT|ST|FN)\s*:\s*([0-9]+))", std::regex::optimize);

    std::optional<int> ct, st, fn;
    for (auto it = std::cregex_iterator(raw.data(), raw.data() + raw.size(), score_re);
         it != std::cregex_iterator(); ++it) {
        const auto& m = *it;
        const size_t before = static_cast<size_t>(m.position(0));
        if (before > 0 && is_word_char(raw[before - 1])) continue;
        int value = 0;
        for (const char* p = m[2].first; p != m[2].second; ++p) {
            value = value * 10 + (*p - '0');
            if (value > 99) break; // anything this large is out of range anyway
        }
        const std::string_view label(m[1].first, 2);
        if (label == "CT") ct = value;
        else if (label == "ST") st = value;
        else fn = value;
    }
    if (!ct || !st || !fn) return std::nullopt;
    auto in_range = [](int v) { return v >= 1 && v <= 5; };
    if (!in_range(*ct) || !in_range(*st) || !in_range(*fn)) return std::nullopt;
    return EvidenceScores{*ct, *st, *fn};
}

ParsedResponse parse_response(std::string_view raw, PromptId prompt) {
    ParsedResponse parsed = parse_label(raw);
    if (prompt == PromptId::P3) {
        parsed.scores = parse_scores(raw);
    }
    return parsed;
}

bool scores_conflict(const ParsedResponse& parsed) {
    if (!parsed.scores || !parsed.label) return false;
    const EvidenceScores& s = *parsed.scores;
    const std::array<int, 3> values{s.ct, s.st, s.fn};
    int best = 0;
    int best_count = 0;
    for (int v : values) {
        if (v > best) {
            best = v;
            best_count = 1;
        } else if (v == best) {
            ++best_count;
        }
    }
    if (best_count != 1) return false; // no unique argmax, nothing to disagree with
    for (size_t i = 0; i < 3; ++i) {
        if (values[i] == best) {
            return kAllCodes[i] != *parsed.label;
        }
    }
    return false;
}

VoteTally tally(std::span<const ParsedResponse> parsed) {
    VoteTally result;
    for (const ParsedResponse& p : parsed) {
        if (p.label) {
            ++result.count(*p.label);
        } else {
            ++result.abstains;
        }
    }
    return result;
}

AggregatedPrediction aggregate(const VoteTally& tally) {
    AggregatedPrediction pred;
    pred.tally = tally;
    if (tally.vote_total() == 0) {
        return pred; // unresolved: nothing but abstentions
    }
    int best = -1;
    int winners = 0;
    for (MICode code : kAllCodes) {
        if (tally.count(code) > best) {
            best = tally.count(code);
            winners = 1;
            pred.final = code;
        } else if (tally.count(code) == best) {
            ++winners; // priority order CT > ST > FN keeps the earlier winner
        }
    }
    pred.tie_break_applied = winners > 1;
    return pred;
}

} // namespace mmsc
