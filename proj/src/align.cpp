#include "mmsc/align.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "mmsc/error.hpp"

namespace mmsc {

namespace {

bool token_char(unsigned char c) {
    return std::isalnum(c) != 0 || c == '\'';
}

// Move codes for the alignment backtrace.
enum : uint8_t { kNone = 0, kDiag = 1, kTakeAsr = 2, kTakeRef = 3 };

} // namespace

std::string_view to_string(AlignOpKind kind) {
    switch (kind) {
        case AlignOpKind::Match:      return "match";
        case AlignOpKind::Substitute: return "substitute";
        case AlignOpKind::Insert:     return "insert";
        case AlignOpKind::Delete:     return "delete";
    }
    return "";
}

std::vector<std::string> tokenize_normalized(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        size_t b = 0;
        size_t e = current.size();
        while (b < e && current[b] == '\'') ++b;
        while (e > b && current[e - 1] == '\'') --e;
        if (e > b) tokens.emplace_back(current.substr(b, e - b));
        current.clear();
    };
    for (unsigned char c : text) {
        if (token_char(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

// Classic quadratic DP on the reversed sequences with a byte move matrix.
// Backtracing the reversed problem from its far corner walks the original
// sequences front to back, so the fill-time move priority (diagonal, then
// consume-ASR, then consume-reference) realizes the documented tie-break:
// Match/Substitute over Insert over Delete, scanning left to right.
std::vector<AlignOp> align_tokens(std::span<const std::string> asr,
                                  std::span<const std::string> ref) {
    const size_t n = asr.size();
    const size_t m = ref.size();

    std::vector<uint8_t> move((n + 1) * (m + 1), kNone);
    auto move_at = [&](size_t a, size_t b) -> uint8_t& { return move[a * (m + 1) + b]; };

    std::vector<uint32_t> prev(m + 1);
    std::vector<uint32_t> curr(m + 1);
    for (size_t b = 0; b <= m; ++b) {
        prev[b] = static_cast<uint32_t>(b);
        if (b > 0) move_at(0, b) = kTakeRef;
    }
    for (size_t a = 1; a <= n; ++a) {
        curr[0] = static_cast<uint32_t>(a);
        move_at(a, 0) = kTakeAsr;
        const std::string& asr_tok = asr[n - a]; // reversed
        for (size_t b = 1; b <= m; ++b) {
            const uint32_t diag = prev[b - 1] + (asr_tok == ref[m - b] ? 0u : 1u);
            const uint32_t take_asr = prev[b] + 1;
            const uint32_t take_ref = curr[b - 1] + 1;
            uint32_t best = diag;
            uint8_t chosen = kDiag;
            if (take_asr < best) {
                best = take_asr;
                chosen = kTakeAsr;
            }
            if (take_ref < best) {
                best = take_ref;
                chosen = kTakeRef;
            }
            curr[b] = best;
            move_at(a, b) = chosen;
        }
        std::swap(prev, curr);
    }

    std::vector<AlignOp> ops;
    ops.reserve(std::max(n, m));
    size_t a = n;
    size_t b = m;
    while (a > 0 || b > 0) {
        switch (move_at(a, b)) {
            case kDiag: {
                const size_t ai = n - a;
                const size_t ri = m - b;
                ops.push_back({asr[ai] == ref[ri] ? AlignOpKind::Match : AlignOpKind::Substitute,
                               ai, ri});
                --a;
                --b;
                break;
            }
            case kTakeAsr:
                ops.push_back({AlignOpKind::Insert, n - a, std::nullopt});
                --a;
                break;
            case kTakeRef:
                ops.push_back({AlignOpKind::Delete, std::nullopt, m - b});
                --b;
                break;
            default:
                raise(ErrorCode::MalformedInput, "alignment backtrace left the table");
        }
    }
    return ops;
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 0.0;
    std::vector<uint32_t> prev(b.size() + 1);
    std::vector<uint32_t> curr(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<uint32_t>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        curr[0] = static_cast<uint32_t>(i);
        for (size_t j = 1; j <= b.size(); ++j) {
            const uint32_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u);
            curr[j] = std::min({sub, prev[j] + 1, curr[j - 1] + 1});
        }
        std::swap(prev, curr);
    }
    return static_cast<double>(prev[b.size()]) / static_cast<double>(std::max(a.size(), b.size()));
}

TokenizedWords tokenize_words(std::span<const TimedWord> words) {
    TokenizedWords out;
    for (size_t i = 0; i < words.size(); ++i) {
        for (std::string& tok : tokenize_normalized(words[i].text)) {
            out.tokens.push_back(std::move(tok));
            out.word_of_token.push_back(i);
        }
    }
    return out;
}

std::vector<AlignedUtterance> project_spans(std::span<const AlignOp> ops,
                                            std::span<const TimedWord> token_words,
                                            std::span<const std::string> asr_tokens,
                                            std::span<const ReferenceUtterance> utterances,
                                            const AlignerOptions& options) {
    if (token_words.empty()) {
        raise(ErrorCode::NoTimedWords, "session has no timed ASR words");
    }
    if (token_words.size() != asr_tokens.size()) {
        raise(ErrorCode::LengthMismatch, "one timed word per ASR token required");
    }

    // Reference token ranges per utterance, in file order.
    std::vector<std::string> ref_tokens;
    std::vector<std::pair<size_t, size_t>> ranges;
    ranges.reserve(utterances.size());
    for (const ReferenceUtterance& utt : utterances) {
        const size_t begin = ref_tokens.size();
        for (std::string& tok : tokenize_normalized(utt.text)) {
            ref_tokens.push_back(std::move(tok));
        }
        ranges.emplace_back(begin, ref_tokens.size());
    }

    struct RefEvidence {
        bool aligned = false;  // Match or Substitute
        bool matched = false;  // Match, or Substitute within the fuzzy threshold
        size_t asr_index = 0;
    };
    std::vector<RefEvidence> evidence(ref_tokens.size());
    for (const AlignOp& op : ops) {
        if (op.kind != AlignOpKind::Match && op.kind != AlignOpKind::Substitute) continue;
        if (*op.ref_index >= ref_tokens.size() || *op.asr_index >= token_words.size()) {
            raise(ErrorCode::LengthMismatch, "alignment op indexes outside the token streams");
        }
        RefEvidence& ev = evidence[*op.ref_index];
        ev.aligned = true;
        ev.asr_index = *op.asr_index;
        ev.matched = op.kind == AlignOpKind::Match ||
                     normalized_edit_distance(asr_tokens[*op.asr_index],
                                              ref_tokens[*op.ref_index]) <=
                         options.fuzzy_substitution_max_ned;
    }

    double session_end = 0.0;
    for (const TimedWord& w : token_words) session_end = std::max(session_end, w.end_s);

    size_t matched_total = 0;
    for (const RefEvidence& ev : evidence) {
        if (ev.matched) ++matched_total;
    }
    const double session_score =
        ref_tokens.empty() ? 0.0
                           : static_cast<double>(matched_total) / static_cast<double>(ref_tokens.size());

    struct Projected {
        bool has_evidence = false;
        double start = 0.0;
        double end = 0.0;
        double coverage = 0.0;
    };
    std::vector<Projected> projected(utterances.size());
    for (size_t u = 0; u < utterances.size(); ++u) {
        const auto [begin, end] = ranges[u];
        Projected& p = projected[u];
        size_t matched_in_range = 0;
        size_t first_word = 0;
        size_t last_word = 0;
        for (size_t r = begin; r < end; ++r) {
            const RefEvidence& ev = evidence[r];
            if (ev.matched) ++matched_in_range;
            if (!ev.aligned) continue;
            if (!p.has_evidence || ev.asr_index < first_word) first_word = ev.asr_index;
            if (!p.has_evidence || ev.asr_index > last_word) last_word = ev.asr_index;
            p.has_evidence = true;
        }
        if (end > begin) {
            p.coverage = static_cast<double>(matched_in_range) / static_cast<double>(end - begin);
        }
        if (p.has_evidence) {
            p.start = token_words[first_word].start_s;
            p.end = std::max(token_words[last_word].end_s, p.start + 1e-3);
        }
    }

    // Interpolate spans for runs without evidence: spread them across the
    // gap between the neighboring projected spans.
    const double width = std::max(options.empty_span_width_s, 1e-3);
    double prev_start = 0.0;
    for (size_t u = 0; u < utterances.size();) {
        if (projected[u].has_evidence) {
            prev_start = std::max(prev_start, projected[u].start);
            ++u;
            continue;
        }
        size_t run_end = u;
        while (run_end < utterances.size() && !projected[run_end].has_evidence) ++run_end;

        const double lo_anchor = u == 0 ? 0.0 : projected[u - 1].end;
        const double hi =
            run_end < utterances.size() ? projected[run_end].start : session_end;
        const double lo = std::min(lo_anchor, hi);
        const size_t k = run_end - u;
        for (size_t j = 0; j < k; ++j) {
            const double center =
                lo + (hi - lo) * static_cast<double>(j + 1) / static_cast<double>(k + 1);
            double start = std::max({center - width / 2.0, 0.0, prev_start});
            double end = start + width;
            if (end > session_end && session_end > start + 1e-3) end = session_end;
            projected[u + j].start = start;
            projected[u + j].end = std::max(end, start + 1e-3);
            prev_start = start;
        }
        u = run_end;
    }

    std::vector<AlignedUtterance> out;
    out.reserve(utterances.size());
    for (size_t u = 0; u < utterances.size(); ++u) {
        const Projected& p = projected[u];
        out.push_back(AlignedUtterance{
            utterances[u].id,
            utterances[u].text,
            TimeSpan(p.start, p.end),
            p.coverage,
            session_score,
            !p.has_evidence,
            utterances[u].gold_code,
        });
    }
    return out;
}

std::vector<AlignedUtterance> align_session(std::span<const TimedWord> words,
                                            std::span<const ReferenceUtterance> utterances,
                                            const AlignerOptions& options) {
    if (words.empty()) raise(ErrorCode::NoTimedWords, "session has no timed ASR words");

    TokenizedWords tokenized = tokenize_words(words);
    std::vector<std::string> ref_tokens;
    for (const ReferenceUtterance& utt : utterances) {
        for (std::string& tok : tokenize_normalized(utt.text)) {
            ref_tokens.push_back(std::move(tok));
        }
    }
    std::vector<AlignOp> ops = align_tokens(tokenized.tokens, ref_tokens);

    std::vector<TimedWord> token_words;
    token_words.reserve(tokenized.tokens.size());
    for (size_t i = 0; i < tokenized.tokens.size(); ++i) {
        token_words.push_back(words[tokenized.word_of_token[i]]);
    }
    return project_spans(ops, token_words, tokenized.tokens, utterances, options);
}

QcDecision qc_filter(std::span<const AlignedUtterance> session, double min_session_score) {
    if (session.empty()) {
        return {true, 1.0, "empty session"};
    }
    const double score = session.front().session_score;
    if (score < min_session_score) {
        return {false, score,
                "session score " + std::to_string(score) + " below threshold " +
                    std::to_string(min_session_score)};
    }
    return {true, score, ""};
}

std::string aligned_utterance_to_jsonl(const AlignedUtterance& utt) {
    nlohmann::ordered_json line;
    line["session_id"] = utt.id.session_id;
    line["index"] = utt.id.index;
    line["text"] = utt.text;
    line["start_s"] = utt.span.start_s();
    line["end_s"] = utt.span.end_s();
    line["token_coverage"] = utt.token_coverage;
    line["flags"] = utt.empty_evidence ? nlohmann::ordered_json::array({"empty_evidence"})
                                       : nlohmann::ordered_json::array();
    if (utt.gold_code) {
        line["gold_code"] = std::string(to_string(*utt.gold_code));
    } else {
        line["gold_code"] = nullptr;
    }
    return line.dump();
}

AlignedUtterance aligned_utterance_from_jsonl(std::string_view text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(ErrorCode::MalformedInput, "aligned utterance line is not a JSON object");
    }
    try {
        AlignedUtterance utt{
            UtteranceId{doc.at("session_id").get<std::string>(), doc.at("index").get<int>()},
            doc.at("text").get<std::string>(),
            TimeSpan(doc.at("start_s").get<double>(), doc.at("end_s").get<double>()),
            doc.at("token_coverage").get<double>(),
            0.0,
            false,
            std::nullopt,
        };
        if (doc.contains("flags")) {
            for (const auto& flag : doc["flags"]) {
                if (flag.get<std::string>() == "empty_evidence") utt.empty_evidence = true;
            }
        }
        if (doc.contains("gold_code") && !doc["gold_code"].is_null()) {
            utt.gold_code = parse_code(doc["gold_code"].get<std::string>());
        }
        return utt;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::MalformedInput, std::string("aligned utterance line: ") + e.what());
    }
}

} // namespace mmsc
