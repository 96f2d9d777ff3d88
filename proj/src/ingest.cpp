#include "mmsc/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include <json.hpp>

#include "mmsc/error.hpp"

namespace mmsc {

namespace {

bool whitespace_only(std::string_view text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

} // namespace

std::vector<TimedWord> parse_asr_words(std::string_view json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("words") ||
        !doc["words"].is_array()) {
        raise(ErrorCode::MalformedInput, "expected a JSON object with a top-level array \"words\"");
    }

    std::vector<TimedWord> words;
    double prev_start = 0.0;
    bool have_prev = false;
    for (const auto& item : doc["words"]) {
        if (!item.is_object() || !item.contains("text") || !item.contains("start") ||
            !item.contains("end") || !item["text"].is_string() || !item["start"].is_number() ||
            !item["end"].is_number()) {
            raise(ErrorCode::MalformedInput,
                  "each word needs string \"text\" and numeric \"start\"/\"end\"");
        }
        TimedWord word{item["text"].get<std::string>(), item["start"].get<double>(),
                       item["end"].get<double>()};
        if (word.end_s < word.start_s) {
            raise(ErrorCode::NegativeSpan, "word \"" + word.text + "\" ends before it starts");
        }
        if (have_prev && word.start_s < prev_start) {
            raise(ErrorCode::NonMonotonic,
                  "word \"" + word.text + "\" starts before the previous word");
        }
        prev_start = word.start_s;
        have_prev = true;
        if (whitespace_only(word.text)) continue;
        words.push_back(std::move(word));
    }
    return words;
}

std::vector<ReferenceUtterance> parse_reference_transcript(std::string_view jsonl_text) {
    std::vector<ReferenceUtterance> utterances;
    std::unordered_set<std::string> seen_keys;

    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= jsonl_text.size()) {
        size_t nl = jsonl_text.find('\n', pos);
        std::string_view line = jsonl_text.substr(
            pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? jsonl_text.size() + 1 : nl + 1;
        ++line_no;
        if (whitespace_only(line)) continue;

        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + " is not a JSON object");
        }
        for (const char* field : {"session_id", "index", "speaker", "text"}) {
            if (!doc.contains(field)) {
                raise(ErrorCode::MalformedInput,
                      "line " + std::to_string(line_no) + " missing field \"" + field + "\"");
            }
        }
        if (!doc["session_id"].is_string() || !doc["index"].is_number_integer() ||
            !doc["speaker"].is_string() || !doc["text"].is_string()) {
            raise(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + " has wrong field types");
        }

        ReferenceUtterance utt;
        utt.id.session_id = doc["session_id"].get<std::string>();
        utt.id.index = doc["index"].get<int>();
        if (utt.id.index < 0) {
            raise(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + " has a negative index");
        }
        utt.speaker = doc["speaker"].get<std::string>();
        utt.text = doc["text"].get<std::string>();
        if (utt.text.empty()) {
            raise(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + " has empty text");
        }
        if (doc.contains("code") && !doc["code"].is_null()) {
            if (!doc["code"].is_string()) {
                raise(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + " code must be a string");
            }
            utt.gold_code = parse_code(doc["code"].get<std::string>());
        }

        if (!seen_keys.insert(utt.id.str()).second) {
            raise(ErrorCode::DuplicateIndex, "duplicate utterance " + utt.id.str());
        }
        utterances.push_back(std::move(utt));
    }

    std::stable_sort(utterances.begin(), utterances.end(),
                     [](const ReferenceUtterance& a, const ReferenceUtterance& b) {
                         return a.id < b.id;
                     });
    return utterances;
}

} // namespace mmsc
