#include "mmsc/prompts.hpp"

#include <array>

#include "mmsc/error.hpp"
#include "mmsc/hash.hpp"

namespace mmsc {

namespace {

// Shared task definition: the three-code taxonomy spelled out once, so every
// prompt classifies against identical ground rules.
constexpr const char* kTaskDefinition =
    "You are coding one client utterance from a motivational interviewing session about "
    "alcohol use. An utterance is a contiguous segment of client speech expressing a single "
    "communicative intent. Assign exactly one code: CT (Change Talk) when the utterance "
    "supports behavior change; ST (Sustain Talk) when it argues against change or defends "
    "the status quo; FN (Follow/Neutral) when it carries no clear motivational direction.";

constexpr const char* kAnswerFooter =
    "End your answer with exactly one line: FINAL: CT or FINAL: ST or FINAL: FN.";

const std::array<PromptTemplate, 6>& catalog() {
    static const std::array<PromptTemplate, 6> templates = {{
        {PromptId::P1, kTaskDefinition,
         "Method: Think step by step about the meaning of the utterance and decide whether it "
         "reflects CT, ST, or FN.",
         kAnswerFooter},
        {PromptId::P2, kTaskDefinition,
         "Method: Paraphrase the utterance and annotate prosodic cues inline (e.g., hesitation, "
         "pause, rising tone), then reason about CT/ST/FN using both content and acoustic cues.",
         kAnswerFooter},
        {PromptId::P3, kTaskDefinition,
         "Method: Provide step-by-step reasoning and assign independent 1–5 scores to CT, "
         "ST, and FN based on observed evidence; choose the highest.",
         kAnswerFooter},
        {PromptId::P4, kTaskDefinition,
         "Method: Compare how well the utterance fits CT, ST, and FN by focusing on "
         "discriminative evidence; select the best-fitting label.",
         kAnswerFooter},
        {PromptId::Direct, kTaskDefinition,
         "Method: Directly classify the utterance as CT, ST, or FN without providing reasoning.",
         kAnswerFooter},
        {PromptId::Cot, kTaskDefinition,
         "Method: Think step by step to decide CT, ST, or FN.",
         kAnswerFooter},
    }};
    return templates;
}

} // namespace

std::string_view to_string(PromptId id) {
    switch (id) {
        case PromptId::P1:     return "P1";
        case PromptId::P2:     return "P2";
        case PromptId::P3:     return "P3";
        case PromptId::P4:     return "P4";
        case PromptId::Direct: return "DIRECT";
        case PromptId::Cot:    return "COT";
    }
    return "";
}

PromptId parse_prompt_id(std::string_view text) {
    for (PromptId id : kAllPrompts) {
        if (text == to_string(id)) return id;
    }
    raise(ErrorCode::InvalidConfig, "unknown prompt id: \"" + std::string(text) + "\"");
}

std::string_view to_string(Modality modality) {
    switch (modality) {
        case Modality::AudioOnly:    return "audio";
        case Modality::TextOnly:     return "text";
        case Modality::AudioAndText: return "audio+text";
    }
    return "";
}

Modality parse_modality(std::string_view text) {
    if (text == "audio") return Modality::AudioOnly;
    if (text == "text") return Modality::TextOnly;
    if (text == "audio+text") return Modality::AudioAndText;
    raise(ErrorCode::InvalidConfig, "unknown modality: \"" + std::string(text) + "\"");
}

bool includes_audio(Modality modality) {
    return modality == Modality::AudioOnly || modality == Modality::AudioAndText;
}

bool includes_text(Modality modality) {
    return modality == Modality::TextOnly || modality == Modality::AudioAndText;
}

const PromptTemplate& prompt_template(PromptId id) {
    for (const PromptTemplate& tmpl : catalog()) {
        if (tmpl.id == id) return tmpl;
    }
    raise(ErrorCode::InvalidConfig, "no template for prompt id");
}

std::string render_prompt(const PromptTemplate& tmpl, Modality modality) {
    if (tmpl.id == PromptId::P2 && modality == Modality::TextOnly) {
        raise(ErrorCode::IncompatibleModality,
              "P2 reasons over acoustic cues and cannot run on text-only input");
    }
    return tmpl.task_definition + "\n\n" + tmpl.method_text + "\n\n" + tmpl.answer_footer;
}

std::string template_fingerprint(const PromptTemplate& tmpl) {
    std::string full = std::string(to_string(tmpl.id)) + "\x1f" + tmpl.task_definition + "\x1f" +
                       tmpl.method_text + "\x1f" + tmpl.answer_footer;
    return stable_hash_hex(full);
}

} // namespace mmsc
