#pragma once

#include <array>
#include <string>
#include <string_view>

namespace mmsc {

// The four reasoning prompts plus the two single-pass baselines.
enum class PromptId { P1, P2, P3, P4, Direct, Cot };

inline constexpr std::array<PromptId, 6> kAllPrompts{PromptId::P1, PromptId::P2, PromptId::P3,
                                                     PromptId::P4, PromptId::Direct, PromptId::Cot};

std::string_view to_string(PromptId id);
PromptId parse_prompt_id(std::string_view text); // throws InvalidConfig

// What the model request carries. Text-only runs must not use P2, which
// reasons over acoustic cues.
enum class Modality { AudioOnly, TextOnly, AudioAndText };

std::string_view to_string(Modality modality);
Modality parse_modality(std::string_view text); // throws InvalidConfig

bool includes_audio(Modality modality);
bool includes_text(Modality modality);

struct PromptTemplate {
    PromptId id;
    std::string task_definition; // identical across all templates in a run
    std::string method_text;     // what distinguishes the prompt
    std::string answer_footer;   // fixed output-format instruction
};

// Built-in catalog; one entry per PromptId, all sharing the task definition.
const PromptTemplate& prompt_template(PromptId id);

// task_definition + method_text + answer_footer, joined by blank lines.
// Throws IncompatibleModality for P2 under TextOnly.
std::string render_prompt(const PromptTemplate& tmpl, Modality modality);

// Stable hash of the template's full text; goes into cache keys and run
// manifests so a wording change invalidates old responses.
std::string template_fingerprint(const PromptTemplate& tmpl);

} // namespace mmsc
