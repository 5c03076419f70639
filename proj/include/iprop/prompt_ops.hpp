#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iprop/llm_client.hpp"
#include "iprop/types.hpp"

namespace iprop {

// Fixed role instructions sent as the system message of each request.
inline constexpr std::string_view kRephraseSystem =
    "You rewrite task instructions for a text classifier. Reply with the rewritten "
    "instruction only.";
inline constexpr std::string_view kClassifySystem =
    "You are a text classifier. Reply with the label only.";
inline constexpr std::string_view kExplainSystem =
    "You explain text classification decisions in plain language.";

/// Appended to every rendered classify template.
inline constexpr std::string_view kClassifySuffix = "\n\nRespond with the label only.";

inline constexpr std::string_view kNoLabelExplanation = "no label identified";
inline constexpr std::size_t kMaxExplanationChars = 500;
inline constexpr std::string_view kTruncationMarker = "\xE2\x80\xA6";  // U+2026

/// Everything the three LLM roles need besides their direct inputs.
struct RoleContext {
  LlmClient& client;
  const MetaPromptTemplates& templates;
  std::string model_name;
  GenerationParams generation;
};

/// Strips whitespace, chatty preambles ("Here is the rephrased prompt:",
/// "Sure, ...:"), enclosing quotes, and folds newline runs into one space.
/// Applied until stable, so it is idempotent.
std::string clean_paraphrase(std::string_view raw);

/// Rule cascade over the case-folded output: bare label (ignoring surrounding
/// quotes and .,:;!), else the label whose whole-word mention comes first.
/// Returns the label in label-set casing, or nullopt for UNKNOWN.
std::optional<std::string> extract_label(std::string_view raw, const LabelSet& label_set);

/// `n` paraphrases of `prompt`, with ids taken from `next_id` onwards. A
/// paraphrase identical to its parent (after trim + case fold) is requested
/// once more with a fresh seed and kept either way. Throws ParaphraseEmpty if
/// cleaning leaves nothing.
std::vector<Prompt> paraphrase(const Prompt& prompt, std::size_t n, const RoleContext& ctx,
                               PromptId& next_id, std::size_t iteration, std::uint64_t seed);

std::string render_classify_message(const Prompt& prompt, const Instance& instance,
                                    const LabelSet& label_set,
                                    const MetaPromptTemplates& templates);

Prediction classify(const Prompt& prompt, const Instance& instance, const LabelSet& label_set,
                    const RoleContext& ctx);

/// UNKNOWN predictions get kNoLabelExplanation without contacting the LLM.
ExplainedPrediction explain(const Prompt& prompt, const Instance& instance,
                            const Prediction& prediction, const RoleContext& ctx);

/// Reads meta-prompt overrides from sections introduced by "[rephrase]",
/// "[classify]" or "[explain]" lines; each section body (trimmed) replaces
/// the corresponding template in `base`. Throws InvalidConfig for unknown
/// sections or text outside a section.
MetaPromptTemplates parse_templates(std::string_view content, MetaPromptTemplates base = {});

}  // namespace iprop
