#pragma once

// Prompt templates. The strings here are part of the on-disk contract: any
// change must bump kTemplateVersion so cached responses and exported datasets
// stay distinguishable.

#include <string>
#include <string_view>

#include "calmath/kinds.hpp"
#include "calmath/taskgen.hpp"

namespace calmath {

inline constexpr std::string_view kTemplateVersion = "prompts-v1";

inline constexpr std::string_view kQuestionPrefix = "Q: ";
inline constexpr std::string_view kAnswerPrefix = "A:";
inline constexpr std::string_view kConfidenceCue = "Confidence:";
inline constexpr std::string_view kJudgmentCue = "True/false:";
inline constexpr std::string_view kExemplarSeparator = "\n\n";

/// "Q: <question>\nA:"
std::string render_qa_prompt(const QuestionInstance& question);

/// "Q: <question>\nA: <answer>\n<cue>" where the cue is "Confidence:" for the
/// verbalized setups and "True/false:" for the indirect logit. Throws
/// std::invalid_argument for AnswerLogit, which reads the answer prompt.
std::string render_confidence_prompt(const QuestionInstance& question, std::string_view answer_text,
                                     ConfidenceKind setup);

/// First line of a raw completion, trimmed. This is the answer text shown
/// back to the model in confidence prompts.
std::string normalize_answer_text(std::string_view raw);

}  // namespace calmath
