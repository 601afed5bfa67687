#pragma once

// Stochastic k-shot contexts built from labeled training examples. Each
// exemplar shows a question, the model's answer and the sub-task label as
// "Confidence: NN%"; exemplars are separated by a blank line and the query
// block ends at the bare confidence cue.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "calmath/confidence.hpp"
#include "calmath/labeling.hpp"
#include "calmath/templates.hpp"

namespace calmath {

inline constexpr std::array<std::size_t, 5> kFewShotPresets{1, 5, 10, 25, 50};

struct FewShotConfig {
  std::size_t k = 0;
  std::vector<LabeledExample> pool;
  bool per_query_resample = true;
  std::uint64_t seed = 0;
};

/// "Q: <question>\nA: <answer>\nConfidence: <label>". Throws
/// std::invalid_argument for a BoolLabel; few-shot contexts are verbal.
std::string render_exemplar(const LabeledExample& exemplar, const WordScale& scale = WordScale::names());

/// Exemplars in the given order followed by the query block.
std::string render_fewshot_prompt(const std::vector<LabeledExample>& exemplars, const QuestionInstance& query,
                                  std::string_view query_answer, const WordScale& scale = WordScale::names());

/// Indices into config.pool used for the query with this index. With
/// per_query_resample the draw is seeded by (seed, query_index); otherwise
/// every query sees the same draw. Throws std::invalid_argument if k > |pool|.
std::vector<std::size_t> sample_exemplars(const FewShotConfig& config, std::size_t query_index);

std::string build_fewshot_context(const FewShotConfig& config, const QuestionInstance& query,
                                  std::string_view query_answer, std::size_t query_index,
                                  const WordScale& scale = WordScale::names());

}  // namespace calmath
