#pragma once

// Extraction of p_M from model responses: verbalized numbers and words
// (greedy or expected-value decoding), the answer logit, and the indirect
// logit.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "calmath/kinds.hpp"
#include "calmath/modelclient.hpp"
#include "calmath/taskgen.hpp"

namespace calmath {

/// The requested confidence kind cannot be computed from what the backend
/// returned (no logprobs, or the judgment tokens are missing).
class UnavailableConfidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Five confidence words for the intervals [0, 0.2), [0.2, 0.4), ... [0.8, 1].
class WordScale {
 public:
  static constexpr std::array<double, 5> kMidpoints{0.1, 0.3, 0.5, 0.7, 0.9};

  /// Throws std::invalid_argument if words are empty or not distinct
  /// (case-insensitively).
  explicit WordScale(std::array<std::string, 5> words);

  /// Random names without an implied order; the default.
  static WordScale names();
  /// "lowest" .. "highest".
  static WordScale ordered();

  const std::array<std::string, 5>& words() const { return words_; }
  const std::string& word(std::size_t index) const { return words_.at(index); }
  static double midpoint(std::size_t index) { return kMidpoints.at(index); }

  /// Case-insensitive match after trimming whitespace and punctuation.
  std::optional<std::size_t> index_of(std::string_view token) const;

 private:
  std::array<std::string, 5> words_;
};

/// Probability used when a verbalized confidence cannot be parsed.
inline constexpr double kParseFallback = 0.5;

struct ConfidenceEstimate {
  ConfidenceKind kind = ConfidenceKind::VerbalNumber;
  double probability = kParseFallback;
  Decoding decoding = Decoding::Greedy;
  bool parse_ok = true;
};

ConfidenceEstimate parse_verbal_number(const CompletionResponse& response, Decoding decoding,
                                       double fallback = kParseFallback);

ConfidenceEstimate parse_verbal_word(const CompletionResponse& response, const WordScale& scale,
                                     Decoding decoding, double fallback = kParseFallback);

/// Half-open token index range.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Tokens of the answer: everything before the first token containing a
/// newline.
TokenSpan answer_span(const CompletionResponse& response);

/// exp(sum of logprobs over the span). No length normalization.
ConfidenceEstimate answer_logit_probability(const CompletionResponse& response,
                                            std::optional<TokenSpan> span = std::nullopt);

/// P(True) / (P(True) + P(False)) read from the first generated position.
ConfidenceEstimate indirect_logit_from_response(const CompletionResponse& response);

/// Asks the model to judge its own answer, then reads the judgment logits.
ConfidenceEstimate indirect_logit_probability(const QuestionInstance& question, std::string_view answer_text,
                                              ModelClient& client);

/// Request used by indirect_logit_probability.
CompletionRequest indirect_logit_request(const QuestionInstance& question, std::string_view answer_text);

}  // namespace calmath
