#pragma once

// A deterministic stand-in for a language model. It answers the questions it
// was constructed with, correctly with probability alpha_T for each
// sub-task, and reports confidence according to a policy. Prompts are
// recognized by their final line: "A:" asks for an answer, "Confidence:"
// for a verbalized confidence and "True/false:" for a judgment.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "calmath/confidence.hpp"
#include "calmath/modelclient.hpp"
#include "calmath/taskgen.hpp"

namespace calmath {

struct ConfidencePolicy {
  enum class Kind { Oracle, NoisyOracle, Constant, Uncalibrated };
  Kind kind = Kind::Oracle;
  double sigma = 0.1;     // NoisyOracle
  double constant = 0.5;  // Constant

  static ConfidencePolicy oracle() { return {}; }
  static ConfidencePolicy noisy(double sigma) { return {Kind::NoisyOracle, sigma, 0.5}; }
  static ConfidencePolicy fixed(double c) { return {Kind::Constant, 0.1, c}; }
  static ConfidencePolicy uncalibrated() { return {Kind::Uncalibrated, 0.1, 0.5}; }
};

std::string_view policy_name(ConfidencePolicy::Kind kind);
std::optional<ConfidencePolicy::Kind> parse_policy(std::string_view name);

enum class VerbalStyle { Number, Word };

struct SimulatedModelConfig {
  std::map<SubTaskSpec, double> per_subtask_accuracy;
  /// Used for sub-tasks absent from the map.
  double default_accuracy = 0.5;
  ConfidencePolicy confidence_policy;
  std::uint64_t seed = 0;
  VerbalStyle verbal_style = VerbalStyle::Number;
  WordScale scale = WordScale::names();
  std::size_t embedding_dim = 32;
  /// Offset of the class means along the correctness direction, in units of
  /// the per-coordinate noise.
  double embedding_separation = 2.0;

  /// Throws std::invalid_argument if an accuracy is outside [0, 1].
  void validate() const;
  double accuracy(const SubTaskSpec& subtask) const;
};

void to_json(nlohmann::json& j, const SimulatedModelConfig& c);
void from_json(const nlohmann::json& j, SimulatedModelConfig& c);

/// Accuracies for every sub-task of the benchmark. Within a group, sub-tasks
/// are ranked by total operand digits (ties by table order); accuracy falls
/// linearly from 1 for the easiest to the group median at the middle rank
/// and on to 0 for the hardest, so each group spans [0, 1] with the given
/// median.
std::map<SubTaskSpec, double> default_accuracy_profile(double addsub_median = 0.21, double multdiv_median = 0.40,
                                                       double multi_median = 0.65);

/// The confidence the policy assigns to a question, before any rounding to a
/// verbal surface form.
double policy_confidence(const SimulatedModelConfig& config, const QuestionInstance& question);

/// The simulated zero-shot answer: whether it is correct and its text. Pure
/// in (question prompt, sub-task, config).
struct SimulatedAnswer {
  bool correct = false;
  std::string text;
};
SimulatedAnswer simulate_answer_text(const QuestionInstance& question, const SimulatedModelConfig& config);

/// Response to the zero-shot answer prompt for `question`, with the answer as
/// a single token whose probability is the policy confidence.
CompletionResponse simulate_answer(const QuestionInstance& question, const SimulatedModelConfig& config);

class SimulatorBackend : public Backend {
 public:
  /// Questions are looked up by prompt text; when two share a text the first
  /// one registered wins.
  SimulatorBackend(SimulatedModelConfig config, const std::vector<QuestionInstance>& questions);

  std::string id() const override { return id_; }
  /// Throws RequestRejected for prompts about unknown questions.
  CompletionResponse complete(const CompletionRequest& request) override;
  /// For "Q: <question>\nA: <answer>" texts, class means differ by answer
  /// correctness; other texts embed as noise.
  std::vector<double> embed(const std::string& text) override;

  const SimulatedModelConfig& config() const { return config_; }

 private:
  const QuestionInstance* find(const std::string& prompt_text) const;

  SimulatedModelConfig config_;
  std::string id_;
  std::unordered_map<std::string, QuestionInstance> by_prompt_;
};

}  // namespace calmath
