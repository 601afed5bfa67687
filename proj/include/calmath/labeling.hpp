#pragma once

// Supervised calibration labels built from empirical sub-task accuracy.

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "calmath/confidence.hpp"
#include "calmath/taskgen.hpp"

namespace calmath {

/// A question with the model's zero-shot answer and its grade.
struct GradedQuestion {
  QuestionInstance question;
  std::string answer_text;
  bool correct = false;
};

struct SubTaskStats {
  SubTaskSpec subtask;
  std::size_t n = 0;
  std::size_t n_correct = 0;

  double p_hat() const { return static_cast<double>(n_correct) / static_cast<double>(n); }
};

/// One record per sub-task present, in sub-task order. Throws
/// std::invalid_argument on empty input.
std::vector<SubTaskStats> estimate_subtask_accuracy(const std::vector<GradedQuestion>& graded);

struct NumberLabel {
  int percent = 0;  // 0..100
  friend bool operator==(const NumberLabel&, const NumberLabel&) = default;
};
struct WordLabel {
  std::size_t index = 0;  // 0..4
  friend bool operator==(const WordLabel&, const WordLabel&) = default;
};
struct BoolLabel {
  bool value = false;
  friend bool operator==(const BoolLabel&, const BoolLabel&) = default;
};
using Label = std::variant<NumberLabel, WordLabel, BoolLabel>;

// Exact on the rational n_correct / n.
int number_label(const SubTaskStats& stats);
std::size_t word_label(const SubTaskStats& stats);

// For a probability given as a double. A 1e-9 guard absorbs representation
// error (100 * 0.29 == 28.999999999999996).
int number_label(double p_hat);
std::size_t word_label(double p_hat);

struct LabeledExample {
  QuestionInstance question;
  std::string model_answer_text;
  bool correct = false;
  Label label;
};

/// `setup` must be VerbalNumber, VerbalWord or IndirectLogit. Throws
/// std::invalid_argument if a graded question's sub-task has no stats.
std::vector<LabeledExample> make_labels(const std::vector<SubTaskStats>& stats,
                                        const std::vector<GradedQuestion>& graded, ConfidenceKind setup);

double decode_label(const Label& label);

/// Completion text for a label without the leading space: "59%", "john", "True".
std::string label_surface(const Label& label, const WordScale& scale);

/// Which setup a label type belongs to.
ConfidenceKind label_setup(const Label& label);

void to_json(nlohmann::json& j, const SubTaskStats& s);
void from_json(const nlohmann::json& j, SubTaskStats& s);
void to_json(nlohmann::json& j, const Label& l);
void from_json(const nlohmann::json& j, Label& l);
void to_json(nlohmann::json& j, const GradedQuestion& g);
void from_json(const nlohmann::json& j, GradedQuestion& g);
void to_json(nlohmann::json& j, const LabeledExample& e);
void from_json(const nlohmann::json& j, LabeledExample& e);

}  // namespace calmath
