#include "calmath/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace calmath {

std::vector<SubTaskStats> estimate_subtask_accuracy(const std::vector<GradedQuestion>& graded) {
  if (graded.empty()) throw std::invalid_argument("estimate_subtask_accuracy: no graded samples");
  std::map<SubTaskSpec, SubTaskStats> by_subtask;
  for (const auto& g : graded) {
    auto& s = by_subtask[g.question.subtask];
    s.subtask = g.question.subtask;
    ++s.n;
    if (g.correct) ++s.n_correct;
  }
  std::vector<SubTaskStats> out;
  out.reserve(by_subtask.size());
  for (auto& [_, s] : by_subtask) out.push_back(std::move(s));
  return out;
}

int number_label(const SubTaskStats& stats) {
  if (stats.n == 0) throw std::invalid_argument("number_label: n == 0");
  return static_cast<int>(100 * stats.n_correct / stats.n);
}

std::size_t word_label(const SubTaskStats& stats) {
  if (stats.n == 0) throw std::invalid_argument("word_label: n == 0");
  return std::min<std::size_t>(5 * stats.n_correct / stats.n, 4);
}

int number_label(double p_hat) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw std::invalid_argument("number_label: p outside [0,1]");
  return std::min(100, static_cast<int>(std::floor(100.0 * p_hat + 1e-9)));
}

std::size_t word_label(double p_hat) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw std::invalid_argument("word_label: p outside [0,1]");
  return std::min<std::size_t>(static_cast<std::size_t>(std::floor(5.0 * p_hat + 1e-9)), 4);
}

std::vector<LabeledExample> make_labels(const std::vector<SubTaskStats>& stats,
                                        const std::vector<GradedQuestion>& graded, ConfidenceKind setup) {
  if (setup == ConfidenceKind::AnswerLogit) throw std::invalid_argument("make_labels: answer logit has no labels");
  std::map<SubTaskSpec, const SubTaskStats*> lookup;
  for (const auto& s : stats) lookup[s.subtask] = &s;

  std::vector<LabeledExample> out;
  out.reserve(graded.size());
  for (const auto& g : graded) {
    auto it = lookup.find(g.question.subtask);
    if (it == lookup.end())
      throw std::invalid_argument("make_labels: no stats for sub-task " + g.question.subtask.key());
    LabeledExample ex{g.question, g.answer_text, g.correct, NumberLabel{}};
    switch (setup) {
      case ConfidenceKind::VerbalNumber: ex.label = NumberLabel{number_label(*it->second)}; break;
      case ConfidenceKind::VerbalWord: ex.label = WordLabel{word_label(*it->second)}; break;
      case ConfidenceKind::IndirectLogit: ex.label = BoolLabel{g.correct}; break;
      case ConfidenceKind::AnswerLogit: break;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

double decode_label(const Label& label) {
  return std::visit(
      [](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, NumberLabel>) return l.percent / 100.0;
        else if constexpr (std::is_same_v<T, WordLabel>) return WordScale::midpoint(l.index);
        else return l.value ? 1.0 : 0.0;
      },
      label);
}

std::string label_surface(const Label& label, const WordScale& scale) {
  return std::visit(
      [&](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, NumberLabel>) return std::to_string(l.percent) + "%";
        else if constexpr (std::is_same_v<T, WordLabel>) return scale.word(l.index);
        else return l.value ? "True" : "False";
      },
      label);
}

ConfidenceKind label_setup(const Label& label) {
  if (std::holds_alternative<NumberLabel>(label)) return ConfidenceKind::VerbalNumber;
  if (std::holds_alternative<WordLabel>(label)) return ConfidenceKind::VerbalWord;
  return ConfidenceKind::IndirectLogit;
}

void to_json(nlohmann::json& j, const SubTaskStats& s) {
  j = nlohmann::json{{"subtask", s.subtask}, {"n", s.n}, {"n_correct", s.n_correct}, {"p_hat", s.p_hat()}};
}

void from_json(const nlohmann::json& j, SubTaskStats& s) {
  s.subtask = j.at("subtask").get<SubTaskSpec>();
  s.n = j.at("n").get<std::size_t>();
  s.n_correct = j.at("n_correct").get<std::size_t>();
  if (s.n == 0 || s.n_correct > s.n) throw std::invalid_argument("SubTaskStats: bad counts");
}

void to_json(nlohmann::json& j, const Label& l) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NumberLabel>) j = {{"type", "number"}, {"value", v.percent}};
        else if constexpr (std::is_same_v<T, WordLabel>) j = {{"type", "word"}, {"value", v.index}};
        else j = {{"type", "bool"}, {"value", v.value}};
      },
      l);
}

void from_json(const nlohmann::json& j, Label& l) {
  const auto type = j.at("type").get<std::string>();
  if (type == "number") {
    const int v = j.at("value").get<int>();
    if (v < 0 || v > 100) throw std::invalid_argument("NumberLabel out of range");
    l = NumberLabel{v};
  } else if (type == "word") {
    const auto v = j.at("value").get<std::size_t>();
    if (v > 4) throw std::invalid_argument("WordLabel out of range");
    l = WordLabel{v};
  } else if (type == "bool") {
    l = BoolLabel{j.at("value").get<bool>()};
  } else {
    throw std::invalid_argument("unknown label type " + type);
  }
}

void to_json(nlohmann::json& j, const GradedQuestion& g) {
  j = nlohmann::json{{"question", g.question}, {"answer", g.answer_text}, {"correct", g.correct}};
}

void from_json(const nlohmann::json& j, GradedQuestion& g) {
  g.question = j.at("question").get<QuestionInstance>();
  g.answer_text = j.at("answer").get<std::string>();
  g.correct = j.at("correct").get<bool>();
}

void to_json(nlohmann::json& j, const LabeledExample& e) {
  j = nlohmann::json{
      {"question", e.question}, {"answer", e.model_answer_text}, {"correct", e.correct}, {"label", e.label}};
}

void from_json(const nlohmann::json& j, LabeledExample& e) {
  e.question = j.at("question").get<QuestionInstance>();
  e.model_answer_text = j.at("answer").get<std::string>();
  e.correct = j.at("correct").get<bool>();
  e.label = j.at("label").get<Label>();
}

}  // namespace calmath
