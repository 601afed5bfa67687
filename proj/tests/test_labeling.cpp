#include <gtest/gtest.h>

#include <cmath>

#include "calmath/labeling.hpp"

namespace calmath {
namespace {

SubTaskStats stats(std::size_t n, std::size_t k) { return {make_subtask(OperationKind::Addition, 0), n, k}; }

GradedQuestion graded(const SubTaskSpec& s, std::uint64_t seed, bool correct) {
  auto q = generate_question(s, seed);
  return {q, correct ? reference_answer(q) : "nope", correct};
}

TEST(Labels, NumberExamples) {
  EXPECT_EQ(number_label(stats(100, 59)), 59);
  EXPECT_EQ(number_label(stats(100, 19)), 19);
  EXPECT_EQ(number_label(stats(3, 1)), 33);
  EXPECT_EQ(number_label(stats(100, 0)), 0);
  EXPECT_EQ(number_label(stats(100, 100)), 100);
  EXPECT_EQ(number_label(0.29), 29);  // 100 * 0.29 is just below 29 in binary
  EXPECT_THROW(number_label(1.5), std::invalid_argument);
  EXPECT_THROW(number_label(stats(0, 0)), std::invalid_argument);
}

TEST(Labels, WordIntervals) {
  EXPECT_EQ(word_label(0.0), 0u);
  EXPECT_EQ(word_label(0.19), 0u);
  EXPECT_EQ(word_label(0.2), 1u);
  EXPECT_EQ(word_label(0.59), 2u);
  EXPECT_EQ(word_label(0.6), 3u);
  EXPECT_EQ(word_label(0.99), 4u);
  EXPECT_EQ(word_label(1.0), 4u);
  EXPECT_EQ(word_label(stats(5, 1)), 1u);
}

// Exhaustive over p = k/100, comparing the double path against exact
// integer arithmetic.
TEST(Labels, ExhaustiveGrid) {
  for (std::size_t k = 0; k <= 100; ++k) {
    const double p = static_cast<double>(k) / 100.0;
    EXPECT_EQ(number_label(p), static_cast<int>(k));
    EXPECT_EQ(number_label(stats(100, k)), static_cast<int>(k));
    const std::size_t expected_word = std::min<std::size_t>(k / 20, 4);
    EXPECT_EQ(word_label(p), expected_word) << p;
    EXPECT_EQ(word_label(stats(100, k)), expected_word);
    EXPECT_LE(std::abs(decode_label(NumberLabel{number_label(p)}) - p), 0.01 + 1e-12);
    EXPECT_LE(std::abs(decode_label(WordLabel{word_label(p)}) - p), 0.10 + 1e-12);
  }
}

TEST(Labels, SurfaceForms) {
  const auto names = WordScale::names();
  EXPECT_EQ(label_surface(NumberLabel{59}, names), "59%");
  EXPECT_EQ(label_surface(WordLabel{0}, names), "john");
  EXPECT_EQ(label_surface(BoolLabel{true}, names), "True");
  EXPECT_EQ(label_surface(BoolLabel{false}, names), "False");
  EXPECT_EQ(label_setup(WordLabel{1}), ConfidenceKind::VerbalWord);
}

TEST(Accuracy, PerSubtaskEstimates) {
  const auto a = make_subtask(OperationKind::Addition, 3), b = make_subtask(OperationKind::Subtraction, 1);
  std::vector<GradedQuestion> gs;
  for (int i = 0; i < 10; ++i) gs.push_back(graded(a, i, i < 7));
  for (int i = 0; i < 4; ++i) gs.push_back(graded(b, 100 + i, i == 0));
  const auto st = estimate_subtask_accuracy(gs);
  ASSERT_EQ(st.size(), 2u);
  EXPECT_EQ(st[0].subtask, a);
  EXPECT_EQ(st[0].n_correct, 7u);
  EXPECT_DOUBLE_EQ(st[1].p_hat(), 0.25);
  EXPECT_THROW(estimate_subtask_accuracy({}), std::invalid_argument);
}

TEST(MakeLabels, SubtaskLevelTargets) {
  const auto a = make_subtask(OperationKind::Addition, 3);
  std::vector<GradedQuestion> gs;
  for (int i = 0; i < 100; ++i) gs.push_back(graded(a, i, i < 59));
  const auto st = estimate_subtask_accuracy(gs);

  const auto numbers = make_labels(st, gs, ConfidenceKind::VerbalNumber);
  ASSERT_EQ(numbers.size(), 100u);
  for (const auto& ex : numbers) EXPECT_EQ(std::get<NumberLabel>(ex.label).percent, 59);

  const auto words = make_labels(st, gs, ConfidenceKind::VerbalWord);
  for (const auto& ex : words) EXPECT_EQ(std::get<WordLabel>(ex.label).index, 2u);

  const auto bools = make_labels(st, gs, ConfidenceKind::IndirectLogit);
  for (std::size_t i = 0; i < bools.size(); ++i) EXPECT_EQ(std::get<BoolLabel>(bools[i].label).value, i < 59);

  EXPECT_THROW(make_labels(st, gs, ConfidenceKind::AnswerLogit), std::invalid_argument);
  std::vector<GradedQuestion> other{graded(make_subtask(OperationKind::Rounding, 0), 1, true)};
  EXPECT_THROW(make_labels(st, other, ConfidenceKind::VerbalNumber), std::invalid_argument);
}

TEST(Serialization, LabeledExampleRoundTrip) {
  const auto g = graded(make_subtask(OperationKind::Percentages, 2), 5, true);
  for (Label l : {Label{NumberLabel{42}}, Label{WordLabel{3}}, Label{BoolLabel{true}}}) {
    LabeledExample ex{g.question, g.answer_text, true, l};
    const nlohmann::json j = ex;
    const auto back = j.get<LabeledExample>();
    EXPECT_EQ(back.label, l);
    EXPECT_EQ(back.question, g.question);
    EXPECT_EQ(back.model_answer_text, g.answer_text);
  }
  const nlohmann::json gj = g;
  EXPECT_EQ(gj.get<GradedQuestion>().answer_text, g.answer_text);
}

}  // namespace
}  // namespace calmath
