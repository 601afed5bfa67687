#include <gtest/gtest.h>

#include <map>
#include <regex>
#include <set>

#include "calmath/rng.hpp"
#include "calmath/taskgen.hpp"
#include "calmath/templates.hpp"

namespace calmath {
namespace {

// Level counts per operation as listed in the benchmark table.
const std::map<OperationKind, std::size_t> kTableLevels = {
    {OperationKind::Addition, 24},          {OperationKind::Subtraction, 24},
    {OperationKind::Multiplication, 9},     {OperationKind::Division, 12},
    {OperationKind::FloorDivision, 12},     {OperationKind::Modulo, 12},
    {OperationKind::Remainder, 12},         {OperationKind::Percentages, 6},
    {OperationKind::FractionReduction, 7},  {OperationKind::Rounding, 6},
    {OperationKind::ArithmeticSequence, 6}, {OperationKind::ThreeStepAddition, 1},
    {OperationKind::ThreeStepMultiplication, 1}, {OperationKind::AdditionAlt, 24},
    {OperationKind::SubtractionAlt, 24},    {OperationKind::LessThan, 2},
    {OperationKind::GreaterThan, 2},        {OperationKind::Prime, 2},
    {OperationKind::Square, 2},             {OperationKind::TwoSum, 2},
    {OperationKind::Multiple, 6},
};

TEST(Structure, LevelCountsMatchTable) {
  for (auto op : all_operations()) EXPECT_EQ(level_count(op), kTableLevels.at(op)) << operation_name(op);
  EXPECT_EQ(enumerate_subtasks().size(), 196u);
}

TEST(Structure, GroupsPartitionSubtasks) {
  std::size_t total = 0;
  std::set<std::string> keys;
  for (auto g : all_groups()) {
    for (const auto& s : enumerate_subtasks(g)) {
      EXPECT_EQ(s.group, g);
      EXPECT_TRUE(keys.insert(s.key()).second);
      ++total;
    }
  }
  EXPECT_EQ(total, enumerate_subtasks().size());
  EXPECT_EQ(enumerate_subtasks(Group::AddSub).size(), 109u);
  EXPECT_EQ(enumerate_subtasks(Group::MultDiv).size(), 71u);
  EXPECT_EQ(enumerate_subtasks(Group::Multi).size(), 16u);
}

TEST(Structure, SubtaskKeysRoundTrip) {
  for (const auto& s : enumerate_subtasks()) {
    auto back = subtask_from_key(s.key());
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, s);
    EXPECT_EQ(back->operand_digits, s.operand_digits);
  }
  EXPECT_FALSE(subtask_from_key("Addition#99"));
  EXPECT_THROW(make_subtask(OperationKind::Square, 2), std::out_of_range);
}

TEST(Names, GroupParsing) {
  EXPECT_EQ(parse_group("Add-subtract"), Group::AddSub);
  EXPECT_EQ(parse_group("multi"), Group::Multi);
  EXPECT_EQ(parse_group("MultDiv"), Group::MultDiv);
  EXPECT_FALSE(parse_group("nope"));
  for (auto op : all_operations()) EXPECT_EQ(parse_operation(operation_name(op)), op);
}

TEST(Numbers, Formatting) {
  EXPECT_EQ(format_number(10248, NumberFormat::CommaGrouped), "10,248");
  EXPECT_EQ(format_number(-1234567, NumberFormat::CommaGrouped), "-1,234,567");
  EXPECT_EQ(format_number(999, NumberFormat::CommaGrouped), "999");
  EXPECT_EQ(format_number(10248, NumberFormat::Plain), "10248");
}

TEST(Numbers, Parsing) {
  EXPECT_EQ(parse_number("57,400"), 57400);
  EXPECT_EQ(parse_number("-381"), -381);
  EXPECT_FALSE(parse_number("1,23"));
  EXPECT_FALSE(parse_number("12,345,6"));
  EXPECT_FALSE(parse_number("12a"));
  EXPECT_FALSE(parse_number(""));
  EXPECT_FALSE(parse_number("99999999999999999"));
}

TEST(Numbers, Predicates) {
  EXPECT_TRUE(is_prime(2));
  EXPECT_TRUE(is_prime(97));
  EXPECT_FALSE(is_prime(1));
  EXPECT_FALSE(is_prime(91));
  EXPECT_TRUE(is_perfect_square(0));
  EXPECT_TRUE(is_perfect_square(144));
  EXPECT_FALSE(is_perfect_square(143));
  EXPECT_EQ(digit_count(0), 1);
  EXPECT_EQ(digit_count(-4895), 4);
}

TEST(Generation, DeterministicForSeed) {
  const auto s = make_subtask(OperationKind::Addition, 5);
  EXPECT_EQ(generate_questions(s, 20, 11), generate_questions(s, 20, 11));
  EXPECT_NE(generate_questions(s, 20, 11), generate_questions(s, 20, 12));
  EXPECT_THROW(generate_questions(s, 0, 1), std::invalid_argument);
}

TEST(Generation, PromptShapes) {
  const std::vector<std::pair<OperationKind, std::string>> shapes = {
      {OperationKind::Addition, R"(What is [\d,]+ \+ [\d,]+\?)"},
      {OperationKind::Subtraction, R"(What is [\d,]+ - [\d,]+\?)"},
      {OperationKind::Multiplication, R"(What is \d+ \* \d+\?)"},
      {OperationKind::Division, R"(What is [\d,]+ / [\d,]+\?)"},
      {OperationKind::Modulo, R"(What is [\d,]+ mod [\d,]+\?)"},
      {OperationKind::Remainder, R"(What is the remainder when [\d,]+ is divided by [\d,]+\?)"},
      {OperationKind::Percentages, R"(What is \d+% of \d+\?)"},
      {OperationKind::FractionReduction, R"(What is \d+/\d+ in reduced form\?)"},
      {OperationKind::Rounding, R"(What is [\d,]+ rounded to the nearest (10|100)\?)"},
      {OperationKind::ArithmeticSequence, R"(What comes next: -?\d+, -?\d+, -?\d+, -?\d+\.\.\.\?)"},
      {OperationKind::ThreeStepAddition, R"(What is \d \+ \d \+ \d\?)"},
      {OperationKind::AdditionAlt, R"(What is [\d,]+ more than [\d,]+\?)"},
      {OperationKind::SubtractionAlt, R"(What is [\d,]+ less than [\d,]+\?)"},
      {OperationKind::LessThan, R"(Name any number smaller than \d+\?)"},
      {OperationKind::Prime, R"(Name any prime number smaller than \d+\?)"},
      {OperationKind::TwoSum, R"(Name two numbers that sum to \d+\?)"},
      {OperationKind::Multiple, R"(Name a single multiple of \d+ between \d+ and \d+\?)"},
  };
  for (const auto& [op, pattern] : shapes) {
    const std::regex re(pattern);
    for (std::size_t level = 0; level < level_count(op); ++level)
      for (const auto& q : generate_questions(make_subtask(op, level), 5, 3))
        EXPECT_TRUE(std::regex_match(q.prompt_text, re)) << q.prompt_text;
  }
}

TEST(Generation, QaPromptFrame) {
  auto q = generate_question(make_subtask(OperationKind::Addition, 0), 1);
  q.prompt_text = "What is 14 + 27?";
  EXPECT_EQ(render_qa_prompt(q), "Q: What is 14 + 27?\nA:");
  q.prompt_text = "What is 10,248 rounded to the nearest 10?";
  EXPECT_EQ(render_qa_prompt(q), "Q: What is 10,248 rounded to the nearest 10?\nA:");
}

// Operands of addition levels carry exactly the level's digit counts, and the
// comma format groups them.
TEST(Generation, AdditionOperandDigits) {
  const std::regex re(R"(What is ([\d,]+) \+ ([\d,]+)\?)");
  for (std::size_t level = 0; level < level_count(OperationKind::Addition); ++level) {
    const auto s = make_subtask(OperationKind::Addition, level);
    for (const auto& q : generate_questions(s, 30, 5)) {
      std::smatch m;
      ASSERT_TRUE(std::regex_match(q.prompt_text, m, re));
      for (int i = 0; i < 2; ++i) {
        const std::string text = m[i + 1];
        const auto v = parse_number(text);
        ASSERT_TRUE(v) << text;
        EXPECT_EQ(digit_count(*v), s.operand_digits[i]) << q.prompt_text;
        if (s.format == NumberFormat::Plain || *v < 1000) EXPECT_EQ(text.find(','), std::string::npos);
        else EXPECT_NE(text.find(','), std::string::npos);
      }
    }
  }
}

// Every generated question is answered correctly by its reference answer,
// and a nearby integer is wrong for unique-answer questions.
TEST(Property, ReferenceAnswersGradeCorrect) {
  for (const auto& s : enumerate_subtasks()) {
    for (const auto& q : generate_questions(s, 25, 77)) {
      const auto ref = reference_answer(q);
      ASSERT_TRUE(grade(q, ref).correct) << q.id << " " << ref;
      EXPECT_TRUE(grade(q, " " + ref + ".\nmore text").correct) << q.id;
      if (auto e = std::get_if<ExactInteger>(&q.answer)) {
        EXPECT_FALSE(grade(q, format_number(e->value + 1, NumberFormat::Plain)).correct);
      }
    }
  }
}

TEST(Property, QuestionJsonRoundTrip) {
  Rng rng(2024);
  const auto all = enumerate_subtasks();
  for (int i = 0; i < 300; ++i) {
    const auto& s = all[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(all.size()) - 1))];
    const auto q = generate_question(s, rng.next());
    const nlohmann::json j = q;
    EXPECT_EQ(j.get<QuestionInstance>(), q);
    EXPECT_EQ(j.dump(), nlohmann::json(j.get<QuestionInstance>()).dump());
  }
}

TEST(Grading, Fractions) {
  QuestionInstance q = generate_question(make_subtask(OperationKind::FractionReduction, 0), 1);
  q.answer = ExactFraction{5, 8};
  EXPECT_TRUE(grade(q, "5/8").correct);
  EXPECT_FALSE(grade(q, "10/16").correct);
  EXPECT_FALSE(grade(q, "5/0").correct);
  EXPECT_FALSE(grade(q, "0.625").correct);
}

TEST(Grading, MultiAnswerPredicates) {
  QuestionInstance q = generate_question(make_subtask(OperationKind::Prime, 0), 1);
  q.answer = PrimeBelow{20};
  EXPECT_TRUE(grade(q, "19").correct);
  EXPECT_TRUE(grade(q, "2").correct);
  EXPECT_FALSE(grade(q, "21").correct);
  EXPECT_FALSE(grade(q, "15").correct);
  q.answer = TwoSumTotal{10};
  EXPECT_TRUE(grade(q, "3 and 7").correct);
  EXPECT_TRUE(grade(q, "5 AND 5").correct);
  EXPECT_FALSE(grade(q, "3 and 8").correct);
  EXPECT_FALSE(grade(q, "10").correct);
  q.answer = MultipleInRange{7, 20, 33};
  EXPECT_TRUE(grade(q, "28").correct);
  EXPECT_FALSE(grade(q, "35").correct);
  q.answer = GreaterThanBound{58};
  EXPECT_TRUE(grade(q, "1000").correct);
  EXPECT_FALSE(grade(q, "58").correct);
  q.answer = SquareBelow{50};
  EXPECT_TRUE(grade(q, "49").correct);
  EXPECT_FALSE(grade(q, "48").correct);
  q.answer = LessThanBound{10};
  EXPECT_TRUE(grade(q, "0").correct);
  EXPECT_FALSE(grade(q, "10").correct);
}

TEST(Grading, UnparseableIsWrong) {
  auto q = generate_question(make_subtask(OperationKind::Addition, 0), 1);
  EXPECT_FALSE(grade(q, "I don't know").correct);
  EXPECT_FALSE(grade(q, "").correct);
}

TEST(Serialization, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "calmath_taskgen_io";
  std::filesystem::remove_all(dir);
  const auto qs = generate_questions(make_subtask(OperationKind::Multiple, 2), 10, 4);
  write_questions(dir / "q.jsonl", qs);
  EXPECT_EQ(read_questions(dir / "q.jsonl"), qs);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace calmath
