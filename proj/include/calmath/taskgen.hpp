#pragma once

// CalibratedMath question generation and answer grading.
//
// The benchmark is a grid of sub-tasks: 21 operations, each split into
// difficulty levels by operand digit counts and number format. Every question
// is reproducible from its (sub-task, rng_seed) pair.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace calmath {

enum class OperationKind {
  Addition,
  Subtraction,
  Multiplication,
  Division,
  FloorDivision,
  Modulo,
  Remainder,
  Percentages,
  FractionReduction,
  Rounding,
  ArithmeticSequence,
  ThreeStepAddition,
  ThreeStepMultiplication,
  AdditionAlt,
  SubtractionAlt,
  LessThan,
  GreaterThan,
  Prime,
  Square,
  TwoSum,
  Multiple,
};

inline constexpr std::size_t kOperationCount = 21;

enum class Group { AddSub, MultDiv, Multi };

enum class NumberFormat { Plain, CommaGrouped };

/// All operations in benchmark table order.
const std::array<OperationKind, kOperationCount>& all_operations();
const std::array<Group, 3>& all_groups();

std::string_view operation_name(OperationKind op);
std::optional<OperationKind> parse_operation(std::string_view name);

Group group_of(OperationKind op);
/// Short identifier: "AddSub", "MultDiv", "Multi".
std::string_view group_name(Group g);
/// Human-facing name used in report tables: "Add-subtract", ...
std::string_view group_display_name(Group g);
/// Accepts either the short identifier or the display name, case-insensitive.
std::optional<Group> parse_group(std::string_view name);

std::string_view format_name(NumberFormat f);
std::optional<NumberFormat> parse_format(std::string_view name);

std::size_t level_count(OperationKind op);

struct SubTaskSpec {
  OperationKind operation = OperationKind::Addition;
  std::size_t level_index = 0;
  std::vector<int> operand_digits;
  NumberFormat format = NumberFormat::Plain;
  Group group = Group::AddSub;

  /// Stable textual key, e.g. "Addition#3".
  std::string key() const;

  // Identity is (operation, level); the other fields are derived from it.
  friend bool operator==(const SubTaskSpec& a, const SubTaskSpec& b) {
    return a.operation == b.operation && a.level_index == b.level_index;
  }
  friend auto operator<=>(const SubTaskSpec& a, const SubTaskSpec& b) {
    if (auto c = a.operation <=> b.operation; c != 0) return c;
    return a.level_index <=> b.level_index;
  }
};

/// Throws std::out_of_range if level >= level_count(op).
SubTaskSpec make_subtask(OperationKind op, std::size_t level);
std::optional<SubTaskSpec> subtask_from_key(std::string_view key);

/// All sub-tasks in table order, then level order; optionally one group only.
std::vector<SubTaskSpec> enumerate_subtasks(std::optional<Group> group_filter = std::nullopt);

// ---------------------------------------------------------------------------
// Numbers

/// Answers larger than this in magnitude are rejected by the parser.
inline constexpr std::int64_t kAnswerCap = 1'000'000'000'000'000;

std::string format_number(std::int64_t value, NumberFormat format);

/// Parses "1234", "-1234" or correctly grouped "1,234". Surrounding whitespace
/// is not accepted here; callers trim.
std::optional<std::int64_t> parse_number(std::string_view text);

bool is_prime(std::int64_t n);
bool is_perfect_square(std::int64_t n);
std::int64_t digit_count(std::int64_t n);

// ---------------------------------------------------------------------------
// Answers

struct ExactInteger {
  std::int64_t value = 0;
  friend bool operator==(const ExactInteger&, const ExactInteger&) = default;
};
struct ExactFraction {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  friend bool operator==(const ExactFraction&, const ExactFraction&) = default;
};
struct LessThanBound {
  std::int64_t bound = 0;
  friend bool operator==(const LessThanBound&, const LessThanBound&) = default;
};
struct GreaterThanBound {
  std::int64_t bound = 0;
  friend bool operator==(const GreaterThanBound&, const GreaterThanBound&) = default;
};
struct PrimeBelow {
  std::int64_t bound = 0;
  friend bool operator==(const PrimeBelow&, const PrimeBelow&) = default;
};
struct SquareBelow {
  std::int64_t bound = 0;
  friend bool operator==(const SquareBelow&, const SquareBelow&) = default;
};
struct TwoSumTotal {
  std::int64_t total = 0;
  friend bool operator==(const TwoSumTotal&, const TwoSumTotal&) = default;
};
struct MultipleInRange {
  std::int64_t factor = 1;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  friend bool operator==(const MultipleInRange&, const MultipleInRange&) = default;
};

using AnswerSpec = std::variant<ExactInteger, ExactFraction, LessThanBound, GreaterThanBound,
                                PrimeBelow, SquareBelow, TwoSumTotal, MultipleInRange>;

/// True for the multi-answer (predicate) variants.
bool is_predicate(const AnswerSpec& spec);

/// Closed integer interval that contains every accepted single-integer answer
/// of a predicate. TwoSum's interval bounds each of the two parts.
struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};
IntRange predicate_range(const AnswerSpec& spec);

struct Fraction {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  friend bool operator==(const Fraction&, const Fraction&) = default;
};
struct IntegerPair {
  std::int64_t first = 0;
  std::int64_t second = 0;
  friend bool operator==(const IntegerPair&, const IntegerPair&) = default;
};
using ParsedAnswer = std::variant<std::int64_t, Fraction, IntegerPair>;

std::string render_parsed(const ParsedAnswer& answer, NumberFormat format);

/// Parses raw model text into the shape the answer spec expects. Only the
/// first line is considered; surrounding whitespace and one trailing period
/// are ignored.
std::optional<ParsedAnswer> parse_answer(std::string_view raw, const AnswerSpec& spec);

/// Whether a parsed answer satisfies the spec.
bool satisfies(const AnswerSpec& spec, const ParsedAnswer& answer);

// ---------------------------------------------------------------------------
// Questions

struct QuestionInstance {
  std::string id;
  SubTaskSpec subtask;
  std::string prompt_text;  // e.g. "What is 14 + 27?"
  AnswerSpec answer;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const QuestionInstance& a, const QuestionInstance& b) {
    return a.id == b.id && a.subtask == b.subtask && a.prompt_text == b.prompt_text &&
           a.answer == b.answer && a.rng_seed == b.rng_seed;
  }
};

/// Regenerates one question from its sub-task and seed.
QuestionInstance generate_question(const SubTaskSpec& subtask, std::uint64_t rng_seed);

/// `count` questions; throws std::invalid_argument when count == 0.
std::vector<QuestionInstance> generate_questions(const SubTaskSpec& subtask, std::size_t count,
                                                 std::uint64_t seed);

struct GradeResult {
  bool correct = false;
  std::optional<ParsedAnswer> parsed;
};

GradeResult grade(const QuestionInstance& question, std::string_view raw_answer);

/// Canonical correct answer text in the question's number format. For
/// predicates this is a fixed witness (e.g. the largest prime below the bound).
std::string reference_answer(const QuestionInstance& question);

// ---------------------------------------------------------------------------
// Serialization: one JSON object per line.

void to_json(nlohmann::json& j, const SubTaskSpec& s);
void from_json(const nlohmann::json& j, SubTaskSpec& s);
void to_json(nlohmann::json& j, const AnswerSpec& a);
void from_json(const nlohmann::json& j, AnswerSpec& a);
void to_json(nlohmann::json& j, const QuestionInstance& q);
void from_json(const nlohmann::json& j, QuestionInstance& q);

void write_questions(const std::filesystem::path& path, const std::vector<QuestionInstance>& qs);
std::vector<QuestionInstance> read_questions(const std::filesystem::path& path);

}  // namespace calmath
