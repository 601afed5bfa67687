#include "calmath/taskgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "calmath/jsonl.hpp"
#include "calmath/rng.hpp"
#include "text_util.hpp"

namespace calmath {
namespace {

using Pairs = std::vector<std::vector<int>>;

struct LevelDef {
  std::vector<int> digits;
  NumberFormat format = NumberFormat::Plain;
  int variant = 0;  // ArithmeticSequence: difference class
};

struct OperationInfo {
  OperationKind op;
  std::string_view name;
  Group group;
};

constexpr std::array<OperationInfo, kOperationCount> kOperations{{
    {OperationKind::Addition, "Addition", Group::AddSub},
    {OperationKind::Subtraction, "Subtraction", Group::AddSub},
    {OperationKind::Multiplication, "Multiplication", Group::MultDiv},
    {OperationKind::Division, "Division", Group::MultDiv},
    {OperationKind::FloorDivision, "FloorDivision", Group::MultDiv},
    {OperationKind::Modulo, "Modulo", Group::MultDiv},
    {OperationKind::Remainder, "Remainder", Group::MultDiv},
    {OperationKind::Percentages, "Percentages", Group::MultDiv},
    {OperationKind::FractionReduction, "FractionReduction", Group::MultDiv},
    {OperationKind::Rounding, "Rounding", Group::AddSub},
    {OperationKind::ArithmeticSequence, "ArithmeticSequence", Group::AddSub},
    {OperationKind::ThreeStepAddition, "ThreeStepAddition", Group::AddSub},
    {OperationKind::ThreeStepMultiplication, "ThreeStepMultiplication", Group::MultDiv},
    {OperationKind::AdditionAlt, "AdditionAlt", Group::AddSub},
    {OperationKind::SubtractionAlt, "SubtractionAlt", Group::AddSub},
    {OperationKind::LessThan, "LessThan", Group::Multi},
    {OperationKind::GreaterThan, "GreaterThan", Group::Multi},
    {OperationKind::Prime, "Prime", Group::Multi},
    {OperationKind::Square, "Square", Group::Multi},
    {OperationKind::TwoSum, "TwoSum", Group::Multi},
    {OperationKind::Multiple, "Multiple", Group::Multi},
}};

const OperationInfo& info(OperationKind op) {
  return kOperations[static_cast<std::size_t>(op)];
}

std::vector<LevelDef> with_formats(const Pairs& pairs) {
  std::vector<LevelDef> out;
  for (const auto& p : pairs) {
    out.push_back({p, NumberFormat::Plain});
    out.push_back({p, NumberFormat::CommaGrouped});
  }
  return out;
}

std::vector<LevelDef> plain(const Pairs& pairs) {
  std::vector<LevelDef> out;
  for (const auto& p : pairs) out.push_back({p, NumberFormat::Plain});
  return out;
}

// Level composition tables. Counts must match the benchmark's level column.
const Pairs kAddSubPairs = {{1, 1}, {1, 2}, {2, 2}, {2, 3}, {3, 3}, {3, 4},
                            {4, 4}, {4, 5}, {5, 5}, {1, 4}, {2, 5}, {1, 5}};
const Pairs kMultiplyPairs = {{1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3},
                              {1, 4}, {3, 3}, {2, 4}, {3, 4}};
// (dividend digits, divisor digits)
const Pairs kDividePairs = {{2, 1}, {3, 1}, {4, 1}, {3, 2}, {4, 2}, {5, 2}};
// (percent digits, base digits)
const Pairs kPercentPairs = {{1, 2}, {1, 3}, {1, 4}, {2, 2}, {2, 3}, {2, 4}};
// (numerator digits, denominator digits)
const Pairs kFractionPairs = {{1, 1}, {1, 2}, {2, 2}, {2, 3}, {3, 3}, {3, 4}, {4, 4}};
// (number digits, place digits): place 10 has 2 digits, 100 has 3.
const Pairs kRoundingPairs = {{4, 2}, {5, 2}, {5, 3}};
// (factor digits, range digits)
const Pairs kMultiplePairs = {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {2, 5}};
const Pairs kBoundDigits = {{2}, {3}};

std::vector<LevelDef> build_levels(OperationKind op) {
  switch (op) {
    case OperationKind::Addition:
    case OperationKind::Subtraction:
    case OperationKind::AdditionAlt:
    case OperationKind::SubtractionAlt:
      return with_formats(kAddSubPairs);
    case OperationKind::Multiplication:
      return plain(kMultiplyPairs);
    case OperationKind::Division:
    case OperationKind::FloorDivision:
    case OperationKind::Modulo:
    case OperationKind::Remainder:
      return with_formats(kDividePairs);
    case OperationKind::Percentages:
      return plain(kPercentPairs);
    case OperationKind::FractionReduction:
      return plain(kFractionPairs);
    case OperationKind::Rounding:
      return with_formats(kRoundingPairs);
    case OperationKind::ArithmeticSequence: {
      std::vector<LevelDef> out;
      for (int start_digits : {1, 2})
        for (int diff_class : {0, 1, 2}) out.push_back({{start_digits}, NumberFormat::Plain, diff_class});
      return out;
    }
    case OperationKind::ThreeStepAddition:
    case OperationKind::ThreeStepMultiplication:
      return plain({{1, 1, 1}});
    case OperationKind::LessThan:
    case OperationKind::GreaterThan:
    case OperationKind::Prime:
    case OperationKind::Square:
    case OperationKind::TwoSum:
      return plain(kBoundDigits);
    case OperationKind::Multiple:
      return plain(kMultiplePairs);
  }
  throw std::logic_error("unknown operation");
}

const std::vector<LevelDef>& levels_of(OperationKind op) {
  static const auto table = [] {
    std::array<std::vector<LevelDef>, kOperationCount> t;
    for (const auto& oi : kOperations) t[static_cast<std::size_t>(oi.op)] = build_levels(oi.op);
    return t;
  }();
  return table[static_cast<std::size_t>(op)];
}

using text::lower;
using text::trim;

std::int64_t pow10(int d) {
  std::int64_t p = 1;
  for (int i = 0; i < d; ++i) p *= 10;
  return p;
}

std::int64_t digits_lo(int d) { return d == 1 ? 1 : pow10(d - 1); }
std::int64_t digits_hi(int d) { return pow10(d) - 1; }

std::int64_t draw(Rng& rng, int d) { return rng.uniform_int(digits_lo(d), digits_hi(d)); }

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

constexpr int kMaxAttempts = 100000;

struct Draft {
  std::string text;
  AnswerSpec answer;
};

// Draws (divisor, quotient, remainder) with a dividend of exactly
// `dividend_digits` digits. `exact` forces a zero remainder.
struct DivisionDraw {
  std::int64_t dividend, divisor, quotient, remainder;
};

DivisionDraw draw_division(Rng& rng, int dividend_digits, int divisor_digits, bool exact) {
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::int64_t v = draw(rng, divisor_digits);
    const std::int64_t r = exact ? 0 : rng.uniform_int(0, v - 1);
    const std::int64_t q_lo = std::max<std::int64_t>(1, ceil_div(digits_lo(dividend_digits) - r, v));
    const std::int64_t q_hi = (digits_hi(dividend_digits) - r) / v;
    if (q_lo > q_hi) continue;
    const std::int64_t q = rng.uniform_int(q_lo, q_hi);
    return {v * q + r, v, q, r};
  }
  throw std::logic_error("division level has no satisfiable operands");
}

Draft draft_question(const SubTaskSpec& s, const LevelDef& def, Rng& rng) {
  const auto F = [&](std::int64_t x) { return format_number(x, s.format); };
  const auto& d = def.digits;
  switch (s.operation) {
    case OperationKind::Addition: {
      auto a = draw(rng, d[0]), b = draw(rng, d[1]);
      return {"What is " + F(a) + " + " + F(b) + "?", ExactInteger{a + b}};
    }
    case OperationKind::Subtraction: {
      auto a = draw(rng, d[0]), b = draw(rng, d[1]);
      return {"What is " + F(a) + " - " + F(b) + "?", ExactInteger{a - b}};
    }
    case OperationKind::Multiplication: {
      auto a = draw(rng, d[0]), b = draw(rng, d[1]);
      return {"What is " + F(a) + " * " + F(b) + "?", ExactInteger{a * b}};
    }
    case OperationKind::Division: {
      auto dd = draw_division(rng, d[0], d[1], true);
      return {"What is " + F(dd.dividend) + " / " + F(dd.divisor) + "?", ExactInteger{dd.quotient}};
    }
    case OperationKind::FloorDivision: {
      auto dd = draw_division(rng, d[0], d[1], false);
      return {"What is " + F(dd.dividend) + " / " + F(dd.divisor) + "?", ExactInteger{dd.quotient}};
    }
    case OperationKind::Modulo: {
      auto dd = draw_division(rng, d[0], d[1], false);
      return {"What is " + F(dd.dividend) + " mod " + F(dd.divisor) + "?", ExactInteger{dd.remainder}};
    }
    case OperationKind::Remainder: {
      auto dd = draw_division(rng, d[0], d[1], false);
      return {"What is the remainder when " + F(dd.dividend) + " is divided by " + F(dd.divisor) + "?",
              ExactInteger{dd.remainder}};
    }
    case OperationKind::Percentages: {
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::int64_t p = draw(rng, d[0]);
        const std::int64_t step = 100 / std::gcd(p, std::int64_t{100});
        const std::int64_t k_lo = ceil_div(digits_lo(d[1]), step);
        const std::int64_t k_hi = digits_hi(d[1]) / step;
        if (k_lo > k_hi) continue;
        const std::int64_t base = step * rng.uniform_int(k_lo, k_hi);
        return {"What is " + F(p) + "% of " + F(base) + "?", ExactInteger{p * base / 100}};
      }
      throw std::logic_error("percentage level has no satisfiable operands");
    }
    case OperationKind::FractionReduction: {
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::int64_t n = draw(rng, d[0]);
        const std::int64_t m = draw(rng, d[1]);
        if (n >= m) continue;
        const std::int64_t g = std::gcd(n, m);
        if (g == 1) continue;
        return {"What is " + F(n) + "/" + F(m) + " in reduced form?", ExactFraction{n / g, m / g}};
      }
      throw std::logic_error("fraction level has no satisfiable operands");
    }
    case OperationKind::Rounding: {
      const std::int64_t x = draw(rng, d[0]);
      const std::int64_t place = pow10(d[1] - 1);
      const std::int64_t rounded = (x + place / 2) / place * place;
      return {"What is " + F(x) + " rounded to the nearest " + F(place) + "?", ExactInteger{rounded}};
    }
    case OperationKind::ArithmeticSequence: {
      const std::int64_t start = draw(rng, d[0]);
      const std::int64_t diff = def.variant == 0 ? rng.uniform_int(1, 10) : (def.variant == 1 ? 10 : 100);
      std::string text = "What comes next: ";
      for (int i = 0; i < 4; ++i) {
        if (i) text += ", ";
        text += F(start + i * diff);
      }
      text += "...?";
      return {text, ExactInteger{start + 4 * diff}};
    }
    case OperationKind::ThreeStepAddition: {
      auto a = draw(rng, d[0]), b = draw(rng, d[1]), c = draw(rng, d[2]);
      return {"What is " + F(a) + " + " + F(b) + " + " + F(c) + "?", ExactInteger{a + b + c}};
    }
    case OperationKind::ThreeStepMultiplication: {
      auto a = draw(rng, d[0]), b = draw(rng, d[1]), c = draw(rng, d[2]);
      return {"What is " + F(a) + " * " + F(b) + " * " + F(c) + "?", ExactInteger{a * b * c}};
    }
    case OperationKind::AdditionAlt: {
      auto a = draw(rng, d[0]), b = draw(rng, d[1]);
      return {"What is " + F(a) + " more than " + F(b) + "?", ExactInteger{b + a}};
    }
    case OperationKind::SubtractionAlt: {
      auto a = draw(rng, d[0]), b = draw(rng, d[1]);
      return {"What is " + F(a) + " less than " + F(b) + "?", ExactInteger{b - a}};
    }
    case OperationKind::LessThan: {
      auto b = draw(rng, d[0]);
      return {"Name any number smaller than " + F(b) + "?", LessThanBound{b}};
    }
    case OperationKind::GreaterThan: {
      auto b = draw(rng, d[0]);
      return {"Name any number larger than " + F(b) + "?", GreaterThanBound{b}};
    }
    case OperationKind::Prime: {
      auto b = draw(rng, d[0]);
      return {"Name any prime number smaller than " + F(b) + "?", PrimeBelow{b}};
    }
    case OperationKind::Square: {
      auto b = draw(rng, d[0]);
      return {"Name any perfect square smaller than " + F(b) + "?", SquareBelow{b}};
    }
    case OperationKind::TwoSum: {
      auto t = draw(rng, d[0]);
      return {"Name two numbers that sum to " + F(t) + "?", TwoSumTotal{t}};
    }
    case OperationKind::Multiple: {
      const std::int64_t f = draw(rng, d[0]);
      const std::int64_t width = 2 * f - 1;  // always spans at least two multiples
      const std::int64_t lo = rng.uniform_int(digits_lo(d[1]), digits_hi(d[1]) - width);
      const std::int64_t hi = lo + width;
      return {"Name a single multiple of " + F(f) + " between " + F(lo) + " and " + F(hi) + "?",
              MultipleInRange{f, lo, hi}};
    }
  }
  throw std::logic_error("unknown operation");
}

std::string hex16(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

const std::array<OperationKind, kOperationCount>& all_operations() {
  static const auto ops = [] {
    std::array<OperationKind, kOperationCount> a{};
    for (std::size_t i = 0; i < kOperationCount; ++i) a[i] = kOperations[i].op;
    return a;
  }();
  return ops;
}

const std::array<Group, 3>& all_groups() {
  static const std::array<Group, 3> g{Group::AddSub, Group::MultDiv, Group::Multi};
  return g;
}

std::string_view operation_name(OperationKind op) { return info(op).name; }

std::optional<OperationKind> parse_operation(std::string_view name) {
  const auto key = lower(name);
  for (const auto& oi : kOperations)
    if (lower(oi.name) == key) return oi.op;
  return std::nullopt;
}

Group group_of(OperationKind op) { return info(op).group; }

std::string_view group_name(Group g) {
  switch (g) {
    case Group::AddSub: return "AddSub";
    case Group::MultDiv: return "MultDiv";
    case Group::Multi: return "Multi";
  }
  return "?";
}

std::string_view group_display_name(Group g) {
  switch (g) {
    case Group::AddSub: return "Add-subtract";
    case Group::MultDiv: return "Multiply-divide";
    case Group::Multi: return "Multi-answer";
  }
  return "?";
}

std::optional<Group> parse_group(std::string_view name) {
  const auto key = lower(name);
  for (Group g : all_groups())
    if (key == lower(group_name(g)) || key == lower(group_display_name(g))) return g;
  return std::nullopt;
}

std::string_view format_name(NumberFormat f) { return f == NumberFormat::Plain ? "plain" : "comma"; }

std::optional<NumberFormat> parse_format(std::string_view name) {
  const auto key = lower(name);
  if (key == "plain") return NumberFormat::Plain;
  if (key == "comma" || key == "commagrouped") return NumberFormat::CommaGrouped;
  return std::nullopt;
}

std::size_t level_count(OperationKind op) { return levels_of(op).size(); }

std::string SubTaskSpec::key() const {
  return std::string(operation_name(operation)) + "#" + std::to_string(level_index);
}

SubTaskSpec make_subtask(OperationKind op, std::size_t level) {
  const auto& levels = levels_of(op);
  if (level >= levels.size())
    throw std::out_of_range(std::string(operation_name(op)) + " has no level " + std::to_string(level));
  const auto& def = levels[level];
  return SubTaskSpec{op, level, def.digits, def.format, group_of(op)};
}

std::optional<SubTaskSpec> subtask_from_key(std::string_view key) {
  const auto hash = key.find('#');
  if (hash == std::string_view::npos) return std::nullopt;
  auto op = parse_operation(key.substr(0, hash));
  if (!op) return std::nullopt;
  const auto level_text = key.substr(hash + 1);
  if (level_text.empty() || level_text.size() > 4) return std::nullopt;
  std::size_t level = 0;
  for (char c : level_text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    level = level * 10 + static_cast<std::size_t>(c - '0');
  }
  if (level >= level_count(*op)) return std::nullopt;
  return make_subtask(*op, level);
}

std::vector<SubTaskSpec> enumerate_subtasks(std::optional<Group> group_filter) {
  std::vector<SubTaskSpec> out;
  for (const auto& oi : kOperations) {
    if (group_filter && oi.group != *group_filter) continue;
    for (std::size_t level = 0; level < level_count(oi.op); ++level) out.push_back(make_subtask(oi.op, level));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string format_number(std::int64_t value, NumberFormat format) {
  const std::uint64_t magnitude =
      value < 0 ? 0ULL - static_cast<std::uint64_t>(value) : static_cast<std::uint64_t>(value);
  std::string digits = std::to_string(magnitude);
  if (format == NumberFormat::CommaGrouped && digits.size() > 3) {
    std::string grouped;
    const std::size_t lead = digits.size() % 3 == 0 ? 3 : digits.size() % 3;
    grouped.append(digits, 0, lead);
    for (std::size_t i = lead; i < digits.size(); i += 3) {
      grouped.push_back(',');
      grouped.append(digits, i, 3);
    }
    digits = std::move(grouped);
  }
  return value < 0 ? "-" + digits : digits;
}

std::optional<std::int64_t> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  const bool negative = text.front() == '-';
  if (negative) text.remove_prefix(1);
  if (text.empty()) return std::nullopt;

  std::string digits;
  if (text.find(',') != std::string_view::npos) {
    std::size_t pos = 0;
    bool first = true;
    while (true) {
      const auto comma = text.find(',', pos);
      const auto group = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      if (first ? (group.empty() || group.size() > 3) : group.size() != 3) return std::nullopt;
      digits.append(group);
      first = false;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  } else {
    digits.assign(text);
  }
  if (digits.empty() || digits.size() > 16) return std::nullopt;
  std::int64_t value = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    value = value * 10 + (c - '0');
  }
  if (value > kAnswerCap) return std::nullopt;
  return negative ? -value : value;
}

bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::int64_t f = 3; f <= n / f; f += 2)
    if (n % f == 0) return false;
  return true;
}

bool is_perfect_square(std::int64_t n) {
  if (n < 0) return false;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r * r == n;
}

std::int64_t digit_count(std::int64_t n) {
  if (n < 0) n = -n;
  std::int64_t d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

bool is_predicate(const AnswerSpec& spec) {
  return !std::holds_alternative<ExactInteger>(spec) && !std::holds_alternative<ExactFraction>(spec);
}

IntRange predicate_range(const AnswerSpec& spec) {
  return std::visit(
      [](const auto& a) -> IntRange {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, LessThanBound>) return {0, a.bound - 1};
        else if constexpr (std::is_same_v<T, GreaterThanBound>) return {a.bound + 1, kAnswerCap};
        else if constexpr (std::is_same_v<T, PrimeBelow>) return {2, a.bound - 1};
        else if constexpr (std::is_same_v<T, SquareBelow>) return {0, a.bound - 1};
        else if constexpr (std::is_same_v<T, TwoSumTotal>) return {0, a.total};
        else if constexpr (std::is_same_v<T, MultipleInRange>) return {a.lo, a.hi};
        else throw std::invalid_argument("predicate_range: answer is not a predicate");
      },
      spec);
}

std::string render_parsed(const ParsedAnswer& answer, NumberFormat format) {
  return std::visit(
      [&](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, std::int64_t>) return format_number(a, format);
        else if constexpr (std::is_same_v<T, Fraction>)
          return format_number(a.numerator, format) + "/" + format_number(a.denominator, format);
        else return format_number(a.first, format) + " and " + format_number(a.second, format);
      },
      answer);
}

std::optional<ParsedAnswer> parse_answer(std::string_view raw, const AnswerSpec& spec) {
  std::string_view line = raw;
  line = trim(line);
  if (auto nl = line.find('\n'); nl != std::string_view::npos) line = trim(line.substr(0, nl));
  if (!line.empty() && line.back() == '.') line = trim(line.substr(0, line.size() - 1));
  if (line.empty()) return std::nullopt;

  if (std::holds_alternative<ExactFraction>(spec)) {
    const auto slash = line.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto n = parse_number(trim(line.substr(0, slash)));
    auto d = parse_number(trim(line.substr(slash + 1)));
    if (!n || !d || *d <= 0) return std::nullopt;
    return Fraction{*n, *d};
  }
  if (std::holds_alternative<TwoSumTotal>(spec)) {
    const auto lowered = lower(line);
    const auto pos = lowered.find(" and ");
    if (pos == std::string::npos) return std::nullopt;
    auto a = parse_number(trim(line.substr(0, pos)));
    auto b = parse_number(trim(line.substr(pos + 5)));
    if (!a || !b) return std::nullopt;
    return IntegerPair{*a, *b};
  }
  if (auto v = parse_number(line)) return *v;
  return std::nullopt;
}

bool satisfies(const AnswerSpec& spec, const ParsedAnswer& answer) {
  const auto* value = std::get_if<std::int64_t>(&answer);
  return std::visit(
      [&](const auto& a) -> bool {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, ExactInteger>) {
          return value && *value == a.value;
        } else if constexpr (std::is_same_v<T, ExactFraction>) {
          const auto* f = std::get_if<Fraction>(&answer);
          return f && f->numerator == a.numerator && f->denominator == a.denominator;
        } else if constexpr (std::is_same_v<T, TwoSumTotal>) {
          const auto* p = std::get_if<IntegerPair>(&answer);
          return p && p->first >= 0 && p->second >= 0 && p->first + p->second == a.total;
        } else {
          if (!value) return false;
          const auto r = predicate_range(spec);
          if (*value < r.lo || *value > r.hi) return false;
          if constexpr (std::is_same_v<T, PrimeBelow>) return is_prime(*value);
          else if constexpr (std::is_same_v<T, SquareBelow>) return is_perfect_square(*value);
          else if constexpr (std::is_same_v<T, MultipleInRange>) return *value % a.factor == 0;
          else return true;
        }
      },
      spec);
}

QuestionInstance generate_question(const SubTaskSpec& subtask, std::uint64_t rng_seed) {
  const auto& levels = levels_of(subtask.operation);
  if (subtask.level_index >= levels.size()) throw std::out_of_range("generate_question: bad level");
  const auto canonical = make_subtask(subtask.operation, subtask.level_index);
  Rng rng(rng_seed);
  auto d = draft_question(canonical, levels[subtask.level_index], rng);
  QuestionInstance q;
  q.id = std::string(operation_name(canonical.operation)) + ".L" +
         (canonical.level_index < 10 ? "0" : "") + std::to_string(canonical.level_index) + "." + hex16(rng_seed);
  q.subtask = canonical;
  q.prompt_text = std::move(d.text);
  q.answer = d.answer;
  q.rng_seed = rng_seed;
  if (!grade(q, reference_answer(q)).correct)
    throw std::logic_error("template mismatch: reference answer fails for " + q.id);
  return q;
}

std::vector<QuestionInstance> generate_questions(const SubTaskSpec& subtask, std::size_t count,
                                                 std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("generate_questions: count must be >= 1");
  const std::uint64_t base = derive_seed(seed, subtask.key());
  std::vector<QuestionInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_question(subtask, derive_seed(base, i)));
  return out;
}

GradeResult grade(const QuestionInstance& question, std::string_view raw_answer) {
  GradeResult r;
  r.parsed = parse_answer(raw_answer, question.answer);
  r.correct = r.parsed && satisfies(question.answer, *r.parsed);
  return r;
}

std::string reference_answer(const QuestionInstance& question) {
  const auto fmt = question.subtask.format;
  return std::visit(
      [&](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, ExactInteger>) {
          return format_number(a.value, fmt);
        } else if constexpr (std::is_same_v<T, ExactFraction>) {
          return render_parsed(Fraction{a.numerator, a.denominator}, fmt);
        } else if constexpr (std::is_same_v<T, LessThanBound>) {
          return format_number(a.bound - 1, fmt);
        } else if constexpr (std::is_same_v<T, GreaterThanBound>) {
          return format_number(a.bound + 1, fmt);
        } else if constexpr (std::is_same_v<T, PrimeBelow>) {
          std::int64_t p = a.bound - 1;
          while (!is_prime(p)) --p;
          return format_number(p, fmt);
        } else if constexpr (std::is_same_v<T, SquareBelow>) {
          std::int64_t s = a.bound - 1;
          while (!is_perfect_square(s)) --s;
          return format_number(s, fmt);
        } else if constexpr (std::is_same_v<T, TwoSumTotal>) {
          return render_parsed(IntegerPair{a.total / 2, a.total - a.total / 2}, fmt);
        } else {
          return format_number(ceil_div(a.lo, a.factor) * a.factor, fmt);
        }
      },
      question.answer);
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const SubTaskSpec& s) {
  j = nlohmann::json{{"operation", operation_name(s.operation)},
                     {"level", s.level_index},
                     {"group", group_name(s.group)},
                     {"operand_digits", s.operand_digits},
                     {"format", format_name(s.format)}};
}

void from_json(const nlohmann::json& j, SubTaskSpec& s) {
  auto op = parse_operation(j.at("operation").get<std::string>());
  if (!op) throw std::invalid_argument("unknown operation " + j.at("operation").dump());
  s = make_subtask(*op, j.at("level").get<std::size_t>());
}

void to_json(nlohmann::json& j, const AnswerSpec& a) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ExactInteger>) j = {{"type", "integer"}, {"value", v.value}};
        else if constexpr (std::is_same_v<T, ExactFraction>)
          j = {{"type", "fraction"}, {"numerator", v.numerator}, {"denominator", v.denominator}};
        else if constexpr (std::is_same_v<T, LessThanBound>) j = {{"type", "less_than"}, {"bound", v.bound}};
        else if constexpr (std::is_same_v<T, GreaterThanBound>) j = {{"type", "greater_than"}, {"bound", v.bound}};
        else if constexpr (std::is_same_v<T, PrimeBelow>) j = {{"type", "prime_below"}, {"bound", v.bound}};
        else if constexpr (std::is_same_v<T, SquareBelow>) j = {{"type", "square_below"}, {"bound", v.bound}};
        else if constexpr (std::is_same_v<T, TwoSumTotal>) j = {{"type", "two_sum"}, {"total", v.total}};
        else j = {{"type", "multiple_in_range"}, {"factor", v.factor}, {"lo", v.lo}, {"hi", v.hi}};
      },
      a);
}

void from_json(const nlohmann::json& j, AnswerSpec& a) {
  const auto type = j.at("type").get<std::string>();
  if (type == "integer") a = ExactInteger{j.at("value").get<std::int64_t>()};
  else if (type == "fraction")
    a = ExactFraction{j.at("numerator").get<std::int64_t>(), j.at("denominator").get<std::int64_t>()};
  else if (type == "less_than") a = LessThanBound{j.at("bound").get<std::int64_t>()};
  else if (type == "greater_than") a = GreaterThanBound{j.at("bound").get<std::int64_t>()};
  else if (type == "prime_below") a = PrimeBelow{j.at("bound").get<std::int64_t>()};
  else if (type == "square_below") a = SquareBelow{j.at("bound").get<std::int64_t>()};
  else if (type == "two_sum") a = TwoSumTotal{j.at("total").get<std::int64_t>()};
  else if (type == "multiple_in_range")
    a = MultipleInRange{j.at("factor").get<std::int64_t>(), j.at("lo").get<std::int64_t>(),
                        j.at("hi").get<std::int64_t>()};
  else throw std::invalid_argument("unknown answer type " + type);
}

void to_json(nlohmann::json& j, const QuestionInstance& q) {
  j = nlohmann::json{{"id", q.id},
                     {"subtask", q.subtask},
                     {"prompt", q.prompt_text},
                     {"answer", q.answer},
                     {"seed", q.rng_seed}};
}

void from_json(const nlohmann::json& j, QuestionInstance& q) {
  q.id = j.at("id").get<std::string>();
  q.subtask = j.at("subtask").get<SubTaskSpec>();
  q.prompt_text = j.at("prompt").get<std::string>();
  q.answer = j.at("answer").get<AnswerSpec>();
  q.rng_seed = j.at("seed").get<std::uint64_t>();
}

void write_questions(const std::filesystem::path& path, const std::vector<QuestionInstance>& qs) {
  std::vector<nlohmann::json> rows;
  rows.reserve(qs.size());
  for (const auto& q : qs) rows.emplace_back(q);
  write_jsonl(path, rows);
}

std::vector<QuestionInstance> read_questions(const std::filesystem::path& path) {
  std::vector<QuestionInstance> out;
  for (const auto& row : read_jsonl(path)) out.push_back(row.get<QuestionInstance>());
  return out;
}

}  // namespace calmath
