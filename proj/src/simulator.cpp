#include "calmath/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calmath/labeling.hpp"
#include "calmath/rng.hpp"
#include "calmath/templates.hpp"
#include "text_util.hpp"

namespace calmath {

std::string_view policy_name(ConfidencePolicy::Kind kind) {
  switch (kind) {
    case ConfidencePolicy::Kind::Oracle: return "oracle";
    case ConfidencePolicy::Kind::NoisyOracle: return "noisy-oracle";
    case ConfidencePolicy::Kind::Constant: return "constant";
    case ConfidencePolicy::Kind::Uncalibrated: return "uncalibrated";
  }
  return "?";
}

std::optional<ConfidencePolicy::Kind> parse_policy(std::string_view name) {
  using K = ConfidencePolicy::Kind;
  for (auto k : {K::Oracle, K::NoisyOracle, K::Constant, K::Uncalibrated})
    if (text::lower(name) == policy_name(k)) return k;
  return std::nullopt;
}

void SimulatedModelConfig::validate() const {
  auto check = [](double a, const std::string& what) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("accuracy for " + what + " outside [0, 1]");
  };
  for (const auto& [subtask, a] : per_subtask_accuracy) check(a, subtask.key());
  check(default_accuracy, "default");
  if (confidence_policy.kind == ConfidencePolicy::Kind::Constant) check(confidence_policy.constant, "constant policy");
  if (confidence_policy.sigma < 0.0) throw std::invalid_argument("noise sigma must be non-negative");
  if (embedding_dim < 2) throw std::invalid_argument("embedding_dim must be at least 2");
}

double SimulatedModelConfig::accuracy(const SubTaskSpec& subtask) const {
  auto it = per_subtask_accuracy.find(subtask);
  return it == per_subtask_accuracy.end() ? default_accuracy : it->second;
}

void to_json(nlohmann::json& j, const SimulatedModelConfig& c) {
  nlohmann::json acc = nlohmann::json::object();
  for (const auto& [subtask, a] : c.per_subtask_accuracy) acc[subtask.key()] = a;
  j = {{"accuracy", acc},
       {"default_accuracy", c.default_accuracy},
       {"policy",
        {{"kind", policy_name(c.confidence_policy.kind)},
         {"sigma", c.confidence_policy.sigma},
         {"constant", c.confidence_policy.constant}}},
       {"seed", c.seed},
       {"verbal_style", c.verbal_style == VerbalStyle::Number ? "number" : "word"},
       {"scale", c.scale.words()},
       {"embedding_dim", c.embedding_dim},
       {"embedding_separation", c.embedding_separation}};
}

void from_json(const nlohmann::json& j, SimulatedModelConfig& c) {
  c = SimulatedModelConfig{};
  if (j.contains("accuracy")) {
    for (const auto& [key, a] : j.at("accuracy").items()) {
      auto subtask = subtask_from_key(key);
      if (!subtask) throw std::invalid_argument("unknown sub-task " + key);
      c.per_subtask_accuracy[*subtask] = a.get<double>();
    }
  }
  c.default_accuracy = j.value("default_accuracy", c.default_accuracy);
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    auto kind = parse_policy(p.value("kind", std::string("oracle")));
    if (!kind) throw std::invalid_argument("unknown confidence policy " + p.value("kind", std::string()));
    c.confidence_policy.kind = *kind;
    c.confidence_policy.sigma = p.value("sigma", c.confidence_policy.sigma);
    c.confidence_policy.constant = p.value("constant", c.confidence_policy.constant);
  }
  c.seed = j.value("seed", c.seed);
  const auto style = j.value("verbal_style", std::string("number"));
  if (style == "number") c.verbal_style = VerbalStyle::Number;
  else if (style == "word") c.verbal_style = VerbalStyle::Word;
  else throw std::invalid_argument("verbal_style must be number or word");
  if (j.contains("scale")) c.scale = WordScale(j.at("scale").get<std::array<std::string, 5>>());
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.embedding_separation = j.value("embedding_separation", c.embedding_separation);
  c.validate();
}

std::map<SubTaskSpec, double> default_accuracy_profile(double addsub_median, double multdiv_median,
                                                       double multi_median) {
  std::map<SubTaskSpec, double> out;
  for (auto g : all_groups()) {
    const double m = g == Group::AddSub ? addsub_median : g == Group::MultDiv ? multdiv_median : multi_median;
    if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("median accuracy outside [0, 1]");
    auto subtasks = enumerate_subtasks(g);
    auto difficulty = [](const SubTaskSpec& s) { return std::accumulate(s.operand_digits.begin(), s.operand_digits.end(), 0); };
    std::stable_sort(subtasks.begin(), subtasks.end(),
                     [&](const SubTaskSpec& a, const SubTaskSpec& b) { return difficulty(a) < difficulty(b); });
    const std::size_t n = subtasks.size();
    for (std::size_t r = 0; r < n; ++r) {
      double a = m;
      if (n > 1) {
        const double x = static_cast<double>(r) / static_cast<double>(n - 1);
        a = x <= 0.5 ? 1.0 - (1.0 - m) * x / 0.5 : m * (1.0 - (x - 0.5) / 0.5);
        // An even count has no middle rank; pin the central pair to the median.
        if (n % 2 == 0 && (r == n / 2 - 1 || r == n / 2)) a = m;
      }
      out[subtasks[r]] = std::clamp(a, 0.0, 1.0);
    }
  }
  return out;
}

namespace {

std::uint64_t question_seed(const SimulatedModelConfig& config, std::string_view purpose,
                            const QuestionInstance& question) {
  return derive_seed(derive_seed(config.seed, purpose), question.subtask.key() + "|" + question.prompt_text);
}

std::optional<ParsedAnswer> perturb(const ParsedAnswer& answer, std::int64_t delta) {
  if (auto v = std::get_if<std::int64_t>(&answer)) return *v + delta;
  if (auto f = std::get_if<Fraction>(&answer)) {
    auto n = f->numerator + delta;
    if (n <= 0) n = f->numerator - delta;
    if (n <= 0) return std::nullopt;
    return Fraction{n, f->denominator};
  }
  const auto& p = std::get<IntegerPair>(answer);
  return IntegerPair{p.first, p.second + delta};
}

// A uniformly chosen satisfying answer for predicate questions.
std::optional<ParsedAnswer> random_witness(const QuestionInstance& q, Rng& rng) {
  return std::visit(
      [&](const auto& spec) -> std::optional<ParsedAnswer> {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, LessThanBound>) {
          if (spec.bound <= 0) return std::nullopt;
          return ParsedAnswer{rng.uniform_int(0, spec.bound - 1)};
        } else if constexpr (std::is_same_v<T, GreaterThanBound>) {
          return ParsedAnswer{rng.uniform_int(spec.bound + 1, spec.bound + std::max<std::int64_t>(spec.bound, 10))};
        } else if constexpr (std::is_same_v<T, PrimeBelow>) {
          for (int i = 0; i < 200 && spec.bound > 2; ++i) {
            auto v = rng.uniform_int(2, spec.bound - 1);
            if (is_prime(v)) return ParsedAnswer{v};
          }
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, SquareBelow>) {
          if (spec.bound <= 0) return std::nullopt;
          auto root = static_cast<std::int64_t>(std::sqrt(static_cast<double>(spec.bound - 1)));
          while (root * root > spec.bound - 1) --root;
          auto r = rng.uniform_int(0, root);
          return ParsedAnswer{r * r};
        } else if constexpr (std::is_same_v<T, TwoSumTotal>) {
          auto a = rng.uniform_int(0, spec.total);
          return ParsedAnswer{IntegerPair{a, spec.total - a}};
        } else if constexpr (std::is_same_v<T, MultipleInRange>) {
          const auto first = (spec.lo + spec.factor - 1) / spec.factor;
          const auto last = spec.hi / spec.factor;
          if (first > last) return std::nullopt;
          return ParsedAnswer{rng.uniform_int(first, last) * spec.factor};
        } else {
          return std::nullopt;
        }
      },
      q.answer);
}

std::string number_token(int percent) { return " " + std::to_string(percent); }

double safe_log(double p) { return std::log(std::max(p, 1e-9)); }

std::vector<TokenAlternative> sorted_alternatives(std::vector<TokenAlternative> alts) {
  std::stable_sort(alts.begin(), alts.end(),
                   [](const TokenAlternative& a, const TokenAlternative& b) { return a.logprob > b.logprob; });
  return alts;
}

// Where the request is asking the model to continue.
enum class Mode { Answer, Confidence, Judgment };

struct ParsedPrompt {
  Mode mode;
  std::string question;
  std::string answer;  // empty in Answer mode
};

std::optional<ParsedPrompt> parse_prompt(std::string_view prompt) {
  auto start = prompt.rfind(std::string("\n") + std::string(kQuestionPrefix));
  start = start == std::string_view::npos ? 0 : start + 1;
  auto block = prompt.substr(start);
  if (!block.starts_with(kQuestionPrefix)) return std::nullopt;
  block.remove_prefix(kQuestionPrefix.size());
  const auto nl = block.find('\n');
  if (nl == std::string_view::npos) return std::nullopt;
  ParsedPrompt out{Mode::Answer, std::string(block.substr(0, nl)), {}};
  auto rest = block.substr(nl + 1);
  if (rest == kAnswerPrefix) return out;
  if (!rest.starts_with(kAnswerPrefix)) return std::nullopt;
  rest.remove_prefix(kAnswerPrefix.size());
  const auto nl2 = rest.find('\n');
  if (nl2 == std::string_view::npos) return std::nullopt;
  out.answer = std::string(text::trim(rest.substr(0, nl2)));
  const auto cue = rest.substr(nl2 + 1);
  if (cue == kConfidenceCue) out.mode = Mode::Confidence;
  else if (cue == kJudgmentCue) out.mode = Mode::Judgment;
  else return std::nullopt;
  return out;
}

}  // namespace

double policy_confidence(const SimulatedModelConfig& config, const QuestionInstance& question) {
  const double alpha = config.accuracy(question.subtask);
  const auto& policy = config.confidence_policy;
  switch (policy.kind) {
    case ConfidencePolicy::Kind::Oracle: return alpha;
    case ConfidencePolicy::Kind::NoisyOracle: {
      Rng rng(question_seed(config, "noise", question));
      return std::clamp(alpha + rng.normal(0.0, policy.sigma), 0.0, 1.0);
    }
    case ConfidencePolicy::Kind::Constant: return policy.constant;
    case ConfidencePolicy::Kind::Uncalibrated: return 1.0 - alpha;
  }
  return alpha;
}

SimulatedAnswer simulate_answer_text(const QuestionInstance& question, const SimulatedModelConfig& config) {
  Rng rng(question_seed(config, "answer", question));
  const bool correct = rng.uniform01() < config.accuracy(question.subtask);
  const auto format = question.subtask.format;
  if (correct) {
    if (is_predicate(question.answer))
      if (auto w = random_witness(question, rng); w && satisfies(question.answer, *w))
        return {true, render_parsed(*w, format)};
    return {true, reference_answer(question)};
  }
  const auto reference = parse_answer(reference_answer(question), question.answer);
  if (reference) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const auto magnitude = rng.uniform_int(1, 9);
      const auto delta = rng.uniform01() < 0.5 ? -magnitude : magnitude;
      auto wrong = perturb(*reference, delta);
      if (!wrong) continue;
      auto text = render_parsed(*wrong, format);
      if (!grade(question, text).correct) return {false, text};
    }
  }
  return {false, "I don't know"};
}

CompletionResponse simulate_answer(const QuestionInstance& question, const SimulatedModelConfig& config) {
  auto answer = simulate_answer_text(question, config);
  CompletionResponse r;
  r.text = " " + answer.text;
  const double lp = safe_log(policy_confidence(config, question));
  r.tokens.push_back({r.text, lp, {{r.text, lp}}});
  return r;
}

SimulatorBackend::SimulatorBackend(SimulatedModelConfig config, const std::vector<QuestionInstance>& questions)
    : config_(std::move(config)) {
  config_.validate();
  for (const auto& q : questions) by_prompt_.try_emplace(q.prompt_text, q);
  id_ = "simulator/" + sha256_hex(nlohmann::json(config_).dump()).substr(0, 16);
}

const QuestionInstance* SimulatorBackend::find(const std::string& prompt_text) const {
  auto it = by_prompt_.find(prompt_text);
  return it == by_prompt_.end() ? nullptr : &it->second;
}

CompletionResponse SimulatorBackend::complete(const CompletionRequest& request) {
  request.validate();
  auto parsed = parse_prompt(request.prompt);
  if (!parsed) throw RequestRejected("simulator: unrecognized prompt layout");
  const auto* q = find(parsed->question);
  if (!q) throw RequestRejected("simulator: unknown question: " + parsed->question);

  CompletionResponse r;
  const double c = policy_confidence(config_, *q);
  switch (parsed->mode) {
    case Mode::Answer: r = simulate_answer(*q, config_); break;
    case Mode::Confidence: {
      if (config_.verbal_style == VerbalStyle::Number) {
        const int v = number_label(c);
        std::vector<TokenAlternative> alts{{number_token(v), std::log(1.0)}};
        if (v >= 5 && v <= 95)
          alts = {{number_token(v), std::log(0.6)},
                  {number_token(v - 5), std::log(0.2)},
                  {number_token(v + 5), std::log(0.2)}};
        r.tokens.push_back({number_token(v), alts.front().logprob, sorted_alternatives(alts)});
        r.tokens.push_back({"%", 0.0, {{"%", 0.0}}});
      } else {
        const auto i = word_label(c);
        const auto word = " " + config_.scale.word(i);
        std::vector<TokenAlternative> alts{{word, std::log(1.0)}};
        if (i >= 1 && i + 1 < WordScale::kMidpoints.size())
          alts = {{word, std::log(0.6)},
                  {" " + config_.scale.word(i - 1), std::log(0.2)},
                  {" " + config_.scale.word(i + 1), std::log(0.2)}};
        r.tokens.push_back({word, alts.front().logprob, sorted_alternatives(alts)});
      }
      break;
    }
    case Mode::Judgment: {
      auto alts = sorted_alternatives(
          {{" True", safe_log(0.9 * c)}, {" False", safe_log(0.9 * (1.0 - c))}, {" Yes", std::log(0.1)}});
      const auto& top = alts.front();
      r.tokens.push_back({top.token, top.logprob, alts});
      break;
    }
  }

  if (r.tokens.size() > static_cast<std::size_t>(request.max_tokens)) r.tokens.resize(request.max_tokens);
  if (parsed->mode != Mode::Answer) {
    r.text.clear();
    for (const auto& t : r.tokens) r.text += t.token;
  }
  if (request.want_top_logprobs == 0) {
    r.tokens.clear();
  } else {
    for (auto& t : r.tokens)
      if (t.top.size() > static_cast<std::size_t>(request.want_top_logprobs)) t.top.resize(request.want_top_logprobs);
  }
  return r;
}

std::vector<double> SimulatorBackend::embed(const std::string& text) {
  Rng rng(derive_seed(derive_seed(config_.seed, "embed"), text));
  std::vector<double> v(config_.embedding_dim);
  for (auto& x : v) x = rng.normal(0.0, 1.0);

  // "Q: <question>\nA: <answer>"
  std::string_view s = text;
  if (!s.starts_with(kQuestionPrefix)) return v;
  s.remove_prefix(kQuestionPrefix.size());
  const auto nl = s.find('\n');
  if (nl == std::string_view::npos) return v;
  const auto* q = find(std::string(s.substr(0, nl)));
  auto rest = s.substr(nl + 1);
  if (!q || !rest.starts_with(kAnswerPrefix)) return v;
  rest.remove_prefix(kAnswerPrefix.size());
  const bool correct = grade(*q, text::trim(rest)).correct;
  v[0] += (correct ? 0.5 : -0.5) * config_.embedding_separation;
  const auto& digits = q->subtask.operand_digits;
  v[1] += 0.25 * std::accumulate(digits.begin(), digits.end(), 0);
  return v;
}

}  // namespace calmath
