#include "calmath/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "calmath/templates.hpp"
#include "text_util.hpp"

namespace calmath {

std::string_view kind_name(ConfidenceKind k) {
  switch (k) {
    case ConfidenceKind::VerbalNumber: return "verbal-number";
    case ConfidenceKind::VerbalWord: return "verbal-word";
    case ConfidenceKind::AnswerLogit: return "answer-logit";
    case ConfidenceKind::IndirectLogit: return "indirect-logit";
  }
  return "?";
}

std::optional<ConfidenceKind> parse_kind(std::string_view name) {
  for (auto k : {ConfidenceKind::VerbalNumber, ConfidenceKind::VerbalWord, ConfidenceKind::AnswerLogit,
                 ConfidenceKind::IndirectLogit})
    if (text::lower(name) == kind_name(k)) return k;
  return std::nullopt;
}

std::string_view decoding_name(Decoding d) { return d == Decoding::Greedy ? "greedy" : "ev"; }

std::optional<Decoding> parse_decoding(std::string_view name) {
  const auto key = text::lower(name);
  if (key == "greedy") return Decoding::Greedy;
  if (key == "ev" || key == "expected-value") return Decoding::ExpectedValue;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view strip_punct(std::string_view s) {
  s = text::trim(s);
  auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && punct(s.front())) s.remove_prefix(1);
  while (!s.empty() && punct(s.back())) s.remove_suffix(1);
  return s;
}

// A percentage token: "59", " 59", "59%". Values above 100 are rejected.
std::optional<int> percent_value(std::string_view token) {
  token = text::trim(token);
  if (!token.empty() && token.back() == '%') token.remove_suffix(1);
  if (token.empty() || token.size() > 3) return std::nullopt;
  int v = 0;
  for (char c : token) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  if (v > 100) return std::nullopt;
  return v;
}

// First integer run in free text, e.g. "Confidence: 59%" -> 59.
std::optional<int> first_percent_in_text(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && !std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == s.size()) return std::nullopt;
  std::size_t j = i;
  while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  return percent_value(s.substr(i, j - i));
}

ConfidenceEstimate failed(ConfidenceKind kind, Decoding decoding, double fallback) {
  return {kind, fallback, decoding, false};
}

// Drop-and-renormalize expectation over the alternatives at one position.
// `value_of` maps a token to its value, or nullopt to drop it.
template <typename ValueOf>
std::optional<double> expected_value(const TokenLogprob& position, ValueOf value_of) {
  std::vector<TokenAlternative> candidates = position.top;
  if (candidates.empty()) candidates.push_back({position.token, position.logprob});
  double mass = 0.0, weighted = 0.0;
  for (const auto& alt : candidates) {
    auto v = value_of(alt.token);
    if (!v) continue;
    const double p = std::exp(alt.logprob);
    mass += p;
    weighted += p * *v;
  }
  if (!(mass > 0.0)) return std::nullopt;
  return weighted / mass;
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

// The confidence position is the first one where the emitted token or any
// alternative is a valid value.
template <typename Valid>
bool any_candidate(const TokenLogprob& position, Valid valid) {
  if (valid(position.token)) return true;
  return std::any_of(position.top.begin(), position.top.end(), [&](const auto& a) { return valid(a.token); });
}

}  // namespace

WordScale::WordScale(std::array<std::string, 5> words) : words_(std::move(words)) {
  std::set<std::string> seen;
  for (const auto& w : words_) {
    if (strip_punct(w).empty()) throw std::invalid_argument("WordScale: empty word");
    if (!seen.insert(text::lower(strip_punct(w))).second)
      throw std::invalid_argument("WordScale: duplicate word " + w);
  }
}

WordScale WordScale::names() { return WordScale({"john", "sam", "matt", "dan", "tom"}); }

WordScale WordScale::ordered() { return WordScale({"lowest", "low", "medium", "high", "highest"}); }

std::optional<std::size_t> WordScale::index_of(std::string_view token) const {
  const auto key = text::lower(strip_punct(token));
  if (key.empty()) return std::nullopt;
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (text::lower(strip_punct(words_[i])) == key) return i;
  return std::nullopt;
}

ConfidenceEstimate parse_verbal_number(const CompletionResponse& response, Decoding decoding, double fallback) {
  constexpr auto kind = ConfidenceKind::VerbalNumber;
  if (decoding == Decoding::Greedy) {
    auto v = first_percent_in_text(response.text);
    if (!v) return failed(kind, decoding, fallback);
    return {kind, *v / 100.0, decoding, true};
  }
  if (!response.has_logprobs()) throw UnavailableConfidence("expected-value decoding needs token logprobs");
  for (const auto& position : response.tokens) {
    if (!any_candidate(position, [](std::string_view t) { return percent_value(t).has_value(); })) continue;
    auto ev = expected_value(position, [](std::string_view t) -> std::optional<double> {
      if (auto v = percent_value(t)) return *v / 100.0;
      return std::nullopt;
    });
    if (!ev) break;
    return {kind, clamp01(*ev), decoding, true};
  }
  return failed(kind, decoding, fallback);
}

ConfidenceEstimate parse_verbal_word(const CompletionResponse& response, const WordScale& scale,
                                     Decoding decoding, double fallback) {
  constexpr auto kind = ConfidenceKind::VerbalWord;
  if (decoding == Decoding::Greedy) {
    std::string_view rest = response.text;
    while (!rest.empty()) {
      rest = text::trim(rest);
      auto end = rest.find_first_of(" \t\r\n");
      auto word = rest.substr(0, end);
      if (auto idx = scale.index_of(word)) return {kind, WordScale::midpoint(*idx), decoding, true};
      if (end == std::string_view::npos) break;
      rest.remove_prefix(end);
    }
    return failed(kind, decoding, fallback);
  }
  if (!response.has_logprobs()) throw UnavailableConfidence("expected-value decoding needs token logprobs");
  for (const auto& position : response.tokens) {
    if (!any_candidate(position, [&](std::string_view t) { return scale.index_of(t).has_value(); })) continue;
    auto ev = expected_value(position, [&](std::string_view t) -> std::optional<double> {
      if (auto idx = scale.index_of(t)) return WordScale::midpoint(*idx);
      return std::nullopt;
    });
    if (!ev) break;
    return {kind, clamp01(*ev), decoding, true};
  }
  return failed(kind, decoding, fallback);
}

TokenSpan answer_span(const CompletionResponse& response) {
  std::size_t end = 0;
  while (end < response.tokens.size() && response.tokens[end].token.find('\n') == std::string::npos) ++end;
  return {0, end};
}

ConfidenceEstimate answer_logit_probability(const CompletionResponse& response, std::optional<TokenSpan> span) {
  if (!response.has_logprobs()) throw UnavailableConfidence("answer logit needs token logprobs");
  const auto s = span.value_or(answer_span(response));
  if (s.begin >= s.end || s.end > response.tokens.size())
    throw UnavailableConfidence("answer span is empty or out of range");
  double total = 0.0;
  for (std::size_t i = s.begin; i < s.end; ++i) total += response.tokens[i].logprob;
  return {ConfidenceKind::AnswerLogit, clamp01(std::exp(total)), Decoding::Greedy, true};
}

ConfidenceEstimate indirect_logit_from_response(const CompletionResponse& response) {
  if (!response.has_logprobs()) throw UnavailableConfidence("indirect logit needs token logprobs");
  const auto& first = response.tokens.front();
  std::vector<TokenAlternative> candidates = first.top;
  if (candidates.empty()) candidates.push_back({first.token, first.logprob});
  double p_true = 0.0, p_false = 0.0;
  bool saw_true = false, saw_false = false;
  for (const auto& alt : candidates) {
    const auto key = text::lower(strip_punct(alt.token));
    if (key == "true") {
      p_true += std::exp(alt.logprob);
      saw_true = true;
    } else if (key == "false") {
      p_false += std::exp(alt.logprob);
      saw_false = true;
    }
  }
  if (!saw_true && !saw_false) throw UnavailableConfidence("neither True nor False among top alternatives");
  if (!(p_true + p_false > 0.0)) throw UnavailableConfidence("True/False tokens carry zero probability");
  return {ConfidenceKind::IndirectLogit, p_true / (p_true + p_false), Decoding::Greedy, true};
}

CompletionRequest indirect_logit_request(const QuestionInstance& question, std::string_view answer_text) {
  CompletionRequest req;
  req.prompt = render_confidence_prompt(question, answer_text, ConfidenceKind::IndirectLogit);
  req.max_tokens = 1;
  req.temperature = 0.0;
  req.want_top_logprobs = kMaxTopLogprobs;
  return req;
}

ConfidenceEstimate indirect_logit_probability(const QuestionInstance& question, std::string_view answer_text,
                                              ModelClient& client) {
  return indirect_logit_from_response(client.complete(indirect_logit_request(question, answer_text)));
}

}  // namespace calmath
