#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "calmath/confidence.hpp"
#include "calmath/labeling.hpp"
#include "calmath/rng.hpp"
#include "calmath/templates.hpp"

namespace calmath {
namespace {

TokenLogprob position(const std::vector<std::pair<std::string, double>>& probs) {
  TokenLogprob t;
  for (const auto& [tok, p] : probs) t.top.push_back({tok, std::log(p)});
  std::stable_sort(t.top.begin(), t.top.end(), [](auto& a, auto& b) { return a.logprob > b.logprob; });
  t.token = t.top.front().token;
  t.logprob = t.top.front().logprob;
  return t;
}

CompletionResponse with_tokens(std::vector<TokenLogprob> tokens) {
  CompletionResponse r;
  for (const auto& t : tokens) r.text += t.token;
  r.tokens = std::move(tokens);
  return r;
}

TEST(VerbalNumber, Greedy) {
  const auto est = parse_verbal_number({"Confidence: 59%", {}}, Decoding::Greedy);
  EXPECT_TRUE(est.parse_ok);
  EXPECT_DOUBLE_EQ(est.probability, 0.59);
  EXPECT_DOUBLE_EQ(parse_verbal_number({" 0%", {}}, Decoding::Greedy).probability, 0.0);
  EXPECT_DOUBLE_EQ(parse_verbal_number({" 100%", {}}, Decoding::Greedy).probability, 1.0);
}

TEST(VerbalNumber, GreedyFailureFallsBack) {
  auto est = parse_verbal_number({" unsure", {}}, Decoding::Greedy);
  EXPECT_FALSE(est.parse_ok);
  EXPECT_DOUBLE_EQ(est.probability, kParseFallback);
  est = parse_verbal_number({" 250%", {}}, Decoding::Greedy, 0.3);
  EXPECT_FALSE(est.parse_ok);
  EXPECT_DOUBLE_EQ(est.probability, 0.3);
}

TEST(VerbalNumber, ExpectedValueSingleToken) {
  const auto r = with_tokens({position({{"61", 1.0}})});
  EXPECT_NEAR(parse_verbal_number(r, Decoding::ExpectedValue).probability, 0.61, 1e-12);
}

TEST(VerbalNumber, ExpectedValueDropsAndRenormalizes) {
  const auto r = with_tokens({position({{"50", 0.4}, {"70", 0.4}, {"the", 0.2}})});
  EXPECT_NEAR(parse_verbal_number(r, Decoding::ExpectedValue).probability, 0.60, 1e-12);
}

TEST(VerbalNumber, ExpectedValueNeedsLogprobs) {
  EXPECT_THROW(parse_verbal_number({" 59%", {}}, Decoding::ExpectedValue), UnavailableConfidence);
}

TEST(VerbalWord, GreedyOrderedScale) {
  const auto scale = WordScale::ordered();
  EXPECT_DOUBLE_EQ(parse_verbal_word({" Medium", {}}, scale, Decoding::Greedy).probability, 0.5);
  EXPECT_DOUBLE_EQ(parse_verbal_word({" highest.", {}}, scale, Decoding::Greedy).probability, 0.9);
  const auto bad = parse_verbal_word({" banana", {}}, scale, Decoding::Greedy);
  EXPECT_FALSE(bad.parse_ok);
}

TEST(VerbalWord, ExpectedValueWorkedExample) {
  const auto r = with_tokens({position({{" High", 0.5}, {" Medium", 0.5}})});
  EXPECT_NEAR(parse_verbal_word(r, WordScale::ordered(), Decoding::ExpectedValue).probability, 0.60, 1e-12);
}

TEST(WordScale, Validation) {
  EXPECT_THROW(WordScale({"a", "b", "c", "d", "A"}), std::invalid_argument);
  EXPECT_THROW(WordScale({"a", "b", "c", "d", ""}), std::invalid_argument);
  EXPECT_EQ(WordScale::names().index_of(" Matt"), 2u);
  EXPECT_FALSE(WordScale::names().index_of("bob"));
}

TEST(AnswerLogit, Examples) {
  EXPECT_DOUBLE_EQ(answer_logit_probability(with_tokens({{" 7", 0.0, {}}})).probability, 1.0);
  const auto two = with_tokens({{" 7", std::log(0.5), {}}, {"25", std::log(0.5), {}}});
  EXPECT_NEAR(answer_logit_probability(two).probability, 0.25, 1e-12);
  const auto stop = with_tokens({{" 7", std::log(0.5), {}}, {"\n", std::log(0.1), {}}, {"Q", -3.0, {}}});
  EXPECT_NEAR(answer_logit_probability(stop).probability, 0.5, 1e-12);
  EXPECT_THROW(answer_logit_probability({" 7", {}}), UnavailableConfidence);
}

TEST(IndirectLogit, Examples) {
  auto r = with_tokens({position({{" True", 0.9}, {" False", 0.1}})});
  EXPECT_NEAR(indirect_logit_from_response(r).probability, 0.9, 1e-12);
  r = with_tokens({position({{" the", 0.5}, {" True", 0.06}, {" False", 0.02}})});
  EXPECT_NEAR(indirect_logit_from_response(r).probability, 0.75, 1e-12);
  r = with_tokens({position({{" Yes", 0.5}, {" No", 0.5}})});
  EXPECT_THROW(indirect_logit_from_response(r), UnavailableConfidence);
}

TEST(IndirectLogit, RequestShape) {
  auto q = generate_question(make_subtask(OperationKind::Multiplication, 0), 1);
  q.prompt_text = "What is 5 * 145?";
  const auto req = indirect_logit_request(q, "725");
  EXPECT_EQ(req.prompt, "Q: What is 5 * 145?\nA: 725\nTrue/false:");
  EXPECT_EQ(req.want_top_logprobs, 5);
  EXPECT_EQ(req.max_tokens, 1);
}

// Property: EV lies within the surviving candidates' range; a lone survivor
// equals its greedy value; the indirect logit ignores a common scale.
TEST(Property, ExpectedValueBoundsAndScaleInvariance) {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 5));
    std::vector<std::pair<std::string, double>> probs;
    std::set<int> used;
    double lo = 1, hi = 0;
    double mass = 0.02;
    probs.push_back({"maybe", 0.02});
    for (int i = 0; i < n; ++i) {
      int v;
      do v = static_cast<int>(rng.uniform_int(0, 100));
      while (!used.insert(v).second);
      const double p = 0.01 + rng.uniform01();
      probs.push_back({std::to_string(v), p});
      mass += p;
      lo = std::min(lo, v / 100.0);
      hi = std::max(hi, v / 100.0);
    }
    for (auto& [_, p] : probs) p /= mass;
    const auto est = parse_verbal_number(with_tokens({position(probs)}), Decoding::ExpectedValue);
    EXPECT_GE(est.probability, lo - 1e-12);
    EXPECT_LE(est.probability, hi + 1e-12);
    if (n == 1) EXPECT_NEAR(est.probability, lo, 1e-12);

    const double pt = 0.01 + 0.4 * rng.uniform01(), pf = 0.01 + 0.4 * rng.uniform01();
    const double s = 0.1 + 0.9 * rng.uniform01();
    const auto a = indirect_logit_from_response(with_tokens({position({{" True", pt}, {" False", pf}})}));
    const auto b = indirect_logit_from_response(with_tokens({position({{" True", s * pt}, {" False", s * pf}})}));
    EXPECT_NEAR(a.probability, b.probability, 1e-12);
  }
}

// Property: word label -> greedy parse returns the midpoint of p's interval.
TEST(Property, WordRoundTrip) {
  const auto scale = WordScale::names();
  for (int k = 0; k <= 100; ++k) {
    const double p = k / 100.0;
    const auto idx = word_label(p);
    const auto est = parse_verbal_word({" " + scale.word(idx), {}}, scale, Decoding::Greedy);
    const double expected = std::min(std::floor(p / 0.2 + 1e-9), 4.0) * 0.2 + 0.1;
    EXPECT_NEAR(est.probability, expected, 1e-12) << p;
  }
}

TEST(Templates, ConfidencePrompts) {
  auto q = generate_question(make_subtask(OperationKind::Multiplication, 0), 1);
  q.prompt_text = "What is 5 * 145?";
  EXPECT_EQ(render_confidence_prompt(q, "725", ConfidenceKind::VerbalNumber), "Q: What is 5 * 145?\nA: 725\nConfidence:");
  EXPECT_EQ(render_confidence_prompt(q, "725", ConfidenceKind::VerbalWord), "Q: What is 5 * 145?\nA: 725\nConfidence:");
  EXPECT_TRUE(render_confidence_prompt(q, "725", ConfidenceKind::IndirectLogit).ends_with("\nTrue/false:"));
  EXPECT_THROW(render_confidence_prompt(q, "725", ConfidenceKind::AnswerLogit), std::invalid_argument);
  EXPECT_EQ(normalize_answer_text("  725 \nQ: next"), "725");
}

TEST(Kinds, Names) {
  for (auto k : {ConfidenceKind::VerbalNumber, ConfidenceKind::VerbalWord, ConfidenceKind::AnswerLogit,
                 ConfidenceKind::IndirectLogit})
    EXPECT_EQ(parse_kind(kind_name(k)), k);
  EXPECT_EQ(parse_decoding("ev"), Decoding::ExpectedValue);
  EXPECT_FALSE(parse_kind("vibes"));
}

}  // namespace
}  // namespace calmath
