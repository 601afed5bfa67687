#include "calmath/prompting.hpp"

#include <stdexcept>

#include "calmath/rng.hpp"
#include "text_util.hpp"

namespace calmath {

std::string render_qa_prompt(const QuestionInstance& question) {
  std::string out(kQuestionPrefix);
  out += question.prompt_text;
  out += '\n';
  out += kAnswerPrefix;
  return out;
}

std::string render_confidence_prompt(const QuestionInstance& question, std::string_view answer_text,
                                     ConfidenceKind setup) {
  std::string_view cue;
  switch (setup) {
    case ConfidenceKind::VerbalNumber:
    case ConfidenceKind::VerbalWord: cue = kConfidenceCue; break;
    case ConfidenceKind::IndirectLogit: cue = kJudgmentCue; break;
    case ConfidenceKind::AnswerLogit:
      throw std::invalid_argument("answer-logit confidence is read from the answer prompt");
  }
  std::string out = render_qa_prompt(question);
  out += ' ';
  out += answer_text;
  out += '\n';
  out += cue;
  return out;
}

std::string normalize_answer_text(std::string_view raw) {
  return std::string(text::trim(raw.substr(0, raw.find('\n'))));
}

std::string render_exemplar(const LabeledExample& exemplar, const WordScale& scale) {
  if (std::holds_alternative<BoolLabel>(exemplar.label))
    throw std::invalid_argument("few-shot exemplars need a verbal label");
  std::string out = render_confidence_prompt(exemplar.question, exemplar.model_answer_text,
                                             label_setup(exemplar.label));
  out += ' ';
  out += label_surface(exemplar.label, scale);
  return out;
}

std::string render_fewshot_prompt(const std::vector<LabeledExample>& exemplars, const QuestionInstance& query,
                                  std::string_view query_answer, const WordScale& scale) {
  std::string out;
  for (const auto& ex : exemplars) {
    out += render_exemplar(ex, scale);
    out += kExemplarSeparator;
  }
  out += render_confidence_prompt(query, query_answer, ConfidenceKind::VerbalNumber);
  return out;
}

std::vector<std::size_t> sample_exemplars(const FewShotConfig& config, std::size_t query_index) {
  if (config.k > config.pool.size())
    throw std::invalid_argument("few-shot k=" + std::to_string(config.k) + " exceeds pool of " +
                                std::to_string(config.pool.size()));
  const auto seed = config.per_query_resample ? derive_seed(config.seed, query_index) : config.seed;
  Rng rng(seed);
  return rng.sample_without_replacement(config.pool.size(), config.k);
}

std::string build_fewshot_context(const FewShotConfig& config, const QuestionInstance& query,
                                  std::string_view query_answer, std::size_t query_index, const WordScale& scale) {
  std::vector<LabeledExample> chosen;
  for (auto i : sample_exemplars(config, query_index)) chosen.push_back(config.pool[i]);
  return render_fewshot_prompt(chosen, query, query_answer, scale);
}

}  // namespace calmath
