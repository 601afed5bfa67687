#include "calmath/export.hpp"

#include <sstream>

#include "calmath/jsonl.hpp"
#include "calmath/rng.hpp"
#include "calmath/templates.hpp"
#include "text_util.hpp"

namespace calmath {

std::vector<FinetuneRecord> build_finetune_records(const std::vector<LabeledExample>& examples, ConfidenceKind setup,
                                                   std::uint64_t shuffle_seed, const WordScale& scale) {
  if (setup == ConfidenceKind::AnswerLogit)
    throw std::invalid_argument("answer-logit has no finetuning dataset");
  std::vector<FinetuneRecord> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    if (label_setup(ex.label) != setup)
      throw std::invalid_argument("example " + ex.question.id + " carries a " +
                                  std::string(kind_name(label_setup(ex.label))) + " label, expected " +
                                  std::string(kind_name(setup)));
    out.push_back({render_confidence_prompt(ex.question, ex.model_answer_text, setup),
                   " " + label_surface(ex.label, scale)});
  }
  Rng rng(shuffle_seed);
  rng.shuffle(out);
  return out;
}

FinetuneExport export_finetune_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples,
                                       ConfidenceKind setup, std::uint64_t shuffle_seed, const WordScale& scale) {
  const auto records = build_finetune_records(examples, setup, shuffle_seed, scale);
  std::vector<nlohmann::json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back({{"prompt", r.prompt}, {"completion", r.completion}});
  write_jsonl(path, rows);

  FinetuneExport out{path, path.string() + ".meta.json", records.size()};
  nlohmann::json meta = {
      {"setup", kind_name(setup)},
      {"template_version", kTemplateVersion},
      {"shuffle_seed", shuffle_seed},
      {"records", records.size()},
      {"word_scale", scale.words()},
      {"checkpoints", checkpoint_schedule(records.size())},
      {"epochs", 1},
      // Hyperparameter of the external finetuning service; not applied here.
      {"learning_rate_multiplier", 0.1},
  };
  write_text(out.metadata, meta.dump(2) + "\n");
  return out;
}

std::vector<std::size_t> checkpoint_schedule(std::size_t total, std::size_t every) {
  if (every == 0) throw std::invalid_argument("checkpoint interval must be positive");
  std::vector<std::size_t> out;
  for (std::size_t n = every; n < total; n += every) out.push_back(n);
  if (total > 0) out.push_back(total);
  return out;
}

void EarlyStopTrace::validate() const {
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].n_examples <= points[i - 1].n_examples)
      throw std::invalid_argument("early-stop trace n_examples must be strictly increasing");
}

std::size_t early_stop_index(const EarlyStopTrace& trace, std::size_t patience) {
  if (trace.points.empty()) throw std::invalid_argument("early-stop trace is empty");
  if (patience == 0) throw std::invalid_argument("patience must be positive");
  trace.validate();
  std::size_t best = 0, stale = 0;
  for (std::size_t i = 1; i < trace.points.size(); ++i) {
    if (trace.points[i].per_sample_mse < trace.points[best].per_sample_mse) {
      best = i;
      stale = 0;
    } else if (++stale == patience) {
      return trace.points[best].n_examples;
    }
  }
  return trace.points.back().n_examples;
}

EarlyStopTrace parse_early_stop_csv(const std::string& text) {
  EarlyStopTrace trace;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty()) continue;
    if (line_no == 1 && !std::isdigit(static_cast<unsigned char>(row.front()))) continue;
    EarlyStopPoint p;
    char c1 = 0, c2 = 0;
    std::istringstream fields{std::string(row)};
    if (!(fields >> p.n_examples >> c1 >> p.proxy_loss >> c2 >> p.per_sample_mse) || c1 != ',' || c2 != ',')
      throw IoError("early-stop trace line " + std::to_string(line_no) + ": expected n,proxy_loss,per_sample_mse");
    trace.points.push_back(p);
  }
  trace.validate();
  return trace;
}

}  // namespace calmath
