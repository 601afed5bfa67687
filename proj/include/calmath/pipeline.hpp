#pragma once

// Experiment orchestration over a run directory. Each stage reads the files
// earlier stages wrote and writes its own; manifest.json records the config,
// its hash, the template version and per-stage counts.
//
//   gen             questions.jsonl
//   collect         answers.jsonl            zero-shot answers (base model)
//   grade           graded.jsonl
//   label           stats.jsonl, labels/<setup>.jsonl   (train group)
//   export-finetune finetune/<setup>.jsonl (+ .meta.json)
//   eval            scores/<setup>.jsonl     (eval groups)
//   baseline        scores/constant.jsonl, scores/heuristic-lr.jsonl
//   probe           scores/probe.jsonl, probe/projection.csv, probe/*.svg
//   fewshot         scores/fewshot-k<k>.jsonl
//   report          report.txt, bins.csv, curves/*.svg

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "calmath/confidence.hpp"
#include "calmath/labeling.hpp"
#include "calmath/metrics.hpp"
#include "calmath/modelclient.hpp"
#include "calmath/taskgen.hpp"

namespace calmath {

struct ExperimentConfig {
  std::filesystem::path run_dir = "run";
  Group train_group = Group::AddSub;
  std::vector<Group> eval_groups{Group::MultDiv, Group::Multi};
  std::vector<ConfidenceKind> setups{ConfidenceKind::VerbalNumber, ConfidenceKind::AnswerLogit,
                                     ConfidenceKind::IndirectLogit};
  std::size_t samples_per_subtask = 100;
  std::size_t bins_k = kDefaultBins;
  std::uint64_t seed = 0;
  Decoding decoding = Decoding::Greedy;
  std::array<std::string, 5> word_scale = WordScale::names().words();
  std::size_t parallelism = 4;
  /// {"type": "simulator", ...} or {"type": "http", ...}; see README.
  nlohmann::json backend = {{"type", "simulator"}};
  /// Per-setup JSON merge patches onto `backend`, e.g. a finetuned model.
  nlohmann::json setup_backends = nlohmann::json::object();
  std::vector<std::size_t> fewshot_k{5};
  Decoding fewshot_decoding = Decoding::ExpectedValue;
  bool baselines = true;
  bool probe = true;
  std::size_t projection_epochs = 5;
  /// Optional JSONL {"key", "embedding"} file used instead of backend embed().
  std::string embeddings_file;
  bool dump_prompts = false;
  bool use_cache = true;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  /// Everything except run_dir, in a fixed key order.
  nlohmann::json to_json() const;
  /// Hex SHA-256 of to_json().dump().
  std::string hash() const;
};

/// Missing keys keep their defaults. Throws std::invalid_argument on unknown
/// names or bad values.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// One scored evaluation question.
struct ScoreRow {
  std::string id;
  SubTaskSpec subtask;
  double probability = 0.0;
  bool correct = false;
  bool parse_ok = true;
};
void to_json(nlohmann::json& j, const ScoreRow& r);
void from_json(const nlohmann::json& j, ScoreRow& r);

/// Human-facing setup names for report rows: "verbal-number" -> "Verbalized numbers".
std::string setup_display_name(const std::string& setup);

class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config);
  ~Pipeline();

  void gen();
  void collect();
  void grade();
  void label();
  void export_finetune();
  void eval();
  void baseline();
  void probe();
  void fewshot();
  /// Returns the report table text.
  std::string report();

  /// All stages in order; baseline, probe and fewshot as configured.
  std::string run_all();

  const ExperimentConfig& config() const { return config_; }
  std::filesystem::path path(const std::string& relative) const { return config_.run_dir / relative; }

 private:
  const std::vector<QuestionInstance>& questions();
  std::vector<GradedQuestion> load_graded();
  std::shared_ptr<Backend> backend_for(std::optional<ConfidenceKind> setup);
  ModelClient& client_for(std::optional<ConfidenceKind> setup);
  void record_stage(const std::string& stage, const nlohmann::json& info);
  void write_scores(const std::string& name, const std::vector<ScoreRow>& rows);
  void dump_prompts(const std::string& name, const std::vector<std::string>& ids,
                    const std::vector<CompletionRequest>& requests);
  std::vector<std::string> score_names() const;

  ExperimentConfig config_;
  std::optional<std::vector<QuestionInstance>> questions_;
  std::shared_ptr<ResponseCache> cache_;
  std::map<std::string, std::unique_ptr<ModelClient>> clients_;
};

}  // namespace calmath
