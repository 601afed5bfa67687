#pragma once

// Finetuning datasets built from labeled training examples, and the
// early-stopping diagnostic over checkpoint evaluations.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "calmath/confidence.hpp"
#include "calmath/labeling.hpp"

namespace calmath {

struct FinetuneRecord {
  std::string prompt;
  std::string completion;
  friend bool operator==(const FinetuneRecord&, const FinetuneRecord&) = default;
};

/// Examples between checkpoints of the early-stopping trace.
inline constexpr std::size_t kCheckpointEvery = 300;

/// The confidence prompt for each example with the label surface form as
/// completion (" 59%", " john", " True"), shuffled by `shuffle_seed`.
/// Throws std::invalid_argument if a label does not belong to `setup`.
std::vector<FinetuneRecord> build_finetune_records(const std::vector<LabeledExample>& examples, ConfidenceKind setup,
                                                   std::uint64_t shuffle_seed,
                                                   const WordScale& scale = WordScale::names());

struct FinetuneExport {
  std::filesystem::path dataset;
  std::filesystem::path metadata;
  std::size_t records = 0;
};

/// Writes `path` as JSONL {"prompt", "completion"} and `path` + ".meta.json"
/// with the setup, template version, shuffle seed and checkpoint schedule.
FinetuneExport export_finetune_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples,
                                       ConfidenceKind setup, std::uint64_t shuffle_seed,
                                       const WordScale& scale = WordScale::names());

/// n = every, 2*every, ... up to total (always ending at total).
std::vector<std::size_t> checkpoint_schedule(std::size_t total, std::size_t every = kCheckpointEvery);

struct EarlyStopPoint {
  std::size_t n_examples = 0;
  double proxy_loss = 0.0;      // against p-hat targets
  double per_sample_mse = 0.0;  // against 0/1 correctness
};

struct EarlyStopTrace {
  std::vector<EarlyStopPoint> points;

  /// Throws std::invalid_argument unless n_examples is strictly increasing.
  void validate() const;
};

/// n of the best checkpoint once per_sample_mse has failed to improve on it
/// for `patience` consecutive checkpoints; the last n if that never happens.
/// Throws std::invalid_argument for an empty trace or zero patience.
std::size_t early_stop_index(const EarlyStopTrace& trace, std::size_t patience);

/// Reads "n_examples,proxy_loss,per_sample_mse" rows (header optional).
EarlyStopTrace parse_early_stop_csv(const std::string& text);

}  // namespace calmath
