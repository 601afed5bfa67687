#pragma once

// Comparison models: the constant baseline, logistic regression on
// heuristic difficulty features, a linear probe on embeddings, and a jointly
// trained rank-2 projection of the embeddings with a classifier on top.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "calmath/labeling.hpp"
#include "calmath/report.hpp"
#include "calmath/taskgen.hpp"

namespace calmath {

using Matrix = std::vector<std::vector<double>>;

/// Training diverged; retry with a smaller learning rate.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// MSE-optimal constant: the mean of the training correctness indicators.
/// Throws std::invalid_argument on empty input.
double constant_baseline(const std::vector<bool>& train_correct);
double constant_baseline(const std::vector<GradedQuestion>& train);

/// Answers with the training p-hat of the query's sub-task, or `fallback`
/// for sub-tasks absent from training.
class SubTaskLookup {
 public:
  SubTaskLookup(const std::vector<SubTaskStats>& train_stats, double fallback);
  double predict(const SubTaskSpec& subtask) const;

 private:
  std::map<SubTaskSpec, double> table_;
  double fallback_;
};

inline constexpr std::size_t kDigitSlots = 3;
inline constexpr std::size_t kHeuristicFeatureDim = kDigitSlots + kOperationCount + 2;

/// Operand digit counts (scaled by 1/10, zero-padded), an operator one-hot
/// and a number-format one-hot.
struct HeuristicFeatures {
  std::array<double, kDigitSlots> digit_counts{};
  std::array<double, kOperationCount> operator_onehot{};
  std::array<double, 2> format_onehot{};

  std::vector<double> vector() const;
};

HeuristicFeatures heuristic_features(const SubTaskSpec& subtask);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::string trained_on;
  std::size_t epochs = 0;
  double learning_rate = 0.0;

  double logit(std::span<const double> x) const;
  /// sigmoid(w.x + b)
  double predict(std::span<const double> x) const;
};

struct TrainingParams {
  double learning_rate = 0.1;
  std::size_t max_epochs = 2000;
  /// Stop once an epoch improves the loss by less than this.
  double tolerance = 1e-8;
  std::uint64_t seed = 0;
  /// Minibatch size for the projection model.
  std::size_t batch_size = 32;
};

double sigmoid(double z);

/// Mean of softplus(z) - t z, the cross-entropy against soft targets up to a
/// constant in t.
double logistic_loss(const LinearModel& model, const Matrix& x, std::span<const double> targets);

struct LinearGradient {
  std::vector<double> weights;
  double bias = 0.0;
};
LinearGradient logistic_gradient(const LinearModel& model, const Matrix& x, std::span<const double> targets);

/// Full-batch gradient descent from zero weights. Targets in [0, 1].
/// `loss_history`, when given, receives the loss before each update and the
/// final loss. Throws std::invalid_argument on malformed input and
/// DivergenceError if the loss stays above its initial value for 10
/// consecutive epochs.
LinearModel fit_logistic(const Matrix& x, std::span<const double> targets, const TrainingParams& params = {},
                         std::string trained_on = {}, std::vector<double>* loss_history = nullptr);

/// fit_logistic with hard 0/1 targets.
LinearModel fit_probe(const Matrix& embeddings, const std::vector<bool>& correct, const TrainingParams& params = {},
                      std::string trained_on = {});

struct Projection2D {
  Matrix projection;  // 2 x d
  LinearModel classifier;  // over the 2-d image

  std::array<double, 2> project(std::span<const double> x) const;
  double predict(std::span<const double> x) const;
};

double projection_loss(const Projection2D& model, const Matrix& x, std::span<const double> targets);

struct ProjectionGradient {
  Matrix projection;
  std::vector<double> weights;
  double bias = 0.0;
};
ProjectionGradient projection_gradient(const Projection2D& model, const Matrix& x, std::span<const double> targets);

struct ProjectionFit {
  Projection2D model;
  /// Projected points before training (index 0) and after each epoch.
  std::vector<std::vector<ScatterPoint>> dumps;
  std::vector<double> losses;  // full-data loss at each dump
};

/// Minibatch SGD on both layers from a seeded random start. Requires d >= 2.
ProjectionFit fit_projection_2d(const Matrix& embeddings, const std::vector<bool>& correct, std::size_t epochs = 5,
                                const TrainingParams& params = {}, std::string trained_on = {});

double accuracy(const LinearModel& model, const Matrix& x, const std::vector<bool>& correct);

void to_json(nlohmann::json& j, const LinearModel& m);
void from_json(const nlohmann::json& j, LinearModel& m);
void to_json(nlohmann::json& j, const Projection2D& m);
void from_json(const nlohmann::json& j, Projection2D& m);

/// Versioned weight records.
void save_model(const std::filesystem::path& path, const LinearModel& model);
LinearModel load_model(const std::filesystem::path& path);
void save_projection(const std::filesystem::path& path, const Projection2D& model);

/// "epoch,x,y,correct" rows for every dump.
std::string projection_dump_csv(const ProjectionFit& fit);

}  // namespace calmath
