#include "calmath/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "calmath/jsonl.hpp"
#include "calmath/rng.hpp"

namespace calmath {
namespace {

constexpr int kModelRecordVersion = 1;

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_dataset(const Matrix& x, std::size_t n_targets) {
  if (x.empty()) throw std::invalid_argument("training set is empty");
  if (x.size() != n_targets) throw std::invalid_argument("feature and target counts differ");
  const auto d = x.front().size();
  for (const auto& row : x) {
    if (row.size() != d) throw std::invalid_argument("ragged feature matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> as_targets(const std::vector<bool>& correct) {
  std::vector<double> t(correct.size());
  for (std::size_t i = 0; i < correct.size(); ++i) t[i] = correct[i] ? 1.0 : 0.0;
  return t;
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double constant_baseline(const std::vector<bool>& train_correct) {
  if (train_correct.empty()) throw std::invalid_argument("constant baseline needs training data");
  const auto hits = std::count(train_correct.begin(), train_correct.end(), true);
  return static_cast<double>(hits) / static_cast<double>(train_correct.size());
}

double constant_baseline(const std::vector<GradedQuestion>& train) {
  if (train.empty()) throw std::invalid_argument("constant baseline needs training data");
  const auto hits = std::count_if(train.begin(), train.end(), [](const GradedQuestion& g) { return g.correct; });
  return static_cast<double>(hits) / static_cast<double>(train.size());
}

SubTaskLookup::SubTaskLookup(const std::vector<SubTaskStats>& train_stats, double fallback) : fallback_(fallback) {
  for (const auto& s : train_stats) table_[s.subtask] = s.p_hat();
}

double SubTaskLookup::predict(const SubTaskSpec& subtask) const {
  auto it = table_.find(subtask);
  return it == table_.end() ? fallback_ : it->second;
}

std::vector<double> HeuristicFeatures::vector() const {
  std::vector<double> v;
  v.reserve(kHeuristicFeatureDim);
  v.insert(v.end(), digit_counts.begin(), digit_counts.end());
  v.insert(v.end(), operator_onehot.begin(), operator_onehot.end());
  v.insert(v.end(), format_onehot.begin(), format_onehot.end());
  return v;
}

HeuristicFeatures heuristic_features(const SubTaskSpec& subtask) {
  HeuristicFeatures f;
  for (std::size_t i = 0; i < kDigitSlots && i < subtask.operand_digits.size(); ++i)
    f.digit_counts[i] = subtask.operand_digits[i] / 10.0;
  f.operator_onehot[static_cast<std::size_t>(subtask.operation)] = 1.0;
  f.format_onehot[subtask.format == NumberFormat::Plain ? 0 : 1] = 1.0;
  return f;
}

double LinearModel::logit(std::span<const double> x) const {
  if (x.size() != weights.size()) throw std::invalid_argument("feature dimension mismatch");
  return dot(weights, x) + bias;
}

double LinearModel::predict(std::span<const double> x) const { return sigmoid(logit(x)); }

double logistic_loss(const LinearModel& model, const Matrix& x, std::span<const double> targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = model.logit(x[i]);
    total += softplus(z) - targets[i] * z;
  }
  return total / static_cast<double>(x.size());
}

LinearGradient logistic_gradient(const LinearModel& model, const Matrix& x, std::span<const double> targets) {
  LinearGradient g{std::vector<double>(model.weights.size(), 0.0), 0.0};
  const double inv_n = 1.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (sigmoid(model.logit(x[i])) - targets[i]) * inv_n;
    for (std::size_t j = 0; j < g.weights.size(); ++j) g.weights[j] += r * x[i][j];
    g.bias += r;
  }
  return g;
}

LinearModel fit_logistic(const Matrix& x, std::span<const double> targets, const TrainingParams& params,
                         std::string trained_on, std::vector<double>* loss_history) {
  check_dataset(x, targets.size());
  for (double t : targets)
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("targets must lie in [0, 1]");
  if (!(params.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");

  LinearModel m;
  m.weights.assign(x.front().size(), 0.0);
  m.trained_on = std::move(trained_on);
  m.learning_rate = params.learning_rate;

  const double initial = logistic_loss(m, x, targets);
  double prev = initial;
  if (loss_history) loss_history->assign(1, initial);
  int above = 0;
  for (std::size_t epoch = 1; epoch <= params.max_epochs; ++epoch) {
    const auto g = logistic_gradient(m, x, targets);
    for (std::size_t j = 0; j < m.weights.size(); ++j) m.weights[j] -= params.learning_rate * g.weights[j];
    m.bias -= params.learning_rate * g.bias;
    m.epochs = epoch;
    const double loss = logistic_loss(m, x, targets);
    if (loss_history) loss_history->push_back(loss);
    if (!std::isfinite(loss)) throw DivergenceError("loss is not finite; use a smaller learning rate");
    above = loss > initial ? above + 1 : 0;
    if (above >= 10)
      throw DivergenceError("loss above its initial value for 10 epochs; use a smaller learning rate");
    const double improvement = prev - loss;
    prev = loss;
    if (improvement >= 0.0 && improvement < params.tolerance) break;
  }
  return m;
}

LinearModel fit_probe(const Matrix& embeddings, const std::vector<bool>& correct, const TrainingParams& params,
                      std::string trained_on) {
  const auto t = as_targets(correct);
  return fit_logistic(embeddings, t, params, std::move(trained_on));
}

std::array<double, 2> Projection2D::project(std::span<const double> x) const {
  return {dot(projection[0], x), dot(projection[1], x)};
}

double Projection2D::predict(std::span<const double> x) const {
  const auto p = project(x);
  return classifier.predict(p);
}

double projection_loss(const Projection2D& model, const Matrix& x, std::span<const double> targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto p = model.project(x[i]);
    const double z = model.classifier.logit(p);
    total += softplus(z) - targets[i] * z;
  }
  return total / static_cast<double>(x.size());
}

namespace {

// Accumulates the gradient over rows [begin, end), scaled by 1/(end - begin).
ProjectionGradient projection_gradient_range(const Projection2D& model, const Matrix& x,
                                             std::span<const double> targets, std::span<const std::size_t> rows) {
  const auto d = model.projection[0].size();
  ProjectionGradient g{Matrix(2, std::vector<double>(d, 0.0)), std::vector<double>(2, 0.0), 0.0};
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  const auto& v = model.classifier.weights;
  for (auto i : rows) {
    const auto p = model.project(x[i]);
    const double r = (sigmoid(model.classifier.logit(p)) - targets[i]) * inv_n;
    g.weights[0] += r * p[0];
    g.weights[1] += r * p[1];
    g.bias += r;
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t j = 0; j < d; ++j) g.projection[k][j] += r * v[k] * x[i][j];
  }
  return g;
}

void apply(Projection2D& model, const ProjectionGradient& g, double lr) {
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < g.projection[k].size(); ++j) model.projection[k][j] -= lr * g.projection[k][j];
  for (std::size_t k = 0; k < 2; ++k) model.classifier.weights[k] -= lr * g.weights[k];
  model.classifier.bias -= lr * g.bias;
}

std::vector<ScatterPoint> dump(const Projection2D& model, const Matrix& x, const std::vector<bool>& correct) {
  std::vector<ScatterPoint> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto p = model.project(x[i]);
    out.push_back({p[0], p[1], correct[i]});
  }
  return out;
}

}  // namespace

ProjectionGradient projection_gradient(const Projection2D& model, const Matrix& x, std::span<const double> targets) {
  std::vector<std::size_t> rows(x.size());
  std::iota(rows.begin(), rows.end(), 0);
  return projection_gradient_range(model, x, targets, rows);
}

ProjectionFit fit_projection_2d(const Matrix& embeddings, const std::vector<bool>& correct, std::size_t epochs,
                                const TrainingParams& params, std::string trained_on) {
  check_dataset(embeddings, correct.size());
  const auto d = embeddings.front().size();
  if (d < 2) throw std::invalid_argument("projection needs embedding dimension >= 2");
  if (!(params.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (params.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  const auto targets = as_targets(correct);

  Rng rng(params.seed);
  ProjectionFit fit;
  auto& m = fit.model;
  m.projection.assign(2, std::vector<double>(d));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& row : m.projection)
    for (auto& v : row) v = rng.normal(0.0, scale);
  m.classifier.weights = {rng.normal(0.0, 0.5), rng.normal(0.0, 0.5)};
  m.classifier.trained_on = std::move(trained_on);
  m.classifier.learning_rate = params.learning_rate;

  const double initial = projection_loss(m, embeddings, targets);
  fit.dumps.push_back(dump(m, embeddings, correct));
  fit.losses.push_back(initial);

  std::vector<std::size_t> order(embeddings.size());
  std::iota(order.begin(), order.end(), 0);
  int above = 0;
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const auto len = std::min(params.batch_size, order.size() - start);
      apply(m, projection_gradient_range(m, embeddings, targets, std::span(order).subspan(start, len)),
            params.learning_rate);
    }
    m.classifier.epochs = epoch;
    const double loss = projection_loss(m, embeddings, targets);
    if (!std::isfinite(loss)) throw DivergenceError("loss is not finite; use a smaller learning rate");
    above = loss > initial ? above + 1 : 0;
    if (above >= 10)
      throw DivergenceError("loss above its initial value for 10 epochs; use a smaller learning rate");
    fit.dumps.push_back(dump(m, embeddings, correct));
    fit.losses.push_back(loss);
  }
  return fit;
}

double accuracy(const LinearModel& model, const Matrix& x, const std::vector<bool>& correct) {
  if (x.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < x.size(); ++i) hits += (model.predict(x[i]) >= 0.5) == correct[i];
  return static_cast<double>(hits) / static_cast<double>(x.size());
}

void to_json(nlohmann::json& j, const LinearModel& m) {
  j = {{"weights", m.weights},
       {"bias", m.bias},
       {"trained_on", m.trained_on},
       {"epochs", m.epochs},
       {"learning_rate", m.learning_rate}};
}

void from_json(const nlohmann::json& j, LinearModel& m) {
  j.at("weights").get_to(m.weights);
  j.at("bias").get_to(m.bias);
  m.trained_on = j.value("trained_on", std::string());
  m.epochs = j.value("epochs", std::size_t{0});
  m.learning_rate = j.value("learning_rate", 0.0);
}

void to_json(nlohmann::json& j, const Projection2D& m) {
  j = {{"projection", m.projection}, {"classifier", m.classifier}};
}

void from_json(const nlohmann::json& j, Projection2D& m) {
  j.at("projection").get_to(m.projection);
  j.at("classifier").get_to(m.classifier);
  if (m.projection.size() != 2) throw std::invalid_argument("projection must have two rows");
}

void save_model(const std::filesystem::path& path, const LinearModel& model) {
  nlohmann::json j = {{"version", kModelRecordVersion}, {"kind", "logistic"}, {"model", model}};
  write_text(path, j.dump(2) + "\n");
}

LinearModel load_model(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_text(path));
  if (j.value("version", 0) != kModelRecordVersion) throw IoError(path.string() + ": unsupported model version");
  return j.at("model").get<LinearModel>();
}

void save_projection(const std::filesystem::path& path, const Projection2D& model) {
  nlohmann::json j = {{"version", kModelRecordVersion}, {"kind", "projection-2d"}, {"model", model}};
  write_text(path, j.dump(2) + "\n");
}

std::string projection_dump_csv(const ProjectionFit& fit) {
  std::string out = "epoch,x,y,correct\n";
  char buf[96];
  for (std::size_t e = 0; e < fit.dumps.size(); ++e)
    for (const auto& p : fit.dumps[e]) {
      std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%d\n", e, p.x, p.y, p.positive ? 1 : 0);
      out += buf;
    }
  return out;
}

}  // namespace calmath
