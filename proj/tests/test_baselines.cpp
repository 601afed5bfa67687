#include <gtest/gtest.h>

#include <filesystem>

#include "calmath/baselines.hpp"
#include "oracles.hpp"

namespace calmath {
namespace {

TEST(Constant, IsMeanAndMinimizesTrainMse) {
  std::vector<bool> train(100, false);
  for (int i = 0; i < 21; ++i) train[i] = true;
  const double c = constant_baseline(train);
  EXPECT_DOUBLE_EQ(c, 0.21);
  auto train_mse = [&](double p) {
    double s = 0;
    for (bool t : train) s += (p - t) * (p - t);
    return s / train.size();
  };
  for (int step = 0; step <= 100; ++step) EXPECT_LE(train_mse(c), train_mse(step / 100.0) + 1e-15);
  EXPECT_EQ(constant_baseline(std::vector<bool>(5, true)), 1.0);
  EXPECT_THROW(constant_baseline(std::vector<bool>{}), std::invalid_argument);
}

TEST(SubTaskLookup, FallsBackForUnseen) {
  const auto a = make_subtask(OperationKind::Addition, 0);
  const auto m = make_subtask(OperationKind::Multiplication, 0);
  SubTaskLookup lookup({{a, 10, 3}}, 0.42);
  EXPECT_DOUBLE_EQ(lookup.predict(a), 0.3);
  EXPECT_DOUBLE_EQ(lookup.predict(m), 0.42);
}

TEST(Heuristic, FeatureLayout) {
  const auto st = make_subtask(OperationKind::Multiplication, 0);
  const auto f = heuristic_features(st);
  EXPECT_EQ(f.vector().size(), kHeuristicFeatureDim);
  double ops = 0;
  for (double v : f.operator_onehot) ops += v;
  EXPECT_EQ(ops, 1.0);
  EXPECT_EQ(f.operator_onehot[static_cast<std::size_t>(OperationKind::Multiplication)], 1.0);
  EXPECT_EQ(f.format_onehot[0] + f.format_onehot[1], 1.0);
  EXPECT_DOUBLE_EQ(f.digit_counts[0], st.operand_digits.at(0) / 10.0);
}

TEST(Gradients, LogisticMatchesFiniteDifferences) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) EXPECT_LT(oracle::logistic_gradient_error(rng, 20, 6), 1e-6);
}

TEST(Gradients, ProjectionMatchesFiniteDifferences) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) EXPECT_LT(oracle::projection_gradient_error(rng, 20, 6), 1e-6);
}

TEST(Logistic, SeparableReachesFullAccuracy) {
  Matrix x;
  std::vector<bool> y;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.normal(0, 1), b = rng.normal(0, 1);
    if (std::fabs(a + b) < 0.1) continue;
    x.push_back({a, b});
    y.push_back(a + b > 0);
  }
  const auto m = fit_probe(x, y, {.learning_rate = 1.0, .max_epochs = 5000});
  EXPECT_EQ(accuracy(m, x, y), 1.0);
}

TEST(Logistic, ConflictingLabelsGiveHalf) {
  Matrix x(10, std::vector<double>{1.0, -2.0, 0.5});
  std::vector<bool> y{true, false, true, false, true, false, true, false, true, false};
  const auto m = fit_probe(x, y);
  EXPECT_NEAR(m.predict(x[0]), 0.5, 1e-9);
}

TEST(Logistic, LossNonIncreasingAtDefaultRate) {
  Rng rng(6);
  auto inst = oracle::random_gradient_instance(rng, 100, 8);
  std::vector<double> history;
  fit_logistic(inst.x, inst.targets, {}, "", &history);
  ASSERT_GT(history.size(), 2u);
  for (std::size_t i = 1; i < history.size(); ++i) EXPECT_LE(history[i], history[i - 1] + 1e-15);
}

TEST(Logistic, DetectsDivergence) {
  Rng rng(7);
  auto inst = oracle::random_gradient_instance(rng, 50, 4);
  for (auto& row : inst.x)
    for (auto& v : row) v *= 100;
  EXPECT_THROW(fit_logistic(inst.x, inst.targets, {.learning_rate = 1e4, .max_epochs = 200}), DivergenceError);
}

TEST(Logistic, RejectsBadTargets) {
  Matrix x{{1.0}, {2.0}};
  std::vector<double> t{0.5, 1.5};
  EXPECT_THROW(fit_logistic(x, t), std::invalid_argument);
}

TEST(Logistic, PermutationInvariantAndDeterministic) {
  Rng rng(8);
  auto inst = oracle::random_gradient_instance(rng, 60, 5);
  const auto a = fit_logistic(inst.x, inst.targets);
  const auto b = fit_logistic(inst.x, inst.targets);
  EXPECT_EQ(a.weights, b.weights);
  std::vector<std::size_t> order(inst.x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  Matrix px;
  std::vector<double> pt;
  for (auto i : order) {
    px.push_back(inst.x[i]);
    pt.push_back(inst.targets[i]);
  }
  const auto c = fit_logistic(px, pt);
  for (std::size_t j = 0; j < a.weights.size(); ++j) EXPECT_NEAR(a.weights[j], c.weights[j], 1e-9);
}

TEST(Logistic, PlantedModelRecovered) {
  const auto data = oracle::planted_heuristic_data(11);
  const auto m = fit_logistic(data.x, data.targets, {.learning_rate = 2.0, .max_epochs = 50000, .tolerance = 1e-12});
  double mae = 0;
  for (std::size_t i = 0; i < data.x.size(); ++i) mae += std::fabs(m.predict(data.x[i]) - data.targets[i]);
  EXPECT_LT(mae / data.x.size(), 0.02);
}

// Two Gaussian clusters separated along a random direction.
void clusters(Rng& rng, std::size_t n, std::size_t d, Matrix& x, std::vector<bool>& y) {
  std::vector<double> dir(d);
  for (auto& v : dir) v = rng.normal(0, 1);
  double norm = 0;
  for (double v : dir) norm += v * v;
  for (auto& v : dir) v /= std::sqrt(norm);
  for (std::size_t i = 0; i < n; ++i) {
    const bool label = rng.uniform01() < 0.5;
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) row[j] = rng.normal(0, 1) + (label ? 2.0 : -2.0) * dir[j];
    x.push_back(std::move(row));
    y.push_back(label);
  }
}

TEST(Probe, SeparatesClusters) {
  Rng rng(12);
  Matrix x;
  std::vector<bool> y;
  clusters(rng, 600, 16, x, y);
  const auto m = fit_probe(x, y);
  EXPECT_GT(accuracy(m, x, y), 0.9);
}

TEST(Projection, DumpsEveryEpochAndSeparates) {
  Rng rng(13);
  Matrix x;
  std::vector<bool> y;
  clusters(rng, 400, 12, x, y);
  const auto fit = fit_projection_2d(x, y, 5, {.learning_rate = 0.1, .seed = 2});
  ASSERT_EQ(fit.dumps.size(), 6u);
  ASSERT_EQ(fit.losses.size(), 6u);
  for (const auto& d : fit.dumps) EXPECT_EQ(d.size(), x.size());
  EXPECT_LT(fit.losses.back(), fit.losses.front());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < x.size(); ++i) hits += (fit.model.predict(x[i]) >= 0.5) == y[i];
  EXPECT_GT(static_cast<double>(hits) / x.size(), 0.9);

  const auto csv = projection_dump_csv(fit);
  EXPECT_TRUE(csv.starts_with("epoch,x,y,correct\n"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(1 + 6 * x.size()));

  const auto again = fit_projection_2d(x, y, 5, {.learning_rate = 0.1, .seed = 2});
  EXPECT_EQ(again.losses, fit.losses);
}

TEST(Projection, ZeroProjectionMapsToOrigin) {
  Projection2D m;
  m.projection.assign(2, std::vector<double>(4, 0.0));
  m.classifier.weights = {1.0, 1.0};
  std::vector<double> x{1, 2, 3, 4};
  const auto p = m.project(x);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_DOUBLE_EQ(m.predict(x), 0.5);
}

TEST(Projection, RequiresTwoDimensions) {
  Matrix x{{1.0}, {2.0}};
  EXPECT_THROW(fit_projection_2d(x, {true, false}), std::invalid_argument);
}

TEST(Models, SaveLoadRoundTrip) {
  LinearModel m;
  m.weights = {0.1, -2.5, 1e-17};
  m.bias = 0.3;
  m.trained_on = "AddSub";
  m.epochs = 12;
  m.learning_rate = 0.1;
  const auto path = std::filesystem::temp_directory_path() / "calmath_model_test.json";
  save_model(path, m);
  const auto back = load_model(path);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.bias, m.bias);
  EXPECT_EQ(back.trained_on, "AddSub");
  EXPECT_EQ(back.epochs, 12u);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace calmath
