#include "calmath/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace calmath {
namespace {

void validate(std::span<const ScoredSample> samples) {
  if (samples.empty()) throw std::invalid_argument("calibration metrics need at least one sample");
  for (const auto& s : samples)
    if (!(s.probability >= 0.0 && s.probability <= 1.0))
      throw std::invalid_argument("probability outside [0, 1]");
}

}  // namespace

double mse(std::span<const ScoredSample> samples) {
  validate(samples);
  double total = 0.0;
  for (const auto& s : samples) {
    const double d = s.probability - (s.correct ? 1.0 : 0.0);
    total += d * d;
  }
  return total / static_cast<double>(samples.size());
}

MadResult mad(std::span<const ScoredSample> samples, std::size_t k) {
  validate(samples);
  const std::size_t n = samples.size();
  if (k == 0) throw std::invalid_argument("mad: k must be >= 1");
  if (n < k) throw std::invalid_argument("mad: fewer samples than bins");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return samples[a].probability < samples[b].probability; });

  MadResult result;
  result.bins.k = k;
  result.bins.bins.reserve(k);
  double gap_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t lo = i * n / k;
    const std::size_t hi = (i + 1) * n / k;
    double conf = 0.0, acc = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      conf += samples[order[j]].probability;
      acc += samples[order[j]].correct ? 1.0 : 0.0;
    }
    const auto size = static_cast<double>(hi - lo);
    CalibrationBin bin{conf / size, acc / size, hi - lo};
    gap_sum += std::abs(bin.acc - bin.conf);
    result.bins.bins.push_back(bin);
  }
  result.mad = gap_sum / static_cast<double>(k);
  return result;
}

CalibrationBins calibration_curve(std::span<const ScoredSample> samples, std::size_t k) {
  return mad(samples, k).bins;
}

CalibrationReport score(std::span<const ScoredSample> samples, std::size_t k, std::size_t parse_failures) {
  auto m = mad(samples, k);
  return CalibrationReport{mse(samples), m.mad, std::move(m.bins), samples.size(), parse_failures};
}

MurphyDecomposition murphy_decomposition(std::span<const ScoredSample> samples) {
  validate(samples);
  struct Cell {
    double count = 0.0;
    double hits = 0.0;
  };
  std::map<double, Cell> cells;
  double total_hits = 0.0;
  for (const auto& s : samples) {
    auto& c = cells[s.probability];
    c.count += 1.0;
    if (s.correct) {
      c.hits += 1.0;
      total_hits += 1.0;
    }
  }
  const auto n = static_cast<double>(samples.size());
  const double base_rate = total_hits / n;
  MurphyDecomposition d;
  for (const auto& [forecast, c] : cells) {
    const double observed = c.hits / c.count;
    d.reliability += c.count * (forecast - observed) * (forecast - observed);
    d.resolution += c.count * (observed - base_rate) * (observed - base_rate);
  }
  d.reliability /= n;
  d.resolution /= n;
  d.uncertainty = base_rate * (1.0 - base_rate);
  return d;
}

}  // namespace calmath
