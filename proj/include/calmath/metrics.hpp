#pragma once

// Calibration metrics: mean squared error (Brier score) and the mean absolute
// deviation over K equal-mass bins, plus the bins themselves for curves.

#include <span>
#include <vector>

#include "calmath/taskgen.hpp"

namespace calmath {

struct ScoredSample {
  double probability = 0.0;
  bool correct = false;
  SubTaskSpec subtask{};
};

struct CalibrationBin {
  double conf = 0.0;  // mean probability
  double acc = 0.0;   // fraction correct
  std::size_t size = 0;
};

struct CalibrationBins {
  std::size_t k = 0;
  std::vector<CalibrationBin> bins;  // conf non-decreasing
};

struct CalibrationReport {
  double mse = 0.0;
  double mad = 0.0;
  CalibrationBins bins;
  std::size_t n = 0;
  std::size_t parse_failures = 0;
};

inline constexpr std::size_t kDefaultBins = 10;

/// Mean of (p - I)^2. Throws std::invalid_argument on empty input or a
/// probability outside [0, 1].
double mse(std::span<const ScoredSample> samples);

struct MadResult {
  double mad = 0.0;
  CalibrationBins bins;
};

/// Stable-sorts by probability (ties keep input order), cuts into k
/// contiguous groups of size floor/ceil(n/k), and averages |acc - conf|
/// over bins without size weighting. Requires n >= k >= 1.
MadResult mad(std::span<const ScoredSample> samples, std::size_t k);

/// The bins mad() builds.
CalibrationBins calibration_curve(std::span<const ScoredSample> samples, std::size_t k);

CalibrationReport score(std::span<const ScoredSample> samples, std::size_t k, std::size_t parse_failures = 0);

/// Murphy decomposition of the Brier score over distinct forecast values:
/// mse = reliability - resolution + uncertainty.
struct MurphyDecomposition {
  double reliability = 0.0;
  double resolution = 0.0;
  double uncertainty = 0.0;
};
MurphyDecomposition murphy_decomposition(std::span<const ScoredSample> samples);

}  // namespace calmath
