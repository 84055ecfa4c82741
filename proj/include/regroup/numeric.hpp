#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace regroup {

// Round half to even, for the non-negative quantities used for group counts
// and split sizes. Independent of the floating-point rounding mode.
inline double round_half_even(double x) {
  const double lower = std::floor(x);
  const double diff = x - lower;
  if (diff < 0.5) return lower;
  if (diff > 0.5) return lower + 1.0;
  return std::fmod(lower, 2.0) == 0.0 ? lower : lower + 1.0;
}

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

// Dense row-major matrix of scores, e.g. per-class probabilities (n x C).
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  ScoreMatrix() = default;
  ScoreMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return values[i * cols + j];
  }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;
};

}  // namespace regroup
