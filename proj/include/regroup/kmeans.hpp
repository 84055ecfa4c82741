#pragma once

// Deterministic k-means: k-means++ seeding followed by Lloyd iterations.
//
// Clusters are kept in canonical order (lexicographic order of centroid
// coordinates) at every iteration, and every assignment is the nearest
// centroid with ties going to the lowest index. Distances are squared
// Euclidean.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "regroup/dataset.hpp"
#include "regroup/error.hpp"
#include "regroup/numeric.hpp"
#include "regroup/random.hpp"

namespace regroup {

struct KMeansModel {
  FeatureMatrix centroids;
  std::vector<int> assignments;
  double inertia = 0.0;
  int iterations_run = 0;
  // Inertia after seeding (entry 0) and after each Lloyd iteration.
  std::vector<double> inertia_trace;

  int k() const { return static_cast<int>(centroids.rows()); }
  std::size_t dim() const { return centroids.cols(); }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(centroids.rows(), 0);
    for (const int a : assignments) ++sizes[a];
    return sizes;
  }
};

inline std::size_t count_distinct_rows(const FeatureMatrix& x) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&x](std::size_t a, std::size_t b) {
    const auto ra = x.row(a), rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(),
                                        rb.end());
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = x.rows() ? 1 : 0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

namespace detail {

// Working state of a k-means run: centroids stored flat, k x dim.
class Lloyd {
 public:
  Lloyd(const FeatureMatrix& x, std::size_t k)
      : x_(x), k_(k), dim_(x.cols()), centroids_(k * x.cols(), 0.0),
        assignments_(x.rows(), 0), distances_(x.rows(), 0.0) {}

  std::span<double> centroid(std::size_t c) {
    return {centroids_.data() + c * dim_, dim_};
  }
  std::span<const double> centroid(std::size_t c) const {
    return {centroids_.data() + c * dim_, dim_};
  }

  void seed_plus_plus(Rng& rng) {
    const std::size_t n = x_.rows();
    std::size_t first = rng.uniform_index(n);
    std::copy_n(x_.row(first).begin(), dim_, centroid(0).begin());
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = squared_distance(x_.row(i), centroid(0));
    }
    for (std::size_t c = 1; c < k_; ++c) {
      const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
      const double target = rng.uniform() * total;
      std::size_t chosen = n;
      double cumulative = 0.0;
      std::size_t last_positive = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        last_positive = i;
        cumulative += d2[i];
        if (cumulative > target) {
          chosen = i;
          break;
        }
      }
      if (chosen == n) chosen = last_positive;  // rounding at the upper end
      std::copy_n(x_.row(chosen).begin(), dim_, centroid(c).begin());
      for (std::size_t i = 0; i < n; ++i) {
        d2[i] = std::min(d2[i], squared_distance(x_.row(i), centroid(c)));
      }
    }
  }

  void sort_canonical() {
    std::vector<std::size_t> order(k_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [this](std::size_t a, std::size_t b) {
                       const auto ca = centroid(a), cb = centroid(b);
                       return std::lexicographical_compare(
                           ca.begin(), ca.end(), cb.begin(), cb.end());
                     });
    std::vector<double> sorted;
    sorted.reserve(centroids_.size());
    for (const std::size_t c : order) {
      const auto row = centroid(c);
      sorted.insert(sorted.end(), row.begin(), row.end());
    }
    centroids_ = std::move(sorted);
  }

  void assign() {
    for (std::size_t i = 0; i < x_.rows(); ++i) {
      int best = 0;
      double best_d = squared_distance(x_.row(i), centroid(0));
      for (std::size_t c = 1; c < k_; ++c) {
        const double d = squared_distance(x_.row(i), centroid(c));
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      assignments_[i] = best;
      distances_[i] = best_d;
    }
  }

  // Assigns, then reseeds any empty cluster at the point farthest from its
  // current centroid. Each repair strictly lowers the inertia, so the loop
  // terminates whenever k <= distinct rows.
  void assign_and_repair() {
    sort_canonical();
    assign();
    for (;;) {
      std::vector<std::size_t> sizes(k_, 0);
      for (const int a : assignments_) ++sizes[a];
      const auto empty = std::find(sizes.begin(), sizes.end(), 0);
      if (empty == sizes.end()) return;
      const std::size_t far = static_cast<std::size_t>(
          std::max_element(distances_.begin(), distances_.end()) -
          distances_.begin());
      const auto row = x_.row(far);
      std::copy(row.begin(), row.end(),
                centroid(static_cast<std::size_t>(empty - sizes.begin()))
                    .begin());
      sort_canonical();
      assign();
    }
  }

  // Moves every centroid to the mean of its points; returns the largest
  // squared displacement.
  double update() {
    std::vector<double> sums(k_ * dim_, 0.0);
    std::vector<std::size_t> sizes(k_, 0);
    for (std::size_t i = 0; i < x_.rows(); ++i) {
      const std::size_t c = static_cast<std::size_t>(assignments_[i]);
      ++sizes[c];
      const auto row = x_.row(i);
      for (std::size_t j = 0; j < dim_; ++j) sums[c * dim_ + j] += row[j];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < k_; ++c) {
      if (sizes[c] == 0) continue;
      auto cen = centroid(c);
      double shift = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double mean = sums[c * dim_ + j] / static_cast<double>(sizes[c]);
        shift += (mean - cen[j]) * (mean - cen[j]);
        cen[j] = mean;
      }
      movement = std::max(movement, shift);
    }
    return movement;
  }

  double inertia() const {
    return std::accumulate(distances_.begin(), distances_.end(), 0.0);
  }

  KMeansModel finish(int iterations, std::vector<double> trace) && {
    const double total = inertia();
    return KMeansModel{FeatureMatrix(k_, dim_, std::move(centroids_)),
                       std::move(assignments_), total, iterations,
                       std::move(trace)};
  }

 private:
  const FeatureMatrix& x_;
  std::size_t k_;
  std::size_t dim_;
  std::vector<double> centroids_;
  std::vector<int> assignments_;
  std::vector<double> distances_;
};

}  // namespace detail

// Stops when the largest squared centroid displacement of an iteration falls
// below tol, or after max_iter iterations.
inline KMeansModel kmeans_fit(const FeatureMatrix& x, int k, std::uint64_t seed,
                              int max_iter = 100, double tol = 1e-6) {
  if (k < 1) throw ArgumentError("k-means needs k >= 1, got " + std::to_string(k));
  if (max_iter < 0) throw ArgumentError("max_iter must be >= 0");
  const std::size_t distinct = count_distinct_rows(x);
  if (static_cast<std::size_t>(k) > distinct) {
    throw ArgumentError("k-means with k=" + std::to_string(k) +
                        " exceeds the " + std::to_string(distinct) +
                        " distinct rows of the input");
  }
  Rng rng(seed);
  detail::Lloyd lloyd(x, static_cast<std::size_t>(k));
  lloyd.seed_plus_plus(rng);
  lloyd.assign_and_repair();
  std::vector<double> trace{lloyd.inertia()};
  int iterations = 0;
  while (iterations < max_iter) {
    const double movement = lloyd.update();
    lloyd.assign_and_repair();
    trace.push_back(lloyd.inertia());
    ++iterations;
    if (movement < tol) break;
  }
  return std::move(lloyd).finish(iterations, std::move(trace));
}

// Nearest centroid per row, lowest index on exact ties.
inline std::vector<int> kmeans_assign(const KMeansModel& model,
                                      const FeatureMatrix& x) {
  if (x.cols() != model.dim()) {
    throw ArgumentError("k-means model has dimension " +
                        std::to_string(model.dim()) + ", input has " +
                        std::to_string(x.cols()));
  }
  std::vector<int> out(x.rows(), 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.centroids.rows(); ++c) {
      const double d = squared_distance(x.row(i), model.centroids.row(c));
      if (d < best) {
        best = d;
        out[i] = static_cast<int>(c);
      }
    }
  }
  return out;
}

}  // namespace regroup
