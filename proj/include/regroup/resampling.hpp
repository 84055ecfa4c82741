#pragma once

// Class rebalancing by resampling: random oversampling (ROS), random
// undersampling (RUS) and SMOTE.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "regroup/dataset.hpp"
#include "regroup/error.hpp"
#include "regroup/numeric.hpp"
#include "regroup/random.hpp"

namespace regroup {

enum class ResampleKind { kOversample, kUndersample, kSmote };

struct ResampleSpec {
  ResampleKind kind = ResampleKind::kOversample;
  int k_neighbors = 5;  // SMOTE only
  std::uint64_t seed = 0;
};

namespace detail {

// Indices (into members) of the k nearest other members of members[self],
// nearest first, lower position on ties.
inline std::vector<std::size_t> nearest_neighbors(
    const FeatureMatrix& x, std::span<const std::size_t> members,
    std::size_t self, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(members.size() - 1);
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (j == self) continue;
    dist.emplace_back(squared_distance(x.row(members[self]), x.row(members[j])),
                      j);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                    dist.end());
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(dist[i].second);
  return out;
}

inline Dataset oversample(const Dataset& train, Rng& rng) {
  const auto& counts = train.class_counts();
  const std::size_t target = *std::max_element(counts.begin(), counts.end());
  std::vector<std::size_t> rows(train.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (ClassId c = 0; c < train.num_classes(); ++c) {
    const std::vector<std::size_t> members = train.indices_of(c);
    for (std::size_t k = members.size(); k < target; ++k) {
      rows.push_back(members[rng.uniform_index(members.size())]);
    }
  }
  return train.subset(rows);
}

inline Dataset undersample(const Dataset& train, Rng& rng) {
  const auto& counts = train.class_counts();
  const std::size_t target = *std::min_element(counts.begin(), counts.end());
  std::vector<std::size_t> rows;
  for (ClassId c = 0; c < train.num_classes(); ++c) {
    std::vector<std::size_t> members = train.indices_of(c);
    rng.shuffle(std::span<std::size_t>(members));
    rows.insert(rows.end(), members.begin(),
                members.begin() + static_cast<std::ptrdiff_t>(target));
  }
  std::sort(rows.begin(), rows.end());
  return train.subset(rows);
}

inline Dataset smote(const Dataset& train, std::size_t k_neighbors, Rng& rng) {
  const auto& counts = train.class_counts();
  const std::size_t target = *std::max_element(counts.begin(), counts.end());
  const FeatureMatrix& x = train.features();
  const std::size_t dim = train.dim();
  std::vector<double> values(x.values());
  std::vector<ClassId> labels(train.labels());
  for (ClassId c = 0; c < train.num_classes(); ++c) {
    const std::vector<std::size_t> members = train.indices_of(c);
    if (members.size() >= target) continue;
    if (members.size() < 2) {
      throw ArgumentError("SMOTE: class " + std::to_string(c) +
                          " has a single sample and no neighbor");
    }
    if (k_neighbors >= members.size()) {
      throw ArgumentError("SMOTE: k_neighbors=" + std::to_string(k_neighbors) +
                          " must be below the class size " +
                          std::to_string(members.size()) + " of class " +
                          std::to_string(c));
    }
    std::vector<std::vector<std::size_t>> neighbors(members.size());
    for (std::size_t s = 0; s < members.size(); ++s) {
      neighbors[s] = nearest_neighbors(x, members, s, k_neighbors);
    }
    for (std::size_t k = members.size(); k < target; ++k) {
      const std::size_t parent = rng.uniform_index(members.size());
      const std::size_t mate =
          neighbors[parent][rng.uniform_index(k_neighbors)];
      const double u = rng.uniform();
      const auto a = x.row(members[parent]);
      const auto b = x.row(members[mate]);
      for (std::size_t j = 0; j < dim; ++j) {
        values.push_back(a[j] + u * (b[j] - a[j]));
      }
      labels.push_back(c);
    }
  }
  const std::size_t n = labels.size();
  return Dataset(FeatureMatrix(n, dim, std::move(values)), std::move(labels),
                 train.num_classes(), train.class_names());
}

}  // namespace detail

// ROS: originals kept, each class topped up to the largest class count by
// uniform draws with replacement. RUS: each class reduced to the smallest
// count by uniform draws without replacement, original order kept. SMOTE:
// smaller classes topped up with interpolated points.
inline Dataset resample(const Dataset& train, const ResampleSpec& spec) {
  if (train.num_classes() < 2 || !train.all_classes_present()) {
    throw ArgumentError("resampling needs >= 2 populated classes");
  }
  Rng rng(spec.seed);
  switch (spec.kind) {
    case ResampleKind::kOversample: return detail::oversample(train, rng);
    case ResampleKind::kUndersample: return detail::undersample(train, rng);
    case ResampleKind::kSmote:
      if (spec.k_neighbors < 1) throw ArgumentError("SMOTE needs k_neighbors >= 1");
      return detail::smote(train, static_cast<std::size_t>(spec.k_neighbors),
                           rng);
  }
  return train;
}

}  // namespace regroup
