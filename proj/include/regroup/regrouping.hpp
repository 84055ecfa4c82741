#pragma once

// Regrouping: split over-represented classes into k-means pseudo-classes so
// an imbalanced problem becomes a near-balanced one with more classes, then
// map pseudo-class predictions back to the original labels.
//
// Pseudo ids are contiguous. Original class c owns the block
// [offset(c), offset(c) + groups(c)), blocks in ascending class order and
// groups within a block in canonical k-means cluster order. In the binary
// procedure the positive class 0 keeps a single group, so pseudo id 0 is the
// positive class.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "regroup/dataset.hpp"
#include "regroup/error.hpp"
#include "regroup/kmeans.hpp"
#include "regroup/numeric.hpp"
#include "regroup/random.hpp"

namespace regroup {

class RegroupPlan {
 public:
  RegroupPlan(std::vector<int> group_counts,
              std::vector<std::optional<KMeansModel>> cluster_models,
              std::vector<std::string> warnings = {})
      : group_counts_(std::move(group_counts)),
        cluster_models_(std::move(cluster_models)),
        warnings_(std::move(warnings)) {
    if (group_counts_.empty()) throw ArgumentError("plan needs >= 1 class");
    if (cluster_models_.size() != group_counts_.size()) {
      throw ArgumentError("plan needs one cluster-model slot per class");
    }
    int next = 0;
    for (std::size_t c = 0; c < group_counts_.size(); ++c) {
      const int g = group_counts_[c];
      if (g < 1) throw ArgumentError("group count must be >= 1");
      const auto& model = cluster_models_[c];
      if (g > 1 && (!model || model->k() != g)) {
        throw ArgumentError("class " + std::to_string(c) +
                            " has groups but no matching cluster model");
      }
      offsets_.push_back(next);
      for (int j = 0; j < g; ++j) original_of_.push_back(static_cast<ClassId>(c));
      next += g;
    }
  }

  int original_num_classes() const {
    return static_cast<int>(group_counts_.size());
  }
  int pseudo_num_classes() const {
    return static_cast<int>(original_of_.size());
  }
  const std::vector<int>& group_counts() const { return group_counts_; }
  int groups(ClassId c) const { return group_counts_.at(c); }

  int pseudo_of(ClassId c, int group) const {
    if (c < 0 || c >= original_num_classes() || group < 0 ||
        group >= group_counts_[c]) {
      throw ArgumentError("invalid (class, group) pair (" + std::to_string(c) +
                          ", " + std::to_string(group) + ")");
    }
    return offsets_[c] + group;
  }

  ClassId original_of(int pseudo) const {
    if (pseudo < 0 || pseudo >= pseudo_num_classes()) {
      throw ArgumentError("invalid pseudo id " + std::to_string(pseudo));
    }
    return original_of_[pseudo];
  }

  // Cluster model for class c, present iff groups(c) > 1.
  const std::optional<KMeansModel>& cluster_model(ClassId c) const {
    return cluster_models_.at(c);
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

  bool is_identity() const {
    return std::all_of(group_counts_.begin(), group_counts_.end(),
                       [](int g) { return g == 1; });
  }

 private:
  std::vector<int> group_counts_;
  std::vector<std::optional<KMeansModel>> cluster_models_;
  std::vector<std::string> warnings_;
  std::vector<int> offsets_;
  std::vector<ClassId> original_of_;
};

struct RegroupResult {
  Dataset pseudo_train;
  RegroupPlan plan;
};

// K = max(1, round_half_even(n_majority / n_minority)).
inline int compute_k(std::size_t n_majority, std::size_t n_minority) {
  if (n_majority == 0 || n_minority == 0) {
    throw ArgumentError("compute_k needs non-zero class counts");
  }
  const double ratio =
      static_cast<double>(n_majority) / static_cast<double>(n_minority);
  return std::max(1, static_cast<int>(round_half_even(ratio)));
}

// Group count per class: max(1, round_half_even(count / smallest count)).
inline std::vector<int> group_counts_for(std::span<const std::size_t> counts) {
  if (counts.empty()) throw ArgumentError("no class counts");
  const std::size_t smallest = *std::min_element(counts.begin(), counts.end());
  std::vector<int> out;
  out.reserve(counts.size());
  for (const std::size_t n : counts) out.push_back(compute_k(n, smallest));
  return out;
}

namespace detail {

inline RegroupResult regroup_with_groups(const Dataset& train,
                                         std::vector<int> groups,
                                         std::uint64_t seed,
                                         std::vector<std::string> warnings) {
  const int num_classes = train.num_classes();
  std::vector<std::optional<KMeansModel>> models(num_classes);
  std::vector<std::vector<int>> cluster_of(num_classes);
  for (ClassId c = 0; c < num_classes; ++c) {
    if (groups[c] <= 1) continue;
    const std::vector<std::size_t> members = train.indices_of(c);
    const FeatureMatrix x = train.features().select_rows(members);
    models[c] = kmeans_fit(x, groups[c], derive_seed(seed, c));
    cluster_of[c] = models[c]->assignments;
  }
  RegroupPlan plan(groups, std::move(models), std::move(warnings));

  std::vector<ClassId> pseudo(train.size());
  std::vector<std::size_t> seen(num_classes, 0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const ClassId c = train.labels()[i];
    const int group = groups[c] > 1 ? cluster_of[c][seen[c]] : 0;
    ++seen[c];
    pseudo[i] = plan.pseudo_of(c, group);
  }

  std::vector<std::string> names;
  if (!train.class_names().empty()) {
    for (ClassId c = 0; c < num_classes; ++c) {
      for (int j = 0; j < groups[c]; ++j) {
        names.push_back(groups[c] == 1
                            ? train.class_names()[c]
                            : train.class_names()[c] + "/" + std::to_string(j));
      }
    }
  }
  Dataset pseudo_train(train.features(), std::move(pseudo),
                       plan.pseudo_num_classes(), std::move(names));
  return {std::move(pseudo_train), std::move(plan)};
}

}  // namespace detail

// Binary regrouping: class 0 (positive) keeps pseudo id 0, class 1 is split
// into K k-means clusters mapped to pseudo ids 1..K.
inline RegroupResult regroup_binary(const Dataset& train, int k,
                                    std::uint64_t seed) {
  if (train.num_classes() != 2 || !train.all_classes_present()) {
    throw ArgumentError("binary regrouping needs exactly two populated classes");
  }
  if (k < 1) throw ArgumentError("K must be >= 1, got " + std::to_string(k));
  return detail::regroup_with_groups(train, {1, k}, seed, {});
}

// Multiclass regrouping with the group-count rule of group_counts_for. A group
// count larger than the class's distinct-row count is clamped, with a warning
// recorded in the plan.
inline RegroupResult regroup_multiclass(const Dataset& train,
                                        std::uint64_t seed) {
  if (train.num_classes() < 2 || !train.all_classes_present()) {
    throw ArgumentError("multiclass regrouping needs >= 2 populated classes");
  }
  std::vector<int> groups = group_counts_for(train.class_counts());
  std::vector<std::string> warnings;
  for (ClassId c = 0; c < train.num_classes(); ++c) {
    if (groups[c] <= 1) continue;
    const std::size_t distinct = count_distinct_rows(
        train.features().select_rows(train.indices_of(c)));
    if (static_cast<std::size_t>(groups[c]) > distinct) {
      warnings.push_back("class " + std::to_string(c) + ": group count " +
                         std::to_string(groups[c]) + " clamped to " +
                         std::to_string(distinct) + " distinct rows");
      groups[c] = static_cast<int>(distinct);
    }
  }
  return detail::regroup_with_groups(train, std::move(groups), seed,
                                     std::move(warnings));
}

// ---------------------------------------------------------------------------
// Prediction mapping

namespace detail {

inline void check_probabilities(std::span<const double> probs,
                                const RegroupPlan& plan) {
  if (static_cast<int>(probs.size()) != plan.pseudo_num_classes()) {
    throw ArgumentError("probability vector has " +
                        std::to_string(probs.size()) + " entries, plan has " +
                        std::to_string(plan.pseudo_num_classes()) +
                        " pseudo-classes");
  }
  double sum = 0.0;
  for (const double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ArgumentError("probabilities must be finite and non-negative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ArgumentError("probabilities sum to " + std::to_string(sum));
  }
}

inline int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) -
                          values.begin());
}

}  // namespace detail

struct BinaryDecision {
  ClassId label;          // 0 = positive, 1 = negative
  double positive_score;  // probability mass of pseudo-class 0
};

inline BinaryDecision binarize_prediction(std::span<const double> pseudo_probs,
                                          const RegroupPlan& plan) {
  if (plan.original_num_classes() != 2 || plan.groups(0) != 1) {
    throw ArgumentError("binarize_prediction needs a binary plan with a "
                        "single positive group");
  }
  detail::check_probabilities(pseudo_probs, plan);
  const ClassId label = detail::argmax(pseudo_probs) == 0 ? 0 : 1;
  return {label, pseudo_probs[0]};
}

enum class CollapseRule {
  kPseudoArgmax,  // predicted class = original_of(argmax pseudo id)
  kSummedArgmax,  // predicted class = argmax of summed per-class scores
};

struct CollapsedPrediction {
  ClassId label;
  std::vector<double> scores;  // per original class, summed group mass
};

inline CollapsedPrediction collapse_prediction_multiclass(
    std::span<const double> pseudo_probs, const RegroupPlan& plan,
    CollapseRule rule = CollapseRule::kPseudoArgmax) {
  detail::check_probabilities(pseudo_probs, plan);
  std::vector<double> scores(plan.original_num_classes(), 0.0);
  for (int p = 0; p < plan.pseudo_num_classes(); ++p) {
    scores[plan.original_of(p)] += pseudo_probs[p];
  }
  const ClassId label = rule == CollapseRule::kPseudoArgmax
                            ? plan.original_of(detail::argmax(pseudo_probs))
                            : detail::argmax(scores);
  return {label, std::move(scores)};
}

}  // namespace regroup
