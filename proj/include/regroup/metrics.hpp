#pragma once

// Confusion-table metrics and average precision.
//
// For binary tables the positive class is class 0: TP counts class-0 rows
// predicted 0, FN class-0 rows predicted 1, FP class-1 rows predicted 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regroup/dataset.hpp"
#include "regroup/error.hpp"
#include "regroup/numeric.hpp"

namespace regroup {

// C x C counts, rows = true class, columns = predicted class.
class ConfusionTable {
 public:
  explicit ConfusionTable(int num_classes)
      : num_classes_(num_classes),
        counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
    if (num_classes < 1) throw ArgumentError("confusion table needs >= 1 class");
  }

  static ConfusionTable binary(std::size_t tp, std::size_t fp, std::size_t fn,
                               std::size_t tn) {
    ConfusionTable t(2);
    t.at(0, 0) = tp;
    t.at(0, 1) = fn;
    t.at(1, 0) = fp;
    t.at(1, 1) = tn;
    return t;
  }

  int num_classes() const { return num_classes_; }

  std::size_t& at(ClassId truth, ClassId predicted) {
    return counts_[static_cast<std::size_t>(truth) * num_classes_ + predicted];
  }
  std::size_t at(ClassId truth, ClassId predicted) const {
    return counts_[static_cast<std::size_t>(truth) * num_classes_ + predicted];
  }

  std::size_t total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
  }
  std::size_t row_sum(ClassId truth) const {
    std::size_t s = 0;
    for (ClassId p = 0; p < num_classes_; ++p) s += at(truth, p);
    return s;
  }
  std::size_t col_sum(ClassId predicted) const {
    std::size_t s = 0;
    for (ClassId t = 0; t < num_classes_; ++t) s += at(t, predicted);
    return s;
  }
  std::size_t trace() const {
    std::size_t s = 0;
    for (ClassId c = 0; c < num_classes_; ++c) s += at(c, c);
    return s;
  }

  std::size_t tp() const { return at(0, 0); }
  std::size_t fn() const { return at(0, 1); }
  std::size_t fp() const { return at(1, 0); }
  std::size_t tn() const { return at(1, 1); }

  friend bool operator==(const ConfusionTable&, const ConfusionTable&) = default;

 private:
  int num_classes_;
  std::vector<std::size_t> counts_;
};

// num_classes <= 0 means one more than the largest label seen.
inline ConfusionTable confusion_table(std::span<const ClassId> y_true,
                                      std::span<const ClassId> y_pred,
                                      int num_classes = 0) {
  if (y_true.size() != y_pred.size()) {
    throw ArgumentError("y_true has " + std::to_string(y_true.size()) +
                        " labels, y_pred has " + std::to_string(y_pred.size()));
  }
  if (num_classes <= 0) {
    ClassId top = 1;
    for (const ClassId y : y_true) top = std::max(top, y);
    for (const ClassId y : y_pred) top = std::max(top, y);
    num_classes = top + 1;
  }
  ConfusionTable table(num_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const ClassId t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw ArgumentError("label outside 0.." + std::to_string(num_classes - 1) +
                          " at position " + std::to_string(i));
    }
    ++table.at(t, p);
  }
  return table;
}

// Undefined quantities (precision with no predicted positives, recall or AP
// of a class absent from the ground truth) are std::nullopt.
struct MetricReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  std::vector<std::optional<double>> precision;
  std::vector<std::optional<double>> recall;
  std::vector<double> f1;  // undefined precision/recall count as 0
  std::vector<std::optional<double>> ap;
  std::optional<double> macro_ap;
  std::vector<std::string> warnings;

  int num_classes() const { return static_cast<int>(precision.size()); }
};

inline MetricReport summary_metrics(const ConfusionTable& ct) {
  const std::size_t n = ct.total();
  if (n == 0) throw ArgumentError("empty confusion table");
  const int c = ct.num_classes();
  MetricReport report;
  report.n = n;
  report.accuracy = static_cast<double>(ct.trace()) / static_cast<double>(n);
  report.precision.resize(c);
  report.recall.resize(c);
  report.f1.assign(c, 0.0);
  report.ap.resize(c);
  double recall_sum = 0.0;
  int recall_classes = 0;
  for (ClassId k = 0; k < c; ++k) {
    const double hit = static_cast<double>(ct.at(k, k));
    if (const std::size_t predicted = ct.col_sum(k); predicted > 0) {
      report.precision[k] = hit / static_cast<double>(predicted);
    }
    if (const std::size_t actual = ct.row_sum(k); actual > 0) {
      report.recall[k] = hit / static_cast<double>(actual);
      recall_sum += *report.recall[k];
      ++recall_classes;
    } else {
      report.warnings.push_back("class " + std::to_string(k) +
                                " absent from ground truth; excluded from "
                                "balanced accuracy");
    }
    const double p = report.precision[k].value_or(0.0);
    const double r = report.recall[k].value_or(0.0);
    report.f1[k] = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  report.balanced_accuracy = recall_sum / recall_classes;
  return report;
}

// Balanced error rate computed directly from per-sample error indicators:
// mean over present classes of the within-class error rate.
inline double balanced_error(std::span<const ClassId> y_true,
                             std::span<const ClassId> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    throw ArgumentError("balanced_error needs equal, non-empty label vectors");
  }
  const ClassId top = *std::max_element(y_true.begin(), y_true.end());
  std::vector<double> errors(top + 1, 0.0), sizes(top + 1, 0.0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    sizes[y_true[i]] += 1.0;
    errors[y_true[i]] += y_true[i] != y_pred[i] ? 1.0 : 0.0;
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0.0) continue;
    sum += errors[k] / sizes[k];
    ++present;
  }
  return sum / present;
}

namespace detail {

inline void check_ranking_inputs(std::span<const int> positive,
                                 std::span<const double> scores) {
  if (positive.size() != scores.size()) {
    throw ArgumentError("AP needs one score per label");
  }
  if (std::none_of(positive.begin(), positive.end(),
                   [](int v) { return v != 0; })) {
    throw ArgumentError("AP is undefined without positive samples");
  }
  for (const double s : scores) {
    if (!std::isfinite(s)) throw ArgumentError("AP needs finite scores");
  }
}

// Precision/recall after each block of tied scores, in descending score
// order. Returns (true-positive count, predicted-positive count) per block.
inline std::vector<std::pair<std::size_t, std::size_t>> pr_blocks(
    std::span<const int> positive, std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    tp += positive[order[k]] != 0;
    const bool block_end =
        k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]];
    if (block_end) blocks.emplace_back(tp, k + 1);
  }
  return blocks;
}

}  // namespace detail

// Step-interpolated AP: sum over score thresholds of
// (recall gain) x (precision at that threshold). All samples sharing a score
// enter together, so the result does not depend on the order of ties.
inline double average_precision(std::span<const int> positive,
                                std::span<const double> scores) {
  detail::check_ranking_inputs(positive, scores);
  const double n_pos = static_cast<double>(
      std::count_if(positive.begin(), positive.end(),
                    [](int v) { return v != 0; }));
  // Accumulate (new true positives) x precision and divide once, so a
  // perfect ranking yields exactly 1.
  double weighted = 0.0;
  std::size_t prev_tp = 0;
  for (const auto& [tp, predicted] : detail::pr_blocks(positive, scores)) {
    const double precision =
        static_cast<double>(tp) / static_cast<double>(predicted);
    weighted += static_cast<double>(tp - prev_tp) * precision;
    prev_tp = tp;
  }
  return weighted / n_pos;
}

// Trapezoidal area under the precision-recall curve starting from
// (recall 0, precision 1). Comparison only; AP is the reported metric.
inline double auprc_trapezoid(std::span<const int> positive,
                              std::span<const double> scores) {
  detail::check_ranking_inputs(positive, scores);
  const double n_pos = static_cast<double>(
      std::count_if(positive.begin(), positive.end(),
                    [](int v) { return v != 0; }));
  double area = 0.0, prev_recall = 0.0, prev_precision = 1.0;
  for (const auto& [tp, predicted] : detail::pr_blocks(positive, scores)) {
    const double recall = static_cast<double>(tp) / n_pos;
    const double precision =
        static_cast<double>(tp) / static_cast<double>(predicted);
    area += (recall - prev_recall) * 0.5 * (precision + prev_precision);
    prev_recall = recall;
    prev_precision = precision;
  }
  return area;
}

struct PerClassAp {
  std::vector<std::optional<double>> ap;
  std::optional<double> macro;
  std::vector<std::string> warnings;
};

// One-vs-rest AP with column c of scores as the score for class c.
inline PerClassAp per_class_ap(std::span<const ClassId> y_true,
                               const ScoreMatrix& scores) {
  if (scores.rows != y_true.size()) {
    throw ArgumentError("score matrix has " + std::to_string(scores.rows) +
                        " rows for " + std::to_string(y_true.size()) +
                        " labels");
  }
  PerClassAp out;
  out.ap.resize(scores.cols);
  std::vector<int> positive(y_true.size());
  std::vector<double> column(y_true.size());
  double sum = 0.0;
  int defined = 0;
  for (std::size_t c = 0; c < scores.cols; ++c) {
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      positive[i] = y_true[i] == static_cast<ClassId>(c);
      column[i] = scores(i, c);
    }
    if (std::find(positive.begin(), positive.end(), 1) == positive.end()) {
      out.warnings.push_back("class " + std::to_string(c) +
                             " absent from ground truth; AP undefined");
      continue;
    }
    out.ap[c] = average_precision(positive, column);
    sum += *out.ap[c];
    ++defined;
  }
  if (defined > 0) out.macro = sum / defined;
  return out;
}

// Threshold metrics from hard predictions plus ranking metrics from scores.
inline MetricReport evaluate(std::span<const ClassId> y_true,
                             std::span<const ClassId> y_pred,
                             const ScoreMatrix& scores) {
  MetricReport report = summary_metrics(
      confusion_table(y_true, y_pred, static_cast<int>(scores.cols)));
  PerClassAp ap = per_class_ap(y_true, scores);
  report.ap = std::move(ap.ap);
  report.macro_ap = ap.macro;
  report.warnings.insert(report.warnings.end(), ap.warnings.begin(),
                         ap.warnings.end());
  return report;
}

}  // namespace regroup
