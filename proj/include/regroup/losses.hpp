#pragma once

// Classification losses over logits with analytic gradients: cross-entropy,
// inverse-frequency weighted cross-entropy, focal loss and LDAM.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "regroup/dataset.hpp"
#include "regroup/error.hpp"

namespace regroup {

enum class LossKind { kCrossEntropy, kWeightedCrossEntropy, kFocal, kLdam };

inline std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy: return "CE";
    case LossKind::kWeightedCrossEntropy: return "WCE";
    case LossKind::kFocal: return "Focal";
    case LossKind::kLdam: return "LDAM";
  }
  return "?";
}

struct LossSpec {
  LossKind kind = LossKind::kCrossEntropy;
  double gamma = 2.0;         // focal
  double margin_scale = 0.0;  // LDAM: margin of class c is margin_scale / n_c^(1/4)
  double logit_scale = 30.0;  // LDAM
  std::vector<std::size_t> class_counts;  // WCE, LDAM

  static LossSpec cross_entropy() { return {}; }

  static LossSpec weighted(std::vector<std::size_t> counts) {
    LossSpec s;
    s.kind = LossKind::kWeightedCrossEntropy;
    s.class_counts = std::move(counts);
    s.validate();
    return s;
  }

  static LossSpec focal(double gamma = 2.0) {
    LossSpec s;
    s.kind = LossKind::kFocal;
    s.gamma = gamma;
    s.validate();
    return s;
  }

  static LossSpec ldam(std::vector<std::size_t> counts, double margin_scale,
                       double logit_scale) {
    LossSpec s;
    s.kind = LossKind::kLdam;
    s.class_counts = std::move(counts);
    s.margin_scale = margin_scale;
    s.logit_scale = logit_scale;
    s.validate();
    return s;
  }

  // Margin scale chosen so the largest class margin (smallest class) equals
  // max_margin.
  static LossSpec ldam_normalized(std::vector<std::size_t> counts,
                                  double max_margin = 0.5,
                                  double logit_scale = 30.0) {
    if (counts.empty()) throw ArgumentError("LDAM needs class counts");
    const std::size_t smallest = *std::min_element(counts.begin(), counts.end());
    const double scale =
        max_margin * std::pow(static_cast<double>(smallest), 0.25);
    return ldam(std::move(counts), scale, logit_scale);
  }

  void validate() const {
    const bool needs_counts = kind == LossKind::kWeightedCrossEntropy ||
                              kind == LossKind::kLdam;
    if (needs_counts) {
      if (class_counts.empty()) {
        throw ArgumentError(to_string(kind) + " needs class counts");
      }
      for (const std::size_t n : class_counts) {
        if (n == 0) {
          throw ArgumentError(to_string(kind) +
                              " needs strictly positive class counts");
        }
      }
    }
    if (kind == LossKind::kFocal && !(gamma >= 0.0)) {
      throw ArgumentError("focal gamma must be >= 0");
    }
    if (kind == LossKind::kLdam &&
        (!(margin_scale >= 0.0) || !(logit_scale > 0.0))) {
      throw ArgumentError("LDAM needs margin_scale >= 0 and logit_scale > 0");
    }
  }

  // Mean-one inverse-frequency weight n / (C * n_c).
  double class_weight(ClassId c) const {
    const double total = static_cast<double>(
        std::accumulate(class_counts.begin(), class_counts.end(),
                        std::size_t{0}));
    return total / (static_cast<double>(class_counts.size()) *
                    static_cast<double>(class_counts[c]));
  }

  double margin(ClassId c) const {
    return margin_scale / std::pow(static_cast<double>(class_counts[c]), 0.25);
  }
};

inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ArgumentError("softmax of an empty vector");
  for (const double z : logits) {
    if (std::isnan(z)) throw ArgumentError("softmax input contains NaN");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - top);
    sum += out[k];
  }
  for (double& p : out) p /= sum;
  return out;
}

namespace detail {

inline double log_sum_exp(std::span<const double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (const double v : z) sum += std::exp(v - top);
  return top + std::log(sum);
}

// -log softmax(z)[y]. When z[y] is the largest logit this is
// log1p(sum_{k != y} exp(z_k - z_y)), which keeps full relative precision
// for confident predictions.
inline double negative_log_softmax(std::span<const double> z, std::size_t y) {
  const double top = *std::max_element(z.begin(), z.end());
  if (z[y] == top) {
    double rest = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (k != y) rest += std::exp(z[k] - z[y]);
    }
    return std::log1p(rest);
  }
  return log_sum_exp(z) - z[y];
}

// Softmax probabilities and the gradient of -log p_y with respect to z.
// The label entry is -(sum of the other probabilities) rather than p_y - 1.
inline void softmax_nll_gradient(std::span<const double> z, std::size_t y,
                                 std::vector<double>& p,
                                 std::span<double> grad) {
  const double lse = log_sum_exp(z);
  p.resize(z.size());
  double rest = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - lse);
    if (k != y) rest += p[k];
  }
  for (std::size_t k = 0; k < z.size(); ++k) grad[k] = k == y ? -rest : p[k];
}

inline void check_loss_inputs(std::span<const double> logits, ClassId label,
                              const LossSpec& spec) {
  if (logits.empty()) throw ArgumentError("empty logit vector");
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw ArgumentError("label " + std::to_string(label) + " invalid for " +
                        std::to_string(logits.size()) + " classes");
  }
  for (const double z : logits) {
    if (!std::isfinite(z)) throw ArgumentError("non-finite logit");
  }
  if ((spec.kind == LossKind::kWeightedCrossEntropy ||
       spec.kind == LossKind::kLdam) &&
      spec.class_counts.size() != logits.size()) {
    throw ArgumentError(to_string(spec.kind) + " has " +
                        std::to_string(spec.class_counts.size()) +
                        " class counts for " + std::to_string(logits.size()) +
                        " logits");
  }
}

}  // namespace detail

// Writes dloss/dlogits into grad (same length as logits) and returns the
// loss value.
inline double loss_and_gradient(std::span<const double> logits, ClassId label,
                                const LossSpec& spec, std::span<double> grad) {
  detail::check_loss_inputs(logits, label, spec);
  const std::size_t c = logits.size();
  const std::size_t y = static_cast<std::size_t>(label);
  std::vector<double> p;
  switch (spec.kind) {
    case LossKind::kCrossEntropy:
    case LossKind::kWeightedCrossEntropy: {
      const double w = spec.kind == LossKind::kCrossEntropy
                           ? 1.0
                           : spec.class_weight(label);
      detail::softmax_nll_gradient(logits, y, p, grad);
      for (double& g : grad) g *= w;
      return w * detail::negative_log_softmax(logits, y);
    }
    case LossKind::kFocal: {
      // With rest = 1 - p_y: loss = -rest^g log p_y, and
      // dloss/dz_k = factor * ([k == y] - p_k).
      const double nll = detail::negative_log_softmax(logits, y);
      detail::softmax_nll_gradient(logits, y, p, grad);
      const double rest = -grad[y];
      const double py = p[y];
      const double modulator = std::pow(rest, spec.gamma);
      double factor = -modulator;
      if (spec.gamma > 0.0 && rest > 0.0) {
        factor -= spec.gamma * std::pow(rest, spec.gamma - 1.0) * py * nll;
      }
      for (std::size_t k = 0; k < c; ++k) {
        grad[k] = factor * (k == y ? rest : -p[k]);
      }
      return modulator * nll;
    }
    case LossKind::kLdam: {
      std::vector<double> adjusted(logits.begin(), logits.end());
      adjusted[y] -= spec.margin(label);
      for (double& z : adjusted) z *= spec.logit_scale;
      detail::softmax_nll_gradient(adjusted, y, p, grad);
      for (double& g : grad) g *= spec.logit_scale;
      return detail::negative_log_softmax(adjusted, y);
    }
  }
  return 0.0;
}

inline double loss_value(std::span<const double> logits, ClassId label,
                         const LossSpec& spec) {
  std::vector<double> grad(logits.size());
  return loss_and_gradient(logits, label, spec, grad);
}

inline std::vector<double> loss_gradient(std::span<const double> logits,
                                         ClassId label, const LossSpec& spec) {
  std::vector<double> grad(logits.size());
  loss_and_gradient(logits, label, spec, grad);
  return grad;
}

}  // namespace regroup
