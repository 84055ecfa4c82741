#pragma once

// JSON and CSV serialization of plans, metric reports and mixture specs.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regroup/dataset.hpp"
#include "regroup/kmeans.hpp"
#include "regroup/metrics.hpp"
#include "regroup/regrouping.hpp"

namespace regroup {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json optional_json(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline std::string optional_csv(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline Json matrix_json(const FeatureMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

}  // namespace detail

// Audit format:
// {"original_num_classes": C, "pseudo_num_classes": P,
//  "classes": [{"class": c, "groups": g, "pseudo_ids": [...],
//               "centroids": [[...], ...] | null, "inertia": x | null}],
//  "warnings": [...]}
inline Json plan_to_json(const RegroupPlan& plan) {
  Json classes = Json::array();
  for (ClassId c = 0; c < plan.original_num_classes(); ++c) {
    Json entry;
    entry["class"] = c;
    entry["groups"] = plan.groups(c);
    std::vector<int> ids;
    for (int j = 0; j < plan.groups(c); ++j) ids.push_back(plan.pseudo_of(c, j));
    entry["pseudo_ids"] = ids;
    if (const auto& model = plan.cluster_model(c)) {
      entry["centroids"] = detail::matrix_json(model->centroids);
      entry["inertia"] = model->inertia;
    } else {
      entry["centroids"] = nullptr;
      entry["inertia"] = nullptr;
    }
    classes.push_back(std::move(entry));
  }
  Json out;
  out["original_num_classes"] = plan.original_num_classes();
  out["pseudo_num_classes"] = plan.pseudo_num_classes();
  out["classes"] = std::move(classes);
  out["warnings"] = plan.warnings();
  return out;
}

inline Json report_to_json(const MetricReport& r) {
  Json out;
  out["n"] = r.n;
  out["accuracy"] = r.accuracy;
  out["balanced_accuracy"] = r.balanced_accuracy;
  Json classes = Json::array();
  for (int c = 0; c < r.num_classes(); ++c) {
    Json entry;
    entry["class"] = c;
    entry["precision"] = detail::optional_json(r.precision[c]);
    entry["recall"] = detail::optional_json(r.recall[c]);
    entry["f1"] = r.f1[c];
    entry["ap"] = detail::optional_json(r.ap[c]);
    classes.push_back(std::move(entry));
  }
  out["classes"] = std::move(classes);
  out["macro_ap"] = detail::optional_json(r.macro_ap);
  out["warnings"] = r.warnings;
  return out;
}

inline std::string report_csv_header(int num_classes) {
  std::string h = "n,accuracy,balanced_accuracy,macro_ap";
  for (int c = 0; c < num_classes; ++c) {
    const std::string k = std::to_string(c);
    h += ",precision_" + k + ",recall_" + k + ",f1_" + k + ",ap_" + k;
  }
  return h;
}

// Undefined values are empty cells.
inline std::string report_csv_row(const MetricReport& r) {
  std::string row = std::to_string(r.n) + "," +
                    detail::format_double(r.accuracy) + "," +
                    detail::format_double(r.balanced_accuracy) + "," +
                    detail::optional_csv(r.macro_ap);
  for (int c = 0; c < r.num_classes(); ++c) {
    row += "," + detail::optional_csv(r.precision[c]) + "," +
           detail::optional_csv(r.recall[c]) + "," +
           detail::format_double(r.f1[c]) + "," +
           detail::optional_csv(r.ap[c]);
  }
  return row;
}

inline Json component_to_json(const GaussianComponent& c) {
  Json out;
  out["mean"] = c.mean;
  out["stddev"] = c.stddev;
  out["count"] = c.count;
  return out;
}

inline GaussianComponent component_from_json(const Json& j) {
  GaussianComponent c;
  c.mean = j.at("mean").get<std::vector<double>>();
  c.stddev = j.at("stddev").get<double>();
  c.count = j.at("count").get<std::size_t>();
  return c;
}

// {"minority": {...}, "majority_components": [{...}], "seed": s}
inline Json mixture_to_json(const MixtureSpec& spec) {
  Json out;
  out["minority"] = component_to_json(spec.minority);
  Json comps = Json::array();
  for (const auto& c : spec.majority_components) {
    comps.push_back(component_to_json(c));
  }
  out["majority_components"] = std::move(comps);
  out["seed"] = spec.seed;
  return out;
}

inline MixtureSpec mixture_from_json(const Json& j) {
  MixtureSpec spec;
  spec.minority = component_from_json(j.at("minority"));
  for (const auto& c : j.at("majority_components")) {
    spec.majority_components.push_back(component_from_json(c));
  }
  spec.seed = j.value("seed", std::uint64_t{0});
  validate(spec);
  return spec;
}

}  // namespace regroup
