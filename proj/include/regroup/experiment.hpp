#pragma once

// Benchmark harness: seeded, deterministic pipelines comparing plain CE, the
// imbalance-aware losses, the resamplers and regrouping (RG+CE).
//
// Pipeline per (method, seed):
//   load or generate -> stratified split -> standardize (train statistics)
//   -> method transform (resample | regroup) -> train -> predict on test
//   -> (RG: collapse pseudo-classes) -> metrics.
//
// Every random stream is derived from the run seed alone, never from the
// method, so two methods that reduce to the same training problem produce
// bit-identical results.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "regroup/dataset.hpp"
#include "regroup/error.hpp"
#include "regroup/io.hpp"
#include "regroup/losses.hpp"
#include "regroup/metrics.hpp"
#include "regroup/random.hpp"
#include "regroup/regrouping.hpp"
#include "regroup/resampling.hpp"
#include "regroup/trainer.hpp"

namespace regroup {

enum class MethodKind { kCE, kWCE, kFocal, kLDAM, kROS, kRUS, kSMOTE, kRG };

struct Method {
  MethodKind kind = MethodKind::kCE;
  double gamma = 2.0;             // Focal
  double ldam_max_margin = 0.5;   // LDAM
  double ldam_scale = 30.0;       // LDAM
  int smote_k = 5;                // SMOTE+CE
  std::optional<int> forced_k;    // RG+CE, binary only
  CollapseRule collapse = CollapseRule::kPseudoArgmax;  // RG+CE

  std::string name() const {
    switch (kind) {
      case MethodKind::kCE: return "CE";
      case MethodKind::kWCE: return "WCE";
      case MethodKind::kFocal: return "Focal";
      case MethodKind::kLDAM: return "LDAM";
      case MethodKind::kROS: return "ROS+CE";
      case MethodKind::kRUS: return "RUS+CE";
      case MethodKind::kSMOTE: return "SMOTE+CE";
      case MethodKind::kRG: return "RG+CE";
    }
    return "?";
  }

  void validate() const {
    if (kind == MethodKind::kFocal && !(gamma >= 0.0)) {
      throw ArgumentError("Focal gamma must be >= 0");
    }
    if (kind == MethodKind::kLDAM &&
        (!(ldam_max_margin >= 0.0) || !(ldam_scale > 0.0))) {
      throw ArgumentError("LDAM needs max_margin >= 0 and scale > 0");
    }
    if (kind == MethodKind::kSMOTE && smote_k < 1) {
      throw ArgumentError("SMOTE k_neighbors must be >= 1");
    }
    if (kind == MethodKind::kRG && forced_k && *forced_k < 1) {
      throw ArgumentError("RG K must be >= 1");
    }
  }
};

struct CsvSource {
  std::string path;
  std::string label_column = "label";
};

// Generated per run from the run seed: "rg_favorable" or "overlap".
struct BuiltinSource {
  std::string family;
};

using DatasetSource = std::variant<CsvSource, MixtureSpec, BuiltinSource>;

enum class ClusterSpace { kStandardized, kRaw };

struct ExperimentConfig {
  DatasetSource dataset = BuiltinSource{"rg_favorable"};
  double split_fraction = 0.2;
  bool standardize = true;
  ClusterSpace cluster_space = ClusterSpace::kStandardized;
  std::vector<std::size_t> hidden_dims{32};
  TrainConfig train = TrainConfig::desk();
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  std::string output = "results";
  int jobs = 1;

  void validate() const {
    if (methods.empty()) throw ArgumentError("config needs at least one method");
    if (seeds.empty()) throw ArgumentError("config needs at least one seed");
    if (jobs < 1) throw ArgumentError("jobs must be >= 1");
    for (const Method& m : methods) m.validate();
    train.validate();
  }
};

struct ResultRow {
  std::string method;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::optional<int> k;  // RG: K (binary) or pseudo-class count (multiclass)
  std::size_t train_size = 0;
  double accuracy = NAN;
  double balanced_accuracy = NAN;
  std::optional<double> macro_ap;
  std::vector<std::optional<double>> ap;
  std::string config_hash;
  double wall_time_s = 0.0;
};

// Internals of one run, for provenance checks in tests.
struct PipelineTrace {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::optional<Standardizer> stats;
  std::optional<RegroupPlan> plan;
  std::vector<ClassId> test_labels;
  ScoreMatrix test_scores;
  std::vector<ClassId> test_predictions;
};

// ---------------------------------------------------------------------------
// Config (de)serialization

inline MixtureSpec builtin_mixture(const std::string& family,
                                   std::uint64_t seed) {
  if (family == "rg_favorable") return ring_mixture_spec(seed);
  if (family == "overlap") return overlap_mixture_spec(seed);
  throw ArgumentError("unknown builtin dataset family '" + family + "'");
}

inline Json method_to_json(const Method& m) {
  Json j;
  j["kind"] = m.name();
  switch (m.kind) {
    case MethodKind::kFocal: j["gamma"] = m.gamma; break;
    case MethodKind::kLDAM:
      j["max_margin"] = m.ldam_max_margin;
      j["scale"] = m.ldam_scale;
      break;
    case MethodKind::kSMOTE: j["k_neighbors"] = m.smote_k; break;
    case MethodKind::kRG:
      j["k"] = m.forced_k ? Json(*m.forced_k) : Json(nullptr);
      j["collapse"] = m.collapse == CollapseRule::kPseudoArgmax
                          ? "pseudo_argmax"
                          : "summed_argmax";
      break;
    default: break;
  }
  return j;
}

inline Method method_from_json(const Json& j) {
  const std::string kind =
      j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
  Method m;
  if (kind == "CE") m.kind = MethodKind::kCE;
  else if (kind == "WCE") m.kind = MethodKind::kWCE;
  else if (kind == "Focal") m.kind = MethodKind::kFocal;
  else if (kind == "LDAM") m.kind = MethodKind::kLDAM;
  else if (kind == "ROS+CE" || kind == "ROS") m.kind = MethodKind::kROS;
  else if (kind == "RUS+CE" || kind == "RUS") m.kind = MethodKind::kRUS;
  else if (kind == "SMOTE+CE" || kind == "SMOTE") m.kind = MethodKind::kSMOTE;
  else if (kind == "RG+CE" || kind == "RG") m.kind = MethodKind::kRG;
  else throw ArgumentError("unknown method '" + kind + "'");
  if (j.is_object()) {
    m.gamma = j.value("gamma", m.gamma);
    m.ldam_max_margin = j.value("max_margin", m.ldam_max_margin);
    m.ldam_scale = j.value("scale", m.ldam_scale);
    m.smote_k = j.value("k_neighbors", m.smote_k);
    if (j.contains("k") && !j.at("k").is_null()) m.forced_k = j.at("k").get<int>();
    const std::string collapse = j.value("collapse", std::string("pseudo_argmax"));
    if (collapse == "pseudo_argmax") {
      m.collapse = CollapseRule::kPseudoArgmax;
    } else if (collapse == "summed_argmax") {
      m.collapse = CollapseRule::kSummedArgmax;
    } else {
      throw ArgumentError("unknown collapse rule '" + collapse + "'");
    }
  }
  m.validate();
  return m;
}

inline Json config_to_json(const ExperimentConfig& cfg) {
  Json j;
  if (const auto* csv = std::get_if<CsvSource>(&cfg.dataset)) {
    j["dataset"] = {{"csv", csv->path}, {"label_column", csv->label_column}};
  } else if (const auto* mix = std::get_if<MixtureSpec>(&cfg.dataset)) {
    j["dataset"] = {{"mixture", mixture_to_json(*mix)}};
  } else {
    j["dataset"] = {{"builtin", std::get<BuiltinSource>(cfg.dataset).family}};
  }
  j["split_fraction"] = cfg.split_fraction;
  j["standardize"] = cfg.standardize;
  j["cluster_space"] =
      cfg.cluster_space == ClusterSpace::kStandardized ? "standardized" : "raw";
  j["mlp"] = {{"hidden_dims", cfg.hidden_dims}};
  j["train"] = {{"learning_rate", cfg.train.lr_max},
                {"lr_min", cfg.train.lr_min},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"momentum", cfg.train.momentum},
                {"weight_decay", cfg.train.weight_decay}};
  Json methods = Json::array();
  for (const Method& m : cfg.methods) methods.push_back(method_to_json(m));
  j["methods"] = std::move(methods);
  j["seeds"] = cfg.seeds;
  j["output"] = cfg.output;
  j["jobs"] = cfg.jobs;
  return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  static const std::vector<std::string> known{
      "dataset", "split_fraction", "standardize", "cluster_space", "mlp",
      "train",   "methods",        "seeds",       "output",        "jobs"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ArgumentError("unknown config key '" + key + "'");
    }
  }
  if (j.contains("dataset")) {
    const Json& d = j.at("dataset");
    if (d.contains("csv")) {
      cfg.dataset = CsvSource{d.at("csv").get<std::string>(),
                              d.value("label_column", std::string("label"))};
    } else if (d.contains("mixture")) {
      cfg.dataset = mixture_from_json(d.at("mixture"));
    } else if (d.contains("builtin")) {
      const std::string family = d.at("builtin").get<std::string>();
      builtin_mixture(family, 0);  // validates the name
      cfg.dataset = BuiltinSource{family};
    } else {
      throw ArgumentError("dataset needs one of 'csv', 'mixture', 'builtin'");
    }
  }
  cfg.split_fraction = j.value("split_fraction", cfg.split_fraction);
  cfg.standardize = j.value("standardize", cfg.standardize);
  const std::string space = j.value("cluster_space", std::string("standardized"));
  if (space == "standardized") {
    cfg.cluster_space = ClusterSpace::kStandardized;
  } else if (space == "raw") {
    cfg.cluster_space = ClusterSpace::kRaw;
  } else {
    throw ArgumentError("cluster_space must be 'standardized' or 'raw'");
  }
  if (j.contains("mlp")) {
    cfg.hidden_dims = j.at("mlp").value("hidden_dims", cfg.hidden_dims);
  }
  if (j.contains("train")) {
    const Json& t = j.at("train");
    cfg.train.lr_max = t.value("learning_rate", cfg.train.lr_max);
    cfg.train.lr_min = t.value("lr_min", cfg.train.lr_min);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.momentum = t.value("momentum", cfg.train.momentum);
    cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
  }
  for (const Json& m : j.value("methods", Json::array())) {
    cfg.methods.push_back(method_from_json(m));
  }
  cfg.seeds = j.value("seeds", std::vector<std::uint64_t>{});
  cfg.output = j.value("output", cfg.output);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError("config file '" + path + "': " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError("config file '" + path + "': " + e.what());
  }
}

// 64-bit FNV-1a of the canonical JSON form, as 16 hex digits. The output
// directory and worker count do not affect results and are left out.
inline std::string config_hash(const ExperimentConfig& cfg) {
  Json j = config_to_json(cfg);
  j.erase("output");
  j.erase("jobs");
  const std::string text = j.dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

// ---------------------------------------------------------------------------
// Pipeline

namespace detail {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw Error(std::string(name) + ": " + e.what());
  }
}

inline Dataset load_source(const DatasetSource& source, std::uint64_t seed) {
  if (const auto* csv = std::get_if<CsvSource>(&source)) {
    return load_csv_dataset(csv->path, csv->label_column);
  }
  if (const auto* mix = std::get_if<MixtureSpec>(&source)) {
    return generate_imbalanced_mixture(*mix);
  }
  return generate_imbalanced_mixture(builtin_mixture(
      std::get<BuiltinSource>(source).family, derive_seed(seed, "data")));
}

inline LossSpec loss_for(const Method& m, const Dataset& train) {
  switch (m.kind) {
    case MethodKind::kWCE: return LossSpec::weighted(train.class_counts());
    case MethodKind::kFocal: return LossSpec::focal(m.gamma);
    case MethodKind::kLDAM:
      return LossSpec::ldam_normalized(train.class_counts(), m.ldam_max_margin,
                                       m.ldam_scale);
    default: return LossSpec::cross_entropy();
  }
}

}  // namespace detail

// Throws Error annotated with the failing stage.
inline ResultRow run_experiment(const ExperimentConfig& cfg,
                                const Method& method, std::uint64_t seed,
                                PipelineTrace* trace = nullptr) {
  const auto started = std::chrono::steady_clock::now();
  ResultRow row;
  row.method = method.name();
  row.seed = seed;
  row.config_hash = config_hash(cfg);

  const Dataset data =
      detail::stage("load", [&] { return detail::load_source(cfg.dataset, seed); });
  TrainTestSplit split = detail::stage("split", [&] {
    return stratified_split(data, cfg.split_fraction, derive_seed(seed, "split"));
  });
  Dataset train_set = split.train;
  Dataset test_set = split.test;
  if (cfg.standardize) {
    detail::stage("standardize", [&] {
      const Dataset others[] = {split.test};
      StandardizedData s = standardize(split.train, others);
      train_set = std::move(s.train);
      test_set = std::move(s.others.front());
      if (trace) trace->stats = std::move(s.stats);
    });
  }

  std::optional<RegroupPlan> plan;
  Dataset fit_data = detail::stage("transform", [&]() -> Dataset {
    switch (method.kind) {
      case MethodKind::kROS:
      case MethodKind::kRUS:
      case MethodKind::kSMOTE: {
        ResampleSpec spec;
        spec.kind = method.kind == MethodKind::kROS ? ResampleKind::kOversample
                    : method.kind == MethodKind::kRUS
                        ? ResampleKind::kUndersample
                        : ResampleKind::kSmote;
        spec.k_neighbors = method.smote_k;
        spec.seed = derive_seed(seed, "resample");
        return resample(train_set, spec);
      }
      case MethodKind::kRG: {
        const Dataset& space = cfg.cluster_space == ClusterSpace::kRaw
                                   ? split.train
                                   : train_set;
        const std::uint64_t cluster_seed = derive_seed(seed, "cluster");
        std::optional<RegroupResult> result;
        if (train_set.num_classes() == 2) {
          const int k = method.forced_k.value_or(
              compute_k(train_set.class_counts()[1], train_set.class_counts()[0]));
          result.emplace(regroup_binary(space, k, cluster_seed));
          row.k = k;
        } else {
          if (method.forced_k) {
            throw ArgumentError("a forced K applies to binary problems only");
          }
          result.emplace(regroup_multiclass(space, cluster_seed));
          row.k = result->plan.pseudo_num_classes();
        }
        plan.emplace(result->plan);
        return Dataset(train_set.features(), result->pseudo_train.labels(),
                       result->pseudo_train.num_classes(),
                       result->pseudo_train.class_names());
      }
      default: return train_set;
    }
  });
  row.train_size = fit_data.size();

  const TrainResult trained = detail::stage("train", [&] {
    MlpSpec spec;
    spec.input_dim = fit_data.dim();
    spec.hidden_dims = cfg.hidden_dims;
    spec.output_dim = static_cast<std::size_t>(fit_data.num_classes());
    spec.init_seed = derive_seed(seed, "init");
    TrainConfig tc = cfg.train;
    tc.shuffle_seed = derive_seed(seed, "shuffle");
    return regroup::train(fit_data, spec, detail::loss_for(method, fit_data), tc);
  });

  detail::stage("evaluate", [&] {
    const ScoreMatrix proba = predict_proba(trained.model, test_set.features());
    ScoreMatrix scores;
    std::vector<ClassId> predicted;
    if (plan) {
      scores = ScoreMatrix(proba.rows, plan->original_num_classes());
      predicted.resize(proba.rows);
      for (std::size_t i = 0; i < proba.rows; ++i) {
        const CollapsedPrediction c =
            collapse_prediction_multiclass(proba.row(i), *plan, method.collapse);
        std::copy(c.scores.begin(), c.scores.end(), scores.row(i).begin());
        predicted[i] = c.label;
      }
    } else {
      scores = proba;
      predicted = argmax_rows(proba);
    }
    const MetricReport report = evaluate(test_set.labels(), predicted, scores);
    row.accuracy = report.accuracy;
    row.balanced_accuracy = report.balanced_accuracy;
    row.macro_ap = report.macro_ap;
    row.ap = report.ap;
    if (trace) {
      trace->test_labels = test_set.labels();
      trace->test_scores = std::move(scores);
      trace->test_predictions = std::move(predicted);
    }
  });

  if (trace) {
    trace->train_indices = split.train_indices;
    trace->test_indices = split.test_indices;
    trace->plan = std::move(plan);
  }
  row.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - started)
                        .count();
  return row;
}

struct AggregateRow {
  std::string method;
  std::size_t runs = 0;    // successful cells
  std::size_t failed = 0;
  double accuracy_mean = NAN, accuracy_std = NAN;
  double ba_mean = NAN, ba_std = NAN;
  double macro_ap_mean = NAN, macro_ap_std = NAN;
  std::vector<double> ap_mean, ap_std;
};

struct GridResult {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;

  bool all_ok() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const ResultRow& r) { return r.ok; });
  }
};

namespace detail {

// Mean and population standard deviation of the finite values.
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  std::vector<double> finite;
  for (const double x : v) if (std::isfinite(x)) finite.push_back(x);
  if (finite.empty()) return {NAN, NAN};
  double mean = 0.0;
  for (const double x : finite) mean += x;
  mean /= static_cast<double>(finite.size());
  double var = 0.0;
  for (const double x : finite) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(finite.size()))};
}

}  // namespace detail

inline std::vector<AggregateRow> aggregate(const ExperimentConfig& cfg,
                                           const std::vector<ResultRow>& rows) {
  std::vector<AggregateRow> out;
  for (const Method& m : cfg.methods) {
    const std::string name = m.name();
    if (std::any_of(out.begin(), out.end(),
                    [&](const AggregateRow& a) { return a.method == name; })) {
      continue;
    }
    AggregateRow agg;
    agg.method = name;
    std::vector<double> acc, ba, map;
    std::vector<std::vector<double>> ap;
    for (const ResultRow& r : rows) {
      if (r.method != name) continue;
      if (!r.ok) {
        ++agg.failed;
        continue;
      }
      ++agg.runs;
      acc.push_back(r.accuracy);
      ba.push_back(r.balanced_accuracy);
      map.push_back(r.macro_ap.value_or(NAN));
      if (ap.size() < r.ap.size()) ap.resize(r.ap.size());
      for (std::size_t c = 0; c < r.ap.size(); ++c) {
        ap[c].push_back(r.ap[c].value_or(NAN));
      }
    }
    std::tie(agg.accuracy_mean, agg.accuracy_std) = detail::mean_std(acc);
    std::tie(agg.ba_mean, agg.ba_std) = detail::mean_std(ba);
    std::tie(agg.macro_ap_mean, agg.macro_ap_std) = detail::mean_std(map);
    for (const auto& col : ap) {
      const auto [m_, s_] = detail::mean_std(col);
      agg.ap_mean.push_back(m_);
      agg.ap_std.push_back(s_);
    }
    out.push_back(std::move(agg));
  }
  return out;
}

// Cells are ordered method-major, seed-minor, matching the config. Failed
// cells are recorded with their error and the grid continues.
inline GridResult run_grid(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) cells.emplace_back(m, s);
  }
  std::vector<ResultRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    const Method& method = cfg.methods[cells[i].first];
    const std::uint64_t seed = cfg.seeds[cells[i].second];
    try {
      rows[i] = run_experiment(cfg, method, seed);
    } catch (const std::exception& e) {
      ResultRow failed;
      failed.method = method.name();
      failed.seed = seed;
      failed.ok = false;
      failed.error = e.what();
      failed.config_hash = config_hash(cfg);
      rows[i] = std::move(failed);
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), cells.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  GridResult result;
  result.aggregates = aggregate(cfg, rows);
  result.rows = std::move(rows);
  return result;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
  }
  return s;
}

inline std::string number_or_empty(double v) {
  return std::isfinite(v) ? format_double(v) : std::string();
}

inline std::size_t max_classes(const std::vector<ResultRow>& rows) {
  std::size_t c = 0;
  for (const auto& r : rows) c = std::max(c, r.ap.size());
  return c;
}

}  // namespace detail

// results.csv: one row per cell. Columns
//   method,seed,status,k,train_size,accuracy,balanced_accuracy,macro_ap,
//   ap_0..ap_{C-1},config_hash,error,wall_time_s
// Undefined values are empty; wall_time_s is the only non-deterministic
// column and always comes last.
inline void write_results_csv(std::ostream& out,
                              const std::vector<ResultRow>& rows) {
  const std::size_t classes = detail::max_classes(rows);
  out << "method,seed,status,k,train_size,accuracy,balanced_accuracy,macro_ap";
  for (std::size_t c = 0; c < classes; ++c) out << ",ap_" << c;
  out << ",config_hash,error,wall_time_s\n";
  for (const ResultRow& r : rows) {
    out << r.method << ',' << r.seed << ',' << (r.ok ? "ok" : "error") << ','
        << (r.k ? std::to_string(*r.k) : "") << ',' << r.train_size << ','
        << detail::number_or_empty(r.accuracy) << ','
        << detail::number_or_empty(r.balanced_accuracy) << ','
        << detail::optional_csv(r.macro_ap);
    for (std::size_t c = 0; c < classes; ++c) {
      out << ',' << (c < r.ap.size() ? detail::optional_csv(r.ap[c]) : "");
    }
    out << ',' << r.config_hash << ',' << detail::csv_safe(r.error) << ','
        << detail::format_double(r.wall_time_s) << '\n';
  }
}

// Aligned plain-text table, one line per method: mean +- population std.
inline void write_summary(std::ostream& out, const GridResult& grid) {
  const std::size_t classes = detail::max_classes(grid.rows);
  auto cell = [](double mean, double sd) {
    if (!std::isfinite(mean)) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << mean << " +- " << sd;
    return s.str();
  };
  std::vector<std::string> header{"method", "runs", "failed", "accuracy",
                                  "balanced_acc", "macro_ap"};
  for (std::size_t c = 0; c < classes; ++c) header.push_back("ap_" + std::to_string(c));
  std::vector<std::vector<std::string>> lines{header};
  for (const AggregateRow& a : grid.aggregates) {
    std::vector<std::string> line{a.method, std::to_string(a.runs),
                                  std::to_string(a.failed),
                                  cell(a.accuracy_mean, a.accuracy_std),
                                  cell(a.ba_mean, a.ba_std),
                                  cell(a.macro_ap_mean, a.macro_ap_std)};
    for (std::size_t c = 0; c < classes; ++c) {
      line.push_back(c < a.ap_mean.size() ? cell(a.ap_mean[c], a.ap_std[c])
                                          : "n/a");
    }
    lines.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : lines) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      width[k] = std::max(width[k], line[k].size());
    }
  }
  for (const auto& line : lines) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      out << std::left << std::setw(static_cast<int>(width[k]) + 2) << line[k];
    }
    out << '\n';
  }
}

inline void write_grid(const GridResult& grid, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream results(std::filesystem::path(dir) / "results.csv");
  std::ofstream summary(std::filesystem::path(dir) / "summary.txt");
  if (!results || !summary) {
    throw DataError("cannot write results into '" + dir + "'");
  }
  write_results_csv(results, grid.rows);
  write_summary(summary, grid);
}

}  // namespace regroup
