#pragma once

// Labeled feature-vector datasets: checked containers, CSV ingest/export,
// synthetic Gaussian mixtures, stratified splitting and standardization.
//
// Label convention for binary problems: class 0 is the positive (minority)
// class and class 1 the negative (majority) class.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "regroup/error.hpp"
#include "regroup/numeric.hpp"
#include "regroup/random.hpp"

namespace regroup {

using ClassId = int;

// Dense row-major n x D matrix of finite doubles, n >= 1 and D >= 1.
class FeatureMatrix {
 public:
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows_ < 1 || cols_ < 1) {
      throw DataError("feature matrix must have at least one row and column");
    }
    if (values_.size() != rows_ * cols_) {
      throw DataError("feature matrix has " + std::to_string(values_.size()) +
                      " values, expected " + std::to_string(rows_ * cols_));
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) {
        throw DataError("non-finite feature at row " +
                        std::to_string(k / cols_) + ", column " +
                        std::to_string(k % cols_));
      }
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * cols_ + j];
  }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }

  const std::vector<double>& values() const { return values_; }

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const {
    std::vector<double> out;
    out.reserve(indices.size() * cols_);
    for (const std::size_t i : indices) {
      const auto r = row(i);
      out.insert(out.end(), r.begin(), r.end());
    }
    return FeatureMatrix(indices.size(), cols_, std::move(out));
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

// Features plus labels in 0..num_classes-1. Class counts are derived from
// the labels at construction, so they are always consistent.
class Dataset {
 public:
  Dataset(FeatureMatrix features, std::vector<ClassId> labels, int num_classes,
          std::vector<std::string> class_names = {})
      : features_(std::move(features)),
        labels_(std::move(labels)),
        num_classes_(num_classes),
        class_names_(std::move(class_names)) {
    if (labels_.size() != features_.rows()) {
      throw DataError("label count " + std::to_string(labels_.size()) +
                      " does not match row count " +
                      std::to_string(features_.rows()));
    }
    if (num_classes_ < 1) throw DataError("dataset needs at least one class");
    if (!class_names_.empty() &&
        class_names_.size() != static_cast<std::size_t>(num_classes_)) {
      throw DataError("class_names size does not match num_classes");
    }
    class_counts_.assign(num_classes_, 0);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const ClassId y = labels_[i];
      if (y < 0 || y >= num_classes_) {
        throw DataError("label " + std::to_string(y) + " at row " +
                        std::to_string(i) + " outside 0.." +
                        std::to_string(num_classes_ - 1));
      }
      ++class_counts_[y];
    }
  }

  std::size_t size() const { return features_.rows(); }
  std::size_t dim() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }
  const FeatureMatrix& features() const { return features_; }
  const std::vector<ClassId>& labels() const { return labels_; }
  const std::vector<std::size_t>& class_counts() const { return class_counts_; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  bool all_classes_present() const {
    return std::all_of(class_counts_.begin(), class_counts_.end(),
                       [](std::size_t c) { return c > 0; });
  }

  std::vector<std::size_t> indices_of(ClassId c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == c) out.push_back(i);
    }
    return out;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    std::vector<ClassId> labels;
    labels.reserve(indices.size());
    for (const std::size_t i : indices) labels.push_back(labels_[i]);
    return Dataset(features_.select_rows(indices), std::move(labels),
                   num_classes_, class_names_);
  }

  Dataset with_features(FeatureMatrix features) const {
    return Dataset(std::move(features), labels_, num_classes_, class_names_);
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  FeatureMatrix features_;
  std::vector<ClassId> labels_;
  int num_classes_;
  std::vector<std::string> class_names_;
  std::vector<std::size_t> class_counts_;
};

// ---------------------------------------------------------------------------
// Synthetic mixtures

struct GaussianComponent {
  std::vector<double> mean;
  double stddev = 1.0;
  std::size_t count = 0;
};

struct MixtureSpec {
  GaussianComponent minority;
  std::vector<GaussianComponent> majority_components;
  std::uint64_t seed = 0;
};

inline void validate(const MixtureSpec& spec) {
  const std::size_t dim = spec.minority.mean.size();
  if (dim == 0) throw ArgumentError("mixture component mean is empty");
  if (spec.majority_components.empty()) {
    throw ArgumentError("mixture needs at least one majority component");
  }
  auto check = [dim](const GaussianComponent& c, const std::string& name) {
    if (c.mean.size() != dim) {
      throw ArgumentError(name + " mean has dimension " +
                          std::to_string(c.mean.size()) + ", expected " +
                          std::to_string(dim));
    }
    if (c.count < 1) throw ArgumentError(name + " count must be >= 1");
    if (!(c.stddev > 0.0)) throw ArgumentError(name + " stddev must be > 0");
  };
  check(spec.minority, "minority");
  for (std::size_t k = 0; k < spec.majority_components.size(); ++k) {
    check(spec.majority_components[k], "majority component " +
                                           std::to_string(k));
  }
}

// Minority rows come first (label 0), then each majority component in order
// (label 1). Also returns, per row, which component generated it
// (0 = minority, k+1 = majority component k).
inline std::pair<Dataset, std::vector<int>> generate_imbalanced_mixture_traced(
    const MixtureSpec& spec) {
  validate(spec);
  const std::size_t dim = spec.minority.mean.size();
  Rng rng(spec.seed);
  std::vector<double> values;
  std::vector<ClassId> labels;
  std::vector<int> source;
  auto draw = [&](const GaussianComponent& c, ClassId label, int origin) {
    for (std::size_t i = 0; i < c.count; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        values.push_back(rng.normal(c.mean[d], c.stddev));
      }
      labels.push_back(label);
      source.push_back(origin);
    }
  };
  draw(spec.minority, 0, 0);
  for (std::size_t k = 0; k < spec.majority_components.size(); ++k) {
    draw(spec.majority_components[k], 1, static_cast<int>(k) + 1);
  }
  const std::size_t n = labels.size();
  return {Dataset(FeatureMatrix(n, dim, std::move(values)), std::move(labels),
                  2),
          std::move(source)};
}

inline Dataset generate_imbalanced_mixture(const MixtureSpec& spec) {
  return generate_imbalanced_mixture_traced(spec).first;
}

// Minority blob at the origin surrounded by a ring of majority blobs, in 2D.
// The majority class is a latent mixture that clustering can recover.
inline MixtureSpec ring_mixture_spec(std::uint64_t seed,
                                     std::size_t minority_count = 100,
                                     std::size_t ring_components = 5,
                                     std::size_t per_component = 180,
                                     double radius = 3.0,
                                     double stddev = 0.5) {
  MixtureSpec spec;
  spec.minority = {{0.0, 0.0}, stddev, minority_count};
  for (std::size_t k = 0; k < ring_components; ++k) {
    const double angle =
        2.0 * std::numbers::pi * static_cast<double>(k) / ring_components;
    spec.majority_components.push_back(
        {{radius * std::cos(angle), radius * std::sin(angle)}, stddev,
         per_component});
  }
  spec.seed = seed;
  return spec;
}

// Heavy-overlap family: the minority blob sits inside the first of three
// majority modes, so no classifier can separate it cleanly.
inline MixtureSpec overlap_mixture_spec(std::uint64_t seed) {
  MixtureSpec spec;
  spec.minority = {{0.0, 0.0}, 0.5, 60};
  spec.majority_components = {{{0.0, 0.0}, 1.2, 300},
                              {{5.0, 0.0}, 1.0, 300},
                              {{2.5, 4.0}, 1.0, 300}};
  spec.seed = seed;
  return spec;
}

// ---------------------------------------------------------------------------
// Splitting

struct TrainTestSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

// Per-class test count = round_half_even(test_fraction * count), clamped to
// [1, count - 1]. Indices within each part keep their original order.
inline TrainTestSplit stratified_split(const Dataset& ds, double test_fraction,
                                       std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ArgumentError("test_fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<char> in_test(ds.size(), 0);
  for (ClassId c = 0; c < ds.num_classes(); ++c) {
    std::vector<std::size_t> members = ds.indices_of(c);
    if (members.size() < 2) {
      throw ArgumentError("class " + std::to_string(c) + " has " +
                          std::to_string(members.size()) +
                          " samples; stratified split needs at least 2");
    }
    const double target =
        round_half_even(test_fraction * static_cast<double>(members.size()));
    const std::size_t n_test = std::clamp<std::size_t>(
        static_cast<std::size_t>(target), 1, members.size() - 1);
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t k = 0; k < n_test; ++k) in_test[members[k]] = 1;
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (in_test[i] ? test_idx : train_idx).push_back(i);
  }
  Dataset train = ds.subset(train_idx);
  Dataset test = ds.subset(test_idx);
  return {std::move(train), std::move(test), std::move(train_idx),
          std::move(test_idx)};
}

// ---------------------------------------------------------------------------
// Standardization

// Per-feature mean and population standard deviation. Columns with zero
// spread are centered but not scaled.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const FeatureMatrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(i, j);
    }
    for (double& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double c = x(i, j) - s.mean[j];
        s.stddev[j] += c * c;
      }
    }
    for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(n));
    return s;
  }

  FeatureMatrix apply(const FeatureMatrix& x) const {
    if (x.cols() != mean.size()) {
      throw ArgumentError("standardizer fitted on " +
                          std::to_string(mean.size()) +
                          " features, got " + std::to_string(x.cols()));
    }
    std::vector<double> out(x.values());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) {
        double& v = out[i * x.cols() + j];
        v -= mean[j];
        if (stddev[j] > 0.0) v /= stddev[j];
      }
    }
    return FeatureMatrix(x.rows(), x.cols(), std::move(out));
  }

  Dataset apply(const Dataset& ds) const {
    return ds.with_features(apply(ds.features()));
  }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

struct StandardizedData {
  Dataset train;
  std::vector<Dataset> others;
  Standardizer stats;
};

inline StandardizedData standardize(const Dataset& train,
                                    std::span<const Dataset> others = {}) {
  Standardizer stats = Standardizer::fit(train.features());
  std::vector<Dataset> transformed;
  transformed.reserve(others.size());
  for (const Dataset& ds : others) transformed.push_back(stats.apply(ds));
  return {stats.apply(train), std::move(transformed), std::move(stats)};
}

// ---------------------------------------------------------------------------
// CSV

// Header plus string cells; every row has the header's arity.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::optional<double> parse_double(const std::string& s) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_int(const std::string& s) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

inline std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace detail

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 &&
        line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(line);
    for (std::string& c : cells) c = detail::trim(std::move(c));
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError(path + ": ragged row at line " + std::to_string(line_no) +
                      ": expected " + std::to_string(table.header.size()) +
                      " columns, found " + std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw DataError(path + ": empty CSV file");
  return table;
}

using LabelColumn = std::variant<std::string, std::size_t>;

// Labels that all parse as non-negative integers are used as class ids
// directly; otherwise ids follow first appearance of each distinct string.
inline Dataset load_csv_dataset(const std::string& path,
                                const LabelColumn& label_column = "label") {
  const CsvTable table = read_csv_table(path);
  std::size_t label_idx = 0;
  if (const auto* name = std::get_if<std::string>(&label_column)) {
    const auto idx = table.column_index(*name);
    if (!idx) throw DataError(path + ": no label column named '" + *name + "'");
    label_idx = *idx;
  } else {
    label_idx = std::get<std::size_t>(label_column);
    if (label_idx >= table.header.size()) {
      throw DataError(path + ": label column index " +
                      std::to_string(label_idx) + " out of range");
    }
  }
  if (table.rows.empty()) throw DataError(path + ": dataset has no rows");
  const std::size_t dim = table.header.size() - 1;
  if (dim == 0) throw DataError(path + ": no feature columns");

  std::vector<double> values;
  values.reserve(table.rows.size() * dim);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c == label_idx) continue;
      const auto v = detail::parse_double(table.rows[r][c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(path + ": non-numeric feature '" + table.rows[r][c] +
                        "' at data row " + std::to_string(r + 1) +
                        ", column '" + table.header[c] + "'");
      }
      values.push_back(*v);
    }
  }

  bool integer_labels = true;
  long long max_label = -1;
  for (const auto& row : table.rows) {
    const auto v = detail::parse_int(row[label_idx]);
    if (!v || *v < 0 || *v > std::numeric_limits<int>::max() - 1) {
      integer_labels = false;
      break;
    }
    max_label = std::max(max_label, *v);
  }

  std::vector<ClassId> labels;
  labels.reserve(table.rows.size());
  std::vector<std::string> names;
  if (integer_labels) {
    for (const auto& row : table.rows) {
      labels.push_back(static_cast<ClassId>(*detail::parse_int(row[label_idx])));
    }
    for (long long c = 0; c <= max_label; ++c) names.push_back(std::to_string(c));
  } else {
    std::map<std::string, ClassId> ids;
    for (const auto& row : table.rows) {
      const std::string& s = row[label_idx];
      auto [it, inserted] = ids.emplace(s, static_cast<ClassId>(names.size()));
      if (inserted) names.push_back(s);
      labels.push_back(it->second);
    }
  }
  const int num_classes = static_cast<int>(names.size());
  return Dataset(FeatureMatrix(table.rows.size(), dim, std::move(values)),
                 std::move(labels), num_classes, std::move(names));
}

// Header f0..f{D-1},label. Features use 17 significant digits, which
// round-trips every double exactly; labels are written as class names when
// present, else as ids.
inline void write_csv_dataset(std::ostream& out, const Dataset& ds,
                              bool with_labels = true) {
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    if (j) out << ',';
    out << 'f' << j;
  }
  if (with_labels) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = ds.features().row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << detail::format_double(row[j]);
    }
    if (with_labels) {
      const ClassId y = ds.labels()[i];
      out << ',';
      if (ds.class_names().empty()) {
        out << y;
      } else {
        out << ds.class_names()[y];
      }
    }
    out << '\n';
  }
}

inline void save_csv_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file '" + path + "'");
  write_csv_dataset(out, ds);
}

// Matrix dump without labels (used for k-means centroids).
inline void save_csv_matrix(const FeatureMatrix& x, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file '" + path + "'");
  for (std::size_t j = 0; j < x.cols(); ++j) out << (j ? ",f" : "f") << j;
  out << '\n';
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(x(i, j));
    }
    out << '\n';
  }
}

}  // namespace regroup
