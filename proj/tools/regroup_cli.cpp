// Command-line front end for the regrouping benchmark.
//
//   regroup_cli run --config <file> [--out <dir>] [--seeds a,b,c] [--full-recipe]
//   regroup_cli metrics --pred <csv> --truth-col <name> [--format json|csv]
//   regroup_cli synth --spec <file> --out <csv>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "regroup/regroup.hpp"

namespace {

using regroup::Json;

int run_command(const std::string& config_path, std::optional<std::string> out,
                const std::vector<std::uint64_t>& seeds, bool full_recipe) {
  regroup::ExperimentConfig cfg = regroup::load_config(config_path);
  if (!seeds.empty()) cfg.seeds = seeds;
  if (full_recipe) {
    const regroup::TrainConfig full;
    cfg.train.epochs = full.epochs;
    cfg.train.batch_size = full.batch_size;
  }
  if (out) cfg.output = *out;
  const regroup::GridResult grid = regroup::run_grid(cfg);
  regroup::write_grid(grid, cfg.output);
  regroup::write_summary(std::cout, grid);
  for (const auto& row : grid.rows) {
    if (!row.ok) {
      std::cerr << "cell " << row.method << " seed " << row.seed
                << " failed: " << row.error << '\n';
    }
  }
  return grid.all_ok() ? 0 : 1;
}

// Prediction file: the truth column holds class ids; every other column is a
// per-class score in class order, except an optional "pred" column with hard
// predictions (argmax of the scores otherwise).
int metrics_command(const std::string& pred_path, const std::string& truth_col,
                    const std::string& format) {
  const regroup::CsvTable table = regroup::read_csv_table(pred_path);
  const auto truth_idx = table.column_index(truth_col);
  if (!truth_idx) {
    throw regroup::DataError(pred_path + ": no column named '" + truth_col + "'");
  }
  const auto pred_idx = table.column_index("pred");
  std::vector<std::size_t> score_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != *truth_idx && (!pred_idx || c != *pred_idx)) score_cols.push_back(c);
  }
  if (score_cols.size() < 2) {
    throw regroup::DataError(pred_path + ": need at least two score columns");
  }
  if (table.rows.empty()) throw regroup::DataError(pred_path + ": no rows");

  const std::size_t n = table.rows.size();
  regroup::ScoreMatrix scores(n, score_cols.size());
  std::vector<regroup::ClassId> truth(n), predicted;
  auto parse_label = [&](const std::string& cell, std::size_t row) {
    const auto v = regroup::detail::parse_int(cell);
    if (!v || *v < 0 || *v >= static_cast<long long>(score_cols.size())) {
      throw regroup::DataError(pred_path + ": bad class id '" + cell +
                               "' at data row " + std::to_string(row + 1));
    }
    return static_cast<regroup::ClassId>(*v);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    truth[i] = parse_label(row[*truth_idx], i);
    for (std::size_t k = 0; k < score_cols.size(); ++k) {
      const auto v = regroup::detail::parse_double(row[score_cols[k]]);
      if (!v) {
        throw regroup::DataError(pred_path + ": non-numeric score at data row " +
                                 std::to_string(i + 1) + ", column '" +
                                 table.header[score_cols[k]] + "'");
      }
      scores(i, k) = *v;
    }
    if (pred_idx) predicted.push_back(parse_label(row[*pred_idx], i));
  }
  if (!pred_idx) predicted = regroup::argmax_rows(scores);

  const regroup::MetricReport report =
      regroup::evaluate(truth, predicted, scores);
  if (format == "csv") {
    std::cout << regroup::report_csv_header(report.num_classes()) << '\n'
              << regroup::report_csv_row(report) << '\n';
  } else {
    std::cout << regroup::report_to_json(report).dump(2) << '\n';
  }
  return 0;
}

// Spec file: a mixture object ({"minority", "majority_components", "seed"})
// or {"builtin": "rg_favorable" | "overlap", "seed": s}.
int synth_command(const std::string& spec_path, const std::string& out_path) {
  std::ifstream in(spec_path);
  if (!in) throw regroup::DataError("cannot open spec file '" + spec_path + "'");
  const Json j = Json::parse(in);
  const regroup::MixtureSpec spec =
      j.contains("builtin")
          ? regroup::builtin_mixture(j.at("builtin").get<std::string>(),
                                     j.value("seed", std::uint64_t{0}))
          : regroup::mixture_from_json(j);
  const regroup::Dataset ds = regroup::generate_imbalanced_mixture(spec);
  regroup::save_csv_dataset(ds, out_path);
  std::cout << "wrote " << ds.size() << " rows (class counts "
            << ds.class_counts()[0] << ", " << ds.class_counts()[1] << ") to "
            << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regrouping benchmark for imbalanced classification"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::vector<std::uint64_t> seeds;
  bool full_recipe = false;
  auto* run = app.add_subcommand("run", "run a method x seed grid");
  run->add_option("--config", config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seeds", seeds, "comma-separated seeds (overrides config)")
      ->delimiter(',');
  run->add_flag("--full-recipe", full_recipe,
                "300 epochs, batch size 256 instead of the desk defaults");

  std::string pred_path, truth_col, format = "json";
  auto* metrics = app.add_subcommand("metrics", "score a prediction CSV");
  metrics->add_option("--pred", pred_path, "prediction CSV")
      ->required()
      ->check(CLI::ExistingFile);
  metrics->add_option("--truth-col", truth_col, "ground-truth column name")
      ->required();
  metrics->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  std::string spec_path, synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic mixture CSV");
  synth->add_option("--spec", spec_path, "mixture spec (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, out_dir, seeds, full_recipe);
    if (*metrics) return metrics_command(pred_path, truth_col, format);
    if (*synth) return synth_command(spec_path, synth_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
