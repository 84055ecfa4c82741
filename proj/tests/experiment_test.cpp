#include "regroup/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace regroup {
namespace {

namespace fs = std::filesystem;

Method method(MethodKind kind) {
  Method m;
  m.kind = kind;
  return m;
}

// Train split counts come out as [100, 900].
ExperimentConfig small_config() {
  MixtureSpec mix;
  mix.minority = {{0.0, 0.0}, 1.0, 125};
  mix.majority_components = {{{3.0, 0.0}, 1.0, 625}, {{0.0, 3.0}, 1.0, 500}};
  mix.seed = 4;
  ExperimentConfig cfg;
  cfg.dataset = mix;
  cfg.hidden_dims = {8};
  cfg.train.epochs = 5;
  cfg.train.batch_size = 64;
  cfg.methods = {method(MethodKind::kCE)};
  cfg.seeds = {1};
  return cfg;
}

std::string strip_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("regroup_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Pipeline, ForcedSingleGroupMatchesCrossEntropy) {
  const ExperimentConfig cfg = small_config();
  Method rg = method(MethodKind::kRG);
  rg.forced_k = 1;
  PipelineTrace a, b;
  const ResultRow ce = run_experiment(cfg, method(MethodKind::kCE), 3, &a);
  const ResultRow one = run_experiment(cfg, rg, 3, &b);
  EXPECT_EQ(one.k, 1);
  EXPECT_EQ(ce.accuracy, one.accuracy);
  EXPECT_EQ(ce.balanced_accuracy, one.balanced_accuracy);
  EXPECT_EQ(ce.ap, one.ap);
  EXPECT_EQ(a.test_scores, b.test_scores);
  EXPECT_EQ(a.test_predictions, b.test_predictions);
}

TEST(Pipeline, TrainSizesPerMethod) {
  const ExperimentConfig cfg = small_config();
  PipelineTrace trace;
  const ResultRow ce = run_experiment(cfg, method(MethodKind::kCE), 0, &trace);
  EXPECT_EQ(ce.train_size, 1000u);
  EXPECT_EQ(trace.test_indices.size(), 250u);
  EXPECT_EQ(run_experiment(cfg, method(MethodKind::kROS), 0).train_size, 1800u);
  EXPECT_EQ(run_experiment(cfg, method(MethodKind::kRUS), 0).train_size, 200u);
  EXPECT_EQ(run_experiment(cfg, method(MethodKind::kSMOTE), 0).train_size, 1800u);
  const ResultRow rg = run_experiment(cfg, method(MethodKind::kRG), 0, &trace);
  EXPECT_EQ(rg.k, 9);
  EXPECT_EQ(rg.train_size, 1000u);
  ASSERT_TRUE(trace.plan.has_value());
  EXPECT_EQ(trace.plan->pseudo_num_classes(), 10);
  EXPECT_EQ(trace.test_scores.cols, 2u);
}

TEST(Pipeline, StandardizationUsesTrainingRowsOnly) {
  const ExperimentConfig cfg = small_config();
  PipelineTrace trace;
  run_experiment(cfg, method(MethodKind::kCE), 5, &trace);
  ASSERT_TRUE(trace.stats.has_value());
  const Dataset data = generate_imbalanced_mixture(std::get<MixtureSpec>(cfg.dataset));
  const Standardizer expected =
      Standardizer::fit(data.features().select_rows(trace.train_indices));
  EXPECT_EQ(trace.stats->mean, expected.mean);
  EXPECT_EQ(trace.stats->stddev, expected.stddev);
  // Disjoint, exhaustive split.
  std::vector<std::size_t> all = trace.train_indices;
  all.insert(all.end(), trace.test_indices.begin(), trace.test_indices.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
}

TEST(Pipeline, MulticlassRegrouping) {
  Rng rng(2);
  std::vector<double> x;
  std::vector<ClassId> y;
  const std::size_t sizes[] = {50, 150, 300};
  for (ClassId c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      x.push_back(rng.normal(4.0 * c, 1.0));
      x.push_back(rng.normal(0.0, 1.0));
      y.push_back(c);
    }
  }
  const fs::path dir = scratch("multiclass");
  save_csv_dataset(Dataset(FeatureMatrix(y.size(), 2, x), y, 3),
                   (dir / "data.csv").string());
  ExperimentConfig cfg = small_config();
  cfg.dataset = CsvSource{(dir / "data.csv").string(), "label"};
  PipelineTrace trace;
  const ResultRow r = run_experiment(cfg, method(MethodKind::kRG), 1, &trace);
  EXPECT_EQ(trace.plan->group_counts(), (std::vector<int>{1, 3, 6}));
  EXPECT_EQ(r.k, 10);
  EXPECT_EQ(r.ap.size(), 3u);
  Method forced = method(MethodKind::kRG);
  forced.forced_k = 2;
  EXPECT_THROW(run_experiment(cfg, forced, 1), Error);
  fs::remove_all(dir);
}

TEST(Grid, RowsAggregatesAndDeterminism) {
  ExperimentConfig cfg = small_config();
  cfg.methods = {method(MethodKind::kCE), method(MethodKind::kRG)};
  cfg.seeds = {1, 2, 3};
  const GridResult g = run_grid(cfg);
  ASSERT_EQ(g.rows.size(), 6u);
  ASSERT_EQ(g.aggregates.size(), 2u);
  EXPECT_EQ(g.rows[0].method, "CE");
  EXPECT_EQ(g.rows[3].method, "RG+CE");
  EXPECT_EQ(g.rows[4].seed, 2u);
  double mean = 0.0;
  for (int i = 3; i < 6; ++i) mean += g.rows[i].balanced_accuracy / 3.0;
  EXPECT_NEAR(g.aggregates[1].ba_mean, mean, 1e-12);
  EXPECT_EQ(g.aggregates[1].runs, 3u);

  cfg.jobs = 3;
  const GridResult parallel = run_grid(cfg);
  std::ostringstream a, b;
  write_results_csv(a, g.rows);
  write_results_csv(b, parallel.rows);
  EXPECT_EQ(strip_last_column(a.str()), strip_last_column(b.str()));
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "method,seed,status,k,train_size,accuracy,balanced_accuracy,"
            "macro_ap,ap_0,ap_1,config_hash,error,wall_time_s");
}

TEST(Grid, FailedCellIsRecordedAndOthersContinue) {
  ExperimentConfig cfg = small_config();
  Method smote = method(MethodKind::kSMOTE);
  smote.smote_k = 500;  // more neighbors than minority rows
  cfg.methods = {smote, method(MethodKind::kCE)};
  const GridResult g = run_grid(cfg);
  ASSERT_EQ(g.rows.size(), 2u);
  EXPECT_FALSE(g.rows[0].ok);
  EXPECT_NE(g.rows[0].error.find("transform"), std::string::npos);
  EXPECT_TRUE(g.rows[1].ok);
  EXPECT_FALSE(g.all_ok());
  EXPECT_EQ(g.aggregates[0].failed, 1u);
}

TEST(Config, JsonRoundTripAndHash) {
  ExperimentConfig cfg = small_config();
  Method focal = method(MethodKind::kFocal);
  focal.gamma = 1.5;
  Method rg = method(MethodKind::kRG);
  rg.forced_k = 4;
  rg.collapse = CollapseRule::kSummedArgmax;
  cfg.methods = {focal, rg, method(MethodKind::kLDAM)};
  cfg.seeds = {7, 8};
  const Json j = config_to_json(cfg);
  const ExperimentConfig back = config_from_json(j);
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  EXPECT_EQ(config_hash(cfg).size(), 16u);
  cfg.seeds = {7, 9};
  EXPECT_NE(config_hash(back), config_hash(cfg));
}

TEST(Config, Rejections) {
  EXPECT_THROW(config_from_json(Json::parse(R"({"bogus": 1})")), ArgumentError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"methods": ["CE"]})")),
               ArgumentError);  // no seeds
  EXPECT_THROW(
      config_from_json(Json::parse(R"({"methods": ["XYZ"], "seeds": [1]})")),
      ArgumentError);
  EXPECT_THROW(config_from_json(Json::parse(
                   R"({"dataset": {"builtin": "nope"}, "methods": ["CE"], "seeds": [1]})")),
               ArgumentError);
  const ExperimentConfig ok = config_from_json(Json::parse(
      R"({"dataset": {"builtin": "overlap"}, "methods": ["CE", "RG"], "seeds": [1]})"));
  EXPECT_EQ(ok.methods[1].name(), "RG+CE");
  EXPECT_EQ(ok.train.epochs, 100);
}

#ifdef REGROUP_CLI_PATH
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(REGROUP_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Cli, SynthRunAndMetrics) {
  const fs::path dir = scratch("cli");
  {
    std::ofstream spec(dir / "spec.json");
    spec << R"({"builtin": "rg_favorable", "seed": 3})";
  }
  ASSERT_EQ(run_cli("synth --spec " + (dir / "spec.json").string() + " --out " +
                        (dir / "data.csv").string(),
                    dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_EQ(load_csv_dataset((dir / "data.csv").string()).class_counts(),
            (std::vector<std::size_t>{100, 900}));

  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"dataset": {"csv": ")" << (dir / "data.csv").string()
        << R"("}, "mlp": {"hidden_dims": [4]}, "train": {"epochs": 3},
               "methods": ["CE", "RG+CE"], "seeds": [1]})";
  }
  ASSERT_EQ(run_cli("run --config " + (dir / "config.json").string() +
                        " --out " + (dir / "out").string() + " --seeds 4,5",
                    dir / "log"),
            0)
      << slurp(dir / "log");
  const std::string results = slurp(dir / "out" / "results.csv");
  EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 5);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.txt"));

  {
    std::ofstream pred(dir / "pred.csv");
    pred << "y,s0,s1\n0,0.9,0.1\n0,0.4,0.6\n1,0.3,0.7\n1,0.2,0.8\n";
  }
  ASSERT_EQ(run_cli("metrics --pred " + (dir / "pred.csv").string() +
                        " --truth-col y --format json",
                    dir / "log"),
            0);
  const Json report = Json::parse(slurp(dir / "log"));
  EXPECT_EQ(report["accuracy"], 0.75);
  EXPECT_EQ(report["classes"][0]["ap"], 1.0);

  EXPECT_EQ(run_cli("metrics --pred " + (dir / "pred.csv").string() +
                        " --truth-col missing",
                    dir / "log"),
            2);
  EXPECT_NE(slurp(dir / "log").find("missing"), std::string::npos);
  fs::remove_all(dir);
}
#endif

}  // namespace
}  // namespace regroup
