// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Tolerances and budgets are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "regroup/regroup.hpp"

namespace {

using namespace regroup;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kLossGradTol = 1e-5;
constexpr double kNetGradTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr int kLossInstancesPerKind = 100;
constexpr int kNetInstances = 100;
constexpr double kOracleBudgetS = 10.0;
constexpr int kApInstances = 500;
constexpr std::size_t kApMaxN = 200;
constexpr double kIdentityTol = 1e-12;
constexpr int kSeeds = 10;
constexpr int kSignTestMin = 8;
constexpr double kDirectionalBudgetS = 300.0;
constexpr int kRosModels = 20;
constexpr int kRosResamples = 1000;
constexpr double kRosSe = 3.0;
constexpr int kRosMinAgree = 19;
constexpr int kKMeansRuns = 100;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int hardware_jobs() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<std::uint64_t> seed_list() {
  std::vector<std::uint64_t> s(kSeeds);
  for (int i = 0; i < kSeeds; ++i) s[i] = static_cast<std::uint64_t>(i);
  return s;
}

Method method(MethodKind kind) {
  Method m;
  m.kind = kind;
  return m;
}

// 1 -------------------------------------------------------------------------

LossSpec random_loss(Rng& rng, LossKind kind, const std::vector<std::size_t>& counts) {
  switch (kind) {
    case LossKind::kCrossEntropy: return LossSpec::cross_entropy();
    case LossKind::kWeightedCrossEntropy: return LossSpec::weighted(counts);
    case LossKind::kFocal: return LossSpec::focal(4.0 * rng.uniform());
    case LossKind::kLdam:
      return LossSpec::ldam_normalized(counts, 0.5, 1.0 + 29.0 * rng.uniform());
  }
  return {};
}

Outcome gradient_oracle() {
  const auto start = Clock::now();
  Rng rng(101);
  const LossKind kinds[] = {LossKind::kCrossEntropy,
                            LossKind::kWeightedCrossEntropy, LossKind::kFocal,
                            LossKind::kLdam};
  double worst_loss = 0.0, worst_net = 0.0;
  int loss_cases = 0, net_cases = 0;
  for (const LossKind kind : kinds) {
    for (int t = 0; t < kLossInstancesPerKind; ++t) {
      const std::size_t c = 2 + rng.uniform_index(9);
      std::vector<double> z(c);
      for (double& v : z) v = rng.normal(0.0, 2.0);
      std::vector<std::size_t> counts(c);
      for (auto& n : counts) n = 1 + rng.uniform_index(1000);
      const LossSpec spec = random_loss(rng, kind, counts);
      const ClassId y = static_cast<ClassId>(rng.uniform_index(c));
      const auto numeric = testing::finite_difference(
          [&](std::span<const double> v) { return loss_value(v, y, spec); }, z,
          kFdStep);
      worst_loss = std::max(
          worst_loss, testing::relative_error(loss_gradient(z, y, spec), numeric));
      ++loss_cases;
    }
  }
  for (int t = 0; t < kNetInstances; ++t) {
    const std::size_t dim = 1 + rng.uniform_index(5);
    const int classes = 2 + static_cast<int>(rng.uniform_index(4));
    const Dataset ds = testing::random_dataset(rng, 16, dim, classes);
    std::vector<std::size_t> hidden;
    for (std::size_t h = rng.uniform_index(3); h > 0; --h) {
      hidden.push_back(2 + rng.uniform_index(8));
    }
    TrainedModel model = TrainedModel::initialize(
        {dim, hidden, static_cast<std::size_t>(classes), rng.next_u64()});
    std::vector<double> theta = model.parameters();
    for (double& v : theta) v += 0.1 * rng.normal();
    model.set_parameters(theta);
    const LossSpec loss = random_loss(rng, kinds[t % 4], ds.class_counts());
    std::vector<std::size_t> rows(ds.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    std::vector<double> grad;
    batch_loss_and_gradient(model, ds.features(), ds.labels(), rows, loss, grad);
    const auto numeric = testing::finite_difference(
        [&](std::span<const double> p) {
          TrainedModel probe = model;
          probe.set_parameters(p);
          std::vector<double> g;
          return batch_loss_and_gradient(probe, ds.features(), ds.labels(),
                                         rows, loss, g);
        },
        theta, kFdStep);
    worst_net = std::max(worst_net, testing::relative_error(grad, numeric));
    ++net_cases;
  }
  const double elapsed = seconds_since(start);
  return {worst_loss < kLossGradTol && worst_net < kNetGradTol &&
              elapsed < kOracleBudgetS,
          fmt("losses: %d cases, max rel err %.2e (< %.0e); networks: %d "
              "cases, max rel err %.2e (< %.0e); %.2f s (< %.0f s)",
              loss_cases, worst_loss, kLossGradTol, net_cases, worst_net,
              kNetGradTol, elapsed, kOracleBudgetS)};
}

// 2 -------------------------------------------------------------------------

Outcome ap_oracle() {
  const auto start = Clock::now();
  Rng rng(202);
  int mismatches = 0, with_ties = 0;
  for (int t = 0; t < kApInstances; ++t) {
    const std::size_t n = 1 + rng.uniform_index(kApMaxN);
    std::vector<int> pos(n);
    std::vector<double> s(n);
    // Coarse grids on half the instances force tied scores.
    const bool coarse = t % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = rng.uniform() < 0.05 + 0.5 * rng.uniform();
      s[i] = coarse ? static_cast<double>(rng.uniform_index(1 + n / 5)) * 0.125
                    : rng.uniform();
    }
    pos[rng.uniform_index(n)] = 1;
    std::vector<double> sorted(s);
    std::sort(sorted.begin(), sorted.end());
    with_ties += std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
    if (average_precision(pos, s) != testing::brute_force_ap(pos, s)) ++mismatches;
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < kOracleBudgetS,
          fmt("%d instances (n <= %zu, %d with ties), %d mismatches (exact "
              "equality); %.2f s (< %.0f s)",
              kApInstances, kApMaxN, with_ties, mismatches, elapsed,
              kOracleBudgetS)};
}

// 3 -------------------------------------------------------------------------

Outcome metric_identities() {
  std::vector<std::string> failures;
  auto check = [&](const char* name, double got, double want) {
    if (!(std::abs(got - want) <= kIdentityTol)) {
      failures.push_back(fmt("%s=%.17g (want %.17g)", name, got, want));
    }
  };
  const MetricReport r = summary_metrics(ConfusionTable::binary(2, 1, 1, 6));
  check("precision", r.precision[0].value_or(NAN), 2.0 / 3.0);
  check("recall", r.recall[0].value_or(NAN), 2.0 / 3.0);
  check("f1", r.f1[0], 2.0 / 3.0);
  check("accuracy", r.accuracy, 0.8);
  check("balanced_accuracy", r.balanced_accuracy, 0.5 * (2.0 / 3.0 + 6.0 / 7.0));
  const std::vector<int> pos{1, 0, 1, 0};
  check("ap_perfect", average_precision(pos, std::vector<double>{0.9, 0.1, 0.8, 0.2}), 1.0);
  check("ap_half", average_precision(std::vector<int>{0, 1}, std::vector<double>{0.9, 0.1}), 0.5);
  check("ap_5/6", average_precision(pos, std::vector<double>{0.9, 0.8, 0.7, 0.1}), 5.0 / 6.0);
  std::string detail = fmt("P=R=F1=2/3, acc=0.8, BA=%.16f, AP in {1, 0.5, 5/6} within %.0e",
                           r.balanced_accuracy, kIdentityTol);
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// 4 -------------------------------------------------------------------------

ExperimentConfig desk_config(const std::string& family,
                             std::vector<std::size_t> hidden) {
  ExperimentConfig cfg;
  cfg.dataset = BuiltinSource{family};
  cfg.hidden_dims = std::move(hidden);
  cfg.seeds = seed_list();
  cfg.jobs = hardware_jobs();
  return cfg;
}

Outcome regrouping_identity() {
  int identical = 0, total = 0;
  auto compare = [&](const ExperimentConfig& cfg, std::uint64_t seed) {
    Method one = method(MethodKind::kRG);
    if (std::holds_alternative<BuiltinSource>(cfg.dataset)) one.forced_k = 1;
    PipelineTrace a, b;
    const ResultRow ce = run_experiment(cfg, method(MethodKind::kCE), seed, &a);
    const ResultRow rg = run_experiment(cfg, one, seed, &b);
    ++total;
    identical += b.plan && b.plan->is_identity() && ce.accuracy == rg.accuracy &&
                 ce.balanced_accuracy == rg.balanced_accuracy &&
                 ce.ap == rg.ap && ce.macro_ap == rg.macro_ap &&
                 a.test_scores == b.test_scores &&
                 a.test_predictions == b.test_predictions;
  };
  ExperimentConfig binary = desk_config("rg_favorable", {32});
  binary.train.epochs = 20;
  for (std::uint64_t seed = 0; seed < 3; ++seed) compare(binary, seed);

  // Balanced three-class data: every class gets one group without forcing.
  ExperimentConfig multi = binary;
  {
    Rng rng(404);
    std::vector<double> x;
    std::vector<ClassId> y;
    for (ClassId c = 0; c < 3; ++c) {
      for (int i = 0; i < 150; ++i) {
        x.push_back(rng.normal(2.0 * c, 1.0));
        x.push_back(rng.normal(0.0, 1.0));
        y.push_back(c);
      }
    }
    const fs::path path = fs::temp_directory_path() / "regroup_accept_balanced.csv";
    save_csv_dataset(Dataset(FeatureMatrix(y.size(), 2, x), y, 3), path.string());
    multi.dataset = CsvSource{path.string(), "label"};
    for (std::uint64_t seed = 0; seed < 2; ++seed) compare(multi, seed);
    fs::remove(path);
  }
  return {identical == total,
          fmt("%d/%d pipelines bit-identical to CE (binary K=1 forced, "
              "balanced 3-class with all groups = 1)",
              identical, total)};
}

// 5, 6 ----------------------------------------------------------------------

struct MethodStats {
  std::vector<double> ap0, ba;
  double mean_ap0() const { return mean(ap0); }
  double mean_ba() const { return mean(ba); }
  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
  }
};

std::vector<MethodStats> run_methods(const ExperimentConfig& base,
                                     const std::vector<MethodKind>& kinds,
                                     std::string* failure) {
  ExperimentConfig cfg = base;
  cfg.methods.clear();
  for (const MethodKind k : kinds) cfg.methods.push_back(method(k));
  const GridResult grid = run_grid(cfg);
  std::vector<MethodStats> out(kinds.size());
  for (std::size_t m = 0; m < kinds.size(); ++m) {
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      const ResultRow& row = grid.rows[m * cfg.seeds.size() + s];
      if (!row.ok) {
        *failure = row.method + " seed " + std::to_string(row.seed) + ": " + row.error;
        continue;
      }
      out[m].ap0.push_back(row.ap.at(0).value_or(NAN));
      out[m].ba.push_back(row.balanced_accuracy);
    }
  }
  return out;
}

Outcome rg_beats_ce() {
  const auto start = Clock::now();
  std::string failure;
  // Linear softmax model: plain CE cannot carve the ring-shaped majority
  // around the minority, RG can with one pseudo-class per mode.
  const auto linear = run_methods(desk_config("rg_favorable", {}),
                                  {MethodKind::kCE, MethodKind::kRG}, &failure);
  if (!failure.empty()) return {false, "failed cell: " + failure};
  int wins = 0;
  for (int s = 0; s < kSeeds; ++s) wins += linear[1].ap0[s] > linear[0].ap0[s];
  const auto mlp = run_methods(desk_config("rg_favorable", {32}),
                               {MethodKind::kCE, MethodKind::kRG}, &failure);
  const double elapsed = seconds_since(start);
  const bool pass = failure.empty() &&
                    linear[1].mean_ap0() > linear[0].mean_ap0() &&
                    wins >= kSignTestMin && elapsed < kDirectionalBudgetS;
  return {pass,
          fmt("linear model, %d seeds: minority AP RG+CE %.4f vs CE %.4f, RG "
              "wins %d/%d (>= %d); [info] MLP[32]: RG+CE %.4f vs CE %.4f; "
              "%.1f s (< %.0f s)",
              kSeeds, linear[1].mean_ap0(), linear[0].mean_ap0(), wins, kSeeds,
              kSignTestMin, failure.empty() ? mlp[1].mean_ap0() : NAN,
              failure.empty() ? mlp[0].mean_ap0() : NAN, elapsed,
              kDirectionalBudgetS)};
}

Outcome ba_misleads() {
  std::string failure;
  const auto r = run_methods(desk_config("overlap", {32}),
                             {MethodKind::kCE, MethodKind::kWCE, MethodKind::kRG},
                             &failure);
  if (!failure.empty()) return {false, "failed cell: " + failure};
  const MethodStats &ce = r[0], &wce = r[1], &rg = r[2];
  return {wce.mean_ba() >= ce.mean_ba() && wce.mean_ap0() <= rg.mean_ap0(),
          fmt("overlap family, MLP[32], %d seeds: BA WCE %.4f >= CE %.4f; "
              "minority AP WCE %.4f <= RG+CE %.4f (CE %.4f)",
              kSeeds, wce.mean_ba(), ce.mean_ba(), wce.mean_ap0(),
              rg.mean_ap0(), ce.mean_ap0())};
}

// 7 -------------------------------------------------------------------------

Outcome wce_ros_equivalence() {
  MixtureSpec mix = ring_mixture_spec(707);
  mix.minority.count = 20;
  for (auto& c : mix.majority_components) c.count = 36;
  const Dataset ds = generate_imbalanced_mixture(mix);
  const LossSpec wce = LossSpec::weighted(ds.class_counts());
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  int agree = 0;
  double worst_z = 0.0;
  std::vector<double> grad;
  for (int m = 0; m < kRosModels; ++m) {
    const TrainedModel model = TrainedModel::initialize(
        {2, {8}, 2, derive_seed(7000, static_cast<std::uint64_t>(m))});
    const double target = batch_loss_and_gradient(model, ds.features(),
                                                  ds.labels(), all, wce, grad);
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < kRosResamples; ++r) {
      const Dataset out = resample(
          ds, {ResampleKind::kOversample, 5,
               derive_seed(static_cast<std::uint64_t>(m) * 100000 + r, "ros")});
      std::vector<std::size_t> rows(out.size());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      const double v = batch_loss_and_gradient(model, out.features(),
                                               out.labels(), rows,
                                               LossSpec::cross_entropy(), grad);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / kRosResamples;
    const double var = (sum_sq - kRosResamples * mean * mean) / (kRosResamples - 1);
    const double se = std::sqrt(std::max(var, 0.0) / kRosResamples);
    const double z = std::abs(mean - target) / se;
    worst_z = std::max(worst_z, z);
    agree += z <= kRosSe;
  }
  return {agree >= kRosMinAgree,
          fmt("%d/%d models within %.0f SE (need >= %d) over %d ROS resamples "
              "each; max |z| %.2f",
              agree, kRosModels, kRosSe, kRosMinAgree, kRosResamples, worst_z)};
}

// 8 -------------------------------------------------------------------------

Outcome kmeans_properties() {
  Rng rng(808);
  int monotone = 0;
  for (int run = 0; run < kKMeansRuns; ++run) {
    const Dataset ds = testing::random_dataset(rng, 30 + rng.uniform_index(300),
                                               1 + rng.uniform_index(5), 2);
    const int k = 1 + static_cast<int>(rng.uniform_index(12));
    const KMeansModel m = kmeans_fit(ds.features(), k, rng.next_u64());
    bool ok = true;
    for (std::size_t t = 1; t < m.inertia_trace.size(); ++t) {
      ok = ok && m.inertia_trace[t] <= m.inertia_trace[t - 1];
    }
    monotone += ok;
  }
  MixtureSpec three;
  three.minority = {{0.0, 0.0}, 0.1, 200};
  three.majority_components = {{{5.0, 0.0}, 0.1, 200}, {{0.0, 5.0}, 0.1, 200}};
  int recovered = 0;
  const int recovery_runs = 10;
  bool deterministic = true;
  for (int s = 0; s < recovery_runs; ++s) {
    three.seed = static_cast<std::uint64_t>(s);
    const auto [ds, source] = generate_imbalanced_mixture_traced(three);
    const KMeansModel a = kmeans_fit(ds.features(), 3, 1000 + s);
    const KMeansModel b = kmeans_fit(ds.features(), 3, 1000 + s);
    recovered += testing::same_partition(a.assignments, source);
    deterministic = deterministic && a.centroids == b.centroids &&
                    a.assignments == b.assignments &&
                    a.inertia_trace == b.inertia_trace;
  }
  return {monotone == kKMeansRuns && recovered == recovery_runs && deterministic,
          fmt("non-increasing inertia in %d/%d runs; 3-Gaussian recovery "
              "%d/%d; repeat runs identical: %s",
              monotone, kKMeansRuns, recovered, recovery_runs,
              deterministic ? "yes" : "no")};
}

// 9 -------------------------------------------------------------------------

std::string read_without_last_column(const fs::path& p) {
  std::ifstream in(p);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

Outcome harness_determinism() {
  ExperimentConfig cfg = desk_config("rg_favorable", {16});
  cfg.train.epochs = 10;
  cfg.seeds = {0, 1, 2};
  cfg.methods.clear();
  for (const MethodKind k :
       {MethodKind::kCE, MethodKind::kWCE, MethodKind::kFocal, MethodKind::kLDAM,
        MethodKind::kROS, MethodKind::kRUS, MethodKind::kSMOTE, MethodKind::kRG}) {
    cfg.methods.push_back(method(k));
  }
  const fs::path root = fs::temp_directory_path() / "regroup_accept_harness";
  fs::remove_all(root);
  cfg.jobs = 1;
  write_grid(run_grid(cfg), (root / "a").string());
  write_grid(run_grid(cfg), (root / "b").string());
  cfg.jobs = std::max(2, hardware_jobs());
  write_grid(run_grid(cfg), (root / "c").string());
  const std::string a = read_without_last_column(root / "a" / "results.csv");
  const std::string b = read_without_last_column(root / "b" / "results.csv");
  const std::string c = read_without_last_column(root / "c" / "results.csv");
  const auto lines = std::count(a.begin(), a.end(), '\n');
  fs::remove_all(root);
  return {a == b && a == c && lines == 1 + 8 * 3,
          fmt("%ld-line results.csv identical across two serial runs and one "
              "%d-thread run (wall_time_s excluded): %s",
              static_cast<long>(lines), std::max(2, hardware_jobs()),
              a == b && a == c ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient oracle", gradient_oracle},
      {"AP oracle", ap_oracle},
      {"metric identities", metric_identities},
      {"regrouping identity", regrouping_identity},
      {"RG+CE beats CE on minority AP", rg_beats_ce},
      {"BA misleads under overlap", ba_misleads},
      {"WCE/ROS equivalence", wce_ros_equivalence},
      {"k-means properties", kmeans_properties},
      {"harness determinism", harness_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
