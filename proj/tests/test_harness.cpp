#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "abstain/harness.hpp"
#include "support.hpp"

using namespace abstain;

namespace {

ExperimentConfig generator_config(const std::string &preset_name, std::size_t n_splits = 20) {
  ExperimentConfig c;
  c.generator = preset(preset_name);
  c.generator_label = preset_name;
  c.score_name = "reward";
  c.weight = WeightSpec::uniform();
  c.alphas = {0.1};
  c.n_cal = 200;
  c.n_test = 300;
  c.n_splits = n_splits;
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Config, ParsesFullDocument) {
  const auto j = nlohmann::json::parse(R"({
    "input": {"generator": {"preset": "diffuse", "m": 8}},
    "score_name": "judge", "weight": {"kind": "exponential", "beta": 2},
    "alphas": [0.05, 0.1], "n_cal": 100, "n_test": 50, "n_splits": 3, "seed": 9,
    "delta_0": 0.2, "delta": 0.1, "output_dir": "x", "threads": 2,
    "ablation": {"axis": "m", "values": [4, 8]}})");
  const auto c = config_from_json(j);
  ASSERT_TRUE(c.generator);
  EXPECT_EQ(c.generator->m, 8u);
  EXPECT_EQ(c.score_name, "judge");
  EXPECT_EQ(c.weight, WeightSpec::exponential(2.0));
  EXPECT_EQ(c.alphas, (std::vector<double>{0.05, 0.1}));
  EXPECT_EQ(c.n_cal, 100u);
  EXPECT_EQ(c.n_splits, 3u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.delta_0, 0.2);
  EXPECT_EQ(c.ablation_axis, "m");
  EXPECT_EQ(c.ablation_values, (std::vector<std::string>{"4", "8"}));
}

TEST(Config, DistributionShiftPresetExpands) {
  const auto c = config_from_json(nlohmann::json::parse(R"({"input":{"generator":"distribution-shift"}})"));
  EXPECT_EQ(*c.generator, preset("strictly-separable"));
  EXPECT_EQ(*c.test_generator, preset("shifted-confident-wrong"));
}

TEST(Config, Invalid) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"input":{"generator":"diffuse"},"alphas":[1.5]})")),
               ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"input":{"generator":"diffuse"},"alphas":[]})")),
               ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"input":{"generator":"diffuse"},"n_splits":0})")),
               ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(
                   R"({"input":{"generator":"diffuse","dataset":"a.jsonl"}})")),
               ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"input":{"generator":"diffuse"},"n_cal":"x"})")),
               ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, EchoRoundTrips) {
  auto c = generator_config("diffuse");
  c.alphas = {0.05, 0.2};
  const auto echo = nlohmann::json::parse(to_json(c).dump());
  nlohmann::json doc = echo;
  doc["input"] = {{"generator", echo["input"]["generator"]}};
  const auto back = config_from_json(doc);
  EXPECT_EQ(*back.generator, *c.generator);
  EXPECT_EQ(back.alphas, c.alphas);
  EXPECT_EQ(back.n_cal, c.n_cal);
  EXPECT_EQ(back.weight, c.weight);
}

TEST(ParallelFor, OrderedResultsIndependentOfThreads) {
  std::vector<std::uint64_t> a(257), b(257);
  parallel_for(a.size(), 1, [&](std::size_t i) { a[i] = derive_seed(5, i); });
  parallel_for(b.size(), 4, [&](std::size_t i) { b[i] = derive_seed(5, i); });
  EXPECT_EQ(a, b);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(MeanStdTest, Values) {
  const auto m = mean_std({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.std, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(mean_std({7.0}).std, 0.0);
  EXPECT_EQ(mean_std({}).count, 0u);
}

TEST(Experiment, AlwaysAbstainEndToEnd) {
  auto c = generator_config("strictly-separable", 10);
  c.n_cal = 5;
  const auto r = run_experiment(c);
  ASSERT_EQ(r.rows.size(), 10u);
  for (const auto &row : r.rows) {
    EXPECT_TRUE(row.always_abstain);
    EXPECT_EQ(row.lambda_hat, 1.0);
    EXPECT_EQ(row.realized_risk, 0.0);
    EXPECT_EQ(row.yield, 0.0);
    EXPECT_FALSE(row.selective_accuracy);
  }
  EXPECT_EQ(r.aggregates[0].always_abstain_splits, 10u);
}

TEST(Experiment, DeterministicAndThreadIndependent) {
  auto c = generator_config("diffuse", 12);
  c.alphas = {0.05, 0.1, 0.2};
  const auto a = to_json(run_experiment(c)).dump();
  const auto b = to_json(run_experiment(c)).dump();
  EXPECT_EQ(a, b);
  c.threads = 3;
  EXPECT_EQ(to_json(run_experiment(c)).dump(), a);
  c.seed = 12;
  EXPECT_NE(to_json(run_experiment(c)).dump(), a);
}

TEST(Experiment, AggregatesRecomputableFromRows) {
  auto c = generator_config("strictly-separable", 15);
  c.alphas = {0.05, 0.1};
  const auto r = run_experiment(c);
  ASSERT_EQ(r.rows.size(), 30u);
  for (const auto &agg : r.aggregates) {
    std::vector<double> risk, yld, lam, acc;
    for (const auto &row : r.rows) {
      if (row.alpha != agg.alpha) continue;
      risk.push_back(row.realized_risk);
      yld.push_back(row.yield);
      lam.push_back(row.lambda_hat);
      if (row.selective_accuracy) acc.push_back(*row.selective_accuracy);
    }
    auto check = [](const std::vector<double> &v, const MeanStd &m) {
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0;
      for (double x : v) ss += (x - mean) * (x - mean);
      EXPECT_NEAR(m.mean, mean, 1e-12);
      EXPECT_NEAR(m.std, std::sqrt(ss / static_cast<double>(v.size() - 1)), 1e-12);
      EXPECT_EQ(m.count, v.size());
    };
    check(risk, agg.realized_risk);
    check(yld, agg.yield);
    check(lam, agg.lambda_hat);
    check(acc, agg.selective_accuracy);
  }
}

TEST(Experiment, DatasetInputResplitsAndKeepsIdsDisjoint) {
  const auto ds = generate_dataset(preset("strictly-separable"), 600, 3);
  ExperimentConfig c;
  c.dataset_path = "<memory>";
  c.weight = WeightSpec::exponential(1.0);
  c.n_cal = 200;
  c.n_splits = 5;
  const auto r = run_experiment(c, &ds);
  EXPECT_EQ(r.mode, "split-resampling");
  EXPECT_EQ(r.rows.size(), 5u);
  EXPECT_EQ(r.frontiers.size(), 3u);
  for (const auto &f : r.frontiers) EXPECT_TRUE(f.summary);
  // The split helper itself never overlaps calibration and test.
  for (std::size_t s = 0; s < 5; ++s) {
    const auto sp = split(ds, 200, derive_seed(c.seed, s));
    std::set<std::string> ids;
    for (const auto &i : sp.calibration.instances()) ids.insert(i.id);
    for (const auto &i : sp.test.instances()) EXPECT_FALSE(ids.count(i.id));
  }
  c.score_name = "missing";
  EXPECT_THROW(run_experiment(c, &ds), UnknownScore);
}

TEST(Experiment, DatasetFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "abstain_harness_ds.jsonl";
  {
    std::ofstream out(path);
    write_dataset(out, generate_dataset(preset("diffuse"), 300, 4));
  }
  ExperimentConfig c;
  c.dataset_path = path.string();
  c.n_cal = 100;
  c.n_splits = 3;
  const auto r = run_experiment(c);
  EXPECT_EQ(r.rows.size(), 3u);
  std::filesystem::remove(path);
}

TEST(Experiment, PredictorGapTable) {
  auto c = generator_config("strictly-separable", 5);
  c.n_cal = 1000;
  c.n_test = 1000;
  const auto r = run_experiment(c);
  ASSERT_EQ(r.predictor_gaps.size(), 5u);
  for (const auto &g : r.predictor_gaps) {
    ASSERT_TRUE(g.max_gap);
    ASSERT_TRUE(g.bound);
    EXPECT_LT(*g.max_gap, 0.2);
    EXPECT_GT(*g.bound, 0.0);
  }
}

TEST(Experiment, ReportsSerialize) {
  auto c = generator_config("diffuse", 3);
  const auto r = run_experiment(c);
  const auto j = to_json(r);
  EXPECT_EQ(j["splits"].size(), 3u);
  EXPECT_EQ(j["mode"], "fresh-draw");
  EXPECT_EQ(j["tool"]["version"], kVersion);
  std::ostringstream csv;
  write_splits_csv(csv, r);
  std::istringstream in(csv.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 4);
  EXPECT_NE(text_summary(r).find("alpha=0.100"), std::string::npos);
}

TEST(Guarantee, RejectsFixedDatasetWithoutOverride) {
  const auto ds = generate_dataset(preset("diffuse"), 300, 3);
  ExperimentConfig c;
  c.dataset_path = "<memory>";
  c.n_cal = 100;
  c.n_splits = 4;
  EXPECT_THROW(validate_guarantee(c, &ds), ConfigError);
  c.allow_split_resampling = true;
  const auto g = validate_guarantee(c, &ds);
  EXPECT_EQ(g.mode, "split-resampling");
  EXPECT_NE(text_summary(g).find("split-resampling"), std::string::npos);
}

TEST(Guarantee, PassesOnExchangeableData) {
  auto c = generator_config("strictly-separable", 200);
  c.alphas = {0.05, 0.1};
  const auto g = validate_guarantee(c);
  EXPECT_TRUE(g.pass);
  for (const auto &chk : g.checks) {
    EXPECT_NEAR(chk.threshold, chk.alpha + 3 * chk.std_risk / std::sqrt(200.0), 1e-15);
    EXPECT_LE(chk.mean_risk, chk.threshold);
  }
  EXPECT_EQ(to_json(g)["pass"], true);
}

TEST(Guarantee, DetectsDistributionShift) {
  auto c = generator_config("strictly-separable", 50);
  c.test_generator = preset("shifted-confident-wrong");
  const auto g = validate_guarantee(c);
  EXPECT_FALSE(g.pass);
  EXPECT_GT(g.checks[0].mean_risk, 0.1);
}

TEST(Ablation, PoolSizeSweep) {
  auto c = generator_config("strictly-separable", 30);
  const auto t = ablation_sweep(c, "m", {"4", "8", "16"});
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_LT(t.rows[0].aggregate.yield.mean, t.rows[2].aggregate.yield.mean);
  EXPECT_NEAR(t.rows[1].aggregate.selective_accuracy.mean, t.rows[2].aggregate.selective_accuracy.mean, 0.05);
}

TEST(Ablation, CalibrationSizeShrinksThresholdSpread) {
  auto c = generator_config("strictly-separable", 60);
  c.weight = WeightSpec::exponential(1.0);
  const auto t = ablation_sweep(c, "n_cal", {"50", "200", "500"});
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_GT(t.rows[0].aggregate.lambda_hat.std, t.rows[1].aggregate.lambda_hat.std);
  EXPECT_GT(t.rows[1].aggregate.lambda_hat.std, t.rows[2].aggregate.lambda_hat.std);
}

TEST(Ablation, WeightLimits) {
  auto c = generator_config("adversarial-wrong-plurality", 5);
  const auto t = ablation_sweep(c, "weight", {"exp:0", "uniform"});
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].aggregate.realized_risk.mean, t.rows[1].aggregate.realized_risk.mean);
  EXPECT_EQ(t.rows[0].aggregate.lambda_hat.mean, t.rows[1].aggregate.lambda_hat.mean);
}

TEST(Ablation, ScoreAxisAndErrors) {
  auto c = generator_config("strictly-separable", 5);
  c.weight = WeightSpec::exponential(1.0);
  const auto t = ablation_sweep(c, "score", {"reward", "judge", "noise"});
  EXPECT_EQ(t.rows.size(), 3u);
  EXPECT_THROW(ablation_sweep(c, "colour", {"x"}), ConfigError);
  EXPECT_THROW(ablation_sweep(c, "m", {"four"}), ConfigError);
  EXPECT_THROW(ablation_sweep(c, "m", {}), ConfigError);
  std::ostringstream os;
  write_ablation_csv(os, t);
  EXPECT_EQ(os.str().substr(0, 10), "axis,value");
}
