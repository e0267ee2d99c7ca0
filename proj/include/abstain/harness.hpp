#ifndef ABSTAIN_HARNESS_HPP_
#define ABSTAIN_HARNESS_HPP_

// Experiment orchestration: repeated calibration/test trials, Monte Carlo
// validation of the confident-error guarantee, and ablation sweeps.
//
// Dataset input uses the re-splitting protocol (one fixed dataset, a fresh
// random calibration/test split per repetition). Generator input draws a fresh
// calibration set and a fresh test set for every repetition, which is what the
// marginal guarantee is a statement about.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "abstain/aggregate.hpp"
#include "abstain/calibrate.hpp"
#include "abstain/diagnose.hpp"
#include "abstain/errors.hpp"
#include "abstain/frontier.hpp"
#include "abstain/records.hpp"
#include "abstain/synth.hpp"
#include "abstain/version.hpp"
#include "json.hpp"

namespace abstain {

struct ExperimentConfig {
  std::optional<std::string> dataset_path;
  std::optional<GeneratorSpec> generator;
  std::optional<GeneratorSpec> test_generator;   // distribution-shift scenarios
  std::string generator_label;                   // preset name as written in the config
  std::string score_name = "reward";
  WeightSpec weight = WeightSpec::exponential(1.0);
  std::vector<double> alphas{0.10};
  std::size_t n_cal = 200;
  std::size_t n_test = 500;                      // generator input only
  std::size_t n_splits = 20;
  std::uint64_t seed = 0;
  double delta_0 = 0.1;
  double delta = 0.05;
  std::string output_dir = "out";
  std::size_t threads = 1;                       // 0: one per hardware thread
  bool allow_split_resampling = false;
  std::string ablation_axis;
  std::vector<std::string> ablation_values;
};

inline void validate(const ExperimentConfig &c) {
  if (c.dataset_path.has_value() == c.generator.has_value()) {
    throw ConfigError("config needs exactly one input: a dataset path or a generator");
  }
  if (c.test_generator && !c.generator) {
    throw ConfigError("test_generator requires generator input");
  }
  if (c.alphas.empty()) throw ConfigError("alphas must be non-empty");
  for (double a : c.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("every alpha must lie in (0, 1)");
  }
  if (c.n_splits < 1) throw ConfigError("n_splits must be at least 1");
  if (c.n_cal < 1) throw ConfigError("n_cal must be at least 1");
  if (c.generator && c.n_test < 1) throw ConfigError("n_test must be at least 1");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (c.score_name.empty()) throw ConfigError("score_name must be non-empty");
  validate(c.weight);
}

namespace detail {

// Resolves a "generator" config entry; the distribution-shift preset expands
// to a calibration population and a different test population.
inline void resolve_generator(ExperimentConfig &c, const nlohmann::json &gen) {
  const bool is_shift = (gen.is_string() && gen.get<std::string>() == "distribution-shift") ||
                        (gen.is_object() && gen.value("preset", std::string()) == "distribution-shift");
  if (is_shift) {
    c.generator_label = "distribution-shift";
    c.generator = preset("strictly-separable");
    c.test_generator = preset("shifted-confident-wrong");
    if (gen.is_object() && gen.contains("m")) {
      const auto m = gen.at("m").get<std::size_t>();
      c.generator = with_pool_size(*c.generator, m);
      c.test_generator = with_pool_size(*c.test_generator, m);
    }
    return;
  }
  c.generator = generator_from_json(gen);
  c.generator_label = gen.is_string() ? gen.get<std::string>()
                                      : gen.value("preset", c.generator->name);
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json &j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (auto in = j.find("input"); in != j.end()) {
      if (in->contains("dataset")) c.dataset_path = in->at("dataset").get<std::string>();
      if (in->contains("generator")) detail::resolve_generator(c, in->at("generator"));
      if (in->contains("test_generator")) c.test_generator = generator_from_json(in->at("test_generator"));
    }
    c.score_name = j.value("score_name", c.score_name);
    if (j.contains("weight")) c.weight = weight_from_json(j.at("weight"));
    if (j.contains("alphas")) c.alphas = j.at("alphas").get<std::vector<double>>();
    c.n_cal = j.value("n_cal", c.n_cal);
    c.n_test = j.value("n_test", c.n_test);
    c.n_splits = j.value("n_splits", c.n_splits);
    c.seed = j.value("seed", c.seed);
    c.delta_0 = j.value("delta_0", c.delta_0);
    c.delta = j.value("delta", c.delta);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.threads = j.value("threads", c.threads);
    c.allow_split_resampling = j.value("allow_split_resampling", c.allow_split_resampling);
    if (auto ab = j.find("ablation"); ab != j.end()) {
      c.ablation_axis = ab->value("axis", std::string());
      for (const auto &v : ab->at("values")) {
        c.ablation_values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

inline nlohmann::ordered_json to_json(const ExperimentConfig &c) {
  nlohmann::ordered_json input;
  if (c.dataset_path) input["dataset"] = *c.dataset_path;
  if (c.generator) {
    input["generator_label"] = c.generator_label;
    input["generator"] = to_json(*c.generator);
  }
  if (c.test_generator) input["test_generator"] = to_json(*c.test_generator);
  nlohmann::ordered_json j;
  j["input"] = std::move(input);
  j["score_name"] = c.score_name;
  j["weight"] = to_json(c.weight);
  j["alphas"] = c.alphas;
  j["n_cal"] = c.n_cal;
  if (c.generator) j["n_test"] = c.n_test;
  j["n_splits"] = c.n_splits;
  j["seed"] = c.seed;
  j["delta_0"] = c.delta_0;
  j["delta"] = c.delta;
  j["allow_split_resampling"] = c.allow_split_resampling;
  if (!c.ablation_axis.empty()) {
    j["ablation"] = {{"axis", c.ablation_axis}, {"values", c.ablation_values}};
  }
  return j;
}

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes
// only its own result slot, so the outcome does not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body &&body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto &th : pool) th.join();
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;     // sample standard deviation (n - 1); 0 for one value
  std::size_t count = 0;
};

inline MeanStd mean_std(const std::vector<double> &values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

// One (split, alpha) cell.
struct SplitRow {
  std::size_t split = 0;
  double alpha = 0.0;
  double lambda_hat = 1.0;
  bool always_abstain = false;
  double realized_risk = 0.0;
  std::optional<double> selective_accuracy;   // empty when nothing answered
  double yield = 0.0;
  std::optional<double> predicted_a_c;        // calibration plug-in at lambda_hat
};

// Calibration-side predictor against test-side observation, one per split.
struct PredictorGapRow {
  std::size_t split = 0;
  double p_v_cal = 0.0;
  double p_v_test = 0.0;
  std::optional<double> max_gap;   // sup over operating set of |A_c_hat - A_c_test|
  std::optional<double> s0_hat;
  std::optional<double> bound;
  std::string note;                // why the row is empty, if it is
};

struct AlphaAggregate {
  double alpha = 0.0;
  MeanStd lambda_hat, realized_risk, selective_accuracy, yield;
  std::size_t always_abstain_splits = 0;
};

struct ScoreFrontier {
  std::string score_name;
  std::optional<FrontierSummary> summary;
  std::string note;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string mode;                       // "fresh-draw" or "split-resampling"
  std::vector<SplitRow> rows;             // split-major, alphas in config order
  std::vector<AlphaAggregate> aggregates;
  std::vector<PredictorGapRow> predictor_gaps;
  std::vector<ScoreFrontier> frontiers;
};

struct RunOptions {
  bool diagnostics = true;   // predictor-gap table and frontier summaries
};

namespace detail {

inline constexpr std::uint64_t kCalStream = 1;
inline constexpr std::uint64_t kTestStream = 2;
inline constexpr std::uint64_t kFrontierStream = 3;

struct TrialData {
  Dataset calibration;
  Dataset test;
};

inline TrialData draw_trial(const ExperimentConfig &c, const Dataset *fixed, std::size_t split) {
  const auto trial_seed = derive_seed(c.seed, split);
  if (fixed) {
    auto s = abstain::split(*fixed, c.n_cal, trial_seed);
    return {std::move(s.calibration), std::move(s.test)};
  }
  // Distinct id ranges keep calibration and test ids disjoint.
  auto cal = generate_dataset(*c.generator, c.n_cal, derive_seed(trial_seed, kCalStream), 0);
  auto test = generate_dataset(c.test_generator ? *c.test_generator : *c.generator, c.n_test,
                               derive_seed(trial_seed, kTestStream), c.n_cal);
  return {std::move(cal), std::move(test)};
}

inline void assert_disjoint(const Dataset &a, const Dataset &b) {
  std::unordered_set<std::string> ids;
  ids.reserve(a.size());
  for (const auto &inst : a.instances()) ids.insert(inst.id);
  for (const auto &inst : b.instances()) {
    if (ids.count(inst.id)) {
      throw std::logic_error("instance '" + inst.id + "' is in both calibration and test sets");
    }
  }
}

inline std::vector<std::string> truths_of(const Dataset &ds) {
  std::vector<std::string> out;
  out.reserve(ds.size());
  for (const auto &inst : ds.instances()) out.push_back(inst.truth);
  return out;
}

struct TrialResult {
  std::vector<SplitRow> rows;
  PredictorGapRow gap;
};

inline PredictorGapRow predictor_gap(const ExperimentConfig &c, std::size_t split,
                                     const std::vector<VoteOutcome> &cal,
                                     const std::vector<VoteOutcome> &test) {
  PredictorGapRow row;
  row.split = split;
  auto accuracy = [](const std::vector<VoteOutcome> &v) {
    std::size_t k = 0;
    for (const auto &o : v) k += o.correct ? 1 : 0;
    return v.empty() ? 0.0 : static_cast<double>(k) / static_cast<double>(v.size());
  };
  row.p_v_cal = accuracy(cal);
  row.p_v_test = accuracy(test);
  PredictorOutput pred;
  try {
    pred = plugin_predictor(cal, {c.delta_0, c.delta});
  } catch (const DegenerateStratum &) {
    row.note = "degenerate calibration stratum";
    return row;
  }
  row.s0_hat = pred.s0_hat;
  row.bound = pred.bound;
  std::vector<double> nu_all, nu_cor;
  for (const auto &o : test) {
    nu_all.push_back(o.confidence);
    if (o.correct) nu_cor.push_back(o.confidence);
  }
  std::sort(nu_all.begin(), nu_all.end());
  std::sort(nu_cor.begin(), nu_cor.end());
  for (std::size_t i = 0; i < pred.grid.size(); ++i) {
    if (!pred.operating[i] || !pred.a_c_hat[i]) continue;
    const auto sel = count_above(nu_all, pred.grid[i]);
    if (sel == 0) continue;
    const double observed =
        static_cast<double>(count_above(nu_cor, pred.grid[i])) / static_cast<double>(sel);
    const double gap = std::abs(*pred.a_c_hat[i] - observed);
    row.max_gap = row.max_gap ? std::max(*row.max_gap, gap) : gap;
  }
  if (!row.max_gap) row.note = "empty operating set";
  return row;
}

inline TrialResult run_trial(const ExperimentConfig &c, const Dataset *fixed, std::size_t split,
                             const RunOptions &opts) {
  const auto data = draw_trial(c, fixed, split);
  assert_disjoint(data.calibration, data.test);
  const auto cal = aggregate_dataset(data.calibration, c.score_name, c.weight);
  const auto test = aggregate_dataset(data.test, c.score_name, c.weight);
  const auto truths = truths_of(data.test);
  const auto curve = risk_curve(cal);

  std::optional<PredictorOutput> pred;
  TrialResult result;
  if (opts.diagnostics) {
    result.gap = predictor_gap(c, split, cal, test);
    try {
      pred = plugin_predictor(cal, {c.delta_0, c.delta});
    } catch (const DegenerateStratum &) {
    }
  }

  for (double alpha : c.alphas) {
    const auto policy = crc_threshold(curve, alpha);
    const auto decisions = apply_policy(policy, test);
    SplitRow row;
    row.split = split;
    row.alpha = alpha;
    row.lambda_hat = policy.lambda_hat;
    row.always_abstain = policy.always_abstain;
    row.realized_risk = realized_risk(decisions, truths);
    std::size_t answered = 0, right = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
      if (!decisions[i].answered()) continue;
      ++answered;
      right += decisions[i].answer == truths[i] ? 1 : 0;
    }
    row.yield = static_cast<double>(answered) / static_cast<double>(decisions.size());
    if (answered > 0) row.selective_accuracy = static_cast<double>(right) / static_cast<double>(answered);
    if (pred && !policy.always_abstain) row.predicted_a_c = pred->a_c_at(policy.lambda_hat);
    result.rows.push_back(row);
  }
  return result;
}

inline std::vector<AlphaAggregate> aggregate_rows(const std::vector<double> &alphas,
                                                  const std::vector<SplitRow> &rows) {
  std::vector<AlphaAggregate> out;
  for (double alpha : alphas) {
    AlphaAggregate agg;
    agg.alpha = alpha;
    std::vector<double> lam, risk, acc, yld;
    for (const auto &r : rows) {
      if (r.alpha != alpha) continue;
      lam.push_back(r.lambda_hat);
      risk.push_back(r.realized_risk);
      yld.push_back(r.yield);
      if (r.selective_accuracy) acc.push_back(*r.selective_accuracy);
      agg.always_abstain_splits += r.always_abstain ? 1 : 0;
    }
    agg.lambda_hat = mean_std(lam);
    agg.realized_risk = mean_std(risk);
    agg.selective_accuracy = mean_std(acc);
    agg.yield = mean_std(yld);
    out.push_back(agg);
  }
  return out;
}

inline std::vector<ScoreFrontier> score_frontiers(const ExperimentConfig &c, const Dataset &ds) {
  std::vector<ScoreFrontier> out;
  for (const auto &name : ds.score_names()) {
    ScoreFrontier f;
    f.score_name = name;
    try {
      f.summary = frontier(aggregate_dataset(ds, name, c.weight));
    } catch (const Error &e) {
      f.note = e.what();
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace detail

inline Dataset load_dataset_input(const ExperimentConfig &c) {
  return parse_dataset(*c.dataset_path);
}

// `fixed` overrides the config's dataset path (used when the caller already
// holds the dataset in memory).
inline ExperimentReport run_experiment(const ExperimentConfig &config,
                                       const Dataset *fixed = nullptr,
                                       const RunOptions &opts = {}) {
  ExperimentConfig c = config;
  std::optional<Dataset> loaded;
  if (fixed) {
    if (!c.dataset_path) c.dataset_path = "<memory>";
    c.generator.reset();
    c.test_generator.reset();
  }
  validate(c);
  if (!fixed && c.dataset_path) {
    loaded = load_dataset_input(c);
    fixed = &*loaded;
  }
  if (fixed && !fixed->has_score(c.score_name)) {
    throw UnknownScore("dataset has no score '" + c.score_name + "'");
  }

  ExperimentReport report;
  report.config = c;
  report.mode = fixed ? "split-resampling" : "fresh-draw";

  std::vector<detail::TrialResult> trials(c.n_splits);
  parallel_for(c.n_splits, c.threads, [&](std::size_t s) {
    try {
      trials[s] = detail::run_trial(c, fixed, s, opts);
    } catch (const Error &e) {
      throw Error("split " + std::to_string(s) + ": " + e.what());
    }
  });
  for (auto &t : trials) {
    report.rows.insert(report.rows.end(), t.rows.begin(), t.rows.end());
    if (opts.diagnostics) report.predictor_gaps.push_back(std::move(t.gap));
  }
  report.aggregates = detail::aggregate_rows(c.alphas, report.rows);
  if (opts.diagnostics) {
    if (fixed) {
      report.frontiers = detail::score_frontiers(c, *fixed);
    } else {
      const auto ds = generate_dataset(*c.generator, c.n_cal + c.n_test,
                                       derive_seed(c.seed, detail::kFrontierStream));
      report.frontiers = detail::score_frontiers(c, ds);
    }
  }
  return report;
}

struct GuaranteeCheck {
  double alpha = 0.0;
  double mean_risk = 0.0;
  double std_risk = 0.0;
  double standard_error = 0.0;
  double threshold = 0.0;           // alpha + 3 * SE
  bool pass = false;                // mean_risk <= threshold
  bool within_one_std = false;      // mean_risk <= alpha + std_risk
  double mean_yield = 0.0;
  std::size_t always_abstain_trials = 0;
};

struct GuaranteeSummary {
  std::string mode;
  std::size_t trials = 0;
  std::vector<GuaranteeCheck> checks;
  bool pass = false;
  ExperimentReport report;
};

inline GuaranteeSummary validate_guarantee(const ExperimentConfig &config,
                                           const Dataset *fixed = nullptr) {
  validate(config);
  const bool dataset_input = fixed || config.dataset_path;
  if (dataset_input && !config.allow_split_resampling) {
    throw ConfigError(
        "guarantee validation needs generator input (fresh draws per trial); set "
        "allow_split_resampling to re-split a fixed dataset instead");
  }
  GuaranteeSummary out;
  out.report = run_experiment(config, fixed, RunOptions{false});
  out.mode = out.report.mode;
  out.trials = config.n_splits;
  out.pass = true;
  for (const auto &agg : out.report.aggregates) {
    GuaranteeCheck chk;
    chk.alpha = agg.alpha;
    chk.mean_risk = agg.realized_risk.mean;
    chk.std_risk = agg.realized_risk.std;
    chk.standard_error = agg.realized_risk.std / std::sqrt(static_cast<double>(agg.realized_risk.count));
    chk.threshold = agg.alpha + 3.0 * chk.standard_error;
    chk.pass = chk.mean_risk <= chk.threshold;
    chk.within_one_std = chk.mean_risk <= agg.alpha + chk.std_risk;
    chk.mean_yield = agg.yield.mean;
    chk.always_abstain_trials = agg.always_abstain_splits;
    out.pass = out.pass && chk.pass;
    out.checks.push_back(chk);
  }
  return out;
}

struct AblationRow {
  std::string axis;
  std::string value;
  AlphaAggregate aggregate;
};

struct AblationTable {
  std::string axis;
  std::vector<AblationRow> rows;
};

inline AblationTable ablation_sweep(const ExperimentConfig &config, const std::string &axis,
                                    const std::vector<std::string> &values,
                                    const Dataset *fixed = nullptr) {
  if (values.empty()) throw ConfigError("ablation needs at least one axis value");
  AblationTable table;
  table.axis = axis;
  for (const auto &value : values) {
    ExperimentConfig c = config;
    auto to_size = [&](const std::string &s) {
      std::size_t pos = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(s, &pos);
      } catch (const std::exception &) {
        pos = 0;
      }
      if (pos != s.size() || s.empty()) throw ConfigError("ablation value '" + s + "' is not a count");
      return static_cast<std::size_t>(v);
    };
    if (axis == "m") {
      if (!c.generator || fixed) throw ConfigError("the m axis needs generator input");
      const auto m = to_size(value);
      c.generator = with_pool_size(*c.generator, m);
      if (c.test_generator) c.test_generator = with_pool_size(*c.test_generator, m);
    } else if (axis == "n_cal") {
      c.n_cal = to_size(value);
    } else if (axis == "weight") {
      c.weight = parse_weight(value);
    } else if (axis == "score") {
      c.score_name = value;
    } else {
      throw ConfigError("unknown ablation axis '" + axis + "' (m, n_cal, weight, score)");
    }
    const auto report = run_experiment(c, fixed, RunOptions{false});
    for (const auto &agg : report.aggregates) table.rows.push_back({axis, value, agg});
  }
  return table;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline nlohmann::ordered_json opt(std::optional<double> v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const MeanStd &m) {
  return {{"mean", m.mean}, {"std", m.std}, {"count", m.count}};
}

inline std::string pm(const MeanStd &m, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  if (m.count == 0) return "n/a";
  os << m.mean << " +- " << m.std;
  return os.str();
}

inline std::string fixed(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const ExperimentReport &r) {
  using detail::opt;
  nlohmann::ordered_json j;
  j["tool"] = {{"name", "abstain"}, {"version", std::string(kVersion)}};
  j["config"] = to_json(r.config);
  j["mode"] = r.mode;
  nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
  for (const auto &a : r.aggregates) {
    aggs.push_back({{"alpha", a.alpha},
                    {"lambda_hat", detail::to_json(a.lambda_hat)},
                    {"realized_risk", detail::to_json(a.realized_risk)},
                    {"selective_accuracy", detail::to_json(a.selective_accuracy)},
                    {"yield", detail::to_json(a.yield)},
                    {"always_abstain_splits", a.always_abstain_splits}});
  }
  j["aggregates"] = std::move(aggs);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto &row : r.rows) {
    rows.push_back({{"split", row.split},
                    {"alpha", row.alpha},
                    {"lambda_hat", row.lambda_hat},
                    {"always_abstain", row.always_abstain},
                    {"realized_risk", row.realized_risk},
                    {"selective_accuracy", opt(row.selective_accuracy)},
                    {"yield", row.yield},
                    {"predicted_a_c", opt(row.predicted_a_c)}});
  }
  j["splits"] = std::move(rows);
  nlohmann::ordered_json gaps = nlohmann::ordered_json::array();
  for (const auto &g : r.predictor_gaps) {
    nlohmann::ordered_json row = {{"split", g.split},     {"p_v_cal", g.p_v_cal},
                                  {"p_v_test", g.p_v_test}, {"max_gap", opt(g.max_gap)},
                                  {"s0_hat", opt(g.s0_hat)}, {"bound", opt(g.bound)}};
    if (!g.note.empty()) row["note"] = g.note;
    gaps.push_back(std::move(row));
  }
  j["predictor_gaps"] = std::move(gaps);
  nlohmann::ordered_json fronts = nlohmann::ordered_json::array();
  for (const auto &f : r.frontiers) {
    nlohmann::ordered_json row = {{"score", f.score_name}};
    if (f.summary) {
      row["frontier"] = to_json(*f.summary);
    } else {
      row["note"] = f.note;
    }
    fronts.push_back(std::move(row));
  }
  j["frontiers"] = std::move(fronts);
  return j;
}

inline void write_splits_csv(std::ostream &os, const ExperimentReport &r) {
  os << "split,alpha,lambda_hat,always_abstain,realized_risk,selective_accuracy,yield,predicted_a_c\n";
  for (const auto &row : r.rows) {
    os << row.split << ',' << csv::number(row.alpha) << ',' << csv::number(row.lambda_hat) << ','
       << (row.always_abstain ? 1 : 0) << ',' << csv::number(row.realized_risk) << ','
       << csv::number(row.selective_accuracy) << ',' << csv::number(row.yield) << ','
       << csv::number(row.predicted_a_c) << '\n';
  }
}

inline std::string text_summary(const ExperimentReport &r) {
  std::ostringstream os;
  os << "abstain " << kVersion << " experiment (" << r.mode << ", " << r.config.n_splits
     << " splits, n_cal=" << r.config.n_cal << ", score=" << r.config.score_name
     << ", weight=" << format_weight(r.config.weight) << ")\n";
  for (const auto &a : r.aggregates) {
    os << "  alpha=" << detail::fixed(a.alpha, 3) << "  risk " << detail::pm(a.realized_risk)
       << "  A_c " << detail::pm(a.selective_accuracy) << "  yield " << detail::pm(a.yield)
       << "  lambda_hat " << detail::pm(a.lambda_hat);
    if (a.always_abstain_splits) os << "  (always-abstain in " << a.always_abstain_splits << " splits)";
    os << '\n';
  }
  for (const auto &f : r.frontiers) {
    os << "  frontier[" << f.score_name << "] ";
    if (f.summary) {
      os << "auc=" << detail::fixed(f.summary->auc) << " over yield [" << detail::fixed(f.summary->y_min)
         << ", " << detail::fixed(f.summary->y_max) << "], pareto violations "
         << f.summary->pareto_violations << '\n';
    } else {
      os << f.note << '\n';
    }
  }
  return os.str();
}

inline nlohmann::ordered_json to_json(const GuaranteeSummary &g) {
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto &c : g.checks) {
    checks.push_back({{"alpha", c.alpha},
                      {"mean_realized_risk", c.mean_risk},
                      {"std_realized_risk", c.std_risk},
                      {"standard_error", c.standard_error},
                      {"threshold", c.threshold},
                      {"pass", c.pass},
                      {"within_one_std", c.within_one_std},
                      {"mean_yield", c.mean_yield},
                      {"always_abstain_trials", c.always_abstain_trials}});
  }
  return {{"tool", {{"name", "abstain"}, {"version", std::string(kVersion)}}},
          {"mode", g.mode},
          {"trials", g.trials},
          {"rule", "pass iff mean realized risk <= alpha + 3 * SE"},
          {"checks", std::move(checks)},
          {"pass", g.pass},
          {"config", to_json(g.report.config)}};
}

inline std::string text_summary(const GuaranteeSummary &g) {
  std::ostringstream os;
  os << "confident-error guarantee check (" << g.mode << ", " << g.trials << " trials)\n";
  if (g.mode == "split-resampling") {
    os << "  note: re-splitting one fixed dataset; trials are not independent draws\n";
  }
  for (const auto &c : g.checks) {
    os << "  alpha=" << detail::fixed(c.alpha, 3) << "  mean risk " << detail::fixed(c.mean_risk, 5)
       << " (SE " << detail::fixed(c.standard_error, 5) << ", limit " << detail::fixed(c.threshold, 5)
       << ")  " << (c.pass ? "PASS" : "FAIL") << "  mean yield " << detail::fixed(c.mean_yield)
       << '\n';
  }
  os << "  rule: mean <= alpha + 3*SE. The looser 'above-target means within one std' reading "
        "is reported as within_one_std in the JSON output.\n";
  os << (g.pass ? "PASS" : "FAIL") << '\n';
  return os.str();
}

inline nlohmann::ordered_json to_json(const AblationTable &t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto &r : t.rows) {
    rows.push_back({{"value", r.value},
                    {"alpha", r.aggregate.alpha},
                    {"selective_accuracy", detail::to_json(r.aggregate.selective_accuracy)},
                    {"yield", detail::to_json(r.aggregate.yield)},
                    {"realized_risk", detail::to_json(r.aggregate.realized_risk)},
                    {"lambda_hat", detail::to_json(r.aggregate.lambda_hat)}});
  }
  return {{"axis", t.axis}, {"rows", std::move(rows)}};
}

inline void write_ablation_csv(std::ostream &os, const AblationTable &t) {
  os << "axis,value,alpha,a_c_mean,a_c_std,yield_mean,yield_std,risk_mean,risk_std,lambda_mean,lambda_std\n";
  for (const auto &r : t.rows) {
    const auto &a = r.aggregate;
    os << t.axis << ',' << csv::field(r.value) << ',' << csv::number(a.alpha) << ','
       << csv::number(a.selective_accuracy.mean) << ',' << csv::number(a.selective_accuracy.std) << ','
       << csv::number(a.yield.mean) << ',' << csv::number(a.yield.std) << ','
       << csv::number(a.realized_risk.mean) << ',' << csv::number(a.realized_risk.std) << ','
       << csv::number(a.lambda_hat.mean) << ',' << csv::number(a.lambda_hat.std) << '\n';
  }
}

inline std::string text_summary(const AblationTable &t) {
  std::ostringstream os;
  os << "ablation over " << t.axis << "\n";
  for (const auto &r : t.rows) {
    os << "  " << t.axis << "=" << r.value << "  alpha=" << detail::fixed(r.aggregate.alpha, 3)
       << "  A_c " << detail::pm(r.aggregate.selective_accuracy) << "  yield "
       << detail::pm(r.aggregate.yield) << "  risk " << detail::pm(r.aggregate.realized_risk)
       << "  lambda_hat " << detail::pm(r.aggregate.lambda_hat) << '\n';
  }
  return os.str();
}

}  // namespace abstain

#endif  // ABSTAIN_HARNESS_HPP_
