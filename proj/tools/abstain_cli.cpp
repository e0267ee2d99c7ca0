// Command-line front end for the abstain library.
//
// Exit codes: 0 success, 1 validation failure (bad data, failed guarantee),
// 2 usage error (bad flags or config).

#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "abstain/abstain.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace abstain;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr const char *kOutputDirEnv = "ABSTAIN_OUTPUT_DIR";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string &data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

// Collects artifacts written under one output directory and lists them, with
// checksums, in manifest.json.
class OutputDir {
 public:
  OutputDir(fs::path root, std::string command) : root_(std::move(root)), command_(std::move(command)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + root_.string() + "': " + ec.message());
  }

  void write(const std::string &name, const std::string &content) {
    const auto path = root_ / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    artifacts_.push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }

  void write_json(const std::string &name, const nlohmann::ordered_json &j) { write(name, j.dump(2) + "\n"); }

  template <class Fn>
  void write_with(const std::string &name, Fn &&fn) {
    std::ostringstream os;
    fn(os);
    write(name, os.str());
  }

  void finish() {
    nlohmann::ordered_json m;
    m["tool"] = "abstain";
    m["version"] = kVersion;
    m["command"] = command_;
    m["artifacts"] = artifacts_;
    std::ofstream out(root_ / "manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
  }

  const fs::path &root() const { return root_; }

 private:
  fs::path root_;
  std::string command_;
  nlohmann::ordered_json artifacts_ = nlohmann::ordered_json::array();
};

// Flags shared by every subcommand plus per-command overrides of config keys.
struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::string input;
  std::string generator;
  std::string score;
  std::string weight;
  std::vector<double> alphas;
  std::size_t n_cal = 0;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::size_t threads = 0;
  double delta_0 = 0.0;
  double delta = 0.0;
  std::string policy;
  std::string axis;
  std::vector<std::string> values;
  bool allow_split_resampling = false;
  bool quiet = false;

  const CLI::App *app = nullptr;
  bool given(const std::string &flag) const {
    const auto *opt = app ? app->get_option_no_throw(flag) : nullptr;
    return opt && opt->count() > 0;
  }
};

nlohmann::json read_config_doc(const std::string &path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    auto doc = nlohmann::json::parse(in, nullptr, true, true);
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    return doc;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

// Merges the config file with command-line overrides; --input or --generator
// replace the config's input section.
ExperimentConfig resolve_config(const Options &o) {
  auto doc = read_config_doc(o.config_path);
  if (o.given("--input")) doc["input"] = {{"dataset", o.input}};
  if (o.given("--generator")) doc["input"] = {{"generator", o.generator}};
  if (!doc.contains("input")) throw UsageError("no input: pass --input, --generator, or a config with an input section");
  if (o.given("--seed")) doc["seed"] = o.seed;
  if (o.given("--score")) doc["score_name"] = o.score;
  if (o.given("--weight")) doc["weight"] = o.weight;
  if (o.given("--alpha")) doc["alphas"] = o.alphas;
  if (o.given("--n-cal")) doc["n_cal"] = o.n_cal;
  if (o.given("--trials")) doc["n_splits"] = o.trials;
  if (o.given("--threads")) doc["threads"] = o.threads;
  if (o.given("--delta-0")) doc["delta_0"] = o.delta_0;
  if (o.given("--delta")) doc["delta"] = o.delta;
  if (o.given("--allow-split-resampling")) doc["allow_split_resampling"] = true;
  auto cfg = config_from_json(doc);
  if (o.given("--out")) {
    cfg.output_dir = o.out;
  } else if (const char *env = std::getenv(kOutputDirEnv); env && *env) {
    cfg.output_dir = env;
  }
  return cfg;
}

Dataset dataset_of(const ExperimentConfig &cfg) {
  if (!cfg.dataset_path) throw UsageError("this command needs a dataset input (--input or input.dataset)");
  auto ds = parse_dataset(*cfg.dataset_path);
  for (const auto &w : ds.warnings()) std::cerr << "warning: " << w << "\n";
  return ds;
}

double single_alpha(const ExperimentConfig &cfg) {
  if (cfg.alphas.size() != 1) throw UsageError("this command takes exactly one alpha; pass --alpha");
  return cfg.alphas.front();
}

void say(const Options &o, const std::string &line) {
  if (!o.quiet) std::cout << line << "\n";
}

std::string num(double v) { return csv::number(v); }

// ---------------------------------------------------------------------------

int cmd_ingest(const Options &o) {
  const auto cfg = resolve_config(o);
  const auto ds = dataset_of(cfg);
  OutputDir out(cfg.output_dir, "ingest");
  std::size_t min_m = ds.empty() ? 0 : ds[0].m(), max_m = min_m;
  for (const auto &inst : ds.instances()) {
    min_m = std::min(min_m, inst.m());
    max_m = std::max(max_m, inst.m());
  }
  nlohmann::ordered_json summary{{"source", *cfg.dataset_path},
                                 {"instances", ds.size()},
                                 {"score_names", ds.score_names()},
                                 {"min_pool_size", min_m},
                                 {"max_pool_size", max_m},
                                 {"warnings", ds.warnings()}};
  out.write("dataset.jsonl", serialize_dataset(ds));
  out.write_json("ingest.json", summary);
  out.finish();
  say(o, "ingested " + std::to_string(ds.size()) + " instances, " + std::to_string(ds.warnings().size()) +
             " warnings -> " + out.root().string());
  return 0;
}

int cmd_split(const Options &o) {
  const auto cfg = resolve_config(o);
  const auto ds = dataset_of(cfg);
  const auto s = split(ds, cfg.n_cal, cfg.seed);
  OutputDir out(cfg.output_dir, "split");
  out.write("calibration.jsonl", serialize_dataset(s.calibration));
  out.write("test.jsonl", serialize_dataset(s.test));
  out.write_json("split_plan.json", to_json(s.plan));
  out.finish();
  say(o, "split " + std::to_string(ds.size()) + " instances into " + std::to_string(s.calibration.size()) +
             " calibration / " + std::to_string(s.test.size()) + " test -> " + out.root().string());
  return 0;
}

int cmd_calibrate(const Options &o) {
  const auto cfg = resolve_config(o);
  const auto ds = dataset_of(cfg);
  const auto outcomes = aggregate_dataset(ds, cfg.score_name, cfg.weight);
  const auto curve = risk_curve(outcomes);
  const auto policy = crc_threshold(curve, single_alpha(cfg));
  OutputDir out(cfg.output_dir, "calibrate");
  out.write_json("policy.json", to_json(policy));
  out.write_with("risk_curve.csv", [&](std::ostream &os) { write_risk_curve_csv(os, curve); });
  out.write_with("outcomes.csv", [&](std::ostream &os) { write_outcomes_csv(os, outcomes); });
  out.write_json("config.json", to_json(cfg));
  out.finish();
  say(o, "lambda_hat=" + num(policy.lambda_hat) + (policy.always_abstain ? " (always abstain)" : "") +
             " alpha=" + num(policy.alpha) + " n=" + std::to_string(policy.n) + " -> " + out.root().string());
  return 0;
}

nlohmann::ordered_json evaluation_metrics(const Policy &policy, const std::vector<VoteOutcome> &outcomes,
                                          const std::vector<Decision> &decisions, const Dataset &ds) {
  std::vector<std::string> truths;
  for (const auto &inst : ds.instances()) truths.push_back(inst.truth);
  std::size_t answered = 0, correct = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (!decisions[i].answered()) continue;
    ++answered;
    if (outcomes[i].correct) ++correct;
  }
  const double n = static_cast<double>(decisions.size());
  nlohmann::ordered_json j;
  j["lambda_hat"] = policy.lambda_hat;
  j["alpha"] = policy.alpha;
  j["n"] = decisions.size();
  j["answered"] = answered;
  j["realized_risk"] = realized_risk(decisions, truths);
  j["yield"] = n > 0 ? static_cast<double>(answered) / n : 0.0;
  j["selective_accuracy"] = answered ? nlohmann::ordered_json(static_cast<double>(correct) / static_cast<double>(answered))
                                     : nlohmann::ordered_json(nullptr);
  return j;
}

int cmd_evaluate(const Options &o) {
  const auto cfg = resolve_config(o);
  if (o.given("--policy")) {
    std::ifstream in(o.policy);
    if (!in) throw UsageError("cannot open policy file '" + o.policy + "'");
    nlohmann::json pj;
    try {
      pj = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
      throw UsageError("policy '" + o.policy + "': " + e.what());
    }
    const auto policy = policy_from_json(pj);
    const auto ds = dataset_of(cfg);
    const auto outcomes = aggregate_dataset(ds, cfg.score_name, cfg.weight);
    const auto decisions = apply_policy(policy, outcomes);
    const auto metrics = evaluation_metrics(policy, outcomes, decisions, ds);
    OutputDir out(cfg.output_dir, "evaluate");
    out.write_with("decisions.csv", [&](std::ostream &os) { write_decisions_csv(os, decisions); });
    out.write_json("evaluation.json", metrics);
    out.finish();
    say(o, "realized_risk=" + num(metrics["realized_risk"].get<double>()) +
               " yield=" + num(metrics["yield"].get<double>()) + " -> " + out.root().string());
    return 0;
  }
  const auto report = run_experiment(cfg);
  OutputDir out(cfg.output_dir, "evaluate");
  out.write_json("report.json", to_json(report));
  out.write_with("splits.csv", [&](std::ostream &os) { write_splits_csv(os, report); });
  out.write("summary.txt", text_summary(report));
  out.finish();
  if (!o.quiet) std::cout << text_summary(report);
  return 0;
}

int cmd_diagnose(const Options &o) {
  const auto cfg = resolve_config(o);
  const auto ds = dataset_of(cfg);
  const auto outcomes = aggregate_dataset(ds, cfg.score_name, cfg.weight);
  const auto prof = separability_profile(outcomes);
  const auto pred = plugin_predictor(outcomes, {cfg.delta_0, cfg.delta});
  const auto [lambda_star, gap] = prof.max_separation();
  nlohmann::ordered_json j;
  j["score_name"] = cfg.score_name;
  j["weight"] = format_weight(cfg.weight);
  j["n"] = prof.n;
  j["p_v_hat"] = prof.p_v_hat;
  j["max_separation"] = {{"lambda", lambda_star}, {"delta", gap}};
  j["delta_0"] = cfg.delta_0;
  j["delta"] = cfg.delta;
  j["epsilon"] = pred.epsilon;
  j["s0_hat"] = pred.s0_hat ? nlohmann::ordered_json(*pred.s0_hat) : nlohmann::ordered_json(nullptr);
  j["bound"] = pred.bound ? nlohmann::ordered_json(*pred.bound) : nlohmann::ordered_json(nullptr);
  j["sample_size_ok"] = pred.sample_size_ok;
  std::vector<double> operating;
  for (std::size_t i = 0; i < pred.grid.size(); ++i) {
    if (pred.operating[i]) operating.push_back(pred.grid[i]);
  }
  j["operating_set"] = operating;
  OutputDir out(cfg.output_dir, "diagnose");
  out.write_with("diagnostics.csv", [&](std::ostream &os) { write_diagnostics_csv(os, prof, pred); });
  out.write_json("predictor.json", j);
  out.finish();
  say(o, "p_v_hat=" + num(prof.p_v_hat) + " max delta=" + num(gap) + " at lambda=" + num(lambda_star) +
             " -> " + out.root().string());
  return 0;
}

int cmd_frontier(const Options &o) {
  const auto cfg = resolve_config(o);
  const auto ds = dataset_of(cfg);
  std::vector<std::string> scores;
  if (o.given("--score")) {
    scores = {cfg.score_name};
  } else {
    scores = ds.score_names();
  }
  OutputDir out(cfg.output_dir, "frontier");
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const auto &score : scores) {
    const auto pts = sweep(aggregate_dataset(ds, score, cfg.weight));
    out.write_with("frontier_" + score + ".csv", [&](std::ostream &os) { write_frontier_csv(os, pts); });
    nlohmann::ordered_json entry{{"score_name", score}};
    try {
      const auto s = frontier_auc(pts);
      entry["summary"] = to_json(s);
      say(o, score + ": auc=" + num(s.auc) + " pareto_violations=" + std::to_string(s.pareto_violations));
    } catch (const InsufficientPoints &e) {
      entry["summary"] = nullptr;
      entry["note"] = e.what();
      say(o, score + ": " + e.what());
    }
    summary.push_back(std::move(entry));
  }
  out.write_json("frontier.json", {{"weight", format_weight(cfg.weight)}, {"frontiers", summary}});
  out.finish();
  return 0;
}

int cmd_simulate(const Options &o) {
  const auto cfg = resolve_config(o);
  if (!cfg.generator) throw UsageError("simulate needs a generator input (--generator or input.generator)");
  const std::size_t n = o.given("--n") ? o.n : cfg.n_cal + cfg.n_test;
  if (n == 0) throw UsageError("--n must be positive");
  const auto ds = generate_dataset(*cfg.generator, n, cfg.seed);
  OutputDir out(cfg.output_dir, "simulate");
  out.write("dataset.jsonl", serialize_dataset(ds));
  out.write_json("generator.json", to_json(*cfg.generator));
  try {
    const auto exact = closed_form_targets(*cfg.generator, cfg.score_name, cfg.weight);
    nlohmann::ordered_json e;
    e["score_name"] = cfg.score_name;
    e["weight"] = format_weight(cfg.weight);
    e["p_v"] = exact.p_v;
    e["grid"] = exact.grid;
    e["s_cor"] = exact.s_cor;
    e["s_err"] = exact.s_err;
    e["delta"] = exact.delta;
    out.write_json("exact.json", e);
  } catch (const NoClosedForm &) {
  } catch (const TooLarge &) {
  }
  out.finish();
  say(o, "generated " + std::to_string(n) + " instances from '" + cfg.generator->name + "' -> " +
             out.root().string());
  return 0;
}

int cmd_validate_guarantee(const Options &o) {
  const auto cfg = resolve_config(o);
  std::optional<Dataset> fixed;
  if (cfg.dataset_path) fixed = dataset_of(cfg);
  const auto g = validate_guarantee(cfg, fixed ? &*fixed : nullptr);
  OutputDir out(cfg.output_dir, "validate-guarantee");
  out.write_json("guarantee.json", to_json(g));
  out.write_with("splits.csv", [&](std::ostream &os) { write_splits_csv(os, g.report); });
  out.write("guarantee.txt", text_summary(g));
  out.finish();
  if (!o.quiet) std::cout << text_summary(g);
  if (!g.pass) throw ValidationFailure("guarantee check failed");
  return 0;
}

int cmd_ablate(const Options &o) {
  const auto cfg = resolve_config(o);
  const auto axis = o.given("--axis") ? o.axis : cfg.ablation_axis;
  const auto values = o.given("--values") ? o.values : cfg.ablation_values;
  if (axis.empty()) throw UsageError("ablate needs an axis (--axis or ablation.axis)");
  std::optional<Dataset> fixed;
  if (cfg.dataset_path) fixed = dataset_of(cfg);
  const auto t = ablation_sweep(cfg, axis, values, fixed ? &*fixed : nullptr);
  OutputDir out(cfg.output_dir, "ablate");
  out.write_json("ablation.json", to_json(t));
  out.write_with("ablation.csv", [&](std::ostream &os) { write_ablation_csv(os, t); });
  out.write("ablation.txt", text_summary(t));
  out.finish();
  if (!o.quiet) std::cout << text_summary(t);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Confidence-thresholded abstention for weighted self-consistency voting", "abstain"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Options o;
  struct Entry {
    CLI::App *app;
    int (*run)(const Options &);
  };
  std::vector<Entry> entries;

  auto add = [&](const std::string &name, const std::string &help, int (*run)(const Options &)) {
    auto *sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Output directory (overrides " + std::string(kOutputDirEnv) + ")");
    sub->add_flag("--quiet", o.quiet, "Suppress stdout summaries");
    entries.push_back({sub, run});
    return sub;
  };
  auto add_input = [&](CLI::App *sub) { sub->add_option("--input", o.input, "Dataset file (JSON lines)"); };
  auto add_generator = [&](CLI::App *sub) { sub->add_option("--generator", o.generator, "Generator preset name"); };
  auto add_voting = [&](CLI::App *sub) {
    sub->add_option("--score", o.score, "Score channel name");
    sub->add_option("--weight", o.weight, "Weight: uniform | exp[:beta] | linear[:floor]");
  };
  auto add_experiment = [&](CLI::App *sub) {
    add_input(sub);
    add_generator(sub);
    add_voting(sub);
    sub->add_option("--alpha", o.alphas, "Target confident-error rate(s)")->delimiter(',');
    sub->add_option("--n-cal", o.n_cal, "Calibration set size");
    sub->add_option("--trials", o.trials, "Number of splits or fresh-draw trials");
    sub->add_option("--threads", o.threads, "Worker threads (0: hardware concurrency)");
    sub->add_option("--delta-0", o.delta_0, "Operating-set separation threshold");
    sub->add_option("--delta", o.delta, "Failure probability of the predictor bound");
  };

  add_input(add("ingest", "Parse, validate, and normalize a dataset", cmd_ingest));
  {
    auto *s = add("split", "Seeded calibration/test split of a dataset", cmd_split);
    add_input(s);
    s->add_option("--n-cal", o.n_cal, "Calibration set size");
  }
  {
    auto *s = add("calibrate", "Fit the abstention threshold on a calibration set", cmd_calibrate);
    add_input(s);
    add_voting(s);
    s->add_option("--alpha", o.alphas, "Target confident-error rate")->expected(1);
  }
  {
    auto *s = add("evaluate", "Apply a stored policy, or run a multi-split experiment", cmd_evaluate);
    add_experiment(s);
    s->add_option("--policy", o.policy, "policy.json produced by calibrate");
  }
  {
    auto *s = add("diagnose", "Separability profile and plug-in accuracy predictor", cmd_diagnose);
    add_input(s);
    add_voting(s);
    s->add_option("--delta-0", o.delta_0, "Operating-set separation threshold");
    s->add_option("--delta", o.delta, "Failure probability of the predictor bound");
  }
  {
    auto *s = add("frontier", "Accuracy-yield frontier per score channel", cmd_frontier);
    add_input(s);
    add_voting(s);
  }
  {
    auto *s = add("simulate", "Generate a synthetic dataset", cmd_simulate);
    add_generator(s);
    add_voting(s);
    s->add_option("--n", o.n, "Number of prompts (default n_cal + n_test)");
  }
  {
    auto *s = add("validate-guarantee", "Monte Carlo check of the confident-error guarantee",
                  cmd_validate_guarantee);
    add_experiment(s);
    s->add_flag("--allow-split-resampling", o.allow_split_resampling,
                "Permit a fixed dataset (weaker split-resampling mode)");
  }
  {
    auto *s = add("ablate", "Sweep one design axis", cmd_ablate);
    add_experiment(s);
    s->add_option("--axis", o.axis, "m | n_cal | weight | score");
    s->add_option("--values", o.values, "Comma-separated axis values")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  for (const auto &entry : entries) {
    if (!entry.app->parsed()) continue;
    o.app = entry.app;
    try {
      return entry.run(o);
    } catch (const UsageError &e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const ConfigError &e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const ValidationFailure &e) {
      std::cerr << "validation failed: " << e.what() << "\n";
      return kExitValidation;
    } catch (const std::exception &e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitValidation;
    }
  }
  return kExitUsage;
}
