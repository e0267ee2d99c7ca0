#ifndef ABSTAIN_CALIBRATE_HPP_
#define ABSTAIN_CALIBRATE_HPP_

// Conformal risk control on the confident-error loss
//   L_i(lambda) = 1[nu_i > lambda and winner_i != truth_i].
//
// The calibrated threshold is the smallest lambda whose empirical risk is at
// most alpha - (1 - alpha) / n; if that bound is negative the policy abstains
// on every input. The policy answers only when nu strictly exceeds lambda.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "abstain/aggregate.hpp"
#include "abstain/csv.hpp"
#include "abstain/errors.hpp"
#include "json.hpp"

namespace abstain {

inline constexpr int kGridVersion = 1;

inline int confident_error_loss(const VoteOutcome &outcome, double lambda) {
  return outcome.confidence > lambda && !outcome.correct ? 1 : 0;
}

// Step function R(lambda) sampled on every value where it can change.
struct RiskCurve {
  std::vector<double> thresholds;           // strictly increasing, 0 and 1 included
  std::vector<std::size_t> error_counts;    // # confident errors at each threshold
  std::vector<double> risks;                // error_counts / n
  std::size_t n = 0;

  // R(lambda) for any lambda in [0, 1]: the value at the largest grid point
  // <= lambda. Exact because nu only takes values on the grid.
  double at(double lambda) const {
    auto it = std::upper_bound(thresholds.begin(), thresholds.end(), lambda);
    if (it == thresholds.begin()) return risks.front();
    return risks[static_cast<std::size_t>(it - thresholds.begin()) - 1];
  }
};

inline RiskCurve risk_curve(std::span<const VoteOutcome> outcomes) {
  if (outcomes.empty()) throw EmptyCalibration("risk curve needs at least one outcome");
  RiskCurve curve;
  curve.n = outcomes.size();

  std::vector<double> wrong;
  curve.thresholds.reserve(outcomes.size() + 2);
  curve.thresholds.push_back(0.0);
  curve.thresholds.push_back(1.0);
  for (const auto &o : outcomes) {
    curve.thresholds.push_back(o.confidence);
    if (!o.correct) wrong.push_back(o.confidence);
  }
  std::sort(curve.thresholds.begin(), curve.thresholds.end());
  curve.thresholds.erase(std::unique(curve.thresholds.begin(), curve.thresholds.end()),
                         curve.thresholds.end());
  std::sort(wrong.begin(), wrong.end());

  curve.error_counts.reserve(curve.thresholds.size());
  curve.risks.reserve(curve.thresholds.size());
  const double n = static_cast<double>(curve.n);
  for (double t : curve.thresholds) {
    auto above = static_cast<std::size_t>(
        wrong.end() - std::upper_bound(wrong.begin(), wrong.end(), t));
    curve.error_counts.push_back(above);
    curve.risks.push_back(static_cast<double>(above) / n);
  }
  return curve;
}

struct Policy {
  double lambda_hat = 1.0;
  double alpha = 0.1;
  std::size_t n = 0;
  bool always_abstain = true;
  double beta_n = 0.0;                // alpha - (1 - alpha) / n
  std::int64_t error_budget = -1;     // largest admissible # calibration errors
  int grid_version = kGridVersion;

  bool answers(double confidence) const {
    return !always_abstain && confidence > lambda_hat;
  }
};

inline double crc_bound(double alpha, std::size_t n) {
  return alpha - (1.0 - alpha) / static_cast<double>(n);
}

// R(lambda) <= alpha - (1-alpha)/n is equivalent to
// #errors <= (n + 1) * alpha - 1; the count form keeps boundary cases such as
// n = 19, alpha = 0.05 exact instead of depending on the rounding of 0.95/19.
inline std::int64_t crc_error_budget(double alpha, std::size_t n) {
  const double raw = static_cast<double>(n + 1) * alpha - 1.0;
  const double snapped = std::round(raw);
  const double value = std::abs(raw - snapped) <= 1e-9 ? snapped : std::floor(raw);
  return static_cast<std::int64_t>(value);
}

inline Policy crc_threshold(const RiskCurve &curve, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw RangeError("alpha must lie in (0, 1), got " + csv::number(alpha));
  }
  if (curve.n == 0 || curve.thresholds.empty()) {
    throw EmptyCalibration("risk curve is empty");
  }
  Policy policy;
  policy.alpha = alpha;
  policy.n = curve.n;
  policy.beta_n = crc_bound(alpha, curve.n);
  policy.error_budget = crc_error_budget(alpha, curve.n);
  if (policy.error_budget < 0) {
    policy.always_abstain = true;
    policy.lambda_hat = 1.0;
    return policy;
  }
  policy.always_abstain = false;
  const auto budget = static_cast<std::size_t>(policy.error_budget);
  // error_counts is non-increasing, so the feasible set is a suffix.
  auto it = std::partition_point(curve.error_counts.begin(), curve.error_counts.end(),
                                 [&](std::size_t c) { return c > budget; });
  policy.lambda_hat = curve.thresholds[static_cast<std::size_t>(it - curve.error_counts.begin())];
  return policy;
}

inline Policy calibrate(std::span<const VoteOutcome> outcomes, double alpha) {
  return crc_threshold(risk_curve(outcomes), alpha);
}

enum class Action { answer, abstain };

struct Decision {
  std::string instance_id;
  Action action = Action::abstain;
  std::string answer;                 // set when action == answer
  double confidence = 0.0;

  bool answered() const { return action == Action::answer; }
};

inline std::vector<Decision> apply_policy(const Policy &policy,
                                          std::span<const VoteOutcome> outcomes) {
  std::vector<Decision> out;
  out.reserve(outcomes.size());
  for (const auto &o : outcomes) {
    Decision d{o.instance_id, Action::abstain, {}, o.confidence};
    if (policy.answers(o.confidence)) {
      d.action = Action::answer;
      d.answer = o.winner;
    }
    out.push_back(std::move(d));
  }
  return out;
}

// Fraction of ALL inputs answered with a wrong answer.
inline double realized_risk(std::span<const Decision> decisions,
                            std::span<const std::string> truths) {
  if (decisions.size() != truths.size()) {
    throw LengthMismatch("decisions and truths differ in length (" +
                         std::to_string(decisions.size()) + " vs " +
                         std::to_string(truths.size()) + ")");
  }
  if (decisions.empty()) return 0.0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i].answered() && decisions[i].answer != truths[i]) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(decisions.size());
}

inline nlohmann::ordered_json to_json(const Policy &p) {
  return {{"lambda_hat", p.lambda_hat},   {"alpha", p.alpha},
          {"n", p.n},                     {"always_abstain", p.always_abstain},
          {"beta_n", p.beta_n},           {"error_budget", p.error_budget},
          {"grid_version", p.grid_version}};
}

inline Policy policy_from_json(const nlohmann::json &j) {
  try {
    Policy p;
    p.lambda_hat = j.at("lambda_hat").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.n = j.at("n").get<std::size_t>();
    p.always_abstain = j.at("always_abstain").get<bool>();
    p.grid_version = j.value("grid_version", kGridVersion);
    p.beta_n = j.value("beta_n", crc_bound(p.alpha, p.n));
    p.error_budget = j.value("error_budget", crc_error_budget(p.alpha, p.n));
    if (p.grid_version != kGridVersion) {
      throw ConfigError("unsupported policy grid_version " + std::to_string(p.grid_version));
    }
    if (!(p.lambda_hat >= 0.0 && p.lambda_hat <= 1.0)) {
      throw ConfigError("policy lambda_hat outside [0, 1]");
    }
    if (p.always_abstain && p.lambda_hat != 1.0) {
      throw ConfigError("always-abstain policy must carry lambda_hat = 1");
    }
    return p;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed policy document: ") + e.what());
  }
}

inline void write_risk_curve_csv(std::ostream &os, const RiskCurve &curve) {
  os << "lambda,errors,risk\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    os << csv::number(curve.thresholds[i]) << ',' << curve.error_counts[i] << ','
       << csv::number(curve.risks[i]) << '\n';
  }
}

inline void write_decisions_csv(std::ostream &os, std::span<const Decision> decisions) {
  os << "instance_id,action,answer,confidence\n";
  for (const auto &d : decisions) {
    os << csv::field(d.instance_id) << ',' << (d.answered() ? "answer" : "abstain") << ','
       << csv::field(d.answer) << ',' << csv::number(d.confidence) << '\n';
  }
}

}  // namespace abstain

#endif  // ABSTAIN_CALIBRATE_HPP_
