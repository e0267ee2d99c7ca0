#ifndef ABSTAIN_AGGREGATE_HPP_
#define ABSTAIN_AGGREGATE_HPP_

// Score-weighted voting over a path pool: per-answer tallies, winner selection
// with a fixed tie rule, and the vote confidence nu = V_winner / sum_y V_y.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "abstain/csv.hpp"
#include "abstain/errors.hpp"
#include "abstain/records.hpp"
#include "json.hpp"

namespace abstain {

enum class WeightKind { uniform, linear, exponential };

struct WeightSpec {
  WeightKind kind = WeightKind::exponential;
  double beta = 1.0;      // exponential: w(q) = exp(beta * q)
  double shift = 0.0;     // linear: w(q) = max(q - shift, floor)
  double floor = 1e-12;

  static WeightSpec uniform() { return {WeightKind::uniform, 0.0, 0.0, 1e-12}; }
  static WeightSpec exponential(double beta) {
    return {WeightKind::exponential, beta, 0.0, 1e-12};
  }
  static WeightSpec linear(double shift = 0.0, double floor = 1e-12) {
    return {WeightKind::linear, 0.0, shift, floor};
  }

  bool operator==(const WeightSpec &) const = default;
};

inline std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::uniform: return "uniform";
    case WeightKind::linear: return "linear";
    case WeightKind::exponential: return "exponential";
  }
  return "?";
}

inline WeightKind weight_kind_from_string(std::string_view s) {
  if (s == "uniform") return WeightKind::uniform;
  if (s == "linear") return WeightKind::linear;
  if (s == "exponential" || s == "exp") return WeightKind::exponential;
  throw ConfigError("unknown weight kind '" + std::string(s) + "'");
}

inline void validate(const WeightSpec &spec) {
  if (spec.kind == WeightKind::exponential &&
      !(spec.beta >= 0.0 && std::isfinite(spec.beta))) {
    throw ConfigError("exponential weight needs a finite beta >= 0");
  }
  if (spec.kind == WeightKind::linear &&
      !(spec.floor > 0.0 && std::isfinite(spec.floor) && std::isfinite(spec.shift))) {
    throw ConfigError("linear weight needs a finite shift and a positive floor");
  }
}

// Compact text form used on the command line and in ablation tables:
// "uniform", "exp:<beta>", "linear:<shift>[:<floor>]".
inline WeightSpec parse_weight(std::string_view text) {
  auto colon = text.find(':');
  auto head = text.substr(0, colon);
  WeightSpec spec;
  spec.kind = weight_kind_from_string(head);
  auto rest = colon == std::string_view::npos ? std::string_view{}
                                              : text.substr(colon + 1);
  auto to_double = [&](std::string_view s) {
    std::string str(s);
    char *end = nullptr;
    double v = std::strtod(str.c_str(), &end);
    if (str.empty() || end != str.c_str() + str.size()) {
      throw ConfigError("bad number '" + str + "' in weight '" + std::string(text) + "'");
    }
    return v;
  };
  switch (spec.kind) {
    case WeightKind::uniform:
      spec.beta = 0.0;
      break;
    case WeightKind::exponential:
      spec.beta = rest.empty() ? 1.0 : to_double(rest);
      break;
    case WeightKind::linear: {
      spec.beta = 0.0;
      auto second = rest.find(':');
      if (!rest.empty()) spec.shift = to_double(rest.substr(0, second));
      if (second != std::string_view::npos) spec.floor = to_double(rest.substr(second + 1));
      break;
    }
  }
  validate(spec);
  return spec;
}

inline std::string format_weight(const WeightSpec &spec) {
  switch (spec.kind) {
    case WeightKind::uniform: return "uniform";
    case WeightKind::exponential: return "exp:" + csv::number(spec.beta);
    case WeightKind::linear:
      return "linear:" + csv::number(spec.shift) + ":" + csv::number(spec.floor);
  }
  return "?";
}

inline nlohmann::ordered_json to_json(const WeightSpec &spec) {
  return {{"kind", to_string(spec.kind)},
          {"beta", spec.beta},
          {"shift", spec.shift},
          {"floor", spec.floor}};
}

inline WeightSpec weight_from_json(const nlohmann::json &j) {
  if (j.is_string()) return parse_weight(j.get<std::string>());
  if (!j.is_object()) throw ConfigError("weight must be a string or an object");
  WeightSpec spec;
  spec.kind = weight_kind_from_string(j.value("kind", std::string("exponential")));
  spec.beta = j.value("beta", spec.kind == WeightKind::exponential ? 1.0 : 0.0);
  spec.shift = j.value("shift", 0.0);
  spec.floor = j.value("floor", 1e-12);
  validate(spec);
  return spec;
}

// The weight of a single score, evaluated directly. Pools are aggregated with
// a per-pool rescaling instead (see aggregate()).
inline double weight(double q, const WeightSpec &spec) {
  switch (spec.kind) {
    case WeightKind::uniform: return 1.0;
    case WeightKind::exponential: return std::exp(spec.beta * q);
    case WeightKind::linear: return std::max(q - spec.shift, spec.floor);
  }
  return 1.0;
}

struct Tally {
  std::string answer;
  double mass = 0.0;
  bool operator==(const Tally &) const = default;
};

struct VoteOutcome {
  std::string instance_id;
  std::string winner;
  double confidence = 0.0;           // nu
  std::vector<Tally> tallies;        // sorted by answer id
  double log_scale = 0.0;            // true tally = mass * exp(log_scale)
  bool correct = false;
  std::size_t m = 0;

  double tally(std::string_view answer) const {
    for (const auto &t : tallies) {
      if (t.answer == answer) return t.mass;
    }
    return 0.0;
  }

  bool operator==(const VoteOutcome &) const = default;
};

// Tallies within this relative distance of the maximum count as tied.
// Weighted sums of equal mathematical value can differ in the last bits.
inline constexpr double kTieRelativeTolerance = 1e-12;

inline VoteOutcome aggregate(const PromptInstance &inst,
                             std::string_view score_name,
                             const WeightSpec &spec) {
  const std::size_t m = inst.paths.size();
  std::vector<double> q(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto v = inst.paths[j].scores.find(score_name);
    if (!v) {
      throw UnknownScore("instance '" + inst.id + "' has no score '" +
                         std::string(score_name) + "'");
    }
    q[j] = *v;
  }

  // Exponential weights are computed relative to the pool's best score so
  // exp() never overflows; nu and the winner are invariant to this.
  double log_scale = 0.0;
  std::vector<double> w(m);
  if (spec.kind == WeightKind::exponential) {
    const double q_max = m ? *std::max_element(q.begin(), q.end()) : 0.0;
    log_scale = spec.beta * q_max;
    for (std::size_t j = 0; j < m; ++j) w[j] = std::exp(spec.beta * (q[j] - q_max));
  } else {
    for (std::size_t j = 0; j < m; ++j) w[j] = weight(q[j], spec);
  }

  // Summing in (answer, weight) order makes the result independent of the
  // order paths arrive in, bit for bit.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto &ea = inst.paths[a].answer_id;
    const auto &eb = inst.paths[b].answer_id;
    if (ea != eb) return ea < eb;
    return w[a] < w[b];
  });

  VoteOutcome out;
  out.instance_id = inst.id;
  out.m = m;
  out.log_scale = log_scale;
  for (auto j : order) {
    const auto &answer = inst.paths[j].answer_id;
    if (out.tallies.empty() || out.tallies.back().answer != answer) {
      out.tallies.push_back({answer, 0.0});
    }
    out.tallies.back().mass += w[j];
  }

  double total = 0.0;
  double best = 0.0;
  for (const auto &t : out.tallies) {
    total += t.mass;
    best = std::max(best, t.mass);
  }
  const double cutoff = best - kTieRelativeTolerance * best;
  for (const auto &t : out.tallies) {
    if (t.mass >= cutoff) {
      out.winner = t.answer;
      out.confidence = std::min(1.0, t.mass / total);
      break;
    }
  }
  out.correct = out.winner == inst.truth;
  return out;
}

inline std::vector<VoteOutcome> aggregate_dataset(const Dataset &ds,
                                                  std::string_view score_name,
                                                  const WeightSpec &spec) {
  std::vector<VoteOutcome> out;
  out.reserve(ds.size());
  for (const auto &inst : ds.instances()) out.push_back(aggregate(inst, score_name, spec));
  return out;
}

inline void write_outcomes_csv(std::ostream &os,
                               const std::vector<VoteOutcome> &outcomes) {
  os << "instance_id,winner,confidence,correct\n";
  for (const auto &o : outcomes) {
    os << csv::field(o.instance_id) << ',' << csv::field(o.winner) << ','
       << csv::number(o.confidence) << ',' << (o.correct ? 1 : 0) << '\n';
  }
}

}  // namespace abstain

#endif  // ABSTAIN_AGGREGATE_HPP_
