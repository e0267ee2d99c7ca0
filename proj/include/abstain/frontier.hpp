#ifndef ABSTAIN_FRONTIER_HPP_
#define ABSTAIN_FRONTIER_HPP_

// Accuracy-yield frontier: sweep lambda over the confidence grid, integrate
// selective accuracy over the observed yield range with the trapezoid rule.

#include <algorithm>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "abstain/aggregate.hpp"
#include "abstain/csv.hpp"
#include "abstain/diagnose.hpp"
#include "abstain/errors.hpp"
#include "json.hpp"

namespace abstain {

struct FrontierPoint {
  double lambda = 0.0;
  double yield = 0.0;
  std::optional<double> a_c;   // empty when nothing is answered
  std::size_t n_selected = 0;

  bool operator==(const FrontierPoint &) const = default;
};

struct ParetoViolation {
  double lambda_from = 0.0, lambda_to = 0.0;
  double yield_drop = 0.0;      // > 0
  double accuracy_drop = 0.0;   // > 0
};

struct FrontierSummary {
  std::vector<FrontierPoint> points;
  double auc = 0.0;
  double y_min = 0.0, y_max = 0.0;
  std::size_t pareto_violations = 0;
  std::vector<ParetoViolation> violations;
};

// One point per threshold in {0} union {distinct nu}, ascending in lambda.
inline std::vector<FrontierPoint> sweep(std::span<const VoteOutcome> outcomes) {
  if (outcomes.empty()) throw EmptyInput("frontier sweep needs at least one outcome");
  std::vector<double> nu_all, nu_cor;
  nu_all.reserve(outcomes.size());
  for (const auto &o : outcomes) {
    nu_all.push_back(o.confidence);
    if (o.correct) nu_cor.push_back(o.confidence);
  }
  std::sort(nu_all.begin(), nu_all.end());
  std::sort(nu_cor.begin(), nu_cor.end());
  const double n = static_cast<double>(outcomes.size());

  std::vector<FrontierPoint> points;
  for (double lambda : detail::confidence_grid(outcomes)) {
    FrontierPoint p;
    p.lambda = lambda;
    p.n_selected = detail::count_above(nu_all, lambda);
    p.yield = static_cast<double>(p.n_selected) / n;
    if (p.n_selected > 0) {
      p.a_c = static_cast<double>(detail::count_above(nu_cor, lambda)) /
              static_cast<double>(p.n_selected);
    }
    points.push_back(p);
  }
  return points;
}

inline FrontierSummary frontier_auc(std::span<const FrontierPoint> points) {
  std::vector<const FrontierPoint *> defined;
  for (const auto &p : points) {
    if (p.a_c) defined.push_back(&p);
  }
  if (defined.size() < 2) {
    throw InsufficientPoints("frontier AUC needs at least two answered operating points");
  }

  FrontierSummary summary;
  summary.points.assign(points.begin(), points.end());

  // Pareto check in sweep order: both coordinates strictly worse.
  for (std::size_t i = 1; i < defined.size(); ++i) {
    const auto &a = *defined[i - 1];
    const auto &b = *defined[i];
    if (b.yield < a.yield && *b.a_c < *a.a_c) {
      summary.violations.push_back(
          {a.lambda, b.lambda, a.yield - b.yield, *a.a_c - *b.a_c});
    }
  }
  summary.pareto_violations = summary.violations.size();

  // Equal yields mean equal answered sets, hence equal accuracy; collapsing
  // them leaves zero-width trapezoids out.
  std::vector<std::pair<double, double>> curve;
  curve.reserve(defined.size());
  for (const auto *p : defined) curve.emplace_back(p->yield, *p->a_c);
  std::sort(curve.begin(), curve.end());
  curve.erase(std::unique(curve.begin(), curve.end(),
                          [](const auto &x, const auto &y) { return x.first == y.first; }),
              curve.end());
  summary.y_min = curve.front().first;
  summary.y_max = curve.back().first;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double width = curve[i].first - curve[i - 1].first;
    summary.auc += 0.5 * width * (curve[i].second + curve[i - 1].second);
  }
  return summary;
}

inline FrontierSummary frontier(std::span<const VoteOutcome> outcomes) {
  const auto points = sweep(outcomes);
  return frontier_auc(points);
}

inline void write_frontier_csv(std::ostream &os, std::span<const FrontierPoint> points) {
  os << "lambda,yield,a_c,n_selected\n";
  for (const auto &p : points) {
    os << csv::number(p.lambda) << ',' << csv::number(p.yield) << ','
       << csv::number(p.a_c) << ',' << p.n_selected << '\n';
  }
}

inline nlohmann::ordered_json to_json(const FrontierSummary &s) {
  return {{"auc", s.auc},
          {"y_min", s.y_min},
          {"y_max", s.y_max},
          {"pareto_violations", s.pareto_violations},
          {"points", s.points.size()}};
}

}  // namespace abstain

#endif  // ABSTAIN_FRONTIER_HPP_
