#ifndef ABSTAIN_DIAGNOSE_HPP_
#define ABSTAIN_DIAGNOSE_HPP_

// Separability and selective-accuracy analytics on a set of vote outcomes.
//
// All tails use the strict convention of the abstention policy:
//   S_cor(l) = P(nu > l | correct),  S_err(l) = P(nu > l | wrong),
//   G(l) = P(nu > l, correct),       H(l) = P(nu > l) = yield.
// Discrete hazards live on the support points of nu:
//   h(v) = P(nu = v | nu >= v, stratum),
// so that P(nu > v) = prod_{u <= v} (1 - h(u)) over support points u.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "abstain/aggregate.hpp"
#include "abstain/csv.hpp"
#include "abstain/errors.hpp"

namespace abstain {

namespace detail {

// # of sorted values strictly greater than x.
inline std::size_t count_above(const std::vector<double> &sorted, double x) {
  return static_cast<std::size_t>(sorted.end() -
                                  std::upper_bound(sorted.begin(), sorted.end(), x));
}

// {0} union the distinct confidences, ascending.
inline std::vector<double> confidence_grid(std::span<const VoteOutcome> outcomes) {
  std::vector<double> grid;
  grid.reserve(outcomes.size() + 1);
  grid.push_back(0.0);
  for (const auto &o : outcomes) grid.push_back(o.confidence);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace detail

struct SeparabilityProfile {
  std::vector<double> grid;
  std::vector<double> s_cor, s_err, delta;
  std::vector<double> h_cor, h_err, delta_strict;
  std::vector<std::size_t> at_risk_cor, at_risk_err;   // # with nu >= grid point
  double p_v_hat = 0.0;
  std::size_t n = 0, n_cor = 0, n_err = 0;

  std::vector<double> nu_cor, nu_err;   // sorted stratum confidences

  double s_cor_at(double lambda) const {
    return static_cast<double>(detail::count_above(nu_cor, lambda)) /
           static_cast<double>(n_cor);
  }
  double s_err_at(double lambda) const {
    return static_cast<double>(detail::count_above(nu_err, lambda)) /
           static_cast<double>(n_err);
  }
  double delta_at(double lambda) const { return s_cor_at(lambda) - s_err_at(lambda); }

  // Grid point of largest separation gap; read as the empirical Youden J.
  std::pair<double, double> max_separation() const {
    auto it = std::max_element(delta.begin(), delta.end());
    auto i = static_cast<std::size_t>(it - delta.begin());
    return {grid[i], *it};
  }
};

inline SeparabilityProfile separability_profile(std::span<const VoteOutcome> outcomes) {
  SeparabilityProfile prof;
  prof.n = outcomes.size();
  for (const auto &o : outcomes) (o.correct ? prof.nu_cor : prof.nu_err).push_back(o.confidence);
  prof.n_cor = prof.nu_cor.size();
  prof.n_err = prof.nu_err.size();
  if (prof.n_cor == 0 || prof.n_err == 0) {
    throw DegenerateStratum(
        "separability needs both correct and incorrect outcomes (p_v_hat = " +
        csv::number(prof.n ? static_cast<double>(prof.n_cor) / static_cast<double>(prof.n) : 0.0) +
        ")");
  }
  prof.p_v_hat = static_cast<double>(prof.n_cor) / static_cast<double>(prof.n);
  std::sort(prof.nu_cor.begin(), prof.nu_cor.end());
  std::sort(prof.nu_err.begin(), prof.nu_err.end());
  prof.grid = detail::confidence_grid(outcomes);

  const auto k = prof.grid.size();
  for (auto *v : {&prof.s_cor, &prof.s_err, &prof.delta, &prof.h_cor, &prof.h_err,
                  &prof.delta_strict}) {
    v->resize(k);
  }
  prof.at_risk_cor.resize(k);
  prof.at_risk_err.resize(k);

  auto hazard = [](std::size_t exits, std::size_t at_risk) {
    return at_risk == 0 ? 0.0 : static_cast<double>(exits) / static_cast<double>(at_risk);
  };
  const double n_cor = static_cast<double>(prof.n_cor);
  const double n_err = static_cast<double>(prof.n_err);
  for (std::size_t i = 0; i < k; ++i) {
    const double v = prof.grid[i];
    const auto above_cor = detail::count_above(prof.nu_cor, v);
    const auto above_err = detail::count_above(prof.nu_err, v);
    // at risk = # >= v = # > previous grid point
    const auto risk_cor = i == 0 ? prof.n_cor : detail::count_above(prof.nu_cor, prof.grid[i - 1]);
    const auto risk_err = i == 0 ? prof.n_err : detail::count_above(prof.nu_err, prof.grid[i - 1]);
    prof.at_risk_cor[i] = risk_cor;
    prof.at_risk_err[i] = risk_err;
    prof.s_cor[i] = static_cast<double>(above_cor) / n_cor;
    prof.s_err[i] = static_cast<double>(above_err) / n_err;
    prof.delta[i] = prof.s_cor[i] - prof.s_err[i];
    prof.h_cor[i] = hazard(risk_cor - above_cor, risk_cor);
    prof.h_err[i] = hazard(risk_err - above_err, risk_err);
    prof.delta_strict[i] = prof.h_err[i] - prof.h_cor[i];
  }
  return prof;
}

// Survival strictly above each support point from the hazards at and below it.
inline std::vector<double> survival_from_hazards(std::span<const double> hazards) {
  std::vector<double> out(hazards.size());
  double s = 1.0;
  for (std::size_t i = 0; i < hazards.size(); ++i) {
    s *= 1.0 - hazards[i];
    out[i] = s;
  }
  return out;
}

// Survival at-or-above each support point: product over points strictly below.
inline std::vector<double> survival_from_hazards_inclusive(std::span<const double> hazards) {
  std::vector<double> out(hazards.size());
  double s = 1.0;
  for (std::size_t i = 0; i < hazards.size(); ++i) {
    out[i] = s;
    s *= 1.0 - hazards[i];
  }
  return out;
}

inline double selective_accuracy(std::span<const VoteOutcome> outcomes, double lambda) {
  std::size_t selected = 0, correct = 0;
  for (const auto &o : outcomes) {
    if (o.confidence > lambda) {
      ++selected;
      if (o.correct) ++correct;
    }
  }
  if (selected == 0) {
    throw EmptySelection("no outcome has confidence above " + csv::number(lambda));
  }
  return static_cast<double>(correct) / static_cast<double>(selected);
}

inline double yield(std::span<const VoteOutcome> outcomes, double lambda) {
  if (outcomes.empty()) return 0.0;
  std::size_t selected = 0;
  for (const auto &o : outcomes) selected += o.confidence > lambda ? 1 : 0;
  return static_cast<double>(selected) / static_cast<double>(outcomes.size());
}

// Closed-form selective-accuracy gain A_c - p_v given the vote accuracy and the
// two conditional survivals at a threshold.
inline double accuracy_gain(double p_v, double s_cor, double s_err) {
  if (!(p_v > 0.0 && p_v < 1.0)) {
    throw DomainError("accuracy_gain needs p_v in (0, 1), got " + csv::number(p_v));
  }
  if (!(s_cor >= 0.0 && s_cor <= 1.0 && s_err >= 0.0 && s_err <= 1.0)) {
    throw DomainError("survival values must lie in [0, 1]");
  }
  const double gap = s_cor - s_err;
  const double denom = s_cor - (1.0 - p_v) * gap;
  if (!(denom > 0.0)) throw DomainError("accuracy_gain denominator is not positive");
  return p_v * (1.0 - p_v) * gap / denom;
}

inline double concentration_epsilon(std::size_t n, double delta) {
  return std::sqrt(std::log(4.0 / delta) / (2.0 * static_cast<double>(n)));
}

inline double concentration_bound(std::size_t n, double delta, double s0) {
  return 4.0 * concentration_epsilon(n, delta) / s0;
}

// Smallest n with epsilon_n(delta) <= s0 / 2.
inline double concentration_min_n(double delta, double s0) {
  return 2.0 * std::log(4.0 / delta) / (s0 * s0);
}

struct PredictorOptions {
  double delta_0 = 0.1;   // operating set: grid points with delta_hat >= delta_0
  double delta = 0.05;    // failure probability of the concentration bound
};

struct PredictorOutput {
  std::vector<double> grid;
  std::vector<std::optional<double>> a_c_hat;     // G/H, undefined where H = 0
  std::vector<std::optional<double>> a_c_closed;  // p + p(1-p)D / (S_cor - (1-p)D)
  std::vector<std::optional<double>> gain_hat;
  std::vector<double> yield_hat, g_hat, h_hat, delta_hat;
  std::vector<bool> operating;
  double p_v_hat = 0.0;
  std::size_t n = 0;
  PredictorOptions options;
  std::optional<double> s0_hat;
  double epsilon = 0.0;
  std::optional<double> bound;
  bool sample_size_ok = false;

  // Step-function evaluation at the largest grid point <= lambda.
  std::optional<double> a_c_at(double lambda) const {
    auto it = std::upper_bound(grid.begin(), grid.end(), lambda);
    if (it == grid.begin()) return a_c_hat.front();
    return a_c_hat[static_cast<std::size_t>(it - grid.begin()) - 1];
  }
};

inline PredictorOutput plugin_predictor(std::span<const VoteOutcome> outcomes,
                                        const PredictorOptions &options = {}) {
  const auto prof = separability_profile(outcomes);
  PredictorOutput out;
  out.grid = prof.grid;
  out.p_v_hat = prof.p_v_hat;
  out.n = prof.n;
  out.options = options;
  const auto k = out.grid.size();
  out.a_c_hat.resize(k);
  out.a_c_closed.resize(k);
  out.gain_hat.resize(k);
  out.yield_hat.resize(k);
  out.g_hat.resize(k);
  out.h_hat.resize(k);
  out.delta_hat = prof.delta;
  out.operating.resize(k);

  const double n = static_cast<double>(prof.n);
  const double p = prof.p_v_hat;
  for (std::size_t i = 0; i < k; ++i) {
    const double v = out.grid[i];
    const auto above_cor = detail::count_above(prof.nu_cor, v);
    const auto above = above_cor + detail::count_above(prof.nu_err, v);
    out.g_hat[i] = static_cast<double>(above_cor) / n;
    out.h_hat[i] = static_cast<double>(above) / n;
    out.yield_hat[i] = out.h_hat[i];
    if (above > 0) {
      out.a_c_hat[i] = static_cast<double>(above_cor) / static_cast<double>(above);
      const double gap = prof.delta[i];
      const double denom = prof.s_cor[i] - (1.0 - p) * gap;
      out.a_c_closed[i] = p + p * (1.0 - p) * gap / denom;
      out.gain_hat[i] = *out.a_c_hat[i] - p;
      if (std::abs(*out.a_c_closed[i] - *out.a_c_hat[i]) > 1e-9) {
        throw std::logic_error("plug-in predictor forms disagree at lambda = " + csv::number(v));
      }
    }
    out.operating[i] = prof.delta[i] >= options.delta_0;
    if (out.operating[i]) {
      if (above == 0) {
        throw DomainError("operating set contains lambda = " + csv::number(v) +
                          " where no outcome is answered");
      }
      out.s0_hat = out.s0_hat ? std::min(*out.s0_hat, out.h_hat[i]) : out.h_hat[i];
    }
  }
  out.epsilon = concentration_epsilon(prof.n, options.delta);
  if (out.s0_hat) {
    out.bound = 4.0 * out.epsilon / *out.s0_hat;
    out.sample_size_ok = n >= concentration_min_n(options.delta, *out.s0_hat);
  }
  return out;
}

// One row per grid point; both arguments must come from the same outcomes.
inline void write_diagnostics_csv(std::ostream &os, const SeparabilityProfile &prof,
                                  const PredictorOutput &pred) {
  if (prof.grid != pred.grid) throw std::invalid_argument("profile and predictor grids differ");
  os << "lambda,s_cor,s_err,delta,h_cor,h_err,delta_strict,a_c_hat,yield\n";
  for (std::size_t i = 0; i < prof.grid.size(); ++i) {
    os << csv::number(prof.grid[i]) << ',' << csv::number(prof.s_cor[i]) << ','
       << csv::number(prof.s_err[i]) << ',' << csv::number(prof.delta[i]) << ','
       << csv::number(prof.h_cor[i]) << ',' << csv::number(prof.h_err[i]) << ','
       << csv::number(prof.delta_strict[i]) << ',' << csv::number(pred.a_c_hat[i]) << ','
       << csv::number(pred.yield_hat[i]) << '\n';
  }
}

}  // namespace abstain

#endif  // ABSTAIN_DIAGNOSE_HPP_
