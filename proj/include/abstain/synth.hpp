#ifndef ABSTAIN_SYNTH_HPP_
#define ABSTAIN_SYNTH_HPP_

// Synthetic path pools from the two-step model
//   (i)  answer counts  N | prompt ~ Multinomial(m; pi(prompt))
//   (ii) each path's score drawn from a law that depends on whether the path's
//        answer is the truth,
// plus exact enumeration oracles for the vote statistics these models induce.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "abstain/aggregate.hpp"
#include "abstain/errors.hpp"
#include "abstain/records.hpp"
#include "abstain/rng.hpp"
#include "json.hpp"

namespace abstain {

struct GaussianLaw {
  double mean = 0.0;
  double sd = 1.0;
  bool operator==(const GaussianLaw &) const = default;
};

// Finite support: value[i] with probability prob[i].
struct DiscreteLaw {
  std::vector<double> values;
  std::vector<double> probs;
  bool operator==(const DiscreteLaw &) const = default;
};

using ScoreLaw = std::variant<GaussianLaw, DiscreteLaw>;

struct ScoreChannel {
  std::string name;
  ScoreLaw correct;     // law of q for paths whose answer is the truth
  ScoreLaw incorrect;   // law of q for all other paths
  bool operator==(const ScoreChannel &) const = default;
};

struct PromptClass {
  std::vector<double> pi;   // answer distribution over the K labels
  double weight = 1.0;      // probability of drawing this class
  std::size_t truth = 0;    // index of the correct label
  bool operator==(const PromptClass &) const = default;
};

enum class MixtureMode {
  per_prompt,   // component drawn independently for every prompt
  per_trial,    // one component per generated dataset
};

struct GeneratorSpec {
  std::string name;
  std::size_t m = 16;
  std::size_t answers = 3;   // K
  std::vector<PromptClass> classes;
  std::vector<ScoreChannel> channels;
  // De Finetti scenario: when non-empty, prompts come from these components
  // and the fields above are ignored.
  std::vector<GeneratorSpec> components;
  std::vector<double> component_weights;
  MixtureMode mixture_mode = MixtureMode::per_prompt;

  bool is_mixture() const { return !components.empty(); }
  bool operator==(const GeneratorSpec &) const = default;
};

// Label k of K as a zero-padded decimal, so lexicographic order on the ids
// equals numeric order and the tie rule picks the smallest index.
inline std::string label_name(std::size_t k, std::size_t num_labels) {
  std::size_t width = 1;
  for (std::size_t top = num_labels > 0 ? num_labels - 1 : 0; top >= 10; top /= 10) ++width;
  std::string digits = std::to_string(k);
  return std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

namespace detail {

inline void check_distribution(std::span<const double> p, const std::string &what) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw SpecError(what + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw SpecError(what + " sums to " + std::to_string(sum) + ", not 1");
  }
}

inline void check_law(const ScoreLaw &law, const std::string &what) {
  if (const auto *g = std::get_if<GaussianLaw>(&law)) {
    if (!(g->sd > 0.0) || !std::isfinite(g->mean) || !std::isfinite(g->sd)) {
      throw SpecError(what + ": gaussian law needs finite mean and sd > 0");
    }
    return;
  }
  const auto &d = std::get<DiscreteLaw>(law);
  if (d.values.empty() || d.values.size() != d.probs.size()) {
    throw SpecError(what + ": discrete law needs matching non-empty values/probs");
  }
  for (double v : d.values) {
    if (!std::isfinite(v)) throw SpecError(what + ": discrete law value not finite");
  }
  check_distribution(d.probs, what + " probabilities");
}

inline double draw(const ScoreLaw &law, Rng &rng) {
  if (const auto *g = std::get_if<GaussianLaw>(&law)) return rng.normal(g->mean, g->sd);
  const auto &d = std::get<DiscreteLaw>(law);
  return d.values[rng.categorical(d.probs)];
}

inline constexpr std::uint64_t kComponentStream = ~std::uint64_t{0};

}  // namespace detail

inline void validate(const GeneratorSpec &spec) {
  if (spec.is_mixture()) {
    if (spec.components.size() != spec.component_weights.size()) {
      throw SpecError("mixture needs one weight per component");
    }
    detail::check_distribution(spec.component_weights, "mixture weights");
    for (const auto &c : spec.components) validate(c);
    return;
  }
  if (spec.m < 1) throw SpecError("pool size m must be at least 1");
  if (spec.answers < 1) throw SpecError("label set must be non-empty");
  if (spec.classes.empty()) throw SpecError("spec has no prompt classes");
  if (spec.channels.empty()) throw SpecError("spec has no score channels");
  std::vector<double> weights;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto &cls = spec.classes[c];
    const auto tag = "class " + std::to_string(c);
    if (cls.pi.size() != spec.answers) {
      throw SpecError(tag + ": pi has length " + std::to_string(cls.pi.size()) +
                      ", expected " + std::to_string(spec.answers));
    }
    detail::check_distribution(cls.pi, tag + " pi");
    if (cls.truth >= spec.answers) throw SpecError(tag + ": truth index out of range");
    weights.push_back(cls.weight);
  }
  detail::check_distribution(weights, "class weights");
  for (std::size_t i = 0; i < spec.channels.size(); ++i) {
    const auto &ch = spec.channels[i];
    if (ch.name.empty()) throw SpecError("score channel needs a name");
    for (std::size_t j = 0; j < i; ++j) {
      if (spec.channels[j].name == ch.name) throw SpecError("duplicate score channel '" + ch.name + "'");
    }
    detail::check_law(ch.correct, ch.name + " correct");
    detail::check_law(ch.incorrect, ch.name + " incorrect");
  }
}

// Draws one prompt from a non-mixture spec.
inline PromptInstance generate_instance(const GeneratorSpec &spec, std::string id, Rng &rng) {
  if (spec.is_mixture()) {
    const auto c = rng.categorical(spec.component_weights);
    return generate_instance(spec.components[c], std::move(id), rng);
  }
  std::vector<double> class_weights;
  class_weights.reserve(spec.classes.size());
  for (const auto &c : spec.classes) class_weights.push_back(c.weight);
  const auto &cls = spec.classes[spec.classes.size() == 1 ? 0 : rng.categorical(class_weights)];

  PromptInstance inst;
  inst.id = std::move(id);
  inst.truth = label_name(cls.truth, spec.answers);
  inst.paths.reserve(spec.m);
  for (std::size_t j = 0; j < spec.m; ++j) {
    const auto label = rng.categorical(cls.pi);
    PathRecord path;
    path.answer_id = label_name(label, spec.answers);
    const bool is_truth = label == cls.truth;
    for (const auto &ch : spec.channels) {
      path.scores.set(ch.name, detail::draw(is_truth ? ch.correct : ch.incorrect, rng));
    }
    inst.paths.push_back(std::move(path));
  }
  return inst;
}

// n prompts with ids "p<first_id>".."p<first_id + n - 1>". Prompt i draws from
// its own stream derive_seed(seed, i), so output is independent of how the
// work is scheduled.
inline Dataset generate_dataset(const GeneratorSpec &spec, std::size_t n, std::uint64_t seed,
                                std::size_t first_id = 0) {
  validate(spec);
  const GeneratorSpec *source = &spec;
  if (spec.is_mixture() && spec.mixture_mode == MixtureMode::per_trial) {
    Rng pick(derive_seed(seed, detail::kComponentStream));
    source = &spec.components[pick.categorical(spec.component_weights)];
  }
  std::vector<PromptInstance> instances;
  instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    instances.push_back(generate_instance(*source, "p" + std::to_string(first_id + i), rng));
  }
  return Dataset::from_instances(std::move(instances));
}

// Exact joint law of (nu, correct) on a finite support.
struct ExactStats {
  double p_v = 0.0;
  double total_mass = 0.0;
  std::vector<double> grid;        // support points of nu, ascending
  std::vector<double> mass_cor;    // P(nu = grid[i], correct)
  std::vector<double> mass_err;    // P(nu = grid[i], wrong)
  std::vector<double> s_cor;       // P(nu > grid[i] | correct); NaN if p_v = 0
  std::vector<double> s_err;       // P(nu > grid[i] | wrong); NaN if p_v = 1
  std::vector<double> delta;

  double g_at(double lambda) const { return tail(mass_cor, lambda); }
  double h_at(double lambda) const { return tail(mass_cor, lambda) + tail(mass_err, lambda); }
  double s_cor_at(double lambda) const { return tail(mass_cor, lambda) / p_v; }
  double s_err_at(double lambda) const { return tail(mass_err, lambda) / (1.0 - p_v); }

  // Selective accuracy G/H; empty when nothing is answered.
  std::optional<double> accuracy_at(double lambda) const {
    const double g = tail(mass_cor, lambda);
    const double h = g + tail(mass_err, lambda);
    if (!(h > 0.0)) return std::nullopt;
    return g / h;
  }

  // Discrete hazards P(nu = v | nu >= v, stratum) on the grid; 0 where the
  // stratum has no remaining mass.
  std::vector<double> hazards(bool correct_stratum) const {
    const auto &mass = correct_stratum ? mass_cor : mass_err;
    std::vector<double> out(grid.size());
    double at_risk = std::accumulate(mass.begin(), mass.end(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out[i] = at_risk > 0.0 ? mass[i] / at_risk : 0.0;
      at_risk -= mass[i];
    }
    return out;
  }

  bool operator==(const ExactStats &) const = default;

 private:
  double tail(const std::vector<double> &mass, double lambda) const {
    auto first = std::upper_bound(grid.begin(), grid.end(), lambda);
    double s = 0.0;
    // Sum from the top so small tails are not swamped.
    for (auto i = grid.size(); i-- > static_cast<std::size_t>(first - grid.begin());) s += mass[i];
    return s;
  }
};

using ExactMVStats = ExactStats;

namespace detail {

using JointMass = std::map<double, std::pair<double, double>>;   // nu -> (cor, err)

inline ExactStats finalize(const JointMass &joint) {
  ExactStats st;
  for (const auto &[nu, m] : joint) {
    st.grid.push_back(nu);
    st.mass_cor.push_back(m.first);
    st.mass_err.push_back(m.second);
  }
  double cor = 0.0, err = 0.0;
  for (auto i = st.grid.size(); i-- > 0;) {
    cor += st.mass_cor[i];
    err += st.mass_err[i];
  }
  st.p_v = cor;
  st.total_mass = cor + err;
  const auto k = st.grid.size();
  st.s_cor.assign(k, std::nan(""));
  st.s_err.assign(k, std::nan(""));
  st.delta.assign(k, std::nan(""));
  double above_cor = 0.0, above_err = 0.0;
  for (auto i = k; i-- > 0;) {
    if (cor > 0.0) st.s_cor[i] = above_cor / cor;
    if (err > 0.0) st.s_err[i] = above_err / err;
    st.delta[i] = st.s_cor[i] - st.s_err[i];
    above_cor += st.mass_cor[i];
    above_err += st.mass_err[i];
  }
  return st;
}

inline void accumulate_into(JointMass &joint, const ExactStats &st, double weight) {
  for (std::size_t i = 0; i < st.grid.size(); ++i) {
    auto &slot = joint[st.grid[i]];
    slot.first += weight * st.mass_cor[i];
    slot.second += weight * st.mass_err[i];
  }
}

inline double composition_count(std::size_t m, std::size_t parts) {
  // C(m + parts - 1, parts - 1)
  double c = 1.0;
  for (std::size_t i = 1; i < parts; ++i) {
    c = c * static_cast<double>(m + i) / static_cast<double>(i);
  }
  return c;
}

inline constexpr double kMaxCompositions = 1e6;

// Visits every vector of `parts` non-negative integers summing to m.
template <typename Visit>
void for_each_composition(std::size_t m, std::size_t parts, Visit &&visit) {
  std::vector<std::size_t> counts(parts, 0);
  auto recurse = [&](auto &self, std::size_t index, std::size_t remaining) -> void {
    if (index + 1 == parts) {
      counts[index] = remaining;
      visit(static_cast<const std::vector<std::size_t> &>(counts));
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      counts[index] = c;
      self(self, index + 1, remaining - c);
    }
  };
  if (parts > 0) recurse(recurse, 0, m);
}

// Multinomial probability m! / prod(n_k!) * prod(p_k^n_k). The coefficient is
// built from a Pascal triangle, exact while it stays below 2^53.
class MultinomialPmf {
 public:
  explicit MultinomialPmf(std::size_t m) : m_(m), pascal_((m + 1) * (m + 1), 0.0) {
    for (std::size_t r = 0; r <= m; ++r) {
      at(r, 0) = at(r, r) = 1.0;
      for (std::size_t c = 1; c < r; ++c) at(r, c) = at(r - 1, c - 1) + at(r - 1, c);
    }
  }

  double operator()(const std::vector<std::size_t> &counts, std::span<const double> p) const {
    double coef = 1.0, prob = 1.0;
    std::size_t remaining = m_;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] == 0) continue;
      if (p[k] == 0.0) return 0.0;
      coef *= binom(remaining, counts[k]);
      remaining -= counts[k];
      prob *= std::pow(p[k], static_cast<double>(counts[k]));
    }
    return coef * prob;
  }

 private:
  double &at(std::size_t r, std::size_t c) { return pascal_[r * (m_ + 1) + c]; }
  double binom(std::size_t r, std::size_t c) const { return pascal_[r * (m_ + 1) + c]; }

  std::size_t m_;
  std::vector<double> pascal_;
};

}  // namespace detail

// Exact majority-vote statistics for one answer distribution: enumerates every
// count vector of m paths over K = pi.size() labels, applies the uniform-weight
// winner rule with the lexicographic (smallest index) tie-break, and records
// nu = N_winner / m.
inline ExactMVStats mv_exact_enumeration(std::span<const double> pi, std::size_t m,
                                         std::size_t truth_index) {
  if (pi.empty()) throw SpecError("pi must be non-empty");
  if (m < 1) throw SpecError("m must be at least 1");
  if (truth_index >= pi.size()) throw SpecError("truth index out of range");
  detail::check_distribution(pi, "pi");
  const double count = detail::composition_count(m, pi.size());
  if (count > detail::kMaxCompositions) {
    throw TooLarge("enumeration over " + std::to_string(count) +
                   " compositions exceeds the 1e6 guard");
  }
  const detail::MultinomialPmf pmf(m);
  detail::JointMass joint;
  for (std::size_t k = 0; k <= m; ++k) joint[static_cast<double>(k) / static_cast<double>(m)];
  detail::for_each_composition(m, pi.size(), [&](const std::vector<std::size_t> &counts) {
    const double p = pmf(counts, pi);
    if (p == 0.0) return;
    const auto winner = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());   // first maximum
    const double nu = static_cast<double>(counts[winner]) / static_cast<double>(m);
    auto &slot = joint[nu];
    (winner == truth_index ? slot.first : slot.second) += p;
  });
  // Keep only attainable support points.
  for (auto it = joint.begin(); it != joint.end();) {
    it = it->second.first == 0.0 && it->second.second == 0.0 ? joint.erase(it) : std::next(it);
  }
  return detail::finalize(joint);
}

namespace detail {

inline const ScoreChannel &find_channel(const GeneratorSpec &spec, std::string_view name) {
  for (const auto &ch : spec.channels) {
    if (ch.name == name) return ch;
  }
  throw UnknownScore("generator has no score channel '" + std::string(name) + "'");
}

// Weighted vote with finite-support score laws: a path is a (label, score)
// type, and pools are multinomial over types. Each pool is aggregated by
// aggregate() itself so the oracle shares the exact winner/tie rule.
inline ExactStats weighted_class_enumeration(const GeneratorSpec &spec, const PromptClass &cls,
                                             const ScoreChannel &channel,
                                             const WeightSpec &weight) {
  struct PathType {
    std::size_t label;
    double score;
    double prob;
  };
  std::vector<PathType> types;
  for (std::size_t a = 0; a < spec.answers; ++a) {
    const auto &law = std::get<DiscreteLaw>(a == cls.truth ? channel.correct : channel.incorrect);
    for (std::size_t v = 0; v < law.values.size(); ++v) {
      types.push_back({a, law.values[v], cls.pi[a] * law.probs[v]});
    }
  }
  const double count = composition_count(spec.m, types.size());
  if (count > kMaxCompositions) {
    throw TooLarge("joint enumeration over " + std::to_string(count) +
                   " compositions exceeds the 1e6 guard");
  }
  std::vector<double> type_probs;
  for (const auto &t : types) type_probs.push_back(t.prob);
  const MultinomialPmf pmf(spec.m);
  JointMass joint;
  PromptInstance pool;
  pool.id = "enumerated";
  pool.truth = label_name(cls.truth, spec.answers);
  for_each_composition(spec.m, types.size(), [&](const std::vector<std::size_t> &counts) {
    const double p = pmf(counts, type_probs);
    if (p == 0.0) return;
    pool.paths.clear();
    for (std::size_t t = 0; t < types.size(); ++t) {
      for (std::size_t c = 0; c < counts[t]; ++c) {
        PathRecord rec;
        rec.answer_id = label_name(types[t].label, spec.answers);
        rec.scores.set(channel.name, types[t].score);
        pool.paths.push_back(std::move(rec));
      }
    }
    const auto vote = aggregate(pool, channel.name, weight);
    auto &slot = joint[vote.confidence];
    (vote.correct ? slot.first : slot.second) += p;
  });
  return finalize(joint);
}

}  // namespace detail

// Exact (p_v, S_cor, S_err, Delta) for a generator under the given weighting.
// Uniform weights (or beta = 0) need only pi, whatever the score laws are;
// other weightings need finite-support laws on the named channel.
inline ExactStats closed_form_targets(const GeneratorSpec &spec,
                                      std::string_view score_name = "reward",
                                      const WeightSpec &weight = WeightSpec::uniform()) {
  validate(spec);
  detail::JointMass joint;
  if (spec.is_mixture()) {
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
      detail::accumulate_into(joint, closed_form_targets(spec.components[c], score_name, weight),
                              spec.component_weights[c]);
    }
    return detail::finalize(joint);
  }
  const bool majority = weight.kind == WeightKind::uniform ||
                        (weight.kind == WeightKind::exponential && weight.beta == 0.0);
  if (majority) {
    for (const auto &cls : spec.classes) {
      detail::accumulate_into(joint, mv_exact_enumeration(cls.pi, spec.m, cls.truth), cls.weight);
    }
    return detail::finalize(joint);
  }
  const auto &channel = detail::find_channel(spec, score_name);
  if (!std::holds_alternative<DiscreteLaw>(channel.correct) ||
      !std::holds_alternative<DiscreteLaw>(channel.incorrect)) {
    throw NoClosedForm("weighted voting with continuous score laws on '" + channel.name +
                       "' has no closed form; use Monte Carlo");
  }
  for (const auto &cls : spec.classes) {
    detail::accumulate_into(joint, detail::weighted_class_enumeration(spec, cls, channel, weight),
                            cls.weight);
  }
  return detail::finalize(joint);
}

// Continuous-case hazards for laws with known density and survival, used to
// check the discrete machinery against textbook forms.
struct ContinuousLaw {
  std::function<double(double)> density;
  std::function<double(double)> survival;
};

inline double continuous_hazard(const ContinuousLaw &law, double lambda) {
  return law.density(lambda) / law.survival(lambda);
}

// exp(-integral_0^lambda h(u) du) by composite Simpson.
inline double survival_from_hazard(const std::function<double(double)> &hazard, double lambda,
                                   std::size_t intervals = 2000) {
  if (intervals % 2) ++intervals;
  const double step = lambda / static_cast<double>(intervals);
  double sum = hazard(0.0) + hazard(lambda);
  for (std::size_t i = 1; i < intervals; ++i) {
    sum += (i % 2 ? 4.0 : 2.0) * hazard(step * static_cast<double>(i));
  }
  return std::exp(-sum * step / 3.0);
}

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline std::vector<ScoreChannel> gaussian_channels(double reward_cor, double judge_cor,
                                                   double reward_err = 0.0,
                                                   double judge_err = 0.0) {
  return {
      {"reward", GaussianLaw{reward_cor, 1.0}, GaussianLaw{reward_err, 1.0}},
      {"judge", GaussianLaw{judge_cor, 1.0}, GaussianLaw{judge_err, 1.0}},
      {"noise", GaussianLaw{0.0, 1.0}, GaussianLaw{0.0, 1.0}},
  };
}

inline GeneratorSpec single_class(std::string name, std::vector<double> pi,
                                  std::vector<ScoreChannel> channels, std::size_t m = 16) {
  GeneratorSpec spec;
  spec.name = std::move(name);
  spec.m = m;
  spec.answers = pi.size();
  spec.classes = {{std::move(pi), 1.0, 0}};
  spec.channels = std::move(channels);
  return spec;
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
  return {"strictly-separable",  "concentrated-correct", "diffuse",
          "adversarial-wrong-plurality", "non-separable-control", "de-finetti-mixture",
          "de-finetti-mixture-per-trial", "shifted-confident-wrong"};
}

inline GeneratorSpec preset(std::string_view name) {
  using detail::gaussian_channels;
  using detail::single_class;
  if (name == "strictly-separable") {
    // Under majority vote every support point of nu has a positive hazard gap;
    // reward/judge scores add path-level separation on top.
    return single_class("strictly-separable", {0.5, 0.3, 0.2}, gaussian_channels(1.0, 0.5));
  }
  if (name == "concentrated-correct") {
    return single_class("concentrated-correct", {0.7, 0.2, 0.1}, gaussian_channels(1.0, 0.5));
  }
  if (name == "diffuse") {
    return single_class("diffuse", {0.4, 0.35, 0.25}, gaussian_channels(1.0, 0.5));
  }
  if (name == "adversarial-wrong-plurality") {
    // A wrong label holds the plurality; the correct minority scores high.
    return single_class("adversarial-wrong-plurality", {0.35, 0.45, 0.2},
                        gaussian_channels(2.0, 1.0));
  }
  if (name == "non-separable-control") {
    // Truth is uniform over labels and independent of the pool; all score
    // laws ignore correctness. nu is then independent of correctness.
    GeneratorSpec spec;
    spec.name = "non-separable-control";
    spec.m = 16;
    spec.answers = 3;
    for (std::size_t t = 0; t < 3; ++t) spec.classes.push_back({{0.5, 0.3, 0.2}, 1.0 / 3.0, t});
    spec.channels = gaussian_channels(0.0, 0.0);
    return spec;
  }
  if (name == "de-finetti-mixture" || name == "de-finetti-mixture-per-trial") {
    GeneratorSpec spec;
    spec.name = std::string(name);
    spec.components = {preset("concentrated-correct"), preset("diffuse")};
    spec.component_weights = {0.5, 0.5};
    spec.mixture_mode =
        name == "de-finetti-mixture" ? MixtureMode::per_prompt : MixtureMode::per_trial;
    return spec;
  }
  if (name == "shifted-confident-wrong") {
    // Test-time population for the distribution-shift control: a concentrated
    // wrong plurality whose paths also out-score the correct ones.
    return single_class("shifted-confident-wrong", {0.1, 0.8, 0.1},
                        gaussian_channels(0.0, 0.0, 1.0, 0.5));
  }
  throw SpecError("unknown generator preset '" + std::string(name) + "'");
}

// Same spec with every (component's) pool size replaced.
inline GeneratorSpec with_pool_size(GeneratorSpec spec, std::size_t m) {
  spec.m = m;
  for (auto &c : spec.components) c = with_pool_size(std::move(c), m);
  return spec;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::ordered_json law_to_json(const ScoreLaw &law) {
  if (const auto *g = std::get_if<GaussianLaw>(&law)) {
    return {{"kind", "gaussian"}, {"mean", g->mean}, {"sd", g->sd}};
  }
  const auto &d = std::get<DiscreteLaw>(law);
  return {{"kind", "discrete"}, {"values", d.values}, {"probs", d.probs}};
}

inline ScoreLaw law_from_json(const nlohmann::json &j) {
  const auto kind = j.value("kind", std::string("gaussian"));
  if (kind == "gaussian") return GaussianLaw{j.value("mean", 0.0), j.value("sd", 1.0)};
  if (kind == "discrete") {
    return DiscreteLaw{j.at("values").get<std::vector<double>>(),
                       j.at("probs").get<std::vector<double>>()};
  }
  throw ConfigError("unknown score law kind '" + kind + "'");
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const GeneratorSpec &spec) {
  nlohmann::ordered_json j;
  if (!spec.name.empty()) j["name"] = spec.name;
  if (spec.is_mixture()) {
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
      comps.push_back({{"weight", spec.component_weights[c]}, {"spec", to_json(spec.components[c])}});
    }
    j["mixture"] = std::move(comps);
    j["mixture_mode"] = spec.mixture_mode == MixtureMode::per_prompt ? "per-prompt" : "per-trial";
    return j;
  }
  j["m"] = spec.m;
  j["answers"] = spec.answers;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const auto &c : spec.classes) {
    classes.push_back({{"pi", c.pi}, {"weight", c.weight}, {"truth", c.truth}});
  }
  j["classes"] = std::move(classes);
  nlohmann::ordered_json channels = nlohmann::ordered_json::array();
  for (const auto &ch : spec.channels) {
    channels.push_back({{"name", ch.name},
                        {"correct", detail::law_to_json(ch.correct)},
                        {"incorrect", detail::law_to_json(ch.incorrect)}});
  }
  j["scores"] = std::move(channels);
  return j;
}

// Either {"preset": name, "m": override} or a full explicit description.
inline GeneratorSpec generator_from_json(const nlohmann::json &j) {
  try {
    GeneratorSpec spec;
    if (j.is_string()) return preset(j.get<std::string>());
    if (j.contains("preset")) {
      spec = preset(j.at("preset").get<std::string>());
      if (j.contains("m")) spec = with_pool_size(std::move(spec), j.at("m").get<std::size_t>());
    } else if (j.contains("mixture")) {
      spec.name = j.value("name", std::string());
      for (const auto &c : j.at("mixture")) {
        spec.component_weights.push_back(c.at("weight").get<double>());
        spec.components.push_back(generator_from_json(c.at("spec")));
      }
      const auto mode = j.value("mixture_mode", std::string("per-prompt"));
      if (mode != "per-prompt" && mode != "per-trial") {
        throw ConfigError("mixture_mode must be per-prompt or per-trial");
      }
      spec.mixture_mode = mode == "per-prompt" ? MixtureMode::per_prompt : MixtureMode::per_trial;
    } else {
      spec.name = j.value("name", std::string());
      spec.m = j.value("m", std::size_t{16});
      for (const auto &c : j.at("classes")) {
        spec.classes.push_back({c.at("pi").get<std::vector<double>>(), c.value("weight", 1.0),
                                c.value("truth", std::size_t{0})});
      }
      spec.answers = j.value("answers", spec.classes.empty() ? std::size_t{0}
                                                             : spec.classes.front().pi.size());
      for (const auto &ch : j.at("scores")) {
        spec.channels.push_back({ch.at("name").get<std::string>(),
                                 detail::law_from_json(ch.at("correct")),
                                 detail::law_from_json(ch.at("incorrect"))});
      }
    }
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed generator spec: ") + e.what());
  }
}

}  // namespace abstain

#endif  // ABSTAIN_SYNTH_HPP_
