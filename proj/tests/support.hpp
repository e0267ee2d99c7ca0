#ifndef ABSTAIN_TESTS_SUPPORT_HPP_
#define ABSTAIN_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "abstain/abstain.hpp"

namespace testing_support {

inline abstain::VoteOutcome outcome(double nu, bool correct, std::string id = "x") {
  abstain::VoteOutcome o;
  o.instance_id = std::move(id);
  o.winner = correct ? "t" : "w";
  o.confidence = nu;
  o.tallies = {{o.winner, nu}};
  o.correct = correct;
  o.m = 1;
  return o;
}

// Generates n prompts in chunks and keeps only (nu, correct) per prompt, so
// million-prompt checks stay within a modest memory budget.
inline std::vector<abstain::VoteOutcome> slim_outcomes(const abstain::GeneratorSpec &spec,
                                                       std::size_t n, std::uint64_t seed,
                                                       const std::string &score,
                                                       const abstain::WeightSpec &weight,
                                                       std::size_t chunk = 20000) {
  std::vector<abstain::VoteOutcome> out;
  out.reserve(n);
  for (std::size_t start = 0, c = 0; start < n; start += chunk, ++c) {
    const auto size = std::min(chunk, n - start);
    const auto ds = abstain::generate_dataset(spec, size, abstain::derive_seed(seed, c), start);
    for (const auto &inst : ds.instances()) {
      const auto o = abstain::aggregate(inst, score, weight);
      abstain::VoteOutcome slim;
      slim.confidence = o.confidence;
      slim.correct = o.correct;
      out.push_back(std::move(slim));
    }
  }
  return out;
}

// answers[j] with score scores[j] on channel "reward".
inline abstain::PromptInstance instance(std::string id, std::string truth,
                                        const std::vector<std::string> &answers,
                                        const std::vector<double> &scores = {}) {
  abstain::PromptInstance inst;
  inst.id = std::move(id);
  inst.truth = std::move(truth);
  for (std::size_t j = 0; j < answers.size(); ++j) {
    abstain::PathRecord p;
    p.answer_id = answers[j];
    p.scores.set("reward", scores.empty() ? 0.0 : scores[j]);
    inst.paths.push_back(std::move(p));
  }
  return inst;
}

// Direct count oracle for majority vote: plurality count over m, ties to the
// smallest answer id.
inline std::pair<std::string, double> majority_oracle(const abstain::PromptInstance &inst) {
  std::map<std::string, std::size_t> counts;
  for (const auto &p : inst.paths) ++counts[p.answer_id];
  std::string best;
  std::size_t best_count = 0;
  for (const auto &[answer, c] : counts) {
    if (c > best_count) {
      best = answer;
      best_count = c;
    }
  }
  return {best, static_cast<double>(best_count) / static_cast<double>(inst.paths.size())};
}

// Brute-force answer of the single highest-scoring path.
inline std::string best_of_m_oracle(const abstain::PromptInstance &inst, const std::string &score) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < inst.paths.size(); ++j) {
    if (*inst.paths[j].scores.find(score) > *inst.paths[best].scores.find(score)) best = j;
  }
  return inst.paths[best].answer_id;
}

// Random pool over `labels` answers with scores drawn without replacement from
// a grid of spacing `step` inside [0, range].
inline abstain::PromptInstance random_distinct_pool(abstain::Rng &rng, std::size_t m,
                                                    std::size_t labels, double range = 10.0,
                                                    double step = 0.25) {
  const auto slots = static_cast<std::size_t>(range / step) + 1;
  auto perm = abstain::random_permutation(slots, rng);
  abstain::PromptInstance inst;
  inst.id = "r";
  inst.truth = "a0";
  for (std::size_t j = 0; j < m; ++j) {
    abstain::PathRecord p;
    p.answer_id = "a" + std::to_string(rng.bounded(labels));
    p.scores.set("reward", step * static_cast<double>(perm[j]));
    inst.paths.push_back(std::move(p));
  }
  return inst;
}

}  // namespace testing_support

#endif  // ABSTAIN_TESTS_SUPPORT_HPP_
