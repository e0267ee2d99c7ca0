#include <cstdio>
#include <iostream>

#include "abstain/abstain.hpp"

// Compares accuracy-yield frontiers of the three score channels and prints the
// separability diagnostics for each.
int main() {
  const auto data = abstain::generate_dataset(abstain::preset("adversarial-wrong-plurality"), 2000, 1);
  const auto weight = abstain::WeightSpec::exponential(1.0);

  std::printf("%-8s %8s %8s %10s %10s\n", "score", "p_v", "auc", "max_delta", "at_lambda");
  for (const auto &score : data.score_names()) {
    const auto outcomes = abstain::aggregate_dataset(data, score, weight);
    const auto prof = abstain::separability_profile(outcomes);
    const auto [lambda, gap] = prof.max_separation();
    const auto summary = abstain::frontier(outcomes);
    std::printf("%-8s %8.4f %8.4f %10.4f %10.4f\n", score.c_str(), prof.p_v_hat, summary.auc, gap, lambda);
  }

  std::cout << "\nmajority-vote frontier:\n";
  const auto mv = abstain::aggregate_dataset(data, "reward", abstain::WeightSpec::uniform());
  abstain::write_frontier_csv(std::cout, abstain::sweep(mv));
  return 0;
}
