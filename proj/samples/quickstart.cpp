// Calibrate an abstention threshold on synthetic pools and apply it to a
// held-out test set.

#include <cstdio>
#include <string>
#include <vector>

#include "abstain/abstain.hpp"

int main(int argc, char **argv) {
  const double alpha = argc > 1 ? std::stod(argv[1]) : 0.10;

  const auto spec = abstain::preset("diffuse");
  const auto data = abstain::generate_dataset(spec, 700, 42);
  const auto parts = abstain::split(data, 200, 7);

  const auto weight = abstain::WeightSpec::exponential(1.0);
  const auto cal = abstain::aggregate_dataset(parts.calibration, "reward", weight);
  const auto test = abstain::aggregate_dataset(parts.test, "reward", weight);

  const auto policy = abstain::calibrate(cal, alpha);
  const auto decisions = abstain::apply_policy(policy, test);

  std::vector<std::string> truths;
  for (const auto &inst : parts.test.instances()) truths.push_back(inst.truth);
  std::size_t answered = 0;
  for (const auto &d : decisions) answered += d.answered();

  std::printf("alpha           %.3f\n", alpha);
  std::printf("lambda_hat      %.4f%s\n", policy.lambda_hat, policy.always_abstain ? " (always abstain)" : "");
  std::printf("realized risk   %.4f\n", abstain::realized_risk(decisions, truths));
  std::printf("yield           %.4f\n", static_cast<double>(answered) / static_cast<double>(decisions.size()));
  if (answered > 0) {
    std::printf("selective acc   %.4f\n", abstain::selective_accuracy(test, policy.lambda_hat));
  }
  return 0;
}
