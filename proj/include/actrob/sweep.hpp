#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actrob/de_attack.hpp"
#include "actrob/env.hpp"
#include "actrob/policy.hpp"

namespace actrob {

/// Perturbation-strength sweep: one attack and one adversarial evaluation
/// per epsilon.
struct SweepConfig {
  std::vector<double> epsilons = {0.1, 0.2, 0.3, 0.4, 0.5};
  /// Template for every attack; its epsilon is replaced per row.
  DeConfig attack;
  int eval_episodes = 1000;
  std::uint64_t eval_seed = 0;
  int workers = 1;
};

struct SweepRow {
  double epsilon = 0.0;
  double mean = 0.0;
  double std = 0.0;
  int episodes = 0;
  std::uint64_t eval_seed = 0;
  std::uint64_t attack_seed = 0;
  double r_min = 0.0;
  Vector delta;
};

std::vector<SweepRow> sweep_epsilon(const Environment& env, const MlpPolicy& policy, const SweepConfig& config);

/// Columns: condition, epsilon, mean, std, M, seed.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace actrob
