#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actrob/dataset.hpp"
#include "actrob/env.hpp"
#include "actrob/policy.hpp"

namespace actrob {

/// Cross-entropy search over the flat parameters of an MLP, maximizing the
/// normal-condition average episodic reward.
struct SearchConfig {
  std::vector<int> hidden = {16};
  int population = 32;
  int iterations = 200;
  double elite_fraction = 0.25;
  double init_std = 0.5;
  double min_std = 0.02;
  int episodes_per_candidate = 1;
  /// The medium policy is the best-so-far after this fraction of iterations.
  double medium_fraction = 0.1;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

struct SearchResult {
  MlpPolicy expert;
  MlpPolicy medium;
  double expert_fitness = 0.0;
  double medium_fitness = 0.0;
  double initial_fitness = 0.0;
  /// Best fitness seen up to and including each iteration.
  std::vector<double> best_history;
  std::vector<std::string> warnings;
};

/// With iterations == 0 the initial random policy is returned unchanged.
SearchResult train_policy_search(const Environment& env, const SearchConfig& config);

/// Initial policy used by train_policy_search for this config.
MlpPolicy initial_search_policy(const Environment& env, const SearchConfig& config);

struct CloneConfig {
  /// Empty means a single tanh layer from state to action.
  std::vector<int> hidden = {16};
  int epochs = 200;
  int batch_size = 256;
  double learning_rate = 3e-3;
  /// Learning rate decays geometrically to learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.05;
  double init_scale = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CloneResult {
  MlpPolicy policy;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // mean squared error per epoch
};

/// Minimizes the mean squared error between the policy output and the
/// dataset actions with Adam.
CloneResult behavior_clone(const TransitionDataset& dataset, const CloneConfig& config, const Vector& action_low,
                           const Vector& action_high);

/// Mean squared error of a policy on a dataset (averaged over transitions
/// and action dimensions).
double clone_loss(const MlpPolicy& policy, const TransitionDataset& dataset);

}  // namespace actrob
