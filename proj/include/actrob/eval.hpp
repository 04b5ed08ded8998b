#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "actrob/env.hpp"
#include "actrob/perturb.hpp"
#include "actrob/policy.hpp"

namespace actrob {

/// What a rollout observer sees at each step.
struct StepTrace {
  int t = 0;
  std::span<const double> state;
  std::span<const double> action;     // policy output a_t
  std::span<const double> perturbed;  // a'_t = a_t + delta (.) a_t
  double reward = 0.0;
};

struct RolloutOptions {
  /// Sample from a gaussian policy instead of taking its mean.
  bool stochastic = false;
  /// Advance the dynamics with the unperturbed a_t while the reward still
  /// uses a'_t. Off by default: the perturbed action drives the transition.
  bool literal_transition = false;
  std::function<void(const StepTrace&)> observer;
};

struct EpisodeResult {
  double reward = 0.0;
  int length = 0;
  bool terminated = false;
};

/// One episode from reset(seed) under a perturbation held fixed for the
/// whole episode. Stops on failure or after spec().max_steps steps.
EpisodeResult run_episode(const Environment& env, const MlpPolicy& policy, std::span<const double> delta,
                          std::uint64_t seed, const RolloutOptions& options = {});

/// Seed of evaluation episode m under `base_seed`.
std::uint64_t eval_episode_seed(std::uint64_t base_seed, std::size_t episode);
std::vector<std::uint64_t> eval_episode_seeds(std::uint64_t base_seed, std::size_t episodes);

struct EvalConfig {
  int episodes = 1000;
  PerturbationCondition condition;
  std::uint64_t base_seed = 0;
  /// Overrides the policy's own mode when set.
  std::optional<PolicyMode> policy_mode;
  bool literal_transition = false;
  int workers = 1;

  void validate() const;
};

struct EvalReport {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  Vector rewards;
  std::vector<int> lengths;
  std::vector<Vector> deltas;
  EvalConfig config;
  PolicyMode policy_mode = PolicyMode::kDeterministic;
};

/// Average episodic reward over config.episodes episodes. A perturbation is
/// drawn at the start of each episode: zero for normal, a fresh uniform draw
/// for random, the carried vector for adversarial.
EvalReport evaluate(const Environment& env, const MlpPolicy& policy, const EvalConfig& config);

nlohmann::json to_json(const EvalReport& report);

struct ConditionRow {
  Condition condition = Condition::kNormal;
  double epsilon = 0.0;
  double mean = 0.0;
  double std = 0.0;
  int episodes = 0;
  std::uint64_t seed = 0;
};

ConditionRow condition_row(const EvalReport& report);

/// Normal, random and adversarial evaluations sharing every setting of
/// `base` except the condition. The adversarial row needs a delta; with
/// epsilon == 0 it is forced to zero.
std::vector<EvalReport> evaluate_conditions(const Environment& env, const MlpPolicy& policy, double epsilon,
                                            const std::optional<Vector>& adversarial_delta, const EvalConfig& base);

/// Rows of evaluate_conditions with default rollout settings.
std::vector<ConditionRow> compare_conditions(const Environment& env, const MlpPolicy& policy, double epsilon,
                                             int episodes, std::uint64_t seed,
                                             const std::optional<Vector>& adversarial_delta, int workers = 1);

std::string condition_csv_header();
std::string to_csv_line(const ConditionRow& row);
/// "normal  2371 ± 449" style table.
std::string format_condition_table(std::span<const ConditionRow> rows);

}  // namespace actrob
