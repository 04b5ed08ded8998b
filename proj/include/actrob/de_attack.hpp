#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "actrob/env.hpp"
#include "actrob/perturb.hpp"
#include "actrob/policy.hpp"

namespace actrob {

struct DeConfig {
  int population_size = 45;  // NP
  int generations = 30;      // G
  double crossover = 0.7;    // CR
  /// F is drawn from (scale_low, scale_high] afresh for every mutation.
  double scale_low = 0.5;
  double scale_high = 1.0;
  int episodes_per_fitness = 100;  // M
  double epsilon = 0.3;
  std::uint64_t base_seed = 0;
  /// Re-evaluate each target on the trial's episode seeds instead of using
  /// the fitness cached when it was accepted.
  bool target_reeval = false;
  /// Not part of the result: any worker count yields identical output.
  int workers = 1;

  void validate() const;
};

struct DePopulation {
  int generation = 0;
  std::vector<Vector> individuals;
  Vector fitness;
};

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;  // R_min after this generation
  double mean_fitness = 0.0;  // mean cached fitness of the population
  int accepted = 0;
  /// delta_best after this generation.
  Vector best_delta;
  std::string population_hash;
};

struct AttackResult {
  PerturbationVector delta_best;
  double r_min = 0.0;
  std::vector<GenerationRecord> history;
  /// Fitness of every generation-0 individual.
  Vector initial_fitness;
  /// Fitness of every accepted trial, in acceptance order.
  Vector accepted_fitness;
  /// Population after the last completed generation.
  DePopulation final_population;
  DeConfig config;
  std::size_t total_episodes = 0;
  std::string env_name;
};

/// Raised when a fitness evaluation fails; carries the history up to the
/// last completed generation.
class AttackError : public std::runtime_error {
 public:
  AttackError(const std::string& what, AttackResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const AttackResult& partial() const { return partial_; }

 private:
  AttackResult partial_;
};

/// Fitness of a batch of candidates: result[k] is the average episodic
/// reward of candidates[k], evaluated on episode seeds for
/// (generation, individual[k]).
using BatchFitness = std::function<Vector(std::span<const Vector> candidates, int generation,
                                          std::span<const std::size_t> individuals)>;

/// Seed of episode m for individual i in generation g.
std::uint64_t attack_episode_seed(std::uint64_t base_seed, int generation, std::size_t individual, std::size_t episode);

/// NP vectors i.i.d. uniform on the box. Fitness is left empty.
DePopulation init_population(const DeConfig& config, std::size_t action_dim, Rng& rng);

/// v = best + F * (x_r1 - x_r2) with r1 != r2, both != i. When `forced_scale`
/// is set it replaces the random F.
Vector mutate(const DePopulation& population, std::span<const double> best, std::size_t i, Rng& rng,
              const DeConfig& config, std::optional<double> forced_scale = std::nullopt,
              double* scale_used = nullptr);

/// Binomial crossover followed by clipping to [-eps, eps].
Vector crossover(std::span<const double> target, std::span<const double> mutant, Rng& rng, const DeConfig& config);

/// (1/M) sum_m sum_t r_t over episodes run under the fixed perturbation.
double evaluate_fitness(std::span<const double> delta, const Environment& env, const MlpPolicy& policy,
                        std::span<const std::uint64_t> seeds, int workers = 1);

/// Running state of the selection step.
struct SelectionState {
  double r_min = 0.0;
  Vector delta_best;
  Vector accepted_fitness;
};

/// Accepts the trial iff trial_fitness <= target_fitness. An accepted trial
/// with fitness <= r_min becomes the new best. Returns true on acceptance.
bool select(double trial_fitness, double target_fitness, std::span<const double> trial, Vector& target,
            double& target_cached_fitness, SelectionState& state);

/// Runs the evolution loop against any batch fitness.
AttackResult run_de(const DeConfig& config, std::size_t action_dim, const BatchFitness& fitness);

/// Adversarial attack on a policy: minimizes its average episodic reward.
AttackResult run_attack(const Environment& env, const MlpPolicy& policy, const DeConfig& config);

nlohmann::json to_json(const AttackResult& result);
/// Standalone perturbation file consumed by evaluate and perturb-data.
nlohmann::json delta_file_json(const PerturbationVector& delta, const std::string& env_name);
PerturbationVector parse_delta_file(const std::string& text);
PerturbationVector load_delta_file(const std::string& path);

}  // namespace actrob
