#include "actrob/de_attack.hpp"

#include <algorithm>
#include <limits>

#include "actrob/eval.hpp"
#include "actrob/io.hpp"

namespace actrob {

namespace {

constexpr std::uint64_t kInitStream = 0xde0;
constexpr std::uint64_t kOpsStream = 0xde1;
constexpr std::uint64_t kEpisodeStream = 0xde2;

std::string population_hash(const std::vector<Vector>& individuals) {
  std::uint64_t h = fnv1a(std::string_view("population"));
  for (const auto& x : individuals) h = fnv1a(x, h);
  return hex64(h);
}

GenerationRecord make_record(int generation, const DePopulation& pop, const SelectionState& state, int accepted) {
  GenerationRecord rec;
  rec.generation = generation;
  rec.best_fitness = state.r_min;
  rec.mean_fitness = mean(pop.fitness);
  rec.accepted = accepted;
  rec.best_delta = state.delta_best;
  rec.population_hash = population_hash(pop.individuals);
  return rec;
}

}  // namespace

void DeConfig::validate() const {
  if (population_size < 4) {
    throw std::invalid_argument("DE population size must be >= 4 (got " + std::to_string(population_size) + ")");
  }
  if (generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (!(crossover >= 0.0 && crossover <= 1.0)) throw std::invalid_argument("crossover constant must lie in [0, 1]");
  if (!(scale_low >= 0.0 && scale_low < scale_high)) throw std::invalid_argument("scale factor range must be (low, high] with low < high");
  if (episodes_per_fitness < 1) throw std::invalid_argument("episodes_per_fitness must be >= 1");
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
}

std::uint64_t attack_episode_seed(std::uint64_t base_seed, int generation, std::size_t individual,
                                  std::size_t episode) {
  return derive_seed(base_seed, {kEpisodeStream, static_cast<std::uint64_t>(generation), individual, episode});
}

DePopulation init_population(const DeConfig& config, std::size_t action_dim, Rng& rng) {
  if (action_dim < 1) throw std::invalid_argument("action dimension must be >= 1");
  DePopulation pop;
  pop.generation = 0;
  const auto condition = PerturbationCondition::random(config.epsilon);
  pop.individuals.reserve(static_cast<std::size_t>(config.population_size));
  for (int i = 0; i < config.population_size; ++i) {
    pop.individuals.push_back(sample_perturbation(condition, action_dim, rng).delta);
  }
  return pop;
}

Vector mutate(const DePopulation& population, std::span<const double> best, std::size_t i, Rng& rng,
              const DeConfig& config, std::optional<double> forced_scale, double* scale_used) {
  const std::size_t np = population.individuals.size();
  if (np < 4) throw std::invalid_argument("mutation needs a population of at least 4");
  std::size_t r1 = 0;
  std::size_t r2 = 0;
  do {
    r1 = rng.index(np);
  } while (r1 == i);
  do {
    r2 = rng.index(np);
  } while (r2 == i || r2 == r1);
  const double u = rng.uniform01();
  const double scale = forced_scale.value_or(config.scale_high - (config.scale_high - config.scale_low) * u);
  if (scale_used) *scale_used = scale;

  const Vector& x1 = population.individuals[r1];
  const Vector& x2 = population.individuals[r2];
  check_dim("mutation base", x1.size(), best.size());
  Vector v(best.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = best[j] + scale * (x1[j] - x2[j]);
  return v;
}

Vector crossover(std::span<const double> target, std::span<const double> mutant, Rng& rng, const DeConfig& config) {
  check_dim("crossover", target.size(), mutant.size());
  const std::size_t forced = rng.index(target.size());
  Vector trial(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) {
    const double r = rng.uniform01();
    trial[j] = (r <= config.crossover || j == forced) ? mutant[j] : target[j];
  }
  return clip_box(trial, config.epsilon);
}

double evaluate_fitness(std::span<const double> delta, const Environment& env, const MlpPolicy& policy,
                        std::span<const std::uint64_t> seeds, int workers) {
  if (seeds.empty()) throw std::invalid_argument("fitness needs at least one episode");
  Vector rewards(seeds.size());
  parallel_for(seeds.size(), workers,
               [&](std::size_t m) { rewards[m] = run_episode(env, policy, delta, seeds[m]).reward; });
  double total = 0.0;
  for (double r : rewards) total += r;
  return total / static_cast<double>(seeds.size());
}

bool select(double trial_fitness, double target_fitness, std::span<const double> trial, Vector& target,
            double& target_cached_fitness, SelectionState& state) {
  if (trial_fitness <= target_fitness) {
    target.assign(trial.begin(), trial.end());
    target_cached_fitness = trial_fitness;
    state.accepted_fitness.push_back(trial_fitness);
    if (trial_fitness <= state.r_min) {
      state.r_min = trial_fitness;
      state.delta_best.assign(trial.begin(), trial.end());
    }
    return true;
  }
  target_cached_fitness = target_fitness;
  return false;
}

AttackResult run_de(const DeConfig& config, std::size_t action_dim, const BatchFitness& fitness) {
  config.validate();
  const auto np = static_cast<std::size_t>(config.population_size);
  std::vector<std::size_t> all(np);
  for (std::size_t i = 0; i < np; ++i) all[i] = i;

  AttackResult result;
  result.config = config;

  Rng init_rng(derive_seed(config.base_seed, {kInitStream}));
  DePopulation pop = init_population(config, action_dim, init_rng);
  SelectionState state;

  auto finish = [&]() {
    result.delta_best = {state.delta_best, config.epsilon, Condition::kAdversarial};
    result.r_min = state.r_min;
    result.accepted_fitness = state.accepted_fitness;
    result.final_population = pop;
  };
  auto evaluate_batch = [&](std::span<const Vector> candidates, int generation) {
    try {
      Vector f = fitness(candidates, generation, all);
      check_dim("batch fitness", candidates.size(), f.size());
      result.total_episodes += candidates.size() * static_cast<std::size_t>(config.episodes_per_fitness);
      return f;
    } catch (const std::exception& e) {
      finish();
      throw AttackError("fitness evaluation failed in generation " + std::to_string(generation) + ": " + e.what(),
                        result);
    }
  };

  pop.fitness = evaluate_batch(pop.individuals, 0);
  result.initial_fitness = pop.fitness;
  // The best of generation 0 seeds the record: mutation is centred on the
  // best individual from generation 1 on.
  const auto best0 = static_cast<std::size_t>(std::min_element(pop.fitness.begin(), pop.fitness.end()) - pop.fitness.begin());
  state.r_min = pop.fitness[best0];
  state.delta_best = pop.individuals[best0];
  result.history.push_back(make_record(0, pop, state, 0));

  std::vector<Vector> trials(np);
  for (int g = 1; g <= config.generations; ++g) {
    Rng ops(derive_seed(config.base_seed, {kOpsStream, static_cast<std::uint64_t>(g)}));
    for (std::size_t i = 0; i < np; ++i) {
      const Vector mutant = mutate(pop, state.delta_best, i, ops, config);
      trials[i] = crossover(pop.individuals[i], mutant, ops, config);
    }
    const Vector trial_fitness = evaluate_batch(trials, g);
    const Vector target_fitness = config.target_reeval ? evaluate_batch(pop.individuals, g) : pop.fitness;

    int accepted = 0;
    for (std::size_t i = 0; i < np; ++i) {
      if (select(trial_fitness[i], target_fitness[i], trials[i], pop.individuals[i], pop.fitness[i], state)) {
        ++accepted;
      }
    }
    pop.generation = g;
    result.history.push_back(make_record(g, pop, state, accepted));
  }
  finish();
  return result;
}

AttackResult run_attack(const Environment& env, const MlpPolicy& policy, const DeConfig& config) {
  const EnvironmentSpec& spec = env.spec();
  check_dim("policy input for " + spec.name, static_cast<std::size_t>(spec.state_dim),
            static_cast<std::size_t>(policy.input_dim()));
  check_dim("policy output for " + spec.name, static_cast<std::size_t>(spec.action_dim),
            static_cast<std::size_t>(policy.output_dim()));
  const auto episodes = static_cast<std::size_t>(config.episodes_per_fitness);

  BatchFitness fitness = [&](std::span<const Vector> candidates, int generation,
                             std::span<const std::size_t> individuals) {
    const std::size_t jobs = candidates.size() * episodes;
    Vector rewards(jobs);
    parallel_for(jobs, config.workers, [&](std::size_t job) {
      const std::size_t k = job / episodes;
      const std::size_t m = job % episodes;
      const auto seed = attack_episode_seed(config.base_seed, generation, individuals[k], m);
      rewards[job] = run_episode(env, policy, candidates[k], seed).reward;
    });
    Vector out(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      double total = 0.0;
      for (std::size_t m = 0; m < episodes; ++m) total += rewards[k * episodes + m];
      out[k] = total / static_cast<double>(episodes);
    }
    return out;
  };
  AttackResult result = run_de(config, static_cast<std::size_t>(spec.action_dim), fitness);
  result.env_name = spec.name;
  return result;
}

nlohmann::json to_json(const AttackResult& result) {
  nlohmann::json cfg;
  cfg["population_size"] = result.config.population_size;
  cfg["generations"] = result.config.generations;
  cfg["crossover"] = result.config.crossover;
  cfg["scale_low"] = result.config.scale_low;
  cfg["scale_high"] = result.config.scale_high;
  cfg["episodes_per_fitness"] = result.config.episodes_per_fitness;
  cfg["epsilon"] = result.config.epsilon;
  cfg["base_seed"] = result.config.base_seed;
  cfg["target_reeval"] = result.config.target_reeval;

  nlohmann::json history = nlohmann::json::array();
  for (const auto& rec : result.history) {
    nlohmann::json h;
    h["generation"] = rec.generation;
    h["best_fitness"] = rec.best_fitness;
    h["mean_fitness"] = rec.mean_fitness;
    h["accepted"] = rec.accepted;
    h["best_delta"] = rec.best_delta;
    h["population_hash"] = rec.population_hash;
    history.push_back(std::move(h));
  }

  nlohmann::json j;
  j["format"] = "actrob-attack";
  j["version"] = 1;
  j["env"] = result.env_name;
  j["config"] = std::move(cfg);
  j["delta_best"] = result.delta_best.delta;
  j["r_min"] = result.r_min;
  j["total_episodes"] = result.total_episodes;
  j["initial_fitness"] = result.initial_fitness;
  j["accepted_fitness"] = result.accepted_fitness;
  j["final_population"] = result.final_population.individuals;
  j["final_fitness"] = result.final_population.fitness;
  j["history"] = std::move(history);
  return j;
}

nlohmann::json delta_file_json(const PerturbationVector& delta, const std::string& env_name) {
  nlohmann::json j;
  j["format"] = "actrob-delta";
  j["version"] = 1;
  j["env"] = env_name;
  j["condition"] = to_string(delta.condition);
  j["epsilon"] = delta.epsilon;
  j["delta"] = delta.delta;
  return j;
}

PerturbationVector parse_delta_file(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", std::string()) != "actrob-delta") {
    throw std::runtime_error("not a perturbation file (missing format: actrob-delta)");
  }
  PerturbationVector p;
  p.delta = j.at("delta").get<Vector>();
  p.epsilon = j.at("epsilon").get<double>();
  p.condition = parse_condition(j.value("condition", std::string("adversarial")));
  if (!inside_box(p.delta, p.epsilon)) throw std::runtime_error("perturbation file: delta lies outside its epsilon box");
  return p;
}

PerturbationVector load_delta_file(const std::string& path) { return parse_delta_file(read_file(path)); }

}  // namespace actrob
