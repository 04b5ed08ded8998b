#include "actrob/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "actrob/eval.hpp"

namespace actrob {

namespace {

constexpr std::uint64_t kInitStream = 0xc0;
constexpr std::uint64_t kSampleStream = 0xc1;
constexpr std::uint64_t kEpisodeStream = 0xc2;
constexpr std::uint64_t kShuffleStream = 0xb1;

std::vector<int> layers_for(const std::vector<int>& hidden, int in, int out) {
  std::vector<int> layers;
  layers.push_back(in);
  layers.insert(layers.end(), hidden.begin(), hidden.end());
  layers.push_back(out);
  return layers;
}

double normal_fitness(const Environment& env, const MlpPolicy& policy, std::uint64_t seed, int iteration,
                      int episodes) {
  const Vector zero(static_cast<std::size_t>(env.spec().action_dim), 0.0);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const auto ep_seed = derive_seed(seed, {kEpisodeStream, static_cast<std::uint64_t>(iteration),
                                            static_cast<std::uint64_t>(e)});
    total += run_episode(env, policy, zero, ep_seed).reward;
  }
  return total / episodes;
}

}  // namespace

void SearchConfig::validate() const {
  if (population < 2) throw std::invalid_argument("search population must be >= 2");
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) throw std::invalid_argument("elite_fraction must be in (0, 1]");
  if (init_std <= 0.0 || min_std < 0.0) throw std::invalid_argument("search std must be positive");
  if (episodes_per_candidate < 1) throw std::invalid_argument("episodes_per_candidate must be >= 1");
  if (!(medium_fraction >= 0.0 && medium_fraction <= 1.0)) {
    throw std::invalid_argument("medium_fraction must be in [0, 1]");
  }
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("hidden layer sizes must be positive");
  }
}

MlpPolicy initial_search_policy(const Environment& env, const SearchConfig& config) {
  const EnvironmentSpec& spec = env.spec();
  MlpPolicy policy = make_random_policy(layers_for(config.hidden, spec.state_dim, spec.action_dim), spec.action_low,
                                        spec.action_high, derive_seed(config.seed, {kInitStream}));
  policy.env_name = spec.name;
  return policy;
}

SearchResult train_policy_search(const Environment& env, const SearchConfig& config) {
  config.validate();
  MlpPolicy current = initial_search_policy(env, config);
  const std::size_t dim = current.parameters().size();

  SearchResult result;
  result.initial_fitness = normal_fitness(env, current, config.seed, -1, config.episodes_per_candidate);
  result.expert = current;
  result.expert_fitness = result.initial_fitness;
  result.medium = current;
  result.medium_fitness = result.initial_fitness;

  const int medium_after = static_cast<int>(std::floor(config.medium_fraction * config.iterations));
  const auto pop = static_cast<std::size_t>(config.population);
  const auto elites = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config.elite_fraction * config.population)));

  Vector mean_params(current.parameters().begin(), current.parameters().end());
  Vector stddev(dim, config.init_std);
  std::vector<Vector> candidates(pop, Vector(dim));
  Vector fitness(pop);

  for (int it = 0; it < config.iterations; ++it) {
    Rng rng(derive_seed(config.seed, {kSampleStream, static_cast<std::uint64_t>(it)}));
    for (auto& c : candidates) {
      for (std::size_t k = 0; k < dim; ++k) c[k] = mean_params[k] + stddev[k] * rng.normal();
    }
    parallel_for(pop, config.workers, [&](std::size_t p) {
      MlpPolicy candidate = current;
      candidate.set_parameters(candidates[p]);
      fitness[p] = normal_fitness(env, candidate, config.seed, it, config.episodes_per_candidate);
    });

    std::vector<std::size_t> order(pop);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });

    if (fitness[order[0]] > result.expert_fitness) {
      result.expert.set_parameters(candidates[order[0]]);
      result.expert_fitness = fitness[order[0]];
    }
    result.best_history.push_back(result.expert_fitness);

    for (std::size_t k = 0; k < dim; ++k) {
      double m = 0.0;
      for (std::size_t e = 0; e < elites; ++e) m += candidates[order[e]][k];
      m /= static_cast<double>(elites);
      double v = 0.0;
      for (std::size_t e = 0; e < elites; ++e) v += (candidates[order[e]][k] - m) * (candidates[order[e]][k] - m);
      mean_params[k] = m;
      stddev[k] = std::max(std::sqrt(v / static_cast<double>(elites)), config.min_std);
    }

    if (it + 1 == medium_after) {
      result.medium = result.expert;
      result.medium_fitness = result.expert_fitness;
    }
  }

  if (config.iterations > 0 && result.expert_fitness <= result.initial_fitness) {
    result.warnings.push_back("policy search did not improve on the initial policy; returning it unchanged");
  }
  result.expert.note = "policy-search expert, seed " + std::to_string(config.seed);
  result.medium.note = "policy-search medium (best after " + std::to_string(medium_after) + " of " +
                       std::to_string(config.iterations) + " iterations), seed " + std::to_string(config.seed);
  return result;
}

void CloneConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
    throw std::invalid_argument("final_lr_fraction must be in (0, 1]");
  }
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("hidden layer sizes must be positive");
  }
}

double clone_loss(const MlpPolicy& policy, const TransitionDataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("cannot compute loss on an empty dataset");
  double total = 0.0;
  for (const auto& t : dataset.transitions) {
    const ActionVector y = policy.mean_action(t.state);
    for (std::size_t j = 0; j < y.size(); ++j) total += (y[j] - t.action[j]) * (y[j] - t.action[j]);
  }
  return total / static_cast<double>(dataset.size() * dataset.action_dim());
}

CloneResult behavior_clone(const TransitionDataset& dataset, const CloneConfig& config, const Vector& action_low,
                           const Vector& action_high) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("behavior cloning needs a nonempty dataset");
  const std::size_t ds = dataset.state_dim();
  const std::size_t na = dataset.action_dim();
  check_dim("action bounds", na, action_low.size());
  for (const auto& t : dataset.transitions) {
    check_dim("dataset state", ds, t.state.size());
    check_dim("dataset action", na, t.action.size());
  }

  const std::vector<int> layers = layers_for(config.hidden, static_cast<int>(ds), static_cast<int>(na));
  MlpPolicy policy = make_random_policy(layers, action_low, action_high, derive_seed(config.seed, {kInitStream}),
                                        config.init_scale);
  policy.env_name = dataset.meta.env;
  policy.note = "behavior clone of " + dataset.meta.quality + " dataset, seed " + std::to_string(config.seed);

  const std::size_t n_params = policy.parameters().size();
  Vector grad(n_params), m1(n_params, 0.0), m2(n_params, 0.0);
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;
  std::size_t adam_step = 0;

  Vector half(na), mid(na);
  for (std::size_t j = 0; j < na; ++j) {
    half[j] = 0.5 * (action_high[j] - action_low[j]);
    mid[j] = 0.5 * (action_high[j] + action_low[j]);
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, {kShuffleStream}));

  CloneResult result;
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), dataset.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.epochs > 1
                          ? config.learning_rate * std::pow(config.final_lr_fraction,
                                                            static_cast<double>(epoch) / (config.epochs - 1))
                          : config.learning_rate;
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double scale = 1.0 / static_cast<double>((end - start) * na);
      std::fill(grad.begin(), grad.end(), 0.0);
      auto params = policy.parameters();

      for (std::size_t b = start; b < end; ++b) {
        const Transition& t = dataset.transitions[order[b]];
        const std::vector<Vector> acts = policy.forward_trace(t.state);
        // Gradient w.r.t. the pre-activation of the output layer.
        Vector delta(na);
        const Vector& out = acts.back();
        for (std::size_t j = 0; j < na; ++j) {
          const double err = mid[j] + half[j] * out[j] - t.action[j];
          epoch_loss += err * err;
          delta[j] = 2.0 * err * scale * half[j] * (1.0 - out[j] * out[j]);
        }
        // Walk the layers backwards; offsets index the flat parameter block.
        std::size_t offset = n_params;
        for (std::size_t l = layers.size() - 1; l >= 1; --l) {
          const auto in = static_cast<std::size_t>(layers[l - 1]);
          const auto outn = static_cast<std::size_t>(layers[l]);
          offset -= in * outn + outn;
          const Vector& x = acts[l - 1];
          double* gw = grad.data() + offset;
          double* gb = gw + in * outn;
          for (std::size_t o = 0; o < outn; ++o) {
            gb[o] += delta[o];
            for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += delta[o] * x[i];
          }
          if (l == 1) break;
          Vector prev(in, 0.0);
          const double* w = params.data() + offset;
          for (std::size_t o = 0; o < outn; ++o) {
            for (std::size_t i = 0; i < in; ++i) prev[i] += w[o * in + i] * delta[o];
          }
          for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - x[i] * x[i];
          delta = std::move(prev);
        }
      }

      ++adam_step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam_step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam_step));
      for (std::size_t k = 0; k < n_params; ++k) {
        m1[k] = kBeta1 * m1[k] + (1.0 - kBeta1) * grad[k];
        m2[k] = kBeta2 * m2[k] + (1.0 - kBeta2) * grad[k] * grad[k];
        params[k] -= lr * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + kAdamEps);
      }
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(dataset.size() * na));
  }
  result.final_loss = clone_loss(policy, dataset);
  result.policy = std::move(policy);
  return result;
}

}  // namespace actrob
