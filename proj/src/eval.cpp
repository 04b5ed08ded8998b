#include "actrob/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace actrob {

namespace {

constexpr std::uint64_t kEvalStream = 0xe7a1;
constexpr std::uint64_t kResetStream = 0;
constexpr std::uint64_t kPolicyStream = 1;
constexpr std::uint64_t kDeltaStream = 2;

}  // namespace

EpisodeResult run_episode(const Environment& env, const MlpPolicy& policy, std::span<const double> delta,
                          std::uint64_t seed, const RolloutOptions& options) {
  const EnvironmentSpec& spec = env.spec();
  check_dim("perturbation", static_cast<std::size_t>(spec.action_dim), delta.size());
  check_dim("policy output for " + spec.name, static_cast<std::size_t>(spec.action_dim),
            static_cast<std::size_t>(policy.output_dim()));

  Rng policy_rng(derive_seed(seed, {kPolicyStream}));
  Rng* rng = options.stochastic ? &policy_rng : nullptr;

  StateVector state = env.reset(derive_seed(seed, {kResetStream}));
  EpisodeResult result;
  for (int t = 0; t < spec.max_steps; ++t) {
    const ActionVector action = policy.act(state, rng);
    const ActionVector perturbed = apply_perturbation(action, delta);
    StepResult step = env.step(state, perturbed);
    if (options.literal_transition) {
      StepResult unperturbed = env.step(state, action);
      step.next_state = std::move(unperturbed.next_state);
      step.terminated = unperturbed.terminated;
    }
    if (options.observer) options.observer(StepTrace{t, state, action, perturbed, step.reward});
    result.reward += step.reward;
    result.length = t + 1;
    state = std::move(step.next_state);
    if (step.terminated) {
      result.terminated = true;
      break;
    }
  }
  return result;
}

std::uint64_t eval_episode_seed(std::uint64_t base_seed, std::size_t episode) {
  return derive_seed(base_seed, {kEvalStream, episode});
}

std::vector<std::uint64_t> eval_episode_seeds(std::uint64_t base_seed, std::size_t episodes) {
  std::vector<std::uint64_t> seeds(episodes);
  for (std::size_t m = 0; m < episodes; ++m) seeds[m] = eval_episode_seed(base_seed, m);
  return seeds;
}

void EvalConfig::validate() const {
  if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");
  if (condition.epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
}

EvalReport evaluate(const Environment& env, const MlpPolicy& policy, const EvalConfig& config) {
  config.validate();
  const auto na = static_cast<std::size_t>(env.spec().action_dim);
  const auto m_count = static_cast<std::size_t>(config.episodes);

  const PolicyMode mode = config.policy_mode.value_or(policy.mode());
  MlpPolicy actor = policy;
  actor.set_mode(mode);
  RolloutOptions options;
  options.stochastic = mode == PolicyMode::kGaussian;
  options.literal_transition = config.literal_transition;

  EvalReport report;
  report.config = config;
  report.policy_mode = mode;
  report.rewards.assign(m_count, 0.0);
  report.lengths.assign(m_count, 0);
  report.deltas.assign(m_count, Vector{});

  parallel_for(m_count, config.workers, [&](std::size_t m) {
    const std::uint64_t seed = eval_episode_seed(config.base_seed, m);
    Rng delta_rng(derive_seed(seed, {kDeltaStream}));
    PerturbationVector delta = sample_perturbation(config.condition, na, delta_rng);
    const EpisodeResult ep = run_episode(env, actor, delta.delta, seed, options);
    report.rewards[m] = ep.reward;
    report.lengths[m] = ep.length;
    report.deltas[m] = std::move(delta.delta);
  });

  report.mean = mean(report.rewards);
  report.std = population_std(report.rewards);
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["condition"] = to_string(report.config.condition.tag);
  j["epsilon"] = report.config.condition.epsilon;
  if (report.config.condition.tag == Condition::kAdversarial) {
    j["adversarial_delta"] = report.config.condition.adversarial_delta;
  }
  j["episodes"] = report.config.episodes;
  j["seed"] = report.config.base_seed;
  j["policy_mode"] = to_string(report.policy_mode);
  j["literal_transition"] = report.config.literal_transition;
  j["mean"] = report.mean;
  j["std"] = report.std;
  j["rewards"] = report.rewards;
  j["lengths"] = report.lengths;
  j["deltas"] = report.deltas;
  return j;
}

ConditionRow condition_row(const EvalReport& report) {
  return {report.config.condition.tag, report.config.condition.epsilon, report.mean, report.std,
          report.config.episodes, report.config.base_seed};
}

std::vector<EvalReport> evaluate_conditions(const Environment& env, const MlpPolicy& policy, double epsilon,
                                            const std::optional<Vector>& adversarial_delta, const EvalConfig& base) {
  if (!adversarial_delta && epsilon != 0.0) {
    throw std::invalid_argument(
        "the adversarial row needs a perturbation vector: pass --delta-file or --attack-inline");
  }
  const auto na = static_cast<std::size_t>(env.spec().action_dim);
  Vector adv = epsilon == 0.0 ? Vector(na, 0.0) : *adversarial_delta;

  PerturbationCondition normal = PerturbationCondition::normal();
  normal.epsilon = epsilon;
  const PerturbationCondition conditions[] = {
      normal,
      PerturbationCondition::random(epsilon),
      PerturbationCondition::adversarial(std::move(adv), epsilon),
  };
  std::vector<EvalReport> reports;
  for (const auto& condition : conditions) {
    EvalConfig config = base;
    config.condition = condition;
    reports.push_back(evaluate(env, policy, config));
  }
  return reports;
}

std::vector<ConditionRow> compare_conditions(const Environment& env, const MlpPolicy& policy, double epsilon,
                                             int episodes, std::uint64_t seed,
                                             const std::optional<Vector>& adversarial_delta, int workers) {
  EvalConfig base;
  base.episodes = episodes;
  base.base_seed = seed;
  base.workers = workers;
  std::vector<ConditionRow> rows;
  for (const auto& report : evaluate_conditions(env, policy, epsilon, adversarial_delta, base)) {
    rows.push_back(condition_row(report));
  }
  return rows;
}

std::string condition_csv_header() { return "condition,epsilon,mean,std,M,seed"; }

std::string to_csv_line(const ConditionRow& row) {
  return to_string(row.condition) + "," + format_double(row.epsilon) + "," + format_double(row.mean) + "," +
         format_double(row.std) + "," + std::to_string(row.episodes) + "," + std::to_string(row.seed);
}

std::string format_condition_table(std::span<const ConditionRow> rows) {
  std::ostringstream out;
  char buf[128];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-12s eps=%.2f  %.0f ± %.0f  (M=%d)\n", to_string(row.condition).c_str(),
                  row.epsilon, row.mean, row.std, row.episodes);
    out << buf;
  }
  return out.str();
}

}  // namespace actrob
