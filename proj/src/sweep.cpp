#include "actrob/sweep.hpp"

#include <sstream>

#include "actrob/eval.hpp"

namespace actrob {

std::vector<SweepRow> sweep_epsilon(const Environment& env, const MlpPolicy& policy, const SweepConfig& config) {
  std::vector<SweepRow> rows;
  for (double eps : config.epsilons) {
    DeConfig attack = config.attack;
    attack.epsilon = eps;
    attack.workers = config.workers;
    const AttackResult result = run_attack(env, policy, attack);

    EvalConfig eval;
    eval.episodes = config.eval_episodes;
    eval.condition = PerturbationCondition::adversarial(result.delta_best.delta, eps);
    eval.base_seed = config.eval_seed;
    eval.workers = config.workers;
    const EvalReport report = evaluate(env, policy, eval);

    rows.push_back({eps, report.mean, report.std, config.eval_episodes, config.eval_seed, attack.base_seed,
                    result.r_min, result.delta_best.delta});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << condition_csv_header() << '\n';
  for (const auto& r : rows) {
    out << "adversarial," << format_double(r.epsilon) << ',' << format_double(r.mean) << ',' << format_double(r.std)
        << ',' << r.episodes << ',' << r.eval_seed << '\n';
  }
  return out.str();
}

}  // namespace actrob
