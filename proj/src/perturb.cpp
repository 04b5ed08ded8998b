#include "actrob/perturb.hpp"

#include <algorithm>
#include <stdexcept>

namespace actrob {

std::string to_string(Condition condition) {
  switch (condition) {
    case Condition::kNormal:
      return "normal";
    case Condition::kRandom:
      return "random";
    case Condition::kAdversarial:
      return "adversarial";
  }
  return "unknown";
}

Condition parse_condition(const std::string& text) {
  if (text == "normal") return Condition::kNormal;
  if (text == "random") return Condition::kRandom;
  if (text == "adversarial") return Condition::kAdversarial;
  throw std::invalid_argument("unknown condition '" + text + "' (expected normal, random or adversarial)");
}

PerturbationCondition PerturbationCondition::adversarial(Vector delta, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
  if (!inside_box(delta, epsilon)) throw std::invalid_argument("adversarial delta lies outside [-epsilon, epsilon]");
  return {Condition::kAdversarial, epsilon, std::move(delta)};
}

ActionVector apply_perturbation(std::span<const double> action, std::span<const double> delta) {
  check_dim("perturbation", action.size(), delta.size());
  ActionVector out(action.size());
  for (std::size_t j = 0; j < action.size(); ++j) out[j] = action[j] + delta[j] * action[j];
  return out;
}

PerturbationVector sample_perturbation(const PerturbationCondition& condition, std::size_t action_dim, Rng& rng) {
  if (condition.epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
  PerturbationVector p;
  p.epsilon = condition.epsilon;
  p.condition = condition.tag;
  switch (condition.tag) {
    case Condition::kNormal:
      p.delta.assign(action_dim, 0.0);
      break;
    case Condition::kRandom:
      p.delta.resize(action_dim);
      for (double& d : p.delta) d = condition.epsilon == 0.0 ? 0.0 : rng.uniform(-condition.epsilon, condition.epsilon);
      break;
    case Condition::kAdversarial:
      check_dim("adversarial delta", action_dim, condition.adversarial_delta.size());
      p.delta = condition.adversarial_delta;
      break;
  }
  return p;
}

Vector clip_box(std::span<const double> x, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::max(std::min(x[i], epsilon), -epsilon);
  return out;
}

bool inside_box(std::span<const double> x, double epsilon) {
  return std::all_of(x.begin(), x.end(), [epsilon](double v) { return v >= -epsilon && v <= epsilon; });
}

}  // namespace actrob
