#pragma once

#include <optional>
#include <span>
#include <string>

#include "actrob/core.hpp"

namespace actrob {

enum class Condition { kNormal, kRandom, kAdversarial };

std::string to_string(Condition condition);
/// Accepts "normal", "random", "adversarial".
Condition parse_condition(const std::string& text);

/// A perturbation vector together with the condition that produced it.
/// |delta|_inf <= epsilon for random and adversarial; delta == 0 for normal.
struct PerturbationVector {
  Vector delta;
  double epsilon = 0.0;
  Condition condition = Condition::kNormal;
};

/// Which perturbation to draw at the start of an episode. An adversarial
/// condition carries the vector found by the attack.
struct PerturbationCondition {
  Condition tag = Condition::kNormal;
  double epsilon = 0.0;
  Vector adversarial_delta;

  static PerturbationCondition normal() { return {}; }
  static PerturbationCondition random(double epsilon) { return {Condition::kRandom, epsilon, {}}; }
  static PerturbationCondition adversarial(Vector delta, double epsilon);
};

/// a' = a + delta (.) a. The result is not clipped to the action bounds.
ActionVector apply_perturbation(std::span<const double> action, std::span<const double> delta);

/// Normal -> zeros, Random -> i.i.d. U[-eps, eps], Adversarial -> the carried vector.
PerturbationVector sample_perturbation(const PerturbationCondition& condition, std::size_t action_dim, Rng& rng);

/// Elementwise max(min(x, eps), -eps).
Vector clip_box(std::span<const double> x, double epsilon);

bool inside_box(std::span<const double> x, double epsilon);

}  // namespace actrob
