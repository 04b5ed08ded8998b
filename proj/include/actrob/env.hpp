#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "actrob/core.hpp"

namespace actrob {

/// The MDP tuple in executable form. The discount is carried as metadata;
/// episodic rewards are undiscounted sums.
struct EnvironmentSpec {
  std::string name;
  int state_dim = 1;
  int action_dim = 1;
  Vector action_low;
  Vector action_high;
  int max_steps = 1000;
  double discount = 0.99;
  double ctrl_cost_coeff = 0.0;
  double contact_cost_coeff = 0.0;
  double alive_bonus = 1.0;

  /// Throws std::invalid_argument when a field violates its invariant.
  void validate() const;
};

struct StepResult {
  StateVector next_state;
  double reward = 0.0;
  bool terminated = false;  // failure predicate held on next_state
  bool truncated = false;   // step limit; set by the rollout driver
};

/// An environment is an immutable specification plus pure functions. Any
/// number of rollouts may share one instance.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvironmentSpec& spec() const = 0;
  /// Draws s0 ~ P0 from a stream seeded by `seed`.
  virtual StateVector reset(std::uint64_t seed) const = 0;
  /// Reward r(state, action) and the successor of `state` under `action`.
  virtual StepResult step(std::span<const double> state, std::span<const double> action) const = 0;
};

/// Closed-form parameters of the link-body dynamics shared by the built-ins.
///
/// State layout: [v, (angle_k, rate_k) for each body axis, (h, h_rate) when
/// the body has a height coordinate, q_0 .. q_{N_a-1}] where q are joint
/// positions that track the commanded torques with a first-order lag.
struct ToyDynamics {
  double dt = 0.05;
  double joint_rate = 10.0;
  Vector thrust_gain;               // N_a
  std::vector<Vector> torque_gain;  // one row of N_a per body axis
  Vector lift_gain;                 // N_a, empty when there is no height coordinate
  double mass = 1.0;
  double speed_damping = 1.0;
  double torque_scale = 4.0;
  double axis_stiffness = 4.0;
  double axis_damping = 2.0;
  double rest_height = 1.25;
  double height_stiffness = 20.0;
  double height_damping = 6.0;
  double height_tilt_coupling = 1.5;
  double contact_gain = 4.0;
  /// Half-width of the uniform P0 noise around the canonical pose.
  double reset_noise = 0.1;
  /// Failure predicates. A value <= -inf disables the predicate.
  double failure_height = -1e300;
  double inversion_threshold = -1e300;
};

class ToyEnvironment final : public Environment {
 public:
  ToyEnvironment(EnvironmentSpec spec, ToyDynamics dynamics);

  const EnvironmentSpec& spec() const override { return spec_; }
  const ToyDynamics& dynamics() const { return dyn_; }

  StateVector reset(std::uint64_t seed) const override;
  StepResult step(std::span<const double> state, std::span<const double> action) const override;

  /// Forward walking speed read from a state.
  double forward_velocity(std::span<const double> state) const;
  /// Clipped ground-reaction surrogates; empty for bodies without a contact term.
  Vector contact_forces(std::span<const double> state, std::span<const double> action) const;
  /// Product of cosines of the body axis angles; 1 when upright.
  double uprightness(std::span<const double> state) const;
  bool failed(std::span<const double> state) const;

  /// Canonical pose; P0 is uniform on [pose - reset_noise, pose + reset_noise].
  StateVector canonical_pose() const;

  int axis_count() const { return static_cast<int>(dyn_.torque_gain.size()); }
  bool has_height() const { return !dyn_.lift_gain.empty(); }
  int height_index() const { return 1 + 2 * axis_count(); }
  int joint_offset() const { return 1 + 2 * axis_count() + (has_height() ? 2 : 0); }

 private:
  EnvironmentSpec spec_;
  ToyDynamics dyn_;
};

/// Names of the built-in environments.
std::vector<std::string> builtin_environment_names();

/// Built-in by name. `overrides` maps parameter names (see README) to values.
/// Throws std::invalid_argument for unknown names or parameters.
std::shared_ptr<const ToyEnvironment> make_environment(
    const std::string& name, const std::map<std::string, double>& overrides = {});

/// Default perturbation strength for a built-in environment.
double default_epsilon(const std::string& env_name);
/// Default DE population size for a built-in environment.
int default_population_size(const std::string& env_name);

}  // namespace actrob
