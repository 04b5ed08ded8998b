#include "actrob/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace actrob {

void EnvironmentSpec::validate() const {
  if (state_dim < 1) throw std::invalid_argument("state_dim must be >= 1");
  if (action_dim < 1) throw std::invalid_argument("action_dim must be >= 1");
  check_dim("action_low", static_cast<std::size_t>(action_dim), action_low.size());
  check_dim("action_high", static_cast<std::size_t>(action_dim), action_high.size());
  for (int j = 0; j < action_dim; ++j) {
    if (!(action_low[j] < action_high[j])) {
      throw std::invalid_argument("action_low must be < action_high in every dimension");
    }
  }
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(discount >= 0.0 && discount <= 1.0)) throw std::invalid_argument("discount must lie in [0, 1]");
  if (ctrl_cost_coeff < 0.0 || contact_cost_coeff < 0.0) {
    throw std::invalid_argument("cost coefficients must be nonnegative");
  }
}

ToyEnvironment::ToyEnvironment(EnvironmentSpec spec, ToyDynamics dynamics)
    : spec_(std::move(spec)), dyn_(std::move(dynamics)) {
  spec_.validate();
  const auto n = static_cast<std::size_t>(spec_.action_dim);
  check_dim("thrust_gain", n, dyn_.thrust_gain.size());
  for (const auto& row : dyn_.torque_gain) check_dim("torque_gain row", n, row.size());
  if (has_height()) check_dim("lift_gain", n, dyn_.lift_gain.size());
  check_dim("state_dim", static_cast<std::size_t>(joint_offset()) + n,
            static_cast<std::size_t>(spec_.state_dim));
  if (dyn_.reset_noise < 0.0) throw std::invalid_argument("reset_noise must be nonnegative");
}

StateVector ToyEnvironment::canonical_pose() const {
  StateVector pose(static_cast<std::size_t>(spec_.state_dim), 0.0);
  if (has_height()) pose[static_cast<std::size_t>(height_index())] = dyn_.rest_height;
  return pose;
}

StateVector ToyEnvironment::reset(std::uint64_t seed) const {
  Rng rng(seed);
  StateVector s = canonical_pose();
  for (double& x : s) x += rng.uniform(-dyn_.reset_noise, dyn_.reset_noise);
  return s;
}

double ToyEnvironment::forward_velocity(std::span<const double> state) const { return state[0]; }

double ToyEnvironment::uprightness(std::span<const double> state) const {
  double u = 1.0;
  for (int k = 0; k < axis_count(); ++k) u *= std::cos(state[static_cast<std::size_t>(1 + 2 * k)]);
  return u;
}

bool ToyEnvironment::failed(std::span<const double> state) const {
  if (has_height() && state[static_cast<std::size_t>(height_index())] < dyn_.failure_height) return true;
  return uprightness(state) < dyn_.inversion_threshold;
}

Vector ToyEnvironment::contact_forces(std::span<const double> state,
                                      std::span<const double> action) const {
  if (spec_.contact_cost_coeff == 0.0) return {};
  const double sink = has_height() ? dyn_.rest_height - state[static_cast<std::size_t>(height_index())] : 0.0;
  const std::size_t legs = action.size() / 2;
  Vector f(legs);
  for (std::size_t k = 0; k < legs; ++k) {
    f[k] = std::clamp(dyn_.contact_gain * sink + action[2 * k + 1], -1.0, 1.0);
  }
  return f;
}

StepResult ToyEnvironment::step(std::span<const double> state, std::span<const double> action) const {
  check_dim(spec_.name + " action", static_cast<std::size_t>(spec_.action_dim), action.size());
  check_dim(spec_.name + " state", static_cast<std::size_t>(spec_.state_dim), state.size());

  StepResult out;
  const double ctrl = spec_.ctrl_cost_coeff * squared_norm(action);
  const double contact =
      spec_.contact_cost_coeff == 0.0 ? 0.0 : spec_.contact_cost_coeff * squared_norm(contact_forces(state, action));
  out.reward = forward_velocity(state) - ctrl - contact + spec_.alive_bonus;

  StateVector s(state.begin(), state.end());
  const double dt = dyn_.dt;
  const auto q0 = static_cast<std::size_t>(joint_offset());
  const std::size_t na = action.size();

  const double blend = std::min(1.0, dt * dyn_.joint_rate);
  for (std::size_t j = 0; j < na; ++j) s[q0 + j] += blend * (action[j] - s[q0 + j]);

  double thrust = 0.0;
  for (std::size_t j = 0; j < na; ++j) thrust += dyn_.thrust_gain[j] * s[q0 + j];

  for (int k = 0; k < axis_count(); ++k) {
    const auto ia = static_cast<std::size_t>(1 + 2 * k);
    double torque = 0.0;
    for (std::size_t j = 0; j < na; ++j) torque += dyn_.torque_gain[static_cast<std::size_t>(k)][j] * s[q0 + j];
    double& angle = s[ia];
    double& rate = s[ia + 1];
    rate += dt * (dyn_.torque_scale * torque - dyn_.axis_stiffness * std::sin(angle) - dyn_.axis_damping * rate);
    angle += dt * rate;
  }

  const double tilt = uprightness(s);
  s[0] += dt * (thrust * tilt / dyn_.mass - dyn_.speed_damping * s[0]);

  if (has_height()) {
    const auto ih = static_cast<std::size_t>(height_index());
    double lift = 0.0;
    for (std::size_t j = 0; j < na; ++j) lift += dyn_.lift_gain[j] * s[q0 + j];
    const double target = dyn_.rest_height + lift - dyn_.height_tilt_coupling * (1.0 - tilt);
    s[ih + 1] += dt * (dyn_.height_stiffness * (target - s[ih]) - dyn_.height_damping * s[ih + 1]);
    s[ih] += dt * s[ih + 1];
  }

  for (double x : s) {
    if (!std::isfinite(x)) throw std::runtime_error(spec_.name + ": state became non-finite");
  }
  out.terminated = failed(s);
  out.next_state = std::move(s);
  return out;
}

namespace {

EnvironmentSpec base_spec(std::string name, int state_dim, int action_dim) {
  EnvironmentSpec spec;
  spec.name = std::move(name);
  spec.state_dim = state_dim;
  spec.action_dim = action_dim;
  spec.action_low.assign(static_cast<std::size_t>(action_dim), -1.0);
  spec.action_high.assign(static_cast<std::size_t>(action_dim), 1.0);
  spec.max_steps = 1000;
  spec.discount = 0.99;
  spec.alive_bonus = 1.0;
  return spec;
}

// One body axis (pitch) and a height coordinate: 1 + 2 + 2 + 3 = 8.
ToyEnvironment hopper_lite() {
  EnvironmentSpec spec = base_spec("hopper-lite", 8, 3);
  spec.ctrl_cost_coeff = 0.001;
  ToyDynamics d;
  d.thrust_gain = {0.6, 0.9, 0.5};
  d.torque_gain = {{0.5, -0.7, 0.4}};
  d.lift_gain = {0.15, -0.1, 0.1};
  d.speed_damping = 0.8;
  d.torque_scale = 3.0;
  d.axis_stiffness = 3.0;
  d.axis_damping = 2.0;
  d.rest_height = 1.25;
  d.height_tilt_coupling = 1.5;
  d.reset_noise = 0.005;
  d.failure_height = 0.8;
  return ToyEnvironment(std::move(spec), std::move(d));
}

// One body axis (pitch), no height, no failure state: 1 + 2 + 6 = 9.
ToyEnvironment runner_lite() {
  EnvironmentSpec spec = base_spec("runner-lite", 9, 6);
  spec.ctrl_cost_coeff = 0.1;
  ToyDynamics d;
  d.thrust_gain = {1.0, 0.8, 0.6, 1.0, 0.8, 0.6};
  d.torque_gain = {{0.8, 0.5, 0.3, -0.8, -0.5, -0.3}};
  d.speed_damping = 1.0;
  d.torque_scale = 4.0;
  d.axis_stiffness = 4.0;
  d.axis_damping = 2.0;
  d.reset_noise = 0.1;
  return ToyEnvironment(std::move(spec), std::move(d));
}

// Roll and pitch axes plus height: 1 + 4 + 2 + 8 = 15. Joints come in
// (hip, knee) pairs for legs front-left, front-right, back-left, back-right.
ToyEnvironment quad_lite() {
  EnvironmentSpec spec = base_spec("quad-lite", 15, 8);
  spec.ctrl_cost_coeff = 0.5;
  spec.contact_cost_coeff = 0.5e-3;
  ToyDynamics d;
  d.thrust_gain = {0.6, 0.3, 0.6, 0.3, 0.6, 0.3, 0.6, 0.3};
  d.torque_gain = {
      {0.2, 0.6, -0.2, -0.6, 0.2, 0.6, -0.2, -0.6},   // roll: left vs right
      {0.3, 0.5, 0.3, 0.5, -0.3, -0.5, -0.3, -0.5},   // pitch: front vs back
  };
  d.lift_gain = {0.0, 0.05, 0.0, 0.05, 0.0, 0.05, 0.0, 0.05};
  d.speed_damping = 0.5;
  d.torque_scale = 3.0;
  d.axis_stiffness = 3.0;
  d.axis_damping = 2.0;
  d.rest_height = 0.75;
  d.height_tilt_coupling = 0.5;
  d.reset_noise = 0.1;
  d.inversion_threshold = 0.0;
  return ToyEnvironment(std::move(spec), std::move(d));
}

void apply_override(EnvironmentSpec& spec, ToyDynamics& d, const std::string& key, double value) {
  if (key == "max_steps") {
    spec.max_steps = static_cast<int>(value);
  } else if (key == "discount") {
    spec.discount = value;
  } else if (key == "ctrl_cost_coeff") {
    spec.ctrl_cost_coeff = value;
  } else if (key == "contact_cost_coeff") {
    spec.contact_cost_coeff = value;
  } else if (key == "alive_bonus") {
    spec.alive_bonus = value;
  } else if (key == "dt") {
    d.dt = value;
  } else if (key == "joint_rate") {
    d.joint_rate = value;
  } else if (key == "mass") {
    d.mass = value;
  } else if (key == "speed_damping") {
    d.speed_damping = value;
  } else if (key == "torque_scale") {
    d.torque_scale = value;
  } else if (key == "axis_stiffness") {
    d.axis_stiffness = value;
  } else if (key == "axis_damping") {
    d.axis_damping = value;
  } else if (key == "rest_height") {
    d.rest_height = value;
  } else if (key == "height_stiffness") {
    d.height_stiffness = value;
  } else if (key == "height_damping") {
    d.height_damping = value;
  } else if (key == "height_tilt_coupling") {
    d.height_tilt_coupling = value;
  } else if (key == "contact_gain") {
    d.contact_gain = value;
  } else if (key == "reset_noise") {
    d.reset_noise = value;
  } else if (key == "failure_height") {
    d.failure_height = value;
  } else if (key == "inversion_threshold") {
    d.inversion_threshold = value;
  } else {
    throw std::invalid_argument("unknown environment parameter '" + key + "'");
  }
}

}  // namespace

std::vector<std::string> builtin_environment_names() { return {"hopper-lite", "runner-lite", "quad-lite"}; }

std::shared_ptr<const ToyEnvironment> make_environment(const std::string& name,
                                                       const std::map<std::string, double>& overrides) {
  ToyEnvironment base = [&] {
    if (name == "hopper-lite") return hopper_lite();
    if (name == "runner-lite") return runner_lite();
    if (name == "quad-lite") return quad_lite();
    throw std::invalid_argument("unknown environment '" + name +
                                "' (expected hopper-lite, runner-lite or quad-lite)");
  }();
  if (overrides.empty()) return std::make_shared<const ToyEnvironment>(std::move(base));
  EnvironmentSpec spec = base.spec();
  ToyDynamics dyn = base.dynamics();
  for (const auto& [key, value] : overrides) apply_override(spec, dyn, key, value);
  return std::make_shared<const ToyEnvironment>(std::move(spec), std::move(dyn));
}

double default_epsilon(const std::string& env_name) {
  if (env_name == "hopper-lite" || env_name == "runner-lite") return 0.3;
  if (env_name == "quad-lite") return 0.5;
  throw std::invalid_argument("no default epsilon for environment '" + env_name + "'");
}

int default_population_size(const std::string& env_name) {
  if (env_name == "hopper-lite") return 45;
  if (env_name == "runner-lite") return 90;
  if (env_name == "quad-lite") return 120;
  throw std::invalid_argument("no default population size for environment '" + env_name + "'");
}

}  // namespace actrob
