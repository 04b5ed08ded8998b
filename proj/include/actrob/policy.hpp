#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "actrob/core.hpp"

namespace actrob {

enum class PolicyMode { kDeterministic, kGaussian };

std::string to_string(PolicyMode mode);
/// Accepts "deterministic" and "gaussian" (alias "stochastic").
PolicyMode parse_policy_mode(const std::string& text);

/// Fully connected tanh network whose output is tanh scaled to the action
/// box. Parameters are stored flat, layer by layer: the weight matrix
/// (out x in, row-major) followed by the bias vector.
class MlpPolicy {
 public:
  MlpPolicy() = default;
  MlpPolicy(std::vector<int> layer_sizes, Vector action_low, Vector action_high,
            PolicyMode mode = PolicyMode::kDeterministic);

  static std::size_t parameter_count(std::span<const int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_dim() const { return layer_sizes_.front(); }
  int output_dim() const { return layer_sizes_.back(); }
  const Vector& action_low() const { return action_low_; }
  const Vector& action_high() const { return action_high_; }

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  void set_parameters(std::span<const double> params);

  PolicyMode mode() const { return mode_; }
  void set_mode(PolicyMode mode) { mode_ = mode; }
  const Vector& log_std() const { return log_std_; }
  void set_log_std(Vector log_std);

  std::string env_name;
  std::string note;

  /// Deterministic forward pass; always inside [action_low, action_high].
  ActionVector mean_action(std::span<const double> state) const;

  /// Deterministic mode ignores `rng`. Gaussian mode samples
  /// mean + exp(log_std) * N(0, 1) and clips to the bounds; with a null rng
  /// it falls back to the mean.
  ActionVector act(std::span<const double> state, Rng* rng) const;

  /// Forward pass keeping each layer's activations (layer 0 = input,
  /// last = tanh output before scaling). Used by the cloner's backward pass.
  std::vector<Vector> forward_trace(std::span<const double> state) const;

 private:
  std::vector<int> layer_sizes_;
  Vector action_low_;
  Vector action_high_;
  Vector params_;
  Vector log_std_;
  PolicyMode mode_ = PolicyMode::kDeterministic;
};

/// Text serialization (see README, "Policy file"). save -> load -> save is
/// byte-identical.
std::string serialize_policy(const MlpPolicy& policy);
MlpPolicy parse_policy(const std::string& text);
void save_policy(const MlpPolicy& policy, const std::string& path);
MlpPolicy load_policy(const std::string& path);

/// Provenance tag of a policy: hash of its serialized form.
std::string policy_hash(const MlpPolicy& policy);

/// Random small-weight initialization.
MlpPolicy make_random_policy(std::vector<int> layer_sizes, Vector action_low, Vector action_high,
                             std::uint64_t seed, double weight_scale = 0.1);

}  // namespace actrob
