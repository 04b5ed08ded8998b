#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actrob/env.hpp"
#include "actrob/perturb.hpp"
#include "actrob/policy.hpp"

namespace actrob {

struct Transition {
  StateVector state;
  ActionVector action;
  StateVector next_state;
  double reward = 0.0;
  bool terminal = false;
  std::int64_t episode_id = 0;

  bool operator==(const Transition&) const = default;
};

struct DatasetMeta {
  std::string env;
  /// expert | medium | merged | perturbed-random | perturbed-adversarial, or
  /// any free-form label.
  std::string quality;
  /// Provenance of the behavior policy (policy hash or free text).
  std::string behavior_policy;

  bool operator==(const DatasetMeta&) const = default;
};

/// D = {(s_t, a_t, s_{t+1}, r_t)}. Within an episode_id consecutive
/// transitions chain: next_state of one equals state of the next.
struct TransitionDataset {
  DatasetMeta meta;
  std::vector<Transition> transitions;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
  std::size_t state_dim() const { return empty() ? 0 : transitions.front().state.size(); }
  std::size_t action_dim() const { return empty() ? 0 : transitions.front().action.size(); }

  bool operator==(const TransitionDataset&) const = default;
};

/// Index of the first chaining violation, if any.
std::optional<std::size_t> find_chain_break(const TransitionDataset& dataset);

/// Rolls out unperturbed episodes until n_transitions are collected.
TransitionDataset generate_dataset(const Environment& env, const MlpPolicy& policy, std::size_t n_transitions,
                                   std::uint64_t seed, const std::string& quality = "expert");

/// Concatenation; episode ids of `second` are shifted past those of `first`.
TransitionDataset merge_datasets(const TransitionDataset& first, const TransitionDataset& second);

enum class PerturbGranularity { kPerEpisode, kPerTransition, kPerDataset };

std::string to_string(PerturbGranularity granularity);
PerturbGranularity parse_granularity(const std::string& text);

struct PerturbSpec {
  /// kRandom or kAdversarial.
  Condition condition = Condition::kRandom;
  double epsilon = 0.3;
  /// The loaded adversarial vector; required for kAdversarial.
  std::optional<Vector> delta;
  /// Random only; adversarial always uses one vector for the whole dataset.
  PerturbGranularity granularity = PerturbGranularity::kPerEpisode;
  std::uint64_t seed = 0;
};

/// The random delta that perturb_dataset applies to an episode under a
/// per-episode spec.
Vector episode_delta(const PerturbSpec& spec, std::int64_t episode_id, std::size_t action_dim);

/// Replaces every action a with a + delta (.) a. States, next states,
/// rewards, terminals and episode ids are copied unchanged.
TransitionDataset perturb_dataset(const TransitionDataset& dataset, const PerturbSpec& spec);

/// Hash over every field except actions.
std::uint64_t non_action_checksum(const TransitionDataset& dataset);

struct ActionHistogram {
  double low = 0.0;
  double high = 0.0;
  std::vector<std::size_t> counts;
};

/// Per-dimension counts over `bins` uniform bins spanning the observed range
/// (or `range` when given, so that variants share bin edges).
std::vector<ActionHistogram> action_histograms(const TransitionDataset& dataset, int bins,
                                               std::optional<std::pair<double, double>> range = std::nullopt);

std::string histogram_csv_header();
std::string histogram_csv(std::span<const ActionHistogram> histograms, const std::string& label);

/// JSON-Lines body plus `<path>.meta.json` sidecar.
void save_dataset(const TransitionDataset& dataset, const std::string& path);
TransitionDataset load_dataset(const std::string& path);
std::string dataset_to_jsonl(const TransitionDataset& dataset);
std::string meta_to_json(const TransitionDataset& dataset);
TransitionDataset dataset_from_jsonl(const std::string& jsonl, const std::string& meta_json);

}  // namespace actrob
