#include "actrob/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "actrob/eval.hpp"
#include "actrob/io.hpp"

namespace actrob {

namespace {

constexpr std::uint64_t kDataStream = 0xda7a;
constexpr std::uint64_t kPerturbStream = 0x9e27;

}  // namespace

std::optional<std::size_t> find_chain_break(const TransitionDataset& dataset) {
  const auto& ts = dataset.transitions;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ts[i].episode_id == ts[i - 1].episode_id && ts[i].state != ts[i - 1].next_state) return i;
  }
  return std::nullopt;
}

TransitionDataset generate_dataset(const Environment& env, const MlpPolicy& policy, std::size_t n_transitions,
                                   std::uint64_t seed, const std::string& quality) {
  if (n_transitions < 1) throw std::invalid_argument("n_transitions must be >= 1");
  const EnvironmentSpec& spec = env.spec();
  check_dim("policy input for " + spec.name, static_cast<std::size_t>(spec.state_dim),
            static_cast<std::size_t>(policy.input_dim()));
  check_dim("policy output for " + spec.name, static_cast<std::size_t>(spec.action_dim),
            static_cast<std::size_t>(policy.output_dim()));

  TransitionDataset data;
  data.meta = {spec.name, quality, policy_hash(policy)};
  data.transitions.reserve(n_transitions);
  const Vector zero(static_cast<std::size_t>(spec.action_dim), 0.0);

  for (std::int64_t episode = 0; data.transitions.size() < n_transitions; ++episode) {
    RolloutOptions options;
    options.stochastic = policy.mode() == PolicyMode::kGaussian;
    // The observer sees (s_t, a_t, r_t); the successor arrives as the next
    // step's state, or from one extra step at the end of the episode.
    std::vector<Transition> episode_steps;
    options.observer = [&](const StepTrace& trace) {
      if (data.transitions.size() + episode_steps.size() >= n_transitions) return;
      Transition tr;
      tr.state.assign(trace.state.begin(), trace.state.end());
      tr.action.assign(trace.action.begin(), trace.action.end());
      tr.reward = trace.reward;
      tr.episode_id = episode;
      episode_steps.push_back(std::move(tr));
    };
    run_episode(env, policy, zero, derive_seed(seed, {kDataStream, static_cast<std::uint64_t>(episode)}), options);
    for (std::size_t i = 0; i < episode_steps.size(); ++i) {
      Transition& tr = episode_steps[i];
      StepResult step = env.step(tr.state, tr.action);
      tr.next_state = std::move(step.next_state);
      tr.terminal = step.terminated;
      data.transitions.push_back(std::move(tr));
    }
  }
  return data;
}

TransitionDataset merge_datasets(const TransitionDataset& first, const TransitionDataset& second) {
  if (second.empty()) return first;
  if (first.empty()) return second;
  if (first.meta.env != second.meta.env) {
    throw std::invalid_argument("cannot merge datasets from different environments ('" + first.meta.env +
                                "' and '" + second.meta.env + "')");
  }
  check_dim("merged state", first.state_dim(), second.state_dim());
  check_dim("merged action", first.action_dim(), second.action_dim());

  TransitionDataset out;
  out.meta.env = first.meta.env;
  out.meta.quality = "merged";
  out.meta.behavior_policy = first.meta.behavior_policy + "+" + second.meta.behavior_policy;
  out.transitions = first.transitions;
  std::int64_t shift = 0;
  for (const auto& t : first.transitions) shift = std::max(shift, t.episode_id + 1);
  out.transitions.reserve(first.size() + second.size());
  for (Transition t : second.transitions) {
    t.episode_id += shift;
    out.transitions.push_back(std::move(t));
  }
  return out;
}

std::string to_string(PerturbGranularity granularity) {
  switch (granularity) {
    case PerturbGranularity::kPerEpisode:
      return "per-episode";
    case PerturbGranularity::kPerTransition:
      return "per-transition";
    case PerturbGranularity::kPerDataset:
      return "per-dataset";
  }
  return "unknown";
}

PerturbGranularity parse_granularity(const std::string& text) {
  if (text == "per-episode") return PerturbGranularity::kPerEpisode;
  if (text == "per-transition") return PerturbGranularity::kPerTransition;
  if (text == "per-dataset") return PerturbGranularity::kPerDataset;
  throw std::invalid_argument("unknown granularity '" + text +
                              "' (expected per-episode, per-transition or per-dataset)");
}

namespace {

Vector random_delta(const PerturbSpec& spec, std::uint64_t key, std::size_t action_dim) {
  Rng rng(derive_seed(spec.seed, {kPerturbStream, key}));
  return sample_perturbation(PerturbationCondition::random(spec.epsilon), action_dim, rng).delta;
}

}  // namespace

Vector episode_delta(const PerturbSpec& spec, std::int64_t episode_id, std::size_t action_dim) {
  // Episode ids may be negative; fold them into the key space.
  return random_delta(spec, mix64(static_cast<std::uint64_t>(episode_id)), action_dim);
}

TransitionDataset perturb_dataset(const TransitionDataset& dataset, const PerturbSpec& spec) {
  if (spec.epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
  const std::size_t na = dataset.action_dim();
  TransitionDataset out = dataset;

  if (spec.condition == Condition::kAdversarial) {
    if (!spec.delta) throw std::invalid_argument("adversarial dataset perturbation needs a delta-file");
    if (!dataset.empty()) check_dim("adversarial delta", na, spec.delta->size());
    for (auto& t : out.transitions) t.action = apply_perturbation(t.action, *spec.delta);
    out.meta.quality = "perturbed-adversarial";
    return out;
  }
  if (spec.condition != Condition::kRandom) {
    throw std::invalid_argument("dataset perturbation condition must be random or adversarial");
  }

  auto draw = [&](std::uint64_t key) { return random_delta(spec, key, na); };
  const Vector whole = draw(0);
  std::map<std::int64_t, Vector> per_episode;
  for (std::size_t i = 0; i < out.transitions.size(); ++i) {
    Transition& t = out.transitions[i];
    switch (spec.granularity) {
      case PerturbGranularity::kPerDataset:
        t.action = apply_perturbation(t.action, whole);
        break;
      case PerturbGranularity::kPerTransition:
        t.action = apply_perturbation(t.action, draw(1 + i));
        break;
      case PerturbGranularity::kPerEpisode: {
        auto it = per_episode.find(t.episode_id);
        if (it == per_episode.end()) it = per_episode.emplace(t.episode_id, episode_delta(spec, t.episode_id, na)).first;
        t.action = apply_perturbation(t.action, it->second);
        break;
      }
    }
  }
  out.meta.quality = "perturbed-random";
  return out;
}

std::uint64_t non_action_checksum(const TransitionDataset& dataset) {
  std::uint64_t h = fnv1a(dataset.meta.env);
  for (const auto& t : dataset.transitions) {
    h = fnv1a(t.state, h);
    h = fnv1a(t.next_state, h);
    const double scalars[] = {t.reward, t.terminal ? 1.0 : 0.0, static_cast<double>(t.episode_id)};
    h = fnv1a(scalars, h);
  }
  return h;
}

std::vector<ActionHistogram> action_histograms(const TransitionDataset& dataset, int bins,
                                               std::optional<std::pair<double, double>> range) {
  if (bins < 2) throw std::invalid_argument("histograms need at least 2 bins");
  if (dataset.empty()) throw std::invalid_argument("cannot build histograms of an empty dataset");
  const std::size_t na = dataset.action_dim();
  std::vector<ActionHistogram> out(na);
  for (std::size_t j = 0; j < na; ++j) {
    ActionHistogram& h = out[j];
    if (range) {
      h.low = range->first;
      h.high = range->second;
    } else {
      h.low = std::numeric_limits<double>::infinity();
      h.high = -std::numeric_limits<double>::infinity();
      for (const auto& t : dataset.transitions) {
        h.low = std::min(h.low, t.action[j]);
        h.high = std::max(h.high, t.action[j]);
      }
    }
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    const double width = h.high - h.low;
    for (const auto& t : dataset.transitions) {
      const double x = t.action[j];
      if (x < h.low || x > h.high) continue;
      std::size_t b = 0;
      if (width > 0.0) {
        b = static_cast<std::size_t>(std::floor((x - h.low) / width * bins));
        b = std::min(b, static_cast<std::size_t>(bins - 1));
      }
      ++h.counts[b];
    }
  }
  return out;
}

std::string histogram_csv_header() { return "dataset,dim,bin,bin_low,bin_high,count"; }

std::string histogram_csv(std::span<const ActionHistogram> histograms, const std::string& label) {
  std::ostringstream out;
  for (std::size_t j = 0; j < histograms.size(); ++j) {
    const auto& h = histograms[j];
    const double width = (h.high - h.low) / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      out << label << ',' << j << ',' << b << ',' << format_double(h.low + width * static_cast<double>(b)) << ','
          << format_double(h.low + width * static_cast<double>(b + 1)) << ',' << h.counts[b] << '\n';
    }
  }
  return out.str();
}

std::string dataset_to_jsonl(const TransitionDataset& dataset) {
  std::string out;
  for (const auto& t : dataset.transitions) {
    nlohmann::ordered_json j;
    j["episode"] = t.episode_id;
    j["s"] = t.state;
    j["a"] = t.action;
    j["s_next"] = t.next_state;
    j["r"] = t.reward;
    j["terminal"] = t.terminal;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string meta_to_json(const TransitionDataset& dataset) {
  nlohmann::ordered_json j;
  j["format"] = "actrob-transitions";
  j["version"] = 1;
  j["env"] = dataset.meta.env;
  j["quality"] = dataset.meta.quality;
  j["behavior_policy"] = dataset.meta.behavior_policy;
  j["count"] = dataset.size();
  j["state_dim"] = dataset.state_dim();
  j["action_dim"] = dataset.action_dim();
  return j.dump(2) + "\n";
}

TransitionDataset dataset_from_jsonl(const std::string& jsonl, const std::string& meta_json) {
  TransitionDataset data;
  const auto meta = nlohmann::json::parse(meta_json);
  data.meta.env = meta.at("env").get<std::string>();
  data.meta.quality = meta.at("quality").get<std::string>();
  data.meta.behavior_policy = meta.value("behavior_policy", std::string());
  std::istringstream in(jsonl);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Transition t;
      t.episode_id = j.at("episode").get<std::int64_t>();
      t.state = j.at("s").get<Vector>();
      t.action = j.at("a").get<Vector>();
      t.next_state = j.at("s_next").get<Vector>();
      t.reward = j.at("r").get<double>();
      t.terminal = j.at("terminal").get<bool>();
      data.transitions.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  const auto count = meta.value("count", data.size());
  if (count != data.size()) {
    throw std::runtime_error("dataset meta declares " + std::to_string(count) + " transitions, body has " +
                             std::to_string(data.size()));
  }
  for (const auto& t : data.transitions) {
    check_dim("dataset state", data.state_dim(), t.state.size());
    check_dim("dataset next state", data.state_dim(), t.next_state.size());
    check_dim("dataset action", data.action_dim(), t.action.size());
  }
  return data;
}

void save_dataset(const TransitionDataset& dataset, const std::string& path) {
  write_file_atomic(path, dataset_to_jsonl(dataset));
  write_file_atomic(path + ".meta.json", meta_to_json(dataset));
}

TransitionDataset load_dataset(const std::string& path) {
  return dataset_from_jsonl(read_file(path), read_file(path + ".meta.json"));
}

}  // namespace actrob
