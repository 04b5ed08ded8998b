#include "actrob/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "actrob/io.hpp"

namespace actrob {

namespace {

constexpr const char* kPolicyMagic = "actrob-policy";
constexpr int kPolicyVersion = 1;

void dense_layer(std::span<const double> params, std::size_t& offset, int in, int out,
                 std::span<const double> x, Vector& y) {
  y.assign(static_cast<std::size_t>(out), 0.0);
  const double* w = params.data() + offset;
  const double* b = w + static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
  for (int o = 0; o < out; ++o) {
    double acc = b[o];
    const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
    for (int i = 0; i < in; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(o)] = std::tanh(acc);
  }
  offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(out) + static_cast<std::size_t>(out);
}

}  // namespace

std::string to_string(PolicyMode mode) {
  return mode == PolicyMode::kDeterministic ? "deterministic" : "gaussian";
}

PolicyMode parse_policy_mode(const std::string& text) {
  if (text == "deterministic") return PolicyMode::kDeterministic;
  if (text == "gaussian" || text == "stochastic") return PolicyMode::kGaussian;
  throw std::invalid_argument("unknown policy mode '" + text + "' (expected deterministic or gaussian)");
}

std::size_t MlpPolicy::parameter_count(std::span<const int> layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l]) * static_cast<std::size_t>(layer_sizes[l + 1]) +
         static_cast<std::size_t>(layer_sizes[l + 1]);
  }
  return n;
}

MlpPolicy::MlpPolicy(std::vector<int> layer_sizes, Vector action_low, Vector action_high, PolicyMode mode)
    : layer_sizes_(std::move(layer_sizes)),
      action_low_(std::move(action_low)),
      action_high_(std::move(action_high)),
      mode_(mode) {
  if (layer_sizes_.size() < 2) throw std::invalid_argument("a policy needs at least input and output layers");
  for (int n : layer_sizes_) {
    if (n < 1) throw std::invalid_argument("layer sizes must be positive");
  }
  const auto out = static_cast<std::size_t>(output_dim());
  check_dim("action_low", out, action_low_.size());
  check_dim("action_high", out, action_high_.size());
  for (std::size_t j = 0; j < out; ++j) {
    if (!(action_low_[j] < action_high_[j])) throw std::invalid_argument("action_low must be < action_high");
  }
  params_.assign(parameter_count(layer_sizes_), 0.0);
  log_std_.assign(out, -1.0);
}

void MlpPolicy::set_parameters(std::span<const double> params) {
  check_dim("policy parameters", params_.size(), params.size());
  std::copy(params.begin(), params.end(), params_.begin());
}

void MlpPolicy::set_log_std(Vector log_std) {
  check_dim("log_std", static_cast<std::size_t>(output_dim()), log_std.size());
  for (double v : log_std) {
    if (!std::isfinite(v)) throw std::invalid_argument("log_std must be finite");
  }
  log_std_ = std::move(log_std);
}

std::vector<Vector> MlpPolicy::forward_trace(std::span<const double> state) const {
  check_dim("policy input", static_cast<std::size_t>(input_dim()), state.size());
  std::vector<Vector> acts;
  acts.reserve(layer_sizes_.size());
  acts.emplace_back(state.begin(), state.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    Vector y;
    dense_layer(params_, offset, layer_sizes_[l], layer_sizes_[l + 1], acts.back(), y);
    acts.push_back(std::move(y));
  }
  return acts;
}

ActionVector MlpPolicy::mean_action(std::span<const double> state) const {
  check_dim("policy input", static_cast<std::size_t>(input_dim()), state.size());
  Vector x(state.begin(), state.end());
  Vector y;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    dense_layer(params_, offset, layer_sizes_[l], layer_sizes_[l + 1], x, y);
    std::swap(x, y);
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double half = 0.5 * (action_high_[j] - action_low_[j]);
    const double mid = 0.5 * (action_high_[j] + action_low_[j]);
    x[j] = std::clamp(mid + half * x[j], action_low_[j], action_high_[j]);
  }
  return x;
}

ActionVector MlpPolicy::act(std::span<const double> state, Rng* rng) const {
  ActionVector a = mean_action(state);
  if (mode_ == PolicyMode::kGaussian && rng != nullptr) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] = std::clamp(a[j] + std::exp(log_std_[j]) * rng->normal(), action_low_[j], action_high_[j]);
    }
  }
  return a;
}

namespace {

std::string join(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

Vector parse_numbers(const std::string& text) {
  Vector out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok));
  return out;
}

}  // namespace

std::string serialize_policy(const MlpPolicy& policy) {
  std::ostringstream out;
  out << kPolicyMagic << ' ' << kPolicyVersion << '\n';
  out << "env " << policy.env_name << '\n';
  out << "mode " << to_string(policy.mode()) << '\n';
  out << "layers";
  for (int n : policy.layer_sizes()) out << ' ' << n;
  out << '\n';
  out << "action_low " << join(policy.action_low()) << '\n';
  out << "action_high " << join(policy.action_high()) << '\n';
  out << "log_std " << join(policy.log_std()) << '\n';
  std::string note = policy.note;
  std::replace(note.begin(), note.end(), '\n', ' ');
  out << "note " << note << '\n';
  out << "params " << policy.parameters().size() << '\n';
  for (double p : policy.parameters()) out << format_double(p) << '\n';
  return out.str();
}

MlpPolicy parse_policy(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&](const char* key) -> std::string {
    if (!std::getline(in, line)) throw std::runtime_error(std::string("policy file truncated before '") + key + "'");
    const std::string prefix = std::string(key);
    if (line.rfind(prefix, 0) != 0) {
      throw std::runtime_error("policy file: expected '" + prefix + "', found '" + line + "'");
    }
    return line.size() > prefix.size() ? line.substr(prefix.size() + 1) : std::string();
  };

  const std::string version = next_line(kPolicyMagic);
  if (version != std::to_string(kPolicyVersion)) {
    throw std::runtime_error("unsupported policy file version '" + version + "'");
  }
  const std::string env = next_line("env");
  const PolicyMode mode = parse_policy_mode(next_line("mode"));
  std::vector<int> layers;
  for (double v : parse_numbers(next_line("layers"))) layers.push_back(static_cast<int>(v));
  Vector low = parse_numbers(next_line("action_low"));
  Vector high = parse_numbers(next_line("action_high"));
  Vector log_std = parse_numbers(next_line("log_std"));
  const std::string note = next_line("note");
  const auto count = static_cast<std::size_t>(parse_double(next_line("params")));

  MlpPolicy policy(layers, std::move(low), std::move(high), mode);
  if (count != MlpPolicy::parameter_count(layers)) {
    throw std::runtime_error("policy file: parameter count " + std::to_string(count) +
                             " does not match layer sizes (" +
                             std::to_string(MlpPolicy::parameter_count(layers)) + ")");
  }
  Vector params;
  params.reserve(count);
  while (params.size() < count && std::getline(in, line)) {
    if (line.empty()) continue;
    params.push_back(parse_double(line));
  }
  if (params.size() != count) throw std::runtime_error("policy file: missing parameter values");
  policy.set_parameters(params);
  policy.set_log_std(std::move(log_std));
  policy.env_name = env;
  policy.note = note;
  return policy;
}

void save_policy(const MlpPolicy& policy, const std::string& path) { write_file_atomic(path, serialize_policy(policy)); }

MlpPolicy load_policy(const std::string& path) { return parse_policy(read_file(path)); }

std::string policy_hash(const MlpPolicy& policy) { return hex64(fnv1a(serialize_policy(policy))); }

MlpPolicy make_random_policy(std::vector<int> layer_sizes, Vector action_low, Vector action_high,
                             std::uint64_t seed, double weight_scale) {
  MlpPolicy policy(std::move(layer_sizes), std::move(action_low), std::move(action_high));
  Rng rng(seed);
  for (double& p : policy.parameters()) p = weight_scale * rng.normal();
  return policy;
}

}  // namespace actrob
