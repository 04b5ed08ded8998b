#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "actrob/coverage.hpp"
#include "actrob/dataset.hpp"
#include "actrob/de_attack.hpp"
#include "actrob/env.hpp"
#include "actrob/eval.hpp"
#include "actrob/io.hpp"
#include "actrob/policy.hpp"
#include "actrob/sweep.hpp"
#include "actrob/trainers.hpp"
#include "cli_config.hpp"

namespace actrob::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir = "out";
  std::string config;
  std::vector<std::string> config_files;
};

template <typename Fn>
auto usage_check(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

/// Collects outputs and writes manifest.json. Wall-clock time goes to a
/// sidecar so the manifest itself is reproducible.
class Recorder {
 public:
  Recorder(std::string command, const Globals& g)
      : command_(std::move(command)), dir_(g.out_dir), start_(std::chrono::steady_clock::now()) {
    seeds["base"] = g.seed;
    for (const auto& f : g.config_files) config_files_.push_back({{"path", f}, {"hash", file_hash(f)}});
  }

  json config = json::object();
  json seeds = json::object();
  json inputs = json::object();

  void add_input(const std::string& role, const std::string& path) {
    inputs[role] = {{"path", path}, {"hash", file_hash(path)}};
  }

  void write(const std::string& name, const std::string& contents) {
    write_file_atomic((dir_ / name).string(), contents);
    outputs_[name] = hex64(fnv1a(contents));
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
  void write_dataset(const std::string& name, const TransitionDataset& ds) {
    write(name, dataset_to_jsonl(ds));
    write(name + ".meta.json", meta_to_json(ds));
  }

  void finish(const std::string& status = "complete") const {
    json m;
    m["tool"] = "actrob";
    m["version"] = kToolVersion;
    m["command"] = command_;
    m["status"] = status;
    m["config"] = config;
    m["config_files"] = config_files_;
    m["seeds"] = seeds;
    m["inputs"] = inputs;
    m["outputs"] = outputs_;
    write_file_atomic((dir_ / "manifest.json").string(), m.dump(2) + "\n");
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "wall_clock_seconds %.3f\n", seconds);
    write_file_atomic((dir_ / "manifest.timing.txt").string(), buf);
  }

 private:
  std::string command_;
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
  json config_files_ = json::array();
  std::map<std::string, std::string> outputs_;
};

// ---- shared option groups -------------------------------------------------

struct EnvOptions {
  std::string env;
  std::vector<std::string> params;
};

void add_env_options(CLI::App* sub, EnvOptions& o) {
  sub->add_option("--env", o.env, "hopper-lite, runner-lite or quad-lite (default: from the input file)");
  sub->add_option("--env-param", o.params, "environment parameter override key=value")->delimiter(',');
}

struct ResolvedEnv {
  std::shared_ptr<const ToyEnvironment> env;
  std::map<std::string, double> overrides;

  const std::string& name() const { return env->spec().name; }
  json to_json() const { return {{"name", name()}, {"params", overrides}}; }
};

ResolvedEnv resolve_env(const EnvOptions& o, const std::string& from_input) {
  const std::string name = o.env.empty() ? from_input : o.env;
  if (name.empty()) throw UsageError("--env is required");
  if (!o.env.empty() && !from_input.empty() && o.env != from_input) {
    throw UsageError("--env " + o.env + " does not match the input's environment " + from_input);
  }
  ResolvedEnv r;
  for (const auto& p : o.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw UsageError("--env-param expects key=value, got '" + p + "'");
    try {
      r.overrides[p.substr(0, eq)] = parse_double(p.substr(eq + 1));
    } catch (const std::exception&) {
      throw UsageError("--env-param " + p + ": value is not a number");
    }
  }
  r.env = usage_check([&] { return make_environment(name, r.overrides); });
  return r;
}

MlpPolicy load_input_policy(const std::string& path, Recorder& rec, const std::string& role = "policy") {
  if (path.empty()) throw UsageError("--" + role + " is required");
  MlpPolicy p = load_policy(path);
  rec.add_input(role, path);
  return p;
}

void check_policy_fits(const MlpPolicy& p, const Environment& env) {
  const auto& spec = env.spec();
  if (p.input_dim() != spec.state_dim || p.output_dim() != spec.action_dim) {
    throw UsageError("policy maps " + std::to_string(p.input_dim()) + " -> " + std::to_string(p.output_dim()) +
                     " but " + spec.name + " has state dim " + std::to_string(spec.state_dim) + " and " +
                     std::to_string(spec.action_dim) + " actions");
  }
}

TransitionDataset load_input_dataset(const std::string& path, Recorder& rec, const std::string& role) {
  if (path.empty()) throw UsageError("--" + role + " is required");
  TransitionDataset ds = load_dataset(path);
  rec.add_input(role, path);
  return ds;
}

double resolve_epsilon(const std::optional<double>& given, const std::string& env) {
  const double eps = given ? *given : usage_check([&] { return default_epsilon(env); });
  if (!(eps >= 0.0)) throw UsageError("--epsilon must be nonnegative");
  return eps;
}

struct DeOptions {
  std::optional<int> np;
  int generations = 30;
  double cr = 0.7;
  int fitness_episodes = 100;
  bool target_reeval = false;
};

void add_de_options(CLI::App* sub, DeOptions& o) {
  sub->add_option("--np", o.np, "DE population size (default: 45, 90 or 120 by environment)");
  sub->add_option("--generations", o.generations, "DE generations")->capture_default_str();
  sub->add_option("--cr", o.cr, "crossover constant")->capture_default_str();
  sub->add_option("--fitness-episodes", o.fitness_episodes, "episodes per fitness evaluation")->capture_default_str();
  sub->add_flag("--target-reeval", o.target_reeval, "re-evaluate targets on the trial's episodes");
}

DeConfig resolve_de(const DeOptions& o, const std::string& env, double epsilon, std::uint64_t seed, int workers) {
  DeConfig c;
  c.population_size = o.np ? *o.np : usage_check([&] { return default_population_size(env); });
  c.generations = o.generations;
  c.crossover = o.cr;
  c.episodes_per_fitness = o.fitness_episodes;
  c.target_reeval = o.target_reeval;
  c.epsilon = epsilon;
  c.base_seed = seed;
  c.workers = workers;
  usage_check([&] { c.validate(); });
  return c;
}

json de_json(const DeConfig& c) {
  return {{"np", c.population_size},
          {"generations", c.generations},
          {"cr", c.crossover},
          {"scale_low", c.scale_low},
          {"scale_high", c.scale_high},
          {"fitness_episodes", c.episodes_per_fitness},
          {"epsilon", c.epsilon},
          {"target_reeval", c.target_reeval},
          {"seed", c.base_seed}};
}

AttackResult attack_with_partial(const Environment& env, const MlpPolicy& policy, const DeConfig& c, Recorder& rec,
                                 const std::string& prefix) {
  try {
    return run_attack(env, policy, c);
  } catch (const AttackError& e) {
    rec.write_json(prefix + "attack.partial.json", to_json(e.partial()));
    rec.finish("failed");
    throw;
  }
}

std::string rows_csv(std::span<const EvalReport> reports, const std::string& label = {}) {
  std::ostringstream out;
  for (const auto& r : reports) {
    if (!label.empty()) out << label << ',';
    out << to_csv_line(condition_row(r)) << '\n';
  }
  return out.str();
}

json rows_json(std::span<const EvalReport> reports) {
  json rows = json::array();
  for (const auto& r : reports) {
    const auto row = condition_row(r);
    rows.push_back({{"condition", to_string(row.condition)},
                    {"epsilon", row.epsilon},
                    {"mean", row.mean},
                    {"std", row.std},
                    {"M", row.episodes},
                    {"seed", row.seed}});
  }
  return rows;
}

json eval_base_json(const EvalConfig& c) {
  json j = {{"episodes", c.episodes}, {"seed", c.base_seed}, {"literal_transition", c.literal_transition}};
  j["policy_mode"] = c.policy_mode ? to_string(*c.policy_mode) : "policy";
  return j;
}

// ---- coverage analysis -----------------------------------------------------

struct CoverageSettings {
  int k = 100;
  double bandwidth = 0.5;
  int grid = 100;
  int max_iterations = 300;
  std::uint64_t seed = 0;
};

json coverage_settings_json(const CoverageSettings& s) {
  return {{"k", s.k}, {"bandwidth", s.bandwidth}, {"grid", s.grid}, {"max_iterations", s.max_iterations}};
}

/// Writes <prefix>_curve.csv, <prefix>_embedding.csv, <prefix>_grid_<label>.csv
/// and <prefix>.json; returns the summary.
json run_coverage(const TransitionDataset& a, const TransitionDataset& b, std::string label_a, std::string label_b,
                  const CoverageSettings& s, const std::string& prefix, Recorder& rec) {
  if (a.empty() || b.empty()) throw UsageError("coverage needs two nonempty datasets");
  if (a.state_dim() != b.state_dim() || a.action_dim() != b.action_dim()) {
    throw UsageError("coverage datasets have different dimensions");
  }
  if (label_a == label_b) {
    label_a += "-a";
    label_b += "-b";
  }
  const FeatureMatrix fa = build_features(a);
  const FeatureMatrix fb = build_features(b);
  const JointClustering joint = usage_check([&] { return kmeans_joint(fa, fb, s.k, s.seed, s.max_iterations); });
  const Vector ca = cumulative_ratio(joint.sizes_a);
  const Vector cb = cumulative_ratio(joint.sizes_b);
  rec.write(prefix + "_curve.csv", curve_csv_header() + "\n" + curve_csv(ca, label_a) + curve_csv(cb, label_b));

  Vector all = fa.values;
  all.insert(all.end(), fb.values.begin(), fb.values.end());
  const Embedding emb = embed_2d(make_matrix(fa.rows + fb.rows, fa.cols, std::move(all)));
  const std::vector<std::array<double, 2>> pa(emb.points.begin(), emb.points.begin() + static_cast<std::ptrdiff_t>(fa.rows));
  const std::vector<std::array<double, 2>> pb(emb.points.begin() + static_cast<std::ptrdiff_t>(fa.rows), emb.points.end());
  std::ostringstream pts;
  pts << "x,y,dataset\n";
  for (std::size_t i = 0; i < emb.points.size(); ++i) {
    pts << format_double(emb.points[i][0]) << ',' << format_double(emb.points[i][1]) << ','
        << (i < fa.rows ? label_a : label_b) << '\n';
  }
  rec.write(prefix + "_embedding.csv", pts.str());

  const DensityGrid ga = kde_grid(pa, s.bandwidth, s.grid);
  const DensityGrid gb = kde_grid(pb, s.bandwidth, s.grid);
  rec.write(prefix + "_grid_" + label_a + ".csv", grid_csv(ga));
  rec.write(prefix + "_grid_" + label_b + ".csv", grid_csv(gb));

  json summary;
  summary["labels"] = {label_a, label_b};
  summary["rho"] = fa.rho;
  summary["k"] = s.k;
  summary["kmeans_iterations"] = joint.kmeans.iterations;
  summary["curve_area"] = {{label_a, curve_area(ca)}, {label_b, curve_area(cb)}};
  summary["cluster_sizes"] = {{label_a, joint.sizes_a}, {label_b, joint.sizes_b}};
  summary["grid_mass"] = {{label_a, ga.mass()}, {label_b, gb.mass()}};
  summary["embedding_axes"] = {emb.axes[0], emb.axes[1]};
  rec.write_json(prefix + ".json", summary);
  return summary;
}

std::string dataset_label(const TransitionDataset& ds, const std::string& path) {
  return ds.meta.quality.empty() ? fs::path(path).stem().string() : ds.meta.quality;
}

// ---- subcommands -----------------------------------------------------------

struct TrainOptions {
  EnvOptions env;
  int iterations = 200;
  int population = 32;
  std::vector<int> hidden = {16};
  double elite_fraction = 0.25;
  double init_std = 0.5;
  double min_std = 0.02;
  int episodes = 1;
  double medium_fraction = 0.1;
};

void add_search_options(CLI::App* sub, TrainOptions& o) {
  sub->add_option("--iterations", o.iterations, "search iterations")->capture_default_str();
  sub->add_option("--population", o.population, "candidates per iteration")->capture_default_str();
  sub->add_option("--hidden", o.hidden, "hidden layer sizes, comma separated")->delimiter(',');
  sub->add_option("--elite-fraction", o.elite_fraction, "elite fraction")->capture_default_str();
  sub->add_option("--init-std", o.init_std, "initial sampling std")->capture_default_str();
  sub->add_option("--min-std", o.min_std, "sampling std floor")->capture_default_str();
  sub->add_option("--episodes-per-candidate", o.episodes, "episodes per candidate")->capture_default_str();
  sub->add_option("--medium-fraction", o.medium_fraction, "medium policy snapshot point")->capture_default_str();
}

SearchConfig search_config(const TrainOptions& o, std::uint64_t seed, int workers) {
  SearchConfig c;
  c.iterations = o.iterations;
  c.population = o.population;
  c.hidden = o.hidden;
  c.elite_fraction = o.elite_fraction;
  c.init_std = o.init_std;
  c.min_std = o.min_std;
  c.episodes_per_candidate = o.episodes;
  c.medium_fraction = o.medium_fraction;
  c.seed = seed;
  c.workers = workers;
  usage_check([&] { c.validate(); });
  return c;
}

json search_json(const SearchConfig& c) {
  return {{"iterations", c.iterations},         {"population", c.population}, {"hidden", c.hidden},
          {"elite_fraction", c.elite_fraction}, {"init_std", c.init_std},     {"min_std", c.min_std},
          {"episodes_per_candidate", c.episodes_per_candidate}, {"medium_fraction", c.medium_fraction},
          {"seed", c.seed}};
}

json search_report(const SearchResult& r) {
  return {{"expert_fitness", r.expert_fitness},
          {"medium_fitness", r.medium_fitness},
          {"initial_fitness", r.initial_fitness},
          {"best_history", r.best_history},
          {"warnings", r.warnings},
          {"expert_policy", policy_hash(r.expert)},
          {"medium_policy", policy_hash(r.medium)}};
}

void cmd_train(const Globals& g, const TrainOptions& o) {
  Recorder rec("train-policy", g);
  const ResolvedEnv env = resolve_env(o.env, "");
  const SearchConfig c = search_config(o, g.seed, g.workers);
  rec.config = {{"env", env.to_json()}, {"search", search_json(c)}};
  rec.seeds["search"] = c.seed;

  const SearchResult r = train_policy_search(*env.env, c);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  rec.write("expert.policy", serialize_policy(r.expert));
  rec.write("medium.policy", serialize_policy(r.medium));
  rec.write_json("train_report.json", search_report(r));
  rec.finish();
  std::printf("expert fitness %.2f, medium %.2f, initial %.2f\n", r.expert_fitness, r.medium_fitness,
              r.initial_fitness);
}

struct CloneOptions {
  std::vector<int> hidden = {16};
  int epochs = 200;
  int batch_size = 256;
  double lr = 3e-3;
  double final_lr_fraction = 0.05;
};

void add_clone_options(CLI::App* sub, CloneOptions& o) {
  sub->add_option("--clone-hidden", o.hidden, "cloned policy hidden sizes, comma separated (empty: none)")
      ->delimiter(',');
  sub->add_option("--epochs", o.epochs, "training epochs")->capture_default_str();
  sub->add_option("--batch-size", o.batch_size, "minibatch size")->capture_default_str();
  sub->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--final-lr-fraction", o.final_lr_fraction, "final learning rate fraction")->capture_default_str();
}

CloneConfig clone_config(const CloneOptions& o, std::uint64_t seed) {
  CloneConfig c;
  c.hidden = o.hidden;
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.learning_rate = o.lr;
  c.final_lr_fraction = o.final_lr_fraction;
  c.seed = seed;
  usage_check([&] { c.validate(); });
  return c;
}

json clone_json(const CloneConfig& c) {
  return {{"hidden", c.hidden},       {"epochs", c.epochs}, {"batch_size", c.batch_size},
          {"lr", c.learning_rate}, {"final_lr_fraction", c.final_lr_fraction}, {"seed", c.seed}};
}

MlpPolicy clone_dataset(const TransitionDataset& ds, const ResolvedEnv& env, const CloneConfig& c, json& report) {
  if (ds.empty()) throw UsageError("cannot clone an empty dataset");
  const auto& spec = env.env->spec();
  if (ds.state_dim() != static_cast<std::size_t>(spec.state_dim) ||
      ds.action_dim() != static_cast<std::size_t>(spec.action_dim)) {
    throw UsageError("dataset dimensions do not match " + spec.name);
  }
  CloneResult r = behavior_clone(ds, c, spec.action_low, spec.action_high);
  r.policy.env_name = spec.name;
  r.policy.note = "behavior clone of " + (ds.meta.quality.empty() ? std::string("unlabeled") : ds.meta.quality) +
                  " data, " + std::to_string(ds.size()) + " transitions";
  report["final_loss"] = r.final_loss;
  report["loss_history"] = r.loss_history;
  report["dataset_size"] = ds.size();
  report["policy"] = policy_hash(r.policy);
  return r.policy;
}

struct BcOptions {
  EnvOptions env;
  std::string dataset;
  CloneOptions clone;
  int eval_episodes = 1000;
  std::string out = "clone.policy";
};

void cmd_bc(const Globals& g, const BcOptions& o) {
  Recorder rec("bc", g);
  const TransitionDataset ds = load_input_dataset(o.dataset, rec, "dataset");
  const ResolvedEnv env = resolve_env(o.env, ds.meta.env);
  const CloneConfig c = clone_config(o.clone, g.seed);
  if (o.eval_episodes < 0) throw UsageError("--eval-episodes must be >= 0");
  rec.config = {{"env", env.to_json()}, {"clone", clone_json(c)}, {"eval_episodes", o.eval_episodes}, {"out", o.out}};
  rec.seeds["clone"] = c.seed;

  json report;
  const MlpPolicy policy = clone_dataset(ds, env, c, report);
  rec.write(o.out, serialize_policy(policy));
  if (o.eval_episodes > 0) {
    EvalConfig e;
    e.episodes = o.eval_episodes;
    e.base_seed = g.seed;
    e.workers = g.workers;
    rec.seeds["eval"] = e.base_seed;
    const EvalReport er = evaluate(*env.env, policy, e);
    report["normal"] = {{"mean", er.mean}, {"std", er.std}, {"M", er.config.episodes}, {"seed", e.base_seed}};
    std::printf("clone normal-condition reward %.2f ± %.2f (M=%d)\n", er.mean, er.std, e.episodes);
  }
  rec.write_json("bc_report.json", report);
  rec.finish();
  std::printf("final training loss %.6g\n", report["final_loss"].get<double>());
}

struct AttackOptions {
  EnvOptions env;
  std::string policy;
  std::optional<double> epsilon;
  DeOptions de;
};

void cmd_attack(const Globals& g, const AttackOptions& o) {
  Recorder rec("attack", g);
  const MlpPolicy policy = load_input_policy(o.policy, rec);
  const ResolvedEnv env = resolve_env(o.env, policy.env_name);
  check_policy_fits(policy, *env.env);
  const double eps = resolve_epsilon(o.epsilon, env.name());
  const DeConfig c = resolve_de(o.de, env.name(), eps, g.seed, g.workers);
  rec.config = {{"env", env.to_json()}, {"attack", de_json(c)}};
  rec.seeds["attack"] = c.base_seed;

  const AttackResult result = attack_with_partial(*env.env, policy, c, rec, "");
  rec.write_json("attack.json", to_json(result));
  rec.write_json("delta.json", delta_file_json(result.delta_best, env.name()));
  rec.finish();
  std::printf("R_min %.2f after %d generations (NP=%d, M=%d, eps=%g)\n", result.r_min, c.generations,
              c.population_size, c.episodes_per_fitness, eps);
}

struct EvaluateOptions {
  EnvOptions env;
  std::string policy;
  std::string condition = "all";
  std::optional<double> epsilon;
  int episodes = 1000;
  std::string delta_file;
  bool attack_inline = false;
  DeOptions de;
  std::string policy_mode;
  bool literal = false;
};

void cmd_evaluate(const Globals& g, const EvaluateOptions& o) {
  Recorder rec("evaluate", g);
  const MlpPolicy policy = load_input_policy(o.policy, rec);
  const ResolvedEnv env = resolve_env(o.env, policy.env_name);
  check_policy_fits(policy, *env.env);
  const auto na = static_cast<std::size_t>(env.env->spec().action_dim);

  const bool all = o.condition == "all";
  const Condition single = all ? Condition::kNormal : usage_check([&] { return parse_condition(o.condition); });
  std::optional<PerturbationVector> file_delta;
  if (!o.delta_file.empty()) {
    file_delta = load_delta_file(o.delta_file);
    rec.add_input("delta_file", o.delta_file);
    if (file_delta->delta.size() != na) throw UsageError("delta-file length does not match the action dimension");
  }
  const double eps = o.epsilon ? resolve_epsilon(o.epsilon, env.name())
                               : (file_delta ? file_delta->epsilon : resolve_epsilon(std::nullopt, env.name()));

  EvalConfig base;
  base.episodes = o.episodes;
  base.base_seed = g.seed;
  base.workers = g.workers;
  base.literal_transition = o.literal;
  if (!o.policy_mode.empty()) base.policy_mode = usage_check([&] { return parse_policy_mode(o.policy_mode); });
  usage_check([&] { base.validate(); });

  rec.config = {{"env", env.to_json()}, {"condition", o.condition}, {"epsilon", eps}, {"eval", eval_base_json(base)}};
  rec.seeds["eval"] = base.base_seed;

  std::optional<Vector> adv;
  const bool needs_adv = (all || single == Condition::kAdversarial) && eps != 0.0;
  if (needs_adv) {
    if (file_delta) {
      if (!inside_box(file_delta->delta, eps)) throw UsageError("delta-file vector lies outside the epsilon box");
      adv = file_delta->delta;
    } else if (o.attack_inline) {
      const DeConfig c = resolve_de(o.de, env.name(), eps, g.seed, g.workers);
      rec.config["attack"] = de_json(c);
      rec.seeds["attack"] = c.base_seed;
      const AttackResult result = attack_with_partial(*env.env, policy, c, rec, "");
      rec.write_json("attack.json", to_json(result));
      rec.write_json("delta.json", delta_file_json(result.delta_best, env.name()));
      adv = result.delta_best.delta;
    } else {
      throw UsageError("adversarial evaluation needs --delta-file or --attack-inline");
    }
  }
  if (adv) rec.config["adversarial_delta"] = *adv;

  std::vector<EvalReport> reports;
  if (all) {
    reports = evaluate_conditions(*env.env, policy, eps, adv, base);
  } else {
    EvalConfig c = base;
    switch (single) {
      case Condition::kNormal:
        c.condition = PerturbationCondition::normal();
        c.condition.epsilon = eps;
        break;
      case Condition::kRandom:
        c.condition = PerturbationCondition::random(eps);
        break;
      case Condition::kAdversarial:
        c.condition = PerturbationCondition::adversarial(adv ? *adv : Vector(na, 0.0), eps);
        break;
    }
    reports.push_back(evaluate(*env.env, policy, c));
  }

  rec.write("evaluation.csv", condition_csv_header() + "\n" + rows_csv(reports));
  json reps = json::array();
  for (const auto& r : reports) reps.push_back(to_json(r));
  rec.write_json("evaluation.json", {{"rows", rows_json(reports)}, {"reports", reps}});
  rec.finish();
  std::vector<ConditionRow> rows;
  for (const auto& r : reports) rows.push_back(condition_row(r));
  std::cout << format_condition_table(rows);
}

struct SweepOptions {
  EnvOptions env;
  std::string policy;
  std::vector<double> epsilons = {0.1, 0.2, 0.3, 0.4, 0.5};
  int episodes = 1000;
  DeOptions de;
};

void cmd_sweep(const Globals& g, const SweepOptions& o) {
  Recorder rec("sweep", g);
  const MlpPolicy policy = load_input_policy(o.policy, rec);
  const ResolvedEnv env = resolve_env(o.env, policy.env_name);
  check_policy_fits(policy, *env.env);
  if (o.epsilons.empty()) throw UsageError("--epsilons needs at least one value");
  for (double e : o.epsilons) {
    if (!(e >= 0.0)) throw UsageError("--epsilons values must be nonnegative");
  }
  if (o.episodes < 1) throw UsageError("--episodes must be >= 1");
  SweepConfig c;
  c.epsilons = o.epsilons;
  c.attack = resolve_de(o.de, env.name(), o.epsilons.front(), g.seed, g.workers);
  c.eval_episodes = o.episodes;
  c.eval_seed = g.seed;
  c.workers = g.workers;
  json attack = de_json(c.attack);
  attack.erase("epsilon");
  rec.config = {{"env", env.to_json()}, {"epsilons", c.epsilons}, {"episodes", c.eval_episodes}, {"attack", attack}};
  rec.seeds["attack"] = c.attack.base_seed;
  rec.seeds["eval"] = c.eval_seed;

  const auto rows = sweep_epsilon(*env.env, policy, c);
  rec.write("sweep.csv", sweep_csv(rows));
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"epsilon", r.epsilon},
                   {"mean", r.mean},
                   {"std", r.std},
                   {"M", r.episodes},
                   {"seed", r.eval_seed},
                   {"attack_seed", r.attack_seed},
                   {"r_min", r.r_min},
                   {"delta", r.delta}});
  }
  rec.write_json("sweep.json", {{"rows", out}});
  rec.finish();
  for (const auto& r : rows) std::printf("eps=%.2f  %.0f ± %.0f\n", r.epsilon, r.mean, r.std);
}

struct GenOptions {
  EnvOptions env;
  std::string policy;
  std::size_t transitions = 10000;
  std::string quality = "expert";
  std::string out = "dataset.jsonl";
};

void cmd_gen_data(const Globals& g, const GenOptions& o) {
  Recorder rec("gen-data", g);
  const MlpPolicy policy = load_input_policy(o.policy, rec);
  const ResolvedEnv env = resolve_env(o.env, policy.env_name);
  check_policy_fits(policy, *env.env);
  if (o.transitions < 1) throw UsageError("--transitions must be >= 1");
  rec.config = {{"env", env.to_json()}, {"transitions", o.transitions}, {"quality", o.quality}, {"out", o.out}};
  rec.seeds["data"] = g.seed;

  const TransitionDataset ds = generate_dataset(*env.env, policy, o.transitions, g.seed, o.quality);
  rec.write_dataset(o.out, ds);
  rec.finish();
  std::printf("%zu transitions written to %s\n", ds.size(), o.out.c_str());
}

struct PerturbOptions {
  std::string dataset;
  std::string condition = "random";
  std::optional<double> epsilon;
  std::string delta_file;
  std::string granularity = "per-episode";
  std::string out = "perturbed.jsonl";
};

void cmd_perturb_data(const Globals& g, const PerturbOptions& o) {
  Recorder rec("perturb-data", g);
  const TransitionDataset ds = load_input_dataset(o.dataset, rec, "dataset");
  PerturbSpec spec;
  spec.condition = usage_check([&] { return parse_condition(o.condition); });
  if (spec.condition == Condition::kNormal) throw UsageError("perturb-data takes --condition random or adversarial");
  spec.granularity = usage_check([&] { return parse_granularity(o.granularity); });
  spec.seed = g.seed;

  std::optional<PerturbationVector> file_delta;
  if (!o.delta_file.empty()) {
    file_delta = load_delta_file(o.delta_file);
    rec.add_input("delta_file", o.delta_file);
  }
  if (spec.condition == Condition::kAdversarial) {
    if (!file_delta) throw UsageError("adversarial perturbation needs --delta-file");
    if (file_delta->delta.size() != ds.action_dim()) {
      throw UsageError("delta-file length does not match the dataset's action dimension");
    }
    spec.delta = file_delta->delta;
    spec.epsilon = o.epsilon ? *o.epsilon : file_delta->epsilon;
    if (!inside_box(*spec.delta, spec.epsilon)) throw UsageError("delta-file vector lies outside the epsilon box");
  } else {
    spec.epsilon = resolve_epsilon(o.epsilon, ds.meta.env);
  }
  json cfg = {{"condition", to_string(spec.condition)}, {"epsilon", spec.epsilon}, {"out", o.out}};
  if (spec.condition == Condition::kRandom) cfg["granularity"] = to_string(spec.granularity);
  if (spec.delta) cfg["delta"] = *spec.delta;
  rec.config = cfg;
  rec.seeds["perturb"] = spec.seed;

  const TransitionDataset out = perturb_dataset(ds, spec);
  rec.write_dataset(o.out, out);
  rec.finish();
  std::printf("%zu transitions perturbed (%s)\n", out.size(), out.meta.quality.c_str());
}

struct MergeOptions {
  std::string a;
  std::string b;
  std::string out = "merged.jsonl";
};

void cmd_merge_data(const Globals& g, const MergeOptions& o) {
  Recorder rec("merge-data", g);
  const TransitionDataset a = load_input_dataset(o.a, rec, "dataset-a");
  const TransitionDataset b = load_input_dataset(o.b, rec, "dataset-b");
  rec.config = {{"out", o.out}};
  const TransitionDataset m = usage_check([&] { return merge_datasets(a, b); });
  rec.write_dataset(o.out, m);
  rec.finish();
  std::printf("%zu + %zu = %zu transitions\n", a.size(), b.size(), m.size());
}

struct HistOptions {
  std::vector<std::string> datasets;
  std::vector<std::string> labels;
  int bins = 50;
  std::vector<double> range;
  std::string out = "action_hist.csv";
};

void cmd_action_hist(const Globals& g, const HistOptions& o) {
  Recorder rec("action-hist", g);
  if (o.datasets.empty()) throw UsageError("--dataset is required");
  if (!o.labels.empty() && o.labels.size() != o.datasets.size()) throw UsageError("give one --label per --dataset");
  if (!o.range.empty() && (o.range.size() != 2 || !(o.range[0] < o.range[1]))) {
    throw UsageError("--range expects low,high with low < high");
  }
  if (o.bins < 2) throw UsageError("--bins must be >= 2");
  std::vector<TransitionDataset> sets;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < o.datasets.size(); ++i) {
    sets.push_back(load_input_dataset(o.datasets[i], rec, "dataset-" + std::to_string(i)));
    if (sets.back().empty()) throw UsageError(o.datasets[i] + " is empty");
    labels.push_back(o.labels.empty() ? dataset_label(sets.back(), o.datasets[i]) : o.labels[i]);
  }
  // A shared range keeps bin edges comparable across variants.
  double lo = 0.0, hi = 0.0;
  if (o.range.empty()) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& ds : sets)
      for (const auto& t : ds.transitions)
        for (double a : t.action) {
          lo = std::min(lo, a);
          hi = std::max(hi, a);
        }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  } else {
    lo = o.range[0];
    hi = o.range[1];
  }
  rec.config = {{"labels", labels}, {"bins", o.bins}, {"range", {lo, hi}}, {"out", o.out}};

  std::string csv = histogram_csv_header() + "\n";
  json stats = json::object();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    csv += histogram_csv(action_histograms(sets[i], o.bins, std::make_pair(lo, hi)), labels[i]);
    json dims = json::array();
    for (std::size_t j = 0; j < sets[i].action_dim(); ++j) {
      Vector col;
      for (const auto& t : sets[i].transitions) col.push_back(t.action[j]);
      const double sd = population_std(col);
      dims.push_back({{"mean", mean(col)}, {"variance", sd * sd}});
    }
    stats[labels[i]] = dims;
  }
  rec.write(o.out, csv);
  rec.write_json(fs::path(o.out).stem().string() + "_stats.json", stats);
  rec.finish();
  std::printf("histograms for %zu datasets written to %s\n", sets.size(), o.out.c_str());
}

struct CoverageOptions {
  std::string a;
  std::string b;
  CoverageSettings settings;
  std::string prefix = "coverage";
};

void cmd_coverage(const Globals& g, CoverageOptions o) {
  Recorder rec("coverage", g);
  const TransitionDataset a = load_input_dataset(o.a, rec, "dataset-a");
  const TransitionDataset b = load_input_dataset(o.b, rec, "dataset-b");
  o.settings.seed = g.seed;
  rec.config = {{"coverage", coverage_settings_json(o.settings)}, {"prefix", o.prefix}};
  rec.seeds["kmeans"] = o.settings.seed;
  const json summary = run_coverage(a, b, dataset_label(a, o.a), dataset_label(b, o.b), o.settings, o.prefix, rec);
  rec.finish();
  const auto& labels = summary["labels"];
  std::printf("curve area %s %.4f, %s %.4f (K=%d, rho=%.3f)\n", labels[0].get<std::string>().c_str(),
              summary["curve_area"][labels[0].get<std::string>()].get<double>(), labels[1].get<std::string>().c_str(),
              summary["curve_area"][labels[1].get<std::string>()].get<double>(), o.settings.k,
              summary["rho"].get<double>());
}

// ---- pipeline ----------------------------------------------------------------

struct PipelineOptions {
  EnvOptions env;
  TrainOptions search;
  std::size_t transitions = 10000;
  CloneOptions clone;
  int eval_episodes = 1000;
  std::optional<double> epsilon;
  DeOptions de;
  CoverageSettings coverage;
  bool dry_run = false;
};

class Pipeline {
 public:
  Pipeline(const Globals& g, const PipelineOptions& o) : g_(g), o_(o), rec_("pipeline", g) {}

  void run() {
    EnvOptions env_opts = o_.env;
    if (env_opts.env.empty()) env_opts.env = "runner-lite";
    env_ = resolve_env(env_opts, "");
    eps_ = resolve_epsilon(o_.epsilon, env_.name());
    search_ = search_config(o_.search, derive_seed(g_.seed, {1}), g_.workers);
    attack_ = resolve_de(o_.de, env_.name(), eps_, derive_seed(g_.seed, {2}), g_.workers);
    eval_.episodes = o_.eval_episodes;
    eval_.base_seed = derive_seed(g_.seed, {3});
    eval_.workers = g_.workers;
    usage_check([&] { eval_.validate(); });
    clone_ = clone_config(o_.clone, 0);
    if (o_.transitions < 1) throw UsageError("--transitions must be >= 1");
    coverage_ = o_.coverage;
    coverage_.seed = derive_seed(g_.seed, {9});

    if (o_.dry_run) {
      print_plan();
      return;
    }
    rec_.config = {{"env", env_.to_json()},
                   {"epsilon", eps_},
                   {"search", search_json(search_)},
                   {"attack", de_json(attack_)},
                   {"eval", eval_base_json(eval_)},
                   {"transitions", o_.transitions},
                   {"clone", clone_json(clone_)},
                   {"coverage", coverage_settings_json(coverage_)}};
    rec_.seeds["search"] = search_.seed;
    rec_.seeds["attack"] = attack_.base_seed;
    rec_.seeds["eval"] = eval_.base_seed;
    rec_.seeds["kmeans"] = coverage_.seed;

    stage("policies", [&] { stage_policies(); });
    stage("coverage", [&] { stage_coverage(); });
    stage("perturbed-training", [&] { stage_perturbed(); });

    const double clean = summary_["coverage"]["clones"]["expert"]["normal_mean"].get<double>();
    const double adv = summary_["perturbed-training"]["clones"]["adversarial"]["normal_mean"].get<double>();
    summary_["adversarial_clone_below_clean_clone"] = adv < clean;
    rec_.write_json("pipeline.json", summary_);
    rec_.finish();
    std::printf("expert clone %.1f, adversarial-data clone %.1f (normal condition, M=%d)\n", clean, adv,
                eval_.episodes);
  }

 private:
  template <typename Fn>
  void stage(const std::string& name, Fn&& body) {
    std::printf("[stage %s]\n", name.c_str());
    std::fflush(stdout);
    try {
      body();
    } catch (const std::exception& e) {
      rec_.write_json("pipeline.json", summary_);
      rec_.finish("failed in stage " + name);
      throw std::runtime_error("pipeline stage '" + name + "' failed: " + e.what());
    }
    completed_.push_back(name);
    summary_["completed_stages"] = completed_;
    rec_.write_json("pipeline.json", summary_);
    rec_.finish("partial");
  }

  void print_plan() const {
    std::printf("pipeline plan for %s (eps=%g, eval M=%d, seed=%llu)\n", env_.name().c_str(), eps_, eval_.episodes,
                static_cast<unsigned long long>(g_.seed));
    std::printf("  stage policies: train expert and medium policies (%d iterations x %d candidates); attack the "
                "expert (NP=%d, G=%d, M=%d); evaluate normal, random and adversarial conditions\n",
                search_.iterations, search_.population, attack_.population_size, attack_.generations,
                attack_.episodes_per_fitness);
    std::printf("  stage coverage: generate expert and medium datasets (%zu transitions each) and their merge; "
                "clone each (%d epochs) and evaluate; k-means coverage with K=%d\n",
                o_.transitions, clone_.epochs, coverage_.k);
    std::printf("  stage perturbed-training: perturb the expert dataset randomly and adversarially; clone and "
                "evaluate each\n");
    std::printf("  outputs under %s\n", g_.out_dir.c_str());
  }

  json evaluate_clone(const MlpPolicy& policy, const std::string& csv_label, std::string& csv) {
    const auto reports = evaluate_conditions(*env_.env, policy, eps_, delta_, eval_);
    csv += rows_csv(reports, csv_label);
    return {{"rows", rows_json(reports)}, {"normal_mean", reports[0].mean}};
  }

  void stage_policies() {
    const SearchResult r = train_policy_search(*env_.env, search_);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    expert_ = r.expert;
    medium_ = r.medium;
    rec_.write("policies/expert.policy", serialize_policy(expert_));
    rec_.write("policies/medium.policy", serialize_policy(medium_));
    rec_.write_json("policies/train_report.json", search_report(r));

    const AttackResult attack = attack_with_partial(*env_.env, expert_, attack_, rec_, "policies/");
    delta_ = attack.delta_best.delta;
    rec_.write_json("policies/attack.json", to_json(attack));
    rec_.write_json("policies/delta.json", delta_file_json(attack.delta_best, env_.name()));

    std::string csv = "policy," + condition_csv_header() + "\n";
    json expert = evaluate_clone(expert_, "expert", csv);
    json medium = evaluate_clone(medium_, "medium", csv);
    rec_.write("policies/evaluation.csv", csv);
    summary_["policies"] = {{"expert", expert}, {"medium", medium}, {"r_min", attack.r_min}, {"delta", *delta_}};
    std::printf("  expert normal %.1f, adversarial R_min %.1f\n", expert["normal_mean"].get<double>(), attack.r_min);
  }

  void stage_coverage() {
    expert_data_ = generate_dataset(*env_.env, expert_, o_.transitions, derive_seed(g_.seed, {4}), "expert");
    const TransitionDataset medium = generate_dataset(*env_.env, medium_, o_.transitions, derive_seed(g_.seed, {5}), "medium");
    const TransitionDataset merged = merge_datasets(expert_data_, medium);
    rec_.write_dataset("coverage/expert.jsonl", expert_data_);
    rec_.write_dataset("coverage/medium.jsonl", medium);
    rec_.write_dataset("coverage/merged.jsonl", merged);

    std::string csv = "dataset," + condition_csv_header() + "\n";
    json clones;
    const std::pair<std::string, const TransitionDataset*> sets[] = {
        {"expert", &expert_data_}, {"medium", &medium}, {"merged", &merged}};
    std::uint64_t k = 0;
    for (const auto& [name, ds] : sets) {
      CloneConfig c = clone_;
      c.seed = derive_seed(g_.seed, {6, k++});
      json report;
      const MlpPolicy policy = clone_dataset(*ds, env_, c, report);
      rec_.write("coverage/clone_" + name + ".policy", serialize_policy(policy));
      json eval = evaluate_clone(policy, name, csv);
      eval["final_loss"] = report["final_loss"];
      clones[name] = eval;
      std::printf("  %s clone normal %.1f\n", name.c_str(), eval["normal_mean"].get<double>());
    }
    rec_.write("coverage/clones.csv", csv);
    const json cov = run_coverage(expert_data_, medium, "expert", "medium", coverage_, "coverage/coverage", rec_);
    summary_["coverage"] = {{"clones", clones}, {"curve_area", cov["curve_area"]}, {"rho", cov["rho"]}};
  }

  void stage_perturbed() {
    PerturbSpec rnd;
    rnd.condition = Condition::kRandom;
    rnd.epsilon = eps_;
    rnd.seed = derive_seed(g_.seed, {7});
    PerturbSpec adv;
    adv.condition = Condition::kAdversarial;
    adv.epsilon = eps_;
    adv.delta = delta_;
    const TransitionDataset random_data = perturb_dataset(expert_data_, rnd);
    const TransitionDataset adv_data = perturb_dataset(expert_data_, adv);
    rec_.write_dataset("perturbed/expert_random.jsonl", random_data);
    rec_.write_dataset("perturbed/expert_adversarial.jsonl", adv_data);

    std::string csv = "dataset," + condition_csv_header() + "\n";
    json clones;
    const std::pair<std::string, const TransitionDataset*> sets[] = {{"random", &random_data},
                                                                     {"adversarial", &adv_data}};
    std::uint64_t k = 0;
    for (const auto& [name, ds] : sets) {
      CloneConfig c = clone_;
      c.seed = derive_seed(g_.seed, {8, k++});
      json report;
      const MlpPolicy policy = clone_dataset(*ds, env_, c, report);
      rec_.write("perturbed/clone_" + name + ".policy", serialize_policy(policy));
      json eval = evaluate_clone(policy, name, csv);
      eval["final_loss"] = report["final_loss"];
      clones[name] = eval;
      std::printf("  %s-data clone normal %.1f\n", name.c_str(), eval["normal_mean"].get<double>());
    }
    rec_.write("perturbed/clones.csv", csv);
    summary_["perturbed-training"] = {{"clones", clones}};
  }

  const Globals& g_;
  const PipelineOptions& o_;
  Recorder rec_;
  ResolvedEnv env_;
  double eps_ = 0.0;
  SearchConfig search_;
  DeConfig attack_;
  EvalConfig eval_;
  CloneConfig clone_;
  CoverageSettings coverage_;
  MlpPolicy expert_;
  MlpPolicy medium_;
  std::optional<Vector> delta_;
  TransitionDataset expert_data_;
  json summary_ = json::object();
  std::vector<std::string> completed_;
};

// ---- config file -------------------------------------------------------------

std::vector<std::string> apply_config(CLI::App& app, CLI::App& sub, const std::string& path) {
  const ConfigFile cfg = read_config_file(path);
  for (const auto& [key, value] : cfg.values) {
    if (key == "config") throw UsageError(path + ": use 'include' instead of setting config");
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError(path + ": unknown setting '" + key + "' for " + sub.get_name());
    if (opt->count() > 0) continue;  // command-line flags win
    opt->add_result(value);
    opt->run_callback();
  }
  return cfg.files;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"actrob: action-perturbation robustness toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "base seed")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads (outputs do not depend on it)")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--config", g.config, "key = value config file; command-line flags override it");

  TrainOptions train;
  auto* s_train = app.add_subcommand("train-policy", "train expert and medium policies by cross-entropy search");
  add_env_options(s_train, train.env);
  add_search_options(s_train, train);

  BcOptions bc;
  auto* s_bc = app.add_subcommand("bc", "behavior-clone a policy from a transition dataset");
  add_env_options(s_bc, bc.env);
  s_bc->add_option("--dataset", bc.dataset, "transition dataset (.jsonl)");
  add_clone_options(s_bc, bc.clone);
  s_bc->add_option("--eval-episodes", bc.eval_episodes, "normal-condition episodes after training (0: skip)")
      ->capture_default_str();
  s_bc->add_option("--out", bc.out, "policy file name")->capture_default_str();

  AttackOptions attack;
  auto* s_attack = app.add_subcommand("attack", "search an adversarial perturbation with differential evolution");
  add_env_options(s_attack, attack.env);
  s_attack->add_option("--policy", attack.policy, "policy file");
  s_attack->add_option("--epsilon", attack.epsilon, "perturbation strength (default: by environment)");
  add_de_options(s_attack, attack.de);

  EvaluateOptions evalo;
  auto* s_eval = app.add_subcommand("evaluate", "average episodic reward under perturbation conditions");
  add_env_options(s_eval, evalo.env);
  s_eval->add_option("--policy", evalo.policy, "policy file");
  s_eval->add_option("--condition", evalo.condition, "all, normal, random or adversarial")->capture_default_str();
  s_eval->add_option("--epsilon", evalo.epsilon, "perturbation strength (default: delta-file or environment)");
  s_eval->add_option("--episodes", evalo.episodes, "episodes per condition")->capture_default_str();
  s_eval->add_option("--delta-file", evalo.delta_file, "adversarial perturbation file from attack");
  s_eval->add_flag("--attack-inline", evalo.attack_inline, "run the attack first when no delta-file is given");
  add_de_options(s_eval, evalo.de);
  s_eval->add_option("--policy-mode", evalo.policy_mode, "deterministic or gaussian (default: the policy's)");
  s_eval->add_flag("--literal-alg2", evalo.literal, "advance dynamics with the unperturbed action");

  SweepOptions sweep;
  auto* s_sweep = app.add_subcommand("sweep", "attack and evaluate across perturbation strengths");
  add_env_options(s_sweep, sweep.env);
  s_sweep->add_option("--policy", sweep.policy, "policy file");
  s_sweep->add_option("--epsilons", sweep.epsilons, "strengths, comma separated")->delimiter(',');
  s_sweep->add_option("--episodes", sweep.episodes, "evaluation episodes per strength")->capture_default_str();
  add_de_options(s_sweep, sweep.de);

  GenOptions gen;
  auto* s_gen = app.add_subcommand("gen-data", "roll out a policy into a transition dataset");
  add_env_options(s_gen, gen.env);
  s_gen->add_option("--policy", gen.policy, "behavior policy file");
  s_gen->add_option("--transitions", gen.transitions, "number of transitions")->capture_default_str();
  s_gen->add_option("--quality", gen.quality, "dataset label")->capture_default_str();
  s_gen->add_option("--out", gen.out, "dataset file name")->capture_default_str();

  PerturbOptions perturb;
  auto* s_perturb = app.add_subcommand("perturb-data", "perturb the actions of a dataset");
  s_perturb->add_option("--dataset", perturb.dataset, "source dataset");
  s_perturb->add_option("--condition", perturb.condition, "random or adversarial")->capture_default_str();
  s_perturb->add_option("--epsilon", perturb.epsilon, "perturbation strength");
  s_perturb->add_option("--delta-file", perturb.delta_file, "adversarial perturbation file");
  s_perturb->add_option("--granularity", perturb.granularity, "per-episode, per-transition or per-dataset")
      ->capture_default_str();
  s_perturb->add_option("--out", perturb.out, "dataset file name")->capture_default_str();

  MergeOptions merge;
  auto* s_merge = app.add_subcommand("merge-data", "concatenate two datasets");
  s_merge->add_option("--dataset-a", merge.a, "first dataset");
  s_merge->add_option("--dataset-b", merge.b, "second dataset");
  s_merge->add_option("--out", merge.out, "dataset file name")->capture_default_str();

  HistOptions hist;
  auto* s_hist = app.add_subcommand("action-hist", "per-dimension action histograms");
  s_hist->add_option("--dataset", hist.datasets, "datasets (repeatable)");
  s_hist->add_option("--label", hist.labels, "one label per dataset");
  s_hist->add_option("--bins", hist.bins, "bins per dimension")->capture_default_str();
  s_hist->add_option("--range", hist.range, "low,high shared bin range")->delimiter(',');
  s_hist->add_option("--out", hist.out, "CSV file name")->capture_default_str();

  CoverageOptions cov;
  auto* s_cov = app.add_subcommand("coverage", "state-action coverage of two datasets");
  s_cov->add_option("--dataset-a", cov.a, "first dataset");
  s_cov->add_option("--dataset-b", cov.b, "second dataset");
  s_cov->add_option("--k", cov.settings.k, "clusters")->capture_default_str();
  s_cov->add_option("--bandwidth", cov.settings.bandwidth, "KDE bandwidth")->capture_default_str();
  s_cov->add_option("--grid", cov.settings.grid, "KDE cells per axis")->capture_default_str();
  s_cov->add_option("--max-iterations", cov.settings.max_iterations, "k-means iteration cap")->capture_default_str();
  s_cov->add_option("--out-prefix", cov.prefix, "output file prefix")->capture_default_str();

  PipelineOptions pipe;
  auto* s_pipe = app.add_subcommand("pipeline", "run the three-stage experiment end to end");
  add_env_options(s_pipe, pipe.env);
  add_search_options(s_pipe, pipe.search);
  s_pipe->add_option("--transitions", pipe.transitions, "transitions per dataset")->capture_default_str();
  add_clone_options(s_pipe, pipe.clone);
  s_pipe->add_option("--eval-episodes", pipe.eval_episodes, "episodes per condition")->capture_default_str();
  s_pipe->add_option("--epsilon", pipe.epsilon, "perturbation strength (default: by environment)");
  add_de_options(s_pipe, pipe.de);
  s_pipe->add_option("--k", pipe.coverage.k, "clusters")->capture_default_str();
  s_pipe->add_option("--bandwidth", pipe.coverage.bandwidth, "KDE bandwidth")->capture_default_str();
  s_pipe->add_flag("--dry-run", pipe.dry_run, "print the stage plan and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!g.config.empty()) g.config_files = apply_config(app, *sub, g.config);
    if (g.workers < 1) throw UsageError("--workers must be >= 1");
    const std::string name = sub->get_name();
    if (name == "train-policy") cmd_train(g, train);
    else if (name == "bc") cmd_bc(g, bc);
    else if (name == "attack") cmd_attack(g, attack);
    else if (name == "evaluate") cmd_evaluate(g, evalo);
    else if (name == "sweep") cmd_sweep(g, sweep);
    else if (name == "gen-data") cmd_gen_data(g, gen);
    else if (name == "perturb-data") cmd_perturb_data(g, perturb);
    else if (name == "merge-data") cmd_merge_data(g, merge);
    else if (name == "action-hist") cmd_action_hist(g, hist);
    else if (name == "coverage") cmd_coverage(g, cov);
    else if (name == "pipeline") Pipeline(g, pipe).run();
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace actrob::cli
