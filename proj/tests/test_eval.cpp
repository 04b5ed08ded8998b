#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "actrob/eval.hpp"
#include "actrob/sweep.hpp"
#include "test_support.hpp"

using namespace actrob;

namespace {

testing::LambdaEnvironment unit_penalty_env() {
  return testing::LambdaEnvironment(
      1, 1, [](std::span<const double>, std::span<const double> a) { return 1.0 - squared_norm(a); }, true);
}

testing::LambdaEnvironment endless_env() {
  return testing::LambdaEnvironment(
      1, 1, [](std::span<const double>, std::span<const double>) { return 1.0; }, false);
}

}  // namespace

TEST_CASE("one-step reward uses the perturbed action") {
  const auto env = unit_penalty_env();
  const auto policy = testing::constant_policy(1, 1, 1.0);
  const auto r = run_episode(env, policy, Vector{0.3}, 0);
  CHECK(r.reward == doctest::Approx(-0.69).epsilon(1e-14));
  CHECK(r.length == 1);
  CHECK(r.terminated);
}

TEST_CASE("episodes stop at the step limit") {
  const auto env = endless_env();
  const auto policy = testing::constant_policy(1, 1, 0.0);
  const auto r = run_episode(env, policy, Vector{0.0}, 0);
  CHECK(r.length == 1000);
  CHECK(r.reward == 1000.0);
  CHECK_FALSE(r.terminated);
}

TEST_CASE("zero perturbation reproduces the unperturbed rollout") {
  auto env = make_environment("hopper-lite");
  const auto policy = make_random_policy({8, 3}, env->spec().action_low, env->spec().action_high, 3, 0.5);
  // Hand-rolled rollout through the public environment interface.
  const std::uint64_t seed = 21;
  auto s = env->reset(derive_seed(seed, {0}));
  double total = 0.0;
  int steps = 0;
  for (; steps < env->spec().max_steps; ++steps) {
    const auto a = policy.mean_action(s);
    auto r = env->step(s, a);
    total += r.reward;
    s = std::move(r.next_state);
    if (r.terminated) {
      ++steps;
      break;
    }
  }
  const auto ep = run_episode(*env, policy, Vector(3, 0.0), seed);
  CHECK(ep.reward == total);
  CHECK(ep.length == steps);
}

TEST_CASE("the perturbation is fixed for the whole episode") {
  auto env = make_environment("runner-lite", {{"max_steps", 50}});
  const auto policy = make_random_policy({9, 6}, env->spec().action_low, env->spec().action_high, 8, 0.5);
  const Vector delta = {0.3, -0.3, 0.1, -0.1, 0.2, 0.0};
  RolloutOptions opts;
  int seen = 0;
  opts.observer = [&](const StepTrace& tr) {
    ++seen;
    for (std::size_t j = 0; j < delta.size(); ++j) {
      if (tr.action[j] != 0.0) CHECK(tr.perturbed[j] / tr.action[j] - 1.0 == doctest::Approx(delta[j]).epsilon(1e-9));
    }
  };
  run_episode(*env, policy, delta, 2, opts);
  CHECK(seen == 50);
}

TEST_CASE("literal transition mode changes dynamics but not the reward rule") {
  const auto env = unit_penalty_env();
  const auto policy = testing::constant_policy(1, 1, 1.0);
  RolloutOptions opts;
  opts.literal_transition = true;
  CHECK(run_episode(env, policy, Vector{0.3}, 0, opts).reward == doctest::Approx(-0.69).epsilon(1e-14));

  auto hopper = make_environment("hopper-lite", {{"max_steps", 80}});
  const auto p = make_random_policy({8, 3}, hopper->spec().action_low, hopper->spec().action_high, 3, 0.5);
  const Vector d = {0.3, 0.3, 0.3};
  CHECK(run_episode(*hopper, p, d, 1, opts).reward != run_episode(*hopper, p, d, 1).reward);
}

TEST_CASE("normal evaluation of a deterministic setup has zero spread") {
  auto env = make_environment("hopper-lite", {{"reset_noise", 0.0}, {"max_steps", 100}});
  const auto policy = make_random_policy({8, 3}, env->spec().action_low, env->spec().action_high, 3, 0.5);
  EvalConfig c;
  c.episodes = 5;
  const auto rep = evaluate(*env, policy, c);
  for (double r : rep.rewards) CHECK(r == rep.rewards.front());
  CHECK(rep.std == 0.0);
  CHECK(rep.mean == rep.rewards.front());
}

TEST_CASE("random evaluation stores in-box deltas") {
  const auto env = unit_penalty_env();
  const auto policy = testing::constant_policy(1, 1, 1.0);
  EvalConfig c;
  c.episodes = 1000;
  c.condition = PerturbationCondition::random(0.3);
  c.base_seed = 4;
  const auto rep = evaluate(env, policy, c);
  REQUIRE(rep.deltas.size() == 1000);
  for (const auto& d : rep.deltas) CHECK(inside_box(d, 0.3));
  // reward = 1 - (1 + d)^2 per episode.
  for (std::size_t m = 0; m < 1000; ++m)
    CHECK(rep.rewards[m] == doctest::Approx(1.0 - (1.0 + rep.deltas[m][0]) * (1.0 + rep.deltas[m][0])).epsilon(1e-12));
}

TEST_CASE("per-episode rewards do not depend on M or the worker count") {
  auto env = make_environment("runner-lite", {{"max_steps", 60}});
  const auto policy = make_random_policy({9, 6}, env->spec().action_low, env->spec().action_high, 8, 0.5);
  EvalConfig c;
  c.condition = PerturbationCondition::random(0.3);
  c.base_seed = 77;
  c.episodes = 12;
  const auto base = evaluate(*env, policy, c);
  c.episodes = 5;
  const auto prefix = evaluate(*env, policy, c);
  for (std::size_t m = 0; m < 5; ++m) CHECK(prefix.rewards[m] == base.rewards[m]);
  c.episodes = 12;
  for (int w : {4, 8}) {
    c.workers = w;
    const auto rep = evaluate(*env, policy, c);
    CHECK(rep.rewards == base.rewards);
    CHECK(to_json(rep).dump() == to_json(base).dump());
  }
}

TEST_CASE("normal evaluation ignores epsilon") {
  auto env = make_environment("hopper-lite", {{"max_steps", 60}});
  const auto policy = make_random_policy({8, 3}, env->spec().action_low, env->spec().action_high, 3, 0.5);
  const auto a = compare_conditions(*env, policy, 0.3, 4, 1, Vector(3, 0.1));
  const auto b = compare_conditions(*env, policy, 0.9, 4, 1, Vector(3, 0.1));
  CHECK(a[0].mean == b[0].mean);
  EvalConfig c;
  c.episodes = 4;
  c.base_seed = 1;
  CHECK(a[0].mean == evaluate(*env, policy, c).mean);
}

TEST_CASE("compare_conditions rows and diagnostics") {
  auto env = make_environment("hopper-lite", {{"max_steps", 60}});
  const auto policy = make_random_policy({8, 3}, env->spec().action_low, env->spec().action_high, 3, 0.5);
  CHECK_THROWS_WITH_AS(compare_conditions(*env, policy, 0.3, 4, 1, std::nullopt),
                       doctest::Contains("perturbation"), std::invalid_argument);
  const auto zero = compare_conditions(*env, policy, 0.0, 4, 1, std::nullopt);
  REQUIRE(zero.size() == 3);
  CHECK(zero[0].mean == zero[1].mean);
  CHECK(zero[0].mean == zero[2].mean);
  CHECK(condition_csv_header() == "condition,epsilon,mean,std,M,seed");
  CHECK(to_csv_line(zero[1]).rfind("random,0,", 0) == 0);
  CHECK(format_condition_table(zero).find("±") != std::string::npos);
}

TEST_CASE("gaussian evaluation is reproducible") {
  auto env = make_environment("hopper-lite", {{"max_steps", 60}});
  auto policy = make_random_policy({8, 3}, env->spec().action_low, env->spec().action_high, 3, 0.5);
  EvalConfig c;
  c.episodes = 3;
  c.policy_mode = PolicyMode::kGaussian;
  const auto a = evaluate(*env, policy, c);
  CHECK(a.rewards == evaluate(*env, policy, c).rewards);
  c.policy_mode = PolicyMode::kDeterministic;
  CHECK(a.rewards != evaluate(*env, policy, c).rewards);
}

TEST_CASE("evaluation rejects a mismatched policy") {
  auto env = make_environment("hopper-lite");
  const auto policy = make_random_policy({9, 6}, Vector(6, -1.0), Vector(6, 1.0), 1);
  EvalConfig c;
  c.episodes = 1;
  CHECK_THROWS_AS(evaluate(*env, policy, c), DimensionError);
  c.episodes = 0;
  CHECK_THROWS(evaluate(*env, make_random_policy({8, 3}, Vector(3, -1.0), Vector(3, 1.0), 1), c));
}

TEST_CASE("sweep emits one adversarial row per strength") {
  auto env = make_environment("hopper-lite", {{"max_steps", 30}});
  const auto policy = make_random_policy({8, 3}, env->spec().action_low, env->spec().action_high, 3, 0.5);
  SweepConfig c;
  c.attack.population_size = 4;
  c.attack.generations = 1;
  c.attack.episodes_per_fitness = 1;
  c.eval_episodes = 2;
  const auto rows = sweep_epsilon(*env, policy, c);
  REQUIRE(rows.size() == 5);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].epsilon == doctest::Approx(0.1 * static_cast<double>(k + 1)));
    CHECK(inside_box(rows[k].delta, rows[k].epsilon));
  }
  const auto csv = sweep_csv(rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}
