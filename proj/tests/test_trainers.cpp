#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "actrob/eval.hpp"
#include "actrob/trainers.hpp"
#include "test_support.hpp"

using namespace actrob;

namespace {

double normal_mean(const Environment& env, const MlpPolicy& policy, int episodes, std::uint64_t seed) {
  EvalConfig c;
  c.episodes = episodes;
  c.base_seed = seed;
  return evaluate(env, policy, c).mean;
}

SearchConfig runner_search(std::uint64_t seed, int iterations) {
  SearchConfig c;
  c.iterations = iterations;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("zero iterations returns the initial policy") {
  auto env = make_environment("runner-lite");
  const auto cfg = runner_search(3, 0);
  const auto result = train_policy_search(*env, cfg);
  const auto initial = initial_search_policy(*env, cfg);
  CHECK(std::equal(result.expert.parameters().begin(), result.expert.parameters().end(),
                   initial.parameters().begin(), initial.parameters().end()));
  CHECK(result.expert.layer_sizes() == initial.layer_sizes());
  CHECK(result.best_history.empty());
}

TEST_CASE("search beats the zero policy and is deterministic") {
  auto env = make_environment("runner-lite");
  const auto cfg = runner_search(1, 200);
  const auto a = train_policy_search(*env, cfg);
  const auto b = train_policy_search(*env, cfg);
  CHECK(serialize_policy(a.expert) == serialize_policy(b.expert));

  MlpPolicy zero({9, 16, 6}, env->spec().action_low, env->spec().action_high);
  const double zero_mean = normal_mean(*env, zero, 20, 5);
  const double expert_mean = normal_mean(*env, a.expert, 20, 5);
  CHECK(expert_mean > zero_mean);
  for (std::size_t k = 1; k < a.best_history.size(); ++k) CHECK(a.best_history[k] >= a.best_history[k - 1]);
  CHECK(a.expert_fitness >= a.medium_fitness);
}

TEST_CASE("search records a warning when it never improves") {
  // Reward does not depend on the action, so no candidate can beat the start.
  testing::LambdaEnvironment flat(
      2, 1, [](std::span<const double>, std::span<const double>) { return 1.0; }, true);
  SearchConfig c;
  c.hidden = {};
  c.iterations = 3;
  c.population = 4;
  const auto r = train_policy_search(flat, c);
  CHECK_FALSE(r.warnings.empty());
  CHECK(r.expert.parameters().size() == MlpPolicy::parameter_count(std::vector<int>{2, 1}));
}

TEST_CASE("search config validation") {
  SearchConfig c;
  c.population = 1;
  CHECK_THROWS(c.validate());
}

TEST_CASE("linear cloner recovers a tanh-linear teacher") {
  const Vector low = {-1.0, -1.0};
  const Vector high = {1.0, 1.0};
  MlpPolicy teacher({3, 2}, low, high);
  const Vector w = {0.5, -0.3, 0.8, -0.6, 0.2, 0.4, 0.1, -0.2};
  teacher.set_parameters(w);

  TransitionDataset ds;
  ds.meta.env = "synthetic";
  Rng rng(11);
  for (int n = 0; n < 10000; ++n) {
    Transition t;
    t.state = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    t.action = teacher.mean_action(t.state);
    t.next_state = t.state;
    t.terminal = true;
    t.episode_id = n;
    ds.transitions.push_back(std::move(t));
  }
  CloneConfig c;
  c.hidden = {};
  c.epochs = 300;
  c.learning_rate = 1e-2;
  c.seed = 2;
  const auto result = behavior_clone(ds, c, low, high);
  const auto learned = result.policy.parameters();
  REQUIRE(learned.size() == w.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) worst = std::max(worst, std::abs(learned[k] - w[k]));
  CHECK(worst <= 1e-3);
  CHECK(result.final_loss < 1e-7);
  CHECK(result.loss_history.size() == 300);
}

TEST_CASE("constant data is fitted") {
  TransitionDataset ds;
  ds.meta.env = "synthetic";
  for (int n = 0; n < 64; ++n) ds.transitions.push_back({{0.5, -0.5}, {0.3, -0.7}, {0.5, -0.5}, 0.0, true, n});
  CloneConfig c;
  c.epochs = 400;
  c.batch_size = 16;
  c.learning_rate = 1e-2;
  const auto r = behavior_clone(ds, c, Vector(2, -1.0), Vector(2, 1.0));
  const auto a = r.policy.mean_action(Vector{0.5, -0.5});
  CHECK(a[0] == doctest::Approx(0.3).epsilon(1e-3));
  CHECK(a[1] == doctest::Approx(-0.7).epsilon(1e-3));
  CHECK(clone_loss(r.policy, ds) == doctest::Approx(r.final_loss));
}

TEST_CASE("cloning an empty dataset is rejected") {
  CHECK_THROWS_AS(behavior_clone(TransitionDataset{}, CloneConfig{}, Vector(1, -1.0), Vector(1, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("expert clone stays within 20 percent of its teacher") {
  auto env = make_environment("runner-lite");
  const auto search = train_policy_search(*env, runner_search(1, 100));
  const double teacher = normal_mean(*env, search.expert, 20, 9);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto ds = generate_dataset(*env, search.expert, 10000, seed);
    CloneConfig c;
    c.epochs = 100;
    c.seed = seed;
    const auto clone = behavior_clone(ds, c, env->spec().action_low, env->spec().action_high);
    const double student = normal_mean(*env, clone.policy, 20, 9);
    CHECK(std::abs(student - teacher) <= 0.2 * std::abs(teacher));
  }
}
