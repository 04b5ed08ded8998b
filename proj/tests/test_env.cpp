#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "actrob/core.hpp"
#include "actrob/env.hpp"
#include "actrob/io.hpp"

using namespace actrob;

TEST_CASE("derive_seed is stable and path sensitive") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}

TEST_CASE("parallel_for covers every index once for any worker count") {
  for (int workers : {1, 3, 8}) {
    std::vector<int> hits(97, 0);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
}

TEST_CASE("parallel_for rethrows task failures") {
  CHECK_THROWS_AS(parallel_for(10, 4, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("format_double round-trips") {
  for (double x : {0.1, -2.5e-300, 1.0 / 3.0, 12345.678}) CHECK(parse_double(format_double(x)) == x);
  CHECK_THROWS(parse_double("1.0x"));
}

TEST_CASE("population_std of a constant sample is zero") {
  const Vector v = {3.0, 3.0, 3.0};
  CHECK(mean(v) == 3.0);
  CHECK(population_std(v) == 0.0);
}

TEST_CASE("atomic writes create parent directories") {
  const std::string path = "test_env_tmp/sub/file.txt";
  write_file_atomic(path, "hello");
  CHECK(read_file(path) == "hello");
  CHECK(file_hash(path) == hex64(fnv1a("hello")));
}

TEST_CASE("built-in environment dimensions and defaults") {
  auto hopper = make_environment("hopper-lite");
  auto runner = make_environment("runner-lite");
  auto quad = make_environment("quad-lite");
  CHECK(hopper->spec().action_dim == 3);
  CHECK(runner->spec().action_dim == 6);
  CHECK(quad->spec().action_dim == 8);
  CHECK(hopper->spec().max_steps == 1000);
  CHECK(default_epsilon("hopper-lite") == 0.3);
  CHECK(default_epsilon("runner-lite") == 0.3);
  CHECK(default_epsilon("quad-lite") == 0.5);
  CHECK(default_population_size("hopper-lite") == 45);
  CHECK(default_population_size("runner-lite") == 90);
  CHECK(default_population_size("quad-lite") == 120);
  CHECK_THROWS_AS(make_environment("walker"), std::invalid_argument);
  CHECK_THROWS_AS(default_epsilon("walker"), std::invalid_argument);
  CHECK_THROWS_AS(make_environment("hopper-lite", {{"no_such_param", 1.0}}), std::invalid_argument);
  CHECK(make_environment("hopper-lite", {{"max_steps", 50}})->spec().max_steps == 50);
}

TEST_CASE("reset is deterministic per seed") {
  auto env = make_environment("hopper-lite");
  CHECK(env->reset(7) == env->reset(7));
  CHECK(env->reset(7) != env->reset(8));
}

TEST_CASE("quad-lite reset stays within the documented support") {
  auto env = make_environment("quad-lite");
  const auto s = env->reset(0);
  const auto pose = env->canonical_pose();
  REQUIRE(s.size() == static_cast<std::size_t>(env->spec().state_dim));
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i] >= pose[i] - env->dynamics().reset_noise);
    CHECK(s[i] <= pose[i] + env->dynamics().reset_noise);
  }
}

TEST_CASE("runner-lite at rest with zero action earns exactly the alive bonus") {
  auto env = make_environment("runner-lite");
  auto s = env->reset(3);
  s[0] = 0.0;
  const Vector a(6, 0.0);
  CHECK(env->step(s, a).reward == 1.0);
}

TEST_CASE("hopper-lite reward at v=2 with unit action") {
  auto env = make_environment("hopper-lite");
  auto s = env->canonical_pose();
  s[0] = 2.0;
  const Vector a = {1.0, 1.0, 1.0};
  // 2.0 - 0.001 * 3 + 1
  CHECK(env->step(s, a).reward == doctest::Approx(2.997).epsilon(1e-12));
}

TEST_CASE("quad-lite reward includes the contact term") {
  auto env = make_environment("quad-lite");
  auto s = env->canonical_pose();
  s[0] = 0.5;
  Vector a(8, 0.0);
  a[1] = 0.4;
  const auto f = env->contact_forces(s, a);
  REQUIRE(f.size() == 4);
  const double expected = 0.5 - 0.5 * squared_norm(a) - 0.5e-3 * squared_norm(f) + 1.0;
  CHECK(env->step(s, a).reward == doctest::Approx(expected).epsilon(1e-12));
  CHECK(make_environment("runner-lite")->contact_forces(make_environment("runner-lite")->canonical_pose(), Vector(6, 0.0)).empty());
}

TEST_CASE("quad-lite inverted body terminates") {
  auto env = make_environment("quad-lite");
  auto s = env->canonical_pose();
  s[1] = std::numbers::pi;  // roll upside down
  const auto r = env->step(s, Vector(8, 0.0));
  CHECK(r.terminated);
  CHECK_FALSE(r.truncated);
}

TEST_CASE("hopper-lite falls when the height drops") {
  auto env = make_environment("hopper-lite");
  auto s = env->canonical_pose();
  s[static_cast<std::size_t>(env->height_index())] = 0.5;
  CHECK(env->failed(s));
  CHECK_FALSE(env->failed(env->canonical_pose()));
}

TEST_CASE("runner-lite never fails") {
  auto env = make_environment("runner-lite");
  auto s = env->canonical_pose();
  s[1] = std::numbers::pi;
  CHECK_FALSE(env->failed(s));
}

TEST_CASE("step rejects wrong action length") {
  auto env = make_environment("hopper-lite");
  const auto s = env->canonical_pose();
  try {
    env->step(s, Vector(2, 0.0));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(e.expected() == 3);
    CHECK(e.actual() == 2);
  }
  CHECK_THROWS_AS(env->step(Vector(3, 0.0), Vector(3, 0.0)), DimensionError);
}

TEST_CASE("step is pure") {
  auto env = make_environment("quad-lite");
  const auto s = env->reset(11);
  const Vector a = {0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8};
  const auto r1 = env->step(s, a);
  const auto r2 = env->step(s, a);
  CHECK(r1.next_state == r2.next_state);
  CHECK(r1.reward == r2.reward);
}

TEST_CASE("spec validation rejects inverted bounds") {
  EnvironmentSpec spec;
  spec.name = "bad";
  spec.action_low = {1.0};
  spec.action_high = {-1.0};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
