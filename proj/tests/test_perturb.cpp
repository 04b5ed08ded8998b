#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "actrob/perturb.hpp"
#include "test_support.hpp"

using namespace actrob;

TEST_CASE("apply with zero delta is the identity") {
  const Vector a = {0.5, -0.2};
  CHECK(apply_perturbation(a, Vector{0.0, 0.0}) == a);
}

TEST_CASE("apply scales each coordinate") {
  const auto out = apply_perturbation(Vector{1.0, 1.0, 1.0}, Vector{0.3, -0.3, 0.0});
  CHECK(out[0] == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(out[2] == 1.0);
}

TEST_CASE("apply fixes the origin and does not clip") {
  CHECK(apply_perturbation(Vector{0.0, 0.0}, Vector{0.3, -0.5}) == Vector{0.0, 0.0});
  CHECK(apply_perturbation(Vector{1.0}, Vector{0.5})[0] == 1.5);
}

TEST_CASE("apply rejects length mismatch") {
  CHECK_THROWS_AS(apply_perturbation(Vector{1.0, 2.0}, Vector{0.1}), DimensionError);
}

TEST_CASE("normal sample is a zero vector") {
  Rng rng(1);
  const auto p = sample_perturbation(PerturbationCondition::normal(), 6, rng);
  CHECK(p.delta == Vector(6, 0.0));
  CHECK(p.condition == Condition::kNormal);
}

TEST_CASE("adversarial sample passes the vector through") {
  Rng rng(1);
  const Vector d = {0.3, -0.3, 0.3};
  const auto p = sample_perturbation(PerturbationCondition::adversarial(d, 0.3), 3, rng);
  CHECK(p.delta == d);
  CHECK_THROWS(PerturbationCondition::adversarial({0.4}, 0.3));
  CHECK_THROWS(sample_perturbation(PerturbationCondition::adversarial(d, 0.3), 2, rng));
}

TEST_CASE("random samples are uniform on the box") {
  Rng rng(2024);
  const std::size_t n = 100000;
  std::vector<Vector> dims(3);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = sample_perturbation(PerturbationCondition::random(0.3), 3, rng);
    REQUIRE(inside_box(p.delta, 0.3));
    for (std::size_t j = 0; j < 3; ++j) dims[j].push_back(p.delta[j]);
  }
  for (const auto& xs : dims) {
    CHECK(*std::min_element(xs.begin(), xs.end()) >= -0.3);
    CHECK(*std::max_element(xs.begin(), xs.end()) <= 0.3);
    CHECK(std::abs(mean(xs)) < 0.005);
    CHECK(testing::ks_uniform_statistic(xs, -0.3, 0.3) < testing::ks_critical_001(n));
  }
}

TEST_CASE("random with zero strength gives zeros") {
  Rng rng(3);
  CHECK(sample_perturbation(PerturbationCondition::random(0.0), 4, rng).delta == Vector(4, 0.0));
}

TEST_CASE("clip_box") {
  CHECK(clip_box(Vector{0.7, -0.9, 0.1}, 0.3) == Vector{0.3, -0.3, 0.1});
  const Vector inside = {0.1, -0.2};
  CHECK(clip_box(inside, 0.3) == inside);
  CHECK(clip_box(Vector{0.7, -0.9}, 0.0) == Vector{0.0, 0.0});
}

TEST_CASE("condition names round-trip") {
  for (auto c : {Condition::kNormal, Condition::kRandom, Condition::kAdversarial})
    CHECK(parse_condition(to_string(c)) == c);
  CHECK_THROWS(parse_condition("gaussian"));
}
