#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "bandit/environment.hpp"
#include "bandit/errors.hpp"
#include "bandit/rng.hpp"
#include "doctest.h"

using bandit::BanditInstance;
using bandit::ContextLawKind;
using bandit::ContextSet;
using bandit::NoiseKind;
using bandit::Rng;
using bandit::Vector;

namespace {

BanditInstance two_set_instance() {
  BanditInstance inst;
  inst.d = 2;
  inst.K = 2;
  inst.noise = NoiseKind::Gaussian;
  inst.law = ContextLawKind::FiniteSupport;
  inst.theta = Vector::Zero(2);
  inst.theta << 0.5, -0.25;
  ContextSet a;
  a.vectors = {Vector::Unit(2, 0), Vector::Unit(2, 1)};
  ContextSet b;
  b.vectors = {-Vector::Unit(2, 0), 0.5 * Vector::Unit(2, 1)};
  inst.support = {a, b};
  inst.probs = {0.25, 0.75};
  return inst;
}

}  // namespace

TEST_SUITE("environment") {

TEST_CASE("fixed-set law always returns the single stored set") {
  BanditInstance inst = bandit::make_group1_instance(4, 2);
  Rng rng(11);
  for (int s = 0; s < 10; ++s) {
    int idx = -7;
    ContextSet set = bandit::sample_context(inst, rng, &idx);
    CHECK(idx == 0);
    REQUIRE(set.K() == 4);
    for (int a = 0; a < 4; ++a) {
      CHECK(set.vectors[static_cast<std::size_t>(a)] == Vector::Unit(4, a));
    }
  }
}

TEST_CASE("finite-support law draws sets with the configured frequencies") {
  BanditInstance inst = two_set_instance();
  bandit::audit_instance(inst);
  Rng rng(5);
  const int n = 20000;
  int count_b = 0;
  for (int s = 0; s < n; ++s) {
    int idx = -1;
    bandit::sample_context(inst, rng, &idx);
    REQUIRE((idx == 0 || idx == 1));
    count_b += (idx == 1);
  }
  const double freq = static_cast<double>(count_b) / n;
  CHECK(freq == doctest::Approx(0.75).epsilon(0.03));
}

TEST_CASE("generator law emits K unit-norm vectors and reports index -1") {
  BanditInstance inst = bandit::make_random_instance(6, 5, 99);
  Rng rng(17);
  int idx = 0;
  ContextSet set = bandit::sample_context(inst, rng, &idx);
  CHECK(idx == -1);
  REQUIRE(set.K() == 5);
  REQUIRE(set.d() == 6);
  for (const Vector& x : set.vectors) {
    CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("same seed reproduces the same context stream") {
  BanditInstance inst = bandit::make_random_instance(4, 3, 7);
  Rng r1(123), r2(123);
  for (int s = 0; s < 5; ++s) {
    ContextSet a = bandit::sample_context(inst, r1);
    ContextSet b = bandit::sample_context(inst, r2);
    for (int k = 0; k < a.K(); ++k) {
      CHECK(a.vectors[static_cast<std::size_t>(k)] == b.vectors[static_cast<std::size_t>(k)]);
    }
  }
}

TEST_CASE("gaussian rewards center on the linear mean") {
  BanditInstance inst = two_set_instance();
  Rng rng(31);
  const Vector x = inst.support[0].vectors[0];  // mean 0.5
  double sum = 0.0;
  const int n = 40000;
  for (int s = 0; s < n; ++s) sum += bandit::sample_reward(inst, x, rng);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("rademacher rewards take exactly the two shifted values") {
  BanditInstance inst = two_set_instance();
  inst.noise = NoiseKind::Rademacher;
  Rng rng(32);
  const Vector x = inst.support[1].vectors[1];  // mean -0.125
  int plus = 0;
  for (int s = 0; s < 2000; ++s) {
    const double r = bandit::sample_reward(inst, x, rng);
    const bool hi = std::abs(r - (-0.125 + 1.0)) < 1e-12;
    const bool lo = std::abs(r - (-0.125 - 1.0)) < 1e-12;
    REQUIRE((hi || lo));
    plus += hi;
  }
  CHECK(plus > 800);
  CHECK(plus < 1200);
}

TEST_CASE("bernoulli rewards are 0/1 with frequency matching the mean") {
  BanditInstance inst = bandit::make_group3_instance(3, 2, 0.2);
  Rng rng(33);
  const Vector x = Vector::Unit(3, 1);  // mean 0.7
  int ones = 0;
  const int n = 20000;
  for (int s = 0; s < n; ++s) {
    const double r = bandit::sample_reward(inst, x, rng);
    REQUIRE((r == 0.0 || r == 1.0));
    ones += (r == 1.0);
  }
  CHECK(static_cast<double>(ones) / n == doctest::Approx(0.7).epsilon(0.03));
}

TEST_CASE("bernoulli reward rejects means outside the unit interval") {
  BanditInstance inst = bandit::make_group3_instance(3, 1, 0.1);
  Rng rng(34);
  Vector bad = -Vector::Unit(3, 0);  // mean -0.6
  CHECK_THROWS_AS(bandit::sample_reward(inst, bad, rng), std::invalid_argument);
}

TEST_CASE("audit rejects malformed instances") {
  BanditInstance inst = two_set_instance();

  SUBCASE("theta entry above one") {
    inst.theta(0) = 1.5;
    CHECK_THROWS_AS(bandit::audit_instance(inst), std::invalid_argument);
  }
  SUBCASE("probabilities do not sum to one") {
    inst.probs = {0.25, 0.25};
    CHECK_THROWS_AS(bandit::audit_instance(inst), std::invalid_argument);
  }
  SUBCASE("support set with wrong arm count") {
    inst.support[1].vectors.pop_back();
    CHECK_THROWS_AS(bandit::audit_instance(inst), std::invalid_argument);
  }
  SUBCASE("mean magnitude above one") {
    inst.support[0].vectors[0] = 3.0 * Vector::Unit(2, 0);
    CHECK_THROWS_AS(bandit::audit_instance(inst), std::invalid_argument);
  }
  SUBCASE("bernoulli noise with negative mean") {
    inst.noise = NoiseKind::Bernoulli;  // set 2 arm 1 is -e1, mean -0.5
    CHECK_THROWS_AS(bandit::audit_instance(inst), std::invalid_argument);
  }
}

TEST_CASE("random instances are reproducible and respect the mean bound") {
  BanditInstance a = bandit::make_random_instance(5, 4, 2024);
  BanditInstance b = bandit::make_random_instance(5, 4, 2024);
  CHECK(a.theta == b.theta);
  CHECK(a.theta.norm() <= 1.0 + 1e-12);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(a.theta(i)) <= 1.0);

  Rng rng(3);
  for (int s = 0; s < 200; ++s) {
    ContextSet set = bandit::sample_context(a, rng);
    for (const Vector& x : set.vectors) {
      CHECK(std::abs(x.dot(a.theta)) <= 1.0 + 1e-12);
    }
  }

  BanditInstance c = bandit::make_random_instance(5, 4, 2025);
  CHECK(a.theta != c.theta);
}

TEST_CASE("group-1 family: orthonormal arms, one unit mean") {
  BanditInstance inst = bandit::make_group1_instance(6, 4);
  CHECK(inst.noise == NoiseKind::Bernoulli);
  CHECK(inst.K == 6);
  CHECK(inst.d == 6);
  const ContextSet& set = inst.support.at(0);
  for (int j = 0; j < 6; ++j) {
    const double mu = set.vectors[static_cast<std::size_t>(j)].dot(inst.theta);
    CHECK(mu == doctest::Approx(j == 3 ? 1.0 : 0.0));
    CHECK(bandit::arm_id_from_vector(inst, set.vectors[static_cast<std::size_t>(j)]) == j + 1);
  }
  CHECK_THROWS_AS(bandit::make_group1_instance(4, 5), std::invalid_argument);
  CHECK_THROWS_AS(bandit::make_group1_instance(4, 0), std::invalid_argument);
}

TEST_CASE("group-2 family: shared arms plus one designated arm per set") {
  const int d = 8, h = 4;           // d1 = 4 sets, h1 = 2 common arms
  std::vector<int> sigma = {3, 1, 0, 2, 7, 6, 5, 4};
  std::map<int, int> signs = {{3, 1}, {4, -1}, {5, 1}, {6, 1}};
  const double eps = 0.1;
  BanditInstance inst = bandit::make_group2_instance(d, h, sigma, signs, eps);

  CHECK(inst.K == h);
  CHECK(inst.support.size() == 4);
  for (double p : inst.probs) CHECK(p == doctest::Approx(0.25));

  for (int i = 0; i < 4; ++i) {
    const ContextSet& set = inst.support[static_cast<std::size_t>(i)];
    REQUIRE(set.K() == h);
    // Two common arms first, then the designated arm duplicated to fill h.
    CHECK(bandit::arm_id_from_vector(inst, set.vectors[0]) == 1);
    CHECK(bandit::arm_id_from_vector(inst, set.vectors[1]) == 2);
    CHECK(bandit::arm_id_from_vector(inst, set.vectors[2]) == 2 + (i + 1));
    CHECK(set.vectors[2] == set.vectors[3]);
    CHECK(set.vectors[0].dot(inst.theta) == doctest::Approx(0.5));
    CHECK(set.vectors[1].dot(inst.theta) == doctest::Approx(0.5));
    const double want = (i + 3 == 4) ? 0.5 - eps : 0.5 + eps;
    CHECK(set.vectors[2].dot(inst.theta) == doctest::Approx(want));
  }

  SUBCASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(bandit::make_group2_instance(7, 4, sigma, signs, eps),
                    std::invalid_argument);
    CHECK_THROWS_AS(bandit::make_group2_instance(d, h, {0, 1, 2}, signs, eps),
                    std::invalid_argument);
    std::vector<int> dup = sigma;
    dup[1] = dup[0];
    CHECK_THROWS_AS(bandit::make_group2_instance(d, h, dup, signs, eps), std::invalid_argument);
    CHECK_THROWS_AS(bandit::make_group2_instance(d, h, sigma, {{1, 1}}, eps),
                    std::invalid_argument);
    CHECK_THROWS_AS(bandit::make_group2_instance(d, h, sigma, signs, 0.3),
                    std::invalid_argument);
  }
}

TEST_CASE("group-3 family: flat means with one elevated arm, or none") {
  BanditInstance inst = bandit::make_group3_instance(5, 3, 0.05);
  const ContextSet& set = inst.support.at(0);
  for (int j = 0; j < 5; ++j) {
    const double mu = set.vectors[static_cast<std::size_t>(j)].dot(inst.theta);
    CHECK(mu == doctest::Approx(j == 2 ? 0.55 : 0.5));
  }

  BanditInstance null_inst = bandit::make_group3_instance(5, 0, 0.05);
  for (int j = 0; j < 5; ++j) CHECK(null_inst.theta(j) == doctest::Approx(0.5));

  CHECK_THROWS_AS(bandit::make_group3_instance(5, 6, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(bandit::make_group3_instance(5, 1, 0.3), std::invalid_argument);
}

TEST_CASE("instances survive a JSON round trip") {
  std::vector<BanditInstance> cases;
  cases.push_back(two_set_instance());
  cases.back().family = "custom";
  cases.push_back(bandit::make_group1_instance(3, 1));
  cases.push_back(bandit::make_group2_instance(4, 2, bandit::identity_permutation(4),
                                               {{2, -1}, {3, 1}}, 0.125));
  cases.push_back(bandit::make_group3_instance(4, 2, 0.0625));
  cases.push_back(bandit::make_random_instance(3, 2, 55));

  for (const BanditInstance& inst : cases) {
    const nlohmann::json j = bandit::instance_to_json(inst);
    const BanditInstance back = bandit::instance_from_json(j);
    CHECK(back.d == inst.d);
    CHECK(back.K == inst.K);
    CHECK(back.family == inst.family);
    CHECK(back.noise == inst.noise);
    CHECK(back.law == inst.law);
    CHECK(back.theta == inst.theta);
    REQUIRE(back.support.size() == inst.support.size());
    for (std::size_t s = 0; s < inst.support.size(); ++s) {
      REQUIRE(back.support[s].K() == inst.support[s].K());
      for (int k = 0; k < inst.support[s].K(); ++k) {
        CHECK(back.support[s].vectors[static_cast<std::size_t>(k)] ==
              inst.support[s].vectors[static_cast<std::size_t>(k)]);
      }
    }
    CHECK(back.probs == inst.probs);
    CHECK(back.sigma == inst.sigma);
  }
}

TEST_CASE("malformed JSON raises a configuration error") {
  nlohmann::json j = bandit::instance_to_json(bandit::make_group1_instance(3, 1));
  j.erase("theta");
  CHECK_THROWS_AS(bandit::instance_from_json(j), bandit::config_error);

  nlohmann::json bad_noise = bandit::instance_to_json(bandit::make_group1_instance(3, 1));
  bad_noise["noise"] = "cauchy";
  CHECK_THROWS_AS(bandit::instance_from_json(bad_noise), bandit::config_error);
}

}  // TEST_SUITE
