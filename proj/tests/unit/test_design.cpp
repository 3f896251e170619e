#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandit/design.hpp"
#include "bandit/errors.hpp"
#include "bandit/rng.hpp"
#include "doctest.h"

using bandit::DesignWeights;
using bandit::Rng;
using bandit::Vector;

namespace {

std::vector<Vector> basis_set(int d) {
  std::vector<Vector> X;
  for (int i = 0; i < d; ++i) X.push_back(Vector::Unit(d, i));
  return X;
}

double weight_sum(const DesignWeights& w) {
  double s = 0.0;
  for (double v : w.weights) s += v;
  return s;
}

}  // namespace

TEST_SUITE("design") {

TEST_CASE("orthonormal basis gets the uniform design") {
  for (int d : {2, 3, 8}) {
    const auto X = basis_set(d);
    const DesignWeights w = bandit::g_optimal_design(X);
    REQUIRE(w.weights.size() == static_cast<std::size_t>(d));
    CHECK(weight_sum(w) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : w.weights) CHECK(v == doctest::Approx(1.0 / d).epsilon(1e-9));
    // At the uniform optimum every direction has normalized variance ~ d.
    const double crit = bandit::design_criterion(X, w.weights, w.epsilon_reg);
    CHECK(crit <= d * 1.05 + 1e-9);
    CHECK(crit >= d * 0.99);
  }
}

TEST_CASE("duplicate directions share the mass of their axis") {
  std::vector<Vector> X = {Vector::Unit(2, 0), Vector::Unit(2, 0), Vector::Unit(2, 1)};
  const DesignWeights w = bandit::g_optimal_design(X);
  CHECK(w.weights[0] + w.weights[1] == doctest::Approx(0.5).epsilon(0.06));
  CHECK(w.weights[2] == doctest::Approx(0.5).epsilon(0.06));
  CHECK(bandit::design_criterion(X, w.weights, w.epsilon_reg) <= 2.0 * 1.05 + 1e-9);
}

TEST_CASE("rank-deficient sets are handled by the ridge term") {
  std::vector<Vector> X = {Vector::Unit(3, 0), -Vector::Unit(3, 0)};
  const DesignWeights w = bandit::g_optimal_design(X);
  CHECK(weight_sum(w) == doctest::Approx(1.0));
  // Both vectors span one axis, so the criterion sits near 1, far below 2d.
  CHECK(bandit::design_criterion(X, w.weights, w.epsilon_reg) <= 1.5);
}

TEST_CASE("all-zero sets fall back to uniform weights") {
  std::vector<Vector> X = {Vector::Zero(4), Vector::Zero(4), Vector::Zero(4)};
  const DesignWeights w = bandit::g_optimal_design(X);
  for (double v : w.weights) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("random sets always reach the universal variance bound") {
  Rng rng(404);
  for (int rep = 0; rep < 40; ++rep) {
    const int d = 2 + static_cast<int>(rng.next_u64() % 5);  // 2..6
    const int K = d + static_cast<int>(rng.next_u64() % 10);
    std::vector<Vector> X;
    for (int i = 0; i < K; ++i) X.push_back(rng.uniform(0.2, 1.0) * rng.unit_sphere(d));
    const DesignWeights w = bandit::g_optimal_design(X);
    CHECK(weight_sum(w) == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : w.weights) CHECK(v >= 0.0);
    CHECK(bandit::design_criterion(X, w.weights, w.epsilon_reg) <= 2.0 * d);
  }
}

TEST_CASE("iteration cap failure carries the criterion value") {
  // Uniform initialization concentrates on one axis; a single step cannot
  // repair the remaining axes, so the cap trips with criterion above 2d.
  std::vector<Vector> X = basis_set(4);
  for (int i = 0; i < 96; ++i) X.push_back(Vector::Unit(4, 0));
  CHECK_THROWS_AS(bandit::g_optimal_design(X, -1.0, 2), bandit::numerical_error);
  try {
    bandit::g_optimal_design(X, -1.0, 2);
  } catch (const bandit::numerical_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("criterion") != std::string::npos);
    CHECK(msg.find("exceeds") != std::string::npos);
  }
  // With the default cap the same set converges fine.
  const DesignWeights w = bandit::g_optimal_design(X);
  CHECK(bandit::design_criterion(X, w.weights, w.epsilon_reg) <= 8.0);
}

TEST_CASE("criterion validates its inputs") {
  const auto X = basis_set(3);
  CHECK_THROWS_AS(bandit::design_criterion(X, {0.5, 0.5}, 1e-9), std::invalid_argument);
  CHECK_THROWS_AS(bandit::design_criterion(X, {0.5, 0.6, -0.1}, 1e-9), std::invalid_argument);
  CHECK_THROWS_AS(bandit::g_optimal_design({}), std::invalid_argument);
  std::vector<Vector> ragged = {Vector::Unit(3, 0), Vector::Unit(2, 0)};
  CHECK_THROWS_AS(bandit::g_optimal_design(ragged), std::invalid_argument);
}

TEST_CASE("design sampling matches the weights") {
  DesignWeights w;
  w.weights = {0.2, 0.0, 0.8};
  Rng rng(71);
  int counts[3] = {0, 0, 0};
  const int n = 20000;
  for (int s = 0; s < n; ++s) counts[bandit::sample_design(w, rng)]++;
  CHECK(counts[1] == 0);
  CHECK(static_cast<double>(counts[2]) / n == doctest::Approx(0.8).epsilon(0.03));

  Rng r1(9), r2(9);
  for (int s = 0; s < 50; ++s) CHECK(bandit::sample_design(w, r1) == bandit::sample_design(w, r2));
}

}  // TEST_SUITE
