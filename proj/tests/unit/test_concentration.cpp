#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandit/concentration.hpp"
#include "bandit/environment.hpp"
#include "bandit/errors.hpp"
#include "bandit/exploration.hpp"
#include "bandit/linalg.hpp"
#include "bandit/rng.hpp"
#include "doctest.h"

using bandit::ClipReplayState;
using bandit::ContextSet;
using bandit::MartingaleFamily;
using bandit::MartingaleSpec;
using bandit::Rng;
using bandit::SymMatrix;
using bandit::Vector;
using bandit::ViolationReport;

namespace {

double rate(long long violations, long long trials) {
  return static_cast<double>(violations) / static_cast<double>(trials);
}

double mc_ceiling(double delta, long long trials) {
  return delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
}

}  // namespace

TEST_SUITE("concentration") {

TEST_CASE("scalar fixed-bound sandwich holds at the documented rate") {
  MartingaleSpec spec;
  spec.d = 7;  // forced to 1 by the scalar entry point
  spec.n = 100;
  spec.epsilon = 0.5;
  spec.delta = 0.05;
  spec.family = MartingaleFamily::FixedBoundProjectors;
  Rng rng(701);
  ViolationReport report = bandit::simulate_scalar_concentration(spec, 2000, rng);
  CHECK(report.trials == 2000);
  CHECK(rate(report.upper_violations, report.trials) <= 0.05);
  CHECK(rate(report.lower_violations, report.trials) <= 0.05);
  CHECK(report.bound_matrix_condition.max_cond == doctest::Approx(1.0));  // scalars
}

TEST_CASE("deterministic increments never violate the sandwich") {
  MartingaleSpec spec;
  spec.d = 3;
  spec.n = 50;
  spec.epsilon = 0.1;
  spec.delta = 1e-3;
  spec.family = MartingaleFamily::Deterministic;
  Rng rng(702);
  ViolationReport report = bandit::simulate_dynamic_concentration(spec, 500, rng);
  CHECK(report.upper_violations == 0);
  CHECK(report.lower_violations == 0);

  spec.epsilon = 0.9;
  Rng rng2(703);
  ViolationReport scalar = bandit::simulate_scalar_concentration(spec, 300, rng2);
  CHECK(scalar.upper_violations == 0);
  CHECK(scalar.lower_violations == 0);
}

TEST_CASE("epsilon near one makes the additive slack dominate small horizons") {
  MartingaleSpec spec;
  spec.n = 10;
  spec.epsilon = 0.9;
  spec.delta = 0.05;
  spec.family = MartingaleFamily::FixedBoundProjectors;
  Rng rng(704);
  ViolationReport report = bandit::simulate_scalar_concentration(spec, 300, rng);
  CHECK(report.upper_violations == 0);
  CHECK(report.lower_violations == 0);
}

TEST_CASE("growing-bound rank-one family at the documented grid point") {
  MartingaleSpec spec;
  spec.d = 4;
  spec.n = 200;
  spec.epsilon = 0.3;
  spec.delta = 0.02;
  spec.family = MartingaleFamily::GrowingBoundRankOne;
  Rng rng(705);
  ViolationReport report = bandit::simulate_dynamic_concentration(spec, 5000, rng);
  CHECK(rate(report.upper_violations, report.trials) <= 0.02);
  CHECK(rate(report.lower_violations, report.trials) <= 0.02);
  CHECK(report.bound_matrix_condition.min_cond >= 1.0);
  CHECK(std::isfinite(report.bound_matrix_condition.mean_cond));
}

TEST_CASE("replay state mirrors the exploration learner sample for sample") {
  const int d = 3;
  const double kappa = 1e-3;
  const double L = 0.2;
  Rng rng(706);

  std::vector<ContextSet> support(3);
  for (ContextSet& s : support) {
    for (int a = 0; a < 2; ++a) s.vectors.push_back(rng.unit_sphere(d));
  }
  std::vector<ContextSet> drawn;
  for (int i = 0; i < 40; ++i) {
    drawn.push_back(support[static_cast<std::size_t>(rng.categorical({0.2, 0.5, 0.3}))]);
  }
  drawn[10] = ContextSet{};  // the learner must skip and the replay must agree

  bandit::LearnTrace trace;
  bandit::learn_exploration_policy(drawn, kappa, L, &trace);

  ClipReplayState replay(d, kappa, L);
  for (std::size_t i = 0; i < drawn.size(); ++i) {
    replay.step(drawn[i]);
    CHECK(replay.last_chosen_index() == trace.chosen_index[i]);
    CHECK(replay.last_clip_factor() == doctest::Approx(trace.clip_factor[i]).epsilon(1e-12));
    CHECK(replay.log_det_updated() == doctest::Approx(trace.log_det_after[i]).epsilon(1e-12));
  }
}

TEST_CASE("replay family with an explicit finite law satisfies the sandwich") {
  MartingaleSpec spec;
  spec.d = 2;
  spec.n = 60;
  spec.epsilon = 0.5;
  spec.delta = 0.05;
  spec.family = MartingaleFamily::ClippedBanditReplay;
  spec.replay_kappa = 1e-4;
  spec.replay_L = 0.25;
  ContextSet a;
  a.vectors = {Vector::Unit(2, 0), Vector::Unit(2, 1)};
  ContextSet b;
  Vector slanted(2);
  slanted << 0.6, 0.8;
  b.vectors = {slanted, Vector::Unit(2, 0)};
  spec.replay_support = {a, b};
  spec.replay_probs = {0.3, 0.7};

  Rng rng(707);
  ViolationReport report = bandit::simulate_dynamic_concentration(spec, 400, rng);
  CHECK(rate(report.upper_violations, report.trials) <= mc_ceiling(spec.delta, report.trials));
  CHECK(rate(report.lower_violations, report.trials) <= mc_ceiling(spec.delta, report.trials));
}

TEST_CASE("replay family draws a fresh law per trial when none is given") {
  MartingaleSpec spec;
  spec.d = 3;
  spec.n = 40;
  spec.epsilon = 0.4;
  spec.delta = 0.05;
  spec.family = MartingaleFamily::ClippedBanditReplay;
  Rng rng(708);
  ViolationReport report = bandit::simulate_dynamic_concentration(spec, 200, rng);
  CHECK(report.trials == 200);
  CHECK(rate(report.upper_violations, report.trials) <= mc_ceiling(spec.delta, report.trials));
  CHECK(rate(report.lower_violations, report.trials) <= mc_ceiling(spec.delta, report.trials));
}

TEST_CASE("martingale spec validation") {
  MartingaleSpec spec;
  Rng rng(709);
  spec.epsilon = 0.0;
  CHECK_THROWS_AS(bandit::simulate_dynamic_concentration(spec, 10, rng), std::invalid_argument);
  spec.epsilon = 0.5;
  spec.n = 0;
  CHECK_THROWS_AS(bandit::simulate_dynamic_concentration(spec, 10, rng), std::invalid_argument);
  spec.n = 5;
  CHECK_THROWS_AS(bandit::simulate_dynamic_concentration(spec, 0, rng), std::invalid_argument);

  MartingaleSpec replay;
  replay.family = MartingaleFamily::ClippedBanditReplay;
  CHECK_THROWS_AS(bandit::simulate_scalar_concentration(replay, 10, rng), std::invalid_argument);

  replay.replay_support = {ContextSet{}};
  replay.replay_probs = {0.5, 0.5};
  CHECK_THROWS_AS(bandit::simulate_dynamic_concentration(replay, 10, rng), std::invalid_argument);
}

TEST_CASE("elliptical potential on an orthonormal pass matches the closed form") {
  const int d = 5;
  std::vector<Vector> xs;
  for (int i = 0; i < d; ++i) xs.push_back(Vector::Unit(d, i));
  bandit::EllipticalReport report = bandit::check_elliptical_potential(xs, SymMatrix::identity(d));
  CHECK(report.lhs == doctest::Approx(static_cast<double>(d)));
  CHECK(report.rhs == doctest::Approx(2.0 * d * std::log(2.0)));
  CHECK(report.ok);
}

TEST_CASE("elliptical potential on an empty list is vacuous") {
  bandit::EllipticalReport report = bandit::check_elliptical_potential({}, SymMatrix::identity(3));
  CHECK(report.lhs == 0.0);
  CHECK(report.rhs == 0.0);
  CHECK(report.ok);
}

TEST_CASE("elliptical potential holds on random unit vectors") {
  const int d = 8;
  Rng rng(710);
  std::vector<Vector> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back(rng.unit_sphere(d));
  bandit::EllipticalReport report = bandit::check_elliptical_potential(xs, SymMatrix::identity(d));
  CHECK(report.ok);
  CHECK(report.lhs <= report.rhs);
}

TEST_CASE("elliptical potential names the first offending input") {
  const int d = 3;
  std::vector<Vector> xs = {Vector::Unit(d, 0), Vector::Unit(d, 1),
                            1.5 * Vector::Unit(d, 2)};
  try {
    bandit::check_elliptical_potential(xs, SymMatrix::identity(d));
    FAIL("expected a hypothesis rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("index 2") != std::string::npos);
    CHECK(std::string(e.what()).find("norm") != std::string::npos);
  }

  // Leverage above one trips the other hypothesis, at the first index.
  try {
    bandit::check_elliptical_potential({Vector::Unit(d, 0)},
                                       SymMatrix::scaled_identity(d, 1e-6));
    FAIL("expected a hypothesis rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("index 0") != std::string::npos);
    CHECK(std::string(e.what()).find("leverage") != std::string::npos);
  }
}

TEST_CASE("ridge confidence intervals cover at gamma three") {
  Rng rng(711);
  bandit::RidgeCiReport report = bandit::check_ridge_ci(8, 200, 3.0, 1.0, 10000, rng);
  CHECK(report.ok);
  CHECK(report.bound == doctest::Approx(2.0 * std::exp(-4.5)));
  CHECK(report.violation_rate <= report.bound + report.mc_slack);
}

TEST_CASE("ridge recovery is exact without noise and with a vanishing ridge") {
  Rng rng(712);
  bandit::RidgeCiReport report = bandit::check_ridge_ci(4, 20, 0.1, 1e-12, 500, rng, 0.0);
  CHECK(report.violations == 0);
  CHECK(report.ok);
}

TEST_CASE("gamma zero yields a vacuous bound that always passes") {
  Rng rng(713);
  bandit::RidgeCiReport report = bandit::check_ridge_ci(2, 30, 0.0, 0.5, 200, rng);
  CHECK(report.bound == doctest::Approx(2.0));
  CHECK(report.ok);
}

TEST_CASE("order predicates agree pairwise on random matrix pairs") {
  const int d = 4;
  Rng rng(714);
  int ordered_pairs = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    Eigen::MatrixXd G(d, d), H(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        G(i, j) = rng.normal();
        H(i, j) = rng.normal();
      }
    }
    SymMatrix A(Eigen::MatrixXd(G.transpose() * G + 0.1 * Eigen::MatrixXd::Identity(d, d)));
    SymMatrix B(Eigen::MatrixXd(H.transpose() * H + 0.1 * Eigen::MatrixXd::Identity(d, d)));
    if (rep % 3 == 0) {
      // Force a genuinely ordered pair so both branches get exercised.
      B = SymMatrix(Eigen::MatrixXd(A.m + H.transpose() * H +
                                    0.1 * Eigen::MatrixXd::Identity(d, d)));
    }

    const bool direct = bandit::psd_order_leq(A, B);
    const bool inverted = bandit::psd_order_leq(bandit::invert_pd(B), bandit::invert_pd(A));
    Eigen::LLT<Eigen::MatrixXd> llt(B.m);
    Eigen::MatrixXd congruent =
        llt.matrixL().solve(A.m).transpose();  // L^{-1} A, then transpose
    congruent = llt.matrixL().solve(congruent);  // L^{-1} A L^{-T}
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(congruent);
    const bool contraction = es.eigenvalues().maxCoeff() <= 1.0 + 1e-9;

    CHECK(direct == inverted);
    CHECK(direct == contraction);
    if (direct) ++ordered_pairs;
  }
  CHECK(ordered_pairs >= 300);  // the forced third of the draws
}

}  // TEST_SUITE
