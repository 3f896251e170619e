#pragma once

#include <vector>

#include "bandit/environment.hpp"
#include "bandit/exploration.hpp"
#include "bandit/linalg.hpp"
#include "bandit/rng.hpp"
#include "json.hpp"

namespace bandit {

// Adapted-sequence generator families. Every family produces, step by step,
// a PD bound matrix W_k (non-decreasing in k), a PSD increment X_k with
// X_k <= W_k, and the exact conditional mean Y_k of X_k given the past —
// closed-form by construction, so the tests never estimate it by simulation.
enum class MartingaleFamily {
  FixedBoundProjectors,  // W = I fixed; X_k = B_k v_k v_k^T, B_k ~ Bernoulli(p)
  GrowingBoundRankOne,   // W_k = W_{k-1} + (1/n) w_k w_k^T; X_k = B_k v_k v_k^T
  ClippedBanditReplay,   // (W, z~ z~^T) pairs replayed from the exploration update rule
  Deterministic,         // X_k = Y_k = W_k = I: the noise term vanishes
};

struct MartingaleSpec {
  int d = 1;
  int n = 1;
  double epsilon = 0.5;  // in (0,1)
  double delta = 0.05;
  MartingaleFamily family = MartingaleFamily::FixedBoundProjectors;

  double bernoulli_p = 0.5;  // projector families

  // Replay family: the finite context law driving the updates plus the
  // exploration parameters. Empty support means "draw a fresh random law
  // per trial" (4 sets of 3 unit vectors, uniform probabilities).
  std::vector<ContextSet> replay_support;
  std::vector<double> replay_probs;
  double replay_kappa = 1e-4;
  double replay_L = 0.25;
};

struct ConditionStats {
  double min_cond = 0.0;
  double max_cond = 0.0;
  double mean_cond = 0.0;
};

struct ViolationReport {
  long long trials = 0;
  long long upper_violations = 0;
  long long lower_violations = 0;
  ConditionStats bound_matrix_condition;  // of the upper comparison matrix
};

// Mirror of the exploration learner's per-sample update (variance argmax with
// lowest-index ties, clipping against the epoch matrix, determinant-doubling
// epoch turnover). The replay family uses it to expose each step's increment
// and its exact conditional mean under a finite context law; unit tests
// cross-check it sample-by-sample against the learner's own trace.
class ClipReplayState {
 public:
  ClipReplayState(int d, double kappa, double L);

  // Conditional mean of the next increment under (sets, probs).
  SymMatrix conditional_mean(const std::vector<ContextSet>& sets,
                             const std::vector<double>& probs) const;

  // Feeds one drawn context set; returns the realized increment z~ z~^T.
  SymMatrix step(const ContextSet& set);

  const SymMatrix& bound_matrix() const { return W_; }  // current epoch matrix
  double log_det_updated() const { return log_det_U_; }
  int last_chosen_index() const { return last_chosen_; }
  double last_clip_factor() const { return last_clip_; }

 private:
  Vector clipped_choice(const ContextSet& set, int* index, double* clip) const;

  double L_ = 0.0;
  SymMatrix W_;
  SymMatrix W_inv_;
  SymMatrix U_;
  double log_det_W_ = 0.0;
  double log_det_U_ = 0.0;
  int last_chosen_ = -1;
  double last_clip_ = 1.0;
};

// Monte-Carlo check of the two-sided PSD sandwich
//   (1-eps) sum Y_k - c W_n  <=  sum X_k  <=  (1+eps) sum Y_k + c W_n
// with c = (4(eps^2 + 2 eps + 2)/eps) * ln((n+1) d / delta), counting strict
// PSD-order failures at 1e-9 relative tolerance. Every draw is audited
// against the hypotheses (X_k <= W_k, W_k non-decreasing).
ViolationReport simulate_dynamic_concentration(const MartingaleSpec& spec, long long trials,
                                               Rng& rng);

// Scalar restriction: d forced to 1 with a fixed bound. Only the fixed and
// deterministic families make sense here; others are rejected.
ViolationReport simulate_scalar_concentration(const MartingaleSpec& spec, long long trials,
                                              Rng& rng);

struct EllipticalReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = true;
};

// Verifies sum_i x_i^T Lambda_{i-1}^{-1} x_i <= 2 ln(det Lambda_n / det Lambda_0)
// where Lambda_i = Lambda_0 + sum_{j<=i} x_j x_j^T. Inputs must satisfy
// ||x_i|| <= 1 and x_i^T Lambda_{i-1}^{-1} x_i <= 1; a violation raises an
// error naming the first offending index.
EllipticalReport check_elliptical_potential(const std::vector<Vector>& xs,
                                            const SymMatrix& Lambda0);

struct RidgeCiReport {
  long long trials = 0;
  long long violations = 0;
  double violation_rate = 0.0;
  double bound = 0.0;        // 2 exp(-gamma^2 / 2)
  double mc_slack = 0.0;     // 3 sigma binomial slack at the bound rate
  bool ok = true;            // rate <= bound + slack (clamped at 1)
};

// Draws theta with sup-norm <= 1, builds one fixed spherical design of n
// points, then repeatedly refits ridge regression under Gaussian noise and
// measures how often the held-out prediction error exceeds
// (gamma + sqrt(d * lambda_reg)) * sqrt(x^T Lambda^{-1} x). noise_scale
// scales the unit noise (0 gives the exact-recovery regime).
RidgeCiReport check_ridge_ci(int d, int n, double gamma, double lambda_reg, long long trials,
                             Rng& rng, double noise_scale = 1.0);

nlohmann::json violation_report_to_json(const ViolationReport& report);

}  // namespace bandit
