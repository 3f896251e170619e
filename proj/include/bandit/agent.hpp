#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bandit/design.hpp"
#include "bandit/environment.hpp"
#include "bandit/exploration.hpp"
#include "bandit/linalg.hpp"
#include "bandit/rng.hpp"
#include "bandit/schedule.hpp"
#include "json.hpp"

namespace bandit {

// Regularized least-squares state fitted from one batch of plays.
struct RidgeState {
  double lambda_reg = 0.0;
  SymMatrix Lambda;
  SymMatrix Lambda_inv;
  Vector theta_hat;
  int n_points = 0;
};

// Optional replacements for the derived agent parameters. alpha and
// alpha_ln_coeff are mutually exclusive ways to set the confidence radius:
// the former is absolute, the latter scales the default sqrt(c * ln(KTd/delta)).
struct AgentOverrides {
  std::optional<double> delta;
  std::optional<double> alpha;
  std::optional<double> alpha_ln_coeff;
  std::optional<double> lambda_reg;
  std::optional<double> L;
  std::optional<double> kappa;
  std::optional<EffectiveDimKind> dim_kind;
};

struct AgentConfig {
  long long T = 0;
  int M = 0;
  int d = 0;
  int K = 0;
  double delta = 0.0;
  double alpha = 0.0;
  double lambda_reg = 0.0;
  double L = 0.0;
  double kappa = 0.0;
  EffectiveDimKind dim_kind = EffectiveDimKind::LogSquared;
  BatchSchedule schedule;
  std::vector<std::string> overridden;  // names of fields set away from defaults
  bool audit_invariants = false;
};

// Fills every derived field from (T, M, d, K) — delta = T^-3,
// alpha = sqrt(50 ln(KTd/delta)), lambda = 10/T, L = 1/(200 ln(Td/delta)),
// kappa = T^-2 — applying any overrides and recording their names.
AgentConfig make_agent_config(long long T, int M, int d, int K,
                              const AgentOverrides& overrides = {});

struct RegretTrace {
  std::vector<double> per_round_regret;
  std::vector<double> cumulative;
  std::vector<double> per_batch_regret;
  std::vector<int> survivor_counts;  // size of the acted-on candidate set
  std::vector<int> batch_index;      // acting-policy identity per round
  std::vector<int> policy_epoch;     // mixture epoch drawn; -1 on design rounds
  long long eliminated_optimal_count = 0;
  long long empty_intersection_count = 0;
  long long ci_checks = 0;
  long long ci_violations = 0;
  long long width_bound_violations = 0;
  bool event_E_held = true;  // no confidence-interval violation anywhere
  int batches_run = 0;       // batches that received at least one round
};

// Lambda = lambda * I + sum y y^T, theta_hat = Lambda^{-1} sum r y.
// d is inferred from the features when negative; it must be given explicitly
// to fit an empty list (which yields theta_hat = 0, Lambda = lambda * I).
RidgeState ridge_fit(const std::vector<Vector>& features, const std::vector<double>& rewards,
                     double lambda_reg, int d = -1);

// alpha * sqrt(x^T Lambda^{-1} x).
double conf_width(const RidgeState& state, const Vector& x, double alpha);

// Indices of X surviving every state's test: x stays iff its upper confidence
// bound reaches the state's best lower confidence bound. An empty intersection
// falls back to the full index set and reports it through fell_back.
std::vector<int> eliminate(const ContextSet& X, const std::vector<RidgeState>& states,
                           double alpha, bool* fell_back = nullptr);

// Runs the full batched loop: batch 1 plays per-set optimal-design sampling;
// each later batch acts through the mixture policy learned from the previous
// batch's filtered second-half contexts; fits happen on each batch's first
// half. Policies change only at batch boundaries.
RegretTrace run_batch_algorithm(const BanditInstance& instance, const AgentConfig& config,
                                Rng& rng);

nlohmann::json agent_config_to_json(const AgentConfig& config);

}  // namespace bandit
