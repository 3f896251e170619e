#pragma once

#include <utility>
#include <vector>

#include "bandit/environment.hpp"
#include "bandit/linalg.hpp"
#include "bandit/rng.hpp"
#include "json.hpp"

namespace bandit {

// One doubling epoch of the exploration learner: the frozen design matrix, its
// cached inverse, and the share of samples that arrived during the epoch.
struct PolicyEpoch {
  SymMatrix W;
  SymMatrix W_inv;
  int tau_count = 0;
  double weight = 0.0;  // tau_count / m
};

// Mixture of variance-argmax rules: epoch j is drawn with probability
// weight_j and acts by argmax_x x^T W_j^{-1} x. U_final is the accumulated
// information matrix after all m samples, kept for diagnostics.
struct MixturePolicy {
  std::vector<PolicyEpoch> epochs;
  int m = 0;
  double kappa = 0.0;
  double L = 0.0;
  SymMatrix U_final;
};

struct ClipRecord {
  double raw_variance = 0.0;  // z^T W^{-1} z before clipping
  double clip_factor = 1.0;   // min(sqrt(L / raw_variance), 1)
};

// Per-sample instrumentation of a learning run, for replay-style audits.
struct LearnTrace {
  std::vector<int> epoch_of_sample;  // 1-indexed epoch each sample joined
  std::vector<int> chosen_index;    // arm index within the set, -1 if empty
  std::vector<double> raw_variance;
  std::vector<double> clip_factor;
  std::vector<double> log_det_after;  // log det of the accumulator U_i
};

// Scales z so its normalized variance is capped at L:
// returned z~ satisfies z~^T W^{-1} z~ = min(z^T W^{-1} z, L).
// A zero vector passes through unchanged with clip_factor 1.
std::pair<Vector, ClipRecord> clip_vector(const Vector& z, const SymMatrix& W_inv, double L);

// Streams m context sets through the doubling construction: per sample, pick
// the max-variance arm against the current epoch matrix (ties -> lowest
// index), clip, accumulate U_i = U_{i-1} + z~ z~^T, and open a new epoch with
// W <- U_i whenever log det(U_i) > ln 2 + log det(W). Empty sets contribute
// their index to the current epoch without an update. With audit set, the
// sandwich U_{i-1} <= 2 W_eta is checked in PSD order at every sample.
MixturePolicy learn_exploration_policy(const std::vector<ContextSet>& contexts, double kappa,
                                       double L, LearnTrace* trace = nullptr,
                                       bool audit = false);

// Draws an epoch by weight and returns the argmax-variance arm index in X
// under that epoch's matrix (ties -> lowest index). Reports the drawn epoch
// (1-indexed) through epoch_index when non-null.
int mixture_act(const MixturePolicy& policy, const ContextSet& X, Rng& rng,
                int* epoch_index = nullptr);

nlohmann::json policy_to_json(const MixturePolicy& policy);
MixturePolicy policy_from_json(const nlohmann::json& j);

}  // namespace bandit
