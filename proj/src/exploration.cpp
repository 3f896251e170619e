#include "bandit/exploration.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bandit/errors.hpp"

namespace bandit {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

nlohmann::json matrix_to_json(const SymMatrix& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < a.dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < a.dim(); ++j) row.push_back(a(i, j));
    rows.push_back(row);
  }
  return rows;
}

SymMatrix matrix_from_json(const nlohmann::json& rows) {
  const auto n = rows.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = rows.at(i);
    if (row.size() != n) throw config_error("policy_from_json: matrix rows must be square");
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(j)) = row.at(j).get<double>();
  }
  return SymMatrix(m);
}

// Max-variance arm under the cached epoch inverse; strict > keeps the lowest
// index on ties. Returns -1 for an empty set.
int argmax_variance(const ContextSet& X, const SymMatrix& W_inv, double* variance) {
  int best = -1;
  double best_var = 0.0;
  for (int i = 0; i < X.K(); ++i) {
    const double v = quad_form(W_inv, X.vectors[static_cast<std::size_t>(i)]);
    if (best == -1 || v > best_var) {
      best = i;
      best_var = v;
    }
  }
  if (variance) *variance = best_var;
  return best;
}

}  // namespace

std::pair<Vector, ClipRecord> clip_vector(const Vector& z, const SymMatrix& W_inv, double L) {
  if (L <= 0.0) throw std::invalid_argument("clip_vector: L must be positive");
  ClipRecord rec;
  rec.raw_variance = std::max(quad_form(W_inv, z), 0.0);
  rec.clip_factor = 1.0;
  if (rec.raw_variance > L) rec.clip_factor = std::sqrt(L / rec.raw_variance);
  return {rec.clip_factor * z, rec};
}

MixturePolicy learn_exploration_policy(const std::vector<ContextSet>& contexts, double kappa,
                                       double L, LearnTrace* trace, bool audit) {
  if (contexts.empty()) {
    throw std::invalid_argument("learn_exploration_policy: need at least one context set");
  }
  if (kappa <= 0.0 || L <= 0.0) {
    throw std::invalid_argument("learn_exploration_policy: kappa and L must be positive");
  }
  int d = 0;
  for (const ContextSet& set : contexts) {
    if (set.K() > 0) {
      d = set.d();
      break;
    }
  }
  if (d == 0) d = 1;  // every set empty; the prior matrix is all that remains

  MixturePolicy policy;
  policy.m = static_cast<int>(contexts.size());
  policy.kappa = kappa;
  policy.L = L;

  Eigen::MatrixXd U = kappa * Eigen::MatrixXd::Identity(d, d);
  PolicyEpoch epoch;
  epoch.W = SymMatrix(U);
  epoch.W_inv = invert_pd(epoch.W);
  double log_det_W = log_det(epoch.W);

  for (std::size_t i = 0; i < contexts.size(); ++i) {
    epoch.tau_count += 1;  // the sample joins the open epoch before acting
    const ContextSet& set = contexts[i];

    int chosen = -1;
    bool doubled = false;
    ClipRecord rec;
    double log_det_U = log_det_W;
    if (set.K() > 0) {
      if (set.d() != d) {
        throw std::invalid_argument("learn_exploration_policy: inconsistent dimensions");
      }
      if (audit) {
        // Doubling keeps the accumulator within a factor 2 of the epoch
        // matrix at every sample.
        SymMatrix two_W(2.0 * epoch.W.m);
        if (!psd_order_leq(SymMatrix(U), two_W)) {
          throw numerical_error("learn_exploration_policy: accumulator exceeded twice the epoch "
                                "matrix at sample " + std::to_string(i + 1));
        }
      }
      double raw = 0.0;
      chosen = argmax_variance(set, epoch.W_inv, &raw);
      auto [z_tilde, clip] = clip_vector(set.vectors[static_cast<std::size_t>(chosen)],
                                         epoch.W_inv, L);
      rec = clip;
      U.noalias() += z_tilde * z_tilde.transpose();
      log_det_U = log_det(SymMatrix(U));
      if (log_det_U > kLn2 + log_det_W) {
        policy.epochs.push_back(epoch);
        epoch = PolicyEpoch{};
        epoch.W = SymMatrix(U);
        epoch.W_inv = invert_pd(epoch.W);
        log_det_W = log_det_U;
        doubled = true;
      }
    }

    if (trace) {
      // The sample joined the epoch open at the top of this iteration; a
      // doubling moves that epoch into the closed list before we record it.
      trace->epoch_of_sample.push_back(static_cast<int>(policy.epochs.size()) + (doubled ? 0 : 1));
      trace->chosen_index.push_back(chosen);
      trace->raw_variance.push_back(rec.raw_variance);
      trace->clip_factor.push_back(rec.clip_factor);
      trace->log_det_after.push_back(log_det_U);
    }
  }
  policy.epochs.push_back(epoch);  // the open epoch, possibly with zero members
  policy.U_final = SymMatrix(U);

  for (PolicyEpoch& e : policy.epochs) {
    e.weight = static_cast<double>(e.tau_count) / static_cast<double>(policy.m);
  }
  return policy;
}

int mixture_act(const MixturePolicy& policy, const ContextSet& X, Rng& rng, int* epoch_index) {
  if (X.K() == 0) throw std::invalid_argument("mixture_act: context set must be non-empty");
  if (policy.epochs.empty()) throw std::invalid_argument("mixture_act: policy has no epochs");
  std::vector<double> weights;
  weights.reserve(policy.epochs.size());
  for (const PolicyEpoch& e : policy.epochs) weights.push_back(e.weight);
  const std::size_t j = rng.categorical(weights);
  if (epoch_index) *epoch_index = static_cast<int>(j) + 1;
  return argmax_variance(X, policy.epochs[j].W_inv, nullptr);
}

nlohmann::json policy_to_json(const MixturePolicy& policy) {
  nlohmann::json j;
  j["m"] = policy.m;
  j["kappa"] = policy.kappa;
  j["L"] = policy.L;
  nlohmann::json epochs = nlohmann::json::array();
  for (const PolicyEpoch& e : policy.epochs) {
    nlohmann::json ej;
    ej["W"] = matrix_to_json(e.W);
    ej["tau_count"] = e.tau_count;
    epochs.push_back(ej);
  }
  j["epochs"] = epochs;
  j["U_final"] = matrix_to_json(policy.U_final);
  return j;
}

MixturePolicy policy_from_json(const nlohmann::json& j) {
  MixturePolicy policy;
  try {
    policy.m = j.at("m").get<int>();
    policy.kappa = j.at("kappa").get<double>();
    policy.L = j.at("L").get<double>();
    for (const auto& ej : j.at("epochs")) {
      PolicyEpoch e;
      e.W = matrix_from_json(ej.at("W"));
      e.W_inv = invert_pd(e.W);
      e.tau_count = ej.at("tau_count").get<int>();
      e.weight = static_cast<double>(e.tau_count) / static_cast<double>(policy.m);
      policy.epochs.push_back(std::move(e));
    }
    policy.U_final = matrix_from_json(j.at("U_final"));
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("policy_from_json: malformed policy JSON: ") + e.what());
  }
  if (policy.m <= 0) throw config_error("policy_from_json: m must be positive");
  int total = 0;
  for (const PolicyEpoch& e : policy.epochs) total += e.tau_count;
  if (total != policy.m) throw config_error("policy_from_json: epoch member counts must sum to m");
  return policy;
}

}  // namespace bandit
