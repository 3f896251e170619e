#include "bandit/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

#include "bandit/errors.hpp"

namespace bandit {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Content-addressed key for the per-run design cache: raw bytes of every
// vector in order, so distinct sets can never alias.
std::string content_key(const ContextSet& set) {
  std::string key;
  key.reserve(static_cast<std::size_t>(set.K()) * static_cast<std::size_t>(set.d() + 1) *
              sizeof(double));
  for (const Vector& x : set.vectors) {
    key.append(reinterpret_cast<const char*>(x.data()),
               static_cast<std::size_t>(x.size()) * sizeof(double));
    key.push_back('|');
  }
  return key;
}

double best_true_value(const ContextSet& X, const Vector& theta) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Vector& x : X.vectors) best = std::max(best, x.dot(theta));
  return best;
}

}  // namespace

AgentConfig make_agent_config(long long T, int M, int d, int K, const AgentOverrides& overrides) {
  require(T >= 1 && M >= 1 && d >= 1 && K >= 1, "make_agent_config: T, M, d, K must be >= 1");
  require(T >= d, "make_agent_config: T must be >= d");
  AgentConfig config;
  config.T = T;
  config.M = M;
  config.d = d;
  config.K = K;
  const double Td = static_cast<double>(T);

  if (overrides.delta) {
    config.delta = *overrides.delta;
    config.overridden.push_back("delta");
  } else {
    config.delta = 1.0 / (Td * Td * Td);
  }
  if (config.delta <= 0.0 || config.delta >= 1.0) {
    throw config_error("make_agent_config: delta must be in (0,1)");
  }

  if (overrides.alpha && overrides.alpha_ln_coeff) {
    throw config_error("make_agent_config: alpha and alpha_ln_coeff are mutually exclusive");
  }
  if (overrides.alpha) {
    config.alpha = *overrides.alpha;
    config.overridden.push_back("alpha");
  } else {
    double coeff = 50.0;
    if (overrides.alpha_ln_coeff) {
      coeff = *overrides.alpha_ln_coeff;
      config.overridden.push_back("alpha_ln_coeff");
    }
    if (coeff <= 0.0) throw config_error("make_agent_config: alpha_ln_coeff must be positive");
    config.alpha = std::sqrt(coeff * std::log(static_cast<double>(K) * Td * d / config.delta));
  }

  if (overrides.lambda_reg) {
    config.lambda_reg = *overrides.lambda_reg;
    config.overridden.push_back("lambda_reg");
  } else {
    config.lambda_reg = 10.0 / Td;
  }
  if (overrides.L) {
    config.L = *overrides.L;
    config.overridden.push_back("L");
  } else {
    config.L = 1.0 / (200.0 * std::log(Td * d / config.delta));
  }
  if (overrides.kappa) {
    config.kappa = *overrides.kappa;
    config.overridden.push_back("kappa");
  } else {
    config.kappa = 1.0 / (Td * Td);
  }
  if (overrides.dim_kind) {
    config.dim_kind = *overrides.dim_kind;
    config.overridden.push_back("dim_kind");
  }
  if (config.alpha <= 0.0 || config.lambda_reg <= 0.0 || config.L <= 0.0 || config.kappa <= 0.0) {
    throw config_error("make_agent_config: alpha, lambda_reg, L, kappa must be positive");
  }
  config.schedule = compute_schedule(T, d, K, M, config.delta, config.dim_kind);
  return config;
}

RidgeState ridge_fit(const std::vector<Vector>& features, const std::vector<double>& rewards,
                     double lambda_reg, int d) {
  require(features.size() == rewards.size(), "ridge_fit: features/rewards length mismatch");
  require(lambda_reg > 0.0, "ridge_fit: lambda_reg must be positive");
  if (d < 0) {
    require(!features.empty(), "ridge_fit: dimension required to fit an empty list");
    d = static_cast<int>(features[0].size());
  }
  require(d >= 1, "ridge_fit: dimension must be >= 1");
  Eigen::MatrixXd Lambda = lambda_reg * Eigen::MatrixXd::Identity(d, d);
  Vector b = Vector::Zero(d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Vector& y = features[i];
    require(y.size() == d, "ridge_fit: inconsistent feature dimensions");
    require(y.allFinite() && std::isfinite(rewards[i]), "ridge_fit: non-finite inputs");
    Lambda.noalias() += y * y.transpose();
    b.noalias() += rewards[i] * y;
  }
  RidgeState state;
  state.lambda_reg = lambda_reg;
  state.Lambda = SymMatrix(Lambda);
  state.Lambda_inv = invert_pd(state.Lambda);
  Eigen::LLT<Eigen::MatrixXd> llt(state.Lambda.m);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("ridge_fit: regularized information matrix not positive definite");
  }
  state.theta_hat = llt.solve(b);
  state.n_points = static_cast<int>(features.size());
  return state;
}

double conf_width(const RidgeState& state, const Vector& x, double alpha) {
  return alpha * std::sqrt(std::max(quad_form(state.Lambda_inv, x), 0.0));
}

std::vector<int> eliminate(const ContextSet& X, const std::vector<RidgeState>& states,
                           double alpha, bool* fell_back) {
  require(X.K() > 0, "eliminate: context set must be non-empty");
  if (fell_back) *fell_back = false;
  const int K = X.K();
  std::vector<bool> alive(static_cast<std::size_t>(K), true);

  for (const RidgeState& s : states) {
    std::vector<double> mean(static_cast<std::size_t>(K));
    std::vector<double> width(static_cast<std::size_t>(K));
    double max_lcb = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < K; ++i) {
      const Vector& x = X.vectors[static_cast<std::size_t>(i)];
      mean[static_cast<std::size_t>(i)] = x.dot(s.theta_hat);
      width[static_cast<std::size_t>(i)] = conf_width(s, x, alpha);
      max_lcb = std::max(max_lcb,
                         mean[static_cast<std::size_t>(i)] - width[static_cast<std::size_t>(i)]);
    }
    const double slack = 1e-12 * std::max(1.0, std::abs(max_lcb));
    for (int i = 0; i < K; ++i) {
      if (mean[static_cast<std::size_t>(i)] + width[static_cast<std::size_t>(i)] <
          max_lcb - slack) {
        alive[static_cast<std::size_t>(i)] = false;
      }
    }
  }

  std::vector<int> survivors;
  for (int i = 0; i < K; ++i) {
    if (alive[static_cast<std::size_t>(i)]) survivors.push_back(i);
  }
  if (survivors.empty()) {
    if (fell_back) *fell_back = true;
    survivors.resize(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) survivors[static_cast<std::size_t>(i)] = i;
  }
  return survivors;
}

RegretTrace run_batch_algorithm(const BanditInstance& instance, const AgentConfig& config,
                                Rng& rng) {
  require(instance.d == config.d && instance.K == config.K,
          "run_batch_algorithm: instance and config disagree on d or K");
  require(config.T >= 1, "run_batch_algorithm: T must be >= 1");
  require(!config.schedule.endpoints.empty() && config.schedule.endpoints.back() == config.T,
          "run_batch_algorithm: schedule endpoints must cover exactly T rounds");
  require(config.alpha > 0.0 && config.lambda_reg > 0.0 && config.L > 0.0 && config.kappa > 0.0,
          "run_batch_algorithm: alpha, lambda_reg, L, kappa must be positive");

  const Vector& theta = instance.theta;
  const int B = static_cast<int>(config.schedule.endpoints.size());

  RegretTrace trace;
  trace.per_round_regret.reserve(static_cast<std::size_t>(config.T));
  trace.cumulative.reserve(static_cast<std::size_t>(config.T));
  trace.survivor_counts.reserve(static_cast<std::size_t>(config.T));
  trace.batch_index.reserve(static_cast<std::size_t>(config.T));
  trace.policy_epoch.reserve(static_cast<std::size_t>(config.T));
  trace.per_batch_regret.assign(static_cast<std::size_t>(std::max(B, config.M)), 0.0);

  std::vector<RidgeState> states;
  MixturePolicy policy;
  std::unordered_map<std::string, DesignWeights> design_cache;
  double cum = 0.0;

  for (int k = 1; k <= B; ++k) {
    const long long start = (k == 1) ? 1 : config.schedule.endpoints[static_cast<std::size_t>(k - 2)] + 1;
    const long long end = config.schedule.endpoints[static_cast<std::size_t>(k - 1)];
    const long long rounds = end - start + 1;
    if (rounds <= 0) continue;
    trace.batches_run += 1;
    const bool last_effective = (end == config.T);
    const long long first_half = (rounds + 1) / 2;

    std::vector<Vector> fit_features;
    std::vector<double> fit_rewards;
    std::vector<ContextSet> second_half_sets;
    if (!last_effective) {
      fit_features.reserve(static_cast<std::size_t>(first_half));
      fit_rewards.reserve(static_cast<std::size_t>(first_half));
      second_half_sets.reserve(static_cast<std::size_t>(rounds - first_half));
    }

    for (long long r = 1; r <= rounds; ++r) {
      ContextSet X = sample_context(instance, rng);
      const double v_star = best_true_value(X, theta);

      for (const RidgeState& s : states) {
        for (const Vector& x : X.vectors) {
          trace.ci_checks += 1;
          const double err = std::abs(x.dot(s.theta_hat) - x.dot(theta));
          if (err > conf_width(s, x, config.alpha)) trace.ci_violations += 1;
        }
      }

      ContextSet filtered;
      const ContextSet* act_set = &X;
      int epoch = -1;
      int played = 0;

      if (k == 1) {
        const DesignWeights* design = nullptr;
        DesignWeights fresh;
        if (instance.law == ContextLawKind::Generator) {
          fresh = g_optimal_design(X.vectors);
          design = &fresh;
        } else {
          const std::string key = content_key(X);
          auto it = design_cache.find(key);
          if (it == design_cache.end()) {
            it = design_cache.emplace(key, g_optimal_design(X.vectors)).first;
          }
          design = &it->second;
        }
        played = static_cast<int>(sample_design(*design, rng));
      } else {
        bool fell_back = false;
        const std::vector<int> survivors = eliminate(X, states, config.alpha, &fell_back);
        if (fell_back) {
          trace.empty_intersection_count += 1;
          trace.eliminated_optimal_count += 1;  // an empty cut removed the best arm too
          filtered = X;
        } else {
          double best_surviving = -std::numeric_limits<double>::infinity();
          filtered.vectors.reserve(survivors.size());
          for (int idx : survivors) {
            const Vector& x = X.vectors[static_cast<std::size_t>(idx)];
            best_surviving = std::max(best_surviving, x.dot(theta));
            filtered.vectors.push_back(x);
          }
          if (best_surviving < v_star - 1e-12 * std::max(1.0, std::abs(v_star))) {
            trace.eliminated_optimal_count += 1;
          }
          // Spread audit: surviving true values must sit within the width
          // bound implied by the most recent fit.
          double lo = std::numeric_limits<double>::infinity();
          double hi = -lo;
          double worst_var = 0.0;
          for (const Vector& x : filtered.vectors) {
            const double v = x.dot(theta);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            worst_var = std::max(worst_var, quad_form(states.back().Lambda_inv, x));
          }
          const double spread_cap =
              std::min(4.0 * config.alpha * std::sqrt(std::max(worst_var, 0.0)), 2.0);
          if (hi - lo > spread_cap + 1e-9) trace.width_bound_violations += 1;
        }
        act_set = &filtered;
        played = mixture_act(policy, filtered, rng, &epoch);
      }

      const Vector& y = act_set->vectors[static_cast<std::size_t>(played)];
      const double reward = sample_reward(instance, y, rng);
      const double regret = v_star - y.dot(theta);

      cum += regret;
      trace.per_round_regret.push_back(regret);
      trace.cumulative.push_back(cum);
      trace.survivor_counts.push_back(act_set->K());
      trace.batch_index.push_back(k);
      trace.policy_epoch.push_back(epoch);
      trace.per_batch_regret[static_cast<std::size_t>(k - 1)] += regret;

      if (!last_effective) {
        if (r <= first_half) {
          fit_features.push_back(y);
          fit_rewards.push_back(reward);
        } else {
          second_half_sets.push_back(std::move(X));
        }
      }
    }

    if (!last_effective) {
      states.push_back(ridge_fit(fit_features, fit_rewards, config.lambda_reg, config.d));
      const RidgeState& fresh = states.back();
      for (const ContextSet& Xs : second_half_sets) {
        for (const Vector& x : Xs.vectors) {
          trace.ci_checks += 1;
          const double err = std::abs(x.dot(fresh.theta_hat) - x.dot(theta));
          if (err > conf_width(fresh, x, config.alpha)) trace.ci_violations += 1;
        }
      }

      std::vector<ContextSet> learn_sets;
      learn_sets.reserve(second_half_sets.size());
      for (const ContextSet& Xs : second_half_sets) {
        bool fell_back = false;
        const std::vector<int> survivors = eliminate(Xs, states, config.alpha, &fell_back);
        if (fell_back) {
          trace.empty_intersection_count += 1;
          trace.eliminated_optimal_count += 1;
          learn_sets.push_back(ContextSet{});  // the learner counts it and moves on
          continue;
        }
        const double v_star = best_true_value(Xs, theta);
        ContextSet filtered;
        filtered.vectors.reserve(survivors.size());
        double best_surviving = -std::numeric_limits<double>::infinity();
        for (int idx : survivors) {
          const Vector& x = Xs.vectors[static_cast<std::size_t>(idx)];
          best_surviving = std::max(best_surviving, x.dot(theta));
          filtered.vectors.push_back(x);
        }
        if (best_surviving < v_star - 1e-12 * std::max(1.0, std::abs(v_star))) {
          trace.eliminated_optimal_count += 1;
        }
        learn_sets.push_back(std::move(filtered));
      }
      policy = learn_exploration_policy(learn_sets, config.kappa, config.L, nullptr,
                                        config.audit_invariants);
    }
  }

  trace.event_E_held = (trace.ci_violations == 0);
  if (config.audit_invariants && trace.event_E_held) {
    if (trace.eliminated_optimal_count > 0) {
      throw numerical_error(
          "run_batch_algorithm: optimal arm eliminated although every confidence interval held");
    }
    if (trace.width_bound_violations > 0) {
      throw numerical_error(
          "run_batch_algorithm: survivor value spread exceeded its cap although every confidence "
          "interval held");
    }
  }
  return trace;
}

nlohmann::json agent_config_to_json(const AgentConfig& config) {
  nlohmann::json j;
  j["T"] = config.T;
  j["M"] = config.M;
  j["d"] = config.d;
  j["K"] = config.K;
  j["delta"] = config.delta;
  j["alpha"] = config.alpha;
  j["lambda_reg"] = config.lambda_reg;
  j["L"] = config.L;
  j["kappa"] = config.kappa;
  j["effective_dim_kind"] =
      config.dim_kind == EffectiveDimKind::LogSquared ? "log_squared" : "single_log";
  j["overridden"] = config.overridden;
  j["schedule"] = schedule_to_json(config.schedule);
  return j;
}

}  // namespace bandit
