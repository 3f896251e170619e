#include "bandit/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bandit/errors.hpp"

namespace bandit {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void validate_spec(const MartingaleSpec& spec, long long trials) {
  require(spec.d >= 1, "martingale spec: d must be >= 1");
  require(spec.n >= 1, "martingale spec: n must be >= 1");
  require(spec.epsilon > 0.0 && spec.epsilon < 1.0, "martingale spec: epsilon must be in (0,1)");
  require(spec.delta > 0.0 && spec.delta < 1.0, "martingale spec: delta must be in (0,1)");
  require(spec.bernoulli_p >= 0.0 && spec.bernoulli_p <= 1.0,
          "martingale spec: bernoulli_p must be in [0,1]");
  require(trials >= 1, "martingale spec: trials must be >= 1");
}

double condition_number(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.m);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

void audit_hypotheses(const SymMatrix& X, const SymMatrix& W, const SymMatrix& W_prev, int k) {
  if (!psd_order_leq(X, W)) {
    throw numerical_error("simulate_dynamic_concentration: increment exceeds its bound matrix "
                          "at step " + std::to_string(k));
  }
  if (!psd_order_leq(W_prev, W)) {
    throw numerical_error("simulate_dynamic_concentration: bound matrix decreased at step " +
                          std::to_string(k));
  }
}

std::vector<ContextSet> default_replay_support(int d, Rng& rng) {
  std::vector<ContextSet> sets(4);
  for (ContextSet& s : sets) {
    for (int a = 0; a < 3; ++a) s.vectors.push_back(rng.unit_sphere(d));
  }
  return sets;
}

}  // namespace

ClipReplayState::ClipReplayState(int d, double kappa, double L) : L_(L) {
  require(d >= 1, "ClipReplayState: d must be >= 1");
  require(kappa > 0.0, "ClipReplayState: kappa must be positive");
  require(L > 0.0 && L <= 1.0, "ClipReplayState: L must be in (0,1]");
  W_ = SymMatrix::scaled_identity(d, kappa);
  W_inv_ = SymMatrix::scaled_identity(d, 1.0 / kappa);
  U_ = W_;
  log_det_W_ = log_det(W_);
  log_det_U_ = log_det_W_;
}

Vector ClipReplayState::clipped_choice(const ContextSet& set, int* index, double* clip) const {
  int best = -1;
  double best_var = 0.0;
  for (int i = 0; i < set.K(); ++i) {
    const double v = quad_form(W_inv_, set.vectors[static_cast<std::size_t>(i)]);
    if (best == -1 || v > best_var) {
      best = i;
      best_var = v;
    }
  }
  auto [z, rec] = clip_vector(set.vectors[static_cast<std::size_t>(best)], W_inv_, L_);
  if (index) *index = best;
  if (clip) *clip = rec.clip_factor;
  return z;
}

SymMatrix ClipReplayState::conditional_mean(const std::vector<ContextSet>& sets,
                                            const std::vector<double>& probs) const {
  require(!sets.empty() && sets.size() == probs.size(),
          "ClipReplayState: support and probabilities must match and be non-empty");
  const int d = W_.dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (sets[s].K() == 0) continue;  // a skipped sample contributes nothing
    const Vector z = clipped_choice(sets[s], nullptr, nullptr);
    acc.noalias() += probs[s] * (z * z.transpose());
  }
  return SymMatrix(acc);
}

SymMatrix ClipReplayState::step(const ContextSet& set) {
  const int d = W_.dim();
  if (set.K() == 0) {
    last_chosen_ = -1;
    last_clip_ = 1.0;
    return SymMatrix::zero(d);
  }
  const Vector z = clipped_choice(set, &last_chosen_, &last_clip_);
  Eigen::MatrixXd u = U_.m;
  u.noalias() += z * z.transpose();
  U_ = SymMatrix(u);
  log_det_U_ = log_det(U_);
  SymMatrix increment{Eigen::MatrixXd(z * z.transpose())};
  if (log_det_U_ > kLn2 + log_det_W_) {
    W_ = U_;
    W_inv_ = invert_pd(W_);
    log_det_W_ = log_det_U_;
  }
  return increment;
}

ViolationReport simulate_dynamic_concentration(const MartingaleSpec& spec, long long trials,
                                               Rng& rng) {
  validate_spec(spec, trials);
  const int d = spec.d;
  const int n = spec.n;
  const double eps = spec.epsilon;
  const double c = (4.0 * (eps * eps + 2.0 * eps + 2.0) / eps) *
                   std::log((static_cast<double>(n) + 1.0) * d / spec.delta);

  if (spec.family == MartingaleFamily::ClippedBanditReplay && !spec.replay_support.empty()) {
    require(spec.replay_support.size() == spec.replay_probs.size(),
            "martingale spec: replay support and probabilities must match");
    double total = 0.0;
    for (double p : spec.replay_probs) {
      require(p >= 0.0, "martingale spec: replay probabilities must be non-negative");
      total += p;
    }
    require(std::abs(total - 1.0) <= 1e-9, "martingale spec: replay probabilities must sum to 1");
    for (const ContextSet& s : spec.replay_support) {
      require(s.K() == 0 || s.d() == d, "martingale spec: replay support dimension mismatch");
    }
  }

  ViolationReport report;
  report.trials = trials;
  double cond_min = std::numeric_limits<double>::infinity();
  double cond_max = 0.0;
  double cond_sum = 0.0;

  for (long long trial = 0; trial < trials; ++trial) {
    Eigen::MatrixXd sum_X = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd sum_Y = Eigen::MatrixXd::Zero(d, d);
    SymMatrix W_prev = SymMatrix::zero(d);
    SymMatrix W_last = SymMatrix::identity(d);

    // Replay machinery (only touched by that family).
    std::vector<ContextSet> sets = spec.replay_support;
    std::vector<double> probs = spec.replay_probs;
    ClipReplayState replay(d, spec.replay_kappa, spec.replay_L);
    if (spec.family == MartingaleFamily::ClippedBanditReplay && sets.empty()) {
      sets = default_replay_support(d, rng);
      probs.assign(sets.size(), 1.0 / static_cast<double>(sets.size()));
    }

    SymMatrix growing = SymMatrix::identity(d);

    for (int k = 1; k <= n; ++k) {
      SymMatrix W_k = SymMatrix::identity(d);
      SymMatrix X_k = SymMatrix::zero(d);
      SymMatrix Y_k = SymMatrix::zero(d);
      switch (spec.family) {
        case MartingaleFamily::FixedBoundProjectors: {
          const Vector v = rng.unit_sphere(d);
          Eigen::MatrixXd vv = v * v.transpose();
          Y_k = SymMatrix(Eigen::MatrixXd(spec.bernoulli_p * vv));
          if (rng.bernoulli(spec.bernoulli_p)) X_k = SymMatrix(vv);
          break;
        }
        case MartingaleFamily::GrowingBoundRankOne: {
          const Vector w = rng.unit_sphere(d);
          Eigen::MatrixXd g = growing.m;
          g.noalias() += (1.0 / n) * (w * w.transpose());
          growing = SymMatrix(g);
          W_k = growing;
          const Vector v = rng.unit_sphere(d);
          Eigen::MatrixXd vv = v * v.transpose();
          Y_k = SymMatrix(Eigen::MatrixXd(spec.bernoulli_p * vv));
          if (rng.bernoulli(spec.bernoulli_p)) X_k = SymMatrix(vv);
          break;
        }
        case MartingaleFamily::ClippedBanditReplay: {
          W_k = replay.bound_matrix();
          Y_k = replay.conditional_mean(sets, probs);
          const int s = rng.categorical(probs);
          X_k = replay.step(sets[static_cast<std::size_t>(s)]);
          break;
        }
        case MartingaleFamily::Deterministic: {
          X_k = SymMatrix::identity(d);
          Y_k = X_k;
          break;
        }
      }
      audit_hypotheses(X_k, W_k, W_prev, k);
      sum_X += X_k.m;
      sum_Y += Y_k.m;
      W_prev = W_k;
      W_last = W_k;
    }

    SymMatrix upper(Eigen::MatrixXd((1.0 + eps) * sum_Y + c * W_last.m));
    SymMatrix lower(Eigen::MatrixXd((1.0 - eps) * sum_Y - c * W_last.m));
    SymMatrix total(sum_X);
    if (!psd_order_leq(total, upper, 1e-9)) report.upper_violations += 1;
    if (!psd_order_leq(lower, total, 1e-9)) report.lower_violations += 1;

    const double cond = condition_number(upper);
    cond_min = std::min(cond_min, cond);
    cond_max = std::max(cond_max, cond);
    cond_sum += cond;
  }

  report.bound_matrix_condition.min_cond = cond_min;
  report.bound_matrix_condition.max_cond = cond_max;
  report.bound_matrix_condition.mean_cond = cond_sum / static_cast<double>(trials);
  return report;
}

ViolationReport simulate_scalar_concentration(const MartingaleSpec& spec, long long trials,
                                              Rng& rng) {
  require(spec.family == MartingaleFamily::FixedBoundProjectors ||
              spec.family == MartingaleFamily::Deterministic,
          "simulate_scalar_concentration: only the fixed-bound and deterministic families "
          "have a scalar restriction");
  MartingaleSpec scalar = spec;
  scalar.d = 1;
  return simulate_dynamic_concentration(scalar, trials, rng);
}

EllipticalReport check_elliptical_potential(const std::vector<Vector>& xs,
                                            const SymMatrix& Lambda0) {
  EllipticalReport report;
  if (xs.empty()) return report;
  const int d = Lambda0.dim();
  const double log_det_0 = log_det(Lambda0);

  Eigen::MatrixXd Lambda = Lambda0.m;
  SymMatrix inv = invert_pd(Lambda0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Vector& x = xs[i];
    require(x.size() == d, "check_elliptical_potential: vector at index " + std::to_string(i) +
                               " has dimension " + std::to_string(x.size()));
    if (x.norm() > 1.0 + 1e-12) {
      throw std::invalid_argument("check_elliptical_potential: vector at index " +
                                  std::to_string(i) + " has norm " + std::to_string(x.norm()) +
                                  " > 1");
    }
    const double quad = quad_form(inv, x);
    if (quad > 1.0 + 1e-12) {
      throw std::invalid_argument("check_elliptical_potential: vector at index " +
                                  std::to_string(i) + " has leverage " + std::to_string(quad) +
                                  " > 1");
    }
    report.lhs += quad;
    Lambda.noalias() += x * x.transpose();
    inv = rank_one_update_inverse(inv, x);
  }
  report.rhs = 2.0 * (log_det(SymMatrix(Lambda)) - log_det_0);
  report.ok = report.lhs <= report.rhs + 1e-12 * std::max(1.0, std::abs(report.rhs));
  return report;
}

RidgeCiReport check_ridge_ci(int d, int n, double gamma, double lambda_reg, long long trials,
                             Rng& rng, double noise_scale) {
  require(d >= 1 && n >= 1, "check_ridge_ci: d and n must be >= 1");
  require(trials >= 1, "check_ridge_ci: trials must be >= 1");
  require(lambda_reg > 0.0, "check_ridge_ci: lambda_reg must be positive");
  require(gamma >= 0.0, "check_ridge_ci: gamma must be non-negative");
  require(noise_scale >= 0.0, "check_ridge_ci: noise_scale must be non-negative");

  // One fixed design and held-out direction for all trials.
  std::vector<Vector> design;
  design.reserve(static_cast<std::size_t>(n));
  Eigen::MatrixXd Lambda = lambda_reg * Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < n; ++i) {
    design.push_back(rng.unit_sphere(d));
    Lambda.noalias() += design.back() * design.back().transpose();
  }
  const Vector x = rng.unit_sphere(d);
  const SymMatrix Lambda_sym(Lambda);
  const SymMatrix Lambda_inv = invert_pd(Lambda_sym);
  const double width = std::sqrt(std::max(quad_form(Lambda_inv, x), 0.0));
  const double threshold = (gamma + std::sqrt(d * lambda_reg)) * width;
  Eigen::LLT<Eigen::MatrixXd> llt(Lambda);

  RidgeCiReport report;
  report.trials = trials;
  for (long long trial = 0; trial < trials; ++trial) {
    Vector theta(d);
    for (int i = 0; i < d; ++i) theta(i) = rng.uniform(-1.0, 1.0);
    Vector b = Vector::Zero(d);
    for (const Vector& v : design) {
      const double r = v.dot(theta) + noise_scale * rng.normal();
      b.noalias() += r * v;
    }
    const Vector theta_hat = llt.solve(b);
    if (std::abs(x.dot(theta - theta_hat)) > threshold) report.violations += 1;
  }
  report.violation_rate = static_cast<double>(report.violations) / static_cast<double>(trials);
  report.bound = 2.0 * std::exp(-gamma * gamma / 2.0);
  const double p = std::min(std::max(report.bound, 0.0), 1.0);
  report.mc_slack = 3.0 * std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(trials));
  report.ok = report.violation_rate <= std::min(1.0, report.bound + report.mc_slack);
  return report;
}

nlohmann::json violation_report_to_json(const ViolationReport& report) {
  nlohmann::json j;
  j["trials"] = report.trials;
  j["upper_violations"] = report.upper_violations;
  j["lower_violations"] = report.lower_violations;
  j["upper_rate"] = static_cast<double>(report.upper_violations) / report.trials;
  j["lower_rate"] = static_cast<double>(report.lower_violations) / report.trials;
  j["bound_matrix_condition"] = {{"min", report.bound_matrix_condition.min_cond},
                                 {"max", report.bound_matrix_condition.max_cond},
                                 {"mean", report.bound_matrix_condition.mean_cond}};
  return j;
}

}  // namespace bandit
