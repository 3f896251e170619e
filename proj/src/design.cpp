#include "bandit/design.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bandit/errors.hpp"

namespace bandit {

namespace {

Eigen::MatrixXd stack_columns(const std::vector<Vector>& X) {
  if (X.empty()) throw std::invalid_argument("design: vector set must be non-empty");
  const Eigen::Index d = X[0].size();
  if (d == 0) throw std::invalid_argument("design: vectors must have positive dimension");
  Eigen::MatrixXd cols(d, static_cast<Eigen::Index>(X.size()));
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != d) throw std::invalid_argument("design: inconsistent vector dimensions");
    if (!X[i].allFinite()) throw std::invalid_argument("design: non-finite vector entry");
    cols.col(static_cast<Eigen::Index>(i)) = X[i];
  }
  return cols;
}

// Per-vector normalized variances x_i^T M^{-1} x_i for M = cols * diag(w) *
// cols^T + eps * I, via one Cholesky solve.
Eigen::VectorXd variances(const Eigen::MatrixXd& cols, const std::vector<double>& w, double eps) {
  const Eigen::Index d = cols.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto x = cols.col(static_cast<Eigen::Index>(i));
    M.noalias() += w[i] * x * x.transpose();
  }
  M += eps * Eigen::MatrixXd::Identity(d, d);
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("design: information matrix is not positive definite");
  }
  const Eigen::MatrixXd solved = llt.solve(cols);
  return (cols.array() * solved.array()).colwise().sum().transpose();
}

double default_eps(const Eigen::MatrixXd& cols) {
  return 1e-9 * cols.colwise().squaredNorm().mean();
}

}  // namespace

double design_criterion(const std::vector<Vector>& X, const std::vector<double>& weights,
                        double eps) {
  const Eigen::MatrixXd cols = stack_columns(X);
  if (weights.size() != X.size()) {
    throw std::invalid_argument("design_criterion: weights size must match vector count");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("design_criterion: weights must be finite and non-negative");
    }
  }
  return variances(cols, weights, eps).maxCoeff();
}

DesignWeights g_optimal_design(const std::vector<Vector>& X, double eps, int max_iter,
                               double tol) {
  const Eigen::MatrixXd cols = stack_columns(X);
  const int K = static_cast<int>(X.size());
  const int d = static_cast<int>(cols.rows());
  if (tol < 0.0) throw std::invalid_argument("g_optimal_design: tol must be non-negative");
  if (eps < 0.0) eps = default_eps(cols);
  if (max_iter <= 0) max_iter = 10 * K * d;

  DesignWeights design;
  design.epsilon_reg = eps;
  design.weights.assign(static_cast<std::size_t>(K), 1.0 / K);

  if (cols.colwise().squaredNorm().maxCoeff() == 0.0) return design;  // all-zero set

  const double threshold = std::min(2.0 * d, (1.0 + tol) * d + eps * d);
  double criterion = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd g = variances(cols, design.weights, eps);
    int best = 0;
    for (int i = 1; i < K; ++i) {
      if (g(i) > g(best)) best = i;
    }
    criterion = g(best);
    if (criterion <= threshold) return design;

    // Line-search step for the log-det objective; positive whenever the
    // criterion still exceeds d.
    const double gamma = (criterion - d) / (d * (criterion - 1.0));
    if (!(gamma > 0.0)) return design;
    for (double& w : design.weights) w *= (1.0 - gamma);
    design.weights[static_cast<std::size_t>(best)] += gamma;
  }

  criterion = variances(cols, design.weights, eps).maxCoeff();
  if (criterion > 2.0 * d) {
    std::ostringstream msg;
    msg << "g_optimal_design: criterion " << criterion << " still exceeds " << 2.0 * d << " after "
        << max_iter << " iterations";
    throw numerical_error(msg.str());
  }
  return design;
}

std::size_t sample_design(const DesignWeights& design, Rng& rng) {
  return rng.categorical(design.weights);
}

}  // namespace bandit
