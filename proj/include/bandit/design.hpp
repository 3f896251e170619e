#pragma once

#include <vector>

#include "bandit/linalg.hpp"
#include "bandit/rng.hpp"

namespace bandit {

// Probability weights over a finite vector set, together with the ridge term
// that regularized the information matrix while the weights were computed.
struct DesignWeights {
  std::vector<double> weights;
  double epsilon_reg = 0.0;
};

// Worst-case normalized variance max_i x_i^T M(w)^{-1} x_i with
// M(w) = sum_i w_i x_i x_i^T + eps * I.
double design_criterion(const std::vector<Vector>& X, const std::vector<double>& weights,
                        double eps);

// Frank-Wolfe minimization of the worst-case variance, stopping once the
// criterion drops to min(2d, (1 + tol) * d + eps * d). Negative eps selects
// the default 1e-9 * mean squared norm; non-positive max_iter selects
// 10 * K * d. Ties in the ascent direction go to the lowest index. A set of
// all-zero vectors yields uniform weights. If the iteration cap is reached
// while the criterion still exceeds 2d, throws numerical_error carrying the
// criterion value.
DesignWeights g_optimal_design(const std::vector<Vector>& X, double eps = -1.0,
                               int max_iter = -1, double tol = 0.05);

// Draws one index from the design distribution.
std::size_t sample_design(const DesignWeights& design, Rng& rng);

}  // namespace bandit
