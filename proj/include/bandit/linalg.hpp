#pragma once

#include <Eigen/Dense>

namespace bandit {

using Vector = Eigen::VectorXd;

// Default semidefinite-order tolerance: relative to the spectral scale of the
// matrix being tested, with an absolute floor for near-zero matrices.
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kPsdFloor = 1e-12;

// Dense symmetric matrix. Construction symmetrizes (the average of a and its
// transpose has bitwise-equal mirror entries) and rejects non-finite input.
struct SymMatrix {
  Eigen::MatrixXd m;

  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& a);

  static SymMatrix identity(int d);
  static SymMatrix zero(int d);
  static SymMatrix scaled_identity(int d, double c);

  int dim() const { return static_cast<int>(m.rows()); }
  double operator()(int i, int j) const { return m(i, j); }
};

struct PsdCertificate {
  double min_eigenvalue = 0.0;
  double scale = 0.0;  // largest absolute eigenvalue
  bool is_psd = false; // min_eigenvalue >= -max(tol * scale, floor)
};

PsdCertificate psd_certificate(const SymMatrix& a, double tol = kPsdTol);

// True iff B - A is PSD up to the relative tolerance.
bool psd_order_leq(const SymMatrix& a, const SymMatrix& b, double tol = kPsdTol);

// Given inv = A^{-1} for PD A, returns (A + x x^T)^{-1} by the rank-one
// inverse-update identity. Throws numerical_error when 1 + x^T A^{-1} x <= 0,
// which is impossible for a genuine PD inverse and signals corrupted state.
SymMatrix rank_one_update_inverse(const SymMatrix& inv, const Vector& x);

// ln det(A) via Cholesky; throws numerical_error when A is not PD.
double log_det(const SymMatrix& a);

// Tr(exp(A)) via eigendecomposition.
double trace_exp(const SymMatrix& a);

// Dense inverse of a PD matrix via Cholesky; throws numerical_error otherwise.
SymMatrix invert_pd(const SymMatrix& a);

// x^T A x.
double quad_form(const SymMatrix& a, const Vector& x);

}  // namespace bandit
