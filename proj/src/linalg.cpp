#include "bandit/linalg.hpp"

#include <cmath>
#include <sstream>

#include "bandit/errors.hpp"

namespace bandit {

namespace {

void require_square_finite(const Eigen::MatrixXd& a, const char* who) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    std::ostringstream os;
    os << who << ": matrix must be square with dim >= 1, got " << a.rows() << "x" << a.cols();
    throw std::invalid_argument(os.str());
  }
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite entries");
  }
}

void require_same_dim(const SymMatrix& a, const SymMatrix& b, const char* who) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << who << ": dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& a) {
  require_square_finite(a, "SymMatrix");
  m = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(int d) {
  return SymMatrix(Eigen::MatrixXd::Identity(d, d));
}

SymMatrix SymMatrix::zero(int d) {
  return SymMatrix(Eigen::MatrixXd::Zero(d, d));
}

SymMatrix SymMatrix::scaled_identity(int d, double c) {
  return SymMatrix(Eigen::MatrixXd(c * Eigen::MatrixXd::Identity(d, d)));
}

PsdCertificate psd_certificate(const SymMatrix& a, double tol) {
  if (tol < 0.0) throw std::invalid_argument("psd_certificate: tol must be >= 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw numerical_error("psd_certificate: eigendecomposition failed");
  }
  PsdCertificate cert;
  cert.min_eigenvalue = es.eigenvalues().minCoeff();
  cert.scale = es.eigenvalues().cwiseAbs().maxCoeff();
  cert.is_psd = cert.min_eigenvalue >= -std::max(tol * cert.scale, kPsdFloor);
  return cert;
}

bool psd_order_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
  require_same_dim(a, b, "psd_order_leq");
  return psd_certificate(SymMatrix(b.m - a.m), tol).is_psd;
}

SymMatrix rank_one_update_inverse(const SymMatrix& inv, const Vector& x) {
  if (x.size() != inv.dim()) {
    throw std::invalid_argument("rank_one_update_inverse: vector dimension mismatch");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("rank_one_update_inverse: non-finite vector");
  }
  Vector u = inv.m * x;
  double denom = 1.0 + x.dot(u);
  if (denom <= 0.0) {
    std::ostringstream os;
    os << "rank_one_update_inverse: denominator 1 + x^T A^-1 x = " << denom
       << " <= 0, inverse state is corrupted";
    throw numerical_error(os.str());
  }
  return SymMatrix(Eigen::MatrixXd(inv.m - (u * u.transpose()) / denom));
}

double log_det(const SymMatrix& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a.m);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("log_det: matrix is not positive definite");
  }
  double s = 0.0;
  const auto& l = llt.matrixLLT();
  for (int i = 0; i < a.dim(); ++i) {
    double p = l(i, i);
    if (!(p > 0.0)) throw numerical_error("log_det: matrix is not positive definite");
    s += std::log(p);
  }
  return 2.0 * s;
}

double trace_exp(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw numerical_error("trace_exp: eigendecomposition failed");
  }
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += std::exp(es.eigenvalues()(i));
  return s;
}

SymMatrix invert_pd(const SymMatrix& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a.m);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("invert_pd: matrix is not positive definite");
  }
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.dim(), a.dim()));
  return SymMatrix(inv);
}

double quad_form(const SymMatrix& a, const Vector& x) {
  if (x.size() != a.dim()) throw std::invalid_argument("quad_form: dimension mismatch");
  return x.dot(a.m * x);
}

}  // namespace bandit
