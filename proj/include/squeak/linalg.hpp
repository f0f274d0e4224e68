#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "squeak/error.hpp"

namespace squeak {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative eigenvalue tolerance used for every PSD assertion in the library.
inline constexpr double kPsdTolerance = 1e-8;

namespace linalg {

/// Largest eigenvalue of a symmetric PSD matrix by power iteration. Only used
/// to scale tolerances, so a few dozen iterations are plenty.
inline double largest_eigenvalue(const Matrix& a, int iterations = 60) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  if (n <= 32) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  }
  Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = a.selfadjointView<Eigen::Lower>() * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = v.dot(w);
    v = w / norm;
  }
  // the Rayleigh quotient underestimates; the diagonal gives a floor too
  return std::max(lambda, a.diagonal().cwiseAbs().maxCoeff());
}

inline double min_eigenvalue(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(a.rows() - 1);
}

/// Throws numerical_domain_error unless min-eig(a) >= -kPsdTolerance * max-eig(a).
/// A Cholesky factorization of a + tol*I succeeds exactly when every
/// eigenvalue exceeds -tol, which avoids a full eigendecomposition.
inline void require_psd(const Matrix& a, const std::string& what) {
  if (a.rows() != a.cols()) throw input_error(what + ": matrix is not square");
  if (a.rows() == 0) return;
  const double scale = largest_eigenvalue(a);
  const double tol = kPsdTolerance * std::max(scale, 1e-300);
  Matrix shifted = a;
  shifted.diagonal().array() += tol;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw numerical_domain_error(what + ": matrix is not positive semidefinite");
  }
}

inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace linalg
}  // namespace squeak
