#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "squeak/dataset.hpp"
#include "squeak/dictionary.hpp"
#include "squeak/error.hpp"
#include "squeak/kernel.hpp"
#include "squeak/linalg.hpp"

namespace squeak {

struct WeightVector {
  enum class Kind { exact, nystrom };

  Vector values;
  double regularization = 1.0;
  Kind kind = Kind::exact;
};

/// Regularized Nystrom reconstruction in collapsed form:
///   K~ = C W^{1/2} (W^{1/2} K_II W^{1/2} + gamma I)^{-1} W^{1/2} C^T
/// with C = K[:, I]. Nothing t x t is formed unless materialize() is called.
template <PointKernel K>
class NystromSketch {
 public:
  NystromSketch(const Dictionary& dict, K kernel, double gamma) : kernel_(std::move(kernel)), gamma_(gamma) {
    if (!(gamma > 0.0)) throw input_error("nystrom: gamma must be positive");
    if (!dict.has_points()) throw input_error("nystrom: dictionary entries carry no points");
    const auto m = static_cast<Eigen::Index>(dict.distinct());
    indices_.reserve(dict.distinct());
    points_.reserve(dict.distinct());
    for (const auto& e : dict.entries()) {
      indices_.push_back(e.index);
      points_.push_back(e.point);
    }
    sqrt_w_ = selection_weights(dict).cwiseSqrt();
    Matrix kii(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b <= a; ++b) {
        kii(a, b) = kii(b, a) = kernel_(points_[static_cast<std::size_t>(a)], points_[static_cast<std::size_t>(b)]);
      }
    }
    linalg::require_psd(kii, "nystrom: retained Gram submatrix");
    Matrix core = sqrt_w_.asDiagonal() * kii * sqrt_w_.asDiagonal();
    core.diagonal().array() += gamma_;
    core_.compute(core);
    if (core_.info() != Eigen::Success) throw numerical_domain_error("nystrom: core matrix not SPD");
  }

  const std::vector<Index>& indices() const { return indices_; }
  Vector weights() const { return sqrt_w_.cwiseAbs2(); }
  double gamma() const { return gamma_; }
  Eigen::Index rank_bound() const { return static_cast<Eigen::Index>(indices_.size()); }
  bool empty() const { return indices_.empty(); }

  /// C = K(x_i, x_j) for the first t stream points against retained points.
  Matrix cross(const Dataset& data, std::size_t t) const {
    if (t > data.size()) throw input_error("nystrom: t exceeds dataset size");
    Matrix c(static_cast<Eigen::Index>(t), rank_bound());
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < points_.size(); ++j) {
        c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kernel_(data.points[i], points_[j]);
      }
    }
    return c;
  }

  /// B with K~ = B B^T: B = C W^{1/2} L^{-T}, core = L L^T. Size t x m.
  Matrix factor(const Dataset& data, std::size_t t) const {
    if (empty()) return Matrix::Zero(static_cast<Eigen::Index>(t), 0);
    Matrix cw = cross(data, t) * sqrt_w_.asDiagonal();
    // solve L X^T = (C W^{1/2})^T, then B = X
    Matrix bt = core_.matrixL().solve(cw.transpose());
    return bt.transpose();
  }

  /// Dense t x t K~. For verification only.
  Matrix materialize(const Dataset& data, std::size_t t) const {
    const auto n = static_cast<Eigen::Index>(t);
    if (empty()) return Matrix::Zero(n, n);
    const Matrix b = factor(data, t);
    Matrix kt = b * b.transpose();
    return linalg::symmetrized(kt);
  }

 private:
  K kernel_;
  double gamma_;
  std::vector<Index> indices_;
  std::vector<Point> points_;
  Vector sqrt_w_;
  Eigen::LLT<Matrix> core_;
};

template <PointKernel K>
NystromSketch<K> build_sketch(const Dictionary& dict, const K& kernel, double gamma) {
  return NystromSketch<K>(dict, kernel, gamma);
}

/// w^ = (K + mu I)^{-1} y
inline WeightVector solve_exact(const Matrix& k, const Vector& y, double mu) {
  if (!(mu > 0.0)) throw input_error("solve_exact: mu must be positive");
  if (k.rows() != k.cols() || k.rows() != y.size()) throw input_error("solve_exact: size mismatch");
  Matrix reg = k;
  reg.diagonal().array() += mu;
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) throw numerical_domain_error("solve_exact: K + mu I is not SPD");
  return WeightVector{llt.solve(y), mu, WeightVector::Kind::exact};
}

/// w~ = (K~ + mu I)^{-1} y through (1/mu)(I - B (B^T B + mu I)^{-1} B^T) y.
/// O(t m^2 + m^3) time, O(t m) memory.
template <PointKernel K>
WeightVector solve_nystrom(const NystromSketch<K>& sketch, const Dataset& data, const Vector& y, double mu) {
  if (!(mu > 0.0)) throw input_error("solve_nystrom: mu must be positive");
  const auto t = static_cast<std::size_t>(y.size());
  if (t > data.size()) throw input_error("solve_nystrom: more labels than stream points");
  if (sketch.empty()) return WeightVector{y / mu, mu, WeightVector::Kind::nystrom};
  const Matrix b = sketch.factor(data, t);
  Matrix small = b.transpose() * b;
  small.diagonal().array() += mu;
  Eigen::LLT<Matrix> llt(small);
  if (llt.info() != Eigen::Success) throw numerical_domain_error("solve_nystrom: inner system not SPD");
  const Vector inner = llt.solve(b.transpose() * y);
  Vector w = (y - b * inner) / mu;
  return WeightVector{std::move(w), mu, WeightVector::Kind::nystrom};
}

/// Outcome of the PSD sandwich 0 <= K - K~ <= gamma/(1-eps) K (K + gamma I)^{-1}.
struct GammaCheck {
  bool holds = false;
  /// min of the two binding eigenvalues; negative beyond -tol means failure
  double margin = 0.0;
  double lower_margin = 0.0;
  double upper_margin = 0.0;
  double tolerance = 0.0;
  /// corollary K - K~ <= gamma/(1-eps) I
  bool norm_bound_holds = false;
};

/// Precomputes the K-dependent half of the sandwich so that several
/// approximations of the same K can be checked cheaply.
class GammaChecker {
 public:
  GammaChecker(Matrix k, double gamma, double epsilon) : k_(std::move(k)), gamma_(gamma), epsilon_(epsilon) {
    if (k_.rows() != k_.cols()) throw input_error("gamma_approx_check: K must be square");
    if (!(gamma > 0.0) || !(epsilon >= 0.0 && epsilon < 1.0)) {
      throw input_error("gamma_approx_check: need gamma > 0 and epsilon in [0, 1)");
    }
    if (k_.rows() == 0) return;
    tolerance_ = kPsdTolerance * linalg::largest_eigenvalue(k_);
    Matrix reg = k_;
    reg.diagonal().array() += gamma_;
    Eigen::LLT<Matrix> llt(reg);
    if (llt.info() != Eigen::Success) throw numerical_domain_error("gamma_approx_check: K + gamma I not SPD");
    // gamma/(1-eps) (K + gamma I)^{-1} K
    bound_ = (gamma_ / (1.0 - epsilon_)) * linalg::symmetrized(llt.solve(k_));
  }

  const Matrix& kernel_matrix() const { return k_; }
  double tolerance() const { return tolerance_; }

  /// Same verdict as check().holds without eigendecompositions: min-eig(A)
  /// >= -tol exactly when A + tol I admits a Cholesky factorization (up to
  /// the measure-zero boundary).
  bool holds(const Matrix& k_tilde) const {
    if (k_tilde.rows() != k_.rows() || k_tilde.cols() != k_.cols()) {
      throw input_error("gamma_approx_check: matrices must be the same size");
    }
    if (k_.rows() == 0) return true;
    auto psd = [&](Matrix a) {
      a.diagonal().array() += tolerance_;
      return Eigen::LLT<Matrix>(a).info() == Eigen::Success;
    };
    const Matrix diff = linalg::symmetrized(k_ - k_tilde);
    return psd(diff) && psd(bound_ - diff);
  }

  GammaCheck check(const Matrix& k_tilde) const {
    if (k_tilde.rows() != k_.rows() || k_tilde.cols() != k_.cols()) {
      throw input_error("gamma_approx_check: matrices must be the same size");
    }
    GammaCheck out;
    out.tolerance = tolerance_;
    const Eigen::Index n = k_.rows();
    if (n == 0) {
      out.holds = out.norm_bound_holds = true;
      return out;
    }
    const Matrix diff = linalg::symmetrized(k_ - k_tilde);
    Eigen::SelfAdjointEigenSolver<Matrix> es_diff(diff, Eigen::EigenvaluesOnly);
    out.lower_margin = es_diff.eigenvalues()(0);
    out.upper_margin = linalg::min_eigenvalue(bound_ - diff);
    out.margin = std::min(out.lower_margin, out.upper_margin);
    out.holds = out.lower_margin >= -tolerance_ && out.upper_margin >= -tolerance_;
    out.norm_bound_holds = es_diff.eigenvalues()(n - 1) <= gamma_ / (1.0 - epsilon_) + tolerance_;
    return out;
  }

 private:
  Matrix k_;
  double gamma_;
  double epsilon_;
  double tolerance_ = 0.0;
  Matrix bound_;
};

inline GammaCheck gamma_approx_check(const Matrix& k, const Matrix& k_tilde, double gamma, double epsilon) {
  if (k.rows() != k.cols() || k_tilde.rows() != k.rows() || k_tilde.cols() != k.cols()) {
    throw input_error("gamma_approx_check: matrices must be square and the same size");
  }
  return GammaChecker(k, gamma, epsilon).check(k_tilde);
}

/// E_noise ||f* - H y||^2 with y = f* + noise, noise i.i.d. with std sigma:
/// ||(I - H) f*||^2 + sigma^2 ||H||_F^2.
inline double fixed_design_risk(const Matrix& hat, const Vector& f_star, double noise_stddev) {
  if (hat.rows() != hat.cols() || hat.rows() != f_star.size()) {
    throw input_error("fixed_design_risk: prediction operator and truth sizes disagree");
  }
  if (!(noise_stddev >= 0.0)) throw input_error("fixed_design_risk: noise stddev must be nonnegative");
  const Vector bias = f_star - hat * f_star;
  return bias.squaredNorm() + noise_stddev * noise_stddev * hat.squaredNorm();
}

/// Risks of the Nystrom solve from the factor B (K~ = B B^T), without the
/// dense t x t inverse. With B = U S V^T (thin), K~ (K~ + mu I)^{-1} =
/// U diag(s^2 / (s^2 + mu)) U^T.
struct NystromRisk {
  /// fit and predict with K~
  double tilde = 0.0;
  /// fit with K~, predict with K; only filled when K is supplied
  std::optional<double> cross;
};

inline NystromRisk nystrom_risk(const Matrix& b, const Vector& f_star, double noise_stddev, double mu,
                                const Matrix* k = nullptr) {
  if (!(mu > 0.0)) throw input_error("nystrom_risk: mu must be positive");
  if (b.rows() != f_star.size()) throw input_error("nystrom_risk: factor and truth sizes disagree");
  if (!(noise_stddev >= 0.0)) throw input_error("nystrom_risk: noise stddev must be nonnegative");
  const double var = noise_stddev * noise_stddev;
  NystromRisk out;
  Matrix u;
  Vector s2;
  if (b.cols() > 0) {
    Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU);
    u = svd.matrixU();
    s2 = svd.singularValues().cwiseAbs2();
  } else {
    u = Matrix::Zero(b.rows(), 0);
  }
  const Vector d = s2.array() / (s2.array() + mu);
  const Vector proj = u.transpose() * f_star;
  out.tilde = (f_star - u * d.cwiseProduct(proj)).squaredNorm() + var * d.squaredNorm();
  if (k) {
    if (k->rows() != b.rows() || k->cols() != b.rows()) throw input_error("nystrom_risk: K has the wrong size");
    // K (K~ + mu I)^{-1} = K / mu + (K U) diag(1 / (s^2 + mu) - 1 / mu) U^T
    const Vector e = (1.0 / (s2.array() + mu)) - 1.0 / mu;
    Matrix hat = (*k) / mu;
    hat.noalias() += ((*k) * u) * e.asDiagonal() * u.transpose();
    out.cross = fixed_design_risk(hat, f_star, noise_stddev);
  }
  return out;
}

/// A (A + mu I)^{-1} for symmetric PSD A: the hat matrix of ridge regression
/// that fits and predicts with the same kernel.
inline Matrix ridge_hat(const Matrix& a, double mu) {
  if (!(mu > 0.0)) throw input_error("ridge_hat: mu must be positive");
  Matrix reg = a;
  reg.diagonal().array() += mu;
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) throw numerical_domain_error("ridge_hat: A + mu I not SPD");
  // (A + mu I)^{-1} A = [A (A + mu I)^{-1}]^T, and both commute for symmetric A
  return linalg::symmetrized(llt.solve(a));
}

/// K (K~ + mu I)^{-1}: fit on K~, predict with the exact kernel.
inline Matrix cross_hat(const Matrix& k, const Matrix& k_tilde, double mu) {
  if (!(mu > 0.0)) throw input_error("cross_hat: mu must be positive");
  Matrix reg = k_tilde;
  reg.diagonal().array() += mu;
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) throw numerical_domain_error("cross_hat: K~ + mu I not SPD");
  // K (K~ + mu I)^{-1} = [(K~ + mu I)^{-1} K]^T
  return llt.solve(k).transpose();
}

}  // namespace squeak
