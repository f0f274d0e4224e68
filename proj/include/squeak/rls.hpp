#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "squeak/dictionary.hpp"
#include "squeak/error.hpp"
#include "squeak/kernel.hpp"
#include "squeak/linalg.hpp"

namespace squeak {

/// Nystrom regularization gamma and accuracy epsilon. epsilon = 0 is accepted
/// here (the estimator is then exact on a full dictionary); the streaming
/// sampler additionally needs epsilon > 0 to derive its copy budget.
struct RlsConfig {
  double gamma = 1.0;
  double epsilon = 0.5;

  /// (1 + eps) / (1 - eps)
  double alpha() const { return (1.0 + epsilon) / (1.0 - epsilon); }

  /// (1 + eps) / (alpha gamma), which simplifies to (1 - eps) / gamma.
  double prefactor() const { return (1.0 + epsilon) / (alpha() * gamma); }

  void validate() const {
    if (!(gamma > 0.0)) throw input_error("gamma must be positive");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw input_error("epsilon must lie in [0, 1)");
  }
};

struct RlsEstimate {
  Index index = 0;
  double value = 0.0;

  friend bool operator==(const RlsEstimate&, const RlsEstimate&) = default;
};

/// Exact gamma-ridge leverage scores tau_i = [K (K + gamma I)^{-1}]_ii,
/// from one SPD solve against K.
inline Vector exact_rls(const Matrix& k, double gamma) {
  if (!(gamma > 0.0)) throw input_error("exact_rls: gamma must be positive");
  linalg::require_psd(k, "exact_rls");
  const Eigen::Index n = k.rows();
  if (n == 0) return Vector();
  Matrix reg = k;
  reg.diagonal().array() += gamma;
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) throw numerical_domain_error("exact_rls: K + gamma I is not SPD");
  // (K + gamma I)^{-1} K is not symmetric in floating point; read its diagonal
  const Matrix solved = llt.solve(k);
  Vector tau = solved.diagonal();
  return tau.cwiseMax(0.0).cwiseMin(1.0);
}

inline double effective_dimension(std::span<const double> rls) {
  double total = 0.0;
  for (double v : rls) total += v;
  return total;
}

inline double effective_dimension(const Vector& rls) {
  return effective_dimension(std::span<const double>(rls.data(), static_cast<std::size_t>(rls.size())));
}

/// The dictionary-based estimator over a collapsed index set J (the retained
/// dictionary plus the incoming point). gram holds K on J x J, weights holds
/// the aggregate selection weights Q_j / (qbar p_j), and the incoming point
/// carries weight 1 (qbar copies of weight 1/qbar).
///
/// For target i in J with v = W^{1/2} K_{J,i}:
///   tau~_i = prefactor * (k_ii - v^T (W^{1/2} K_JJ W^{1/2} + gamma I)^{-1} v)
/// clamped to [0, 1].
class RlsEstimator {
 public:
  RlsEstimator(Matrix gram, Vector weights, const RlsConfig& config)
      : gram_(std::move(gram)), weights_(std::move(weights)), config_(config) {
    config_.validate();
    if (gram_.rows() != gram_.cols() || gram_.rows() != weights_.size()) {
      throw input_error("rls estimator: gram and weights sizes disagree");
    }
    if ((weights_.array() <= 0.0).any()) {
      throw contract_violation("rls estimator: selection weights must be positive");
    }
    sqrt_w_ = weights_.cwiseSqrt();
    Matrix core = sqrt_w_.asDiagonal() * gram_ * sqrt_w_.asDiagonal();
    core.diagonal().array() += config_.gamma;
    llt_.compute(core);
    if (llt_.info() != Eigen::Success) {
      throw numerical_domain_error("rls estimator: inner matrix not positive definite");
    }
  }

  Eigen::Index size() const { return gram_.rows(); }

  /// Estimate for J-position `pos` by a direct SPD solve.
  double estimate(Eigen::Index pos) const {
    if (pos < 0 || pos >= size()) throw contract_violation("rls estimator: target not in dictionary");
    const Vector v = sqrt_w_.cwiseProduct(gram_.col(pos));
    const double quad = v.dot(llt_.solve(v));
    return clamp(config_.prefactor() * (gram_(pos, pos) - quad));
  }

  /// Estimates for every position of J at once. With A the inner matrix,
  /// k_ii - v^T A^{-1} v = (gamma / w_i) (1 - gamma [A^{-1}]_ii), and the
  /// diagonal of A^{-1} is read off the inverse Cholesky factor. Avoids the
  /// cancellation in the direct form.
  Vector estimate_all() const {
    const Eigen::Index m = size();
    Vector out(m);
    if (m == 0) return out;
    const Matrix linv = llt_.matrixL().solve(Matrix::Identity(m, m));
    for (Eigen::Index i = 0; i < m; ++i) {
      const double inv_ii = linv.col(i).squaredNorm();
      const double residual = (config_.gamma / weights_(i)) * (1.0 - config_.gamma * inv_ii);
      out(i) = clamp(config_.prefactor() * residual);
    }
    return out;
  }

 private:
  static double clamp(double v) { return std::clamp(v, 0.0, 1.0); }

  Matrix gram_;
  Vector weights_;
  Vector sqrt_w_;
  RlsConfig config_;
  Eigen::LLT<Matrix> llt_;
};

namespace detail {

/// Gram matrix and weights over J = dictionary entries (in order) then the
/// incoming point, which gets weight 1.
template <IndexedKernelAccess A>
std::pair<Matrix, Vector> collapsed_system(const Dictionary& dict, const Point& incoming, Index new_index,
                                           A& access) {
  if (new_index != dict.step() + 1) {
    throw contract_violation("estimate_rls: incoming index must follow the dictionary step");
  }
  if (!dict.has_points()) throw input_error("estimate_rls: dictionary entries carry no points");
  const auto& entries = dict.entries();
  const auto m = static_cast<Eigen::Index>(entries.size());
  Matrix gram(m + 1, m + 1);
  Vector weights(m + 1);
  for (Eigen::Index a = 0; a < m; ++a) {
    const DictEntry& ea = entries[static_cast<std::size_t>(a)];
    weights(a) = ea.weight(dict.qbar());
    for (Eigen::Index b = 0; b <= a; ++b) {
      const DictEntry& eb = entries[static_cast<std::size_t>(b)];
      gram(a, b) = gram(b, a) = access(ea.index, ea.point, eb.index, eb.point);
    }
    gram(m, a) = gram(a, m) = access(new_index, incoming, ea.index, ea.point);
  }
  gram(m, m) = access(new_index, incoming, new_index, incoming);
  weights(m) = 1.0;
  return {std::move(gram), std::move(weights)};
}

}  // namespace detail

/// Estimate for one target, using only kernel entries among dictionary points,
/// the target and the incoming point x_{t+1}.
template <IndexedKernelAccess A>
RlsEstimate estimate_rls(const Dictionary& dict, Index target, const Point& incoming, Index new_index,
                         A& access, const RlsConfig& config) {
  if (target != new_index && !dict.contains(target)) {
    throw contract_violation("estimate_rls: index " + std::to_string(target) +
                             " is neither retained nor the incoming point");
  }
  auto [gram, weights] = detail::collapsed_system(dict, incoming, new_index, access);
  Eigen::Index pos = gram.rows() - 1;
  for (std::size_t a = 0; a < dict.entries().size(); ++a) {
    if (dict.entries()[a].index == target) pos = static_cast<Eigen::Index>(a);
  }
  const RlsEstimator estimator(std::move(gram), std::move(weights), config);
  return RlsEstimate{target, estimator.estimate(pos)};
}

/// Estimates for every retained index and the incoming point, in increasing
/// index, from a single factorization.
template <IndexedKernelAccess A>
std::vector<RlsEstimate> estimate_rls_all(const Dictionary& dict, const Point& incoming, Index new_index,
                                          A& access, const RlsConfig& config) {
  auto [gram, weights] = detail::collapsed_system(dict, incoming, new_index, access);
  const Vector tau = RlsEstimator(std::move(gram), std::move(weights), config).estimate_all();
  std::vector<RlsEstimate> out;
  out.reserve(dict.distinct() + 1);
  for (std::size_t a = 0; a < dict.distinct(); ++a) {
    out.push_back(RlsEstimate{dict.entries()[a].index, tau(static_cast<Eigen::Index>(a))});
  }
  out.push_back(RlsEstimate{new_index, tau(tau.size() - 1)});
  return out;
}

}  // namespace squeak
