#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "squeak/baselines.hpp"
#include "squeak/nystrom.hpp"

using namespace squeak;

TEST(UniformSample, WithReplacementShape) {
  Rng rng(1);
  const auto d = uniform_sample(10, 25, rng);
  EXPECT_EQ(d.copies(), 25u);
  EXPECT_EQ(d.qbar(), 25u);
  EXPECT_EQ(d.step(), 10u);
  for (const auto& e : d.entries()) {
    EXPECT_DOUBLE_EQ(e.probability, 0.1);
    EXPECT_NEAR(e.weight(25), static_cast<double>(e.multiplicity) / 2.5, 1e-14);
  }
  EXPECT_THROW(uniform_sample(0, 3, rng), input_error);
  EXPECT_THROW(uniform_sample(3, 0, rng), input_error);
  EXPECT_THROW(uniform_sample(3, 4, rng, Replacement::without), input_error);
}

TEST(UniformSample, SingleDrawGivesRankOneSketch) {
  std::mt19937_64 gen(2);
  const auto data = oracle::random_points(12, 3, gen);
  Rng rng(2);
  const auto d = uniform_sample(12, 1, rng).with_points(data);
  ASSERT_EQ(d.distinct(), 1u);
  const Matrix kt = build_sketch(d, Kernel::gaussian(1.0), 1.0).materialize(data, 12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(kt, Eigen::EigenvaluesOnly);
  int nonzero = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) nonzero += es.eigenvalues()(i) > 1e-10 ? 1 : 0;
  EXPECT_LE(nonzero, 1);
}

TEST(UniformSample, ExhaustiveWithoutReplacementIsFullDictionary) {
  std::mt19937_64 gen(3);
  const auto data = oracle::random_points(9, 2, gen);
  const Kernel kernel = Kernel::gaussian(1.0);
  Rng rng(3);
  const auto d = uniform_sample(9, 9, rng, Replacement::without).with_points(data);
  ASSERT_EQ(d.distinct(), 9u);
  for (const auto& e : d.entries()) EXPECT_EQ(e.multiplicity, 1u);
  // weights Q / (m p) = 1 / (9 * 1/9) = 1, so the regularized identity applies
  const double gamma = 0.7;
  const Matrix k = full_matrix(kernel, data, 9);
  const Matrix kt = build_sketch(d, kernel, gamma).materialize(data, 9);
  const Matrix gap = gamma * k * (k + gamma * Matrix::Identity(9, 9)).inverse();
  EXPECT_LT((k - kt - gap).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(UniformSample, FrequenciesAreUniform) {
  Rng rng(4);
  const std::size_t n = 8;
  const std::uint64_t m = 100000;
  const auto d = uniform_sample(n, m, rng);
  const double p = 1.0 / n, se = std::sqrt(m * p * (1 - p));
  for (Index i = 1; i <= n; ++i) {
    const auto* e = d.find(i);
    ASSERT_NE(e, nullptr);
    EXPECT_NEAR(static_cast<double>(e->multiplicity), m * p, 3.0 * se) << "index " << i;
  }
}

TEST(OracleRlsSample, IdentityKernelIsUniform) {
  Rng rng(5);
  const std::size_t n = 6;
  const std::uint64_t m = 60000;
  const auto d = oracle_rls_sample(Matrix::Identity(n, n), 1.0, m, rng);
  const double p = 1.0 / n, se = std::sqrt(m * p * (1 - p));
  for (const auto& e : d.entries()) {
    EXPECT_NEAR(e.probability, p, 1e-14);
    EXPECT_NEAR(static_cast<double>(e.multiplicity), m * p, 3.0 * se);
  }
}

TEST(OracleRlsSample, RankOneKernelIsSymmetric) {
  Rng rng(6);
  const auto d = oracle_rls_sample(Matrix::Ones(5, 5), 1.0, 50000, rng);
  ASSERT_EQ(d.distinct(), 5u);
  for (const auto& e : d.entries()) EXPECT_NEAR(e.probability, 0.2, 1e-14);
  const double se = std::sqrt(50000 * 0.2 * 0.8);
  for (const auto& e : d.entries()) EXPECT_NEAR(static_cast<double>(e.multiplicity), 10000.0, 3.0 * se);
}

TEST(OracleRlsSample, FrequenciesMatchScores) {
  std::mt19937_64 gen(7);
  const Matrix k = oracle::random_psd(10, 3, gen) + 0.01 * Matrix::Identity(10, 10);
  const double gamma = 0.5;
  const Vector tau = oracle::rls_via_inverse(k, gamma);
  const double deff = tau.sum();
  Rng rng(7);
  const std::uint64_t m = 100000;
  const auto d = oracle_rls_sample(k, gamma, m, rng);
  for (Index i = 1; i <= 10; ++i) {
    const double p = tau(static_cast<Eigen::Index>(i - 1)) / deff;
    const auto* e = d.find(i);
    const double count = e ? static_cast<double>(e->multiplicity) : 0.0;
    if (e) {
      EXPECT_NEAR(e->probability, p, 1e-12);
    }
    EXPECT_NEAR(count, m * p, 3.0 * std::sqrt(m * p * (1 - p))) << "index " << i;
  }
  EXPECT_THROW(oracle_rls_sample(k, gamma, 0, rng), input_error);
}

TEST(DMax, Examples) {
  for (std::size_t n : {1u, 5u, 20u}) {
    const Vector tau = exact_rls(Matrix::Identity(n, n), 2.0);
    EXPECT_NEAR(d_max(tau, n), n / 3.0, 1e-12);
    EXPECT_NEAR(d_max(tau, n), effective_dimension(tau), 1e-12);
  }
  Vector diag = Vector::Constant(20, 1e-4);
  diag(0) = 1.0;
  const Vector tau = exact_rls(Matrix(diag.asDiagonal()), 0.1);
  EXPECT_GT(d_max(tau, 20), 5.0 * effective_dimension(tau));
  EXPECT_DOUBLE_EQ(d_max(Vector(), 0), 0.0);
}

TEST(DMax, NeverBelowEffectiveDimension) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> g(0.01, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 15;
    const Matrix k = oracle::random_psd(n, 1 + trial % static_cast<int>(n), gen);
    const Vector tau = exact_rls(k, g(gen));
    EXPECT_GE(d_max(tau, static_cast<std::size_t>(n)), effective_dimension(tau) - 1e-12);
  }
}

// m = ceil(4/eps^2 d_eff log(n/delta)) draws pass the gamma check in at least
// a 1 - delta fraction of seeds.
TEST(OracleRlsSample, GammaApproximationFraction) {
  const Kernel kernel = Kernel::gaussian(1.0);
  const std::size_t n = 150;
  const auto data = generate_gaussian_mixture(GaussianMixtureSpec{n, 2, 4, 0.1, 9}, kernel);
  const Matrix k = full_matrix(kernel, data, n);
  const double gamma = 1.0, eps = 0.5, delta = 0.1;
  const double deff = effective_dimension(exact_rls(k, gamma));
  const auto m = static_cast<std::uint64_t>(std::ceil(4.0 / (eps * eps) * deff * std::log(n / delta)));
  const GammaChecker checker(k, gamma, eps);
  int held = 0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    const auto d = oracle_rls_sample(k, gamma, m, rng).with_points(data);
    held += checker.check(build_sketch(d, kernel, gamma).materialize(data, n)).holds ? 1 : 0;
  }
  EXPECT_GE(held, static_cast<int>(std::ceil((1.0 - delta) * seeds)));
}
