#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "squeak/dataset.hpp"
#include "squeak/kernel.hpp"
#include "squeak/linalg.hpp"
#include "squeak/rls.hpp"

using namespace squeak;

namespace {

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p(i++) = x;
  return p;
}

std::vector<Kernel> all_families() {
  return {Kernel::gaussian(0.7), Kernel::gaussian(2.0), Kernel::linear(), Kernel::polynomial(2, 1.0),
          Kernel::polynomial(3, 0.5)};
}

}  // namespace

TEST(Kernel, EvalExamples) {
  EXPECT_DOUBLE_EQ(eval(Kernel::gaussian(1.0), pt({0.3, -1.2}), pt({0.3, -1.2})), 1.0);
  EXPECT_DOUBLE_EQ(eval(Kernel::linear(), pt({1, 2}), pt({3, 4})), 11.0);
  EXPECT_DOUBLE_EQ(eval(Kernel::polynomial(2, 1.0), pt({1, 0}), pt({1, 0})), 4.0);
}

TEST(Kernel, GaussianValue) {
  // ||x - y||^2 = 2, bandwidth 2: exp(-2 / 8)
  EXPECT_DOUBLE_EQ(Kernel::gaussian(2.0)(pt({1, 0}), pt({0, 1})), std::exp(-0.25));
}

TEST(Kernel, DimensionMismatchIsInputError) {
  for (const auto& k : all_families()) EXPECT_THROW(k(pt({1, 2}), pt({1, 2, 3})), input_error);
}

TEST(Kernel, InvalidParameters) {
  EXPECT_THROW(Kernel::gaussian(0.0), input_error);
  EXPECT_THROW(Kernel::polynomial(0, 1.0), input_error);
  EXPECT_THROW(Kernel::polynomial(2, -1.0), input_error);
}

TEST(Kernel, Parse) {
  EXPECT_DOUBLE_EQ(std::get<Gaussian>(Kernel::parse("gaussian:1.5").family()).bandwidth, 1.5);
  EXPECT_TRUE(std::holds_alternative<Linear>(Kernel::parse("linear").family()));
  const auto p = std::get<Polynomial>(Kernel::parse("polynomial:3:0.25").family());
  EXPECT_EQ(p.degree, 3);
  EXPECT_DOUBLE_EQ(p.offset, 0.25);
  EXPECT_DOUBLE_EQ(std::get<Polynomial>(Kernel::parse("polynomial:2").family()).offset, 1.0);
  EXPECT_THROW(Kernel::parse("rbf"), input_error);
  EXPECT_THROW(Kernel::parse("gaussian"), input_error);
  EXPECT_THROW(Kernel::parse("gaussian:abc"), input_error);
  EXPECT_THROW(Kernel::parse("polynomial:2.5"), input_error);
}

TEST(Kernel, SymmetricOnRandomPairs) {
  std::mt19937_64 rng(7);
  const auto data = oracle::random_points(40, 3, rng);
  for (const auto& k : all_families()) {
    for (std::size_t i = 0; i + 1 < data.size(); ++i) {
      EXPECT_EQ(k(data.points[i], data.points[i + 1]), k(data.points[i + 1], data.points[i]));
    }
  }
}

TEST(Kernel, GramMatricesArePsd) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto data = oracle::random_points(30, 1 + trial % 4, rng);
    for (const auto& k : all_families()) {
      const Matrix g = full_matrix(k, data, data.size());
      const double lmax = linalg::max_eigenvalue(g);
      EXPECT_GE(linalg::min_eigenvalue(g), -1e-8 * lmax) << k.describe();
    }
  }
}

TEST(Kernel, DiagonalPositiveForSupportedFamilies) {
  std::mt19937_64 rng(3);
  const auto data = oracle::random_points(20, 2, rng);
  for (const auto& x : data.points) {
    EXPECT_DOUBLE_EQ(Kernel::gaussian(0.5)(x, x), 1.0);
    EXPECT_GE(Kernel::polynomial(3, 0.5)(x, x), std::pow(0.5, 3));
  }
}

TEST(Column, FirstPointHasEmptyCross) {
  Dataset d{{pt({2, 0})}, {1.0}, std::nullopt, std::nullopt};
  const auto c = column(Kernel::linear(), d, 1);
  EXPECT_EQ(c.index, 1u);
  EXPECT_EQ(c.cross.size(), 0);
  EXPECT_DOUBLE_EQ(c.diag, 4.0);
}

TEST(Column, DuplicatedPointUnderGaussian) {
  Dataset d{{pt({0.4, 0.1}), pt({0.4, 0.1})}, {0.0, 0.0}, std::nullopt, std::nullopt};
  const auto c = column(Kernel::gaussian(1.0), d, 2);
  ASSERT_EQ(c.cross.size(), 1);
  EXPECT_DOUBLE_EQ(c.cross(0), 1.0);
}

TEST(Column, IndexOutOfRange) {
  Dataset d{{pt({1})}, {0.0}, std::nullopt, std::nullopt};
  EXPECT_THROW(column(Kernel::linear(), d, 0), input_error);
  EXPECT_THROW(column(Kernel::linear(), d, 2), input_error);
}

TEST(Column, BorderingReproducesFullMatrix) {
  std::mt19937_64 rng(5);
  const auto data = oracle::random_points(25, 3, rng);
  for (const auto& k : all_families()) {
    const Matrix full = full_matrix(k, data, data.size());
    for (Index t1 = 1; t1 <= data.size(); ++t1) {
      const auto c = column(k, data, t1);
      const auto r = static_cast<Eigen::Index>(t1 - 1);
      for (Eigen::Index i = 0; i < r; ++i) EXPECT_EQ(c.cross(i), full(r, i));
      EXPECT_EQ(c.diag, full(r, r));
    }
  }
}

TEST(FullMatrix, SingleAndOrthonormal) {
  Dataset d{{pt({1, 0, 0}), pt({0, 1, 0}), pt({0, 0, 1})}, {0, 0, 0}, std::nullopt, std::nullopt};
  const Matrix k1 = full_matrix(Kernel::linear(), d, 1);
  ASSERT_EQ(k1.rows(), 1);
  EXPECT_DOUBLE_EQ(k1(0, 0), 1.0);
  EXPECT_EQ(full_matrix(Kernel::linear(), d, 3), Matrix::Identity(3, 3));
  EXPECT_THROW(full_matrix(Kernel::linear(), d, 4), input_error);
}

TEST(FullMatrix, BitwiseSymmetric) {
  std::mt19937_64 rng(9);
  const auto data = oracle::random_points(30, 4, rng);
  for (const auto& k : all_families()) {
    const Matrix g = full_matrix(k, data, data.size());
    EXPECT_TRUE(g == g.transpose());
  }
}

TEST(Dataset, ValidateShapes) {
  Dataset d{{pt({1, 2}), pt({1})}, {0.0, 0.0}, std::nullopt, std::nullopt};
  EXPECT_THROW(d.validate(), input_error);
  Dataset e{{pt({1, 2})}, {0.0, 1.0}, std::nullopt, std::nullopt};
  EXPECT_THROW(e.validate(), input_error);
  Dataset f{{pt({1, 2})}, {0.0}, std::vector<double>{1.0, 2.0}, std::nullopt};
  EXPECT_THROW(f.validate(), input_error);
  EXPECT_THROW(Dataset{}.truth_prefix(0), input_error);
}

TEST(Csv, RoundTripPreservesValues) {
  const auto data = generate_gaussian_mixture(GaussianMixtureSpec{50, 3, 5, 0.2, 4}, Kernel::gaussian(1.0));
  std::stringstream buf;
  write_csv(buf, data);
  const auto back = read_csv(buf);
  ASSERT_EQ(back.size(), data.size());
  ASSERT_TRUE(back.truth.has_value());
  for (std::size_t t = 0; t < data.size(); ++t) {
    EXPECT_EQ(back.points[t], data.points[t]);
    EXPECT_EQ(back.labels[t], data.labels[t]);
    EXPECT_EQ((*back.truth)[t], (*data.truth)[t]);
  }
}

TEST(Csv, WithoutTruthColumn) {
  std::stringstream in("x_1,x_2,y\n1,2,3\n4,5,6\n");
  const auto d = read_csv(in);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dim(), 2);
  EXPECT_FALSE(d.truth.has_value());
  EXPECT_DOUBLE_EQ(d.labels[1], 6.0);
}

TEST(Csv, Errors) {
  std::stringstream empty("");
  EXPECT_THROW(read_csv(empty), config_error);
  std::stringstream no_header("1,2,3\n");
  EXPECT_THROW(read_csv(no_header), config_error);
  std::stringstream bad_cell("x_1,y\n1,abc\n");
  EXPECT_THROW(read_csv(bad_cell), config_error);
  std::stringstream ragged("x_1,y\n1,2,3\n");
  EXPECT_THROW(read_csv(ragged), config_error);
  std::stringstream extra("x_1,y,z\n1,2,3\n");
  EXPECT_THROW(read_csv(extra), config_error);
  EXPECT_THROW(read_csv(std::string("/nonexistent/data.csv")), config_error);
}

TEST(Generators, NoiselessLabelsEqualTruth) {
  const auto g = generate_gaussian_mixture(GaussianMixtureSpec{40, 2, 6, 0.0, 2}, Kernel::gaussian(1.0));
  const auto b = generate_orthogonal_blocks(OrthogonalBlocksSpec{40, 3, 0.0, 2});
  for (const auto* d : {&g, &b}) {
    ASSERT_TRUE(d->truth);
    for (std::size_t t = 0; t < d->size(); ++t) EXPECT_EQ(d->labels[t], (*d->truth)[t]);
  }
}

TEST(Generators, SameSeedSameBytes) {
  auto bytes = [](const Dataset& d) {
    std::stringstream s;
    write_csv(s, d);
    return s.str();
  };
  const GaussianMixtureSpec gs{64, 2, 5, 0.3, 42};
  EXPECT_EQ(bytes(generate_gaussian_mixture(gs, Kernel::gaussian(1.0))),
            bytes(generate_gaussian_mixture(gs, Kernel::gaussian(1.0))));
  const OrthogonalBlocksSpec bs{64, 4, 0.3, 42};
  EXPECT_EQ(bytes(generate_orthogonal_blocks(bs)), bytes(generate_orthogonal_blocks(bs)));
  EXPECT_NE(bytes(generate_orthogonal_blocks(bs)), bytes(generate_orthogonal_blocks({64, 4, 0.3, 43})));
}

TEST(Generators, BlocksEffectiveDimensionClosedForm) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto d = generate_orthogonal_blocks(OrthogonalBlocksSpec{120, 5, 0.1, seed});
    for (double gamma : {0.5, 1.0, 5.0}) {
      for (std::size_t t : {10u, 60u, 120u}) {
        const double exact = effective_dimension(exact_rls(full_matrix(Kernel::linear(), d, t), gamma));
        EXPECT_NEAR(exact, oracle::blocks_effective_dimension(d, t, gamma), 1e-8);
      }
    }
  }
}

TEST(Generators, InvalidSpecs) {
  EXPECT_THROW(generate_orthogonal_blocks(OrthogonalBlocksSpec{0, 3, 0.1, 1}), input_error);
  EXPECT_THROW(generate_orthogonal_blocks(OrthogonalBlocksSpec{10, 0, 0.1, 1}), input_error);
  EXPECT_THROW(generate_gaussian_mixture(GaussianMixtureSpec{10, 2, 3, -1.0, 1}, Kernel::linear()), input_error);
}
