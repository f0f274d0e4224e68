#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "squeak/error.hpp"
#include "squeak/kernel.hpp"

namespace squeak {

/// Ordered regression stream y_t = f*(x_t) + noise.
struct Dataset {
  std::vector<Point> points;
  std::vector<double> labels;
  std::optional<std::vector<double>> truth;
  std::optional<double> noise_stddev;

  std::size_t size() const { return points.size(); }
  Eigen::Index dim() const { return points.empty() ? 0 : points.front().size(); }

  /// Point x_t for a 1-based stream index.
  const Point& at(Index t) const { return points.at(t - 1); }

  Vector labels_prefix(std::size_t t) const {
    return Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(t));
  }
  Vector truth_prefix(std::size_t t) const {
    if (!truth) throw input_error("dataset has no ground-truth column");
    return Eigen::Map<const Vector>(truth->data(), static_cast<Eigen::Index>(t));
  }

  void validate() const {
    if (labels.size() != points.size()) {
      throw input_error("dataset: " + std::to_string(points.size()) + " points but " +
                        std::to_string(labels.size()) + " labels");
    }
    if (truth && truth->size() != points.size()) {
      throw input_error("dataset: truth length does not match number of points");
    }
    if (noise_stddev && !(*noise_stddev >= 0.0)) {
      throw input_error("dataset: noise standard deviation must be nonnegative");
    }
    for (const Point& p : points) {
      if (p.size() != dim()) throw input_error("dataset: points have mixed dimensions");
    }
  }
};

/// The bordering payload for x_{t+1}: cross[i] = K(x_{t+1}, x_{i+1}) for the
/// t earlier points, diag = K(x_{t+1}, x_{t+1}).
struct KernelColumn {
  Index index = 0;
  Vector cross;
  double diag = 0.0;
};

template <PointKernel K>
KernelColumn column(const K& kernel, const Dataset& data, Index t_plus_1) {
  if (t_plus_1 < 1 || t_plus_1 > data.size()) {
    throw input_error("column index " + std::to_string(t_plus_1) + " outside [1, " +
                      std::to_string(data.size()) + "]");
  }
  KernelColumn col;
  col.index = t_plus_1;
  const Point& x = data.at(t_plus_1);
  col.cross.resize(static_cast<Eigen::Index>(t_plus_1 - 1));
  for (Index i = 1; i < t_plus_1; ++i) col.cross(static_cast<Eigen::Index>(i - 1)) = kernel(x, data.at(i));
  col.diag = kernel(x, x);
  return col;
}

/// Dense K_t over the first t points. Oracle and verification use only.
template <PointKernel K>
Matrix full_matrix(const K& kernel, const Dataset& data, std::size_t t) {
  if (t > data.size()) {
    throw input_error("full_matrix: t = " + std::to_string(t) + " exceeds dataset size " +
                      std::to_string(data.size()));
  }
  const auto n = static_cast<Eigen::Index>(t);
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // same argument order as column(): newer point first
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = kernel(data.points[static_cast<std::size_t>(i)], data.points[static_cast<std::size_t>(j)]);
      k(j, i) = k(i, j);
    }
    k(i, i) = kernel(data.points[static_cast<std::size_t>(i)], data.points[static_cast<std::size_t>(i)]);
  }
  return k;
}

// ---------------------------------------------------------------------------
// CSV: header row, columns x_1..x_d, y[, f_star]

inline Dataset read_csv(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw config_error(source + ": empty file, header row required");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      cells.push_back(cell);
    }
    return cells;
  };
  const auto header = split(line);
  std::size_t d = 0;
  while (d < header.size() && header[d] == "x_" + std::to_string(d + 1)) ++d;
  if (d == 0 || d >= header.size() || header[d] != "y") {
    throw config_error(source + ": header must be x_1,...,x_d,y[,f_star]");
  }
  const bool has_truth = header.size() == d + 2;
  if (header.size() > d + 2 || (has_truth && header[d + 1] != "f_star")) {
    throw config_error(source + ": unexpected header columns after y");
  }

  Dataset data;
  if (has_truth) data.truth.emplace();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw config_error(source + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(header.size()) + " columns, got " +
                         std::to_string(cells.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        values[c] = std::stod(cells[c], &used);
        if (used != cells[c].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw config_error(source + ":" + std::to_string(lineno) + ": cannot parse '" + cells[c] +
                           "' as a number");
      }
    }
    data.points.emplace_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(d)));
    data.labels.push_back(values[d]);
    if (has_truth) data.truth->push_back(values[d + 1]);
  }
  return data;
}

inline Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open dataset file '" + path + "'");
  return read_csv(in, path);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  const auto d = data.dim();
  for (Eigen::Index j = 0; j < d; ++j) out << "x_" << j + 1 << ',';
  out << 'y';
  if (data.truth) out << ",f_star";
  out << '\n' << std::setprecision(17);
  for (std::size_t t = 0; t < data.size(); ++t) {
    for (Eigen::Index j = 0; j < d; ++j) out << data.points[t](j) << ',';
    out << data.labels[t];
    if (data.truth) out << ',' << (*data.truth)[t];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic generators

/// i.i.d. standard normal points; f* is a random kernel expansion over a few
/// centres with coefficients of total variance one.
struct GaussianMixtureSpec {
  std::size_t n = 256;
  Eigen::Index dim = 2;
  std::size_t centers = 10;
  double noise_stddev = 0.5;
  std::uint64_t seed = 1;
};

/// Points s_t * e_{b_t}: each sample lies on one of `blocks` orthogonal axes,
/// with scale s_t ~ U[0.5, 1.5]. Under the linear kernel K_t is block diagonal
/// with rank-one blocks, so d_eff(gamma)_t = sum_b lambda_b / (lambda_b + gamma)
/// where lambda_b is the block's sum of squared scales. f*(x) = <beta, x>.
struct OrthogonalBlocksSpec {
  std::size_t n = 256;
  std::size_t blocks = 4;
  double noise_stddev = 0.5;
  std::uint64_t seed = 1;
};

template <PointKernel K>
Dataset generate_gaussian_mixture(const GaussianMixtureSpec& spec, const K& kernel) {
  if (spec.n == 0 || spec.dim < 1 || spec.centers == 0 || !(spec.noise_stddev >= 0.0)) {
    throw input_error("gaussian generator: n, dim, centers must be positive and noise >= 0");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw_point = [&] {
    Point p(spec.dim);
    for (Eigen::Index j = 0; j < spec.dim; ++j) p(j) = normal(rng);
    return p;
  };
  std::vector<Point> centers;
  std::vector<double> coef;
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.centers));
  for (std::size_t c = 0; c < spec.centers; ++c) {
    centers.push_back(draw_point());
    coef.push_back(scale * normal(rng));
  }
  Dataset data;
  data.truth.emplace();
  data.noise_stddev = spec.noise_stddev;
  for (std::size_t t = 0; t < spec.n; ++t) {
    Point x = draw_point();
    double f = 0.0;
    for (std::size_t c = 0; c < centers.size(); ++c) f += coef[c] * kernel(x, centers[c]);
    const double noise = normal(rng);
    data.points.push_back(std::move(x));
    data.truth->push_back(f);
    data.labels.push_back(f + spec.noise_stddev * noise);
  }
  return data;
}

inline Dataset generate_orthogonal_blocks(const OrthogonalBlocksSpec& spec) {
  if (spec.n == 0 || spec.blocks == 0 || !(spec.noise_stddev >= 0.0)) {
    throw input_error("blocks generator: n and blocks must be positive and noise >= 0");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, spec.blocks - 1);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  const auto d = static_cast<Eigen::Index>(spec.blocks);
  Vector beta(d);
  for (Eigen::Index j = 0; j < d; ++j) beta(j) = normal(rng);
  Dataset data;
  data.truth.emplace();
  data.noise_stddev = spec.noise_stddev;
  for (std::size_t t = 0; t < spec.n; ++t) {
    Point x = Point::Zero(d);
    const auto b = static_cast<Eigen::Index>(pick(rng));
    x(b) = scale(rng);
    const double f = beta.dot(x);
    const double noise = normal(rng);
    data.points.push_back(std::move(x));
    data.truth->push_back(f);
    data.labels.push_back(f + spec.noise_stddev * noise);
  }
  return data;
}

}  // namespace squeak
