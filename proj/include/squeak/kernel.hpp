#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "squeak/error.hpp"
#include "squeak/linalg.hpp"

namespace squeak {

/// 1-based position of a sample in the stream.
using Index = std::size_t;

using Point = Vector;

/// exp(-||x - y||^2 / (2 bandwidth^2))
struct Gaussian {
  double bandwidth = 1.0;
};

/// <x, y>
struct Linear {};

/// (<x, y> + offset)^degree
struct Polynomial {
  int degree = 2;
  double offset = 1.0;
};

/// A positive definite kernel drawn from one of three families.
class Kernel {
 public:
  using Family = std::variant<Gaussian, Linear, Polynomial>;

  Kernel() : family_(Gaussian{}) {}

  static Kernel gaussian(double bandwidth) {
    if (!(bandwidth > 0.0)) throw input_error("gaussian bandwidth must be positive");
    return Kernel(Gaussian{bandwidth});
  }
  static Kernel linear() { return Kernel(Linear{}); }
  static Kernel polynomial(int degree, double offset) {
    if (degree < 1) throw input_error("polynomial degree must be a positive integer");
    if (!(offset >= 0.0)) throw input_error("polynomial offset must be nonnegative");
    return Kernel(Polynomial{degree, offset});
  }

  /// Parses "gaussian:<bandwidth>", "linear", "polynomial:<degree>[:<offset>]".
  static Kernel parse(std::string_view spec);

  const Family& family() const { return family_; }

  double operator()(const Point& x, const Point& y) const {
    if (x.size() != y.size()) {
      throw input_error("kernel evaluation: dimension mismatch (" + std::to_string(x.size()) +
                        " vs " + std::to_string(y.size()) + ")");
    }
    return std::visit([&](const auto& k) { return apply(k, x, y); }, family_);
  }

  std::string describe() const;

 private:
  explicit Kernel(Family f) : family_(std::move(f)) {}

  static double apply(const Gaussian& k, const Point& x, const Point& y) {
    const double d2 = (x - y).squaredNorm();
    return std::exp(-d2 / (2.0 * k.bandwidth * k.bandwidth));
  }
  static double apply(const Linear&, const Point& x, const Point& y) { return x.dot(y); }
  static double apply(const Polynomial& k, const Point& x, const Point& y) {
    return std::pow(x.dot(y) + k.offset, k.degree);
  }

  Family family_;
};

inline double eval(const Kernel& kernel, const Point& x, const Point& y) { return kernel(x, y); }

inline Kernel Kernel::parse(std::string_view spec) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : spec) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  auto number = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const double v = std::stod(parts.at(i), &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw input_error("kernel spec '" + std::string(spec) + "': bad number");
    }
  };
  const std::string& name = parts.front();
  if (name == "gaussian" && parts.size() == 2) return gaussian(number(1));
  if (name == "linear" && parts.size() == 1) return linear();
  if (name == "polynomial" && (parts.size() == 2 || parts.size() == 3)) {
    const double degree = number(1);
    if (degree != std::floor(degree)) throw input_error("polynomial degree must be an integer");
    return polynomial(static_cast<int>(degree), parts.size() == 3 ? number(2) : 1.0);
  }
  throw input_error("unknown kernel spec '" + std::string(spec) +
                    "' (expected gaussian:<bw>, linear, polynomial:<deg>[:<offset>])");
}

inline std::string Kernel::describe() const {
  struct Describe {
    std::string operator()(const Gaussian& k) const {
      return "gaussian:" + std::to_string(k.bandwidth);
    }
    std::string operator()(const Linear&) const { return "linear"; }
    std::string operator()(const Polynomial& k) const {
      return "polynomial:" + std::to_string(k.degree) + ":" + std::to_string(k.offset);
    }
  };
  return std::visit(Describe{}, family_);
}

/// Anything that evaluates a kernel on two points.
template <typename K>
concept PointKernel = requires(const K& k, const Point& x) {
  { k(x, x) } -> std::convertible_to<double>;
};

/// Kernel access keyed by stream position, so the streaming path can be
/// audited for which entries K(x_i, x_j) it touches.
template <typename A>
concept IndexedKernelAccess = requires(A& a, Index i, const Point& x) {
  { a(i, x, i, x) } -> std::convertible_to<double>;
};

/// Forwards to a point kernel and ignores indices.
template <PointKernel K>
class PlainAccess {
 public:
  explicit PlainAccess(K kernel) : kernel_(std::move(kernel)) {}
  double operator()(Index, const Point& xi, Index, const Point& xj) { return kernel_(xi, xj); }
  const K& kernel() const { return kernel_; }

 private:
  K kernel_;
};

/// Counts every evaluation and records the (i, j) pairs touched since the last
/// call to clear_log().
template <PointKernel K>
class AuditedAccess {
 public:
  explicit AuditedAccess(K kernel) : kernel_(std::move(kernel)) {}

  double operator()(Index i, const Point& xi, Index j, const Point& xj) {
    ++total_;
    log_.emplace_back(i, j);
    return kernel_(xi, xj);
  }

  std::uint64_t total() const { return total_; }
  const std::vector<std::pair<Index, Index>>& log() const { return log_; }
  void clear_log() { log_.clear(); }

 private:
  K kernel_;
  std::uint64_t total_ = 0;
  std::vector<std::pair<Index, Index>> log_;
};

}  // namespace squeak
