#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "squeak/dictionary.hpp"
#include "squeak/error.hpp"
#include "squeak/rls.hpp"

namespace squeak {

/// Same shape as the streaming dictionary; qbar is the number of draws m and
/// each index carries its sampling probability. Points are not attached; use
/// Dictionary::with_points.
using BaselineDictionary = Dictionary;

enum class Replacement { with, without };

namespace detail {

inline BaselineDictionary collect_draws(const std::map<Index, std::uint64_t>& counts,
                                        const std::vector<double>& probs, std::uint64_t m, std::size_t n) {
  std::vector<DictEntry> entries;
  entries.reserve(counts.size());
  for (const auto& [idx, q] : counts) entries.push_back(DictEntry{idx, q, probs[idx - 1], Point()});
  return BaselineDictionary(m, n, std::move(entries));
}

}  // namespace detail

/// m i.i.d. uniform draws over [n], each index with probability 1/n. The
/// without-replacement variant draws m distinct indices (m <= n) and exists so
/// tests can build the exhaustive dictionary with m = n.
inline BaselineDictionary uniform_sample(std::size_t n, std::uint64_t m, Rng& rng,
                                         Replacement mode = Replacement::with) {
  if (n == 0 || m == 0) throw input_error("uniform_sample: n and m must be positive");
  const std::vector<double> probs(n, 1.0 / static_cast<double>(n));
  std::map<Index, std::uint64_t> counts;
  if (mode == Replacement::with) {
    std::uniform_int_distribution<Index> pick(1, n);
    for (std::uint64_t d = 0; d < m; ++d) ++counts[pick(rng)];
  } else {
    if (m > n) throw input_error("uniform_sample: cannot draw more than n without replacement");
    std::vector<Index> all(n);
    std::iota(all.begin(), all.end(), Index{1});
    std::vector<Index> chosen;
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), static_cast<std::ptrdiff_t>(m), rng);
    for (Index i : chosen) counts[i] = 1;
  }
  return detail::collect_draws(counts, probs, m, n);
}

/// m i.i.d. draws from p_i = tau_i / d_eff with tau the exact RLS of K.
inline BaselineDictionary oracle_rls_sample(const Matrix& k, double gamma, std::uint64_t m, Rng& rng) {
  if (m == 0) throw input_error("oracle_rls_sample: m must be positive");
  const Vector tau = exact_rls(k, gamma);
  const auto n = static_cast<std::size_t>(tau.size());
  if (n == 0) throw input_error("oracle_rls_sample: empty kernel matrix");
  const double deff = effective_dimension(tau);
  if (!(deff > 0.0)) throw numerical_domain_error("oracle_rls_sample: all leverage scores are zero");
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) probs[i] = tau(static_cast<Eigen::Index>(i)) / deff;
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  std::map<Index, std::uint64_t> counts;
  for (std::uint64_t d = 0; d < m; ++d) ++counts[pick(rng) + 1];
  return detail::collect_draws(counts, probs, m, n);
}

/// n max_i tau_i; never below sum_i tau_i.
inline double d_max(const Vector& rls, std::size_t n) {
  if (rls.size() == 0) return 0.0;
  return static_cast<double>(n) * rls.maxCoeff();
}

}  // namespace squeak
