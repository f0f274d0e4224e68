#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "squeak/dataset.hpp"
#include "squeak/error.hpp"
#include "squeak/kernel.hpp"

namespace squeak {

using Rng = std::mt19937_64;

/// One retained stream index with its copy count Q and sampling probability p.
/// All copies of an index share the same probability, so copies are stored
/// collapsed.
struct DictEntry {
  Index index = 0;
  std::uint64_t multiplicity = 0;
  double probability = 1.0;
  Point point;

  /// Q / (qbar * p): the diagonal of S S^T at this index.
  double weight(std::uint64_t qbar) const {
    return static_cast<double>(multiplicity) / (static_cast<double>(qbar) * probability);
  }

  friend bool operator==(const DictEntry& a, const DictEntry& b) {
    return a.index == b.index && a.multiplicity == b.multiplicity &&
           a.probability == b.probability && a.point.size() == b.point.size() &&
           a.point == b.point;
  }
};

/// The multiset I_t. Entries are kept in increasing stream index.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::uint64_t qbar, Index step = 0) : qbar_(qbar), step_(step) {
    if (qbar == 0) throw input_error("dictionary: qbar must be positive");
  }
  Dictionary(std::uint64_t qbar, Index step, std::vector<DictEntry> entries)
      : qbar_(qbar), step_(step), entries_(std::move(entries)) {
    if (qbar == 0) throw input_error("dictionary: qbar must be positive");
    validate();
  }

  std::uint64_t qbar() const { return qbar_; }
  Index step() const { return step_; }
  const std::vector<DictEntry>& entries() const { return entries_; }
  std::size_t distinct() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// |I_t| = sum_j Q_j
  std::uint64_t copies() const {
    std::uint64_t total = 0;
    for (const auto& e : entries_) total += e.multiplicity;
    return total;
  }

  double probability_mass() const {
    double total = 0.0;
    for (const auto& e : entries_) total += e.probability;
    return total;
  }

  bool contains(Index i) const { return find(i) != nullptr; }

  const DictEntry* find(Index i) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), i,
                               [](const DictEntry& e, Index key) { return e.index < key; });
    return (it != entries_.end() && it->index == i) ? &*it : nullptr;
  }

  bool has_points() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const DictEntry& e) { return e.point.size() > 0; });
  }

  /// Fills each entry's point from the dataset by stream index.
  Dictionary with_points(const Dataset& data) const {
    Dictionary out = *this;
    for (auto& e : out.entries_) {
      if (e.index < 1 || e.index > data.size()) {
        throw input_error("dictionary index " + std::to_string(e.index) + " not in dataset");
      }
      e.point = data.at(e.index);
    }
    return out;
  }

  void validate() const {
    Index prev = 0;
    for (const auto& e : entries_) {
      if (e.index <= prev) throw contract_violation("dictionary indices must be strictly increasing");
      if (e.index > step_) throw contract_violation("dictionary index beyond current step");
      if (e.multiplicity == 0) throw contract_violation("dictionary entry with zero multiplicity");
      if (!(e.probability > 0.0 && e.probability <= 1.0)) {
        throw contract_violation("dictionary probability outside (0, 1]");
      }
      prev = e.index;
    }
  }

  friend bool operator==(const Dictionary&, const Dictionary&) = default;

 private:
  friend Dictionary shrink(const Dictionary&, std::span<const double>, Rng&);
  friend Dictionary expand(const Dictionary&, const Point&, Index, double, Rng&);

  std::uint64_t qbar_ = 1;
  Index step_ = 0;
  std::vector<DictEntry> entries_;
};

/// Sample from Binomial(trials, p). p == 1 returns trials without consuming
/// randomness.
inline std::uint64_t draw_binomial(Rng& rng, std::uint64_t trials, double p) {
  if (trials == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<std::uint64_t> dist(trials, p);
  return dist(rng);
}

/// max{min{tau, p_prev}, p_prev / 2}
inline double probability_update(double tau_estimate, double prev_prob) {
  return std::max(std::min(tau_estimate, prev_prob), prev_prob / 2.0);
}

/// Resamples each entry's multiplicity as Binomial(Q_j, new_probs[j] / p_j),
/// visiting entries in increasing index. new_probs is positional, aligned with
/// dict.entries(). Entries reaching zero copies are dropped.
inline Dictionary shrink(const Dictionary& dict, std::span<const double> new_probs, Rng& rng) {
  if (new_probs.size() != dict.entries().size()) {
    throw contract_violation("shrink: one new probability per entry required");
  }
  Dictionary out(dict.qbar(), dict.step());
  out.entries_.reserve(dict.entries().size());
  for (std::size_t k = 0; k < dict.entries().size(); ++k) {
    const DictEntry& e = dict.entries()[k];
    const double ratio = new_probs[k] / e.probability;
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
      throw contract_violation("shrink: probability ratio " + std::to_string(ratio) +
                               " for index " + std::to_string(e.index) + " outside [0, 1]");
    }
    const std::uint64_t q = draw_binomial(rng, e.multiplicity, ratio);
    if (q > 0) out.entries_.push_back(DictEntry{e.index, q, new_probs[k], e.point});
  }
  return out;
}

/// Draws Binomial(qbar, prob) copies of the new point and advances the step.
inline Dictionary expand(const Dictionary& dict, const Point& new_point, Index new_index, double prob,
                         Rng& rng) {
  if (new_index != dict.step() + 1) {
    throw contract_violation("expand: expected index " + std::to_string(dict.step() + 1) + ", got " +
                             std::to_string(new_index));
  }
  if (!(prob > 0.0 && prob <= 1.0)) throw contract_violation("expand: probability outside (0, 1]");
  Dictionary out = dict;
  out.step_ = new_index;
  const std::uint64_t q = draw_binomial(rng, dict.qbar(), prob);
  if (q > 0) out.entries_.push_back(DictEntry{new_index, q, prob, new_point});
  return out;
}

/// w_j = Q_j / (qbar p_j), aligned with dict.entries().
inline Vector selection_weights(const Dictionary& dict) {
  Vector w(static_cast<Eigen::Index>(dict.distinct()));
  for (std::size_t k = 0; k < dict.distinct(); ++k) {
    w(static_cast<Eigen::Index>(k)) = dict.entries()[k].weight(dict.qbar());
  }
  return w;
}

}  // namespace squeak
