#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "squeak/dataset.hpp"
#include "squeak/dictionary.hpp"
#include "squeak/error.hpp"
#include "squeak/kernel.hpp"
#include "squeak/rls.hpp"

namespace squeak {

struct SqueakConfig {
  RlsConfig rls;
  double delta = 0.1;
  /// Leading constant c_q in qbar = ceil(c_q alpha / eps^2 log(n / delta)).
  double qbar_constant = 1.0;
  std::size_t n_hint = 1;
  std::uint64_t seed = 0;
  /// Bypasses the formula; needed when epsilon = 0.
  std::optional<std::uint64_t> qbar_override;

  std::uint64_t qbar() const {
    if (qbar_override) return *qbar_override;
    const double eps = rls.epsilon;
    const double raw = qbar_constant * rls.alpha() / (eps * eps) *
                       std::log(static_cast<double>(n_hint) / delta);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(raw)));
  }

  /// Throws on invalid values; returns human-readable warnings otherwise.
  std::vector<std::string> validate() const {
    rls.validate();
    if (!(delta > 0.0 && delta < 1.0)) throw input_error("delta must lie in (0, 1)");
    if (!qbar_override) {
      if (!(rls.epsilon > 0.0)) throw input_error("epsilon must be positive to derive qbar");
      if (!(qbar_constant > 0.0)) throw input_error("qbar constant must be positive");
      if (n_hint == 0) throw input_error("n_hint must be positive");
    } else if (*qbar_override == 0) {
      throw input_error("qbar must be positive");
    }
    std::vector<std::string> warnings;
    if (rls.gamma < 1.0) {
      warnings.push_back("gamma = " + std::to_string(rls.gamma) +
                         " < 1: the any-time guarantees are stated for gamma > 1");
    }
    return warnings;
  }
};

/// State after processing t points. gram caches K among the retained points,
/// aligned with dictionary.entries(), so each step costs |I_t| + 1 new kernel
/// evaluations.
struct StepState {
  Index step = 0;
  Dictionary dictionary;
  /// tau~_{t, i} for i in I_{t-1} and the point t, in increasing index.
  std::vector<RlsEstimate> estimates;
  std::uint64_t copies_total = 0;
  Matrix gram;
  std::uint64_t kernel_evals = 0;

  friend bool operator==(const StepState& a, const StepState& b) {
    return a.step == b.step && a.dictionary == b.dictionary && a.estimates == b.estimates &&
           a.copies_total == b.copies_total && a.gram.rows() == b.gram.rows() &&
           a.gram.cols() == b.gram.cols() && a.gram == b.gram && a.kernel_evals == b.kernel_evals;
  }
};

inline StepState initial_state(const SqueakConfig& config) {
  StepState s;
  s.dictionary = Dictionary(config.qbar(), 0);
  return s;
}

/// Replaces the estimate for (index, raw estimate). Testing hook only.
using EstimateHook = std::function<double(Index, double)>;

namespace detail {

/// One pass of the Dict-Update given kernel values of the incoming point
/// against every retained point (cross) and itself (diag).
inline StepState advance(const StepState& state, const Point& point, Index new_index, const Vector& cross,
                         double diag, const SqueakConfig& config, Rng& rng, const EstimateHook& hook) {
  const Dictionary& dict = state.dictionary;
  const auto m = static_cast<Eigen::Index>(dict.distinct());
  if (state.gram.rows() != m || cross.size() != m) {
    throw contract_violation("process_point: kernel cache out of sync with dictionary");
  }

  Matrix gram(m + 1, m + 1);
  gram.topLeftCorner(m, m) = state.gram;
  gram.block(0, m, m, 1) = cross;
  gram.block(m, 0, 1, m) = cross.transpose();
  gram(m, m) = diag;
  Vector weights(m + 1);
  weights.head(m) = selection_weights(dict);
  weights(m) = 1.0;

  Vector tau = RlsEstimator(gram, weights, config.rls).estimate_all();

  StepState next;
  next.step = new_index;
  next.estimates.reserve(static_cast<std::size_t>(m + 1));
  std::vector<double> new_probs(static_cast<std::size_t>(m));
  for (Eigen::Index a = 0; a <= m; ++a) {
    const Index idx = a < m ? dict.entries()[static_cast<std::size_t>(a)].index : new_index;
    if (hook) tau(a) = std::clamp(hook(idx, tau(a)), 0.0, 1.0);
    next.estimates.push_back(RlsEstimate{idx, tau(a)});
    if (a < m) {
      new_probs[static_cast<std::size_t>(a)] =
          probability_update(tau(a), dict.entries()[static_cast<std::size_t>(a)].probability);
    }
  }
  // the incoming point's previous probability is taken as 1
  const double new_prob = probability_update(tau(m), 1.0);

  Dictionary shrunk = shrink(dict, new_probs, rng);
  next.dictionary = expand(shrunk, point, new_index, new_prob, rng);

  // carry the kernel cache over to the surviving entries
  std::vector<Eigen::Index> keep;
  keep.reserve(next.dictionary.distinct());
  {
    std::size_t a = 0;
    for (const DictEntry& e : next.dictionary.entries()) {
      if (e.index == new_index) {
        keep.push_back(m);
        continue;
      }
      while (dict.entries()[a].index != e.index) ++a;
      keep.push_back(static_cast<Eigen::Index>(a));
    }
  }
  const auto kept = static_cast<Eigen::Index>(keep.size());
  next.gram.resize(kept, kept);
  for (Eigen::Index r = 0; r < kept; ++r) {
    for (Eigen::Index c = 0; c < kept; ++c) next.gram(r, c) = gram(keep[r], keep[c]);
  }
  next.copies_total = next.dictionary.copies();
  next.kernel_evals = static_cast<std::uint64_t>(m) + 1;
  return next;
}

}  // namespace detail

/// One iteration of the streaming sampler: estimate RLS for every retained
/// index and the incoming point, update probabilities, then Shrink and Expand.
/// Kernel entries are requested only between the incoming point and retained
/// points (or itself).
template <IndexedKernelAccess A>
StepState process_point(const StepState& state, const Point& point, Index index, A& access,
                        const SqueakConfig& config, Rng& rng, const EstimateHook& hook = {}) {
  if (index != state.step + 1) {
    throw contract_violation("process_point: expected index " + std::to_string(state.step + 1) +
                             ", got " + std::to_string(index));
  }
  const auto& entries = state.dictionary.entries();
  Vector cross(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t a = 0; a < entries.size(); ++a) {
    cross(static_cast<Eigen::Index>(a)) = access(index, point, entries[a].index, entries[a].point);
  }
  const double diag = access(index, point, index, point);
  return detail::advance(state, point, index, cross, diag, config, rng, hook);
}

/// Same iteration fed by a precomputed bordering column; only its entries at
/// retained indices and its diagonal are read. The raw point is still needed
/// so it can be stored if the column is admitted.
inline StepState process_point(const StepState& state, const KernelColumn& column, const Point& point,
                               const SqueakConfig& config, Rng& rng, const EstimateHook& hook = {}) {
  if (column.index != state.step + 1) {
    throw contract_violation("process_point: expected column " + std::to_string(state.step + 1) +
                             ", got " + std::to_string(column.index));
  }
  if (column.cross.size() != static_cast<Eigen::Index>(state.step)) {
    throw input_error("process_point: column cross length must equal the current step");
  }
  const auto& entries = state.dictionary.entries();
  Vector cross(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t a = 0; a < entries.size(); ++a) {
    cross(static_cast<Eigen::Index>(a)) = column.cross(static_cast<Eigen::Index>(entries[a].index - 1));
  }
  return detail::advance(state, point, column.index, cross, column.diag, config, rng, hook);
}

struct StepProgress {
  Index step = 0;
  std::uint64_t copies = 0;
  std::size_t distinct = 0;
  double probability_mass = 0.0;
  double elapsed_seconds = 0.0;
  double step_seconds = 0.0;
  std::uint64_t kernel_evals = 0;
};

using ProgressCallback = std::function<void(const StepProgress&)>;

/// Stateful single-pass driver. Holds the current state and generator; points
/// are pushed one at a time and only retained points are kept.
template <IndexedKernelAccess A>
class Squeak {
 public:
  Squeak(A access, SqueakConfig config)
      : access_(std::move(access)), config_(std::move(config)), rng_(config_.seed) {
    for (const auto& w : config_.validate()) std::clog << "squeak: warning: " << w << '\n';
    state_ = initial_state(config_);
    start_ = std::chrono::steady_clock::now();
  }

  const StepState& push(const Point& point) {
    const auto t0 = std::chrono::steady_clock::now();
    state_ = process_point(state_, point, state_.step + 1, access_, config_, rng_, hook_);
    const auto t1 = std::chrono::steady_clock::now();
    peak_evals_ = std::max(peak_evals_, state_.kernel_evals);
    if (progress_) {
      progress_(StepProgress{state_.step, state_.copies_total, state_.dictionary.distinct(),
                             state_.dictionary.probability_mass(),
                             std::chrono::duration<double>(t1 - start_).count(),
                             std::chrono::duration<double>(t1 - t0).count(), state_.kernel_evals});
    }
    return state_;
  }

  void on_progress(ProgressCallback cb) { progress_ = std::move(cb); }
  void set_estimate_hook(EstimateHook hook) { hook_ = std::move(hook); }

  const StepState& state() const { return state_; }
  const SqueakConfig& config() const { return config_; }
  A& access() { return access_; }
  std::uint64_t peak_kernel_evals() const { return peak_evals_; }

 private:
  A access_;
  SqueakConfig config_;
  Rng rng_;
  StepState state_;
  EstimateHook hook_;
  ProgressCallback progress_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t peak_evals_ = 0;
};

struct RunOptions {
  /// Steps to record; empty records every step.
  std::set<Index> record;
  ProgressCallback progress;
  EstimateHook hook;
};

/// Processes the dataset in order and returns the recorded states.
template <PointKernel K>
std::vector<StepState> run_stream(const Dataset& data, const K& kernel, const SqueakConfig& config,
                                  const RunOptions& options = {}) {
  if (data.size() == 0) throw input_error("run_stream: dataset is empty");
  data.validate();
  Squeak<PlainAccess<K>> sampler(PlainAccess<K>(kernel), config);
  if (options.progress) sampler.on_progress(options.progress);
  if (options.hook) sampler.set_estimate_hook(options.hook);
  std::vector<StepState> out;
  for (const Point& x : data.points) {
    const StepState& s = sampler.push(x);
    if (options.record.empty() || options.record.contains(s.step)) out.push_back(s);
  }
  return out;
}

}  // namespace squeak
