#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "squeak/baselines.hpp"
#include "squeak/dataset.hpp"
#include "squeak/error.hpp"
#include "squeak/kernel.hpp"
#include "squeak/nystrom.hpp"
#include "squeak/rls.hpp"
#include "squeak/squeak.hpp"

namespace squeak {

inline constexpr const char* kVersion = "0.1.0";

enum class SamplerKind { squeak, uniform, oracle_rls };

inline std::string to_string(SamplerKind s) {
  switch (s) {
    case SamplerKind::squeak: return "squeak";
    case SamplerKind::uniform: return "uniform";
    case SamplerKind::oracle_rls: return "oracle-rls";
  }
  return "?";
}

inline SamplerKind parse_sampler(const std::string& name) {
  if (name == "squeak") return SamplerKind::squeak;
  if (name == "uniform") return SamplerKind::uniform;
  if (name == "oracle-rls") return SamplerKind::oracle_rls;
  throw config_error("unknown sampler '" + name + "' (expected squeak, uniform or oracle-rls)");
}

/// Either a CSV path or one of the synthetic generators ("gaussian", "blocks").
struct DatasetSpec {
  std::string source = "gaussian";
  std::size_t n = 256;
  Eigen::Index dim = 2;
  std::size_t blocks = 4;
  std::size_t centers = 10;
  double noise = 0.5;
  std::uint64_t seed = 1;
  /// Noise level for file datasets; when absent and a truth column exists it
  /// is estimated from the residuals y - f*.
  std::optional<double> noise_stddev;

  bool synthetic() const { return source == "gaussian" || source == "blocks"; }
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::string kernel = "gaussian:1";
  double gamma = 1.0;
  double mu = 1.0;
  double epsilon = 0.5;
  double delta = 0.1;
  double qbar_constant = 1.0;
  SamplerKind sampler = SamplerKind::squeak;
  /// Number of draws for the baseline samplers; derived from d_eff (oracle)
  /// or d_max (uniform) when absent.
  std::optional<std::uint64_t> baseline_m;
  std::vector<std::uint64_t> seeds{0};
  /// Empty means geometric {16, 32, ..., n}.
  std::vector<Index> checkpoints;
  std::string out;
  std::size_t verify_cap = 2000;
  bool resume = false;
  bool strict = false;
  std::size_t workers = 0;

  void validate() const {
    auto fail = [](const std::string& msg) { throw config_error(msg); };
    if (!(epsilon > 0.0 && epsilon < 1.0)) fail("--epsilon must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) fail("--delta must lie in (0, 1)");
    if (!(gamma > 0.0)) fail("--gamma must be positive");
    if (!(mu > 0.0)) fail("--mu must be positive");
    if (!(qbar_constant > 0.0)) fail("--qbar-const must be positive");
    if (seeds.empty()) fail("--seeds must list at least one seed");
    if (baseline_m && *baseline_m == 0) fail("--baseline-m must be positive");
    try {
      Kernel::parse(kernel);
    } catch (const input_error& e) {
      fail(std::string("--kernel: ") + e.what());
    }
  }
};

/// Reads the JSON config file; keys mirror the long CLI flags.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dataset") base.dataset.source = value.get<std::string>();
      else if (key == "n") base.dataset.n = value.get<std::size_t>();
      else if (key == "dim") base.dataset.dim = value.get<Eigen::Index>();
      else if (key == "blocks") base.dataset.blocks = value.get<std::size_t>();
      else if (key == "centers") base.dataset.centers = value.get<std::size_t>();
      else if (key == "noise") base.dataset.noise = value.get<double>();
      else if (key == "data-seed") base.dataset.seed = value.get<std::uint64_t>();
      else if (key == "noise-stddev") base.dataset.noise_stddev = value.get<double>();
      else if (key == "kernel") base.kernel = value.get<std::string>();
      else if (key == "gamma") base.gamma = value.get<double>();
      else if (key == "mu") base.mu = value.get<double>();
      else if (key == "epsilon") base.epsilon = value.get<double>();
      else if (key == "delta") base.delta = value.get<double>();
      else if (key == "qbar-const") base.qbar_constant = value.get<double>();
      else if (key == "sampler") base.sampler = parse_sampler(value.get<std::string>());
      else if (key == "baseline-m") base.baseline_m = value.get<std::uint64_t>();
      else if (key == "seeds") base.seeds = value.get<std::vector<std::uint64_t>>();
      else if (key == "checkpoints") base.checkpoints = value.get<std::vector<Index>>();
      else if (key == "out") base.out = value.get<std::string>();
      else if (key == "verify-cap") base.verify_cap = value.get<std::size_t>();
      else if (key == "resume") base.resume = value.get<bool>();
      else if (key == "strict") base.strict = value.get<bool>();
      else if (key == "workers") base.workers = value.get<std::size_t>();
      else throw config_error("config file: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config file: ") + e.what());
  }
  return base;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"dataset", c.dataset.source},
                      {"kernel", c.kernel},
                      {"gamma", c.gamma},
                      {"mu", c.mu},
                      {"epsilon", c.epsilon},
                      {"delta", c.delta},
                      {"qbar-const", c.qbar_constant},
                      {"sampler", to_string(c.sampler)},
                      {"seeds", c.seeds},
                      {"checkpoints", c.checkpoints},
                      {"verify-cap", c.verify_cap}};
  if (c.dataset.synthetic()) {
    j["n"] = c.dataset.n;
    j["noise"] = c.dataset.noise;
    j["data-seed"] = c.dataset.seed;
    if (c.dataset.source == "gaussian") {
      j["dim"] = c.dataset.dim;
      j["centers"] = c.dataset.centers;
    } else {
      j["blocks"] = c.dataset.blocks;
    }
  }
  if (c.dataset.noise_stddev) j["noise-stddev"] = *c.dataset.noise_stddev;
  if (c.baseline_m) j["baseline-m"] = *c.baseline_m;
  return j;
}

/// Dataset generation for the harness. Synthetic specs are reproducible from
/// their seed.
inline Dataset generate_synthetic(const DatasetSpec& spec, const Kernel& kernel) {
  try {
    if (spec.source == "gaussian") {
      return generate_gaussian_mixture(
          GaussianMixtureSpec{spec.n, spec.dim, spec.centers, spec.noise, spec.seed}, kernel);
    }
    if (spec.source == "blocks") {
      return generate_orthogonal_blocks(OrthogonalBlocksSpec{spec.n, spec.blocks, spec.noise, spec.seed});
    }
  } catch (const input_error& e) {
    throw config_error(e.what());
  }
  throw config_error("unknown synthetic generator '" + spec.source + "'");
}

inline Dataset load_dataset(const DatasetSpec& spec, const Kernel& kernel) {
  Dataset data = spec.synthetic() ? generate_synthetic(spec, kernel) : read_csv(spec.source);
  try {
    data.validate();
  } catch (const input_error& e) {
    throw config_error(spec.source + ": " + e.what());
  }
  if (data.size() == 0) throw config_error(spec.source + ": dataset has no rows");
  if (spec.noise_stddev) {
    data.noise_stddev = spec.noise_stddev;
  } else if (data.truth && !data.noise_stddev) {
    double ss = 0.0;
    for (std::size_t t = 0; t < data.size(); ++t) {
      const double r = data.labels[t] - (*data.truth)[t];
      ss += r * r;
    }
    data.noise_stddev = std::sqrt(ss / static_cast<double>(data.size()));
  }
  return data;
}

inline std::vector<Index> default_checkpoints(std::size_t n) {
  std::vector<Index> out;
  for (Index t = 16; t < n; t *= 2) out.push_back(t);
  out.push_back(n);
  return out;
}

struct CheckpointRecord {
  std::uint64_t seed = 0;
  Index t = 0;
  std::uint64_t copies = 0;
  std::size_t distinct = 0;
  std::uint64_t qbar = 0;
  double d_eff = 0.0;
  double d_max = 0.0;
  GammaCheck gamma_check;
  std::optional<double> risk_exact;
  /// fit and predict with K~
  std::optional<double> risk_nystrom;
  /// fit with K~, predict with K
  std::optional<double> risk_nystrom_k;
  double wall_time = 0.0;
  std::uint64_t peak_kernel_evals = 0;
};

inline nlohmann::json record_to_json(const CheckpointRecord& r, SamplerKind sampler) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"type", "checkpoint"},
          {"sampler", to_string(sampler)},
          {"seed", r.seed},
          {"t", r.t},
          {"copies", r.copies},
          {"distinct", r.distinct},
          {"qbar", r.qbar},
          {"d_eff", r.d_eff},
          {"d_max", r.d_max},
          {"gamma_check",
           {{"holds", r.gamma_check.holds},
            {"margin", r.gamma_check.margin},
            {"lower_margin", r.gamma_check.lower_margin},
            {"upper_margin", r.gamma_check.upper_margin},
            {"norm_bound_holds", r.gamma_check.norm_bound_holds}}},
          {"risk_exact", opt(r.risk_exact)},
          {"risk_nystrom", opt(r.risk_nystrom)},
          {"risk_nystrom_k", opt(r.risk_nystrom_k)},
          {"wall_time_s", r.wall_time},
          {"peak_kernel_evals", r.peak_kernel_evals}};
}

struct RunReport {
  nlohmann::json config;
  std::string version = kVersion;
  std::vector<CheckpointRecord> records;
  /// records skipped because --resume found them already written
  std::size_t skipped = 0;

  bool all_checks_hold() const {
    return std::all_of(records.begin(), records.end(),
                       [](const CheckpointRecord& r) { return r.gamma_check.holds; });
  }
};

namespace detail {

/// Seed-independent quantities at one checkpoint.
struct CheckpointOracle {
  Index t = 0;
  std::unique_ptr<GammaChecker> checker;
  Vector tau;
  double d_eff = 0.0;
  double d_max = 0.0;
  std::optional<double> risk_exact;
};

inline CheckpointOracle make_oracle(const Dataset& data, const Kernel& kernel, const ExperimentConfig& cfg,
                                    Index t) {
  CheckpointOracle o;
  o.t = t;
  Matrix k = full_matrix(kernel, data, t);
  o.tau = exact_rls(k, cfg.gamma);
  o.d_eff = effective_dimension(o.tau);
  o.d_max = d_max(o.tau, t);
  if (data.truth) {
    o.risk_exact = fixed_design_risk(ridge_hat(k, cfg.mu), data.truth_prefix(t), data.noise_stddev.value_or(0.0));
  }
  o.checker = std::make_unique<GammaChecker>(std::move(k), cfg.gamma, cfg.epsilon);
  return o;
}

inline void verify(CheckpointRecord& rec, const Dictionary& dict, const CheckpointOracle& oracle,
                   const Dataset& data, const Kernel& kernel, const ExperimentConfig& cfg) {
  const Index t = oracle.t;
  rec.t = t;
  rec.copies = dict.copies();
  rec.distinct = dict.distinct();
  rec.qbar = dict.qbar();
  rec.d_eff = oracle.d_eff;
  rec.d_max = oracle.d_max;
  const Matrix b = build_sketch(dict, kernel, cfg.gamma).factor(data, t);
  rec.gamma_check = oracle.checker->check(linalg::symmetrized(b * b.transpose()));
  if (data.truth) {
    const auto risk = nystrom_risk(b, data.truth_prefix(t), data.noise_stddev.value_or(0.0), cfg.mu,
                                   &oracle.checker->kernel_matrix());
    rec.risk_exact = oracle.risk_exact;
    rec.risk_nystrom = risk.tilde;
    rec.risk_nystrom_k = risk.cross;
  }
}

inline std::uint64_t baseline_draws(const ExperimentConfig& cfg, const CheckpointOracle& o) {
  if (cfg.baseline_m) return *cfg.baseline_m;
  const double dims = cfg.sampler == SamplerKind::uniform ? o.d_max : o.d_eff;
  const double raw = cfg.qbar_constant / (cfg.epsilon * cfg.epsilon) * dims *
                     std::log(static_cast<double>(o.t) / cfg.delta);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(raw)));
}

inline std::vector<CheckpointRecord> run_seed(std::uint64_t seed, const Dataset& data, const Kernel& kernel,
                                              const ExperimentConfig& cfg,
                                              const std::vector<CheckpointOracle>& oracles,
                                              const std::set<Index>& wanted) {
  std::vector<CheckpointRecord> out;
  if (cfg.sampler == SamplerKind::squeak) {
    SqueakConfig sc;
    sc.rls = RlsConfig{cfg.gamma, cfg.epsilon};
    sc.delta = cfg.delta;
    sc.qbar_constant = cfg.qbar_constant;
    sc.n_hint = data.size();
    sc.seed = seed;
    Squeak<PlainAccess<Kernel>> sampler(PlainAccess<Kernel>(kernel), sc);
    double streaming = 0.0;
    std::size_t next = 0;
    const Index last = oracles.back().t;
    for (Index t = 1; t <= last; ++t) {
      const auto t0 = std::chrono::steady_clock::now();
      const StepState& state = sampler.push(data.at(t));
      streaming += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (t != oracles[next].t) continue;
      if (wanted.contains(t)) {
        CheckpointRecord rec;
        rec.seed = seed;
        verify(rec, state.dictionary, oracles[next], data, kernel, cfg);
        rec.wall_time = streaming;
        rec.peak_kernel_evals = sampler.peak_kernel_evals();
        out.push_back(std::move(rec));
      }
      ++next;
    }
    return out;
  }

  Rng rng(seed);
  for (const auto& oracle : oracles) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t m = baseline_draws(cfg, oracle);
    Dictionary dict = cfg.sampler == SamplerKind::uniform
                          ? uniform_sample(oracle.t, m, rng)
                          : oracle_rls_sample(oracle.checker->kernel_matrix(), cfg.gamma, m, rng);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!wanted.contains(oracle.t)) continue;
    CheckpointRecord rec;
    rec.seed = seed;
    verify(rec, dict.with_points(data), oracle, data, kernel, cfg);
    rec.wall_time = elapsed;
    rec.peak_kernel_evals =
        cfg.sampler == SamplerKind::uniform ? 0 : static_cast<std::uint64_t>(oracle.t * (oracle.t + 1) / 2);
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::string summary_path(const std::string& out) {
  std::filesystem::path p(out);
  if (p.extension() == ".jsonl") p.replace_extension(".csv");
  else p += ".csv";
  return p.string();
}

inline void write_summary_csv(const std::string& jsonl_path, const std::string& csv_path) {
  std::ifstream in(jsonl_path);
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw config_error("cannot write summary '" + csv_path + "'");
  csv << "sampler,seed,t,copies,distinct,qbar,d_eff,d_max,gamma_holds,gamma_margin,"
         "risk_exact,risk_nystrom,risk_nystrom_k,wall_time_s,peak_kernel_evals\n";
  csv.precision(17);
  std::string line;
  auto num = [](const nlohmann::json& v) { return v.is_null() ? std::string() : v.dump(); };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    if (j.value("type", "") != "checkpoint") continue;
    csv << j["sampler"].get<std::string>() << ',' << j["seed"] << ',' << j["t"] << ',' << j["copies"] << ','
        << j["distinct"] << ',' << j["qbar"] << ',' << num(j["d_eff"]) << ',' << num(j["d_max"]) << ','
        << (j["gamma_check"]["holds"].get<bool>() ? 1 : 0) << ',' << num(j["gamma_check"]["margin"]) << ','
        << num(j["risk_exact"]) << ',' << num(j["risk_nystrom"]) << ',' << num(j["risk_nystrom_k"]) << ','
        << num(j["wall_time_s"]) << ',' << j["peak_kernel_evals"] << '\n';
  }
}

}  // namespace detail

/// Runs the configured sampler for every seed, verifies each checkpoint
/// against dense oracles, and appends JSON-lines records to cfg.out (when
/// set) followed by a summary CSV next to it.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Kernel kernel = Kernel::parse(cfg.kernel);
  const Dataset data = load_dataset(cfg.dataset, kernel);
  const std::size_t n = data.size();

  std::vector<Index> checkpoints = cfg.checkpoints.empty() ? default_checkpoints(n) : cfg.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  for (Index t : checkpoints) {
    if (t < 1 || t > n) {
      throw config_error("checkpoint " + std::to_string(t) + " outside the dataset (n = " + std::to_string(n) + ")");
    }
    if (t > cfg.verify_cap) {
      throw config_error("checkpoint " + std::to_string(t) + " exceeds the verification cap " +
                         std::to_string(cfg.verify_cap) + "; raise --verify-cap to allow a dense " +
                         std::to_string(t) + "x" + std::to_string(t) + " check");
    }
  }

  RunReport report;
  ExperimentConfig echo = cfg;
  echo.checkpoints = checkpoints;
  report.config = config_to_json(echo);

  // (seed, t) pairs already present in the output
  std::set<std::pair<std::uint64_t, Index>> done;
  bool fresh = true;
  if (!cfg.out.empty() && cfg.resume && std::filesystem::exists(cfg.out)) {
    std::ifstream in(cfg.out);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      fresh = false;
      try {
        const auto j = nlohmann::json::parse(line);
        if (j.value("type", "") == "checkpoint") done.emplace(j.at("seed").get<std::uint64_t>(), j.at("t").get<Index>());
      } catch (const nlohmann::json::exception&) {
        throw config_error("--resume: '" + cfg.out + "' is not a JSON-lines report");
      }
    }
  }

  std::ofstream out;
  if (!cfg.out.empty()) {
    out.open(cfg.out, cfg.resume ? std::ios::app : std::ios::trunc);
    if (!out) throw config_error("cannot open output '" + cfg.out + "'");
    if (fresh) {
      out << nlohmann::json{{"type", "header"}, {"version", report.version}, {"config", report.config}}.dump()
          << '\n';
    }
  }

  std::vector<detail::CheckpointOracle> oracles;
  oracles.reserve(checkpoints.size());
  for (Index t : checkpoints) oracles.push_back(detail::make_oracle(data, kernel, cfg, t));

  std::vector<std::set<Index>> wanted(cfg.seeds.size());
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    for (Index t : checkpoints) {
      if (done.contains({cfg.seeds[s], t})) ++report.skipped;
      else wanted[s].insert(t);
    }
  }

  // workers fill slots; the calling thread writes them out in seed order
  std::vector<std::optional<std::vector<CheckpointRecord>>> slots(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (std::size_t s = cursor++; s < cfg.seeds.size(); s = cursor++) {
      std::vector<CheckpointRecord> recs;
      std::exception_ptr err;
      if (!wanted[s].empty()) {
        try {
          recs = detail::run_seed(cfg.seeds[s], data, kernel, cfg, oracles, wanted[s]);
        } catch (...) {
          err = std::current_exception();
        }
      }
      std::lock_guard lock(mu);
      slots[s] = std::move(recs);
      errors[s] = err;
      ready.notify_all();
    }
  };
  std::size_t workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.seeds.size());
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);

  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    std::unique_lock lock(mu);
    ready.wait(lock, [&] { return slots[s].has_value(); });
    if (errors[s]) {
      lock.unlock();
      cursor = cfg.seeds.size();
      pool.clear();
      std::rethrow_exception(errors[s]);
    }
    auto recs = std::move(*slots[s]);
    lock.unlock();
    for (auto& r : recs) {
      if (out.is_open()) out << record_to_json(r, cfg.sampler).dump() << '\n';
      report.records.push_back(std::move(r));
    }
    if (out.is_open()) out.flush();
  }
  pool.clear();

  if (out.is_open()) {
    out.close();
    detail::write_summary_csv(cfg.out, detail::summary_path(cfg.out));
  }
  return report;
}

}  // namespace squeak
