// Command-line front end: runs seeded experiments and writes synthetic datasets.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "squeak/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    try {
      const auto dash = part.find('-');
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(part));
      } else {
        const auto lo = std::stoull(part.substr(0, dash));
        const auto hi = std::stoull(part.substr(dash + 1));
        if (hi < lo) throw std::invalid_argument("range");
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::exception&) {
      throw squeak::config_error("--seeds: cannot parse '" + part + "' (use e.g. 1,2,5-9)");
    }
  }
  return seeds;
}

std::vector<squeak::Index> parse_checkpoints(const std::string& text) {
  std::vector<squeak::Index> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    try {
      out.push_back(static_cast<squeak::Index>(std::stoull(part)));
    } catch (const std::exception&) {
      throw squeak::config_error("--checkpoints: cannot parse '" + part + "'");
    }
  }
  return out;
}

struct Flags {
  std::string config;
  std::string dataset;
  std::size_t n = 0;
  long dim = 0;
  std::size_t blocks = 0;
  std::size_t centers = 0;
  double noise = 0;
  std::uint64_t data_seed = 0;
  double noise_stddev = 0;
  std::string kernel;
  double gamma = 0, mu = 0, epsilon = 0, delta = 0, qbar_const = 0;
  std::string sampler;
  std::uint64_t baseline_m = 0;
  std::string seeds;
  std::string checkpoints;
  std::string out;
  std::size_t verify_cap = 0;
  std::size_t workers = 0;
  bool resume = false;
  bool strict = false;
};

void add_dataset_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--dataset", f.dataset, "CSV path, or synthetic generator 'gaussian' / 'blocks'");
  cmd.add_option("--n", f.n, "synthetic: number of samples");
  cmd.add_option("--dim", f.dim, "gaussian generator: input dimension");
  cmd.add_option("--blocks", f.blocks, "blocks generator: number of orthogonal blocks");
  cmd.add_option("--centers", f.centers, "gaussian generator: centres in the target expansion");
  cmd.add_option("--noise", f.noise, "synthetic: label noise standard deviation");
  cmd.add_option("--data-seed", f.data_seed, "synthetic: generator seed");
  cmd.add_option("--kernel", f.kernel, "gaussian:<bw> | linear | polynomial:<deg>[:<offset>]");
}

squeak::ExperimentConfig resolve(const CLI::App& cmd, const Flags& f) {
  squeak::ExperimentConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw squeak::config_error("cannot open config file '" + f.config + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw squeak::config_error("config file '" + f.config + "': " + e.what());
    }
    cfg = squeak::config_from_json(j);
  }
  auto given = [&](const char* name) {
    const auto* opt = cmd.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--dataset")) cfg.dataset.source = f.dataset;
  if (given("--n")) cfg.dataset.n = f.n;
  if (given("--dim")) cfg.dataset.dim = f.dim;
  if (given("--blocks")) cfg.dataset.blocks = f.blocks;
  if (given("--centers")) cfg.dataset.centers = f.centers;
  if (given("--noise")) cfg.dataset.noise = f.noise;
  if (given("--data-seed")) cfg.dataset.seed = f.data_seed;
  if (given("--noise-stddev")) cfg.dataset.noise_stddev = f.noise_stddev;
  if (given("--kernel")) cfg.kernel = f.kernel;
  if (given("--gamma")) cfg.gamma = f.gamma;
  if (given("--mu")) cfg.mu = f.mu;
  if (given("--epsilon")) cfg.epsilon = f.epsilon;
  if (given("--delta")) cfg.delta = f.delta;
  if (given("--qbar-const")) cfg.qbar_constant = f.qbar_const;
  if (given("--sampler")) cfg.sampler = squeak::parse_sampler(f.sampler);
  if (given("--baseline-m")) cfg.baseline_m = f.baseline_m;
  if (given("--seeds")) cfg.seeds = parse_seeds(f.seeds);
  if (given("--checkpoints")) cfg.checkpoints = parse_checkpoints(f.checkpoints);
  if (given("--out")) cfg.out = f.out;
  if (given("--verify-cap")) cfg.verify_cap = f.verify_cap;
  if (given("--workers")) cfg.workers = f.workers;
  if (given("--resume")) cfg.resume = true;
  if (given("--strict")) cfg.strict = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming ridge-leverage-score Nystrom sketching experiments"};
  app.require_subcommand(1);

  Flags run_flags;
  auto* run = app.add_subcommand("run", "run a sampler over seeds and verify checkpoints");
  run->add_option("--config", run_flags.config, "JSON config file (keys as long flags); flags override it");
  add_dataset_flags(*run, run_flags);
  run->add_option("--noise-stddev", run_flags.noise_stddev, "noise level of a CSV dataset for risk computation");
  run->add_option("--gamma", run_flags.gamma, "Nystrom regularization");
  run->add_option("--mu", run_flags.mu, "ridge regularization");
  run->add_option("--epsilon", run_flags.epsilon, "accuracy, in (0, 1)");
  run->add_option("--delta", run_flags.delta, "failure probability, in (0, 1)");
  run->add_option("--qbar-const", run_flags.qbar_const, "leading constant of the copy budget (default 1)");
  run->add_option("--sampler", run_flags.sampler, "squeak | uniform | oracle-rls");
  run->add_option("--baseline-m", run_flags.baseline_m, "draws for the uniform / oracle-rls baselines");
  run->add_option("--seeds", run_flags.seeds, "seed list, e.g. 0-49 or 1,4,9");
  run->add_option("--checkpoints", run_flags.checkpoints, "comma-separated t values (default 16,32,...,n)");
  run->add_option("--out", run_flags.out, "JSON-lines report path; a summary CSV is written alongside");
  run->add_option("--verify-cap", run_flags.verify_cap, "largest t allowed for dense verification (default 2000)");
  run->add_option("--workers", run_flags.workers, "parallel seed workers (default: hardware threads)");
  run->add_flag("--resume", run_flags.resume, "append to --out, skipping (seed, checkpoint) pairs already present");
  run->add_flag("--strict", run_flags.strict, "exit with status 3 if any gamma-approximation check fails");

  Flags gen_flags;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
  add_dataset_flags(*gen, gen_flags);
  gen->add_option("--out", gen_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      squeak::ExperimentConfig cfg = resolve(*gen, gen_flags);
      if (!cfg.dataset.synthetic()) throw squeak::config_error("generate: --dataset must be gaussian or blocks");
      const auto data = squeak::generate_synthetic(cfg.dataset, squeak::Kernel::parse(cfg.kernel));
      std::ofstream out(gen_out);
      if (!out) throw squeak::config_error("cannot write '" + gen_out + "'");
      squeak::write_csv(out, data);
      return 0;
    }

    const squeak::ExperimentConfig cfg = resolve(*run, run_flags);
    const auto report = squeak::run_experiment(cfg);
    std::size_t failures = 0;
    for (const auto& r : report.records) failures += r.gamma_check.holds ? 0 : 1;
    std::cerr << "squeak: " << report.records.size() << " checkpoint records";
    if (report.skipped) std::cerr << " (" << report.skipped << " already present, skipped)";
    std::cerr << ", " << failures << " gamma-approximation failures\n";
    if (cfg.out.empty()) {
      for (const auto& r : report.records) std::cout << squeak::record_to_json(r, cfg.sampler).dump() << '\n';
    }
    return (cfg.strict && failures > 0) ? kExitVerification : 0;
  } catch (const squeak::config_error& e) {
    std::cerr << "squeak: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const squeak::input_error& e) {
    std::cerr << "squeak: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "squeak: error: " << e.what() << '\n';
    return 1;
  }
}
