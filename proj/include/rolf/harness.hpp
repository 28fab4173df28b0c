#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "rolf/environments.hpp"
#include "rolf/policies.hpp"

namespace rolf {

enum class InstanceKind { scenario, thm1, appF, varying };

std::string_view to_string(InstanceKind kind);

/// Experiment description. Parsed from flat `key = value` text; '#' starts a
/// comment. Keys:
///   instance        scenario | thm1 | appF | varying
///   scenario, case  scenario instances only
///   K, d, d_z, d_u  dimensions; unset values take the instance defaults
///   algorithms      comma-separated policy names
///   horizon         rounds per run (alias T)
///   seeds           comma-separated unsigned integers
///   p, delta, delta_prime, sigma, penalty_scale
///   exploration_scale  number, or `auto`
///   refit           auto | every | sparse
///   master_seed, threads, out, plot
struct ExperimentConfig {
  InstanceKind instance = InstanceKind::scenario;
  int scenario = 1;
  int feature_case = 1;
  int K = 0;  // 0 means the instance default
  int d = 0;
  int d_z = 0;
  int d_u = -1;
  std::vector<std::string> algorithms = {"rolf_lasso", "rolf_ridge", "linucb",
                                         "lints",      "ucb_delta",  "drlasso"};
  int horizon = 1200;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double p = 0.6;
  double delta = 1e-4;
  double delta_prime = 1e-4;
  double sigma = 0.05;
  double exploration_scale = std::numeric_limits<double>::quiet_NaN();
  double penalty_scale = 1.0;
  std::string refit = "auto";
  std::uint64_t master_seed = 20240601;
  int threads = 0;  // 0 means hardware concurrency
  std::string out_dir = "results";
  bool plot = false;

  /// Applies one key/value pair; throws ConfigError on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  void validate() const;
  bool fixed_features() const { return instance != InstanceKind::varying; }
  ScenarioConfig scenario_config(std::uint64_t seed) const;
  PolicyConfig policy_config() const;

  static ExperimentConfig parse(std::istream& is);
  static ExperimentConfig load(const std::filesystem::path& path);
};

struct RunRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string algorithm;
  int t = 0;
  bool explored = false;
  bool matched = false;
  Arm arm = 0;
  double reward = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
};

struct RunResult {
  std::string algorithm;
  std::uint64_t seed = 0;
  // Set when the scenario generator had to shrink theta to keep rewards in [-1, 1].
  bool theta_rescaled = false;
  std::vector<RunRecord> records;
};

/// One (algorithm, seed) run. Its RNG streams depend only on
/// (master_seed, algorithm index, seed).
RunResult run_single(const ExperimentConfig& cfg, std::size_t algorithm_index, std::uint64_t seed);

/// Every (algorithm, seed) pair, algorithm-major, run on a thread pool.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

struct AggregateRow {
  std::string algorithm;
  int t = 0;
  int runs = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
  double min = 0.0;
  double max = 0.0;
};

/// Mean and spread of cumulative regret per (algorithm, t), ordered by
/// algorithm name then t. Independent of record order.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records);
std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs);

std::vector<RunRecord> flatten(const std::vector<RunResult>& runs);

void write_runs_csv(std::ostream& os, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_runs_csv(std::istream& is);
void write_summary_csv(std::ostream& os, const std::vector<AggregateRow>& rows);
/// One row per run: algorithm, seed, instance kind, horizon, theta_rescaled flag.
void write_metadata_csv(std::ostream& os, const std::vector<RunResult>& runs,
                        const ExperimentConfig& cfg);
/// Mean cumulative regret per algorithm with a shaded one-std band.
void write_regret_svg(std::ostream& os, const std::vector<AggregateRow>& rows);

/// Writes runs.csv, summary.csv, metadata.csv and, when cfg.plot is set, regret.svg under
/// cfg.out_dir. Returns the written paths.
std::vector<std::filesystem::path> emit_outputs(const std::vector<RunResult>& runs,
                                                const ExperimentConfig& cfg);

}  // namespace rolf
