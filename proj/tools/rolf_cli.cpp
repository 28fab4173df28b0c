// Command-line front end: run experiments from a config file and export
// problem instances as plain-text fixtures.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rolf/harness.hpp"

namespace {

int run_command(const std::string& config_path, const std::vector<std::string>& algos,
                const std::string& seeds, std::optional<int> horizon,
                const std::optional<std::string>& out, std::optional<double> exploration_scale,
                bool plot, std::optional<int> threads) {
  rolf::ExperimentConfig cfg = rolf::ExperimentConfig::load(config_path);
  if (!algos.empty()) {
    std::string joined;
    for (const auto& a : algos) joined += (joined.empty() ? "" : ",") + a;
    cfg.set("algorithms", joined);
  }
  if (!seeds.empty()) cfg.set("seeds", seeds);
  if (horizon) cfg.horizon = *horizon;
  if (out) cfg.out_dir = *out;
  if (exploration_scale) cfg.exploration_scale = *exploration_scale;
  if (plot) cfg.plot = true;
  if (threads) cfg.threads = *threads;
  cfg.validate();

  const auto runs = rolf::run_experiment(cfg);
  const auto written = rolf::emit_outputs(runs, cfg);

  std::map<std::string, rolf::AggregateRow> last;
  for (const auto& row : rolf::aggregate(runs)) last[row.algorithm] = row;
  std::cout << "final cumulative regret at T=" << cfg.horizon << " over " << cfg.seeds.size()
            << " seed(s):\n";
  for (const auto& name : cfg.algorithms) {
    const auto& row = last.at(name);
    std::printf("  %-12s %10.4f +- %.4f\n", name.c_str(), row.mean, row.std);
  }
  for (const auto& path : written) std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int instance_command(const std::string& kind, const std::string& dump, int scenario,
                     int feature_case, std::uint64_t seed, double sigma) {
  rolf::ProblemInstance inst;
  if (kind == "thm1") {
    inst = rolf::lower_bound_instance_thm1(sigma);
  } else if (kind == "appF") {
    inst = rolf::lower_bound_instance_appF(4, 4, sigma);
  } else if (kind == "scenario") {
    auto sc = rolf::ScenarioConfig::defaults(scenario, feature_case);
    sc.seed = seed;
    sc.noise_sigma = sigma;
    inst = rolf::generate_instance(sc);
  } else {
    throw rolf::ConfigError("unknown instance kind '" + kind + "'");
  }
  std::ofstream out(dump);
  if (!out) throw std::runtime_error("cannot open " + dump + " for writing");
  rolf::write_instance(out, inst);
  if (!out) throw std::runtime_error("write failed for " + dump);
  std::cout << "wrote " << kind << " instance (K=" << inst.arms() << ", d=" << inst.d
            << ", d_z=" << inst.dz() << ", optimal arm " << inst.optimal_arm() << ") to " << dump
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear bandits with partially observable features"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment and write CSV outputs");
  std::string config_path, seeds;
  std::vector<std::string> algos;
  std::optional<int> horizon, threads;
  std::optional<std::string> out;
  std::optional<double> exploration_scale;
  bool plot = false;
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--algo", algos, "Algorithm(s) to run; overrides the config list");
  run->add_option("--seeds", seeds, "Comma-separated seeds");
  run->add_option("--horizon", horizon, "Rounds per run");
  run->add_option("--out", out, "Output directory");
  run->add_option("--exploration-scale", exploration_scale, "Forced-exploration scale");
  run->add_option("--threads", threads, "Worker threads (0 = all cores)");
  run->add_flag("--plot", plot, "Also write regret.svg");

  auto* instance = app.add_subcommand("instance", "Export a problem instance");
  std::string kind, dump;
  int scenario = 1, feature_case = 1;
  std::uint64_t seed = 1;
  double sigma = 0.05;
  instance->add_option("--kind", kind, "thm1 | appF | scenario")->required();
  instance->add_option("--dump", dump, "Output path")->required();
  instance->add_option("--scenario", scenario, "Scenario (1 or 2)");
  instance->add_option("--case", feature_case, "Feature case (1-3)");
  instance->add_option("--seed", seed, "Instance seed");
  instance->add_option("--sigma", sigma, "Noise standard deviation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run)
      return run_command(config_path, algos, seeds, horizon, out, exploration_scale, plot, threads);
    return instance_command(kind, dump, scenario, feature_case, seed, sigma);
  } catch (const rolf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
