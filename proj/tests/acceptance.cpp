// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rolf/harness.hpp"

namespace {

using namespace rolf;
namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

// Mean cumulative regret curve over every run of one algorithm.
std::vector<double> mean_curve(const std::vector<RunResult>& runs, int horizon) {
  std::vector<double> mean(horizon, 0.0);
  for (const auto& run : runs)
    for (int t = 0; t < horizon; ++t) mean[t] += run.records[t].cum_regret;
  for (double& m : mean) m /= static_cast<double>(runs.size());
  return mean;
}

ExperimentConfig lower_bound_config(const std::string& algorithm) {
  ExperimentConfig cfg;
  cfg.instance = InstanceKind::thm1;
  cfg.sigma = 1.0;
  cfg.horizon = 2000;
  cfg.algorithms = {algorithm};
  cfg.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
  return cfg;
}

ExperimentConfig figure_config(int feature_case) {
  ExperimentConfig cfg;  // Scenario 1 defaults: K=30, d=17, d_z=35, T=1200, sigma=0.05, p=0.6
  cfg.feature_case = feature_case;
  cfg.algorithms = {"rolf_lasso", "rolf_ridge", "linucb", "lints", "ucb_delta"};
  return cfg;
}

Verdict c1_lints_separation() {
  const auto cfg = lower_bound_config("lints");
  const auto runs = run_experiment(cfg);
  const int optimal = lower_bound_instance_thm1().optimal_arm();
  long suboptimal = 0, total = 0;
  for (const auto& run : runs)
    for (const auto& r : run.records)
      if (r.t > cfg.horizon / 2) {
        suboptimal += r.arm != optimal;
        ++total;
      }
  const double freq = static_cast<double>(suboptimal) / total;
  std::vector<double> t(cfg.horizon);
  for (int i = 0; i < cfg.horizon; ++i) t[i] = i + 1;
  const auto fit = oracle::fit_line(t, mean_curve(runs, cfg.horizon));
  return {freq >= 0.35 && fit.slope >= 0.05 && fit.r2 >= 0.95,
          fmt("second-half suboptimal freq %.4f (>= 0.35), slope %.4f (>= 0.05), R^2 %.4f (>= 0.95)",
              freq, fit.slope, fit.r2)};
}

Verdict c2_rolf_sublinear() {
  const auto cfg = lower_bound_config("rolf_lasso");
  const auto mean = mean_curve(run_experiment(cfg), cfg.horizon);
  const double r1000 = mean[999], r2000 = mean[1999];
  const double ratio = r2000 / r1000;
  return {ratio <= 1.7,
          fmt("R(1000) %.2f, R(2000) %.2f, ratio %.3f (<= 1.7)", r1000, r2000, ratio)};
}

Verdict c3_figure_ordering() {
  bool pass = true;
  std::string detail;
  for (int c = 1; c <= 3; ++c) {
    const auto cfg = figure_config(c);
    const auto runs = run_experiment(cfg);
    std::vector<double> final(cfg.algorithms.size(), 0.0);
    for (std::size_t i = 0; i < runs.size(); ++i)
      final[i / cfg.seeds.size()] += runs[i].records.back().cum_regret / cfg.seeds.size();
    const double baseline = std::min({final[2], final[3], final[4]});
    pass = pass && final[0] < baseline && final[1] < baseline;
    detail += fmt("case %.0f: lasso %.1f ridge %.1f vs best baseline %.1f; ", c, final[0], final[1],
                  baseline);
  }
  detail += "(baselines: linucb, lints, ucb_delta)";
  return {pass, detail};
}

Verdict c4_case_structure() {
  int ok = 0, total = 0;
  for (std::uint64_t seed = 0; total < 100; ++seed) {
    for (int c = 2; c <= 3; ++c, ++total) {
      auto cfg = ScenarioConfig::defaults(1, c);
      cfg.seed = seed;
      const auto inst = generate_instance(cfg);
      const int dh = true_dh(inst, complement_basis(reduce_rank(inst.X())));
      ok += dh == (c == 2 ? 0 : inst.arms() - inst.d);
    }
  }
  return {ok == total, fmt("%.0f of %.0f instances match", ok, total)};
}

Verdict c5_pseudo_reward_unbiased() {
  auto cfg = ScenarioConfig::defaults(1, 1);
  cfg.K = 5;
  cfg.d_z = 4;
  cfg.d = 2;
  cfg.d_u = 2;
  cfg.seed = 11;
  const auto inst = generate_instance(cfg);
  const auto obs = reduce_rank(inst.X());
  const auto basis = complement_basis(obs);
  const auto aug = augment(obs, basis);
  const Vector target = aug.features * true_mu_star(inst, obs, basis);

  Rng rng(12);
  Vector mu_check(5);
  for (int i = 0; i < 5; ++i) mu_check(i) = rng.uniform(-2, 2);
  const Arm played = 3;
  const Vector phi = pseudo_action_probs(played, 5, 0.6);
  const std::vector<double> weights(phi.data(), phi.data() + phi.size());

  const int n = 100000;
  Vector sum = Vector::Zero(5), sum_sq = Vector::Zero(5);
  for (int i = 0; i < n; ++i) {
    const Arm at = rng.categorical(weights);
    const Vector y = dr_pseudo_rewards(aug.features, mu_check, at, inst.expected_rewards(at), phi(at));
    sum += y;
    sum_sq += y.cwiseProduct(y);
  }
  double worst = 0.0;
  for (int a = 0; a < 5; ++a) {
    const double mean = sum(a) / n;
    const double var = (sum_sq(a) - n * mean * mean) / (n - 1);
    const double se = std::sqrt(var / n);
    worst = std::max(worst, std::abs(mean - target(a)) / se);
  }
  return {worst <= 3.0, fmt("largest |mean - target| / SE over arms %.3f (<= 3)", worst)};
}

Verdict c6_gram_eigenvalues() {
  Rng rng(21);
  int ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 2 + rng.uniform_int(39);
    const int d = 1 + rng.uniform_int(K + 5);  // includes d > K
    Matrix X(d, K);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal();
    const auto obs = reduce_rank(X);
    const auto aug = augment(obs, complement_basis(obs));
    Eigen::SelfAdjointEigenSolver<Matrix> ex(X * X.transpose()), eg(aug.gram);
    const double lo = std::min(ex.eigenvalues().minCoeff(), 1.0) - 1e-8;
    const double hi = std::max(ex.eigenvalues().maxCoeff(), 1.0) + 1e-8;
    const double below = lo - eg.eigenvalues().minCoeff();
    const double above = eg.eigenvalues().maxCoeff() - hi;
    worst = std::max({worst, below, above});
    ok += below <= 0 && above <= 0;
  }
  return {ok == 100, fmt("%.0f of 100 spectra within bounds, worst excess %.3g", ok, worst)};
}

Verdict c7_lasso_oracle() {
  Rng rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 1 + trial % 3;
    Matrix X(20, k);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = rng.normal();
    Vector truth(k), y(20);
    for (int j = 0; j < k; ++j) truth(j) = rng.uniform(-1, 1);
    for (int i = 0; i < 20; ++i) y(i) = X.row(i).dot(truth) + 0.3 * rng.normal();
    const double lambda = rng.uniform(0.1, 8.0);
    const auto fit = solve_lasso(X, y, lambda);
    const Vector ref = oracle::lasso_brute_force(X, y, lambda, 3.0, k == 3 ? 0.05 : 0.01);
    const double gap = std::abs(oracle::lasso_objective(X, y, lambda, fit.coef) -
                                oracle::lasso_objective(X, y, lambda, ref));
    worst = std::max(worst, gap);
  }
  return {worst <= 1e-6, fmt("largest objective difference %.3g (<= 1e-6)", worst)};
}

Verdict c8_lasso_rate() {
  ExperimentConfig exp;
  const std::uint64_t seed = exp.seeds.front();
  const auto inst = generate_instance(exp.scenario_config(seed));
  const auto obs = reduce_rank(inst.X());
  const Vector mu_star = true_mu_star(inst, obs, complement_basis(obs));

  PolicyConfig cfg = exp.policy_config();
  cfg.horizon = 2000;
  cfg.schedule = RefitSchedule::every();
  RolfPolicy policy(EstimatorKind::lasso, inst.X(), cfg, Rng::stream(exp.master_seed, {0, seed, 0}));
  Rng noise = Rng::stream(exp.master_seed, {0, seed, 1});
  double e500 = 0, e2000 = 0;
  for (int t = 1; t <= 2000; ++t) {
    policy.step(t, inst.X(), [&](Arm a) { return sample_reward(inst, a, noise); });
    if (t == 500 || t == 2000) {
      const double err = (policy.features().features * (policy.estimate() - mu_star)).cwiseAbs().maxCoeff();
      (t == 500 ? e500 : e2000) = err;
    }
  }
  return {e2000 <= 0.7 * e500,
          fmt("err(500) %.4f, err(2000) %.4f, ratio %.3f (<= 0.7)", e500, e2000, e2000 / e500)};
}

Verdict c9_coupling() {
  const CouplingParams params{0.6, 1e-4};
  const int n = 100000, K = 30;
  Rng rng(41);
  bool pass = true;
  std::string detail;
  for (int t : {10, 100}) {
    int failures = 0;
    for (int i = 0; i < n; ++i) failures += !resample_couple(rng.uniform_int(K), t, K, params, rng).matched;
    const double q = params.delta_prime / ((t + 1.0) * (t + 1.0));
    const double bound = q + 3 * std::sqrt(q * (1 - q) / n);
    const double rate = static_cast<double>(failures) / n;
    pass = pass && rate <= bound;
    detail += fmt("t=%.0f: rate %.3g (<= %.3g); ", t, rate, bound);
  }
  return {pass, detail};
}

Verdict c10_reconstruction() {
  const auto inst = lower_bound_instance_thm1();
  const auto obs = reduce_rank(inst.X());
  const auto basis = complement_basis(obs);
  const Vector mu = true_mu_star(inst, basis);
  const Vector rewards = augment(obs, basis).features * mu;
  const double err = std::max({std::abs(rewards(0) + 1.0), std::abs(rewards(1) + 0.75),
                               std::abs(mu(0) + 0.5), std::abs(mu(1) + 1.25 / std::sqrt(5.0))});
  return {err <= 1e-10, fmt("mu* = (%.12f, %.12f), largest error %.3g (<= 1e-10)", mu(0), mu(1), err)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict c11_determinism() {
  const fs::path root = fs::temp_directory_path() / "rolf_acceptance_determinism";
  fs::remove_all(root);
  int identical = 0, files = 0;
  for (int c = 1; c <= 3; ++c) {
    std::vector<std::vector<fs::path>> written;
    for (int rep = 0; rep < 2; ++rep) {
      auto cfg = figure_config(c);
      cfg.out_dir = (root / ("case" + std::to_string(c)) / ("rep" + std::to_string(rep))).string();
      written.push_back(emit_outputs(run_experiment(cfg), cfg));
    }
    for (std::size_t i = 0; i < written[0].size(); ++i, ++files)
      identical += slurp(written[0][i]) == slurp(written[1][i]);
  }
  fs::remove_all(root);
  return {files > 0 && identical == files, fmt("%.0f of %.0f CSV pairs byte-identical", identical, files)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Verdict()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "LinTS linear regret on lower-bound instance", 10, c1_lints_separation},
      {2, "RoLF-Lasso sublinear regret on lower-bound instance", 20, c2_rolf_sublinear},
      {3, "RoLF beats observed-feature baselines, Scenario 1", 90, c3_figure_ordering},
      {4, "case structure of d_h", 5, c4_case_structure},
      {5, "pseudo-reward unbiasedness", 5, c5_pseudo_reward_unbiased},
      {6, "augmented Gram eigenvalue bounds", 5, c6_gram_eigenvalues},
      {7, "Lasso solver matches brute force", 10, c7_lasso_oracle},
      {8, "RoLF-Lasso estimation rate", 30, c8_lasso_rate},
      {9, "coupling match failure rate", 10, c9_coupling},
      {10, "reconstruction identity on lower-bound instance", 1, c10_reconstruction},
      {11, "deterministic CSV output", 90, c11_determinism},
  };

  int failed = 0;
  double total = 0.0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    total += seconds;
    const bool in_budget = seconds < c.budget_seconds;
    const bool pass = v.pass && in_budget;
    failed += !pass;
    std::printf("%s criterion %2d: %s | %s | %.2f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id,
                c.name, v.detail.c_str(), seconds, c.budget_seconds, in_budget ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failed,
              criteria.size(), total);
  return failed == 0 ? 0 : 1;
}
