#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rolf/dr_estimation.hpp"
#include "rolf/environments.hpp"
#include "rolf/linalg.hpp"
#include "rolf/rng.hpp"
#include "rolf/types.hpp"

namespace rolf {

/// Result of one decision round.
struct StepOutcome {
  Arm arm = 0;
  double reward = 0.0;
  bool explored = false;
  bool matched = false;
  int attempts = 0;
};

using RewardFn = std::function<double(Arm)>;

/// A bandit policy advanced one round at a time. Policies only ever see the
/// observed features (d x K, one column per arm) of the current round.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  /// Rounds are numbered 1, 2, ... and must be strictly increasing.
  virtual StepOutcome step(int t, const Matrix& observed, const RewardFn& pull) = 0;
};

/// Lowest index among the maximal entries.
Arm argmax_lowest(const Vector& scores);

/// Forced-exploration ledger E_t. A round joins the ledger iff
/// |E_{t-1}| <= scale * C_e * log(2 K t^2 / delta).
class ExplorationGate {
 public:
  ExplorationGate(double c_e, double scale, int K, double delta);

  double threshold(int t) const;
  bool open(int t) const { return ledger_ <= threshold(t); }
  /// Adds t to the ledger when the gate is open; returns whether it did.
  bool try_enter(int t);
  int ledger_size() const { return ledger_; }
  double c_e() const { return c_e_; }
  double scale() const { return scale_; }

 private:
  double c_e_;
  double scale_;
  int K_;
  double delta_;
  int ledger_ = 0;
};

/// (8K)^3 sigma_min^-2 sigma_max^2 (1 - p)^-2
double lasso_exploration_factor(int K, double sigma_min_sq, double sigma_max_sq, double p);
/// 32 (1 - p)^-2 dim^2
double ridge_exploration_factor(int dim, double p);
/// Scale that closes the gate after about min(10 K log K, T / 4) rounds.
double default_exploration_scale(double c_e, int K, int horizon, double delta);

struct PolicyConfig {
  double p = 0.6;
  double delta = 1e-4;
  double delta_prime = 1e-4;
  double sigma = 0.05;
  // NaN selects default_exploration_scale for the horizon.
  double exploration_scale = std::numeric_limits<double>::quiet_NaN();
  int horizon = 1200;
  double penalty_scale = 1.0;
  RefitSchedule schedule;
  LassoOptions lasso;

  // Baselines.
  double ridge_lambda = 1.0;
  double linucb_alpha = 1.0;
  // NaN means v = sigma.
  double lints_v = std::numeric_limits<double>::quiet_NaN();
  // Multiplier on the UCB(delta) bonus sqrt(2 log(1/delta) / N_a); NaN means sigma.
  double ucb_bonus_scale = std::numeric_limits<double>::quiet_NaN();

  DrSettings dr_settings() const;
  CouplingParams coupling() const { return {p, delta_prime}; }
};

enum class EstimatorKind { lasso, ridge };

/// RoLF on fixed features: augment the observed features with an orthonormal
/// basis of R(X)^perp, then per round pick a candidate arm (forced exploration
/// or greedy on the current DR estimate), couple the played arm with a
/// pseudo-action, and update both estimators on matched rounds only.
class RolfPolicy : public Policy {
 public:
  RolfPolicy(EstimatorKind kind, const Matrix& observed, const PolicyConfig& cfg, Rng rng);
  /// Runs on explicitly given features (one row per arm) with a given C_e.
  RolfPolicy(EstimatorKind kind, AugmentedFeatureSet<double> features, double c_e,
             const PolicyConfig& cfg, Rng rng);

  std::string_view name() const override {
    return kind_ == EstimatorKind::lasso ? "rolf_lasso" : "rolf_ridge";
  }
  StepOutcome step(int t, const Matrix& observed, const RewardFn& pull) override;

  const AugmentedFeatureSet<double>& features() const { return features_; }
  const Vector& estimate() const;
  const Vector& imputation() const;
  const ExplorationGate& gate() const { return gate_; }
  int update_count() const { return updates_; }
  const DrLassoEstimator* lasso() const { return std::get_if<DrLassoEstimator>(&estimator_); }
  const DrRidgeEstimator* ridge() const { return std::get_if<DrRidgeEstimator>(&estimator_); }

 private:
  EstimatorKind kind_;
  PolicyConfig cfg_;
  AugmentedFeatureSet<double> features_;
  ExplorationGate gate_;
  std::variant<DrLassoEstimator, DrRidgeEstimator> estimator_;
  Rng rng_;
  int updates_ = 0;
};

/// Augmented features for time-varying observations: row a is [x_{a,t}^T, e_a^T].
Matrix standard_basis_augment(const Matrix& observed);

/// RoLF-Ridge over the (d + K)-dimensional features standard_basis_augment(X_t),
/// where the indicator block absorbs each arm's fixed latent bias.
class RolfVPolicy : public Policy {
 public:
  RolfVPolicy(int K, int d, const PolicyConfig& cfg, Rng rng);

  std::string_view name() const override { return "rolf_v"; }
  StepOutcome step(int t, const Matrix& observed, const RewardFn& pull) override;

  const Vector& estimate() const { return estimator_.estimate(); }
  const DrRidgeEstimator& estimator() const { return estimator_; }
  const ExplorationGate& gate() const { return gate_; }
  int update_count() const { return updates_; }

 private:
  int K_, d_;
  PolicyConfig cfg_;
  ExplorationGate gate_;
  DrRidgeEstimator estimator_;
  Rng rng_;
  int updates_ = 0;
};

/// Ridge regression on observed features, V = lambda I + sum x x^T, with the
/// inverse kept current by Sherman-Morrison updates.
class ObservedRidge {
 public:
  ObservedRidge(int d, double lambda);
  void add(const Vector& x, double y);
  Vector theta() const { return Vinv_ * b_; }
  const Matrix& covariance() const { return Vinv_; }

 private:
  Matrix Vinv_;
  Vector b_;
};

/// argmax x_a^T theta + alpha ||x_a||_{V^{-1}}.
class LinUcbPolicy : public Policy {
 public:
  LinUcbPolicy(int d, const PolicyConfig& cfg);
  std::string_view name() const override { return "linucb"; }
  StepOutcome step(int t, const Matrix& observed, const RewardFn& pull) override;
  Vector scores(const Matrix& observed) const;

 private:
  double alpha_;
  ObservedRidge ridge_;
};

/// Thompson sampling with theta~ ~ N(theta_hat, v^2 V^{-1}). Exact score ties
/// are broken uniformly at random so arms with equal observed features are
/// selected with equal probability.
class LinTsPolicy : public Policy {
 public:
  LinTsPolicy(int d, const PolicyConfig& cfg, Rng rng);
  std::string_view name() const override { return "lints"; }
  StepOutcome step(int t, const Matrix& observed, const RewardFn& pull) override;
  /// Draws theta~ and returns the arm it selects, without updating.
  Arm select(const Matrix& observed);

 private:
  double v_;
  ObservedRidge ridge_;
  Rng rng_;
};

/// Feature-free UCB: unplayed arms first in index order, then
/// argmax mean_a + scale sqrt(2 log(1/delta) / N_a).
class UcbDeltaPolicy : public Policy {
 public:
  UcbDeltaPolicy(int K, const PolicyConfig& cfg);
  std::string_view name() const override { return "ucb_delta"; }
  StepOutcome step(int t, const Matrix& observed, const RewardFn& pull) override;

 private:
  double bonus_;
  Vector counts_;
  Vector sums_;
};

/// Reference DR Lasso baseline on observed features. It regresses a DR
/// pseudo-reward on the arm-averaged context each round, so with fixed features
/// the design only ever spans the mean context direction.
class DrLassoBaselinePolicy : public Policy {
 public:
  DrLassoBaselinePolicy(int d, int K, const PolicyConfig& cfg, Rng rng);
  std::string_view name() const override { return "drlasso"; }
  StepOutcome step(int t, const Matrix& observed, const RewardFn& pull) override;

 private:
  PolicyConfig cfg_;
  int K_;
  Matrix gram_;
  Vector cross_;
  Vector beta_;
  Rng rng_;
};

inline constexpr std::string_view kAlgorithmNames[] = {
    "rolf_lasso", "rolf_ridge", "rolf_v", "linucb", "lints", "ucb_delta", "drlasso"};

bool is_known_algorithm(std::string_view name);

/// Builds a policy by name. `initial_observed` is the d x K observed matrix of
/// round 1; fixed-feature RoLF variants build their augmentation from it.
std::unique_ptr<Policy> make_policy(std::string_view kind, const Matrix& initial_observed,
                                    const PolicyConfig& cfg, Rng rng);

/// Prefix sums of max_a r_a - r_{a_t}.
std::vector<double> cumulative_regret(std::span<const Arm> arms, const ProblemInstance& inst);

}  // namespace rolf
