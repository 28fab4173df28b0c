#pragma once

// Doubly robust estimation with resampling/coupling of the played action and a
// pseudo-action. Pseudo-rewards impute every arm's reward from an imputation
// estimate and correct the pseudo-action's entry by inverse probability.

#include <vector>

#include "rolf/linalg.hpp"
#include "rolf/rng.hpp"
#include "rolf/types.hpp"

namespace rolf {

struct CouplingParams {
  double p = 0.6;             // mass the pseudo-action puts on the played arm
  double delta_prime = 1e-4;  // resampling failure budget

  void validate() const;
};

/// phi[chosen] = p and (1 - p) / (K - 1) elsewhere.
Vector pseudo_action_probs(Arm chosen, int K, double p);

/// Resampling cap ceil(log((t + 1)^2 / delta') / log(1 / (1 - p))).
int rho_cap(int t, const CouplingParams& params);

struct CouplingDraw {
  Arm played = 0;
  Arm pseudo = 0;
  bool matched = false;
  int attempts = 0;
};

/// Draws a_t (mass 1 - t^{-1/2} on a_hat, the rest spread evenly) and a
/// pseudo-action from pseudo_action_probs(a_t) until they agree or rho_cap(t)
/// attempts are used. The last a_t is played either way.
CouplingDraw resample_couple(Arm a_hat, int t, int K, const CouplingParams& params, Rng& rng);

/// y~_a = f_a^T mu + 1{a = a_tilde} / prob (y - f_a^T mu), where f_a is row a of
/// `features` and prob is the pseudo-action probability of a_tilde.
Vector dr_pseudo_rewards(const Matrix& features, const Vector& mu_check, Arm a_tilde,
                         double y_observed, double prob);

/// Matched-round pseudo-rewards: the pseudo-action equals the played arm, so its
/// probability is p.
inline Vector pseudo_rewards(const AugmentedFeatureSet<double>& features, const Vector& mu_check,
                             Arm a_tilde, double y_observed, double p) {
  return dr_pseudo_rewards(features.features, mu_check, a_tilde, y_observed, p);
}

enum class PenaltyKind { imputation, main };

/// imputation: 2 sigma_max sigma sqrt(2 p t log(2 K t^2 / delta))
/// main:       (4 sigma sigma_max / p) sqrt(2 t log(2 K t^2 / delta))
double lasso_penalty(int t, int K, double p, double delta, double sigma, double sigma_max_sq,
                     PenaltyKind kind);

/// When a matched round triggers a full Lasso refit. Every matched round up to
/// `dense_until`, then at most once per ceil(t / 100) rounds.
struct RefitSchedule {
  bool every_round = false;
  int dense_until = 200;

  static RefitSchedule every() { return {true, 0}; }
  bool due(int t, int last_refit) const;
};

struct DrSettings {
  CouplingParams coupling;
  double delta = 1e-4;
  double sigma = 0.05;
  // Multiplies both Lasso penalties; 1 reproduces the printed schedules.
  double penalty_scale = 1.0;
  LassoOptions lasso;
  RefitSchedule schedule;
};

/// DR Lasso pair on fixed augmented features. The imputation estimate uses
/// every played (arm, reward); the main estimate uses pseudo-rewards of all K
/// arms on matched rounds, so its Gram is matched_count * sum_a x~_a x~_a^T.
class DrLassoEstimator {
 public:
  DrLassoEstimator(AugmentedFeatureSet<double> features, DrSettings settings);

  /// Adds the played pair to the imputation history (every round).
  void record_play(Arm arm, double reward);
  /// Matched round t: refresh the imputation estimate, form pseudo-rewards,
  /// accumulate them, refresh the main estimate.
  void on_matched(int t, Arm arm, double reward);

  void refit_imputation(int t);
  void add_pseudo_rewards(const Vector& pseudo_y);
  void refit_main(int t);

  const Vector& imputation() const { return mu_check_; }
  const Vector& estimate() const { return mu_hat_; }
  int matched_count() const { return matched_; }
  int played_count() const { return played_; }
  Matrix imputation_gram() const;
  Vector imputation_cross() const;
  Matrix main_gram() const { return static_cast<double>(matched_) * features_.gram; }
  const Vector& main_cross() const { return main_cross_; }
  bool last_fit_converged() const { return converged_; }
  const AugmentedFeatureSet<double>& features() const { return features_; }

 private:
  AugmentedFeatureSet<double> features_;
  DrSettings settings_;
  Vector arm_counts_;
  Vector arm_reward_sums_;
  Vector main_cross_;
  Vector mu_check_;
  Vector mu_hat_;
  int played_ = 0;
  int matched_ = 0;
  int last_refit_ = 0;
  bool converged_ = true;
};

/// DR ridge pair. Features are passed per round (one row per arm) so the same
/// estimator serves fixed and time-varying designs.
///   imputation: (sum f_{a_t} f_{a_t}^T + p I)^{-1} sum f_{a_t} y_t
///   main:       (sum_matched sum_a f_a f_a^T + I)^{-1} sum_matched sum_a f_a y~_a
class DrRidgeEstimator {
 public:
  DrRidgeEstimator(int dim, DrSettings settings);

  void record_play(const Matrix& features, Arm arm, double reward);
  void on_matched(int t, const Matrix& features, Arm arm, double reward);

  void refit_imputation();
  void add_pseudo_rewards(const Matrix& features, const Vector& pseudo_y);
  void refit_main();

  const Vector& imputation() const { return mu_check_; }
  const Vector& estimate() const { return mu_hat_; }
  int matched_count() const { return matched_; }
  const RidgeAccumulator<double>& imputation_accumulator() const { return impute_; }
  const RidgeAccumulator<double>& main_accumulator() const { return main_; }

 private:
  DrSettings settings_;
  RidgeAccumulator<double> impute_;
  RidgeAccumulator<double> main_;
  Vector mu_check_;
  Vector mu_hat_;
  int matched_ = 0;
};

}  // namespace rolf
