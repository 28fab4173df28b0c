#include "rolf/dr_estimation.hpp"

#include <cmath>
#include <stdexcept>

namespace rolf {

void CouplingParams::validate() const {
  if (!(p > 0.5 && p < 1.0)) throw std::invalid_argument("coupling probability must be in (1/2, 1)");
  if (!(delta_prime > 0.0 && delta_prime < 1.0))
    throw std::invalid_argument("delta' must be in (0, 1)");
}

Vector pseudo_action_probs(Arm chosen, int K, double p) {
  if (K < 2) throw std::invalid_argument("need at least two arms");
  if (chosen < 0 || chosen >= K) throw std::invalid_argument("chosen arm out of range");
  if (!(p > 0.5 && p < 1.0)) throw std::invalid_argument("coupling probability must be in (1/2, 1)");
  Vector phi = Vector::Constant(K, (1.0 - p) / (K - 1));
  phi(chosen) = p;
  return phi;
}

int rho_cap(int t, const CouplingParams& params) {
  if (t < 1) throw std::invalid_argument("rounds start at 1");
  const double tp1 = static_cast<double>(t) + 1.0;
  return static_cast<int>(std::ceil(std::log(tp1 * tp1 / params.delta_prime) /
                                    std::log(1.0 / (1.0 - params.p))));
}

namespace {

// Uniform draw from [0, K) \ {excluded}.
Arm uniform_other(Arm excluded, int K, Rng& rng) {
  Arm k = rng.uniform_int(K - 1);
  return k >= excluded ? k + 1 : k;
}

}  // namespace

CouplingDraw resample_couple(Arm a_hat, int t, int K, const CouplingParams& params, Rng& rng) {
  if (a_hat < 0 || a_hat >= K) throw std::invalid_argument("a_hat out of range");
  const double greedy_mass = 1.0 - 1.0 / std::sqrt(static_cast<double>(t));
  const int cap = rho_cap(t, params);

  CouplingDraw draw;
  for (int count = 1; count <= cap; ++count) {
    draw.played = rng.uniform() < greedy_mass ? a_hat : uniform_other(a_hat, K, rng);
    draw.pseudo = rng.uniform() < params.p ? draw.played : uniform_other(draw.played, K, rng);
    draw.attempts = count;
    if (draw.pseudo == draw.played) {
      draw.matched = true;
      break;
    }
  }
  return draw;
}

Vector dr_pseudo_rewards(const Matrix& features, const Vector& mu_check, Arm a_tilde,
                         double y_observed, double prob) {
  Vector y = features * mu_check;
  y(a_tilde) += (y_observed - y(a_tilde)) / prob;
  return y;
}

double lasso_penalty(int t, int K, double p, double delta, double sigma, double sigma_max_sq,
                     PenaltyKind kind) {
  const double tt = static_cast<double>(t);
  const double log_term = std::log(2.0 * K * tt * tt / delta);
  const double sigma_max = std::sqrt(sigma_max_sq);
  if (kind == PenaltyKind::imputation)
    return 2.0 * sigma_max * sigma * std::sqrt(2.0 * p * tt * log_term);
  return 4.0 * sigma * sigma_max / p * std::sqrt(2.0 * tt * log_term);
}

bool RefitSchedule::due(int t, int last_refit) const {
  if (every_round || t <= dense_until) return true;
  const int stride = (t + 99) / 100;
  return t - last_refit >= stride;
}

// ---------------------------------------------------------------------------

DrLassoEstimator::DrLassoEstimator(AugmentedFeatureSet<double> features, DrSettings settings)
    : features_(std::move(features)), settings_(settings) {
  settings_.coupling.validate();
  const auto K = features_.arms();
  const auto dim = features_.dim();
  arm_counts_ = Vector::Zero(K);
  arm_reward_sums_ = Vector::Zero(K);
  main_cross_ = Vector::Zero(dim);
  mu_check_ = Vector::Zero(dim);
  mu_hat_ = Vector::Zero(dim);
}

void DrLassoEstimator::record_play(Arm arm, double reward) {
  arm_counts_(arm) += 1.0;
  arm_reward_sums_(arm) += reward;
  ++played_;
}

Matrix DrLassoEstimator::imputation_gram() const {
  return features_.features.transpose() * arm_counts_.asDiagonal() * features_.features;
}

Vector DrLassoEstimator::imputation_cross() const {
  return features_.features.transpose() * arm_reward_sums_;
}

void DrLassoEstimator::refit_imputation(int t) {
  const double lambda =
      settings_.penalty_scale * lasso_penalty(t, static_cast<int>(features_.arms()),
                                              settings_.coupling.p, settings_.delta,
                                              settings_.sigma, features_.sigma_max_sq,
                                              PenaltyKind::imputation);
  auto fit = solve_lasso_gram<double>(imputation_gram(), imputation_cross(), lambda,
                                      settings_.lasso, &mu_check_);
  converged_ = fit.converged;
  mu_check_ = std::move(fit.coef);
}

void DrLassoEstimator::add_pseudo_rewards(const Vector& pseudo_y) {
  main_cross_.noalias() += features_.features.transpose() * pseudo_y;
  ++matched_;
}

void DrLassoEstimator::refit_main(int t) {
  const double lambda =
      settings_.penalty_scale * lasso_penalty(t, static_cast<int>(features_.arms()),
                                              settings_.coupling.p, settings_.delta,
                                              settings_.sigma, features_.sigma_max_sq,
                                              PenaltyKind::main);
  auto fit = solve_lasso_gram<double>(main_gram(), main_cross_, lambda, settings_.lasso, &mu_hat_);
  converged_ = converged_ && fit.converged;
  mu_hat_ = std::move(fit.coef);
}

void DrLassoEstimator::on_matched(int t, Arm arm, double reward) {
  const bool refit = settings_.schedule.due(t, last_refit_);
  if (refit) refit_imputation(t);
  add_pseudo_rewards(pseudo_rewards(features_, mu_check_, arm, reward, settings_.coupling.p));
  if (refit) {
    refit_main(t);
    last_refit_ = t;
  }
}

// ---------------------------------------------------------------------------

DrRidgeEstimator::DrRidgeEstimator(int dim, DrSettings settings)
    : settings_(settings),
      impute_(dim, settings.coupling.p),
      main_(dim, 1.0),
      mu_check_(Vector::Zero(dim)),
      mu_hat_(Vector::Zero(dim)) {
  settings_.coupling.validate();
}

void DrRidgeEstimator::record_play(const Matrix& features, Arm arm, double reward) {
  impute_.add(features.row(arm).transpose(), reward);
}

void DrRidgeEstimator::refit_imputation() { mu_check_ = impute_.solve(); }

void DrRidgeEstimator::add_pseudo_rewards(const Matrix& features, const Vector& pseudo_y) {
  main_.add_moments(features.transpose() * features, features.transpose() * pseudo_y);
  ++matched_;
}

void DrRidgeEstimator::refit_main() { mu_hat_ = main_.solve(); }

void DrRidgeEstimator::on_matched(int /*t*/, const Matrix& features, Arm arm, double reward) {
  refit_imputation();
  add_pseudo_rewards(features,
                     dr_pseudo_rewards(features, mu_check_, arm, reward, settings_.coupling.p));
  refit_main();
}

}  // namespace rolf
