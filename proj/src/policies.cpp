#include "rolf/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rolf {

Arm argmax_lowest(const Vector& scores) {
  Arm best = 0;
  for (Eigen::Index a = 1; a < scores.size(); ++a)
    if (scores(a) > scores(best)) best = static_cast<Arm>(a);
  return best;
}

// ---------------------------------------------------------------------------

ExplorationGate::ExplorationGate(double c_e, double scale, int K, double delta)
    : c_e_(c_e), scale_(scale), K_(K), delta_(delta) {
  if (!(c_e > 0) || !(scale > 0)) throw std::invalid_argument("exploration factor must be positive");
}

double ExplorationGate::threshold(int t) const {
  const double tt = static_cast<double>(t);
  return scale_ * c_e_ * std::log(2.0 * K_ * tt * tt / delta_);
}

bool ExplorationGate::try_enter(int t) {
  if (!open(t)) return false;
  ++ledger_;
  return true;
}

double lasso_exploration_factor(int K, double sigma_min_sq, double sigma_max_sq, double p) {
  const double eightK = 8.0 * K;
  return eightK * eightK * eightK * sigma_max_sq / sigma_min_sq / ((1.0 - p) * (1.0 - p));
}

double ridge_exploration_factor(int dim, double p) {
  return 32.0 * dim * dim / ((1.0 - p) * (1.0 - p));
}

double default_exploration_scale(double c_e, int K, int horizon, double delta) {
  const double target =
      std::max(1.0, std::min(10.0 * K * std::log(static_cast<double>(K)), horizon / 4.0));
  return target / (c_e * std::log(2.0 * K * target * target / delta));
}

DrSettings PolicyConfig::dr_settings() const {
  DrSettings s;
  s.coupling = coupling();
  s.delta = delta;
  s.sigma = sigma;
  s.penalty_scale = penalty_scale;
  s.lasso = lasso;
  s.schedule = schedule;
  return s;
}

namespace {

AugmentedFeatureSet<double> augment_observed(const Matrix& observed) {
  auto reduced = reduce_rank(observed);
  auto basis = complement_basis(reduced);
  return augment(reduced, basis);
}

double resolve_scale(double configured, double c_e, int K, int horizon, double delta) {
  return std::isnan(configured) ? default_exploration_scale(c_e, K, horizon, delta) : configured;
}

double rolf_factor(EstimatorKind kind, const AugmentedFeatureSet<double>& f, double p) {
  const int K = static_cast<int>(f.arms());
  return kind == EstimatorKind::lasso
             ? lasso_exploration_factor(K, f.sigma_min_sq, f.sigma_max_sq, p)
             : ridge_exploration_factor(K, p);
}

std::variant<DrLassoEstimator, DrRidgeEstimator> make_estimator(
    EstimatorKind kind, const AugmentedFeatureSet<double>& f, const DrSettings& s) {
  if (kind == EstimatorKind::lasso) return DrLassoEstimator(f, s);
  return DrRidgeEstimator(static_cast<int>(f.dim()), s);
}

}  // namespace

RolfPolicy::RolfPolicy(EstimatorKind kind, const Matrix& observed, const PolicyConfig& cfg, Rng rng)
    : RolfPolicy(kind, augment_observed(observed), std::numeric_limits<double>::quiet_NaN(), cfg,
                 std::move(rng)) {}

RolfPolicy::RolfPolicy(EstimatorKind kind, AugmentedFeatureSet<double> features, double c_e,
                       const PolicyConfig& cfg, Rng rng)
    : kind_(kind),
      cfg_(cfg),
      features_(std::move(features)),
      gate_([&] {
        const int K = static_cast<int>(features_.arms());
        const double ce = std::isnan(c_e) ? rolf_factor(kind, features_, cfg.p) : c_e;
        return ExplorationGate(ce, resolve_scale(cfg.exploration_scale, ce, K, cfg.horizon, cfg.delta),
                               K, cfg.delta);
      }()),
      estimator_(make_estimator(kind, features_, cfg.dr_settings())),
      rng_(std::move(rng)) {}

const Vector& RolfPolicy::estimate() const {
  return std::visit([](const auto& e) -> const Vector& { return e.estimate(); }, estimator_);
}

const Vector& RolfPolicy::imputation() const {
  return std::visit([](const auto& e) -> const Vector& { return e.imputation(); }, estimator_);
}

StepOutcome RolfPolicy::step(int t, const Matrix& /*observed*/, const RewardFn& pull) {
  const int K = static_cast<int>(features_.arms());
  StepOutcome out;
  out.explored = gate_.try_enter(t);
  const Arm a_hat =
      out.explored ? rng_.uniform_int(K) : argmax_lowest(features_.features * estimate());

  const CouplingDraw draw = resample_couple(a_hat, t, K, cfg_.coupling(), rng_);
  out.arm = draw.played;
  out.matched = draw.matched;
  out.attempts = draw.attempts;
  out.reward = pull(out.arm);

  if (auto* lasso = std::get_if<DrLassoEstimator>(&estimator_)) {
    lasso->record_play(out.arm, out.reward);
    if (out.matched) lasso->on_matched(t, out.arm, out.reward);
  } else {
    auto& ridge = std::get<DrRidgeEstimator>(estimator_);
    ridge.record_play(features_.features, out.arm, out.reward);
    if (out.matched) ridge.on_matched(t, features_.features, out.arm, out.reward);
  }
  if (out.matched) ++updates_;
  return out;
}

// ---------------------------------------------------------------------------

Matrix standard_basis_augment(const Matrix& observed) {
  const auto d = observed.rows();
  const auto K = observed.cols();
  Matrix f(K, d + K);
  f.leftCols(d) = observed.transpose();
  f.rightCols(K).setIdentity();
  return f;
}

RolfVPolicy::RolfVPolicy(int K, int d, const PolicyConfig& cfg, Rng rng)
    : K_(K),
      d_(d),
      cfg_(cfg),
      gate_([&] {
        const double ce = ridge_exploration_factor(d + K, cfg.p);
        return ExplorationGate(ce, resolve_scale(cfg.exploration_scale, ce, K, cfg.horizon, cfg.delta),
                               K, cfg.delta);
      }()),
      estimator_(d + K, cfg.dr_settings()),
      rng_(std::move(rng)) {}

StepOutcome RolfVPolicy::step(int t, const Matrix& observed, const RewardFn& pull) {
  if (observed.rows() != d_ || observed.cols() != K_)
    throw std::invalid_argument("rolf_v: observed features have the wrong shape");
  const Matrix features = standard_basis_augment(observed);

  StepOutcome out;
  out.explored = gate_.try_enter(t);
  const Arm a_hat =
      out.explored ? rng_.uniform_int(K_) : argmax_lowest(features * estimator_.estimate());
  const CouplingDraw draw = resample_couple(a_hat, t, K_, cfg_.coupling(), rng_);
  out.arm = draw.played;
  out.matched = draw.matched;
  out.attempts = draw.attempts;
  out.reward = pull(out.arm);

  estimator_.record_play(features, out.arm, out.reward);
  if (out.matched) {
    estimator_.on_matched(t, features, out.arm, out.reward);
    ++updates_;
  }
  return out;
}

// ---------------------------------------------------------------------------

ObservedRidge::ObservedRidge(int d, double lambda)
    : Vinv_(Matrix::Identity(d, d) / lambda), b_(Vector::Zero(d)) {
  if (!(lambda > 0)) throw std::invalid_argument("ridge lambda must be positive");
}

void ObservedRidge::add(const Vector& x, double y) {
  sherman_morrison_update(Vinv_, x);
  b_.noalias() += y * x;
}

LinUcbPolicy::LinUcbPolicy(int d, const PolicyConfig& cfg)
    : alpha_(cfg.linucb_alpha), ridge_(d, cfg.ridge_lambda) {}

Vector LinUcbPolicy::scores(const Matrix& observed) const {
  const Vector theta = ridge_.theta();
  const Matrix VX = ridge_.covariance() * observed;
  Vector s = observed.transpose() * theta;
  for (Eigen::Index a = 0; a < observed.cols(); ++a)
    s(a) += alpha_ * std::sqrt(std::max(0.0, observed.col(a).dot(VX.col(a))));
  return s;
}

StepOutcome LinUcbPolicy::step(int /*t*/, const Matrix& observed, const RewardFn& pull) {
  StepOutcome out;
  out.arm = argmax_lowest(scores(observed));
  out.reward = pull(out.arm);
  ridge_.add(observed.col(out.arm), out.reward);
  return out;
}

LinTsPolicy::LinTsPolicy(int d, const PolicyConfig& cfg, Rng rng)
    : v_(std::isnan(cfg.lints_v) ? cfg.sigma : cfg.lints_v),
      ridge_(d, cfg.ridge_lambda),
      rng_(std::move(rng)) {}

Arm LinTsPolicy::select(const Matrix& observed) {
  const auto d = observed.rows();
  Vector z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = rng_.normal();
  Eigen::LLT<Matrix> llt(ridge_.covariance());
  const Vector noise = llt.matrixL() * z;
  const Vector theta = ridge_.theta() + v_ * noise;
  const Vector scores = observed.transpose() * theta;

  const double best = scores.maxCoeff();
  std::vector<Arm> ties;
  for (Eigen::Index a = 0; a < scores.size(); ++a)
    if (scores(a) == best) ties.push_back(static_cast<Arm>(a));
  return ties.size() == 1 ? ties.front() : ties[rng_.uniform_int(static_cast<int>(ties.size()))];
}

StepOutcome LinTsPolicy::step(int /*t*/, const Matrix& observed, const RewardFn& pull) {
  StepOutcome out;
  out.arm = select(observed);
  out.reward = pull(out.arm);
  ridge_.add(observed.col(out.arm), out.reward);
  return out;
}

UcbDeltaPolicy::UcbDeltaPolicy(int K, const PolicyConfig& cfg)
    : bonus_((std::isnan(cfg.ucb_bonus_scale) ? cfg.sigma : cfg.ucb_bonus_scale) *
             std::sqrt(2.0 * std::log(1.0 / cfg.delta))),
      counts_(Vector::Zero(K)),
      sums_(Vector::Zero(K)) {}

StepOutcome UcbDeltaPolicy::step(int /*t*/, const Matrix& /*observed*/, const RewardFn& pull) {
  StepOutcome out;
  const auto K = counts_.size();
  Eigen::Index unplayed = 0;
  while (unplayed < K && counts_(unplayed) > 0) ++unplayed;
  if (unplayed < K) {
    out.arm = static_cast<Arm>(unplayed);
  } else {
    const Vector index = sums_.cwiseQuotient(counts_) + bonus_ * counts_.cwiseSqrt().cwiseInverse();
    out.arm = argmax_lowest(index);
  }
  out.reward = pull(out.arm);
  counts_(out.arm) += 1.0;
  sums_(out.arm) += out.reward;
  return out;
}

DrLassoBaselinePolicy::DrLassoBaselinePolicy(int d, int K, const PolicyConfig& cfg, Rng rng)
    : cfg_(cfg),
      K_(K),
      gram_(Matrix::Zero(d, d)),
      cross_(Vector::Zero(d)),
      beta_(Vector::Zero(d)),
      rng_(std::move(rng)) {}

StepOutcome DrLassoBaselinePolicy::step(int t, const Matrix& observed, const RewardFn& pull) {
  const double eps = std::min(1.0, 1.0 / std::sqrt(static_cast<double>(t)));
  const Arm greedy = argmax_lowest(observed.transpose() * beta_);

  StepOutcome out;
  out.explored = rng_.uniform() < eps;
  out.arm = out.explored ? rng_.uniform_int(K_) : greedy;
  out.reward = pull(out.arm);

  const double prob = eps / K_ + (out.arm == greedy ? 1.0 - eps : 0.0);
  const Vector mean_context = observed.rowwise().mean();
  const double imputed = mean_context.dot(beta_);
  const double pseudo = imputed + (out.reward - observed.col(out.arm).dot(beta_)) / (K_ * prob);
  gram_.noalias() += mean_context * mean_context.transpose();
  cross_.noalias() += pseudo * mean_context;

  const double tt = static_cast<double>(t);
  const double lambda = cfg_.penalty_scale * 2.0 * cfg_.sigma *
                        std::sqrt(2.0 * tt * std::log(2.0 * observed.rows() * tt * tt / cfg_.delta));
  beta_ = solve_lasso_gram<double>(gram_, cross_, lambda, cfg_.lasso, &beta_).coef;
  return out;
}

bool is_known_algorithm(std::string_view name) {
  return std::find(std::begin(kAlgorithmNames), std::end(kAlgorithmNames), name) !=
         std::end(kAlgorithmNames);
}

std::unique_ptr<Policy> make_policy(std::string_view kind, const Matrix& initial_observed,
                                    const PolicyConfig& cfg, Rng rng) {
  const int d = static_cast<int>(initial_observed.rows());
  const int K = static_cast<int>(initial_observed.cols());
  if (kind == "rolf_lasso")
    return std::make_unique<RolfPolicy>(EstimatorKind::lasso, initial_observed, cfg, std::move(rng));
  if (kind == "rolf_ridge")
    return std::make_unique<RolfPolicy>(EstimatorKind::ridge, initial_observed, cfg, std::move(rng));
  if (kind == "rolf_v") return std::make_unique<RolfVPolicy>(K, d, cfg, std::move(rng));
  if (kind == "linucb") return std::make_unique<LinUcbPolicy>(d, cfg);
  if (kind == "lints") return std::make_unique<LinTsPolicy>(d, cfg, std::move(rng));
  if (kind == "ucb_delta") return std::make_unique<UcbDeltaPolicy>(K, cfg);
  if (kind == "drlasso") return std::make_unique<DrLassoBaselinePolicy>(d, K, cfg, std::move(rng));
  throw ConfigError("unknown algorithm '" + std::string(kind) + "'");
}

std::vector<double> cumulative_regret(std::span<const Arm> arms, const ProblemInstance& inst) {
  std::vector<double> out;
  out.reserve(arms.size());
  const double best = inst.optimal_reward();
  double total = 0.0;
  for (Arm a : arms) {
    total += best - inst.expected_rewards(a);
    out.push_back(total);
  }
  return out;
}

}  // namespace rolf
