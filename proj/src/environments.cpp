#include "rolf/environments.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace rolf {

Arm ProblemInstance::optimal_arm() const {
  Eigen::Index best = 0;
  expected_rewards.maxCoeff(&best);
  return static_cast<Arm>(best);
}

ProblemInstance make_instance(Matrix Z, int d, Vector theta_star, double noise_sigma) {
  if (Z.cols() < 2) throw ConfigError("instance needs at least two arms");
  if (d < 1 || d > Z.rows()) throw ConfigError("observed dimension out of range");
  if (theta_star.size() != Z.rows()) throw ConfigError("theta_star length must equal d_z");
  if (!(noise_sigma >= 0)) throw ConfigError("noise sigma must be non-negative");
  ProblemInstance inst;
  inst.Z = std::move(Z);
  inst.d = d;
  inst.theta_star = std::move(theta_star);
  inst.noise_sigma = noise_sigma;
  inst.expected_rewards = inst.Z.transpose() * inst.theta_star;
  return inst;
}

ScenarioConfig ScenarioConfig::defaults(int scenario, int feature_case) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  cfg.feature_case = feature_case;
  cfg.K = 30;
  if (scenario == 2) {
    cfg.d = 2 * cfg.K;
    cfg.d_z = cfg.d;
    cfg.d_u = 0;
  } else {
    cfg.d_z = 35;
    cfg.d = cfg.d_z / 2;
    cfg.d_u = cfg.d_z - cfg.d;
  }
  return cfg;
}

void ScenarioConfig::validate() const {
  if (scenario != 1 && scenario != 2) throw ConfigError("scenario must be 1 or 2");
  if (feature_case < 1 || feature_case > 3) throw ConfigError("case must be 1, 2 or 3");
  if (scenario == 2 && feature_case == 3)
    throw ConfigError("scenario 2 has no latent features, so case 3 is undefined");
  if (K < 2) throw ConfigError("K must be at least 2");
  if (d < 1 || d_u < 0 || d + d_u != d_z) throw ConfigError("need d >= 1 and d + d_u = d_z");
  if (scenario == 2 && d_u != 0) throw ConfigError("scenario 2 requires d_u = 0");
  if (feature_case == 3 && d_u < 1) throw ConfigError("case 3 requires latent features");
  if (!(noise_sigma >= 0)) throw ConfigError("noise sigma must be non-negative");
}

ProblemInstance generate_instance(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng = Rng::stream(cfg.seed, {static_cast<std::uint64_t>(cfg.scenario),
                                   static_cast<std::uint64_t>(cfg.feature_case)});
  const int K = cfg.K, d = cfg.d, du = cfg.d_u;
  Matrix Z(cfg.d_z, K);

  auto fill_normal = [&](auto&& block) {
    for (Eigen::Index a = 0; a < block.cols(); ++a)
      for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, a) = rng.normal();
  };
  auto fill_uniform = [&](Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  };

  switch (cfg.feature_case) {
    case 1:
      fill_normal(Z);
      break;
    case 2: {
      Matrix X(d, K);
      fill_normal(X);
      Matrix Cu(du, d);
      fill_uniform(Cu);
      Z.topRows(d) = X;
      Z.bottomRows(du) = Cu * X;
      break;
    }
    default: {
      Matrix U(du, K);
      fill_normal(U);
      Matrix Cx(d, du);
      fill_uniform(Cx);
      Z.topRows(d) = Cx * U;
      Z.bottomRows(du) = U;
      break;
    }
  }

  Vector theta(cfg.d_z);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = rng.uniform(-0.5, 0.5);

  ProblemInstance inst = make_instance(std::move(Z), d, std::move(theta), cfg.noise_sigma);
  const double peak = inst.expected_rewards.cwiseAbs().maxCoeff();
  if (peak > 1.0) {
    inst.theta_star /= peak;
    inst.expected_rewards = inst.Z.transpose() * inst.theta_star;
    inst.theta_rescaled = true;
  }
  return inst;
}

double sample_reward(const ProblemInstance& inst, Arm arm, Rng& rng) {
  const double eps = rng.normal();
  return inst.expected_rewards(arm) + inst.noise_sigma * eps;
}

ProblemInstance lower_bound_instance_thm1(double noise_sigma) {
  Matrix Z(2, 2);
  Z << 1.0, 2.0,
       3.0, 19.0 / 4.0;
  Vector theta(2);
  theta << 2.0, -1.0;
  return make_instance(std::move(Z), 1, std::move(theta), noise_sigma);
}

ProblemInstance lower_bound_instance_appF(int d, int d_u, double noise_sigma) {
  if (d < 1) throw ConfigError("appF instance needs d >= 1");
  if (d_u < 2 || d_u % 2 != 0) throw ConfigError("appF instance needs an even d_u >= 2");
  Matrix Z(d + d_u, 3);
  Z.block(0, 0, d, 1).setConstant(-0.5);
  Z.block(0, 1, d, 1).setConstant(-0.5);
  Z.block(0, 2, d, 1).setConstant(0.5);
  Z.block(d, 0, d_u, 1).setConstant(1.0);
  Z.block(d, 1, d_u, 1).setConstant(-1.0);
  Z.block(d, 2, d_u / 2, 1).setConstant(-1.0);
  Z.block(d + d_u / 2, 2, d_u / 2, 1).setConstant(1.0);
  Vector theta(d + d_u);
  theta.head(d).setConstant(1.0 / (3.0 * d));
  theta.tail(d_u).setConstant(2.0 / (3.0 * d_u));
  return make_instance(std::move(Z), d, std::move(theta), noise_sigma);
}

namespace {

void check_basis(const ProblemInstance& inst, const OrthonormalBasis<double>& basis,
                 Eigen::Index observed_rows) {
  if (basis.B.cols() != inst.arms()) throw LinalgError("basis column count must equal K");
  if (observed_rows + basis.size() != inst.arms())
    throw LinalgError("basis size must equal K minus the observed rank");
}

}  // namespace

Vector true_mu_star(const ProblemInstance& inst, const OrthonormalBasis<double>& basis) {
  const Matrix X = inst.X();
  check_basis(inst, basis, X.rows());
  const Matrix XXt = X * X.transpose();
  Eigen::LDLT<Matrix> ldlt(XXt);
  const double scale = XXt.diagonal().cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * std::max(scale, 1.0))
    throw LinalgError("X X^T is singular; call reduce_rank first");

  const Vector latent = inst.U().transpose() * inst.theta_latent();
  Vector mu(inst.arms());
  mu.head(X.rows()) = inst.theta_observed() + ldlt.solve(X * latent);
  mu.tail(basis.size()) = basis.B * latent;
  return mu;
}

Vector true_mu_star(const ProblemInstance& inst, const ObservedFeatureSet<double>& observed,
                    const OrthonormalBasis<double>& basis) {
  const Matrix& Xr = observed.X;
  if (Xr.cols() != inst.arms()) throw LinalgError("observed features have wrong arm count");
  check_basis(inst, basis, Xr.rows());
  Eigen::LDLT<Matrix> ldlt(Xr * Xr.transpose());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw LinalgError("X X^T is singular; call reduce_rank first");
  Vector mu(inst.arms());
  mu.head(Xr.rows()) = ldlt.solve(Xr * inst.expected_rewards);
  mu.tail(basis.size()) = basis.B * inst.expected_rewards;
  return mu;
}

int true_dh(const ProblemInstance& inst, const OrthonormalBasis<double>& basis, double tol) {
  const Vector latent = basis.B * (inst.U().transpose() * inst.theta_latent());
  return static_cast<int>((latent.array().abs() > tol).count());
}

void write_instance(std::ostream& os, const ProblemInstance& inst) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << inst.arms() << ' ' << inst.d << ' ' << inst.dz() << ' ' << inst.noise_sigma << '\n';
  for (Eigen::Index i = 0; i < inst.Z.rows(); ++i) {
    for (Eigen::Index a = 0; a < inst.Z.cols(); ++a) os << (a ? " " : "") << inst.Z(i, a);
    os << '\n';
  }
  for (Eigen::Index i = 0; i < inst.theta_star.size(); ++i)
    os << (i ? " " : "") << inst.theta_star(i);
  os << '\n';
  os.precision(old_precision);
}

ProblemInstance read_instance(std::istream& is) {
  int K = 0, d = 0, dz = 0;
  double sigma = 0;
  if (!(is >> K >> d >> dz >> sigma)) throw ConfigError("instance file: bad header");
  if (K < 2 || d < 1 || dz < d) throw ConfigError("instance file: inconsistent header");
  Matrix Z(dz, K);
  for (int i = 0; i < dz; ++i)
    for (int a = 0; a < K; ++a)
      if (!(is >> Z(i, a))) throw ConfigError("instance file: truncated feature matrix");
  Vector theta(dz);
  for (int i = 0; i < dz; ++i)
    if (!(is >> theta(i))) throw ConfigError("instance file: truncated theta");
  return make_instance(std::move(Z), d, std::move(theta), sigma);
}

Matrix VaryingInstance::observed(int t) const {
  Rng rng = Rng::stream(seed, {0x0b5e7edull, static_cast<std::uint64_t>(t)});
  Matrix X(d, K);
  for (int a = 0; a < K; ++a)
    for (int i = 0; i < d; ++i) X(i, a) = rng.uniform(-1.0, 1.0);
  return X;
}

VaryingInstance generate_varying_instance(int K, int d, int d_u, double noise_sigma,
                                          std::uint64_t seed) {
  if (K < 2 || d < 1 || d_u < 0) throw ConfigError("varying instance: bad dimensions");
  if (!(noise_sigma >= 0)) throw ConfigError("noise sigma must be non-negative");
  VaryingInstance inst;
  inst.K = K;
  inst.d = d;
  inst.noise_sigma = noise_sigma;
  inst.seed = seed;
  Rng rng = Rng::stream(seed, {0x1a7e47ull});
  inst.U.resize(d_u, K);
  for (int a = 0; a < K; ++a)
    for (int i = 0; i < d_u; ++i) inst.U(i, a) = rng.normal();
  inst.theta_observed.resize(d);
  inst.theta_latent.resize(d_u);
  for (int i = 0; i < d; ++i) inst.theta_observed(i) = rng.uniform(-0.5, 0.5);
  for (int i = 0; i < d_u; ++i) inst.theta_latent(i) = rng.uniform(-0.5, 0.5);

  // |x^T theta_o| <= |theta_o|_1 because every observed entry lies in [-1, 1].
  const double bound =
      inst.theta_observed.lpNorm<1>() + inst.latent_bias().cwiseAbs().maxCoeff();
  if (bound > 1.0) {
    inst.theta_observed /= bound;
    inst.theta_latent /= bound;
  }
  return inst;
}

}  // namespace rolf
