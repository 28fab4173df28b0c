#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "rolf/linalg.hpp"
#include "rolf/rng.hpp"
#include "rolf/types.hpp"

namespace rolf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-feature bandit problem. Column a of Z is the true feature z_a; its
/// first `d` entries are observed (x_a) and the rest are latent (u_a).
struct ProblemInstance {
  Matrix Z;
  int d = 0;
  Vector theta_star;
  double noise_sigma = 0.0;
  Vector expected_rewards;
  // Set when theta_star was scaled down to keep |<z_a, theta>| <= 1.
  bool theta_rescaled = false;

  int arms() const { return static_cast<int>(Z.cols()); }
  int dz() const { return static_cast<int>(Z.rows()); }
  int du() const { return dz() - d; }
  Matrix X() const { return Z.topRows(d); }
  Matrix U() const { return Z.bottomRows(du()); }
  Vector theta_observed() const { return theta_star.head(d); }
  Vector theta_latent() const { return theta_star.tail(du()); }

  /// Lowest-index arm with the largest expected reward.
  Arm optimal_arm() const;
  double optimal_reward() const { return expected_rewards.maxCoeff(); }
  double gap(Arm arm) const { return optimal_reward() - expected_rewards(arm); }
};

/// Builds an instance and its expected rewards; validates shapes.
ProblemInstance make_instance(Matrix Z, int d, Vector theta_star, double noise_sigma);

struct ScenarioConfig {
  int scenario = 1;
  int feature_case = 1;
  int K = 30;
  int d = 17;
  int d_z = 35;
  int d_u = 18;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  /// Experiment defaults: scenario 1 observes d = floor(d_z / 2) of d_z = 35
  /// features; scenario 2 observes all d = d_z = 2K features.
  static ScenarioConfig defaults(int scenario, int feature_case);
  void validate() const;
};

/// Case 1: z_a ~ N(0, I). Case 2: x_a ~ N(0, I), u_a = C_u x_a. Case 3:
/// u_a ~ N(0, I), x_a = C_x u_a. C entries ~ U(-1, 1), theta ~ U(-1/2, 1/2)^d_z.
ProblemInstance generate_instance(const ScenarioConfig& cfg);

/// Expected reward of `arm` plus N(0, sigma^2) noise. Always consumes exactly
/// one normal draw so reward noise does not depend on which arm was pulled.
double sample_reward(const ProblemInstance& inst, Arm arm, Rng& rng);

/// Two arms, z = {[1, 3], [2, 19/4]}, theta = [2, -1]; only the first
/// coordinate is observed. Arm 1 (zero-based) is optimal with gap 1/4.
ProblemInstance lower_bound_instance_thm1(double noise_sigma = 0.05);

/// Three arms (a*, a', a_o) where a* and a' share observed features. Arm 0 is
/// optimal; observed-only policies cannot tell it apart from arm 1.
ProblemInstance lower_bound_instance_appF(int d = 4, int d_u = 4, double noise_sigma = 0.05);

/// mu* = [theta_o + (X X^T)^{-1} X U^T theta_u ; B U^T theta_u]. Requires the
/// instance's observed block to have full row rank.
Vector true_mu_star(const ProblemInstance& inst, const OrthonormalBasis<double>& basis);

/// Same reparametrisation against an arbitrary spanning set of R(X), e.g. the
/// output of reduce_rank: mu_o = (X_r X_r^T)^{-1} X_r r and mu_u = B r, where r
/// is the expected reward vector.
Vector true_mu_star(const ProblemInstance& inst, const ObservedFeatureSet<double>& observed,
                    const OrthonormalBasis<double>& basis);

/// Number of latent-block coefficients of mu* with magnitude above tol.
int true_dh(const ProblemInstance& inst, const OrthonormalBasis<double>& basis,
            double tol = 1e-8);

/// Plain-text fixture format:
///   K d d_z sigma
///   d_z lines of K values (Z row-major)
///   one line of d_z values (theta_star)
void write_instance(std::ostream& os, const ProblemInstance& inst);
ProblemInstance read_instance(std::istream& is);

// ---------------------------------------------------------------------------
// Time-varying observed features with fixed latent features.

struct VaryingInstance {
  int K = 0;
  int d = 0;
  Matrix U;  // d_u x K, fixed
  Vector theta_observed;
  Vector theta_latent;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  /// Observed features for round t (d x K), a pure function of (seed, t).
  Matrix observed(int t) const;
  /// Latent bias Delta_a = <u_a, theta_u>.
  Vector latent_bias() const { return U.transpose() * theta_latent; }
  Vector expected_rewards(const Matrix& observed_t) const {
    return observed_t.transpose() * theta_observed + latent_bias();
  }
};

/// x_{a,t} ~ U(-1, 1)^d each round, u_a ~ N(0, I) once, theta ~ U(-1/2, 1/2);
/// theta is scaled so every expected reward stays within [-1, 1].
VaryingInstance generate_varying_instance(int K, int d, int d_u, double noise_sigma,
                                          std::uint64_t seed);

}  // namespace rolf
