#include "rolf/environments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace rolf {
namespace {

Matrix pinv_projector(const Matrix& M) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
  return cod.pseudoInverse() * M;
}

ScenarioConfig scenario(int s, int c, std::uint64_t seed) {
  auto cfg = ScenarioConfig::defaults(s, c);
  cfg.seed = seed;
  return cfg;
}

TEST(Scenario, DefaultsMatchExperimentSetup) {
  const auto s1 = ScenarioConfig::defaults(1, 1);
  EXPECT_EQ(s1.K, 30);
  EXPECT_EQ(s1.d_z, 35);
  EXPECT_EQ(s1.d, 17);
  EXPECT_EQ(s1.d_u, 18);
  EXPECT_DOUBLE_EQ(s1.noise_sigma, 0.05);
  const auto s2 = ScenarioConfig::defaults(2, 1);
  EXPECT_EQ(s2.d_u, 0);
  EXPECT_EQ(s2.d, s2.d_z);
}

TEST(Scenario, InvalidCombinationsAreRejected) {
  EXPECT_THROW(generate_instance(scenario(2, 3, 1)), ConfigError);
  auto bad = scenario(2, 1, 1);
  bad.d_u = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(generate_instance(scenario(3, 1, 1)), ConfigError);
  EXPECT_THROW(generate_instance(scenario(1, 4, 1)), ConfigError);
}

TEST(Scenario, CaseTwoLatentRowsLieInObservedRowSpace) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = generate_instance(scenario(1, 2, seed));
    const Matrix P = pinv_projector(inst.X());
    const Matrix Ut = inst.U().transpose();
    EXPECT_LE(((Matrix::Identity(inst.arms(), inst.arms()) - P) * Ut).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Scenario, CaseThreeObservedRowsLieInLatentRowSpace) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = generate_instance(scenario(1, 3, seed));
    const Matrix P = pinv_projector(inst.U());
    const Matrix Xt = inst.X().transpose();
    EXPECT_LE(((Matrix::Identity(inst.arms(), inst.arms()) - P) * Xt).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Scenario, RewardsAreBoundedAndGenerationIsPure) {
  for (int s = 1; s <= 2; ++s) {
    for (int c = 1; c <= (s == 1 ? 3 : 2); ++c) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = generate_instance(scenario(s, c, seed));
        const auto b = generate_instance(scenario(s, c, seed));
        EXPECT_LE(a.expected_rewards.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
        EXPECT_EQ(a.Z, b.Z);
        EXPECT_EQ(a.theta_star, b.theta_star);
        EXPECT_EQ(a.theta_rescaled, b.theta_rescaled);
        std::ostringstream sa, sb;
        write_instance(sa, a);
        write_instance(sb, b);
        EXPECT_EQ(sa.str(), sb.str());
      }
    }
  }
}

TEST(Scenario, RescaleFlagMatchesRewardPeak) {
  int flagged = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_instance(scenario(1, 1, seed));
    if (inst.theta_rescaled) {
      ++flagged;
      EXPECT_NEAR(inst.expected_rewards.cwiseAbs().maxCoeff(), 1.0, 1e-12);
    }
  }
  // With 35 N(0,1) features and theta ~ U(-1/2, 1/2) the raw peak exceeds 1.
  EXPECT_GT(flagged, 0);
}

TEST(SampleReward, ZeroNoiseIsExact) {
  auto inst = generate_instance(scenario(1, 1, 3));
  inst.noise_sigma = 0.0;
  Rng rng(1);
  for (Arm a = 0; a < inst.arms(); ++a) EXPECT_EQ(sample_reward(inst, a, rng), inst.expected_rewards(a));
}

TEST(SampleReward, MonteCarloMean) {
  const auto inst = generate_instance(scenario(1, 1, 4));
  Rng rng(2);
  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += sample_reward(inst, 5, rng);
  EXPECT_NEAR(sum / n, inst.expected_rewards(5), 3 * 0.05 / std::sqrt(n));
}

TEST(LowerBoundThm1, ValuesFromConstruction) {
  const auto inst = lower_bound_instance_thm1();
  EXPECT_EQ(inst.arms(), 2);
  EXPECT_EQ(inst.d, 1);
  EXPECT_EQ(inst.du(), 1);
  EXPECT_DOUBLE_EQ(inst.expected_rewards(0), -1.0);
  EXPECT_DOUBLE_EQ(inst.expected_rewards(1), -0.75);
  EXPECT_EQ(inst.optimal_arm(), 1);
  EXPECT_DOUBLE_EQ(inst.gap(0), 0.25);
}

TEST(LowerBoundAppF, ValuesFromConstruction) {
  const auto inst = lower_bound_instance_appF();
  EXPECT_EQ(inst.arms(), 3);
  EXPECT_NEAR(inst.expected_rewards(0), 0.5, 1e-15);
  EXPECT_NEAR(inst.expected_rewards(1), -5.0 / 6.0, 1e-15);
  EXPECT_NEAR(inst.expected_rewards(2), 1.0 / 6.0, 1e-15);
  EXPECT_EQ(inst.optimal_arm(), 0);
  // Direct arithmetic: 1/2 - 1/6 and 1/2 + 5/6.
  EXPECT_NEAR(inst.gap(2), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(inst.gap(1), 4.0 / 3.0, 1e-15);
  EXPECT_EQ(inst.X().col(0), inst.X().col(1));
  EXPECT_THROW(lower_bound_instance_appF(4, 3), ConfigError);

  const auto wide = lower_bound_instance_appF(3, 6);
  EXPECT_NEAR(wide.expected_rewards(0), 0.5, 1e-15);
  EXPECT_NEAR(wide.expected_rewards(2), 1.0 / 6.0, 1e-15);
}

TEST(TrueMuStar, LowerBoundInstance) {
  const auto inst = lower_bound_instance_thm1();
  const auto obs = reduce_rank(inst.X());
  const auto basis = complement_basis(obs);
  const Vector mu = true_mu_star(inst, basis);
  EXPECT_NEAR(mu(0), -0.5, 1e-12);
  EXPECT_NEAR(mu(1), -1.25 / std::sqrt(5.0), 1e-12);
  const auto aug = augment(obs, basis);
  EXPECT_LE((aug.features * mu - inst.expected_rewards).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(true_dh(inst, basis), 1);
}

TEST(TrueMuStar, NoLatentContribution) {
  auto inst = generate_instance(scenario(1, 1, 8));
  inst.theta_star.tail(inst.du()).setZero();
  inst.expected_rewards = inst.Z.transpose() * inst.theta_star;
  const auto basis = complement_basis(reduce_rank(inst.X()));
  const Vector mu = true_mu_star(inst, basis);
  EXPECT_LE((mu.head(inst.d) - inst.theta_observed()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(mu.tail(basis.size()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TrueMuStar, SingularObservedBlockIsRejected) {
  const auto inst = generate_instance(scenario(2, 1, 1));  // d = 60 > K = 30
  const auto obs = reduce_rank(inst.X());
  const auto basis = complement_basis(obs);
  EXPECT_THROW(true_mu_star(inst, basis), LinalgError);
  EXPECT_NO_THROW(true_mu_star(inst, obs, basis));
}

TEST(TrueMuStar, ReconstructionAcrossScenariosAndCases) {
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 100; ++seed) {
    for (int s = 1; s <= 2 && checked < 100; ++s) {
      for (int c = 1; c <= (s == 1 ? 3 : 2) && checked < 100; ++c, ++checked) {
        const auto inst = generate_instance(scenario(s, c, seed));
        const auto obs = reduce_rank(inst.X());
        const auto basis = complement_basis(obs);
        const auto aug = augment(obs, basis);
        const Vector mu = true_mu_star(inst, obs, basis);
        EXPECT_LE((aug.features * mu - inst.expected_rewards).cwiseAbs().maxCoeff(), 1e-8)
            << "scenario " << s << " case " << c << " seed " << seed;
        if (obs.dim() == inst.d && inst.d <= inst.arms()) {
          const Vector printed = true_mu_star(inst, basis);
          EXPECT_LE((aug.features * printed - inst.expected_rewards).cwiseAbs().maxCoeff(), 1e-8);
        }
      }
    }
  }
}

TEST(TrueDh, CaseStructure) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c2 = generate_instance(scenario(1, 2, seed));
    EXPECT_EQ(true_dh(c2, complement_basis(reduce_rank(c2.X()))), 0);
    const auto c3 = generate_instance(scenario(1, 3, seed));
    EXPECT_EQ(true_dh(c3, complement_basis(reduce_rank(c3.X()))), c3.arms() - c3.d);
  }
}

TEST(InstanceFile, RoundTripIsExact) {
  const auto inst = generate_instance(scenario(1, 3, 12));
  std::stringstream ss;
  write_instance(ss, inst);
  const auto back = read_instance(ss);
  EXPECT_EQ(back.Z, inst.Z);
  EXPECT_EQ(back.theta_star, inst.theta_star);
  EXPECT_EQ(back.d, inst.d);
  EXPECT_EQ(back.noise_sigma, inst.noise_sigma);
  EXPECT_EQ(back.expected_rewards, inst.expected_rewards);

  std::istringstream header("2 1 2 0.05\n1 2\n3\n");
  EXPECT_THROW(read_instance(header), ConfigError);
}

TEST(InstanceFile, HeaderLine) {
  std::ostringstream os;
  write_instance(os, lower_bound_instance_thm1());
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "2 1 2 0.050000000000000003");
}

TEST(VaryingInstance, ObservedFeaturesArePureAndBounded) {
  const auto inst = generate_varying_instance(10, 4, 3, 0.05, 99);
  EXPECT_EQ(inst.observed(5), inst.observed(5));
  EXPECT_NE(inst.observed(5), inst.observed(6));
  for (int t = 1; t <= 50; ++t) {
    const Matrix X = inst.observed(t);
    EXPECT_LE(X.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LE(inst.expected_rewards(X).cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  }
  EXPECT_THROW(generate_varying_instance(1, 4, 3, 0.05, 1), ConfigError);
}

}  // namespace
}  // namespace rolf
