#include <gtest/gtest.h>

#include <cmath>

#include "cmdp/bounds.hpp"
#include "cmdp/cliffwalker.hpp"
#include "cmdp/errors.hpp"
#include "cmdp/random.hpp"
#include "cmdp/random_cmdp.hpp"

namespace cmdp {
namespace {

StabilityBoundTerms stability_terms() {
  StabilityBoundTerms t;
  t.delta_R = 0.0;
  t.delta_T = 0.1;
  t.gamma = 0.5;
  t.L_pi = 0.0;
  t.L_T_max = 1.0;
  t.L_T2 = 1.0;
  t.R2_lip = 1.0;
  return t;
}

CebeBoundTerms cebe_terms() {
  CebeBoundTerms t;
  t.dc_norm = 0.1;
  t.gamma = 0.1;
  t.L_pi = 0.0;
  t.L_T = 1.0;
  t.L_dT = 1.0;
  t.R_lip = 1.0;
  t.d2T_sup = 1.0;
  t.d2R_sup = 1.0;
  return t;
}

TEST(Theorem1Bound, IdenticalMdpsGiveZero) {
  StabilityBoundTerms t = stability_terms();
  t.delta_T = 0.0;
  EXPECT_EQ(theorem1_bound(t), 0.0);
}

TEST(Theorem1Bound, RewardOnlyDifference) {
  StabilityBoundTerms t = stability_terms();
  t.delta_T = 0.0;
  t.delta_R = 0.1;
  EXPECT_NEAR(theorem1_bound(t), 0.2, 1e-15);
}

TEST(Theorem1Bound, TransitionOnlyDifference) {
  // 2 * (0.5 * 0.1 / (1 - 0.5)) = 0.2
  EXPECT_NEAR(theorem1_bound(stability_terms()), 0.2, 1e-15);
}

TEST(Theorem1Bound, PremiseViolated) {
  StabilityBoundTerms t = stability_terms();
  t.gamma = 0.9;
  t.L_pi = 0.5;
  EXPECT_THROW(theorem1_bound(t), PremiseViolated);
}

TEST(Theorem1Bound, MonotoneInEachInput) {
  const StabilityBoundTerms base = stability_terms();
  const double b0 = theorem1_bound(base);
  StabilityBoundTerms t = base;
  t.delta_R += 0.05;
  EXPECT_GT(theorem1_bound(t), b0);
  t = base;
  t.delta_T += 0.05;
  EXPECT_GT(theorem1_bound(t), b0);
  t = base;
  t.gamma = 0.6;
  EXPECT_GT(theorem1_bound(t), b0);
  t = base;
  t.R2_lip = 2.0;
  EXPECT_GT(theorem1_bound(t), b0);
}

TEST(Theorem3Bound, ZeroPerturbationGivesZero) {
  CebeBoundTerms t = cebe_terms();
  t.dc_norm = 0.0;
  EXPECT_EQ(theorem3_bound(t), 0.0);
}

TEST(Theorem3Bound, HandValue) {
  // (0.01 / 0.9) (1 + 0.3 / 0.9)
  EXPECT_NEAR(theorem3_bound(cebe_terms()), 0.04 / 2.7, 1e-15);
}

TEST(Theorem3Bound, PremiseViolated) {
  CebeBoundTerms t = cebe_terms();
  t.d2T_sup = 4.0;
  t.dc_norm = 0.6;
  EXPECT_THROW(theorem3_bound(t), PremiseViolated);
  t = cebe_terms();
  t.gamma = 0.3;
  EXPECT_THROW(theorem3_bound(t), PremiseViolated);
}

TEST(Theorem3Bound, MonotoneInEachInput) {
  const CebeBoundTerms base = cebe_terms();
  const double b0 = theorem3_bound(base);
  CebeBoundTerms t = base;
  t.dc_norm = 0.2;
  EXPECT_GT(theorem3_bound(t), b0);
  t = base;
  t.d2R_sup = 2.0;
  EXPECT_GT(theorem3_bound(t), b0);
  t = base;
  t.d2T_sup = 2.0;
  EXPECT_GT(theorem3_bound(t), b0);
  t = base;
  t.gamma = 0.2;
  EXPECT_GT(theorem3_bound(t), b0);
}

TEST(AffineCebeBound, HandValue) {
  EXPECT_NEAR(affine_cebe_bound(0.1, 0.5, 3.0), 0.06, 1e-15);
  EXPECT_EQ(affine_cebe_bound(0.0, 0.9, 3.0), 0.0);
}

TEST(SegmentSup, Quadratic) {
  const auto f = [](const Context& c) { return c(0) * c(0); };
  EXPECT_NEAR(segment_sup(f, Context::Constant(1, -1.0), Context::Constant(1, 2.0)),
              4.0, 1e-15);
}

// ---------------------------------------------------------------------------

TEST(Lipschitz, ConstantRewardAndUniformPolicy) {
  TransitionTable t(2, 2);
  t.p << 1, 0, 0, 1, 1, 0, 0, 1;
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(4, 0.7);
  const LipschitzReport rep = lipschitz_constants(t, r, TabularPolicy::uniform(2, 2));
  EXPECT_EQ(rep.R_sup, 0.7);
  EXPECT_EQ(rep.R_lip, 0.7);
  EXPECT_EQ(rep.L_pi, 0.0);
  EXPECT_EQ(rep.L_T, 2.0);
  EXPECT_EQ(rep.L_T_w1, 1.0);
}

TEST(Lipschitz, DeterministicPolicy) {
  const TabularPolicy pi = TabularPolicy::deterministic({0, 1}, 2);
  EXPECT_EQ(policy_lipschitz(pi), 1.0);
}

TEST(Lipschitz, RewardLipschitzDominatesSup) {
  Rng rng = make_rng(51, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const TransitionTable t = random_transition_table(4, 3, rng);
    Eigen::VectorXd r(12);
    for (auto& x : r) x = u(rng);
    const LipschitzReport rep = lipschitz_constants(t, r, random_policy(4, 3, rng));
    EXPECT_GE(rep.R_lip, rep.R_sup);
    EXPECT_GE(rep.R_lip, r.maxCoeff() - r.minCoeff());
    EXPECT_LE(rep.L_T, 2.0);
    EXPECT_LE(rep.L_pi, 1.0);
  }
  EXPECT_THROW(lipschitz_constants(random_transition_table(4, 3, rng),
                                   Eigen::VectorXd::Zero(5), TabularPolicy::uniform(4, 3)),
               DimensionMismatch);
}

// ---------------------------------------------------------------------------

TEST(AffineReduction, CliffwalkerWithinBound) {
  for (CliffReward v : {CliffReward::A, CliffReward::B}) {
    const TabularCMDP mdp = build_cliffwalker(5, 6, v, 0.1);
    const TabularPolicy pi = TabularPolicy::uniform(mdp.n_states, mdp.n_actions);
    std::vector<Context> dcs;
    for (double d : {1e-4, 1e-3, 1e-2, 5e-2, -1e-3, -5e-2}) {
      dcs.push_back(Context::Constant(1, d));
    }
    for (const auto& e : check_affine_reduction(mdp, pi, dcs)) {
      EXPECT_TRUE(e.ok) << "dc " << e.dc_norm << " error " << e.q_error
                        << " bound " << e.bound;
      EXPECT_GT(e.q_error, 0.0);
    }
  }
}

TEST(AffineReduction, RejectsNonAffineFamily) {
  Rng rng = make_rng(52, 0);
  const TabularCMDP mdp = random_softmax_cmdp(3, 2, rng);
  const std::vector<Context> dcs{Context::Constant(1, 0.01)};
  EXPECT_THROW(check_affine_reduction(mdp, TabularPolicy::uniform(3, 2), dcs),
               UsageError);
}

TEST(Certification, Theorem1TwoHundredTrials) {
  CertificationOptions opts;
  opts.seed = 7;
  const CertificationReport rep = certify_theorem1(opts);
  EXPECT_EQ(rep.trials, 200);
  EXPECT_EQ(rep.passed, 200);
  EXPECT_GE(rep.min_slack_ratio, 1.0);
}

TEST(Certification, Theorem3TwoHundredTrials) {
  CertificationOptions opts;
  opts.seed = 7;
  const CertificationReport rep = certify_theorem3(opts);
  EXPECT_EQ(rep.trials, 200);
  EXPECT_EQ(rep.passed, 200);
  EXPECT_GE(rep.min_slack_ratio, 1.0);
}

TEST(Certification, SingleStateSingleAction) {
  CertificationOptions opts;
  opts.trials = 20;
  opts.n_states = 1;
  opts.n_actions = 1;
  EXPECT_EQ(certify_theorem1(opts).passed, 20);
  EXPECT_EQ(certify_theorem3(opts).passed, 20);
}

TEST(Certification, DeterministicInSeed) {
  CertificationOptions opts;
  opts.trials = 30;
  opts.seed = 3;
  EXPECT_EQ(certify_theorem1(opts).to_json(), certify_theorem1(opts).to_json());
  EXPECT_EQ(certify_theorem3(opts).to_json(), certify_theorem3(opts).to_json());
}

TEST(Certification, InvalidOptions) {
  CertificationOptions opts;
  opts.n_states = 0;
  EXPECT_THROW(certify_theorem1(opts), UsageError);
}

}  // namespace
}  // namespace cmdp
