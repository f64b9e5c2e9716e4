#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <sstream>

#include "cmdp/cse.hpp"
#include "cmdp/envs.hpp"
#include "cmdp/errors.hpp"
#include "cmdp/experiments.hpp"
#include "cmdp/random.hpp"

namespace cmdp {
namespace {

Eigen::VectorXd v2(double x, double y) { return Eigen::Vector2d(x, y); }

ContextSample simpledir_sample(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                               const Eigen::VectorXd& c) {
  return make_sample(s, a, c, simpledirection_step(s, a, c));
}

TEST(CseAugment, ZeroPerturbationIsIdentity) {
  const ContextSample x = simpledir_sample(v2(0.3, -0.2), v2(1, 0), v2(0.1, 0.05));
  const EnhancedSample e = cse_augment(x, v2(0, 0));
  EXPECT_EQ(e.r_bar, x.r);
  EXPECT_EQ(e.s_next_bar, x.s_next);
}

TEST(CseAugment, SimpleDirectionHandExample) {
  const ContextSample x = simpledir_sample(v2(0, 0), v2(1, 1), v2(0, 0));
  EXPECT_EQ(x.r, 0.0);
  EXPECT_EQ(x.s_next, v2(1, 1));
  const EnhancedSample e = cse_augment(x, v2(0.1, 0));
  EXPECT_NEAR(e.r_bar, 0.1, 1e-15);
  EXPECT_NEAR((e.s_next_bar - v2(1.1, 1)).norm(), 0.0, 1e-15);
  const EnvStepResult truth = simpledirection_step(v2(0, 0), v2(1, 1), v2(0.1, 0));
  EXPECT_NEAR(truth.reward, 0.11, 1e-15);
  EXPECT_NEAR(truth.reward - e.r_bar, 0.01, 1e-15);
  EXPECT_NEAR((truth.next_state - e.s_next_bar).norm(), 0.0, 1e-15);
}

TEST(CseAugment, AffineInPerturbation) {
  const PendulumGoal env;
  const Eigen::VectorXd c0 = env.spec().train_context;
  const Eigen::VectorXd s = v2(2.0, 0.4);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.7);
  const ContextSample x = make_sample(s, a, c0, env.step(s, a, c0));
  const Eigen::VectorXd dc = Eigen::Vector4d(0.1, -0.05, 0.02, 0.03);
  const EnhancedSample e0 = cse_augment(x, Eigen::Vector4d::Zero());
  const EnhancedSample e1 = cse_augment(x, dc);
  for (double alpha : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    const EnhancedSample ea = cse_augment(x, alpha * dc);
    EXPECT_NEAR(ea.r_bar, (1 - alpha) * e0.r_bar + alpha * e1.r_bar, 1e-14);
    EXPECT_LE((ea.s_next_bar - ((1 - alpha) * e0.s_next_bar + alpha * e1.s_next_bar))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-14);
  }
}

TEST(CseAugment, DimensionMismatch) {
  const ContextSample x = simpledir_sample(v2(0, 0), v2(1, 1), v2(0, 0));
  EXPECT_THROW(cse_augment(x, Eigen::VectorXd::Zero(3)), DimensionMismatch);
  ContextSample bad = x;
  bad.dRdc = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(bad.validate(), DimensionMismatch);
  bad = x;
  bad.r = NAN;
  EXPECT_THROW(bad.validate(), UsageError);
}

// Distance between the enhanced sample and the true transition at c0 + dc.
double pendulum_cse_error(const Eigen::VectorXd& dc) {
  const PendulumGoal env;
  const Eigen::VectorXd c0 = Eigen::Vector4d(2.1, 0.9, 1.1, 0.2);
  const Eigen::VectorXd s = v2(1.3, -0.6);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 1.2);
  const ContextSample x = make_sample(s, a, c0, env.step(s, a, c0));
  const EnhancedSample e = cse_augment(x, dc);
  const EnvStepResult truth = env.step(s, a, c0 + dc);
  return std::hypot(truth.reward - e.r_bar, (truth.next_state - e.s_next_bar).norm());
}

TEST(CseAugment, PendulumFirstOrderAccuracy) {
  const Eigen::VectorXd dir = Eigen::Vector4d(1.0, -0.5, 0.3, 0.2).normalized();
  for (double eps : {1e-2, 3e-3}) {
    const double ratio = pendulum_cse_error(eps * dir) / pendulum_cse_error(0.5 * eps * dir);
    EXPECT_NEAR(ratio, 4.0, 0.2) << "eps " << eps;
  }
}

// ---------------------------------------------------------------------------

TEST(SampleSphere, NormAndDegenerateDimension) {
  Rng rng = make_rng(41, 0);
  for (int dim : {1, 2, 4, 9}) {
    for (int i = 0; i < 100; ++i) {
      EXPECT_NEAR(sample_sphere(dim, 0.1, rng).norm(), 0.1, 1e-12);
    }
  }
  for (int i = 0; i < 100; ++i) {
    const double x = sample_sphere(1, 0.25, rng)(0);
    EXPECT_TRUE(x == 0.25 || x == -0.25);
  }
  EXPECT_THROW(sample_sphere(2, 0.0, rng), UsageError);
  EXPECT_THROW(sample_sphere(0, 1.0, rng), UsageError);
}

TEST(SampleSphere, MeanIsZero) {
  Rng rng = make_rng(42, 0);
  const int n = 100000, dim = 3;
  const double eps = 0.1;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < n; ++i) sum += sample_sphere(dim, eps, rng);
  const double sigma = eps / std::sqrt(static_cast<double>(dim * n));
  for (int k = 0; k < dim; ++k) EXPECT_LE(std::abs(sum(k) / n), 3 * sigma);
}

// ---------------------------------------------------------------------------

TEST(EnhancedRollout, ZeroPerturbationMatchesTrueRollout) {
  const SimpleDirection sd;
  const DeterministicPolicy pi = [](const Eigen::VectorXd& s, int t) {
    return Eigen::VectorXd(v2(std::sin(s(0) + t), -0.5));
  };
  const Eigen::VectorXd c0 = v2(0.2, -0.1);
  EXPECT_EQ(enhanced_rollout_value(sd, pi, v2(0.1, 0.2), c0, v2(0, 0), 10, 0.9),
            rollout_return(sd, pi, v2(0.1, 0.2), c0, 10, 0.9));

  const PendulumGoal pg;
  const DeterministicPolicy torque = [](const Eigen::VectorXd& s, int) {
    return Eigen::VectorXd(Eigen::VectorXd::Constant(1, -0.5 * s(1)));
  };
  const Eigen::VectorXd pc = pg.spec().train_context;
  EXPECT_EQ(enhanced_rollout_value(pg, torque, v2(3.0, 0.0), pc,
                                   Eigen::Vector4d::Zero(), 200, 0.99),
            rollout_return(pg, torque, v2(3.0, 0.0), pc, 200, 0.99));
}

TEST(EnhancedRollout, SimpleDirectionExactQuadraticLaw) {
  const SimpleDirection env;
  const DeterministicPolicy pi = [](const Eigen::VectorXd&, int) {
    return Eigen::VectorXd(v2(1, 1));
  };
  const double gamma = 0.9;
  const int H = 10;
  const double geom = (1 - std::pow(gamma, H)) / (1 - gamma);
  for (const auto& c0 : {v2(0, 0), v2(0.2, -0.3)}) {
    for (const auto& dc : {v2(1e-3, 0), v2(0.05, -0.02), v2(-0.1, 0.1)}) {
      const double err = rollout_return(env, pi, v2(0.4, -0.7), c0 + dc, H, gamma) -
                         enhanced_rollout_value(env, pi, v2(0.4, -0.7), c0, dc, H, gamma);
      EXPECT_NEAR(err, dc.squaredNorm() * geom, 1e-12);
    }
  }
}

TEST(EnhancedRollout, PendulumSecondOrderSlope) {
  const PendulumGoal env;
  const DeterministicPolicy pi = [](const Eigen::VectorXd&, int t) {
    return Eigen::VectorXd(Eigen::VectorXd::Constant(1, std::sin(0.1 * t)));
  };
  const Eigen::VectorXd c0 = env.spec().train_context;
  const Eigen::VectorXd dir = Eigen::Vector4d(1.0, 0.5, -0.5, 0.2).normalized();
  const Eigen::VectorXd s0 = v2(3.0, 0.0);
  const int H = env.spec().horizon;
  const double gamma = env.spec().gamma;
  std::vector<double> lx, ly;
  for (double m : log_spaced(1e-3, 1e-1, 12)) {
    const double err = rollout_return(env, pi, s0, c0 + m * dir, H, gamma) -
                       enhanced_rollout_value(env, pi, s0, c0, m * dir, H, gamma);
    lx.push_back(std::log(m));
    ly.push_back(std::log(std::abs(err)));
  }
  const LineFit f = fit_line(lx, ly);
  EXPECT_GE(f.slope, 1.8);
  EXPECT_LE(f.slope, 2.2);
}

// ---------------------------------------------------------------------------

TEST(Regularization, ExactLinearizationGivesZeroLoss) {
  PolynomialToy toy{v2(0.1, -0.2), 0.0, v2(0, 0), 0.0};
  Rng rng = make_rng(43, 0);
  const RegularizationCheck r = regularization_equivalence_check(toy, 0.1, 10000, rng);
  // Residuals are rounding noise of order 1e-17, squared.
  EXPECT_LT(r.l_cse, 1e-30);
  EXPECT_EQ(r.jacobian_term, 0.0);
}

TEST(Regularization, LinearMismatchMatchesJacobianTerm) {
  PolynomialToy toy{v2(0.1, -0.2), 1.0, v2(0.5, -1.5), 0.0};
  Rng rng = make_rng(44, 0);
  const RegularizationCheck r = regularization_equivalence_check(toy, 0.2, 200000, rng);
  EXPECT_NEAR(r.jacobian_term, 0.04 * 2.5 / 3.0, 1e-15);
  EXPECT_LE(std::abs(r.l_cse - r.jacobian_term), 4 * r.l_cse_stderr);
}

TEST(Regularization, QuadraticModelSmallSigma) {
  PolynomialToy toy{v2(0.1, -0.2), 1.0, v2(0.5, -1.5), 2.0};
  Rng rng = make_rng(45, 0);
  const RegularizationCheck r = regularization_equivalence_check(toy, 1e-3, 1000000, rng);
  EXPECT_LT(std::abs(r.l_cse - r.jacobian_term) / r.jacobian_term, 0.1);
}

// ---------------------------------------------------------------------------

ContextSample numbered_sample(int i) {
  return simpledir_sample(v2(i, 0), v2(0, 0), v2(0, 0));
}

TEST(ReplayBuffer, FifoEviction) {
  ReplayBuffer buf(3);
  EXPECT_THROW(ReplayBuffer(0), UsageError);
  for (int i = 0; i < 4; ++i) buf.push(numbered_sample(i));
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).s(0), 1.0);
  EXPECT_EQ(buf.at(2).s(0), 3.0);
  Rng rng = make_rng(46, 0);
  for (const auto& x : buf.sample_batch(50, rng)) EXPECT_GE(x.s(0), 1.0);
}

TEST(ReplayBuffer, SamplesOnlyStoredItems) {
  ReplayBuffer buf(10);
  for (int i = 0; i < 5; ++i) buf.push(numbered_sample(i));
  Rng rng = make_rng(47, 0);
  for (const auto& x : buf.sample_batch(100, rng)) {
    EXPECT_GE(x.s(0), 0.0);
    EXPECT_LE(x.s(0), 4.0);
  }
}

TEST(ReplayBuffer, EmptyBufferThrows) {
  ReplayBuffer buf(4);
  Rng rng = make_rng(48, 0);
  EXPECT_THROW(buf.sample_batch(1, rng), EmptyBuffer);
  EXPECT_THROW(buf.sample_indices(1, rng), EmptyBuffer);
}

TEST(ReplayBuffer, UniformSamplingChiSquare) {
  ReplayBuffer buf(10);
  for (int i = 0; i < 10; ++i) buf.push(numbered_sample(i));
  Rng rng = make_rng(49, 0);
  std::vector<double> counts(10, 0.0);
  const int n = 100000;
  for (std::size_t i : buf.sample_indices(n, rng)) counts[i] += 1.0;
  double chi2 = 0.0;
  for (double k : counts) chi2 += (k - n / 10.0) * (k - n / 10.0) / (n / 10.0);
  const boost::math::chi_squared dist(9);
  EXPECT_LT(chi2, boost::math::quantile(dist, 0.99));
}

TEST(ReplayBuffer, JsonLinesRoundTrip) {
  ReplayBuffer buf(8);
  const PendulumGoal env;
  const Eigen::VectorXd c = env.spec().train_context;
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd s = v2(0.1 * i, -0.3);
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.4);
    buf.push(make_sample(s, a, c, env.step(s, a, c)));
  }
  std::stringstream ss;
  buf.write_jsonl(ss);
  const std::string first_line = ss.str().substr(0, ss.str().find('\n'));
  for (const char* key : {"\"s\"", "\"a\"", "\"r\"", "\"s_next\"", "\"c\"", "\"dTdc\"",
                          "\"dRdc\"", "\"dRds_next\""}) {
    EXPECT_NE(first_line.find(key), std::string::npos) << key;
  }
  const ReplayBuffer back = ReplayBuffer::read_jsonl(ss, 8);
  ASSERT_EQ(back.size(), buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    EXPECT_EQ(back.at(i).r, buf.at(i).r);
    EXPECT_EQ(back.at(i).dTdc, buf.at(i).dTdc);
    EXPECT_EQ(back.at(i).s_next, buf.at(i).s_next);
    EXPECT_EQ(back.at(i).dRds_next, buf.at(i).dRds_next);
  }
}

}  // namespace
}  // namespace cmdp
