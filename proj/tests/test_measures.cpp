#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cmdp/errors.hpp"
#include "cmdp/measures.hpp"
#include "cmdp/random.hpp"

namespace cmdp {
namespace {

void expect_weights(const ProbabilityVector& p, std::vector<double> expected,
                    double tol = 1e-15) {
  ASSERT_EQ(p.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(p[i], expected[i], tol) << "index " << i;
  }
}

TEST(TvNorm, Examples) {
  EXPECT_DOUBLE_EQ(tv_norm(SignedMeasure({0.5, -0.5})), 1.0);
  EXPECT_DOUBLE_EQ(tv_norm(SignedMeasure::zero(4)), 0.0);
  EXPECT_DOUBLE_EQ(tv_norm(SignedMeasure({0.3, 0.7})), 1.0);
}

TEST(SignedMeasure, RejectsBadInput) {
  EXPECT_THROW(SignedMeasure(std::vector<double>{}), UsageError);
  EXPECT_THROW(SignedMeasure({1.0, NAN}), UsageError);
  EXPECT_THROW(SignedMeasure({INFINITY}), UsageError);
  EXPECT_THROW(ProbabilityVector({0.5, 0.6}), UsageError);
  EXPECT_THROW(ProbabilityVector({1.1, -0.1}), UsageError);
}

TEST(PositivePart, Examples) {
  const SignedMeasure p = positive_part(SignedMeasure({0.5, -0.1}));
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.0);
  const SignedMeasure id = positive_part(SignedMeasure({0.2, 0.0, 3.0}));
  EXPECT_EQ(id[0], 0.2);
  EXPECT_EQ(id[2], 3.0);
  EXPECT_EQ(tv_norm(positive_part(SignedMeasure({-1.0, -2.0}))), 0.0);
}

TEST(PositivePart, SignFloor) {
  const SignedMeasure mu({1e-16, -1e-16, 0.5});
  EXPECT_EQ(positive_part(mu)[0], 0.0);
  EXPECT_EQ(negative_part(mu)[1], 0.0);
}

TEST(ProjectSimplex, Examples) {
  expect_weights(project_simplex(SignedMeasure({0.5, 0.6, -0.1})),
                 {5.0 / 11.0, 6.0 / 11.0, 0.0});
  expect_weights(project_simplex(SignedMeasure({0.3, 0.7})), {0.3, 0.7});
  expect_weights(project_simplex(SignedMeasure({1.2, -0.2})), {1.0, 0.0});
}

TEST(ProjectSimplex, ZeroPositivePartThrows) {
  EXPECT_THROW(project_simplex(SignedMeasure({-1.0, -2.0})), ZeroPositivePart);
  EXPECT_THROW(project_simplex(SignedMeasure::zero(3)), ZeroPositivePart);
  std::vector<double> row{-0.5, 0.0};
  EXPECT_THROW(project_simplex_inplace(row), ZeroPositivePart);
}

TEST(ProjectSimplex, InplaceMatchesValueVersion) {
  std::vector<double> row{0.5, 0.6, -0.1};
  project_simplex_inplace(row);
  const ProbabilityVector p = project_simplex(SignedMeasure({0.5, 0.6, -0.1}));
  for (std::size_t i = 0; i < row.size(); ++i) EXPECT_EQ(row[i], p[i]);
}

TEST(W1Discrete, Examples) {
  EXPECT_DOUBLE_EQ(w1_discrete(ProbabilityVector::point_mass(2, 0),
                               ProbabilityVector::point_mass(2, 1)),
                   1.0);
  const ProbabilityVector mu({0.75, 0.25});
  EXPECT_EQ(w1_discrete(mu, mu), 0.0);
  EXPECT_DOUBLE_EQ(w1_discrete(mu, ProbabilityVector({0.25, 0.75})), 0.5);
  EXPECT_THROW(w1_discrete(mu, ProbabilityVector({1.0, 0.0, 0.0})),
               SupportMismatch);
}

// Random signed measure of total mass one with a nonzero positive part.
SignedMeasure random_unit_mass(Rng& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    std::vector<double> w(n);
    double sum = 0.0;
    for (auto& x : w) {
      x = g(rng);
      sum += x;
    }
    // Shift so the mass is exactly one.
    const double shift = (1.0 - sum) / static_cast<double>(n);
    for (auto& x : w) x += shift;
    SignedMeasure mu(w);
    if (tv_norm(positive_part(mu)) > 0.0) return mu;
  }
}

SignedMeasure random_perturbed_probability(Rng& rng, std::size_t n,
                                           double noise) {
  std::exponential_distribution<double> e(1.0);
  std::normal_distribution<double> g(0.0, noise);
  std::vector<double> w(n);
  double sum = 0.0;
  for (auto& x : w) sum += (x = e(rng));
  for (auto& x : w) x = x / sum + g(rng);
  return SignedMeasure(w);
}

TEST(MeasureProperties, ProjectionDistanceBound) {
  Rng rng = make_rng(11, 0);
  std::uniform_int_distribution<int> size(1, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    const SignedMeasure mu = random_unit_mass(rng, size(rng));
    const SignedMeasure p = project_simplex(mu).as_signed();
    const double lhs = tv_norm(mu - p);
    const double rhs = 2.0 * tv_norm(negative_part(mu));
    EXPECT_LE(lhs, rhs + 1e-12) << "trial " << trial;
  }
}

TEST(MeasureProperties, ProjectionStabilityBound) {
  Rng rng = make_rng(12, 0);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_real_distribution<double> noise(0.0, 0.5);
  int evaluated = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size(rng);
    const SignedMeasure mu = random_perturbed_probability(rng, n, noise(rng));
    const SignedMeasure nu = random_perturbed_probability(rng, n, noise(rng));
    if (tv_norm(positive_part(mu)) == 0.0 || tv_norm(positive_part(nu)) == 0.0) {
      continue;
    }
    ++evaluated;
    const double lhs = tv_norm(project_simplex(mu).as_signed() -
                               project_simplex(nu).as_signed());
    const double rhs = 2.0 * tv_norm(mu - nu) / tv_norm(positive_part(mu));
    EXPECT_LE(lhs, rhs * (1.0 + 1e-12) + 1e-15) << "trial " << trial;
  }
  EXPECT_GE(evaluated, 990);
}

TEST(MeasureProperties, ProjectionIdempotent) {
  Rng rng = make_rng(13, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const SignedMeasure mu = random_perturbed_probability(rng, 6, 0.3);
    if (tv_norm(positive_part(mu)) == 0.0) continue;
    const ProbabilityVector once = project_simplex(mu);
    const ProbabilityVector twice = project_simplex(once.as_signed());
    for (std::size_t i = 0; i < once.size(); ++i) {
      EXPECT_NEAR(once[i], twice[i], 1e-15);
    }
  }
}

TEST(MeasureProperties, W1IsHalfTvAndMetric) {
  Rng rng = make_rng(14, 0);
  auto draw = [&] {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(7);
    double sum = 0.0;
    for (auto& x : w) sum += (x = e(rng));
    for (auto& x : w) x /= sum;
    w.back() = 1.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) w.back() -= w[i];
    w.back() = std::max(w.back(), 0.0);
    return ProbabilityVector(w);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = draw(), b = draw(), c = draw();
    const double ab = w1_discrete(a, b);
    EXPECT_DOUBLE_EQ(ab, 0.5 * tv_norm(a.as_signed() - b.as_signed()));
    EXPECT_EQ(ab, w1_discrete(b, a));
    EXPECT_LE(ab, w1_discrete(a, c) + w1_discrete(c, b) + 1e-15);
    EXPECT_LE(ab, tv_norm(a.as_signed() - b.as_signed()));
  }
}

}  // namespace
}  // namespace cmdp
