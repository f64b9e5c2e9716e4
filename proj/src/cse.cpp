#include "cmdp/cse.hpp"

#include <cmath>

#include "cmdp/errors.hpp"

namespace cmdp {

void ContextSample::validate() const {
  const auto n = s.size();
  const auto k = c.size();
  if (s_next.size() != n || dTdc.rows() != n || dTdc.cols() != k ||
      dRdc.size() != k || dRds_next.size() != n) {
    throw DimensionMismatch("context sample shapes are inconsistent");
  }
  if (!std::isfinite(r)) throw UsageError("context sample reward not finite");
}

ContextSample make_sample(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                          const Eigen::VectorXd& c,
                          const EnvStepResult& step) {
  return {s,         a,         step.reward, step.next_state, c,
          step.dTdc, step.dRdc, step.dRds_next};
}

EnhancedSample cse_augment(const ContextSample& x, const Eigen::VectorXd& dc) {
  if (dc.size() != x.c.size() || x.dTdc.cols() != dc.size() ||
      x.dRdc.size() != dc.size() || x.dRds_next.size() != x.dTdc.rows() ||
      x.s_next.size() != x.dTdc.rows()) {
    throw DimensionMismatch("perturbation does not match the sample");
  }
  const Eigen::VectorXd ds = x.dTdc * dc;
  return {x.r + x.dRdc.dot(dc) + x.dRds_next.dot(ds), x.s_next + ds};
}

Eigen::VectorXd sample_sphere(int dim, double epsilon, Rng& rng) {
  if (dim < 1) throw UsageError("sphere dimension must be >= 1");
  if (!(epsilon > 0.0)) throw UsageError("sphere radius must be > 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
    norm = v.norm();
  } while (!(norm > 0.0));
  return (v / norm) * epsilon;
}

double enhanced_rollout_value(const Environment& env,
                              const DeterministicPolicy& pi,
                              const Eigen::VectorXd& s0,
                              const Eigen::VectorXd& c0,
                              const Eigen::VectorXd& dc, int horizon,
                              double gamma) {
  Eigen::VectorXd s = s0;
  double value = 0.0;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const Eigen::VectorXd a = pi(s, t);
    const EnvStepResult step = env.step(s, a, c0);
    const EnhancedSample e = cse_augment(make_sample(s, a, c0, step), dc);
    value += discount * e.r_bar;
    discount *= gamma;
    s = e.s_next_bar;
    if (step.terminated) break;
  }
  return value;
}

double PolynomialToy::target(double x, const Eigen::VectorXd& c) const {
  return x * c.sum() + alpha * c.squaredNorm();
}

Eigen::VectorXd PolynomialToy::target_grad(double x,
                                           const Eigen::VectorXd& c) const {
  return Eigen::VectorXd::Constant(c.size(), x) + 2.0 * alpha * c;
}

double PolynomialToy::model(double x, const Eigen::VectorXd& c) const {
  const Eigen::VectorXd d = c - c0;
  return target(x, c0) + (target_grad(x, c0) + x * b).dot(d) +
         kappa * d.squaredNorm();
}

RegularizationCheck regularization_equivalence_check(const PolynomialToy& toy,
                                                     double sigma,
                                                     std::size_t n_mc,
                                                     Rng& rng) {
  if (!(sigma > 0.0)) throw UsageError("sigma must be > 0");
  if (n_mc < 2) throw UsageError("need at least two Monte-Carlo draws");
  if (toy.b.size() != toy.c0.size()) {
    throw DimensionMismatch("toy Jacobian offset does not match context");
  }
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, sigma);
  const auto dim = toy.c0.size();
  Eigen::VectorXd xi(dim);

  // Welford running mean / variance of the squared residual.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const double x = ux(rng);
    for (Eigen::Index k = 0; k < dim; ++k) xi(k) = normal(rng);
    const double lin = toy.target(x, toy.c0) + toy.target_grad(x, toy.c0).dot(xi);
    const double res = toy.model(x, toy.c0 + xi) - lin;
    const double v = res * res;
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  RegularizationCheck out;
  out.l_cse = mean;
  out.l_cse_stderr =
      std::sqrt(m2 / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc));
  out.jacobian_term = sigma * sigma * toy.b.squaredNorm() / 3.0;
  return out;
}

}  // namespace cmdp
