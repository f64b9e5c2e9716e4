#include "cmdp/envs.hpp"

#include <cmath>

#include "cmdp/errors.hpp"

namespace cmdp {

namespace {

bool in_unit_box(const Eigen::VectorXd& c) {
  return c.size() == 2 && c.allFinite() && (c.array().abs() <= 1.0).all();
}

void check_shapes(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                  const Eigen::VectorXd& c) {
  if (s.size() != 2 || a.size() != 2 || c.size() != 2) {
    throw DimensionMismatch("SimpleDirection works on R^2");
  }
}

}  // namespace

SimpleDirection::SimpleDirection() {
  spec_.name = "simpledir";
  spec_.state_dim = 2;
  spec_.action_dim = 2;
  spec_.context_dim = 2;
  spec_.horizon = 10;
  spec_.gamma = 0.9;
  spec_.train_context = Eigen::Vector2d::Zero();
  spec_.action_bounds = {{-1.0, 1.0}, {-1.0, 1.0}};
}

bool SimpleDirection::context_valid(const Eigen::VectorXd& c) const {
  return in_unit_box(c);
}

Eigen::VectorXd SimpleDirection::sample_start(Rng& rng) const {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double x = u(rng);
  const double y = u(rng);
  return Eigen::Vector2d(x, y);
}

EnvStepResult SimpleDirection::step(const Eigen::VectorXd& s,
                                    const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& c) const {
  return simpledirection_step(s, a, c);
}

double SimpleDirection::reward(const Eigen::VectorXd&,
                               const Eigen::VectorXd&,
                               const Eigen::VectorXd& s_next,
                               const Eigen::VectorXd& c) const {
  return s_next.dot(c);
}

EnvStepResult simpledirection_step(const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& a,
                                   const Eigen::VectorXd& c) {
  check_shapes(s, a, c);
  if (!in_unit_box(c)) {
    throw ContextOutOfRange("SimpleDirection context must lie in [-1, 1]^2");
  }
  const Eigen::VectorXd act = a.cwiseMax(-1.0).cwiseMin(1.0);
  EnvStepResult r;
  r.next_state = s + act + c;
  r.reward = r.next_state.dot(c);
  r.terminated = false;
  r.dTdc = Eigen::MatrixXd::Identity(2, 2);
  r.dRdc = r.next_state;
  r.dRds_next = c;
  return r;
}

double simpledirection_optimal_return(int horizon, const Eigen::VectorXd& c) {
  if (horizon < 1) throw UsageError("horizon must be >= 1");
  const double pairs = 0.5 * horizon * (horizon + 1.0);
  return pairs * (c.lpNorm<1>() + c.squaredNorm());
}

}  // namespace cmdp
