#include "cmdp/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cmdp/errors.hpp"

namespace cmdp {

namespace {

constexpr double kPi = std::numbers::pi;

struct ContextParts {
  double g, m, l, tau;
};

ContextParts parts(const Eigen::Vector4d& c) { return {c(0), c(1), c(2), c(3)}; }

Eigen::Vector4d as_context4(const Eigen::VectorXd& c) {
  if (c.size() != 4) {
    throw DimensionMismatch("PendulumGoal context is (g, m, l, tau)");
  }
  return c;
}

void check_context(const Eigen::Vector4d& c) {
  const auto [g, m, l, tau] = parts(c);
  if (!(m > 0.0) || !(l > 0.0) || !(g > 0.0)) {
    throw InvalidContext("PendulumGoal needs g, m, l > 0");
  }
  if (!(std::abs(2.0 * tau) < m * g * l)) {
    throw UnreachableGoal("|2 tau| must be < m g l for a differentiable goal");
  }
}

// Goal reward with the given sign. x = theta_goal - theta.
double reward_value(double theta_goal, double theta, double phi, double u,
                    double sign) {
  const double h = std::sin(0.5 * (theta_goal - theta));
  return sign * (kPi * kPi * h * h + 0.1 * phi * phi + 0.001 * u * u);
}

}  // namespace

double pendulum_goal_angle(double tau, double m, double g, double l) {
  const double mgl = m * g * l;
  if (!(mgl > 0.0) || std::abs(2.0 * tau) > mgl) {
    throw UnreachableGoal("no goal angle for tau = " + std::to_string(tau) +
                          " with m g l = " + std::to_string(mgl));
  }
  return std::asin(std::clamp(-2.0 * tau / mgl, -1.0, 1.0));
}

Eigen::Vector4d pendulum_goal_angle_gradient(const Eigen::Vector4d& c) {
  const auto [g, m, l, tau] = parts(c);
  const double mgl = m * g * l;
  const double root = std::sqrt(1.0 - 4.0 * tau * tau / (mgl * mgl));
  return {2.0 * tau / (m * g * g * l * root), 2.0 * tau / (m * m * g * l * root),
          2.0 * tau / (m * g * l * l * root), -2.0 / (mgl * root)};
}

PendulumState pendulum_integrate(const PendulumState& in, double u,
                                 const Eigen::Vector4d& c, double dt) {
  const auto [g, m, l, tau] = parts(c);
  (void)tau;
  const double theta = in.x(0);
  const double phi = in.x(1);
  const double s = std::sin(theta);
  const double k = 1.5 * g / l;

  // d(phi_dot)/d theta and the explicit context partials of phi_dot.
  const double dfdtheta = k * std::cos(theta);
  const Eigen::Vector4d dfdc(1.5 / l * s, -3.0 * u / (m * m * l * l),
                             -1.5 * g / (l * l) * s - 6.0 * u / (m * l * l * l),
                             0.0);

  PendulumState out;
  out.x(0) = theta + dt * phi;
  out.x(1) = phi + dt * (k * s + 3.0 / (m * l * l) * u);
  out.sens.row(0) = in.sens.row(0) + dt * in.sens.row(1);
  out.sens.row(1) = in.sens.row(1) +
                    dt * (dfdtheta * in.sens.row(0) + dfdc.transpose());
  return out;
}

PendulumGoal::PendulumGoal(PendulumConfig cfg) : cfg_(cfg) {
  if (!(cfg_.dt > 0.0) || !(cfg_.u_max > 0.0)) {
    throw ConfigInvalid("PendulumGoal needs dt > 0 and u_max > 0");
  }
  spec_.name = "pendulum";
  spec_.state_dim = 2;
  spec_.action_dim = 1;
  spec_.context_dim = 4;
  spec_.horizon = 200;
  spec_.gamma = 0.99;
  spec_.train_context = Eigen::Vector4d(2.0, 1.0, 1.0, 0.0);
  spec_.action_bounds = {{-cfg_.u_max, cfg_.u_max}};
}

bool PendulumGoal::context_valid(const Eigen::VectorXd& c) const {
  if (c.size() != 4 || !c.allFinite()) return false;
  try {
    check_context(c);
  } catch (const InvalidContext&) {
    return false;
  }
  return true;
}

Eigen::VectorXd PendulumGoal::sample_start(Rng& rng) const {
  std::uniform_real_distribution<double> u(-cfg_.start_noise,
                                           cfg_.start_noise);
  const double theta = kPi + u(rng);
  const double phi = u(rng);
  return Eigen::Vector2d(theta, phi);
}

EnvStepResult PendulumGoal::step(const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& c) const {
  if (s.size() != 2 || a.size() != 1) {
    throw DimensionMismatch("PendulumGoal state is (theta, theta_dot), "
                            "action is a scalar torque");
  }
  return pendulum_step(s, a(0), as_context4(c), cfg_);
}

double PendulumGoal::reward(const Eigen::VectorXd&, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& s_next,
                            const Eigen::VectorXd& c) const {
  const Eigen::Vector4d cc = as_context4(c);
  check_context(cc);
  const auto [g, m, l, tau] = parts(cc);
  const double u = std::clamp(a(0), -cfg_.u_max, cfg_.u_max);
  return reward_value(pendulum_goal_angle(tau, m, g, l), s_next(0), s_next(1),
                      u, cfg_.negate_reward ? -1.0 : 1.0);
}

Eigen::Vector4d PendulumGoal::total_reward_gradient(
    const Eigen::VectorXd& s, const Eigen::VectorXd& a,
    const Eigen::VectorXd& c) const {
  const Eigen::Vector4d cc = as_context4(c);
  check_context(cc);
  const auto [g, m, l, tau] = parts(cc);
  const double u = std::clamp(a(0), -cfg_.u_max, cfg_.u_max);
  PendulumState st;
  st.x = s;
  st = pendulum_integrate(st, u, cc, cfg_.dt);
  const double x = 0.5 * (pendulum_goal_angle(tau, m, g, l) - st.x(0));
  const double sign = cfg_.negate_reward ? -1.0 : 1.0;
  const Eigen::Vector4d goal_grad = pendulum_goal_angle_gradient(cc);
  // pi^2 cos(x) sin(x) (d theta_goal - theta_k) + 0.2 phi_k phi
  return sign * (kPi * kPi * std::cos(x) * std::sin(x) *
                     (goal_grad - st.sens.row(0).transpose()) +
                 0.2 * st.x(1) * st.sens.row(1).transpose());
}

EnvStepResult pendulum_step(const Eigen::Vector2d& state, double u,
                            const Eigen::Vector4d& c,
                            const PendulumConfig& cfg) {
  check_context(c);
  const auto [g, m, l, tau] = parts(c);
  const double torque = std::clamp(u, -cfg.u_max, cfg.u_max);
  PendulumState st;
  st.x = state;
  st = pendulum_integrate(st, torque, c, cfg.dt);

  const double sign = cfg.negate_reward ? -1.0 : 1.0;
  const double goal = pendulum_goal_angle(tau, m, g, l);
  const double half = 0.5 * (goal - st.x(0));
  const double sc = kPi * kPi * std::sin(half) * std::cos(half);

  EnvStepResult r;
  r.next_state = st.x;
  r.reward = reward_value(goal, st.x(0), st.x(1), torque, sign);
  r.terminated = false;
  r.dTdc = st.sens;
  r.dRdc = sign * sc * pendulum_goal_angle_gradient(c);
  r.dRds_next = Eigen::Vector2d(-sign * sc, sign * 0.2 * st.x(1));
  return r;
}

PendulumRollout pendulum_rollout(const Eigen::Vector2d& s0,
                                 const std::vector<double>& torques,
                                 const Eigen::Vector4d& c,
                                 const PendulumConfig& cfg) {
  check_context(c);
  const auto [g, m, l, tau] = parts(c);
  const double sign = cfg.negate_reward ? -1.0 : 1.0;
  const double goal = pendulum_goal_angle(tau, m, g, l);
  const Eigen::Vector4d goal_grad = pendulum_goal_angle_gradient(c);

  PendulumRollout out;
  out.total_reward_grad.setZero();
  PendulumState st;
  st.x = s0;
  for (double u : torques) {
    const double torque = std::clamp(u, -cfg.u_max, cfg.u_max);
    st = pendulum_integrate(st, torque, c, cfg.dt);
    const double half = 0.5 * (goal - st.x(0));
    const double sc = kPi * kPi * std::sin(half) * std::cos(half);
    out.total_reward += reward_value(goal, st.x(0), st.x(1), torque, sign);
    out.total_reward_grad +=
        sign * (sc * (goal_grad - st.sens.row(0).transpose()) +
                0.2 * st.x(1) * st.sens.row(1).transpose());
  }
  out.final_state = st.x;
  out.final_sens = st.sens;
  return out;
}

}  // namespace cmdp
