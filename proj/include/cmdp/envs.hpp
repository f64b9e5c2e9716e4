#pragma once

// Deterministic control environments that report, with every step, the
// sensitivities of the step with respect to the context.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cmdp/random.hpp"

namespace cmdp {

struct EnvStepResult {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool terminated = false;
  Eigen::MatrixXd dTdc;       // d s' / d c, state_dim x context_dim
  Eigen::VectorXd dRdc;       // dR / dc at fixed s'
  Eigen::VectorXd dRds_next;  // dR / ds'
};

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  int context_dim = 0;
  int horizon = 1;
  double gamma = 1.0;
  Eigen::VectorXd train_context;
  std::vector<std::pair<double, double>> action_bounds;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual bool context_valid(const Eigen::VectorXd& c) const = 0;
  virtual Eigen::VectorXd sample_start(Rng& rng) const = 0;

  // One step from s under action a in context c. Sensitivities start from
  // zero at the beginning of the step.
  virtual EnvStepResult step(const Eigen::VectorXd& s,
                             const Eigen::VectorXd& a,
                             const Eigen::VectorXd& c) const = 0;

  // Reward of the transition (s, a) -> s_next in context c, with s_next
  // taken as given. Used to differentiate in s_next and c separately.
  virtual double reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                        const Eigen::VectorXd& s_next,
                        const Eigen::VectorXd& c) const = 0;
};

using DeterministicPolicy =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& state, int t)>;

// Undiscounted when gamma == 1. Stops early on termination.
double rollout_return(const Environment& env, const DeterministicPolicy& pi,
                      const Eigen::VectorXd& s0, const Eigen::VectorXd& c,
                      int horizon, double gamma);

struct FiniteDiffResult {
  Eigen::MatrixXd dTdc;
  Eigen::VectorXd dRdc;
  Eigen::VectorXd dRds_next;
};

// Central differences of the step in each context coordinate, of the reward
// in c at fixed s', and of the reward in s'. Throws UsageError for h <= 0 and
// ContextOutOfRange if c +- h e_k leaves the context region.
FiniteDiffResult finite_diff_sensitivity(const Environment& env,
                                         const Eigen::VectorXd& s,
                                         const Eigen::VectorXd& a,
                                         const Eigen::VectorXd& c, double h);

// ---------------------------------------------------------------------------
// SimpleDirection: s' = s + a + c, R = s' . c on S = R^2, A = C = [-1, 1]^2.

class SimpleDirection final : public Environment {
 public:
  SimpleDirection();

  const EnvSpec& spec() const override { return spec_; }
  bool context_valid(const Eigen::VectorXd& c) const override;
  // Uniform on [-1, 1]^2.
  Eigen::VectorXd sample_start(Rng& rng) const override;
  EnvStepResult step(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& c) const override;
  double reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                const Eigen::VectorXd& s_next,
                const Eigen::VectorXd& c) const override;

 private:
  EnvSpec spec_;
};

// Actions are clamped to [-1, 1]^2; throws ContextOutOfRange outside
// [-1, 1]^2.
EnvStepResult simpledirection_step(const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& a,
                                   const Eigen::VectorXd& c);

// Expected undiscounted H-step return of a = sign(c) from s0 ~ U[-1, 1]^2:
// binom(H + 1, 2) (|c|_1 + |c|_2^2).
double simpledirection_optimal_return(int horizon, const Eigen::VectorXd& c);

// ---------------------------------------------------------------------------
// PendulumGoal: theta'' = (3g / 2l) sin(theta) + (3 / m l^2) u, context
// c = (g, m, l, tau), integrated with one explicit Euler step per env step on
// the state (theta, theta_dot) augmented with its context sensitivities.

struct PendulumConfig {
  double dt = 0.02;
  double u_max = 2.0;
  // Report the printed reward with its sign flipped so that maximising
  // return moves toward the goal angle.
  bool negate_reward = true;
  double start_noise = 0.05;
};

// theta_goal = asin(-2 tau / (m g l)). Throws UnreachableGoal if
// |2 tau| > m g l.
double pendulum_goal_angle(double tau, double m, double g, double l);

// d theta_goal / d(g, m, l, tau).
Eigen::Vector4d pendulum_goal_angle_gradient(const Eigen::Vector4d& c);

// State (theta, phi) plus sensitivities d(theta, phi)/dc, 2 x 4 with row 0
// theta and row 1 phi.
struct PendulumState {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  Eigen::Matrix<double, 2, 4> sens = Eigen::Matrix<double, 2, 4>::Zero();
};

// One explicit Euler step of the ten-component augmented system.
PendulumState pendulum_integrate(const PendulumState& in, double u,
                                 const Eigen::Vector4d& c, double dt);

class PendulumGoal final : public Environment {
 public:
  explicit PendulumGoal(PendulumConfig cfg = {});

  const EnvSpec& spec() const override { return spec_; }
  const PendulumConfig& config() const { return cfg_; }
  // m, l, g > 0 and |2 tau| < m g l.
  bool context_valid(const Eigen::VectorXd& c) const override;
  // (pi, 0) plus uniform noise of +- start_noise in each coordinate.
  Eigen::VectorXd sample_start(Rng& rng) const override;
  EnvStepResult step(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& c) const override;
  double reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                const Eigen::VectorXd& s_next,
                const Eigen::VectorXd& c) const override;

  // Total derivative dR/dc of the step reward through both the goal angle
  // and the next state, written in the closed form of the sensitivity
  // system. Equals dRdc + dRds_next * dTdc of step().
  Eigen::Vector4d total_reward_gradient(const Eigen::VectorXd& s,
                                        const Eigen::VectorXd& a,
                                        const Eigen::VectorXd& c) const;

 private:
  PendulumConfig cfg_;
  EnvSpec spec_;
};

EnvStepResult pendulum_step(const Eigen::Vector2d& state, double u,
                            const Eigen::Vector4d& c,
                            const PendulumConfig& cfg = {});

struct PendulumRollout {
  Eigen::Vector2d final_state;
  Eigen::Matrix<double, 2, 4> final_sens;  // d final_state / dc
  double total_reward = 0.0;
  Eigen::Vector4d total_reward_grad;  // d total_reward / dc
};

// Integrates a fixed torque sequence from s0, carrying sensitivities across
// steps (chain rule through the whole trajectory).
PendulumRollout pendulum_rollout(const Eigen::Vector2d& s0,
                                 const std::vector<double>& torques,
                                 const Eigen::Vector4d& c,
                                 const PendulumConfig& cfg = {});

}  // namespace cmdp
