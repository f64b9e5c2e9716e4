#include "cmdp/tabular.hpp"

#include <cmath>
#include <span>
#include <string>

#include "cmdp/errors.hpp"
#include "cmdp/measures.hpp"

namespace cmdp {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionMismatch(what);
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw SingularSystem("discount must lie in (0, 1), got " +
                         std::to_string(gamma));
  }
}

void check_row_stochastic(const RowMatrix& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double w = m(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw UsageError(std::string(what) + ": negative or non-finite entry");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      throw UsageError(std::string(what) + ": row " + std::to_string(i) +
                       " sums to " + std::to_string(sum));
    }
  }
}

// V(s) = sum_a pi(a | s) Q(s, a).
Eigen::VectorXd state_values(const TabularPolicy& pi, const QFunction& q) {
  return pi.probs().cwiseProduct(q.values).rowwise().sum();
}

QFunction from_flat(const Eigen::VectorXd& flat, int states, int actions) {
  QFunction q;
  q.values = Eigen::Map<const RowMatrix>(flat.data(), states, actions);
  return q;
}

}  // namespace

TransitionTable::TransitionTable(int states, int actions)
    : n_states(states),
      n_actions(actions),
      p(RowMatrix::Zero(states * actions, states)) {}

void TransitionTable::validate() const {
  require(p.rows() == n_states * n_actions && p.cols() == n_states,
          "transition table shape");
  check_row_stochastic(p, "transition table");
}

RewardTable::RewardTable(int states, int actions)
    : n_states(states),
      n_actions(actions),
      r(RowMatrix::Zero(states * actions, states)) {}

Eigen::VectorXd expected_reward(const TransitionTable& t,
                                const RewardTable& r) {
  require(t.p.rows() == r.r.rows() && t.p.cols() == r.r.cols(),
          "transition and reward tables differ in shape");
  return t.p.cwiseProduct(r.r).rowwise().sum();
}

TabularPolicy::TabularPolicy(RowMatrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) {
    throw UsageError("policy needs at least one state and one action");
  }
  check_row_stochastic(probs_, "policy");
}

TabularPolicy TabularPolicy::uniform(int states, int actions) {
  return TabularPolicy(RowMatrix::Constant(states, actions, 1.0 / actions));
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& actions,
                                           int n_actions) {
  return epsilon_greedy(actions, n_actions, 0.0);
}

TabularPolicy TabularPolicy::epsilon_greedy(const std::vector<int>& actions,
                                            int n_actions, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw UsageError("eps must lie in [0, 1]");
  const int states = static_cast<int>(actions.size());
  RowMatrix probs = RowMatrix::Constant(states, n_actions, eps / n_actions);
  for (int s = 0; s < states; ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) {
      throw UsageError("action index out of range");
    }
    probs(s, actions[s]) += 1.0 - eps;
  }
  return TabularPolicy(std::move(probs));
}

double sup_distance(const QFunction& a, const QFunction& b) {
  require(a.values.rows() == b.values.rows() &&
              a.values.cols() == b.values.cols(),
          "Q-function shapes differ");
  return (a.values - b.values).cwiseAbs().maxCoeff();
}

void TabularCMDP::check_context(const Context& c) const {
  if (c.size() != context_dim) {
    throw DimensionMismatch("context has " + std::to_string(c.size()) +
                            " entries, expected " +
                            std::to_string(context_dim));
  }
  if (context_valid && !context_valid(c)) {
    throw InvalidContext("context outside the declared region");
  }
}

QFunction apply_bellman_operator(const TransitionTable& t,
                                 const TabularPolicy& pi, const QFunction& q) {
  require(t.p.cols() == pi.n_states() && pi.n_states() == q.n_states() &&
              pi.n_actions() == q.n_actions() &&
              t.p.rows() == q.values.size(),
          "Bellman operator dimensions");
  const Eigen::VectorXd v = state_values(pi, q);
  return from_flat(t.p * v, q.n_states(), q.n_actions());
}

QFunction policy_eval_exact(const TransitionTable& t,
                            const Eigen::VectorXd& reward,
                            const TabularPolicy& pi, double gamma) {
  check_gamma(gamma);
  const int states = t.n_states;
  const int actions = t.n_actions;
  const int n = states * actions;
  require(t.p.rows() == n && t.p.cols() == states && reward.size() == n &&
              pi.n_states() == states && pi.n_actions() == actions,
          "policy evaluation dimensions");

  // A = P * Pi with Pi(s', s' * A + a') = pi(a' | s').
  RowMatrix a_op(n, n);
  for (int s2 = 0; s2 < states; ++s2) {
    for (int a2 = 0; a2 < actions; ++a2) {
      a_op.col(s2 * actions + a2) = t.p.col(s2) * pi.prob(s2, a2);
    }
  }
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * a_op;
  const Eigen::VectorXd flat = system.partialPivLu().solve(reward);
  if (!flat.allFinite()) throw SingularSystem("policy evaluation diverged");
  return from_flat(flat, states, actions);
}

std::vector<int> greedy_actions(const QFunction& q) {
  std::vector<int> out(q.n_states(), 0);
  for (int s = 0; s < q.n_states(); ++s) {
    int best = 0;
    for (int a = 1; a < q.n_actions(); ++a) {
      if (q.values(s, a) > q.values(s, best)) best = a;
    }
    out[s] = best;
  }
  return out;
}

ControlSolution value_iteration(const TransitionTable& t,
                                const Eigen::VectorXd& reward, double gamma,
                                double tol) {
  check_gamma(gamma);
  if (!(tol > 0.0)) throw UsageError("value iteration tolerance must be > 0");
  const int states = t.n_states;
  const int actions = t.n_actions;
  require(reward.size() == states * actions && t.p.cols() == states,
          "value iteration dimensions");

  Eigen::VectorXd q = Eigen::VectorXd::Zero(states * actions);
  Eigen::VectorXd v(states);
  int sweeps = 0;
  // ||TQ - Q|| <= gamma ||Q - Q_prev|| for the last sweep, so stopping when
  // the update is below tol (1 - gamma) / gamma leaves the residual <= tol.
  const double stop = tol * (1.0 - gamma) / gamma;
  // Rounding can keep the update a few ulps above a very small `stop`; cap
  // the sweeps at what the contraction needs from Q = 0, plus slack.
  const double scale = reward.cwiseAbs().maxCoeff() / (1.0 - gamma) + 1.0;
  const int max_sweeps =
      static_cast<int>(std::ceil(std::log(stop / scale) / std::log(gamma))) +
      1000;
  for (;;) {
    for (int s = 0; s < states; ++s) {
      v(s) = q.segment(s * actions, actions).maxCoeff();
    }
    Eigen::VectorXd next = reward + gamma * (t.p * v);
    const double change = (next - q).cwiseAbs().maxCoeff();
    q = std::move(next);
    ++sweeps;
    if (change <= stop || sweeps >= max_sweeps) break;
  }

  ControlSolution sol{from_flat(q, states, actions), {},
                      TabularPolicy::uniform(states, actions), sweeps, 0.0};
  for (int s = 0; s < states; ++s) {
    v(s) = q.segment(s * actions, actions).maxCoeff();
  }
  sol.residual = (reward + gamma * (t.p * v) - q).cwiseAbs().maxCoeff();
  sol.actions = greedy_actions(sol.q);
  sol.policy = TabularPolicy::deterministic(sol.actions, actions);
  return sol;
}

RowMatrix linearized_transition(const TabularCMDP& mdp, const Context& c) {
  mdp.check_context(c);
  const Context dc = c - mdp.c0;
  RowMatrix lin = mdp.transition_at(mdp.c0).p;
  for (int k = 0; k < mdp.context_dim; ++k) {
    if (dc(k) != 0.0) lin += mdp.dT.at(k) * dc(k);
  }
  return lin;
}

CebeTables build_cebe_tabular(const TabularCMDP& mdp, const Context& c) {
  mdp.check_context(c);
  const Context dc = c - mdp.c0;
  CebeTables out{mdp.transition_at(mdp.c0), mdp.reward_at(mdp.c0)};
  if ((dc.array() == 0.0).all()) return out;

  for (int k = 0; k < mdp.context_dim; ++k) {
    out.t.p += mdp.dT.at(k) * dc(k);
    out.r.r += mdp.dR.at(k) * dc(k);
  }
  for (Eigen::Index i = 0; i < out.t.p.rows(); ++i) {
    std::span<double> row(out.t.p.row(i).data(),
                          static_cast<std::size_t>(out.t.p.cols()));
    try {
      project_simplex_inplace(row);
    } catch (const ZeroPositivePart&) {
      throw PerturbationTooLarge(
          "linearized transition of (s, a) row " + std::to_string(i) +
          " has no positive mass");
    }
  }
  return out;
}

double policy_return(const TransitionTable& t, const Eigen::VectorXd& reward,
                     double gamma, const TabularPolicy& pi,
                     const Eigen::VectorXd& s0) {
  require(s0.size() == t.n_states, "start distribution size");
  const QFunction q = policy_eval_exact(t, reward, pi, gamma);
  return s0.dot(state_values(pi, q));
}

double policy_return(const TabularCMDP& mdp, const Context& c,
                     const TabularPolicy& pi, const Eigen::VectorXd& s0) {
  mdp.check_context(c);
  const TransitionTable t = mdp.transition_at(c);
  return policy_return(t, expected_reward(t, mdp.reward_at(c)), mdp.gamma, pi,
                       s0);
}

}  // namespace cmdp
