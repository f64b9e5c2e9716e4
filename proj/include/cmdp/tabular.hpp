#pragma once

// Finite contextual MDPs and exact dynamic-programming solvers.
//
// Tables over (s, a) pairs use row index s * n_actions + a. A transition
// table row is the next-state distribution T(. | s, a); a reward table row
// holds R(s, a, s') for every s'.

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace cmdp {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Context = Eigen::VectorXd;

struct TransitionTable {
  int n_states = 0;
  int n_actions = 0;
  RowMatrix p;  // (n_states * n_actions) x n_states

  TransitionTable() = default;
  TransitionTable(int states, int actions);

  int row(int s, int a) const { return s * n_actions + a; }
  // Throws UsageError unless every row is a probability vector.
  void validate() const;
};

struct RewardTable {
  int n_states = 0;
  int n_actions = 0;
  RowMatrix r;  // (n_states * n_actions) x n_states, entry R(s, a, s')

  RewardTable() = default;
  RewardTable(int states, int actions);

  int row(int s, int a) const { return s * n_actions + a; }
};

// r(s, a) = sum_s' T(s' | s, a) R(s, a, s'), flattened as s * A + a.
Eigen::VectorXd expected_reward(const TransitionTable& t,
                                const RewardTable& r);

class TabularPolicy {
 public:
  // Rows must be probability vectors.
  explicit TabularPolicy(RowMatrix probs);

  static TabularPolicy uniform(int states, int actions);
  static TabularPolicy deterministic(const std::vector<int>& actions,
                                     int n_actions);
  // (1 - eps) on the given action plus eps spread uniformly over all actions.
  static TabularPolicy epsilon_greedy(const std::vector<int>& actions,
                                      int n_actions, double eps);

  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  const RowMatrix& probs() const { return probs_; }
  double prob(int s, int a) const { return probs_(s, a); }

 private:
  RowMatrix probs_;
};

struct QFunction {
  RowMatrix values;  // n_states x n_actions

  int n_states() const { return static_cast<int>(values.rows()); }
  int n_actions() const { return static_cast<int>(values.cols()); }
  double sup_norm() const { return values.cwiseAbs().maxCoeff(); }
  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {values.data(), values.size()};
  }
};

double sup_distance(const QFunction& a, const QFunction& b);

// A context-parameterized finite MDP with analytic first derivatives at the
// base context c0.
struct TabularCMDP {
  int n_states = 0;
  int n_actions = 0;
  int context_dim = 0;
  Context c0;
  double gamma = 0.9;

  std::function<TransitionTable(const Context&)> transition_at;
  std::function<RewardTable(const Context&)> reward_at;
  std::function<bool(const Context&)> context_valid;

  // d/dc_k of the tables at c0, one matrix per context coordinate.
  std::vector<RowMatrix> dT;
  std::vector<RowMatrix> dR;

  // Pointwise first-derivative sizes at context c: sup over (s, a) of the
  // total variation of dT/dc and sup over (s, a, s') of |dR/dc|. Optional;
  // used when Lipschitz constants in the context direction are needed.
  std::function<double(const Context&)> dT_norm_at;
  std::function<double(const Context&)> dR_norm_at;

  // Pointwise second-derivative sizes: sup over (s, a) of the total
  // variation of d2T/dc2, and sup over (s, a, s') of |d2R/dc2|, at context c.
  // Empty functions mean the family is affine in c.
  std::function<double(const Context&)> d2T_norm_at;
  std::function<double(const Context&)> d2R_norm_at;

  // Sup of the pointwise sizes above over the declared context region.
  double d2T_bound = 0.0;
  double d2R_bound = 0.0;

  std::vector<bool> terminal;

  // Throws DimensionMismatch if c has the wrong size, InvalidContext if the
  // family is not defined there.
  void check_context(const Context& c) const;
};

// (A Q)(s, a) = sum_s' T(s' | s, a) sum_a' pi(a' | s') Q(s', a').
QFunction apply_bellman_operator(const TransitionTable& t,
                                 const TabularPolicy& pi, const QFunction& q);

// Unique fixed point of Q = r + gamma A Q by a dense LU solve with partial
// pivoting. `reward` is the flattened expected reward.
QFunction policy_eval_exact(const TransitionTable& t,
                            const Eigen::VectorXd& reward,
                            const TabularPolicy& pi, double gamma);

// Lowest action index wins ties.
std::vector<int> greedy_actions(const QFunction& q);

struct ControlSolution {
  QFunction q;
  std::vector<int> actions;
  TabularPolicy policy;
  int sweeps = 0;
  double residual = 0.0;  // sup-norm optimal-Bellman residual of q
};

// Iterates the optimal Bellman operator until the residual is <= tol.
ControlSolution value_iteration(const TransitionTable& t,
                                const Eigen::VectorXd& reward, double gamma,
                                double tol);

struct CebeTables {
  TransitionTable t;
  RewardTable r;
};

// T + sum_k dT_k (c - c0)_k before projection. Rows are signed measures of
// total mass one.
RowMatrix linearized_transition(const TabularCMDP& mdp, const Context& c);

// Context-enhanced tables at c: projected linearized transitions and the
// first-order reward expansion about c0. Returns the c0 tables unchanged when
// c == c0. Throws PerturbationTooLarge when some row has no positive mass.
CebeTables build_cebe_tabular(const TabularCMDP& mdp, const Context& c);

// Expected discounted return sum_s s0(s) sum_a pi(a|s) Q(s, a) with Q the
// exact policy evaluation of the true MDP at c.
double policy_return(const TabularCMDP& mdp, const Context& c,
                     const TabularPolicy& pi, const Eigen::VectorXd& s0);

// Expected discounted return of pi under given tables (helper shared by the
// transfer check and the bounds harness).
double policy_return(const TransitionTable& t, const Eigen::VectorXd& reward,
                     double gamma, const TabularPolicy& pi,
                     const Eigen::VectorXd& s0);

}  // namespace cmdp
