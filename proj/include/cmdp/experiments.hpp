#pragma once

// Tabular experiments: CEBE error scaling in the perturbation size and the
// optimal-policy transfer check.

#include <optional>
#include <span>
#include <vector>

#include "cmdp/tabular.hpp"

namespace cmdp {

enum class SolveMode { PolicyEval, Control };

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

// Ordinary least squares y = slope * x + intercept. Needs >= 2 points with
// distinct x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// n values log-spaced from lo to hi inclusive (n == 1 gives {lo}).
std::vector<double> log_spaced(double lo, double hi, int n);

// Fixed policy for the scaling experiment: eps-greedy softening of the
// optimal policy of the true MDP at c0.
TabularPolicy softened_optimal_policy(const TabularCMDP& mdp, double eps);

struct ScalingPoint {
  double dc_norm = 0.0;
  double q_error = 0.0;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;  // in input order
  std::optional<LineFit> fit;        // absent with < 2 nonzero perturbations
  // Errors nondecreasing in |dc| over the fitted points. Informational.
  bool monotone_in_fit_range = true;
};

// For each perturbation dc, || Q_ce(c0 + dc) - Q_be(c0 + dc) ||_inf where
// both sides are solved exactly (fixed-policy evaluation with `pi`, or value
// iteration in control mode). The line is fitted to (log |dc|, log error) over
// the `fit_points` smallest nonzero perturbations.
ScalingResult error_scaling_experiment(const TabularCMDP& mdp,
                                       const TabularPolicy& pi,
                                       std::span<const Context> perturbations,
                                       SolveMode mode, int fit_points,
                                       double control_tol = 1e-12);

// Q_ce and Q_be at one context, both for the same fixed policy.
struct QPair {
  QFunction be;
  QFunction ce;
};
QPair solve_pair(const TabularCMDP& mdp, const Context& c,
                 const TabularPolicy& pi);

struct TransferEntry {
  Context c;
  double gap = 0.0;    // J_be(pi*_be) - J_be(pi*_ce)
  double delta = 0.0;  // max over both greedy policies of ||Q_ce - Q_be||
  bool ok = true;
};

struct TransferReport {
  std::vector<TransferEntry> entries;
  bool all_ok = true;
};

// Checks J_be(pi*_be, c) - J_be(pi*_ce, c) <= 2 delta(c) + tol for each c.
// Throws BoundViolated on the first failing context.
TransferReport verify_policy_transfer(const TabularCMDP& mdp,
                                      std::span<const Context> contexts,
                                      const Eigen::VectorXd& s0, double tol,
                                      double vi_tol = 1e-12);

}  // namespace cmdp
