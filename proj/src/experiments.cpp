#include "cmdp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cmdp/errors.hpp"
#include "cmdp/parallel.hpp"

namespace cmdp {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("fit_line: sizes differ");
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) throw UsageError("fit_line needs at least two points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw UsageError("fit_line: x values are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = static_cast<int>(x.size());
  return fit;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) {
    throw UsageError("log_spaced needs n >= 1 and 0 < lo <= hi");
  }
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

TabularPolicy softened_optimal_policy(const TabularCMDP& mdp, double eps) {
  const TransitionTable t = mdp.transition_at(mdp.c0);
  const auto opt = value_iteration(
      t, expected_reward(t, mdp.reward_at(mdp.c0)), mdp.gamma, 1e-12);
  return TabularPolicy::epsilon_greedy(opt.actions, mdp.n_actions, eps);
}

QPair solve_pair(const TabularCMDP& mdp, const Context& c,
                 const TabularPolicy& pi) {
  const TransitionTable t = mdp.transition_at(c);
  const RewardTable r = mdp.reward_at(c);
  const CebeTables ce = build_cebe_tabular(mdp, c);
  return {policy_eval_exact(t, expected_reward(t, r), pi, mdp.gamma),
          policy_eval_exact(ce.t, expected_reward(ce.t, ce.r), pi, mdp.gamma)};
}

ScalingResult error_scaling_experiment(const TabularCMDP& mdp,
                                       const TabularPolicy& pi,
                                       std::span<const Context> perturbations,
                                       SolveMode mode, int fit_points,
                                       double control_tol) {
  ScalingResult result;
  result.points.resize(perturbations.size());
  parallel_for(perturbations.size(), [&](std::size_t i) {
    const Context c = mdp.c0 + perturbations[i];
    double err = 0.0;
    if (mode == SolveMode::PolicyEval) {
      const QPair q = solve_pair(mdp, c, pi);
      err = sup_distance(q.be, q.ce);
    } else {
      const TransitionTable t = mdp.transition_at(c);
      const CebeTables ce = build_cebe_tabular(mdp, c);
      const auto be = value_iteration(
          t, expected_reward(t, mdp.reward_at(c)), mdp.gamma, control_tol);
      const auto cq = value_iteration(ce.t, expected_reward(ce.t, ce.r),
                                      mdp.gamma, control_tol);
      err = sup_distance(be.q, cq.q);
    }
    result.points[i] = {perturbations[i].norm(), err};
  });

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    if (result.points[i].dc_norm > 0.0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return result.points[a].dc_norm < result.points[b].dc_norm;
  });
  if (order.size() > static_cast<std::size_t>(std::max(fit_points, 0))) {
    order.resize(static_cast<std::size_t>(std::max(fit_points, 0)));
  }
  if (order.size() >= 2) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& p = result.points[order[k]];
      lx.push_back(std::log(p.dc_norm));
      ly.push_back(std::log(p.q_error));
      if (k > 0 && p.q_error < result.points[order[k - 1]].q_error) {
        result.monotone_in_fit_range = false;
      }
    }
    result.fit = fit_line(lx, ly);
  }
  return result;
}

TransferReport verify_policy_transfer(const TabularCMDP& mdp,
                                      std::span<const Context> contexts,
                                      const Eigen::VectorXd& s0, double tol,
                                      double vi_tol) {
  TransferReport report;
  report.entries.resize(contexts.size());
  parallel_for(contexts.size(), [&](std::size_t i) {
    const Context& c = contexts[i];
    const TransitionTable t = mdp.transition_at(c);
    const Eigen::VectorXd r_be = expected_reward(t, mdp.reward_at(c));
    const CebeTables ce = build_cebe_tabular(mdp, c);
    const Eigen::VectorXd r_ce = expected_reward(ce.t, ce.r);

    const auto opt_be = value_iteration(t, r_be, mdp.gamma, vi_tol);
    const auto opt_ce = value_iteration(ce.t, r_ce, mdp.gamma, vi_tol);

    double delta = 0.0;
    for (const TabularPolicy* pi : {&opt_be.policy, &opt_ce.policy}) {
      const QFunction q_be = policy_eval_exact(t, r_be, *pi, mdp.gamma);
      const QFunction q_ce = policy_eval_exact(ce.t, r_ce, *pi, mdp.gamma);
      delta = std::max(delta, sup_distance(q_be, q_ce));
    }
    const double j_best = policy_return(t, r_be, mdp.gamma, opt_be.policy, s0);
    const double j_ce = policy_return(t, r_be, mdp.gamma, opt_ce.policy, s0);
    TransferEntry& e = report.entries[i];
    e.c = c;
    e.gap = j_best - j_ce;
    e.delta = delta;
    e.ok = e.gap <= 2.0 * delta + tol;
  });
  for (const auto& e : report.entries) {
    if (!e.ok) {
      report.all_ok = false;
      std::ostringstream os;
      os << "policy transfer bound violated at c = " << e.c.transpose()
         << ": gap " << e.gap << " > 2 * " << e.delta;
      throw BoundViolated(os.str());
    }
  }
  return report;
}

}  // namespace cmdp
