#include "cmdp/cliffwalker.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>

#include "cmdp/errors.hpp"

namespace cmdp {

namespace {

constexpr int kActions = 4;
constexpr std::array<int, kActions> kRowStep{-1, 0, 1, 0};
constexpr std::array<int, kActions> kColStep{0, 1, 0, -1};

bool slip_in_range(double c) { return c > 0.0 && c < 1.0; }

// Transition pieces that do not depend on c: T^c = base + c * slope.
struct CliffDynamics {
  CliffLayout layout;
  RowMatrix base;   // delta of the intended cell
  RowMatrix slope;  // uniform(neighbours) - delta(intended)
};

std::shared_ptr<const CliffDynamics> make_dynamics(const CliffLayout& g) {
  const int states = g.rows * g.cols;
  auto d = std::make_shared<CliffDynamics>();
  d->layout = g;
  d->base = RowMatrix::Zero(states * kActions, states);
  d->slope = RowMatrix::Zero(states * kActions, states);
  for (int s = 0; s < states; ++s) {
    const int r = s / g.cols;
    const int c = s % g.cols;
    for (int a = 0; a < kActions; ++a) {
      const int row = s * kActions + a;
      if (g.is_terminal(s)) {
        d->base(row, s) = 1.0;
        continue;
      }
      const int nr = r + kRowStep[a];
      const int nc = c + kColStep[a];
      const bool inside = nr >= 0 && nr < g.rows && nc >= 0 && nc < g.cols;
      const int intended = inside ? g.index(nr, nc) : s;
      d->base(row, intended) = 1.0;
      d->slope(row, intended) -= 1.0;

      int neighbours = 0;
      for (int k = 0; k < kActions; ++k) {
        const int mr = r + kRowStep[k];
        const int mc = c + kColStep[k];
        if (mr >= 0 && mr < g.rows && mc >= 0 && mc < g.cols) ++neighbours;
      }
      for (int k = 0; k < kActions; ++k) {
        const int mr = r + kRowStep[k];
        const int mc = c + kColStep[k];
        if (mr >= 0 && mr < g.rows && mc >= 0 && mc < g.cols) {
          d->slope(row, g.index(mr, mc)) += 1.0 / neighbours;
        }
      }
    }
  }
  return d;
}

// R(s, a, s') built from per-context (cliff, goal) values.
RowMatrix reward_matrix(const CliffLayout& g, CliffRewardValues v) {
  const int states = g.rows * g.cols;
  RowMatrix r = RowMatrix::Zero(states * kActions, states);
  for (int s = 0; s < states; ++s) {
    if (g.is_terminal(s)) continue;
    for (int a = 0; a < kActions; ++a) {
      for (int s2 = 0; s2 < states; ++s2) {
        if (s2 == g.goal()) {
          r(s * kActions + a, s2) = v.goal;
        } else if (g.is_cliff(s2)) {
          r(s * kActions + a, s2) = v.cliff;
        }
      }
    }
  }
  return r;
}

}  // namespace

CliffRewardValues cliff_rewards(CliffReward variant, double c) {
  if (variant == CliffReward::A) return {-100.0 / c, 1.0 / (c * c)};
  return {-10.0 / (1.0 + c), std::pow(1.0 + c, -1.5)};
}

CliffRewardValues cliff_rewards_d1(CliffReward variant, double c) {
  if (variant == CliffReward::A) return {100.0 / (c * c), -2.0 / (c * c * c)};
  const double u = 1.0 + c;
  return {10.0 / (u * u), -1.5 * std::pow(u, -2.5)};
}

CliffRewardValues cliff_rewards_d2(CliffReward variant, double c) {
  if (variant == CliffReward::A) {
    return {-200.0 / (c * c * c), 6.0 / (c * c * c * c)};
  }
  const double u = 1.0 + c;
  return {-20.0 / (u * u * u), 3.75 * std::pow(u, -3.5)};
}

TabularCMDP build_cliffwalker(int rows, int cols, CliffReward variant,
                              double c0, double gamma) {
  if (rows < 2 || cols < 2) {
    throw UsageError("cliffwalker needs at least 2 rows and 2 columns");
  }
  if (!slip_in_range(c0)) {
    throw InvalidContext("slip probability must lie in (0, 1), got " +
                         std::to_string(c0));
  }
  const CliffLayout layout{rows, cols};
  const auto dyn = make_dynamics(layout);
  const int states = rows * cols;

  TabularCMDP mdp;
  mdp.n_states = states;
  mdp.n_actions = kActions;
  mdp.context_dim = 1;
  mdp.c0 = Context::Constant(1, c0);
  mdp.gamma = gamma;
  mdp.context_valid = [](const Context& c) {
    return c.size() == 1 && slip_in_range(c(0));
  };
  mdp.transition_at = [dyn](const Context& c) {
    TransitionTable t(dyn->layout.rows * dyn->layout.cols, kActions);
    t.p = dyn->base + c(0) * dyn->slope;
    return t;
  };
  mdp.reward_at = [layout, variant](const Context& c) {
    RewardTable r(layout.rows * layout.cols, kActions);
    r.r = reward_matrix(layout, cliff_rewards(variant, c(0)));
    return r;
  };
  mdp.dT = {dyn->slope};
  mdp.dR = {reward_matrix(layout, cliff_rewards_d1(variant, c0))};
  const double slope_tv = dyn->slope.cwiseAbs().rowwise().sum().maxCoeff();
  mdp.dT_norm_at = [slope_tv](const Context&) { return slope_tv; };
  mdp.dR_norm_at = [variant](const Context& c) {
    const auto d1 = cliff_rewards_d1(variant, c(0));
    return std::max(std::abs(d1.cliff), std::abs(d1.goal));
  };
  mdp.d2R_norm_at = [variant](const Context& c) {
    const auto d2 = cliff_rewards_d2(variant, c(0));
    return std::max(std::abs(d2.cliff), std::abs(d2.goal));
  };
  mdp.d2T_bound = 0.0;
  // |R''| is decreasing in c for both variants, so the sup over (0, 1) is
  // attained as c -> 0 (unbounded for variant A); report it at c0.
  mdp.d2R_bound = mdp.d2R_norm_at(mdp.c0);
  mdp.terminal.resize(states);
  for (int s = 0; s < states; ++s) mdp.terminal[s] = layout.is_terminal(s);
  return mdp;
}

}  // namespace cmdp
