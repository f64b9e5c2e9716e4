#pragma once

// Slippery cliff-walking grid with the slip probability as context.
//
// Layout: row 0 is the top row. The agent starts in the bottom-left cell,
// the goal is the bottom-right cell and every bottom-row cell strictly
// between them is cliff. Cliff and goal are absorbing with zero reward;
// rewards are paid on the transition into them and are 0 otherwise.
//
// Actions 0..3 are up, right, down, left. A move into a wall stays put. With
// probability 1 - c the intended move happens; with probability c the agent
// slips to one of the in-grid von Neumann neighbours chosen uniformly.

#include "cmdp/tabular.hpp"

namespace cmdp {

enum class CliffReward {
  A,  // R_cliff = -100 / c,       R_goal = c^-2
  B,  // R_cliff = -10 / (1 + c),  R_goal = (1 + c)^-1.5
};

struct CliffRewardValues {
  double cliff;
  double goal;
};

CliffRewardValues cliff_rewards(CliffReward variant, double c);
CliffRewardValues cliff_rewards_d1(CliffReward variant, double c);
CliffRewardValues cliff_rewards_d2(CliffReward variant, double c);

struct CliffLayout {
  int rows = 0;
  int cols = 0;

  int index(int row, int col) const { return row * cols + col; }
  int start() const { return index(rows - 1, 0); }
  int goal() const { return index(rows - 1, cols - 1); }
  bool is_cliff(int s) const {
    return s / cols == rows - 1 && s % cols > 0 && s % cols < cols - 1;
  }
  bool is_terminal(int s) const { return s == goal() || is_cliff(s); }
};

// Throws UsageError for rows or cols < 2, InvalidContext unless c in (0, 1).
TabularCMDP build_cliffwalker(int rows, int cols, CliffReward variant,
                              double c0, double gamma = 0.9);

}  // namespace cmdp
