#pragma once

// Random finite MDPs for the randomized certification harnesses.

#include "cmdp/random.hpp"
#include "cmdp/tabular.hpp"

namespace cmdp {

// Rows drawn from Dirichlet(1, ..., 1).
TransitionTable random_transition_table(int states, int actions, Rng& rng);

// Row-stochastic policy with Dirichlet(1, ..., 1) rows.
TabularPolicy random_policy(int states, int actions, Rng& rng);

struct SoftmaxFamilyOptions {
  double c0 = 0.0;
  double gamma = 0.9;
  double logit_scale = 1.0;   // std of base logits
  double slope_scale = 1.0;   // std of logit slopes in c
  double reward_scale = 1.0;  // rewards r0 + r1 c + r2 c^2, coefficients
                              // uniform in [-reward_scale, reward_scale]
};

// One-dimensional context family with T^c(s, a) = softmax(L0 + c L1) and
// R^c(s, a, s') = r0(s, a) + r1(s, a) c + r2(s, a) c^2 (independent of s').
// Smooth and non-affine in c, so the CEBE projection and the second-order
// terms are both exercised.
TabularCMDP random_softmax_cmdp(int states, int actions, Rng& rng,
                                const SoftmaxFamilyOptions& opts = {});

}  // namespace cmdp
