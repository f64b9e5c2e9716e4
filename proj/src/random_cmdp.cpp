#include "cmdp/random_cmdp.hpp"

#include <cmath>
#include <memory>

#include "cmdp/errors.hpp"

namespace cmdp {

namespace {

RowMatrix dirichlet_rows(int rows, int cols, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  RowMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) sum += (m(i, j) = expo(rng));
    m.row(i) /= sum;
  }
  return m;
}

struct SoftmaxParams {
  int states = 0;
  int actions = 0;
  RowMatrix l0, l1;          // (S*A) x S logits and slopes
  Eigen::VectorXd r0, r1, r2;  // per (s, a)

  RowMatrix probs(double c) const {
    RowMatrix p = l0 + c * l1;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double mx = p.row(i).maxCoeff();
      p.row(i) = (p.row(i).array() - mx).exp().matrix();
      p.row(i) /= p.row(i).sum();
    }
    return p;
  }

  // d/dc p = p * (l1 - m), d2/dc2 p = p * ((l1 - m)^2 - v) with m, v the
  // mean and variance of l1 under p.
  RowMatrix d1(const RowMatrix& p) const {
    RowMatrix out(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double m = p.row(i).dot(l1.row(i));
      out.row(i) = p.row(i).array() * (l1.row(i).array() - m);
    }
    return out;
  }

  RowMatrix d2(const RowMatrix& p) const {
    RowMatrix out(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double m = p.row(i).dot(l1.row(i));
      const Eigen::ArrayXd centred = l1.row(i).array().transpose() - m;
      const double v = (p.row(i).array().transpose() * centred.square()).sum();
      out.row(i) =
          (p.row(i).array().transpose() * (centred.square() - v)).transpose();
    }
    return out;
  }

  RowMatrix broadcast(const Eigen::VectorXd& per_sa) const {
    return per_sa.replicate(1, states);
  }
};

double max_row_tv(const RowMatrix& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

TransitionTable random_transition_table(int states, int actions, Rng& rng) {
  TransitionTable t(states, actions);
  t.p = dirichlet_rows(states * actions, states, rng);
  return t;
}

TabularPolicy random_policy(int states, int actions, Rng& rng) {
  return TabularPolicy(dirichlet_rows(states, actions, rng));
}

TabularCMDP random_softmax_cmdp(int states, int actions, Rng& rng,
                                const SoftmaxFamilyOptions& opts) {
  if (states < 1 || actions < 1) throw UsageError("need states, actions >= 1");
  auto params = std::make_shared<SoftmaxParams>();
  params->states = states;
  params->actions = actions;
  const int rows = states * actions;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-opts.reward_scale,
                                              opts.reward_scale);
  params->l0.resize(rows, states);
  params->l1.resize(rows, states);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < states; ++j) {
      params->l0(i, j) = opts.logit_scale * normal(rng);
      params->l1(i, j) = opts.slope_scale * normal(rng);
    }
  }
  params->r0.resize(rows);
  params->r1.resize(rows);
  params->r2.resize(rows);
  for (int i = 0; i < rows; ++i) {
    params->r0(i) = unif(rng);
    params->r1(i) = unif(rng);
    params->r2(i) = unif(rng);
  }

  TabularCMDP mdp;
  mdp.n_states = states;
  mdp.n_actions = actions;
  mdp.context_dim = 1;
  mdp.c0 = Context::Constant(1, opts.c0);
  mdp.gamma = opts.gamma;
  mdp.context_valid = [](const Context& c) {
    return c.size() == 1 && std::isfinite(c(0));
  };
  mdp.transition_at = [params](const Context& c) {
    TransitionTable t(params->states, params->actions);
    t.p = params->probs(c(0));
    return t;
  };
  mdp.reward_at = [params](const Context& c) {
    RewardTable r(params->states, params->actions);
    const double x = c(0);
    r.r = params->broadcast(params->r0 + x * params->r1 + x * x * params->r2);
    return r;
  };
  const RowMatrix p0 = params->probs(opts.c0);
  mdp.dT = {params->d1(p0)};
  mdp.dR = {params->broadcast(params->r1 + 2.0 * opts.c0 * params->r2)};
  mdp.dT_norm_at = [params](const Context& c) {
    return max_row_tv(params->d1(params->probs(c(0))));
  };
  mdp.dR_norm_at = [params](const Context& c) {
    return (params->r1 + 2.0 * c(0) * params->r2).cwiseAbs().maxCoeff();
  };
  mdp.d2T_norm_at = [params](const Context& c) {
    return max_row_tv(params->d2(params->probs(c(0))));
  };
  mdp.d2R_norm_at = [params](const Context&) {
    return 2.0 * params->r2.cwiseAbs().maxCoeff();
  };
  // Second derivative of a softmax row is bounded in TV by 2 * max_i
  // |l1_i - m|^2 <= 2 * (max l1 - min l1)^2 uniformly in c.
  double spread = 0.0;
  for (int i = 0; i < rows; ++i) {
    const double w = params->l1.row(i).maxCoeff() - params->l1.row(i).minCoeff();
    spread = std::max(spread, w);
  }
  mdp.d2T_bound = 2.0 * spread * spread;
  mdp.d2R_bound = 2.0 * params->r2.cwiseAbs().maxCoeff();
  mdp.terminal.assign(states, false);
  return mdp;
}

}  // namespace cmdp
