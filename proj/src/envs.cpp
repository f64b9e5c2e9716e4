#include "cmdp/envs.hpp"

#include "cmdp/errors.hpp"

namespace cmdp {

double rollout_return(const Environment& env, const DeterministicPolicy& pi,
                      const Eigen::VectorXd& s0, const Eigen::VectorXd& c,
                      int horizon, double gamma) {
  Eigen::VectorXd s = s0;
  double ret = 0.0;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const EnvStepResult res = env.step(s, pi(s, t), c);
    ret += discount * res.reward;
    discount *= gamma;
    s = res.next_state;
    if (res.terminated) break;
  }
  return ret;
}

FiniteDiffResult finite_diff_sensitivity(const Environment& env,
                                         const Eigen::VectorXd& s,
                                         const Eigen::VectorXd& a,
                                         const Eigen::VectorXd& c, double h) {
  if (!(h > 0.0)) throw UsageError("finite-difference step must be > 0");
  const EnvSpec& spec = env.spec();
  if (c.size() != spec.context_dim) {
    throw DimensionMismatch("context has the wrong dimension");
  }
  const Eigen::VectorXd s_next = env.step(s, a, c).next_state;

  FiniteDiffResult out;
  out.dTdc.resize(spec.state_dim, spec.context_dim);
  out.dRdc.resize(spec.context_dim);
  out.dRds_next.resize(spec.state_dim);
  for (int k = 0; k < spec.context_dim; ++k) {
    Eigen::VectorXd cp = c, cm = c;
    cp(k) += h;
    cm(k) -= h;
    if (!env.context_valid(cp) || !env.context_valid(cm)) {
      throw ContextOutOfRange("c +- h e_k leaves the context region");
    }
    out.dTdc.col(k) =
        (env.step(s, a, cp).next_state - env.step(s, a, cm).next_state) /
        (2.0 * h);
    out.dRdc(k) =
        (env.reward(s, a, s_next, cp) - env.reward(s, a, s_next, cm)) /
        (2.0 * h);
  }
  for (int i = 0; i < spec.state_dim; ++i) {
    Eigen::VectorXd sp = s_next, sm = s_next;
    sp(i) += h;
    sm(i) -= h;
    out.dRds_next(i) =
        (env.reward(s, a, sp, c) - env.reward(s, a, sm, c)) / (2.0 * h);
  }
  return out;
}

}  // namespace cmdp
