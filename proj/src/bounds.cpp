#include "cmdp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cmdp/errors.hpp"
#include "cmdp/experiments.hpp"
#include "cmdp/parallel.hpp"
#include "cmdp/random.hpp"
#include "cmdp/random_cmdp.hpp"

namespace cmdp {

namespace {

double row_tv_distance(const RowMatrix& m, Eigen::Index i, Eigen::Index j) {
  return (m.row(i) - m.row(j)).cwiseAbs().sum();
}

double max_pairwise_tv(const RowMatrix& m) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.rows(); ++j) {
      best = std::max(best, row_tv_distance(m, i, j));
    }
  }
  return best;
}

double oscillation(const Eigen::VectorXd& v) {
  return v.size() > 1 ? v.maxCoeff() - v.minCoeff() : 0.0;
}

// Rounding slack when comparing a measured error to a bound computed along a
// different floating-point path.
bool within(double error, double bound, double factor = 1.0) {
  return error <= factor * bound * (1.0 + 1e-9) + 1e-12;
}

RowMatrix mix_with_uniform(const RowMatrix& m, double weight_on_m) {
  const double u = 1.0 / static_cast<double>(m.cols());
  return (m.array() * weight_on_m + u * (1.0 - weight_on_m)).matrix();
}

nlohmann::json matrix_json(const RowMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

struct TrialOutcome {
  bool premise_ok = false;
  double error = 0.0;
  double bound = 0.0;
  nlohmann::json record;
};

TrialOutcome theorem1_trial(const CertificationOptions& opts,
                            std::uint64_t attempt) {
  Rng rng = make_rng(opts.seed, attempt);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const int S = opts.n_states;
  const int A = opts.n_actions;

  TransitionTable t1 = random_transition_table(S, A, rng);
  t1.p = mix_with_uniform(t1.p, u01(rng));
  TransitionTable t2 = random_transition_table(S, A, rng);
  const double lambda = 0.3 * u01(rng);
  t2.p = (1.0 - lambda) * t1.p + lambda * t2.p;

  Eigen::VectorXd r1(S * A), r2(S * A);
  const double eta = 0.3 * u01(rng);
  for (int i = 0; i < S * A; ++i) {
    r1(i) = sym(rng);
    r2(i) = std::clamp(r1(i) + eta * sym(rng), -1.0, 1.0);
  }
  const TabularPolicy pi(
      mix_with_uniform(random_policy(S, A, rng).probs(), u01(rng)));
  const double gamma = opts.gamma ? *opts.gamma : 0.99 * u01(rng);

  const LipschitzReport l1 = lipschitz_constants(t1, r1, pi);
  const LipschitzReport l2 = lipschitz_constants(t2, r2, pi);
  StabilityBoundTerms terms;
  terms.delta_R = (r1 - r2).cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < t1.p.rows(); ++i) {
    terms.delta_T = std::max(
        terms.delta_T, 0.5 * (t1.p.row(i) - t2.p.row(i)).cwiseAbs().sum());
  }
  terms.gamma = gamma;
  terms.L_pi = l1.L_pi;
  terms.L_T_max = std::max(l1.L_T_w1, l2.L_T_w1);
  terms.L_T2 = l2.L_T_w1;
  terms.R2_lip = l2.R_lip;

  TrialOutcome out;
  out.record = {{"attempt", attempt},
                {"gamma", gamma},
                {"delta_R", terms.delta_R},
                {"delta_T", terms.delta_T},
                {"L_pi", terms.L_pi},
                {"L_T_max", terms.L_T_max},
                {"L_T2", terms.L_T2},
                {"R2_lip", terms.R2_lip}};
  try {
    out.bound = theorem1_bound(terms);
  } catch (const PremiseViolated&) {
    return out;
  }
  out.premise_ok = true;
  const QFunction q1 = policy_eval_exact(t1, r1, pi, gamma);
  const QFunction q2 = policy_eval_exact(t2, r2, pi, gamma);
  out.error = sup_distance(q1, q2);
  out.record["error"] = out.error;
  out.record["bound"] = out.bound;
  out.record["T1"] = matrix_json(t1.p);
  out.record["T2"] = matrix_json(t2.p);
  out.record["R1"] = std::vector<double>(r1.begin(), r1.end());
  out.record["R2"] = std::vector<double>(r2.begin(), r2.end());
  out.record["pi"] = matrix_json(pi.probs());
  return out;
}

TrialOutcome theorem3_trial(const CertificationOptions& opts,
                            std::uint64_t attempt) {
  Rng rng = make_rng(opts.seed, attempt);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int S = opts.n_states;
  const int A = opts.n_actions;

  SoftmaxFamilyOptions fam;
  fam.c0 = 0.0;
  fam.logit_scale = 1.5 * u01(rng);
  fam.slope_scale = 0.05 + 0.95 * u01(rng);
  fam.gamma = opts.gamma ? *opts.gamma : 0.3 * u01(rng);
  const TabularCMDP mdp = random_softmax_cmdp(S, A, rng, fam);
  const TabularPolicy pi(
      mix_with_uniform(random_policy(S, A, rng).probs(), u01(rng)));
  const double dc = (u01(rng) < 0.5 ? -1.0 : 1.0) * (0.01 + 0.29 * u01(rng));
  const Context c0 = mdp.c0;
  const Context c = c0 + Context::Constant(1, dc);

  CebeBoundTerms terms;
  terms.dc_norm = std::abs(dc);
  terms.gamma = fam.gamma;
  terms.L_pi = policy_lipschitz(pi);
  terms.d2T_sup = segment_sup(mdp.d2T_norm_at, c0, c);
  terms.d2R_sup = segment_sup(mdp.d2R_norm_at, c0, c);
  const double dT_sup = segment_sup(mdp.dT_norm_at, c0, c);
  const double dR_sup = segment_sup(mdp.dR_norm_at, c0, c);

  // Product metric max(1{x != y}, |c - c'|) on (S x A) x C. For x != y the
  // distance is 1, and ||T(x, c) - T(y, c')|| is bounded through c0.
  const double base_tv = max_pairwise_tv(mdp.transition_at(c0).p);
  terms.L_T = std::max(std::min(2.0, base_tv + 2.0 * dT_sup * terms.dc_norm),
                       dT_sup);
  terms.L_dT = std::max(2.0 * dT_sup, terms.d2T_sup);

  double r_max = -std::numeric_limits<double>::infinity();
  double r_min = std::numeric_limits<double>::infinity();
  constexpr int kGrid = 1000;
  for (int i = 0; i < kGrid; ++i) {
    const Context ci = c0 + (c - c0) * (static_cast<double>(i) / (kGrid - 1));
    const Eigen::VectorXd col = mdp.reward_at(ci).r.col(0);
    r_max = std::max(r_max, col.maxCoeff());
    r_min = std::min(r_min, col.minCoeff());
  }
  const double r_sup = std::max(std::abs(r_max), std::abs(r_min));
  terms.R_lip = std::max({r_sup, r_max - r_min, dR_sup});

  TrialOutcome out;
  out.record = {{"attempt", attempt},     {"gamma", terms.gamma},
                {"dc", dc},               {"L_pi", terms.L_pi},
                {"L_T", terms.L_T},       {"L_dT", terms.L_dT},
                {"R_lip", terms.R_lip},   {"d2T_sup", terms.d2T_sup},
                {"d2R_sup", terms.d2R_sup}};
  try {
    out.bound = theorem3_bound(terms);
    const QPair q = solve_pair(mdp, c, pi);
    out.error = sup_distance(q.be, q.ce);
  } catch (const PremiseViolated&) {
    return out;
  } catch (const PerturbationTooLarge&) {
    return out;
  }
  out.premise_ok = true;
  out.record["error"] = out.error;
  out.record["bound"] = out.bound;
  out.record["logit_scale"] = fam.logit_scale;
  out.record["slope_scale"] = fam.slope_scale;
  return out;
}

template <typename TrialFn>
CertificationReport run_certification(const CertificationOptions& opts,
                                      int theorem, double factor,
                                      TrialFn trial) {
  if (opts.trials < 0 || opts.n_states < 1 || opts.n_actions < 1) {
    throw UsageError("certification needs trials >= 0, states/actions >= 1");
  }
  CertificationReport report;
  report.theorem = theorem;
  report.seed = opts.seed;
  report.min_slack_ratio = std::numeric_limits<double>::infinity();
  const int max_attempts =
      opts.max_attempts > 0 ? opts.max_attempts : 50 * std::max(opts.trials, 1);

  // Attempts are evaluated in parallel batches and consumed in index order.
  const int batch = std::max(opts.trials, 16);
  while (report.trials < opts.trials && report.attempts < max_attempts) {
    const int count = std::min(batch, max_attempts - report.attempts);
    std::vector<TrialOutcome> outcomes(count);
    const int first = report.attempts;
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
      outcomes[i] = trial(opts, static_cast<std::uint64_t>(first + i));
    });
    for (const auto& o : outcomes) {
      if (report.trials >= opts.trials) break;
      ++report.attempts;
      if (!o.premise_ok) {
        ++report.discarded_premise;
        continue;
      }
      ++report.trials;
      report.max_error = std::max(report.max_error, o.error);
      if (o.error > 0.0) {
        report.min_slack_ratio =
            std::min(report.min_slack_ratio, o.bound / o.error);
      }
      if (!within(o.error, o.bound, factor)) {
        std::ostringstream os;
        os << "theorem " << theorem << " bound violated: error " << o.error
           << " > bound " << o.bound;
        throw BoundViolated(os.str(), o.record.dump());
      }
      ++report.passed;
    }
  }
  return report;
}

}  // namespace

double policy_lipschitz(const TabularPolicy& pi) {
  return 0.5 * max_pairwise_tv(pi.probs());
}

LipschitzReport lipschitz_constants(const TransitionTable& t,
                                    const Eigen::VectorXd& reward,
                                    const TabularPolicy& pi) {
  if (reward.size() != t.p.rows()) {
    throw DimensionMismatch("reward table does not match transition table");
  }
  LipschitzReport rep;
  rep.L_T = max_pairwise_tv(t.p);
  rep.L_T_w1 = 0.5 * rep.L_T;
  rep.L_pi = policy_lipschitz(pi);
  rep.R_sup = reward.cwiseAbs().maxCoeff();
  rep.R_lip = std::max(rep.R_sup, oscillation(reward));
  return rep;
}

double theorem1_bound(const StabilityBoundTerms& t) {
  if (!(t.gamma > 0.0 && t.gamma < 1.0)) {
    throw PremiseViolated("discount must lie in (0, 1)");
  }
  if (t.gamma * t.L_T_max * (1.0 + t.L_pi) >= 1.0) {
    throw PremiseViolated("gamma >= 1 / (L_T (1 + L_pi))");
  }
  const double g = t.gamma;
  const double denom = 1.0 - g * std::max(1.0, t.L_T2 * (1.0 + t.L_pi));
  return (t.delta_R + g * (1.0 + t.L_pi) * t.delta_T * t.R2_lip / denom) /
         (1.0 - g);
}

double theorem3_bound(const CebeBoundTerms& t) {
  if (!(t.gamma > 0.0 && t.gamma < 1.0)) {
    throw PremiseViolated("discount must lie in (0, 1)");
  }
  if (t.d2T_sup > 0.0 && t.dc_norm * t.dc_norm * t.d2T_sup >= 1.0) {
    throw PremiseViolated("|c - c0| >= |d2T|^(-1/2)");
  }
  if (4.0 * t.gamma * t.diam_S * (t.L_T + t.dc_norm * t.L_dT) *
          (1.0 + t.L_pi) >=
      1.0) {
    throw PremiseViolated(
        "gamma >= 1 / (4 diam (L_T + |dc| L_dT) (1 + L_pi))");
  }
  const double g = t.gamma;
  const double denom =
      1.0 - g * std::max(1.0, t.diam_S * t.L_T * (1.0 + t.L_pi));
  const double transition_term = 3.0 * g * t.diam_S * (1.0 + t.L_pi) *
                                 t.R_lip * t.d2T_sup / denom;
  return t.dc_norm * t.dc_norm / (1.0 - g) * (t.d2R_sup + transition_term);
}

double affine_cebe_bound(double dc_norm, double gamma, double d2R_sup) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw PremiseViolated("discount must lie in (0, 1)");
  }
  return dc_norm * dc_norm * d2R_sup / (1.0 - gamma);
}

double segment_sup(const std::function<double(const Context&)>& f,
                   const Context& a, const Context& b, int n) {
  if (!f) return 0.0;
  if (n < 2) throw UsageError("segment_sup needs n >= 2");
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    best = std::max(best, f(a + (b - a) * s));
  }
  return best;
}

std::vector<AffineReductionEntry> check_affine_reduction(
    const TabularCMDP& mdp, const TabularPolicy& pi,
    std::span<const Context> perturbations) {
  if (mdp.d2T_norm_at || mdp.d2T_bound != 0.0) {
    throw UsageError("affine reduction needs transitions affine in c");
  }
  std::vector<AffineReductionEntry> out(perturbations.size());
  parallel_for(perturbations.size(), [&](std::size_t i) {
    const Context c = mdp.c0 + perturbations[i];
    const QPair q = solve_pair(mdp, c, pi);
    auto& e = out[i];
    e.dc_norm = perturbations[i].norm();
    e.q_error = sup_distance(q.be, q.ce);
    e.bound = affine_cebe_bound(e.dc_norm, mdp.gamma,
                                segment_sup(mdp.d2R_norm_at, mdp.c0, c));
    e.ok = within(e.q_error, e.bound, kGridSafetyFactor);
  });
  return out;
}

CertificationReport certify_theorem1(const CertificationOptions& opts) {
  return run_certification(opts, 1, 1.0, theorem1_trial);
}

CertificationReport certify_theorem3(const CertificationOptions& opts) {
  return run_certification(opts, 3, kGridSafetyFactor, theorem3_trial);
}

nlohmann::json CertificationReport::to_json() const {
  nlohmann::json j = {{"theorem", theorem},
                      {"trials", trials},
                      {"passed", passed},
                      {"discarded_premise", discarded_premise},
                      {"attempts", attempts},
                      {"max_error", max_error},
                      {"seed", seed}};
  if (std::isfinite(min_slack_ratio)) {
    j["min_slack_ratio"] = min_slack_ratio;
  } else {
    j["min_slack_ratio"] = nullptr;
  }
  return j;
}

}  // namespace cmdp
