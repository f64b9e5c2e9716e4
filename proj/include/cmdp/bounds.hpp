#pragma once

// Lipschitz constants under the discrete metric, the right-hand sides of the
// Q-function stability and CEBE accuracy bounds, and randomized
// certification of both on small MDPs.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmdp/tabular.hpp"

namespace cmdp {

struct LipschitzReport {
  double L_T = 0.0;     // T as a map into signed measures (total variation)
  double L_T_w1 = 0.0;  // T as a map into probability measures under W1
  double L_pi = 0.0;    // max_{s != s'} W1(pi_s, pi_s')
  double R_sup = 0.0;
  double R_lip = 0.0;   // max(sup |R|, Lipschitz seminorm)
  double diam_S = 1.0;
  double d2T_sup = 0.0;
  double d2R_sup = 0.0;
};

// `reward` is the flattened expected reward r(s, a). All pairs of distinct
// (s, a) are at distance 1.
LipschitzReport lipschitz_constants(const TransitionTable& t,
                                    const Eigen::VectorXd& reward,
                                    const TabularPolicy& pi);

double policy_lipschitz(const TabularPolicy& pi);

struct StabilityBoundTerms {
  double delta_R = 0.0;
  double delta_T = 0.0;  // sup_(s,a) W1(T1(s,a), T2(s,a))
  double gamma = 0.0;
  double L_pi = 0.0;
  double L_T_max = 0.0;  // max(L_T1, L_T2) in W1, enters only the premise
  double L_T2 = 0.0;
  double R2_lip = 0.0;
};

// (1/(1-g)) (dR + g (1+Lpi) dT ||R2||_lip / (1 - g max(1, L_T2 (1+Lpi)))).
// Throws PremiseViolated unless g < 1 / (L_T_max (1 + L_pi)).
double theorem1_bound(const StabilityBoundTerms& t);

struct CebeBoundTerms {
  double dc_norm = 0.0;
  double gamma = 0.0;
  double L_pi = 0.0;
  double L_T = 0.0;   // total-variation Lipschitz constant over S x A x C
  double L_dT = 0.0;  // same for dT/dc
  double R_lip = 0.0;
  double d2T_sup = 0.0;
  double d2R_sup = 0.0;
  double diam_S = 1.0;
};

// (|dc|^2/(1-g)) (|d2R| + 3 g diam (1+Lpi) ||R||_lip |d2T| /
//                 (1 - g max(1, diam L_T (1+Lpi)))).
// Throws PremiseViolated unless |dc| < |d2T|^(-1/2) and
// g < 1 / (4 diam (L_T + |dc| L_dT) (1 + L_pi)).
double theorem3_bound(const CebeBoundTerms& t);

// Reduction of the CEBE bound when transitions are affine in c: the
// linearization is exact, so only the reward remainder survives:
// |dc|^2 sup |d2R| / (1 - g).
double affine_cebe_bound(double dc_norm, double gamma, double d2R_sup);

// Max of f over n evenly spaced points on the segment [a, b].
double segment_sup(const std::function<double(const Context&)>& f,
                   const Context& a, const Context& b, int n = 1000);

inline constexpr double kGridSafetyFactor = 1.01;

struct AffineReductionEntry {
  double dc_norm = 0.0;
  double q_error = 0.0;
  double bound = 0.0;
  bool ok = true;
};

// Measured ||Q_ce - Q_be|| against affine_cebe_bound * kGridSafetyFactor for
// each perturbation, with sup |d2R| taken on a dense grid between c0 and c.
std::vector<AffineReductionEntry> check_affine_reduction(
    const TabularCMDP& mdp, const TabularPolicy& pi,
    std::span<const Context> perturbations);

struct CertificationOptions {
  int trials = 200;  // premise-satisfying trials to evaluate
  int n_states = 5;
  int n_actions = 3;
  std::uint64_t seed = 0;
  std::optional<double> gamma;  // fixed discount; random per trial if unset
  int max_attempts = 0;         // 0 means 50 * trials
};

struct CertificationReport {
  int theorem = 1;
  int trials = 0;  // premise-satisfying trials evaluated
  int passed = 0;
  int discarded_premise = 0;
  int attempts = 0;
  double min_slack_ratio = 0.0;  // min bound / error over trials with error > 0
  double max_error = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Random pairs of MDPs sharing a policy; asserts the stability bound on every
// premise-satisfying trial. Throws BoundViolated with the offending trial
// serialized as JSON in details().
CertificationReport certify_theorem1(const CertificationOptions& opts);

// Random smooth softmax families; asserts the CEBE accuracy bound (with the
// grid safety factor) on every premise-satisfying trial.
CertificationReport certify_theorem3(const CertificationOptions& opts);

}  // namespace cmdp
