#pragma once

// Context sample enhancement: first-order transport of an observed
// transition to a nearby context using the observed sensitivities.

#include <Eigen/Dense>
#include <cstddef>
#include <deque>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmdp/envs.hpp"
#include "cmdp/random.hpp"

namespace cmdp {

struct ContextSample {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  double r = 0.0;
  Eigen::VectorXd s_next;
  Eigen::VectorXd c;
  Eigen::MatrixXd dTdc;       // state_dim x context_dim
  Eigen::VectorXd dRdc;       // context_dim
  Eigen::VectorXd dRds_next;  // state_dim

  // Throws DimensionMismatch on inconsistent shapes, UsageError on a
  // non-finite reward.
  void validate() const;
};

ContextSample make_sample(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                          const Eigen::VectorXd& c, const EnvStepResult& step);

struct EnhancedSample {
  double r_bar = 0.0;
  Eigen::VectorXd s_next_bar;
};

// r_bar      = r + dRdc . dc + dRds_next . (dTdc dc)
// s_next_bar = s_next + dTdc dc
EnhancedSample cse_augment(const ContextSample& x, const Eigen::VectorXd& dc);

// Uniform direction on the sphere of radius epsilon in R^dim (normalized
// isotropic Gaussian).
Eigen::VectorXd sample_sphere(int dim, double epsilon, Rng& rng);

// H-step discounted value of the linearized model: every step queries the
// environment at c0 from the current enhanced state and moves to
// cse_augment(., dc).
double enhanced_rollout_value(const Environment& env,
                              const DeterministicPolicy& pi,
                              const Eigen::VectorXd& s0,
                              const Eigen::VectorXd& c0,
                              const Eigen::VectorXd& dc, int horizon,
                              double gamma);

// ---------------------------------------------------------------------------
// Jacobian-regularization view of the CSE loss on a supervised toy.
//
// Scalar input x ~ U[-1, 1], context c in R^d, scalar output:
//   F(x, c) = x * sum(c) + alpha |c|^2
//   f(x, c) = F(x, c0) + (dF/dc(x, c0) + x b) . (c - c0) + kappa |c - c0|^2
// so f matches F at c0 and the context Jacobians differ by x b.

struct PolynomialToy {
  Eigen::VectorXd c0;
  double alpha = 1.0;
  Eigen::VectorXd b;
  double kappa = 0.0;

  double target(double x, const Eigen::VectorXd& c) const;
  Eigen::VectorXd target_grad(double x, const Eigen::VectorXd& c) const;
  double model(double x, const Eigen::VectorXd& c) const;
};

struct RegularizationCheck {
  double l_cse = 0.0;          // Monte-Carlo E_xi E_x |f(x, c0+xi) - lin F|^2
  double l_cse_stderr = 0.0;
  double jacobian_term = 0.0;  // sigma^2 E_x |df/dc - dF/dc|^2 = sigma^2 |b|^2 / 3
};

RegularizationCheck regularization_equivalence_check(const PolynomialToy& toy,
                                                     double sigma,
                                                     std::size_t n_mc,
                                                     Rng& rng);

// ---------------------------------------------------------------------------

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  // Evicts the oldest sample once full.
  void push(ContextSample x);
  // Uniform with replacement. Throws EmptyBuffer.
  std::vector<ContextSample> sample_batch(std::size_t batch_size,
                                          Rng& rng) const;
  // Index draws only, for callers that read samples in place.
  std::vector<std::size_t> sample_indices(std::size_t batch_size,
                                          Rng& rng) const;

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return items_.empty(); }
  // 0 is the oldest retained sample.
  const ContextSample& at(std::size_t i) const { return items_.at(i); }

  // One JSON object per line with fields s, a, r, s_next, c, dTdc, dRdc,
  // dRds_next. dTdc is written as an array of rows.
  void write_jsonl(std::ostream& os) const;
  static ReplayBuffer read_jsonl(std::istream& is, std::size_t capacity);

 private:
  std::size_t capacity_;
  std::deque<ContextSample> items_;
};

nlohmann::json sample_to_json(const ContextSample& x);
ContextSample sample_from_json(const nlohmann::json& j);

}  // namespace cmdp
