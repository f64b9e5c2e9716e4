#pragma once

// Finite-support signed measures under the discrete metric d(x, y) = 1{x != y}.
//
// Conventions:
//   * total variation norm ||mu|| = sum_i |w_i| (no 1/2 factor);
//   * W1 between probability vectors is 1/2 * ||mu - nu||, diam = 1;
//   * |w| < kSignFloor is treated as zero when splitting into positive and
//     negative parts.

#include <cstddef>
#include <span>
#include <vector>

namespace cmdp {

inline constexpr double kSignFloor = 1e-15;
inline constexpr double kSimplexTolerance = 1e-12;

class SignedMeasure {
 public:
  // Throws UsageError on empty support or non-finite weights.
  explicit SignedMeasure(std::vector<double> weights);

  static SignedMeasure zero(std::size_t n);

  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }

  // Signed total mass mu(X).
  double total_mass() const noexcept;

  friend SignedMeasure operator-(const SignedMeasure& a,
                                 const SignedMeasure& b);
  friend SignedMeasure operator+(const SignedMeasure& a,
                                 const SignedMeasure& b);

 private:
  std::vector<double> weights_;
};

class ProbabilityVector {
 public:
  // Throws UsageError unless every weight is >= 0 and the weights sum to 1
  // within kSimplexTolerance.
  explicit ProbabilityVector(std::vector<double> weights);

  static ProbabilityVector point_mass(std::size_t n, std::size_t at);

  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }

  SignedMeasure as_signed() const { return SignedMeasure(weights_); }

 private:
  std::vector<double> weights_;
};

double tv_norm(const SignedMeasure& mu) noexcept;

// Hahn-Jordan parts; for finite support these are elementwise max(w, 0) and
// max(-w, 0).
SignedMeasure positive_part(const SignedMeasure& mu);
SignedMeasure negative_part(const SignedMeasure& mu);

// P(mu) = mu+ / ||mu+||. Throws ZeroPositivePart when mu+ vanishes.
ProbabilityVector project_simplex(const SignedMeasure& mu);

// Same projection on a raw weight row, written in place. Used by the tabular
// solvers to avoid allocating a measure per (s, a).
void project_simplex_inplace(std::span<double> weights);

// 1/2 sum |mu_i - nu_i|. Throws SupportMismatch on different sizes.
double w1_discrete(const ProbabilityVector& mu, const ProbabilityVector& nu);

}  // namespace cmdp
