#include "cmdp/measures.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cmdp/errors.hpp"

namespace cmdp {

namespace {

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) {
    throw SupportMismatch("support sizes differ: " + std::to_string(a) +
                          " vs " + std::to_string(b));
  }
}

double positive_weight(double w) { return w > kSignFloor ? w : 0.0; }
double negative_weight(double w) { return w < -kSignFloor ? -w : 0.0; }

}  // namespace

SignedMeasure::SignedMeasure(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw UsageError("signed measure needs support >= 1");
  for (double w : weights_) {
    if (!std::isfinite(w)) throw UsageError("signed measure weight not finite");
  }
}

SignedMeasure SignedMeasure::zero(std::size_t n) {
  return SignedMeasure(std::vector<double>(n, 0.0));
}

double SignedMeasure::total_mass() const noexcept {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

SignedMeasure operator-(const SignedMeasure& a, const SignedMeasure& b) {
  require_same_size(a.size(), b.size());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return SignedMeasure(std::move(out));
}

SignedMeasure operator+(const SignedMeasure& a, const SignedMeasure& b) {
  require_same_size(a.size(), b.size());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return SignedMeasure(std::move(out));
}

ProbabilityVector::ProbabilityVector(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw UsageError("probability vector needs support >= 1");
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw UsageError("probability weight negative or not finite");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw UsageError("probability weights sum to " + std::to_string(sum));
  }
}

ProbabilityVector ProbabilityVector::point_mass(std::size_t n, std::size_t at) {
  std::vector<double> w(n, 0.0);
  w.at(at) = 1.0;
  return ProbabilityVector(std::move(w));
}

double tv_norm(const SignedMeasure& mu) noexcept {
  double sum = 0.0;
  for (double w : mu.weights()) sum += std::abs(w);
  return sum;
}

SignedMeasure positive_part(const SignedMeasure& mu) {
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = positive_weight(mu[i]);
  return SignedMeasure(std::move(out));
}

SignedMeasure negative_part(const SignedMeasure& mu) {
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = negative_weight(mu[i]);
  return SignedMeasure(std::move(out));
}

void project_simplex_inplace(std::span<double> weights) {
  double mass = 0.0;
  for (double& w : weights) {
    w = positive_weight(w);
    mass += w;
  }
  if (!(mass > 0.0)) {
    throw ZeroPositivePart("positive part of the measure is zero");
  }
  for (double& w : weights) w /= mass;
}

ProbabilityVector project_simplex(const SignedMeasure& mu) {
  std::vector<double> w(mu.weights().begin(), mu.weights().end());
  project_simplex_inplace(w);
  return ProbabilityVector(std::move(w));
}

double w1_discrete(const ProbabilityVector& mu, const ProbabilityVector& nu) {
  require_same_size(mu.size(), nu.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) sum += std::abs(mu[i] - nu[i]);
  return 0.5 * sum;
}

}  // namespace cmdp
