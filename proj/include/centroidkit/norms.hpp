#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "centroidkit/dists.hpp"
#include "centroidkit/estimate.hpp"

namespace centroidkit {

/// Above this order, empirical moments are accumulated in the log domain.
inline constexpr double kLogDomainOrder = 32.0;

/// Monte Carlo M_p norm (E|<t,X>|^p)^{1/p} over the cache rows with a
/// bootstrap interval. t is normalized before powering, so scaling t by a
/// power of two scales the result exactly.
NormEstimate mp_norm_mc(const SampleCache& cache, double p, const Eigen::VectorXd& t,
                        int resamples = 400);

/// Point value of mp_norm_mc without the bootstrap.
double mp_norm_value(const SampleCache& cache, double p, const Eigen::VectorXd& t);

/// Gradient of t -> mp_norm_value(cache, p, t); p >= 2 and t != 0.
Eigen::VectorXd mp_norm_gradient(const SampleCache& cache, double p, const Eigen::VectorXd& t);

/// The polynomial t -> E<t,X>^{2k} = sum_alpha C(2k,2alpha) E X^{2alpha} t^{2alpha}
/// of an unconditional law, with zero coefficients dropped.
class EvenMomentPolynomial {
 public:
  EvenMomentPolynomial(const DistributionSpec& spec, int k, std::uint64_t max_terms = 10'000'000);

  int dim() const { return n_; }
  int half_order() const { return k_; }
  std::size_t terms() const { return coeff_.size(); }
  /// alpha of term j (length n).
  std::span<const int> exponents(std::size_t j) const {
    return {alpha_.data() + j * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
  }
  double coefficient(std::size_t j) const { return coeff_[j]; }

  /// E<t,X>^{2k}.
  double value(const Eigen::VectorXd& t) const;
  /// Value, gradient and Hessian of the polynomial at t.
  double derivatives(const Eigen::VectorXd& t, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const;

 private:
  int n_;
  int k_;
  std::vector<int> alpha_;
  std::vector<double> coeff_;
};

/// Exact M_{2k} norm of an unconditional law with exact mixed moments.
NormEstimate mp_norm_exact_even(const DistributionSpec& spec, int k, const Eigen::VectorXd& t);

inline constexpr int kRademacherMaxDim = 24;

/// ||sum a_i eps_i||_p by enumerating sign patterns.
NormEstimate rademacher_norm_exact(const Eigen::VectorXd& a, double p);

/// sum_{i <= floor(p)} a*_i + sqrt(p) (sum_{i > floor(p)} (a*_i)^2)^{1/2}.
double hitczenko_surrogate(const Eigen::VectorXd& a, double p);

/// ||<t,X>||_p / ||<t,X>||_q on the cache (p >= q).
double moment_growth_ratio(const SampleCache& cache, const Eigen::VectorXd& t, double p, double q);

}  // namespace centroidkit
