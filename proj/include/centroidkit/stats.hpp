#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace centroidkit {

/// Percentile bootstrap of a sample mean.
struct BootstrapSummary {
  double estimate = 0.0;  ///< statistic on the full sample
  double low = 0.0;       ///< 2.5% percentile of resampled statistics
  double high = 0.0;      ///< 97.5% percentile
  double std_error = 0.0; ///< standard deviation of resampled statistics
};

inline constexpr int kDefaultBootstrapResamples = 400;

/// Bootstrap of mean(values). Resample r draws its indices from a stream
/// derived from (seed, r), so the result does not depend on `jobs`.
BootstrapSummary bootstrap_mean(std::span<const double> values, std::uint64_t seed,
                                int resamples = kDefaultBootstrapResamples, int jobs = 1);

/// Bootstrap of log(mean(exp(log_values))), evaluated stably.
BootstrapSummary bootstrap_log_mean_exp(std::span<const double> log_values, std::uint64_t seed,
                                        int resamples = kDefaultBootstrapResamples, int jobs = 1);

/// log(mean(exp(x))) without overflow.
double log_mean_exp(std::span<const double> x);

/// Type-7 quantile of an unsorted sample.
double quantile(std::vector<double> values, double prob);

/// Wilson score interval for a binomial proportion.
struct ProportionInterval {
  double estimate, low, high;
};
ProportionInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.959963984540054);

/// x^p for p >= 0, using repeated squaring when p is a small integer.
double abs_pow(double x, double p);

/// In-place |v_j|^p over an array; integer p is evaluated by squaring so the
/// loops vectorize.
void abs_pow_inplace(std::span<double> v, double p);

}  // namespace centroidkit
