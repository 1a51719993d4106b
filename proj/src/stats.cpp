#include "centroidkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

#include "centroidkit/error.hpp"
#include "centroidkit/estimate.hpp"
#include "centroidkit/parallel.hpp"
#include "centroidkit/rng.hpp"

namespace centroidkit {

const char* to_string(Method method) {
  switch (method) {
    case Method::exact_even: return "exact_even";
    case Method::monte_carlo: return "monte_carlo";
    case Method::surrogate: return "surrogate";
    case Method::brute_force: return "brute_force";
  }
  return "unknown";
}

int default_jobs() {
  if (const char* env = std::getenv("CENTROIDKIT_JOBS")) {
    const int jobs = std::atoi(env);
    if (jobs > 0) return jobs;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

double abs_pow(double x, double p) {
  x = std::fabs(x);
  if (p == std::floor(p) && p >= 0.0 && p <= 64.0) {
    unsigned e = static_cast<unsigned>(p);
    double result = 1.0;
    double base = x;
    while (e != 0) {
      if (e & 1u) result *= base;
      base *= base;
      e >>= 1;
    }
    return result;
  }
  return std::pow(x, p);
}

void abs_pow_inplace(std::span<double> v, double p) {
  for (double& x : v) x = std::fabs(x);
  if (p == std::floor(p) && p >= 0.0 && p <= 64.0) {
    unsigned e = static_cast<unsigned>(p);
    std::vector<double> base(v.begin(), v.end());
    std::fill(v.begin(), v.end(), 1.0);
    const std::size_t n = v.size();
    while (e != 0) {
      if (e & 1u) {
        for (std::size_t j = 0; j < n; ++j) v[j] *= base[j];
      }
      e >>= 1;
      if (e != 0) {
        for (std::size_t j = 0; j < n; ++j) base[j] *= base[j];
      }
    }
    return;
  }
  for (double& x : v) x = std::pow(x, p);
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double log_mean_exp(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("log_mean_exp of an empty sample");
  const double top = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - top);
  return top + std::log(acc / static_cast<double>(x.size()));
}

namespace {

BootstrapSummary summarize(double estimate, const std::vector<double>& stats) {
  BootstrapSummary out;
  out.estimate = estimate;
  if (stats.empty()) {
    out.low = out.high = estimate;
    return out;
  }
  out.low = quantile(stats, 0.025);
  out.high = quantile(stats, 0.975);
  const double mean = std::accumulate(stats.begin(), stats.end(), 0.0) / static_cast<double>(stats.size());
  double ss = 0.0;
  for (double s : stats) ss += (s - mean) * (s - mean);
  out.std_error = stats.size() > 1 ? std::sqrt(ss / static_cast<double>(stats.size() - 1)) : 0.0;
  // Percentile endpoints can miss the point estimate for skewed statistics;
  // widen so the interval always contains it.
  out.low = std::min(out.low, estimate);
  out.high = std::max(out.high, estimate);
  return out;
}

}  // namespace

BootstrapSummary bootstrap_mean(std::span<const double> values, std::uint64_t seed, int resamples, int jobs) {
  if (values.empty()) throw InvalidArgument("bootstrap of an empty sample");
  const std::size_t n = values.size();
  const double estimate = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  std::vector<double> stats(static_cast<std::size_t>(std::max(resamples, 0)));
  parallel_for(stats.size(), jobs, [&](std::size_t r) {
    Philox rng(derive_seed(seed, StreamTag::bootstrap), r);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += values[rng.below(n)];
    stats[r] = acc / static_cast<double>(n);
  });
  return summarize(estimate, stats);
}

BootstrapSummary bootstrap_log_mean_exp(std::span<const double> log_values, std::uint64_t seed, int resamples,
                                        int jobs) {
  if (log_values.empty()) throw InvalidArgument("bootstrap of an empty sample");
  const std::size_t n = log_values.size();
  const double top = *std::max_element(log_values.begin(), log_values.end());
  const double estimate = log_mean_exp(log_values);
  if (!std::isfinite(top)) return summarize(estimate, {});
  std::vector<double> shifted(n);
  for (std::size_t j = 0; j < n; ++j) shifted[j] = std::exp(log_values[j] - top);
  std::vector<double> stats(static_cast<std::size_t>(std::max(resamples, 0)));
  parallel_for(stats.size(), jobs, [&](std::size_t r) {
    Philox rng(derive_seed(seed, StreamTag::bootstrap), r);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += shifted[rng.below(n)];
    stats[r] = acc > 0.0 ? top + std::log(acc / static_cast<double>(n))
                         : -std::numeric_limits<double>::infinity();
  });
  return summarize(estimate, stats);
}

ProportionInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  if (trials <= 0) throw InvalidArgument("wilson_interval needs trials > 0");
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {phat, std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace centroidkit
