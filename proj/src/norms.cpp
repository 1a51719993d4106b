#include "centroidkit/norms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "centroidkit/combi.hpp"
#include "centroidkit/error.hpp"
#include "centroidkit/rng.hpp"
#include "centroidkit/stats.hpp"

namespace centroidkit {

namespace {

void check_order(double p, double min_p) {
  if (!(p >= min_p) || !std::isfinite(p)) {
    throw InvalidArgument("moment order p must be finite and at least " + std::to_string(min_p));
  }
}

void check_direction(const SampleCache& cache, const Eigen::VectorXd& t) {
  if (t.size() != cache.dim()) throw InvalidArgument("vector length does not match the dimension");
}

struct Projection {
  double scale = 0.0;   // |t|_2
  Eigen::VectorXd y;    // <t/|t|, x_j>
};

Projection project(const SampleCache& cache, const Eigen::VectorXd& t) {
  Projection out;
  out.scale = t.norm();
  if (out.scale == 0.0) return out;
  const Eigen::VectorXd u = t / out.scale;
  out.y.noalias() = cache.data() * u;
  return out;
}

// mean_j |y_j|^p, or its logarithm when `log_domain`.
double empirical_moment(const Eigen::VectorXd& y, double p, bool log_domain) {
  const auto N = static_cast<std::size_t>(y.size());
  if (!log_domain) {
    double acc = 0.0;
    for (std::size_t j = 0; j < N; ++j) acc += abs_pow(y(static_cast<Eigen::Index>(j)), p);
    return acc / static_cast<double>(N);
  }
  std::vector<double> logs(N);
  for (std::size_t j = 0; j < N; ++j) logs[j] = p * std::log(std::abs(y(static_cast<Eigen::Index>(j))));
  return log_mean_exp(logs);
}

}  // namespace

double mp_norm_value(const SampleCache& cache, double p, const Eigen::VectorXd& t) {
  check_order(p, 1.0);
  check_direction(cache, t);
  const Projection proj = project(cache, t);
  if (proj.scale == 0.0) return 0.0;
  if (p > kLogDomainOrder) return proj.scale * std::exp(empirical_moment(proj.y, p, true) / p);
  const double m = empirical_moment(proj.y, p, false);
  if (!std::isfinite(m) || m > 1e300) return proj.scale * std::exp(empirical_moment(proj.y, p, true) / p);
  return proj.scale * std::pow(m, 1.0 / p);
}

NormEstimate mp_norm_mc(const SampleCache& cache, double p, const Eigen::VectorXd& t, int resamples) {
  check_order(p, 1.0);
  check_direction(cache, t);
  const Projection proj = project(cache, t);
  if (proj.scale == 0.0) return NormEstimate::exact(0.0, Method::monte_carlo);

  const auto N = static_cast<std::size_t>(proj.y.size());
  std::vector<double> logs(N);
  for (std::size_t j = 0; j < N; ++j) logs[j] = p * std::log(std::abs(proj.y(static_cast<Eigen::Index>(j))));
  const std::uint64_t boot_seed = derive_seed(cache.seed(), StreamTag::bootstrap);

  NormEstimate e;
  e.method = Method::monte_carlo;
  e.value = mp_norm_value(cache, p, t);
  const auto boot = bootstrap_log_mean_exp(logs, boot_seed, resamples);
  e.ci_low = std::min(e.value, proj.scale * std::exp(boot.low / p));
  e.ci_high = std::max(e.value, proj.scale * std::exp(boot.high / p));
  // delta method on the log scale: d(value) = value * d(log moment) / p
  e.std_error = e.value * boot.std_error / p;
  return e;
}

Eigen::VectorXd mp_norm_gradient(const SampleCache& cache, double p, const Eigen::VectorXd& t) {
  check_order(p, 2.0);
  check_direction(cache, t);
  const Projection proj = project(cache, t);
  if (proj.scale == 0.0) throw InvalidArgument("the M_p norm is not differentiable at t = 0");
  const Eigen::Index N = proj.y.size();
  // Work at u = t/|t|: the gradient of a norm is 0-homogeneous.
  const double top = proj.y.cwiseAbs().maxCoeff();
  if (top == 0.0) throw InvalidArgument("<t,X> vanishes on the whole sample");
  Eigen::VectorXd w(N);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < N; ++j) {
    const double r = std::abs(proj.y(j)) / top;
    const double rp1 = abs_pow(r, p - 1.0);
    acc += rp1 * r;
    w(j) = proj.y(j) < 0.0 ? -rp1 : rp1;
  }
  // grad = F^{1/p - 1} * mean(|y|^{p-1} sign(y) x); the powers of `top` cancel.
  const Eigen::VectorXd s = cache.data().transpose() * w;
  return s * (std::pow(acc / static_cast<double>(N), 1.0 / p) / acc);
}

// ---- exact even-order norms -------------------------------------------------

EvenMomentPolynomial::EvenMomentPolynomial(const DistributionSpec& spec, int k, std::uint64_t max_terms)
    : n_(spec.dim()), k_(k) {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (!spec.flags().is_unconditional || !spec.flags().has_exact_mixed_moments) {
    throw NoExactOracle("exact even-order norms need an unconditional law with exact mixed moments; " +
                        spec.describe() + " does not qualify, use mp_norm_mc");
  }
  const BigInt count = multiindex_count(n_, k);
  if (cmp(count, BigInt(static_cast<unsigned long>(max_terms))) > 0) {
    throw ResourceGuard("exact even-order expansion needs " + count.get_str() + " terms");
  }
  for (MultiindexStream stream(n_, k); !stream.done(); stream.advance()) {
    const Multiindex& alpha = stream.current();
    const double moment = mixed_even_moment(spec, alpha);
    if (moment == 0.0) continue;
    coeff_.push_back(multinomial_doubled(alpha).get_d() * moment);
    alpha_.insert(alpha_.end(), alpha.entries().begin(), alpha.entries().end());
  }
}

double EvenMomentPolynomial::value(const Eigen::VectorXd& t) const {
  return derivatives(t, nullptr, nullptr);
}

double EvenMomentPolynomial::derivatives(const Eigen::VectorXd& t, Eigen::VectorXd* grad,
                                         Eigen::MatrixXd* hess) const {
  if (t.size() != n_) throw InvalidArgument("vector length does not match the dimension");
  const int top = 2 * k_;
  // pw(i, e) = t_i^e
  Eigen::MatrixXd pw(n_, top + 1);
  for (int i = 0; i < n_; ++i) {
    pw(i, 0) = 1.0;
    for (int e = 1; e <= top; ++e) pw(i, e) = pw(i, e - 1) * t(i);
  }
  if (grad) grad->setZero(n_);
  if (hess) hess->setZero(n_, n_);
  double total = 0.0;
  std::vector<int> support;
  support.reserve(static_cast<std::size_t>(n_));
  for (std::size_t j = 0; j < coeff_.size(); ++j) {
    const auto alpha = exponents(j);
    support.clear();
    double mono = coeff_[j];
    for (int i = 0; i < n_; ++i) {
      const int a = alpha[static_cast<std::size_t>(i)];
      if (a == 0) continue;
      support.push_back(i);
      mono *= pw(i, 2 * a);
    }
    total += mono;
    if (!grad && !hess) continue;
    // Derivatives of c * prod_i t_i^{e_i}; evaluated without dividing by t_i.
    for (int i : support) {
      const int e = 2 * alpha[static_cast<std::size_t>(i)];
      double rest = coeff_[j];
      for (int l : support) {
        if (l != i) rest *= pw(l, 2 * alpha[static_cast<std::size_t>(l)]);
      }
      if (grad) (*grad)(i) += e * pw(i, e - 1) * rest;
      if (hess) {
        (*hess)(i, i) += e * (e - 1) * pw(i, e - 2) * rest;
        for (int l : support) {
          if (l <= i) continue;
          const int f = 2 * alpha[static_cast<std::size_t>(l)];
          double cross = coeff_[j] * e * pw(i, e - 1) * f * pw(l, f - 1);
          for (int m : support) {
            if (m != i && m != l) cross *= pw(m, 2 * alpha[static_cast<std::size_t>(m)]);
          }
          (*hess)(i, l) += cross;
          (*hess)(l, i) += cross;
        }
      }
    }
  }
  return total;
}

NormEstimate mp_norm_exact_even(const DistributionSpec& spec, int k, const Eigen::VectorXd& t) {
  if (t.size() != spec.dim()) throw InvalidArgument("vector length does not match the dimension");
  const EvenMomentPolynomial poly(spec, k);
  const double scale = t.norm();
  if (scale == 0.0) return NormEstimate::exact(0.0, Method::exact_even);
  const double m = poly.value(t / scale);
  return NormEstimate::exact(scale * std::pow(m, 1.0 / (2.0 * k)), Method::exact_even);
}

// ---- Rademacher sums -------------------------------------------------------

namespace {

// All 2^m signed sums of v, indexed by the sign bit pattern.
std::vector<double> signed_sums(std::span<const double> v) {
  std::vector<double> sums(std::size_t{1} << v.size(), 0.0);
  for (std::size_t mask = 0; mask < sums.size(); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += (mask >> i & 1u) ? -v[i] : v[i];
    sums[mask] = s;
  }
  return sums;
}

}  // namespace

NormEstimate rademacher_norm_exact(const Eigen::VectorXd& a, double p) {
  check_order(p, 1.0);
  const auto n = static_cast<int>(a.size());
  if (n > kRademacherMaxDim) {
    throw ResourceGuard("rademacher_norm_exact enumerates 2^n sign patterns; n = " + std::to_string(n) +
                        " exceeds " + std::to_string(kRademacherMaxDim));
  }
  if (n == 0 || a.cwiseAbs().maxCoeff() == 0.0) return NormEstimate::exact(0.0, Method::brute_force);
  const double scale = a.cwiseAbs().maxCoeff();
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a(i) / scale;
  // Symmetry fixes eps_1 = +1; the remaining n-1 signs are split in two halves.
  const std::span<const double> rest(v.data() + 1, v.size() - 1);
  const std::size_t h = rest.size() / 2;
  const auto left = signed_sums(rest.subspan(0, h));
  const auto right = signed_sums(rest.subspan(h));
  const bool log_domain = p > kLogDomainOrder;
  double acc = 0.0;
  double log_top = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  if (log_domain) logs.reserve(left.size() * right.size());
  for (double l : left) {
    const double base = v[0] + l;
    for (double r : right) {
      const double s = std::abs(base + r);
      if (log_domain) {
        logs.push_back(p * std::log(s));
        log_top = std::max(log_top, logs.back());
      } else {
        acc += abs_pow(s, p);
      }
    }
  }
  const double count = static_cast<double>(left.size() * right.size());
  const double value = log_domain ? std::exp(log_mean_exp(logs) / p) : std::pow(acc / count, 1.0 / p);
  return NormEstimate::exact(scale * value, Method::brute_force);
}

double hitczenko_surrogate(const Eigen::VectorXd& a, double p) {
  check_order(p, 1.0);
  std::vector<double> s(static_cast<std::size_t>(a.size()));
  for (Eigen::Index i = 0; i < a.size(); ++i) s[static_cast<std::size_t>(i)] = std::abs(a(i));
  std::sort(s.begin(), s.end(), std::greater<>());
  const auto head = std::min(s.size(), static_cast<std::size_t>(std::floor(p)));
  double head_sum = 0.0;
  for (std::size_t i = 0; i < head; ++i) head_sum += s[i];
  double tail = 0.0;
  for (std::size_t i = head; i < s.size(); ++i) tail += s[i] * s[i];
  return head_sum + std::sqrt(p) * std::sqrt(tail);
}

double moment_growth_ratio(const SampleCache& cache, const Eigen::VectorXd& t, double p, double q) {
  check_order(q, 1.0);
  if (p < q) throw InvalidArgument("moment_growth_ratio expects p >= q");
  const double denom = mp_norm_value(cache, q, t);
  if (denom == 0.0) throw InvalidArgument("<t,X> vanishes identically on the sample");
  if (p == q) return 1.0;
  return mp_norm_value(cache, p, t) / denom;
}

}  // namespace centroidkit
