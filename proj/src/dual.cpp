#include "centroidkit/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "centroidkit/combi.hpp"
#include "centroidkit/error.hpp"
#include "centroidkit/parallel.hpp"
#include "centroidkit/rng.hpp"
#include "centroidkit/stats.hpp"

namespace centroidkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_dual_order(double p) {
  if (!(p >= 2.0) || !std::isfinite(p)) throw InvalidArgument("dual norms need a finite p >= 2");
}

bool even_order(double p, int& k) {
  if (p < 2.0 || p != std::floor(p) || std::fmod(p, 2.0) != 0.0 || p > 1000.0) return false;
  k = static_cast<int>(p / 2.0);
  return true;
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

const char* to_string(StepRule rule) { return rule == StepRule::fixed ? "fixed" : "backtracking"; }

void validate(const DualSolveOptions& opts) {
  if (opts.starts < 1) throw InvalidArgument("starts must be at least 1");
  if (opts.max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (!(opts.tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (opts.sample_budget < 1) throw InvalidArgument("sample_budget must be at least 1");
  if (opts.resamples < 0) throw InvalidArgument("resamples must be nonnegative");
}

double MpObjective::norm(const Eigen::VectorXd& t) const {
  if (t.isZero(0.0)) return 0.0;
  return std::exp(log_value(t) / order());
}

// ---- objectives ------------------------------------------------------------

SampleObjective::SampleObjective(SampleCache cache, double p, std::int64_t rows)
    : cache_(std::move(cache)), p_(p), rows_(rows <= 0 ? cache_.count() : std::min(rows, cache_.count())) {
  check_dual_order(p);
  const auto X = cache_.data().topRows(rows_);
  second_moment_.setZero(cache_.dim(), cache_.dim());
  second_moment_.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  second_moment_.triangularView<Eigen::StrictlyUpper>() = second_moment_.transpose();
  second_moment_ /= static_cast<double>(rows_);
}

double SampleObjective::evaluate(const Eigen::VectorXd& t, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
  if (p_ == 2.0) {
    const Eigen::VectorXd ct = second_moment_ * t;
    const double f = t.dot(ct);
    if (!(f > 0.0)) throw InvalidArgument("<t,X> vanishes on the whole sample");
    if (grad) *grad = (2.0 / f) * ct;
    if (hess) *hess = (2.0 / f) * second_moment_;
    return std::log(f);
  }
  const auto X = cache_.data().topRows(rows_);
  const Eigen::VectorXd y = X * t;
  const double top = y.cwiseAbs().maxCoeff();
  if (!(top > 0.0)) throw InvalidArgument("<t,X> vanishes on the whole sample");
  const Eigen::Index N = y.size();
  const int n = cache_.dim();
  // r_j = |y_j| / top, w2 = r^{p-2}, w1 = sign(y) r^{p-1}
  Eigen::VectorXd w2 = y / top;
  if (!grad && !hess) {
    abs_pow_inplace({w2.data(), static_cast<std::size_t>(N)}, p_);
    return p_ * std::log(top) + std::log(w2.sum() / static_cast<double>(N));
  }
  abs_pow_inplace({w2.data(), static_cast<std::size_t>(N)}, p_ - 2.0);
  const Eigen::VectorXd w1 = w2.cwiseProduct(y) / top;
  const double acc = w1.dot(y) / top;
  if (grad) *grad = (p_ / (top * acc)) * (X.transpose() * w1);
  if (hess) {
    // Blocked X^T diag(w2) X.
    constexpr Eigen::Index kBlock = 512;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    RowMatrix weighted(std::min(kBlock, N), n);
    for (Eigen::Index lo = 0; lo < N; lo += kBlock) {
      const Eigen::Index len = std::min(kBlock, N - lo);
      const auto rows = X.middleRows(lo, len);
      weighted.topRows(len) = w2.segment(lo, len).asDiagonal() * rows;
      h.noalias() += rows.transpose() * weighted.topRows(len);
    }
    *hess = (p_ * (p_ - 1.0) / (top * top * acc)) * h;
  }
  return p_ * std::log(top) + std::log(acc / static_cast<double>(N));
}

namespace {

// Truncated product of polynomials in w, degree <= k.
void poly_mul(const double* a, const double* b, double* out, int k) {
  for (int d = 0; d <= k; ++d) {
    double acc = 0.0;
    for (int j = 0; j <= d; ++j) acc += a[j] * b[d - j];
    out[d] = acc;
  }
}

// Coefficient of w^k in a * b.
double top_coeff(const double* a, const double* b, int k) {
  double acc = 0.0;
  for (int j = 0; j <= k; ++j) acc += a[j] * b[k - j];
  return acc;
}

// prefix.row(i) = prod_{l < i} factor(l), suffix.row(i) = prod_{l > i} factor(l).
void prefix_suffix(const Eigen::MatrixXd& factors, Eigen::MatrixXd& prefix, Eigen::MatrixXd& suffix) {
  const auto m = factors.rows();
  const int k = static_cast<int>(factors.cols()) - 1;
  prefix.setZero(m, k + 1);
  suffix.setZero(m, k + 1);
  prefix(0, 0) = 1.0;
  suffix(m - 1, 0) = 1.0;
  Eigen::RowVectorXd tmp(k + 1);
  for (Eigen::Index i = 1; i < m; ++i) {
    const Eigen::RowVectorXd prev = prefix.row(i - 1);
    const Eigen::RowVectorXd f = factors.row(i - 1);
    poly_mul(prev.data(), f.data(), tmp.data(), k);
    prefix.row(i) = tmp;
  }
  for (Eigen::Index i = m - 2; i >= 0; --i) {
    const Eigen::RowVectorXd next = suffix.row(i + 1);
    const Eigen::RowVectorXd f = factors.row(i + 1);
    poly_mul(next.data(), f.data(), tmp.data(), k);
    suffix.row(i) = tmp;
  }
}

bool is_product_family(Family f) {
  return f == Family::GaussianIsotropic || f == Family::ExponentialProduct || f == Family::RademacherProduct ||
         f == Family::UniformCube || f == Family::UnconditionalProduct;
}

}  // namespace

ExactEvenObjective::ExactEvenObjective(const DistributionSpec& spec, int k) : n_(spec.dim()), k_(k) {
  if (k < 1 || k > kMaxExactHalfOrder) {
    throw NoExactOracle("exact even objective needs 1 <= k <= " + std::to_string(kMaxExactHalfOrder));
  }
  const DistributionSpec* base = &spec;
  if (spec.family() == Family::LinearImage) {
    map_ = spec.matrix();
    base = &spec.base();
  }
  const int m = base->dim();
  const Family f = base->family();
  auto moment = [&](int i, int j) {
    std::vector<int> alpha(static_cast<std::size_t>(m), 0);
    alpha[static_cast<std::size_t>(i)] = j;
    return mixed_even_moment(*base, Multiindex(std::move(alpha)));
  };
  if (is_product_family(f)) {
    shape_ = Shape::product;
    coeff_.resize(m, k + 1);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= k; ++j) coeff_(i, j) = std::exp(std::log(moment(i, j)) - std::lgamma(2.0 * j + 1.0));
    }
    log_scale_ = std::lgamma(2.0 * k + 1.0);
  } else if (f == Family::UniformSphere) {
    shape_ = Shape::radial;
    coeff_.resize(1, 1);
    coeff_(0, 0) = moment(0, k);
  } else if (f == Family::SparseIsotropic) {
    shape_ = Shape::sparse;
    coeff_.resize(m, 1);
    for (int i = 0; i < m; ++i) coeff_(i, 0) = moment(i, k);
  } else {
    throw NoExactOracle("no exact even objective for " + spec.describe());
  }
  if (!coeff_.allFinite()) throw NoExactOracle("even moments of " + spec.describe() + " leave double range");
}

double ExactEvenObjective::unit_value(const Eigen::VectorXd& u, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
  const auto m = u.size();
  const int k = k_;
  if (shape_ == Shape::radial) {
    // F = C |u|^{2k} near the unit sphere.
    const double c = coeff_(0, 0);
    if (grad) *grad = 2.0 * k * c * u;
    if (hess) {
      *hess = Eigen::MatrixXd::Identity(m, m) + (2.0 * k - 2.0) * u * u.transpose();
      *hess *= 2.0 * k * c;
    }
    return c;
  }
  if (shape_ == Shape::sparse) {
    double total = 0.0;
    if (grad) grad->setZero(m);
    if (hess) hess->setZero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double c = coeff_(i, 0);
      const double lower = std::pow(u(i), 2 * k - 2);
      total += c * lower * u(i) * u(i);
      if (grad) (*grad)(i) = 2.0 * k * c * lower * u(i);
      if (hess) (*hess)(i, i) = 2.0 * k * (2.0 * k - 1.0) * c * lower;
    }
    return total;
  }
  // Factor i is sum_j c_ij u_i^{2j} w^j; d1 and d2 are its u_i-derivatives.
  Eigen::MatrixXd a(m, k + 1), d1(m, k + 1), d2(m, k + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = u(i);
    double pw = 1.0;  // x^{2j}
    for (int j = 0; j <= k; ++j) {
      const double c = coeff_(i, j);
      a(i, j) = c * pw;
      d1(i, j) = j == 0 ? 0.0 : c * 2.0 * j * std::pow(x, 2 * j - 1);
      d2(i, j) = j == 0 ? 0.0 : c * 2.0 * j * (2.0 * j - 1.0) * std::pow(x, 2 * j - 2);
      pw *= x * x;
    }
  }
  Eigen::MatrixXd prefix, suffix;
  prefix_suffix(a, prefix, suffix);
  Eigen::RowVectorXd others(k + 1);
  auto excluded = [&](Eigen::Index i) {
    const Eigen::RowVectorXd pre = prefix.row(i), suf = suffix.row(i);
    poly_mul(pre.data(), suf.data(), others.data(), k);
  };
  excluded(0);
  const Eigen::RowVectorXd a0 = a.row(0);
  const double total = top_coeff(a0.data(), others.data(), k);
  if (!grad && !hess) return total;
  if (grad) grad->setZero(m);
  if (hess) hess->setZero(m, m);
  Eigen::MatrixXd b, bpre, bsuf;
  Eigen::RowVectorXd tmp(k + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    excluded(i);
    const Eigen::RowVectorXd g1 = d1.row(i), g2 = d2.row(i);
    if (grad) (*grad)(i) = top_coeff(g1.data(), others.data(), k);
    if (!hess) continue;
    (*hess)(i, i) = top_coeff(g2.data(), others.data(), k);
    if (i + 1 == m) continue;
    // Off-diagonal: factor i replaced by its derivative, then the same
    // replace-one product over l > i.
    b = a;
    b.row(i) = d1.row(i);
    prefix_suffix(b, bpre, bsuf);
    for (Eigen::Index l = i + 1; l < m; ++l) {
      const Eigen::RowVectorXd pre = bpre.row(l), suf = bsuf.row(l), dl = d1.row(l);
      poly_mul(pre.data(), suf.data(), tmp.data(), k);
      const double h = top_coeff(dl.data(), tmp.data(), k);
      (*hess)(i, l) = h;
      (*hess)(l, i) = h;
    }
  }
  return total;
}

double ExactEvenObjective::evaluate(const Eigen::VectorXd& t, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
  if (t.size() != n_) throw InvalidArgument("vector length does not match the dimension");
  const Eigen::VectorXd u = map_.size() == 0 ? t : Eigen::VectorXd(map_.transpose() * t);
  const double len = u.norm();
  if (!(len > 0.0)) throw InvalidArgument("<t,X> vanishes almost surely");
  const Eigen::VectorXd unit = u / len;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  const double f = unit_value(unit, grad ? &g : nullptr, hess ? &h : nullptr);
  if (!(f > 0.0)) throw InvalidArgument("<t,X> vanishes almost surely");
  // F is 2k-homogeneous: grad F / F scales by 1/|u| and Hess F / F by 1/|u|^2.
  if (grad) {
    g /= f * len;
    *grad = map_.size() == 0 ? g : Eigen::VectorXd(map_ * g);
  }
  if (hess) {
    h /= f * len * len;
    *hess = map_.size() == 0 ? h : Eigen::MatrixXd(map_ * h * map_.transpose());
  }
  return 2.0 * k_ * std::log(len) + std::log(f) + log_scale_;
}

bool has_exact_objective(const DistributionSpec& spec, double p) {
  int k = 0;
  if (!even_order(p, k) || k > kMaxExactHalfOrder) return false;
  try {
    ExactEvenObjective f(spec, k);
    return true;
  } catch (const NoExactOracle&) {
    return false;
  }
}

namespace {

/// theta F + (1 - theta) (|t|/r)^p, for the Euclidean-capped support function.
class CappedObjective final : public MpObjective {
 public:
  CappedObjective(const MpObjective& base, double theta, double radius)
      : base_(base), log_theta_(theta > 0.0 ? std::log(theta) : kNegInf),
        log_rest_(theta < 1.0 ? std::log1p(-theta) : kNegInf), radius_(radius) {}

  int dim() const override { return base_.dim(); }
  double order() const override { return base_.order(); }

  double evaluate(const Eigen::VectorXd& t, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const override {
    const double p = order();
    Eigen::VectorXd ga;
    Eigen::MatrixXd ha;
    const double la = log_theta_ == kNegInf ? kNegInf
                                             : log_theta_ + base_.evaluate(t, grad ? &ga : nullptr, hess ? &ha : nullptr);
    const double t2 = t.squaredNorm();
    const double lb = log_rest_ == kNegInf ? kNegInf : log_rest_ + 0.5 * p * std::log(t2 / (radius_ * radius_));
    const double lg = log_add(la, lb);
    const double wa = la == kNegInf ? 0.0 : std::exp(la - lg);
    const double wb = lb == kNegInf ? 0.0 : std::exp(lb - lg);
    if (grad) {
      grad->setZero(t.size());
      if (wa > 0.0) *grad += wa * ga;
      if (wb > 0.0) *grad += (wb * p / t2) * t;
    }
    if (hess) {
      hess->setZero(t.size(), t.size());
      if (wa > 0.0) *hess += wa * ha;
      if (wb > 0.0) {
        hess->diagonal().array() += wb * p / t2;
        *hess += (wb * p * (p - 2.0) / (t2 * t2)) * (t * t.transpose());
      }
    }
    return lg;
  }

 private:
  const MpObjective& base_;
  double log_theta_;
  double log_rest_;
  double radius_;
};

}  // namespace

// ---- hyperplane solver -----------------------------------------------------

double HyperplaneSolution::value(double p) const { return std::exp(-log_f / p); }

HyperplaneSolution minimize_on_hyperplane(const MpObjective& f, const Eigen::VectorXd& s, const Eigen::VectorXd& t0,
                                          const DualSolveOptions& opts) {
  const double sd = t0.dot(s);
  if (sd == 0.0 || !std::isfinite(sd)) throw InvalidArgument("start direction is orthogonal to s");
  HyperplaneSolution sol;
  sol.t = t0 / sd;
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  const int n = f.dim();
  double log_f = f.evaluate(sol.t, &g, &H);
  for (int it = 0; it < opts.max_iters; ++it) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    double ridge = 0.0;
    while (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
           ldlt.vectorD().minCoeff() <= 1e-300) {
      ridge = ridge == 0.0 ? 1e-12 * std::max(H.trace() / n, 1e-300) : ridge * 100.0;
      Eigen::MatrixXd Hr = H;
      Hr.diagonal().array() += ridge;
      ldlt.compute(Hr);
      if (ridge > 1e300) throw Error("hyperplane solver: Hessian cannot be regularized");
    }
    const Eigen::VectorXd a = ldlt.solve(g);
    const Eigen::VectorXd b = ldlt.solve(s);
    const Eigen::VectorXd step = -(a - (s.dot(a) / s.dot(b)) * b);
    const double slope = g.dot(step);  // directional derivative of log F, <= 0
    if (!(slope < 0.0) || -slope * 0.5 < opts.tolerance) {
      sol.converged = true;
      break;
    }
    // The full step is usually accepted, so derivatives are evaluated with it.
    Eigen::VectorXd next = sol.t + step;
    Eigen::VectorXd g_next;
    Eigen::MatrixXd h_next;
    double next_log = f.evaluate(next, &g_next, &h_next);
    if (opts.step_rule == StepRule::backtracking && !(next_log <= log_f + 0.25 * slope)) {
      double alpha = 1.0;
      do {
        alpha *= 0.5;
        next = sol.t + alpha * step;
        next_log = f.log_value(next);
      } while (!(next_log <= log_f + 0.25 * alpha * slope) && alpha >= 1e-14);
      if (alpha < 1e-14) {
        // No representable decrease along the Newton direction: the iterate is
        // optimal to working precision.
        sol.converged = true;
        break;
      }
      next_log = f.evaluate(next, &g_next, &h_next);
    } else if (!std::isfinite(next_log)) {
      break;
    }
    sol.t = std::move(next);
    g = std::move(g_next);
    H = std::move(h_next);
    log_f = next_log;
    ++sol.iterations;
  }
  // Undo rounding drift off the hyperplane; F is p-homogeneous.
  const double drift = sol.t.dot(s);
  sol.t /= drift;
  log_f -= f.order() * std::log(drift);
  sol.log_f = log_f;
  return sol;
}

// ---- dual norm ---------------------------------------------------------------

namespace {

std::vector<Eigen::VectorXd> start_directions(const Eigen::VectorXd& s, const DualSolveOptions& opts) {
  const Eigen::Index n = s.size();
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(s / s.norm());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(s(a)) > std::abs(s(b)); });
  for (std::size_t j = 0; j < std::min<std::size_t>(4, order.size()); ++j) {
    if (static_cast<int>(starts.size()) >= opts.starts) break;
    const Eigen::Index i = order[j];
    if (s(i) == 0.0) break;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = s(i) > 0.0 ? 1.0 : -1.0;
    starts.push_back(std::move(e));
  }
  const std::uint64_t seed = derive_seed(opts.seed, StreamTag::starts);
  for (std::uint64_t r = 0; static_cast<int>(starts.size()) < opts.starts; ++r) {
    Philox rng(seed, r);
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = rng.normal();
    starts.push_back(d / d.norm());
  }
  return starts;
}

void check_vector(const MpObjective& f, const Eigen::VectorXd& s) {
  if (s.size() != f.dim()) throw InvalidArgument("vector length does not match the dimension");
  if (!s.allFinite()) throw InvalidArgument("vector has non-finite entries");
}

}  // namespace

NormEstimate zp_norm(const MpObjective& f, const Eigen::VectorXd& s, const DualSolveOptions& opts,
                     DualSolveInfo* info) {
  validate(opts);
  check_dual_order(f.order());
  check_vector(f, s);
  const double p = f.order();
  if (s.isZero(0.0)) {
    if (info) *info = DualSolveInfo{};
    return NormEstimate::exact(0.0, Method::monte_carlo);
  }
  const auto starts = start_directions(s, opts);
  DualSolveInfo local;
  std::vector<HyperplaneSolution> sols(starts.size());
  local.start_values.assign(starts.size(), kNaN);
  const double snorm = s.norm();
  for (std::size_t j = 0; j < starts.size(); ++j) {
    if (std::abs(starts[j].dot(s)) <= 1e-12 * snorm) continue;
    sols[j] = minimize_on_hyperplane(f, s, starts[j], opts);
    local.start_values[j] = sols[j].value(p);
    local.total_iterations += sols[j].iterations;
  }
  double best = -1.0;
  for (double v : local.start_values) {
    if (std::isfinite(v)) best = std::max(best, v);
  }
  for (std::size_t j = 0; j < starts.size(); ++j) {
    if (std::isfinite(local.start_values[j]) && local.start_values[j] >= best * (1.0 - 1e-9)) {
      local.best_start = static_cast<int>(j);
      break;
    }
  }
  const HyperplaneSolution& sol = sols[static_cast<std::size_t>(local.best_start)];
  local.converged = sol.converged;
  const double value = sol.value(p);
  NormEstimate e = NormEstimate::exact(value, Method::monte_carlo);
  e.lower_bound_only = !sol.converged;
  // t/||t|| is feasible and <t,s>/||t|| = value.
  e.lower_witness = LowerWitness{sol.t * value, value};
  if (info) *info = std::move(local);
  return e;
}

NormEstimate zp_norm(const SampleCache& cache, double p, const Eigen::VectorXd& s, const DualSolveOptions& opts,
                     DualSolveInfo* info) {
  check_dual_order(p);
  const SampleObjective f(cache, p);
  NormEstimate e = zp_norm(f, s, opts, info);
  e.method = Method::monte_carlo;
  if (e.value == 0.0 || opts.resamples == 0) return e;
  // Envelope argument: to first order the optimum moves like the objective
  // at the fixed optimizer, so resample the empirical moment there.
  const Eigen::VectorXd t = e.lower_witness->point;
  const Eigen::VectorXd y = cache.data() * t;
  std::vector<double> logs(static_cast<std::size_t>(y.size()));
  for (Eigen::Index j = 0; j < y.size(); ++j) logs[static_cast<std::size_t>(j)] = p * std::log(std::abs(y(j)));
  const auto boot =
      bootstrap_log_mean_exp(logs, derive_seed(cache.seed(), StreamTag::bootstrap), opts.resamples, opts.jobs);
  // value = <t,s> / ||t|| with ||t|| = exp(log F / p)
  const double scale = t.dot(s);
  e.ci_low = std::min(e.value, scale * std::exp(-boot.high / p));
  e.ci_high = std::max(e.value, scale * std::exp(-boot.low / p));
  e.std_error = e.value * boot.std_error / p;
  return e;
}

NormEstimate zp_norm(const DistributionSpec& spec, double p, const Eigen::VectorXd& s, const DualSolveOptions& opts,
                     DualSolveInfo* info) {
  validate(opts);
  check_dual_order(p);
  if (s.size() != spec.dim()) throw InvalidArgument("vector length does not match the dimension");
  int k = 0;
  const bool exact = has_exact_objective(spec, p);
  NormEstimate e;
  if (exact && opts.prefer_exact) {
    const ExactEvenObjective f(spec, static_cast<int>(p / 2.0));
    e = zp_norm(f, s, opts, info);
    e.method = Method::exact_even;
  } else {
    const auto cache = sample(spec, opts.sample_budget, derive_seed(opts.seed, StreamTag::saa), opts.jobs);
    e = zp_norm(cache, p, s, opts, info);
    if (exact && e.lower_witness) {
      // Re-evaluate the SAA witness under the exact norm: a certified lower bound.
      const ExactEvenObjective f(spec, static_cast<int>(p / 2.0));
      const Eigen::VectorXd& t = e.lower_witness->point;
      e.lower_witness->value = t.dot(s) / f.norm(t);
    }
  }
  if (even_order(p, k) && e.value > 0.0) {
    if (const auto upper = cauchy_schwarz_upper(spec, k, s)) {
      e.upper_bound = UpperBound{*upper, "cauchy_schwarz_even_moments"};
    }
  }
  return e;
}

std::optional<double> cauchy_schwarz_upper(const DistributionSpec& spec, int k, const Eigen::VectorXd& s,
                                           std::uint64_t max_terms) {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (s.size() != spec.dim()) throw InvalidArgument("vector length does not match the dimension");
  if (!spec.flags().is_unconditional || !spec.flags().has_exact_mixed_moments) return std::nullopt;
  const int n = spec.dim();
  if (cmp(multiindex_count(n, k), BigInt(static_cast<unsigned long>(max_terms))) > 0) return std::nullopt;
  const double scale = s.norm();
  if (scale == 0.0) return 0.0;
  const Eigen::VectorXd u = s / scale;
  // C(k,alpha)^2 / C(2k,2alpha) = C(2k,k)^{-1} prod_i C(2alpha_i, alpha_i)
  std::vector<double> central(static_cast<std::size_t>(k) + 1);
  for (int a = 0; a <= k; ++a) central[static_cast<std::size_t>(a)] = binomial(2u * a, a).get_d();
  const double inv_central_k = 1.0 / central[static_cast<std::size_t>(k)];
  Eigen::MatrixXd pw(n, k + 1);
  for (int i = 0; i < n; ++i) {
    pw(i, 0) = 1.0;
    for (int a = 1; a <= k; ++a) pw(i, a) = pw(i, a - 1) * u(i) * u(i);
  }
  double total = 0.0;
  for (MultiindexStream stream(n, k); !stream.done(); stream.advance()) {
    const Multiindex& alpha = stream.current();
    double num = inv_central_k;
    for (int i = 0; i < n; ++i) {
      if (alpha[i] == 0) continue;
      num *= central[static_cast<std::size_t>(alpha[i])] * pw(i, alpha[i]);
    }
    if (num == 0.0) continue;
    const double moment = mixed_even_moment(spec, alpha);
    if (moment == 0.0) return std::nullopt;
    total += num / moment;
  }
  return scale * std::pow(total, 1.0 / (2.0 * k));
}

// ---- outer moments -----------------------------------------------------------

namespace {

constexpr std::int64_t kOuterBlock = 64;

}  // namespace

NormEstimate outer_moment(const std::vector<double>& values, double q, std::uint64_t seed, int resamples, int jobs) {
  if (values.empty()) throw InvalidArgument("outer_moment of an empty sample");
  if (!(q > 0.0) || !std::isfinite(q)) throw InvalidArgument("q must be positive and finite");
  std::vector<double> logs(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) logs[j] = q * std::log(values[j]);
  const auto boot = bootstrap_log_mean_exp(logs, seed, resamples, jobs);
  NormEstimate e;
  e.method = Method::monte_carlo;
  e.value = std::exp(boot.estimate / q);
  e.ci_low = std::min(e.value, std::exp(boot.low / q));
  e.ci_high = std::max(e.value, std::exp(boot.high / q));
  e.std_error = e.value * boot.std_error / q;
  return e;
}

ZpMomentReport zp_moment(const DistributionSpec& spec, double p, double q, std::int64_t outer,
                         const DualSolveOptions& opts, std::uint64_t seed, bool warm_start) {
  validate(opts);
  check_dual_order(p);
  if (!(q >= 1.0) || !std::isfinite(q)) throw InvalidArgument("q must be finite and at least 1");
  if (outer < 100) throw InvalidArgument("zp_moment needs at least 100 outer samples");

  ZpMomentReport rep;
  rep.distribution = spec.describe();
  rep.n = spec.dim();
  rep.p = p;
  rep.q = q;
  rep.outer_samples = outer;
  rep.seed = seed;
  rep.warm_start = warm_start;

  const int n = spec.dim();
  const bool exact = has_exact_objective(spec, p);
  std::unique_ptr<MpObjective> objective;
  std::unique_ptr<MpObjective> exact_objective;
  Eigen::MatrixXd second;
  if (exact) exact_objective = std::make_unique<ExactEvenObjective>(spec, static_cast<int>(p / 2.0));
  if (exact && opts.prefer_exact) {
    rep.norm_method = Method::exact_even;
    second = covariance(spec);
  } else {
    rep.norm_method = Method::monte_carlo;
    rep.saa_samples = opts.sample_budget;
    auto cache = sample(spec, opts.sample_budget, derive_seed(seed, StreamTag::saa), opts.jobs);
    auto f = std::make_unique<SampleObjective>(std::move(cache), p);
    second = f->second_moment();
    objective = std::move(f);
  }
  const MpObjective& f = objective ? *objective : *exact_objective;
  const Eigen::LDLT<Eigen::MatrixXd> second_ldlt(second);
  int k = 0;
  const bool certificate = even_order(p, k) && spec.flags().is_unconditional &&
                           spec.flags().has_exact_mixed_moments &&
                           cmp(multiindex_count(n, k), BigInt(static_cast<unsigned long>(kCertificateTerms))) <= 0;

  const SampleCache xs = sample(spec, outer, derive_seed(seed, StreamTag::outer), opts.jobs);
  rep.values.assign(static_cast<std::size_t>(outer), 0.0);
  rep.iterations.assign(static_cast<std::size_t>(outer), 0);
  std::vector<double> witness(static_cast<std::size_t>(outer), 0.0);
  std::vector<double> gaps(static_cast<std::size_t>(outer), kNaN);
  std::vector<char> capped(static_cast<std::size_t>(outer), 0);

  const auto blocks = static_cast<std::size_t>((outer + kOuterBlock - 1) / kOuterBlock);
  parallel_for(blocks, opts.jobs, [&](std::size_t b) {
    const std::int64_t lo = static_cast<std::int64_t>(b) * kOuterBlock;
    const std::int64_t hi = std::min(outer, lo + kOuterBlock);
    Eigen::VectorXd previous;
    for (std::int64_t j = lo; j < hi; ++j) {
      const auto idx = static_cast<std::size_t>(j);
      const Eigen::VectorXd x = xs.data().row(j).transpose();
      if (x.isZero(0.0)) {
        rep.values[idx] = witness[idx] = 0.0;
        continue;
      }
      // Warm starts: the p = 2 optimizer C^{-1} x, x itself and the previous optimum.
      std::vector<Eigen::VectorXd> candidates{x / x.norm()};
      if (warm_start) {
        candidates.push_back(second_ldlt.solve(x));
        if (previous.size() == n) candidates.push_back(previous);
      }
      Eigen::VectorXd start = candidates.front();
      double start_log = kNaN;
      for (const auto& c : candidates) {
        const double d = c.dot(x);
        if (!(std::abs(d) > 1e-12 * c.norm() * x.norm())) continue;
        const double lf = f.log_value(c / d);
        if (std::isnan(start_log) || lf < start_log) {
          start_log = lf;
          start = c;
        }
      }
      const HyperplaneSolution sol = minimize_on_hyperplane(f, x, start, opts);
      const double v = sol.value(p);
      rep.values[idx] = v;
      rep.iterations[idx] = sol.iterations;
      capped[idx] = !sol.converged;
      witness[idx] = exact_objective ? 1.0 / exact_objective->norm(sol.t) : v;
      if (certificate) {
        if (const auto upper = cauchy_schwarz_upper(spec, k, x)) gaps[idx] = *upper / v - 1.0;
      }
      previous = sol.t;
    }
  });

  rep.estimate = outer_moment(rep.values, q, derive_seed(seed, StreamTag::bootstrap, 0), opts.resamples, opts.jobs);
  rep.witness_estimate = outer_moment(witness, q, derive_seed(seed, StreamTag::bootstrap, 1), opts.resamples, opts.jobs);
  rep.ratio_to_conjecture = conjecture_ratio(rep);

  std::int64_t capped_count = 0;
  double iter_sum = 0.0;
  for (std::size_t j = 0; j < rep.iterations.size(); ++j) {
    capped_count += capped[j];
    iter_sum += rep.iterations[j];
    rep.max_iterations_used = std::max(rep.max_iterations_used, rep.iterations[j]);
  }
  rep.capped_fraction = static_cast<double>(capped_count) / static_cast<double>(outer);
  rep.mean_iterations = iter_sum / static_cast<double>(outer);
  rep.estimate.lower_bound_only = capped_count > 0;
  double gap_sum = 0.0;
  std::int64_t gap_count = 0;
  for (double g : gaps) {
    if (std::isfinite(g)) {
      gap_sum += g;
      ++gap_count;
    }
  }
  if (gap_count > 0) rep.mean_certificate_gap = gap_sum / static_cast<double>(gap_count);
  return rep;
}

double conjecture_ratio(const ZpMomentReport& report, ConjectureMode mode) {
  const double n = report.n;
  const double p = report.p;
  const double scale = mode == ConjectureMode::shifted ? std::sqrt((n + p) / p) : std::sqrt(n / p);
  return report.estimate.value / scale;
}

// ---- exponential example -----------------------------------------------------

namespace {

void require_exponential(const DistributionSpec& spec) {
  if (spec.family() != Family::ExponentialProduct) throw InvalidArgument("expects an ExponentialProduct law");
}

}  // namespace

std::vector<TailRow> exponential_witness_lower(const DistributionSpec& spec, double p, const std::vector<double>& t_grid,
                                               std::int64_t samples, std::uint64_t seed) {
  require_exponential(spec);
  check_dual_order(p);
  if (samples < 1) throw InvalidArgument("sample count must be at least 1");
  const double n = spec.dim();
  std::vector<std::int64_t> hits(t_grid.size(), 0);
  constexpr std::int64_t chunk = 1 << 16;
  for (std::int64_t first = 0; first < samples; first += chunk) {
    const std::int64_t count = std::min(chunk, samples - first);
    const RowMatrix block = sample_rows(spec, seed, first, count);
    for (std::int64_t r = 0; r < count; ++r) {
      const double w = 2.0 / p * std::abs(block(r, 0));
      for (std::size_t i = 0; i < t_grid.size(); ++i) hits[i] += w >= t_grid[i] * std::sqrt(n / p);
    }
  }
  std::vector<TailRow> rows;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const auto ci = wilson_interval(hits[i], samples);
    rows.push_back({t_grid[i], ci.estimate, ci.low, ci.high, std::exp(-t_grid[i] * std::sqrt(n * p) / std::sqrt(2.0))});
  }
  return rows;
}

WitnessMoment exponential_witness_moment(const DistributionSpec& spec, double p, double q, std::int64_t samples,
                                         std::uint64_t seed) {
  require_exponential(spec);
  check_dual_order(p);
  if (!(q >= 1.0)) throw InvalidArgument("q must be at least 1");
  WitnessMoment out;
  out.q = q;
  out.exact = 2.0 / p * std::pow(marginal_abs_moment(spec, 0, q), 1.0 / q);
  if (q == std::floor(q) && q <= 170.0) {
    double fact = 1.0;
    for (int j = 2; j <= static_cast<int>(q); ++j) fact *= j;
    out.analytic = 2.0 / p * std::pow(fact * std::pow(2.0, -q / 2.0), 1.0 / q);
  } else {
    out.analytic = 2.0 / p * std::exp((std::lgamma(q + 1.0) - q / 2.0 * std::log(2.0)) / q);
  }
  std::vector<double> logs(static_cast<std::size_t>(samples));
  constexpr std::int64_t chunk = 1 << 16;
  for (std::int64_t first = 0; first < samples; first += chunk) {
    const std::int64_t count = std::min(chunk, samples - first);
    const RowMatrix block = sample_rows(spec, seed, first, count);
    for (std::int64_t r = 0; r < count; ++r) {
      logs[static_cast<std::size_t>(first + r)] = q * std::log(2.0 / p * std::abs(block(r, 0)));
    }
  }
  const auto boot = bootstrap_log_mean_exp(logs, derive_seed(seed, StreamTag::bootstrap));
  out.empirical.method = Method::monte_carlo;
  out.empirical.value = std::exp(boot.estimate / q);
  out.empirical.ci_low = std::min(out.empirical.value, std::exp(boot.low / q));
  out.empirical.ci_high = std::max(out.empirical.value, std::exp(boot.high / q));
  out.empirical.std_error = out.empirical.value * boot.std_error / q;
  return out;
}

// ---- unconditional decomposition ------------------------------------------------

double capped_support(const MpObjective& f, const Eigen::VectorXd& s, double radius, const DualSolveOptions& opts) {
  check_vector(f, s);
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  const double p = f.order();
  const double snorm = s.norm();
  if (snorm == 0.0) return 0.0;
  DualSolveOptions one = opts;
  one.starts = 1;
  // Gauge of the intersection is max(||t||_M, |t|/r); minimize it on <t,s> = 1.
  const HyperplaneSolution ta = minimize_on_hyperplane(f, s, s, one);
  const double log_b_at_a = p * std::log(ta.t.norm() / radius);
  if (log_b_at_a <= ta.log_f) return ta.value(p);
  const Eigen::VectorXd tb = s / (snorm * snorm);
  if (f.log_value(tb) <= p * std::log(tb.norm() / radius)) return snorm * radius;
  // Both constraints active: maximize the concave dual function
  // phi(theta) = min_t theta F + (1 - theta) (|t|/r)^p by golden section.
  Eigen::VectorXd warm = ta.t;
  auto phi = [&](double theta) {
    const CappedObjective g(f, theta, radius);
    const HyperplaneSolution sol = minimize_on_hyperplane(g, s, warm, one);
    warm = sol.t;
    return sol.log_f;
  };
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 1.0;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = phi(c), fd = phi(d);
  while (b - a > 1e-9) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = phi(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = phi(c);
    }
  }
  const double best = std::max(fc, fd);
  return std::exp(-best / p);
}

DecompositionCheck unconditional_decomposition_check(const DistributionSpec& spec, double p, const Eigen::VectorXd& s,
                                                     const DualSolveOptions& opts) {
  validate(opts);
  check_dual_order(p);
  const int n = spec.dim();
  if (!spec.flags().is_unconditional) throw InvalidArgument("decomposition check needs an unconditional law");
  if (n > 12) throw InvalidArgument("decomposition check supports n <= 12");
  if (p > n) throw InvalidArgument("decomposition check needs p <= n");
  if (s.size() != n) throw InvalidArgument("vector length does not match the dimension");

  // Rescale so that E|X_i| = 1.
  Eigen::VectorXd first(n);
  if (spec.flags().has_exact_marginal_moments) {
    for (int i = 0; i < n; ++i) first(i) = marginal_abs_moment(spec, i, 1.0);
  } else {
    const auto cache = sample(spec, opts.sample_budget, derive_seed(opts.seed, "first_moments"), opts.jobs);
    first = cache.data().cwiseAbs().colwise().mean().transpose();
  }
  const DistributionSpec y = DistributionSpec::linear_image(first.cwiseInverse().asDiagonal().toDenseMatrix(), spec);

  std::unique_ptr<MpObjective> f;
  DecompositionCheck out;
  if (opts.prefer_exact && has_exact_objective(y, p)) {
    f = std::make_unique<ExactEvenObjective>(y, static_cast<int>(p / 2.0));
    out.method = Method::exact_even;
  } else {
    f = std::make_unique<SampleObjective>(
        sample(y, opts.sample_budget, derive_seed(opts.seed, StreamTag::saa), opts.jobs), p);
    out.method = Method::monte_carlo;
  }
  out.lhs = zp_norm(*f, s, opts).value;

  std::vector<int> support;
  for (int i = 0; i < n; ++i) {
    if (s(i) != 0.0) support.push_back(i);
  }
  const int m = std::min(static_cast<int>(std::floor(p)), static_cast<int>(support.size()));
  if (cmp(binomial(support.size(), static_cast<unsigned long>(m)), BigInt(static_cast<unsigned long>(kSupportGuard))) > 0) {
    throw ResourceGuard("too many supports to enumerate");
  }
  // Unconditional norms are monotone in |s_i|, so supports of maximal size suffice.
  DualSolveOptions one = opts;
  one.starts = 1;
  std::vector<int> pick(static_cast<std::size_t>(m));
  std::iota(pick.begin(), pick.end(), 0);
  const int total = static_cast<int>(support.size());
  while (true) {
    Eigen::VectorXd sub = Eigen::VectorXd::Zero(n);
    for (int j : pick) sub(support[static_cast<std::size_t>(j)]) = s(support[static_cast<std::size_t>(j)]);
    const double v = m == 0 ? 0.0 : zp_norm(*f, sub, one).value;
    if (v > out.term_sparse || out.best_support.empty()) {
      out.term_sparse = std::max(out.term_sparse, v);
      out.best_support.clear();
      for (int j : pick) out.best_support.push_back(support[static_cast<std::size_t>(j)]);
    }
    int i = m - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == total - m + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < m; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  out.term_euclid = capped_support(*f, s, 1.0 / std::sqrt(p), opts);
  out.implied_c1 = out.term_euclid > 0.0 ? (out.lhs - out.term_sparse) / out.term_euclid : 0.0;
  return out;
}

}  // namespace centroidkit
