#include "centroidkit/sudakov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "centroidkit/error.hpp"
#include "centroidkit/rng.hpp"
#include "centroidkit/stats.hpp"

namespace centroidkit {

const char* to_string(IndexSet::Kind kind) {
  switch (kind) {
    case IndexSet::Kind::finite: return "finite";
    case IndexSet::Kind::cube: return "cube";
    case IndexSet::Kind::ball: return "ball";
    case IndexSet::Kind::mp_ball: return "mp_ball";
  }
  return "?";
}

IndexSet IndexSet::finite(RowMatrix points) {
  if (points.rows() == 0) throw InvalidArgument("finite index set is empty");
  if (points.rows() > kFiniteSetLimit) throw ResourceGuard("finite index sets are limited to 10^6 vectors");
  IndexSet T(Kind::finite, static_cast<int>(points.cols()));
  T.points_ = std::move(points);
  return T;
}

IndexSet IndexSet::cube(int n, double r) {
  if (n < 1 || !(r > 0.0)) throw InvalidArgument("cube needs n >= 1 and r > 0");
  IndexSet T(Kind::cube, n);
  T.r_ = r;
  return T;
}

IndexSet IndexSet::ball(int n, double r) {
  if (n < 1 || !(r > 0.0)) throw InvalidArgument("ball needs n >= 1 and r > 0");
  IndexSet T(Kind::ball, n);
  T.r_ = r;
  return T;
}

IndexSet IndexSet::mp_ball(const DistributionSpec& spec, double p) {
  if (!(p >= 2.0)) throw InvalidArgument("mp_ball index sets need p >= 2");
  IndexSet T(Kind::mp_ball, spec.dim());
  T.p_ = p;
  T.spec_ = spec;
  return T;
}

IndexSet IndexSet::scaled(double lambda) const {
  if (!(lambda > 0.0)) throw InvalidArgument("scale must be positive");
  if (kind_ == Kind::mp_ball) throw InvalidArgument("mp_ball index sets cannot be rescaled");
  IndexSet T = *this;
  T.r_ *= lambda;
  if (kind_ == Kind::finite) T.points_ *= lambda;
  return T;
}

double IndexSet::diameter() const {
  switch (kind_) {
    case Kind::cube: return 2.0 * r_ * std::sqrt(static_cast<double>(n_));
    case Kind::ball: return 2.0 * r_;
    case Kind::finite: {
      if (points_.rows() <= 4096) {
        double best = 0.0;
        for (Eigen::Index i = 0; i < points_.rows(); ++i) {
          best = std::max(best, (points_.rowwise() - points_.row(i)).rowwise().norm().maxCoeff());
        }
        return best;
      }
      return 2.0 * points_.rowwise().norm().maxCoeff();
    }
    case Kind::mp_ball: return 2.0 * BodyOracle::mp_ball(*spec_, p_).circumradius();
  }
  return 0.0;
}

std::string IndexSet::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << "(n=" << n_;
  if (kind_ == Kind::cube || kind_ == Kind::ball) os << ", r=" << r_;
  if (kind_ == Kind::finite) os << ", size=" << points_.rows();
  if (kind_ == Kind::mp_ball) os << ", p=" << p_;
  os << ")";
  return os.str();
}

double sup_of_realization(const IndexSet& T, const Eigen::VectorXd& x) {
  if (x.size() != T.dim()) throw InvalidArgument("realization has the wrong length");
  switch (T.kind()) {
    case IndexSet::Kind::cube: return x.lpNorm<1>() * T.radius();
    case IndexSet::Kind::ball: return x.norm() * T.radius();
    case IndexSet::Kind::finite: return (T.points() * x).maxCoeff();
    case IndexSet::Kind::mp_ball: throw InvalidArgument("mp_ball suprema are dual norms; use sup_over_set");
  }
  return 0.0;
}

NormEstimate sup_over_set(const DistributionSpec& spec, const IndexSet& T, std::int64_t samples, std::uint64_t seed,
                          const SudakovBudgets& budgets) {
  if (T.dim() != spec.dim()) throw InvalidArgument("index set and law have different dimensions");
  if (samples < 1) throw InvalidArgument("sample count must be at least 1");
  if (T.kind() == IndexSet::Kind::mp_ball) {
    // sup over the M_p ball is the Z_p norm; reuse the outer-moment machinery with q = 1.
    const auto rep = zp_moment(*T.spec(), T.order(), 1.0, samples, budgets.dual, seed);
    return rep.estimate;
  }
  std::vector<double> values(static_cast<std::size_t>(samples));
  const std::int64_t chunk = std::max<std::int64_t>(1, (std::int64_t{1} << 21) / spec.dim());
  for (std::int64_t first = 0; first < samples; first += chunk) {
    const std::int64_t len = std::min(chunk, samples - first);
    const RowMatrix block = sample_rows(spec, seed, first, len, budgets.jobs);
    for (std::int64_t r = 0; r < len; ++r) {
      values[static_cast<std::size_t>(first + r)] = sup_of_realization(T, block.row(r).transpose());
    }
  }
  const auto boot = bootstrap_mean(values, derive_seed(seed, StreamTag::bootstrap), kDefaultBootstrapResamples,
                                   budgets.jobs);
  NormEstimate e;
  e.method = Method::monte_carlo;
  e.value = boot.estimate;
  e.ci_low = boot.low;
  e.ci_high = boot.high;
  e.std_error = boot.std_error;
  return e;
}

std::vector<double> default_eps_grid(double diameter, int points) {
  if (!(diameter > 0.0) || points < 2) throw InvalidArgument("grid needs a positive diameter and >= 2 points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] = diameter * std::pow(10.0, -3.0 + 3.0 * i / (points - 1));
  }
  return grid;
}

namespace {

ProfileEntry packing_entry(const RowMatrix& cloud, double eps) {
  // A set with separation > 2 eps meets every eps-ball at most once.
  const Traversal tr = farthest_point_traversal(cloud, 2.0 * eps);
  ProfileEntry e;
  e.eps = eps;
  e.log_n_lower = std::log(static_cast<double>(tr.count_for(2.0 * eps)));
  e.source = "packing";
  return e;
}

}  // namespace

ProfileEntry entropy_lower(const IndexSet& T, double eps, std::uint64_t seed, const SudakovBudgets& budgets) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  const int n = T.dim();
  ProfileEntry e;
  e.eps = eps;
  e.source = "volume";
  switch (T.kind()) {
    case IndexSet::Kind::cube:
      e.log_n_lower = std::max(0.0, n * std::log(2.0 * T.radius()) - log_unit_ball_volume(n) - n * std::log(eps));
      return e;
    case IndexSet::Kind::ball:
      e.log_n_lower = std::max(0.0, n * std::log(T.radius() / eps));
      return e;
    case IndexSet::Kind::finite: return packing_entry(T.points(), eps);
    case IndexSet::Kind::mp_ball: {
      const BodyOracle body = BodyOracle::mp_ball(*T.spec(), T.order(), budgets.body_saa, seed);
      const RowMatrix cloud = candidate_cloud(body, budgets.net.boundary_candidates, budgets.net.interior_candidates,
                                              seed, budgets.jobs);
      ProfileEntry best = packing_entry(cloud, eps);
      if (body.exact_volume()) {
        const double v = std::log(*body.exact_volume()) - log_unit_ball_volume(n) - n * std::log(eps);
        if (v > best.log_n_lower) {
          best.log_n_lower = v;
          best.source = "volume";
        }
      }
      return best;
    }
  }
  return e;
}

MinorationReport minoration_constant_lower(const DistributionSpec& spec, const IndexSet& T, std::vector<double> eps_grid,
                                           const SudakovBudgets& budgets, std::uint64_t seed) {
  MinorationReport rep;
  rep.sup_estimate = sup_over_set(spec, T, budgets.samples, seed, budgets);
  if (!(rep.sup_estimate.value > 1e-300)) throw InvalidArgument("E sup is numerically zero; minoration is undefined");
  if (eps_grid.empty()) eps_grid = default_eps_grid(T.diameter());
  std::sort(eps_grid.begin(), eps_grid.end());
  const std::uint64_t net_seed = derive_seed(seed, StreamTag::candidates);
  std::optional<RowMatrix> cloud;
  std::optional<double> log_volume;
  if (T.kind() == IndexSet::Kind::mp_ball) {
    const BodyOracle body = BodyOracle::mp_ball(*T.spec(), T.order(), budgets.body_saa, net_seed);
    cloud = candidate_cloud(body, budgets.net.boundary_candidates, budgets.net.interior_candidates, net_seed,
                            budgets.jobs);
    if (body.exact_volume()) log_volume = std::log(*body.exact_volume());
  }
  std::optional<Traversal> tr;
  if (T.kind() == IndexSet::Kind::finite || cloud) {
    // One traversal down to the smallest separation serves the whole grid.
    tr = farthest_point_traversal(cloud ? *cloud : T.points(), 2.0 * eps_grid.front());
  }
  const int n = T.dim();
  for (double eps : eps_grid) {
    ProfileEntry e;
    if (tr) {
      e.eps = eps;
      e.source = "packing";
      e.log_n_lower = std::log(static_cast<double>(tr->count_for(2.0 * eps)));
      if (log_volume) {
        const double v = *log_volume - log_unit_ball_volume(n) - n * std::log(eps);
        if (v > e.log_n_lower) {
          e.log_n_lower = v;
          e.source = "volume";
        }
      }
    } else {
      e = entropy_lower(T, eps, net_seed, budgets);
    }
    e.contribution = eps * std::sqrt(e.log_n_lower) / rep.sup_estimate.value;
    if (e.contribution > rep.cx_lower) {
      rep.cx_lower = e.contribution;
      rep.best_eps = eps;
    }
    rep.profile.push_back(e);
  }
  return rep;
}

UnconditionalRatio unconditional_minoration_ratio(const DistributionSpec& spec, const IndexSet& T,
                                                  const SudakovBudgets& budgets, std::uint64_t seed) {
  if (!spec.flags().is_unconditional) throw InvalidArgument("expects an unconditional law");
  UnconditionalRatio out;
  const int n = spec.dim();
  if (spec.flags().has_exact_marginal_moments) {
    out.min_first_moment = marginal_abs_moment(spec, 0, 1.0);
    for (int i = 1; i < n; ++i) out.min_first_moment = std::min(out.min_first_moment, marginal_abs_moment(spec, i, 1.0));
  } else {
    const auto cache = sample(spec, budgets.samples, derive_seed(seed, "first_moments"), budgets.jobs);
    out.min_first_moment = cache.data().cwiseAbs().colwise().mean().minCoeff();
  }
  if (!(out.min_first_moment > 0.0)) throw InvalidArgument("min E|X_i| is zero");
  out.report = minoration_constant_lower(spec, T, {}, budgets, seed);
  out.ratio = out.report.cx_lower * out.min_first_moment / std::sqrt(std::log(n + 1.0));
  return out;
}

}  // namespace centroidkit
