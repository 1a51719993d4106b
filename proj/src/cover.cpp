#include "centroidkit/cover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "centroidkit/dual.hpp"
#include "centroidkit/error.hpp"
#include "centroidkit/norms.hpp"
#include "centroidkit/parallel.hpp"
#include "centroidkit/rng.hpp"
#include "centroidkit/stats.hpp"

namespace centroidkit {

double log_unit_ball_volume(int n) {
  return 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0);
}

double unit_ball_volume(int n) { return std::exp(log_unit_ball_volume(n)); }

const char* to_string(NetKind kind) {
  switch (kind) {
    case NetKind::greedy_cover: return "greedy_cover";
    case NetKind::packing_lower: return "packing_lower";
    case NetKind::volume_lower: return "volume_lower";
  }
  return "?";
}

// ---- bodies ----------------------------------------------------------------

BodyOracle::BodyOracle(int n, BatchGauge gauge, Eigen::VectorXd center, double circumradius,
                       std::optional<double> exact_volume, std::string name)
    : n_(n), gauge_(std::move(gauge)), center_(std::move(center)), circumradius_(circumradius),
      volume_(exact_volume), name_(std::move(name)) {
  if (n < 1) throw InvalidArgument("body dimension must be at least 1");
  if (center_.size() != n) throw InvalidArgument("body center has the wrong length");
  if (!(circumradius_ > 0.0)) throw InvalidArgument("body circumradius must be positive");
}

BodyOracle BodyOracle::euclidean_ball(int n, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  auto gauge = [radius](const RowMatrix& x) -> Eigen::VectorXd { return x.rowwise().norm() / radius; };
  return BodyOracle(n, gauge, Eigen::VectorXd::Zero(n), radius, unit_ball_volume(n) * std::pow(radius, n),
                    "euclidean_ball");
}

BodyOracle BodyOracle::cube(int n, double half_side) {
  if (!(half_side > 0.0)) throw InvalidArgument("half side must be positive");
  auto gauge = [half_side](const RowMatrix& x) -> Eigen::VectorXd {
    return x.cwiseAbs().rowwise().maxCoeff() / half_side;
  };
  return BodyOracle(n, gauge, Eigen::VectorXd::Zero(n), half_side * std::sqrt(static_cast<double>(n)),
                    std::pow(2.0 * half_side, n), "cube");
}

BodyOracle BodyOracle::segment(double a, double b) {
  if (!(b > a)) throw InvalidArgument("segment needs a < b");
  const double half = 0.5 * (b - a);
  auto gauge = [half](const RowMatrix& x) -> Eigen::VectorXd { return x.cwiseAbs().col(0) / half; };
  return BodyOracle(1, gauge, Eigen::VectorXd::Constant(1, 0.5 * (a + b)), half, b - a, "segment");
}

namespace {

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

void require_order(double p) {
  if (!(p >= 2.0) || !std::isfinite(p)) throw InvalidArgument("M_p balls are supported for p >= 2");
}

}  // namespace

BodyOracle BodyOracle::mp_ball(const DistributionSpec& spec, double p, std::int64_t saa_samples, std::uint64_t seed) {
  require_order(p);
  const int n = spec.dim();
  const Family f = spec.family();
  if (f == Family::GaussianIsotropic || f == Family::UniformSphere) {
    // Rotation invariance: ||t||_{M_p} = |t| ||X_1||_p.
    const double m = std::pow(marginal_abs_moment(spec, 0, p), 1.0 / p);
    auto gauge = [m](const RowMatrix& x) -> Eigen::VectorXd { return x.rowwise().norm() * m; };
    return BodyOracle(n, gauge, Eigen::VectorXd::Zero(n), 1.0 / m, unit_ball_volume(n) * std::pow(m, -n),
                      "mp_ball(" + spec.describe() + ", p=" + std::to_string(p) + ")");
  }
  const double radius = 1.0 / std::sqrt(min_eigenvalue(covariance(spec)));
  if (has_exact_objective(spec, p)) {
    auto objective = std::make_shared<const ExactEvenObjective>(spec, static_cast<int>(p / 2.0));
    auto gauge = [objective, p](const RowMatrix& x) -> Eigen::VectorXd {
      Eigen::VectorXd out(x.rows());
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Eigen::VectorXd t = x.row(r).transpose();
        out(r) = t.norm() == 0.0 ? 0.0 : std::exp(objective->log_value(t) / p);
      }
      return out;
    };
    return BodyOracle(n, gauge, Eigen::VectorXd::Zero(n), radius, std::nullopt,
                      "mp_ball(" + spec.describe() + ", p=" + std::to_string(p) + ", exact)");
  }
  return mp_ball(sample(spec, saa_samples, derive_seed(seed, StreamTag::saa)), p);
}

BodyOracle BodyOracle::mp_ball(const SampleCache& cache, double p) {
  require_order(p);
  const int n = cache.dim();
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
  second.selfadjointView<Eigen::Lower>().rankUpdate(cache.data().transpose());
  second.triangularView<Eigen::StrictlyUpper>() = second.transpose();
  second /= static_cast<double>(cache.count());
  // Empirical L_p norms dominate empirical L_2 norms for p >= 2.
  const double lmin = min_eigenvalue(second);
  if (!(lmin > 0.0)) throw InvalidArgument("sample does not span the space; the M_p ball is unbounded");
  auto gauge = [cache, p](const RowMatrix& x) -> Eigen::VectorXd {
    constexpr Eigen::Index kCols = 128;
    Eigen::VectorXd out(x.rows());
    const double N = static_cast<double>(cache.count());
    for (Eigen::Index lo = 0; lo < x.rows(); lo += kCols) {
      const Eigen::Index len = std::min(kCols, x.rows() - lo);
      Eigen::MatrixXd y = cache.data() * x.middleRows(lo, len).transpose();
      for (Eigen::Index c = 0; c < len; ++c) {
        const double top = y.col(c).cwiseAbs().maxCoeff();
        if (top == 0.0) {
          out(lo + c) = 0.0;
          continue;
        }
        Eigen::VectorXd col = y.col(c) / top;
        abs_pow_inplace({col.data(), static_cast<std::size_t>(col.size())}, p);
        out(lo + c) = top * std::pow(col.sum() / N, 1.0 / p);
      }
    }
    return out;
  };
  return BodyOracle(n, gauge, Eigen::VectorXd::Zero(n), 1.0 / std::sqrt(lmin), std::nullopt,
                    "mp_ball(sample N=" + std::to_string(cache.count()) + ", p=" + std::to_string(p) + ")");
}

BodyOracle BodyOracle::scaled(double lambda) const {
  if (!(lambda > 0.0)) throw InvalidArgument("scale must be positive");
  auto inner = gauge_;
  auto gauge = [inner, lambda](const RowMatrix& x) -> Eigen::VectorXd { return inner(x / lambda); };
  std::optional<double> vol;
  if (volume_) vol = *volume_ * std::pow(lambda, n_);
  return BodyOracle(n_, gauge, center_ * lambda, circumradius_ * lambda, vol, name_ + " scaled");
}

double BodyOracle::gauge(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw InvalidArgument("point has the wrong length");
  RowMatrix row = (x - center_).transpose();
  return gauge_(row)(0);
}

Eigen::VectorXd BodyOracle::gauge_batch(const RowMatrix& points) const {
  if (points.cols() != n_) throw InvalidArgument("points have the wrong width");
  RowMatrix offsets = points.rowwise() - center_.transpose();
  return gauge_(offsets);
}

Eigen::VectorXd BodyOracle::boundary_point(const Eigen::VectorXd& direction) const {
  RowMatrix row = direction.transpose();
  const double g = gauge_(row)(0);
  if (!(g > 0.0)) throw InvalidArgument("body is unbounded along this direction");
  return center_ + direction / g;
}

// ---- candidate clouds and traversal -------------------------------------------

RowMatrix candidate_cloud(const BodyOracle& body, std::int64_t boundary, std::int64_t interior, std::uint64_t seed,
                          int jobs) {
  if (boundary < 0 || interior < 0) throw InvalidArgument("candidate counts must be nonnegative");
  const int n = body.dim();
  const std::int64_t total = boundary + interior;
  RowMatrix dirs(total, n);
  Eigen::VectorXd fraction = Eigen::VectorXd::Ones(total);
  const std::uint64_t s = derive_seed(seed, StreamTag::candidates);
  constexpr std::int64_t kBlock = 1024;
  const auto blocks = static_cast<std::size_t>((total + kBlock - 1) / kBlock);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    const std::int64_t lo = static_cast<std::int64_t>(b) * kBlock;
    const std::int64_t hi = std::min(total, lo + kBlock);
    for (std::int64_t i = lo; i < hi; ++i) {
      Philox rng(s, static_cast<std::uint64_t>(i));
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (int j = 0; j < n; ++j) {
          dirs(i, j) = rng.normal();
          norm2 += dirs(i, j) * dirs(i, j);
        }
      } while (norm2 == 0.0);
      dirs.row(i) /= std::sqrt(norm2);
      if (i >= boundary) fraction(i) = std::pow(rng.uniform_pos(), 1.0 / n);
    }
  });
  const Eigen::VectorXd g = body.gauge_batch(dirs.rowwise() + body.center().transpose());
  RowMatrix cloud(total + 1, n);
  cloud.row(0) = body.center().transpose();
  for (std::int64_t i = 0; i < total; ++i) {
    if (!(g(i) > 0.0) || !std::isfinite(g(i))) throw InvalidArgument("body gauge is degenerate along a direction");
    cloud.row(i + 1) = body.center().transpose() + dirs.row(i) * (fraction(i) / g(i));
  }
  return cloud;
}

std::int64_t Traversal::count_for(double eps) const {
  for (std::size_t k = 0; k < radius.size(); ++k) {
    if (radius[k] <= eps * (1.0 + 0.5 * kCoverSlack)) return static_cast<std::int64_t>(k) + 1;
  }
  throw InvalidArgument("traversal was stopped above the requested eps");
}

Traversal farthest_point_traversal(const RowMatrix& cloud, double stop_eps) {
  const Eigen::Index M = cloud.rows();
  if (M == 0) throw InvalidArgument("empty candidate cloud");
  Traversal tr;
  Eigen::VectorXd d2 = (cloud.rowwise() - cloud.row(0)).rowwise().squaredNorm();
  tr.order.push_back(0);
  // Points at distance exactly eps (boundary points of a ball of radius eps)
  // must count as covered despite rounding.
  const double stop2 = stop_eps * stop_eps * (1.0 + kCoverSlack);
  for (;;) {
    Eigen::Index far = 0;
    const double worst = d2.maxCoeff(&far);  // first index on ties
    tr.radius.push_back(std::sqrt(worst));
    if (worst <= stop2 || static_cast<Eigen::Index>(tr.order.size()) == M) break;
    tr.order.push_back(far);
    d2 = d2.cwiseMin((cloud.rowwise() - cloud.row(far)).rowwise().squaredNorm());
  }
  return tr;
}

std::pair<Eigen::VectorXd, double> minimal_enclosing_ball(const RowMatrix& points, const std::vector<std::int64_t>& rows,
                                                           double tolerance) {
  if (rows.empty()) throw InvalidArgument("enclosing ball of an empty set");
  const int n = static_cast<int>(points.cols());
  const auto m = rows.size();
  const Eigen::RowVectorXd origin = points.row(rows[0]);
  RowMatrix P(static_cast<Eigen::Index>(m), n);
  for (std::size_t i = 0; i < m; ++i) P.row(static_cast<Eigen::Index>(i)) = points.row(rows[i]) - origin;
  if (m == 1) return {origin.transpose(), 0.0};
  const Eigen::VectorXd sq = P.rowwise().squaredNorm();
  // Frank-Wolfe with away steps on the dual simplex problem.
  Eigen::Index a = 0, b = 0;
  sq.maxCoeff(&a);
  (P.rowwise() - P.row(a)).rowwise().squaredNorm().maxCoeff(&b);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  u(a) += 0.5;
  u(b) += 0.5;
  Eigen::RowVectorXd c = 0.5 * (P.row(a) + P.row(b));
  for (int it = 0; it < 2000; ++it) {
    const double gamma = u.dot(sq) - c.squaredNorm();
    const Eigen::VectorXd d2 = (P.rowwise() - c).rowwise().squaredNorm();
    Eigen::Index up = 0;
    const double dmax = d2.maxCoeff(&up);
    if (gamma <= 0.0) {
      if (dmax == 0.0) break;
      const double lambda = 0.5;
      u *= 1.0 - lambda;
      u(up) += lambda;
      c = (1.0 - lambda) * c + lambda * P.row(up);
      continue;
    }
    Eigen::Index down = -1;
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (u(i) > 0.0 && d2(i) < dmin) {
        dmin = d2(i);
        down = i;
      }
    }
    const double plus = dmax / gamma - 1.0;
    const double minus = 1.0 - dmin / gamma;
    if (std::max(plus, minus) <= tolerance) break;
    if (plus > minus) {
      const double lambda = plus / (2.0 * (1.0 + plus));
      u *= 1.0 - lambda;
      u(up) += lambda;
      c = (1.0 - lambda) * c + lambda * P.row(up);
    } else {
      const double lambda = std::min(minus / (2.0 * (1.0 - minus)), u(down) / (1.0 - u(down)));
      u *= 1.0 + lambda;
      u(down) -= lambda;
      if (u(down) < 1e-15) u(down) = 0.0;
      c = (1.0 + lambda) * c - lambda * P.row(down);
    }
  }
  const double radius = std::sqrt((P.rowwise() - c).rowwise().squaredNorm().maxCoeff());
  return {(c + origin).transpose(), radius};
}

namespace {

struct Cover {
  std::vector<Eigen::VectorXd> centers;
  double radius = 0.0;
};

// k-center refinement: alternate nearest-center assignment and minimal
// enclosing balls, starting from the first m farthest-point centers.
std::optional<Cover> try_cover(const RowMatrix& cloud, const Traversal& tr, std::int64_t m, double eps, int iterations) {
  const Eigen::Index M = cloud.rows();
  const int n = static_cast<int>(cloud.cols());
  RowMatrix centers(m, n);
  for (std::int64_t k = 0; k < m; ++k) centers.row(k) = cloud.row(tr.order[static_cast<std::size_t>(k)]);
  std::vector<std::int64_t> assign(static_cast<std::size_t>(M), -1);
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < M; ++i) {
      Eigen::Index nearest = 0;
      (centers.rowwise() - cloud.row(i)).rowwise().squaredNorm().minCoeff(&nearest);
      if (assign[static_cast<std::size_t>(i)] != nearest) {
        assign[static_cast<std::size_t>(i)] = nearest;
        changed = true;
      }
    }
    std::vector<std::vector<std::int64_t>> clusters(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < M; ++i) clusters[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])].push_back(i);
    double radius = 0.0;
    for (std::int64_t k = 0; k < m; ++k) {
      const auto& members = clusters[static_cast<std::size_t>(k)];
      if (members.empty()) continue;
      auto [c, r] = minimal_enclosing_ball(cloud, members);
      centers.row(k) = c.transpose();
      radius = std::max(radius, r);
    }
    best = std::min(best, radius);
    if (radius <= eps * (1.0 + 0.5 * kCoverSlack)) {
      Cover out;
      out.radius = radius;
      for (std::int64_t k = 0; k < m; ++k) {
        if (!clusters[static_cast<std::size_t>(k)].empty()) out.centers.push_back(centers.row(k).transpose());
      }
      return out;
    }
    if (!changed && it > 0) break;
  }
  return std::nullopt;
}

}  // namespace

NetResult greedy_net(const BodyOracle& body, double eps, std::uint64_t seed, const NetOptions& opts) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (opts.boundary_candidates + opts.interior_candidates < 1000) {
    throw InvalidArgument("greedy_net needs at least 1000 candidates");
  }
  const RowMatrix cloud = candidate_cloud(body, opts.boundary_candidates, opts.interior_candidates, seed, opts.jobs);
  const Traversal tr = farthest_point_traversal(cloud, eps);
  NetResult net;
  net.eps = eps;
  net.kind = NetKind::greedy_cover;
  net.seed = seed;
  net.body = body.name();
  net.boundary_candidates = opts.boundary_candidates;
  net.interior_candidates = opts.interior_candidates;
  net.packing_count = tr.count_for(eps);
  net.separated_2eps = tr.count_for(2.0 * eps);
  net.count = net.packing_count;
  net.achieved_radius = tr.radius[static_cast<std::size_t>(net.count - 1)];
  for (std::int64_t k = 0; k < net.count; ++k) net.centers.push_back(cloud.row(tr.order[static_cast<std::size_t>(k)]).transpose());

  if (net.count > 1 && net.count <= opts.refine_limit) {
    // Binary search for the smallest feasible refined cover; the
    // (2 eps)-separated count is a lower bound for any cover of the cloud.
    std::int64_t lo = std::max<std::int64_t>(1, net.separated_2eps);
    std::int64_t hi = net.count;
    std::optional<Cover> best;
    while (lo < hi) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (auto cover = try_cover(cloud, tr, mid, eps, opts.refine_iterations)) {
        hi = static_cast<std::int64_t>(cover->centers.size());
        best = std::move(cover);
        hi = std::min(hi, mid);
      } else {
        lo = mid + 1;
      }
    }
    if (best && static_cast<std::int64_t>(best->centers.size()) < net.count) {
      net.centers = best->centers;
      net.count = static_cast<std::int64_t>(best->centers.size());
      net.achieved_radius = best->radius;
      net.refined = true;
    }
  }
  return net;
}

// ---- volume bounds -------------------------------------------------------------

VolumeBound volume_lower_bound(const BodyOracle& body, double eps, std::int64_t mc_points, std::uint64_t seed) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  const int n = body.dim();
  const double log_ball = log_unit_ball_volume(n) + n * std::log(eps);
  VolumeBound out;
  if (body.exact_volume()) {
    out.volume = *body.exact_volume();
    out.exact = true;
    out.value = out.ci_low = out.ci_high = std::exp(std::log(out.volume) - log_ball);
    return out;
  }
  if (n > 8) throw InvalidArgument("Monte Carlo volume is limited to n <= 8");
  if (!std::isfinite(body.circumradius())) throw InvalidArgument("body is unbounded");
  if (mc_points < 1) throw InvalidArgument("mc_points must be at least 1");
  const double R = body.circumradius();
  const std::uint64_t s = derive_seed(seed, StreamTag::volume);
  std::int64_t inside = 0;
  constexpr std::int64_t kChunk = 8192;
  for (std::int64_t first = 0; first < mc_points; first += kChunk) {
    const std::int64_t len = std::min(kChunk, mc_points - first);
    RowMatrix pts(len, n);
    for (std::int64_t i = 0; i < len; ++i) {
      Philox rng(s, static_cast<std::uint64_t>(first + i));
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (int j = 0; j < n; ++j) {
          pts(i, j) = rng.normal();
          norm2 += pts(i, j) * pts(i, j);
        }
      } while (norm2 == 0.0);
      pts.row(i) *= R * std::pow(rng.uniform_pos(), 1.0 / n) / std::sqrt(norm2);
    }
    const Eigen::VectorXd g = body.gauge_batch(pts.rowwise() + body.center().transpose());
    for (std::int64_t i = 0; i < len; ++i) inside += g(i) <= 1.0 + 1e-9;
  }
  const auto ci = wilson_interval(inside, mc_points);
  const double log_bounding = log_unit_ball_volume(n) + n * std::log(R);
  out.mc_points = mc_points;
  out.volume = ci.estimate * std::exp(log_bounding);
  out.value = ci.estimate * std::exp(log_bounding - log_ball);
  out.ci_low = ci.low * std::exp(log_bounding - log_ball);
  out.ci_high = ci.high * std::exp(log_bounding - log_ball);
  return out;
}

// ---- entropy to Z_p ------------------------------------------------------------

std::optional<double> default_growth_constant(const DistributionSpec& spec) {
  // Every supported family is symmetric, so log-concave ones get lambda = 1.
  if (spec.flags().is_log_concave) return 1.0;
  if (spec.family() == Family::RademacherProduct) return 1.0;
  if (spec.family() == Family::UniformSphere && spec.radial().kind == RadialLaw::Kind::Constant && spec.dim() >= 3) {
    return 1.0;  // marginal density (1 - x^2)^{(n-3)/2} is symmetric log-concave
  }
  return std::nullopt;
}

double entropy_to_zp_bound(int n, double p, double eps, std::int64_t count, double lambda) {
  if (count < 1) throw InvalidArgument("net count must be at least 1");
  const double log_n = std::log(static_cast<double>(count));
  return eps * std::sqrt(static_cast<double>(n)) + std::numbers::e * lambda / p * std::max(p, log_n);
}

double entropy_to_zp_bound(const DistributionSpec& spec, double p, double eps, const NetResult& net,
                           std::optional<double> lambda) {
  if (!lambda) lambda = default_growth_constant(spec);
  if (!lambda) {
    throw InvalidArgument("no known moment growth constant for " + spec.describe() + "; pass lambda explicitly");
  }
  return entropy_to_zp_bound(spec.dim(), p, eps, net.count, *lambda);
}

Prop36Result prop36_check(const DistributionSpec& spec, double p, double cx, std::uint64_t seed, const NetOptions& opts,
                          std::int64_t saa_samples) {
  if (!(cx > 0.0)) throw InvalidArgument("cx must be positive");
  require_order(p);
  Prop36Result out;
  out.radius = std::numbers::e * cx / std::sqrt(p);
  out.bound = std::exp(p);
  const BodyOracle body = BodyOracle::mp_ball(spec, p, saa_samples, seed);
  out.net = greedy_net(body, out.radius, seed, opts);
  out.net_count = out.net.count;
  out.certified_lower = out.net.separated_2eps;
  out.pass = static_cast<double>(out.net_count) <= out.bound;
  out.refuted = static_cast<double>(out.certified_lower) > out.bound;
  return out;
}

}  // namespace centroidkit
