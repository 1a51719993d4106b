#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "centroidkit/dists.hpp"

namespace centroidkit {

/// A star body described by its gauge around a center.
class BodyOracle {
 public:
  /// Gauge of a batch of offsets (rows, relative to the center).
  using BatchGauge = std::function<Eigen::VectorXd(const RowMatrix& offsets)>;

  BodyOracle(int n, BatchGauge gauge, Eigen::VectorXd center, double circumradius,
             std::optional<double> exact_volume, std::string name);

  static BodyOracle euclidean_ball(int n, double radius = 1.0);
  /// {x : |x|_inf <= half_side}.
  static BodyOracle cube(int n, double half_side);
  /// The interval [a, b] in dimension 1.
  static BodyOracle segment(double a, double b);
  /// The unit ball of the M_p norm of a law. Uses a closed form for Gaussian
  /// and rotation-invariant laws, the exact even-moment expansion when it
  /// exists, and otherwise an SAA cache of `saa_samples` rows.
  static BodyOracle mp_ball(const DistributionSpec& spec, double p, std::int64_t saa_samples = 20'000,
                            std::uint64_t seed = 0);
  /// The M_p unit ball of an empirical law.
  static BodyOracle mp_ball(const SampleCache& cache, double p);

  /// lambda * body (about the origin).
  BodyOracle scaled(double lambda) const;

  int dim() const { return n_; }
  const Eigen::VectorXd& center() const { return center_; }
  /// Upper bound on max |x - center| over the body.
  double circumradius() const { return circumradius_; }
  const std::optional<double>& exact_volume() const { return volume_; }
  const std::string& name() const { return name_; }

  double gauge(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gauge_batch(const RowMatrix& points) const;
  bool contains(const Eigen::VectorXd& x) const { return gauge(x) <= 1.0 + 1e-9; }
  /// center + d / gauge(d) for a direction d.
  Eigen::VectorXd boundary_point(const Eigen::VectorXd& direction) const;

 private:
  int n_;
  BatchGauge gauge_;
  Eigen::VectorXd center_;
  double circumradius_;
  std::optional<double> volume_;
  std::string name_;
};

/// Volume of the Euclidean unit ball, pi^{n/2} / Gamma(n/2 + 1).
double unit_ball_volume(int n);
double log_unit_ball_volume(int n);

enum class NetKind { greedy_cover, packing_lower, volume_lower };

const char* to_string(NetKind kind);

struct NetOptions {
  std::int64_t boundary_candidates = 20'000;
  std::int64_t interior_candidates = 10'000;
  /// Run the k-center refinement only when the farthest-point count is at
  /// most this.
  std::int64_t refine_limit = 32;
  int refine_iterations = 40;
  int jobs = 0;
};

struct NetResult {
  double eps = 0.0;
  NetKind kind = NetKind::greedy_cover;
  /// Centers of the (refined) cover of the candidate cloud.
  std::vector<Eigen::VectorXd> centers;
  std::int64_t count = 0;
  /// Farthest-point centers: an eps-cover of the cloud and an
  /// eps-separated subset of the body.
  std::int64_t packing_count = 0;
  /// Farthest-point count at 2 eps: a (2 eps)-separated subset of the cloud,
  /// so a lower bound for any eps-cover of the cloud.
  std::int64_t separated_2eps = 0;
  /// Largest distance from a cloud point to its nearest center.
  double achieved_radius = 0.0;
  bool refined = false;
  std::int64_t boundary_candidates = 0;
  std::int64_t interior_candidates = 0;
  std::uint64_t seed = 0;
  std::string body;
};

/// The candidate cloud: the body center, boundary points along uniform
/// directions and interior points at radial fraction U^{1/n}.
RowMatrix candidate_cloud(const BodyOracle& body, std::int64_t boundary, std::int64_t interior, std::uint64_t seed,
                          int jobs = 0);

/// Relative slack on covering radii, absorbing rounding of boundary points.
inline constexpr double kCoverSlack = 1e-12;

/// Farthest-point order of a cloud started at row 0: order[k] is the k-th
/// center and radius[k] the covering radius of the first k+1 centers.
struct Traversal {
  std::vector<std::int64_t> order;
  std::vector<double> radius;
  /// Centers needed for covering radius <= eps (also an eps-separated set).
  std::int64_t count_for(double eps) const;
};

/// Runs the traversal until the covering radius drops to `stop_eps` or below.
Traversal farthest_point_traversal(const RowMatrix& cloud, double stop_eps);

NetResult greedy_net(const BodyOracle& body, double eps, std::uint64_t seed, const NetOptions& opts = {});

/// Minimal enclosing ball (center, radius) of a set of rows.
std::pair<Eigen::VectorXd, double> minimal_enclosing_ball(const RowMatrix& points, const std::vector<std::int64_t>& rows,
                                                           double tolerance = 1e-12);

struct VolumeBound {
  double value = 0.0;  ///< vol(T) / vol(eps B)
  double ci_low = 0.0;
  double ci_high = 0.0;
  double volume = 0.0;
  bool exact = false;
  std::int64_t mc_points = 0;
};

/// vol(T) / vol(eps B_2^n); Monte Carlo volume by rejection from the bounding
/// ball when the body has no exact volume (n <= 8).
VolumeBound volume_lower_bound(const BodyOracle& body, double eps, std::int64_t mc_points, std::uint64_t seed);

/// Constant lambda of the moment growth condition for a law, when known:
/// 1 for log-concave laws (all supported families are symmetric), Rademacher
/// products and uniform spheres with n >= 3. Empty otherwise.
std::optional<double> default_growth_constant(const DistributionSpec& spec);

/// eps sqrt(n) + (e lambda / p) max{p, log N}.
double entropy_to_zp_bound(int n, double p, double eps, std::int64_t count, double lambda);
/// Same, taking N from the net and lambda from default_growth_constant
/// unless given.
double entropy_to_zp_bound(const DistributionSpec& spec, double p, double eps, const NetResult& net,
                           std::optional<double> lambda = std::nullopt);

struct Prop36Result {
  double radius = 0.0;  ///< e cx / sqrt(p)
  std::int64_t net_count = 0;
  /// Size of a set with separation > 2 radius: a certified lower bound on
  /// the covering number at this radius.
  std::int64_t certified_lower = 0;
  double bound = 0.0;   ///< e^p
  bool pass = false;    ///< net_count <= e^p
  bool refuted = false; ///< certified_lower > e^p
  NetResult net;
};

Prop36Result prop36_check(const DistributionSpec& spec, double p, double cx, std::uint64_t seed,
                          const NetOptions& opts = {}, std::int64_t saa_samples = 20'000);

}  // namespace centroidkit
