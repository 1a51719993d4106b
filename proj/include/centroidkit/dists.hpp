#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "centroidkit/combi.hpp"
#include "centroidkit/estimate.hpp"

namespace centroidkit {

class Philox;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Family {
  GaussianIsotropic,
  ExponentialProduct,
  RademacherProduct,
  UniformSphere,
  UniformCube,
  SparseIsotropic,
  UnconditionalProduct,
  LinearImage,
};

const char* to_string(Family family);
Family family_from_string(const std::string& name);

/// Symmetric one-dimensional law used as a coordinate of a product vector.
struct Marginal {
  enum class Kind { TwoPoint, Uniform, Exponential, Gaussian, LaplacePower };

  Kind kind = Kind::Gaussian;
  /// TwoPoint: atoms +-scale. Uniform: [-scale, scale]. Exponential: density
  /// exp(-|x|/scale)/(2 scale). Gaussian: standard deviation. LaplacePower:
  /// density proportional to exp(-|x/scale|^power).
  double scale = 1.0;
  double power = 2.0;

  static Marginal two_point(double a = 1.0) { return {Kind::TwoPoint, a, 2.0}; }
  static Marginal uniform(double a) { return {Kind::Uniform, a, 2.0}; }
  static Marginal exponential(double b) { return {Kind::Exponential, b, 2.0}; }
  static Marginal gaussian(double sigma = 1.0) { return {Kind::Gaussian, sigma, 2.0}; }
  static Marginal laplace_power(double s, double beta) { return {Kind::LaplacePower, s, beta}; }

  /// E X^{2m}, evaluated by finite products where the law allows it.
  double even_moment(int m) const;
  /// E|X|^p for real p >= 0.
  double abs_moment(double p) const;
  bool log_concave() const;
  double sample(Philox& rng) const;

  friend bool operator==(const Marginal&, const Marginal&) = default;
};

const char* to_string(Marginal::Kind kind);

/// Independent radius R for UniformSphere vectors X = R U.
struct RadialLaw {
  enum class Kind { Constant, Chi, GeneralizedGamma };

  Kind kind = Kind::Constant;
  double radius = 1.0;  ///< Constant
  /// GeneralizedGamma density proportional to r^{shape-1} exp(-(r/scale)^power).
  double shape = 1.0;
  double power = 1.0;
  double scale = 1.0;

  static RadialLaw constant(double r = 1.0) { return {Kind::Constant, r, 1.0, 1.0, 1.0}; }
  /// R ~ chi(n): R U is a standard Gaussian vector.
  static RadialLaw chi() { return {Kind::Chi, 1.0, 1.0, 1.0, 1.0}; }
  static RadialLaw generalized_gamma(double shape, double power, double scale) {
    return {Kind::GeneralizedGamma, 1.0, shape, power, scale};
  }

  /// E R^p in dimension n.
  double moment(double p, int n) const;
  double sample(Philox& rng, int n) const;

  friend bool operator==(const RadialLaw&, const RadialLaw&) = default;
};

const char* to_string(RadialLaw::Kind kind);

/// Capabilities derived from the family; never set by callers.
struct Flags {
  bool is_isotropic = false;
  bool is_unconditional = false;
  bool is_log_concave = false;
  bool has_exact_mixed_moments = false;
  bool has_exact_marginal_moments = false;
};

/// A random-vector law in R^n.
class DistributionSpec {
 public:
  static DistributionSpec gaussian(int n);
  /// Isotropic product of symmetric exponentials, density 2^{n/2} exp(-sqrt2 |x|_1).
  static DistributionSpec exponential(int n);
  static DistributionSpec rademacher(int n);
  static DistributionSpec uniform_sphere(int n, RadialLaw radial = RadialLaw::constant());
  /// Uniform on [-sqrt3, sqrt3]^n (isotropic).
  static DistributionSpec uniform_cube(int n);
  /// Atoms +-sqrt(n) e_i, each with probability 1/(2n).
  static DistributionSpec sparse(int n);
  static DistributionSpec unconditional_product(std::vector<Marginal> marginals);
  /// X = A Y with A an n x m matrix of full row rank n and Y ~ base in R^m.
  /// Nested images are collapsed into a single matrix.
  static DistributionSpec linear_image(const Eigen::MatrixXd& A, const DistributionSpec& base);

  Family family() const { return family_; }
  int dim() const { return n_; }
  const Flags& flags() const { return flags_; }

  const RadialLaw& radial() const { return radial_; }
  /// Coordinate laws of product families (empty for non-product families).
  const std::vector<Marginal>& marginals() const { return marginals_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// Base law of a LinearImage.
  const DistributionSpec& base() const;

  /// True when X = A Y with A a scaled signed permutation.
  bool is_monomial_image() const { return monomial_; }

  std::string describe() const;

  friend bool operator==(const DistributionSpec& a, const DistributionSpec& b);

 private:
  DistributionSpec(Family family, int n) : family_(family), n_(n) {}
  void derive_flags();

  Family family_;
  int n_;
  Flags flags_;
  RadialLaw radial_;
  std::vector<Marginal> marginals_;
  Eigen::MatrixXd matrix_;
  std::shared_ptr<const DistributionSpec> base_;
  bool monomial_ = false;
  std::vector<int> permutation_;  // monomial images: row i reads base coordinate permutation_[i]

  friend double mixed_even_moment(const DistributionSpec&, const Multiindex&);
  friend double marginal_abs_moment(const DistributionSpec&, int, double);
};

/// N i.i.d. realizations of a law, tagged with the seed that produced them.
/// Immutable; copies share the underlying matrix.
class SampleCache {
 public:
  SampleCache(DistributionSpec spec, std::uint64_t seed, RowMatrix data);

  const DistributionSpec& spec() const { return *spec_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t count() const { return data_->rows(); }
  int dim() const { return static_cast<int>(data_->cols()); }
  const RowMatrix& data() const { return *data_; }

 private:
  std::shared_ptr<const DistributionSpec> spec_;
  std::uint64_t seed_;
  std::shared_ptr<const RowMatrix> data_;
};

/// Row i is drawn from Philox(derive_seed(seed, samples), i), so any slice of
/// rows can be regenerated independently and jobs does not affect the output.
SampleCache sample(const DistributionSpec& spec, std::int64_t count, std::uint64_t seed, int jobs = 0);

/// Rows [first, first + count) of the matrix sample(spec, *, seed) would produce.
RowMatrix sample_rows(const DistributionSpec& spec, std::uint64_t seed, std::int64_t first, std::int64_t count,
                      int jobs = 1);

/// E|X_i|^p (0-based i). Throws NoExactOracle when no closed form exists.
double marginal_abs_moment(const DistributionSpec& spec, int i, double p);

/// E X^{2 alpha} = E prod X_i^{2 alpha_i}. Throws NoExactOracle when no closed
/// form exists.
double mixed_even_moment(const DistributionSpec& spec, const Multiindex& alpha);

/// Exact covariance matrix.
Eigen::MatrixXd covariance(const DistributionSpec& spec);

/// Second-moment matrix (1/N) X^T X of a sample.
Eigen::MatrixXd empirical_covariance(const SampleCache& cache);

struct IsotropizeOptions {
  double condition_threshold = 1e6;
  std::int64_t estimate_samples = 100'000;
  std::uint64_t seed = 0;
  /// Estimate the covariance from samples even when it is known exactly.
  bool force_estimate = false;
};

/// Cov(X)^{-1/2} X as a LinearImage; an already isotropic spec is returned
/// unchanged. Throws SingularCovariance above the condition threshold.
DistributionSpec isotropize(const DistributionSpec& spec, const IsotropizeOptions& opts = {});

/// Monte Carlo mean of the rank-th largest of |X_1|, ..., |X_n| (rank is
/// 1-based), with a bootstrap interval.
NormEstimate order_stat_mean(const DistributionSpec& spec, int rank, std::int64_t samples, std::uint64_t seed,
                             int resamples = 400);

}  // namespace centroidkit
