#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "centroidkit/dists.hpp"
#include "centroidkit/estimate.hpp"
#include "centroidkit/norms.hpp"

namespace centroidkit {

enum class StepRule { fixed, backtracking };

const char* to_string(StepRule rule);

struct DualSolveOptions {
  int starts = 8;
  int max_iters = 500;
  StepRule step_rule = StepRule::backtracking;
  /// Stop when the predicted relative decrease of E|<t,X>|^p drops below this.
  double tolerance = 1e-12;
  /// SAA size used when a norm is defined from a spec by sampling.
  std::int64_t sample_budget = 100'000;
  std::uint64_t seed = 0;
  /// Use the exact even-moment expansion instead of sampling when the law
  /// and p allow it.
  bool prefer_exact = true;
  /// Bootstrap resamples for SAA intervals; 0 disables the bootstrap.
  int resamples = 400;
  int jobs = 0;
};

void validate(const DualSolveOptions& opts);

/// A smooth convex objective F(t) = E|<t,X>|^p known to the solver through
/// log F, grad F / F and Hess F / F. The scaling keeps large p finite.
class MpObjective {
 public:
  virtual ~MpObjective() = default;
  virtual int dim() const = 0;
  virtual double order() const = 0;
  /// Returns log F(t); fills the scaled gradient and Hessian when requested.
  virtual double evaluate(const Eigen::VectorXd& t, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const = 0;
  double log_value(const Eigen::VectorXd& t) const { return evaluate(t, nullptr, nullptr); }
  /// ||t||_{M_p} under this objective.
  double norm(const Eigen::VectorXd& t) const;
};

/// Empirical objective over the first `rows` rows of a cache (all rows by
/// default). p = 2 uses the cached second-moment matrix.
class SampleObjective final : public MpObjective {
 public:
  SampleObjective(SampleCache cache, double p, std::int64_t rows = 0);
  int dim() const override { return cache_.dim(); }
  double order() const override { return p_; }
  double evaluate(const Eigen::VectorXd& t, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const override;
  const SampleCache& cache() const { return cache_; }
  std::int64_t rows() const { return rows_; }
  /// Second-moment matrix of the rows in use.
  const Eigen::MatrixXd& second_moment() const { return second_moment_; }

 private:
  SampleCache cache_;
  double p_;
  std::int64_t rows_;
  Eigen::MatrixXd second_moment_;
};

/// Largest k for which the exact objective is built; beyond it the
/// coefficients leave double range and callers fall back to sampling.
inline constexpr int kMaxExactHalfOrder = 32;

/// Exact objective E<t,X>^{2k} for X = A Y with Y a product law, a
/// rotation-invariant law or the sparse law (A = identity when X is not a
/// linear image).
///
/// For a product law E<u,Y>^{2k} = (2k)! [w^k] prod_i sum_j E Y_i^{2j} u_i^{2j} w^j / (2j)!,
/// so value, gradient and Hessian cost O(m^2 k^2) instead of one term per
/// multiindex.
class ExactEvenObjective final : public MpObjective {
 public:
  /// Throws NoExactOracle when the law has no such form or k is too large.
  ExactEvenObjective(const DistributionSpec& spec, int k);
  int dim() const override { return n_; }
  double order() const override { return 2.0 * k_; }
  double evaluate(const Eigen::VectorXd& t, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const override;

 private:
  enum class Shape { product, radial, sparse };
  /// Polynomial value at a unit vector of the base space, with raw derivatives.
  double unit_value(const Eigen::VectorXd& u, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const;

  int n_;
  int k_;
  Shape shape_ = Shape::product;
  Eigen::MatrixXd map_;    ///< A, or empty for the identity
  Eigen::MatrixXd coeff_;  ///< product: E Y_i^{2j} / (2j)!; otherwise column 0 holds E Y_i^{2k}
  double log_scale_ = 0.0;
};

/// True when an exact even-order objective exists for (spec, p).
bool has_exact_objective(const DistributionSpec& spec, double p);

/// Number of multiindex terms below which per-sample Cauchy-Schwarz
/// certificates are computed in zp_moment.
inline constexpr std::uint64_t kCertificateTerms = 20'000;

/// Result of minimizing F on the hyperplane <t,s> = 1.
struct HyperplaneSolution {
  Eigen::VectorXd t;
  double log_f = 0.0;
  int iterations = 0;
  bool converged = false;
  /// <t,s>/||t||_{M_p} = F(t)^{-1/p}, a lower bound for ||s||_{Z_p}.
  double value(double p) const;
};

/// Damped Newton on {<t,s> = 1} from t0 (rescaled onto the hyperplane).
HyperplaneSolution minimize_on_hyperplane(const MpObjective& f, const Eigen::VectorXd& s, const Eigen::VectorXd& t0,
                                          const DualSolveOptions& opts);

/// Diagnostics of a multi-start solve.
struct DualSolveInfo {
  int best_start = -1;
  int total_iterations = 0;
  std::vector<double> start_values;  ///< per start; NaN for unusable starts
  bool converged = false;
};

/// ||s||_{Z_p} = sup{<t,s> : ||t||_{M_p} <= 1} under objective f, with the
/// multi-start rule of the options. No interval or certificates are attached.
NormEstimate zp_norm(const MpObjective& f, const Eigen::VectorXd& s, const DualSolveOptions& opts,
                     DualSolveInfo* info = nullptr);

/// SAA dual norm on a fixed cache; the interval comes from a bootstrap of the
/// empirical moment at the optimizer.
NormEstimate zp_norm(const SampleCache& cache, double p, const Eigen::VectorXd& s, const DualSolveOptions& opts = {},
                     DualSolveInfo* info = nullptr);

/// Dual norm of a law: exact even-order objective when available and
/// preferred, otherwise SAA with opts.sample_budget rows. Attaches the
/// Cauchy-Schwarz upper bound when one exists.
NormEstimate zp_norm(const DistributionSpec& spec, double p, const Eigen::VectorXd& s,
                     const DualSolveOptions& opts = {}, DualSolveInfo* info = nullptr);

/// (sum_alpha [C(k,alpha)^2 / C(2k,2alpha)] s^{2alpha} / E X^{2alpha})^{1/2k},
/// an upper bound for ||s||_{Z_2k} of an unconditional law. Empty when a
/// needed moment vanishes or the law has no exact mixed moments.
std::optional<double> cauchy_schwarz_upper(const DistributionSpec& spec, int k, const Eigen::VectorXd& s,
                                           std::uint64_t max_terms = 5'000'000);

enum class ConjectureMode { shifted, plain };

struct ZpMomentReport {
  std::string distribution;
  int n = 0;
  double p = 0.0;
  double q = 0.0;
  std::int64_t outer_samples = 0;
  std::int64_t saa_samples = 0;  ///< 0 when the exact objective was used
  Method norm_method = Method::monte_carlo;
  std::uint64_t seed = 0;
  bool warm_start = true;
  /// ((1/m) sum ||x_j||^q)^{1/q} with a bootstrap interval on log values.
  NormEstimate estimate;
  /// The same statistic on witness values (exact norm of the witness when an
  /// exact objective exists).
  NormEstimate witness_estimate;
  double ratio_to_conjecture = 0.0;
  std::vector<double> values;       ///< per outer sample
  std::vector<int> iterations;      ///< per outer sample
  double capped_fraction = 0.0;     ///< samples that hit max_iters
  double mean_iterations = 0.0;
  int max_iterations_used = 0;
  /// Mean of upper/value - 1 over samples with a Cauchy-Schwarz certificate.
  std::optional<double> mean_certificate_gap;
};

/// ((1/m) sum v_j^q)^{1/q} with a percentile bootstrap on the log scale.
NormEstimate outer_moment(const std::vector<double>& values, double q, std::uint64_t seed, int resamples = 400,
                          int jobs = 1);

/// Outer moment (E||X||_{Z_p}^q)^{1/q} over `outer` fresh realizations.
ZpMomentReport zp_moment(const DistributionSpec& spec, double p, double q, std::int64_t outer,
                         const DualSolveOptions& opts, std::uint64_t seed, bool warm_start = true);

/// estimate / sqrt((n+p)/p), or / sqrt(n/p) for the second form.
double conjecture_ratio(const ZpMomentReport& report, ConjectureMode mode = ConjectureMode::shifted);

struct TailRow {
  double t = 0.0;
  double frequency = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double analytic = 0.0;  ///< exp(-t sqrt(np) / sqrt2)
};

/// Frequencies of {(2/p)|X_1| >= t sqrt(n/p)} for an ExponentialProduct law.
std::vector<TailRow> exponential_witness_lower(const DistributionSpec& spec, double p, const std::vector<double>& t_grid,
                                               std::int64_t samples, std::uint64_t seed);

struct WitnessMoment {
  double q = 0.0;
  NormEstimate empirical;  ///< (E[(2/p)|X_1|]^q)^{1/q} by Monte Carlo
  double exact = 0.0;      ///< (2/p) ||X_1||_q from the marginal formula
  double analytic = 0.0;   ///< (2/p) (Gamma(q+1) 2^{-q/2})^{1/q}
};

WitnessMoment exponential_witness_moment(const DistributionSpec& spec, double p, double q, std::int64_t samples,
                                         std::uint64_t seed);

struct DecompositionCheck {
  double lhs = 0.0;
  double term_sparse = 0.0;
  double term_euclid = 0.0;
  /// (lhs - term_sparse) / term_euclid; may be <= 0.
  double implied_c1 = 0.0;
  std::vector<int> best_support;
  Method method = Method::monte_carlo;
};

inline constexpr std::uint64_t kSupportGuard = 1'000'000;

/// Splits ||s||_{Z_p} of an unconditional law, rescaled so that E|X_i| = 1,
/// into its sparse part and its Euclidean-capped part.
DecompositionCheck unconditional_decomposition_check(const DistributionSpec& spec, double p, const Eigen::VectorXd& s,
                                                     const DualSolveOptions& opts = {});

/// sup{<t,s> : F(t) <= 1, |t|_2 <= r} under objective f.
double capped_support(const MpObjective& f, const Eigen::VectorXd& s, double radius, const DualSolveOptions& opts);

}  // namespace centroidkit
