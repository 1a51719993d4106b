#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "centroidkit/cover.hpp"
#include "centroidkit/dists.hpp"
#include "centroidkit/dual.hpp"
#include "centroidkit/estimate.hpp"

namespace centroidkit {

inline constexpr std::int64_t kFiniteSetLimit = 1'000'000;

/// A bounded symmetric index set T.
class IndexSet {
 public:
  enum class Kind { finite, cube, ball, mp_ball };

  static IndexSet finite(RowMatrix points);
  /// {t : |t|_inf <= r}
  static IndexSet cube(int n, double r);
  static IndexSet ball(int n, double r);
  /// The M_p unit ball of the law of X itself.
  static IndexSet mp_ball(const DistributionSpec& spec, double p);

  Kind kind() const { return kind_; }
  int dim() const { return n_; }
  double radius() const { return r_; }
  double order() const { return p_; }
  const RowMatrix& points() const { return points_; }
  const std::optional<DistributionSpec>& spec() const { return spec_; }

  IndexSet scaled(double lambda) const;
  double diameter() const;
  std::string describe() const;

 private:
  IndexSet(Kind kind, int n) : kind_(kind), n_(n) {}
  Kind kind_;
  int n_;
  double r_ = 1.0;
  double p_ = 0.0;
  RowMatrix points_;
  std::optional<DistributionSpec> spec_;
};

const char* to_string(IndexSet::Kind kind);

struct SudakovBudgets {
  std::int64_t samples = 100'000;  ///< realizations for E sup
  NetOptions net;                  ///< candidate clouds for packings
  DualSolveOptions dual;           ///< inner solves for mp_ball suprema
  std::int64_t body_saa = 20'000;  ///< SAA rows defining an M_p ball body
  int jobs = 0;
};

/// sup_{t in T} <t, x> of one realization.
double sup_of_realization(const IndexSet& T, const Eigen::VectorXd& x);

/// Monte Carlo E sup_{t in T} <t, X> with a bootstrap interval.
NormEstimate sup_over_set(const DistributionSpec& spec, const IndexSet& T, std::int64_t samples, std::uint64_t seed,
                          const SudakovBudgets& budgets = {});

struct ProfileEntry {
  double eps = 0.0;
  double log_n_lower = 0.0;  ///< certified lower bound on log N(T, eps B)
  std::string source;        ///< "volume" or "packing"
  double contribution = 0.0; ///< eps sqrt(log N) / E sup
};

struct MinorationReport {
  NormEstimate sup_estimate;
  std::vector<ProfileEntry> profile;
  double cx_lower = 0.0;
  double best_eps = 0.0;
};

/// Default grid: 24 log-spaced points on [diam / 1000, diam].
std::vector<double> default_eps_grid(double diameter, int points = 24);

/// Certified lower bound on log N(T, eps B_2^n); packings are built from the
/// finite set itself or from a candidate cloud of the body.
ProfileEntry entropy_lower(const IndexSet& T, double eps, std::uint64_t seed, const SudakovBudgets& budgets);

MinorationReport minoration_constant_lower(const DistributionSpec& spec, const IndexSet& T, std::vector<double> eps_grid,
                                           const SudakovBudgets& budgets, std::uint64_t seed);

struct UnconditionalRatio {
  MinorationReport report;
  double min_first_moment = 0.0;  ///< min_i E|X_i|
  double ratio = 0.0;             ///< cx_lower * min E|X_i| / sqrt(log(n+1))
};

UnconditionalRatio unconditional_minoration_ratio(const DistributionSpec& spec, const IndexSet& T,
                                                  const SudakovBudgets& budgets, std::uint64_t seed);

}  // namespace centroidkit
