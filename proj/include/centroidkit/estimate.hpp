#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace centroidkit {

enum class Method { exact_even, monte_carlo, surrogate, brute_force };

const char* to_string(Method method);

/// A feasible point t together with the value it certifies from below.
struct LowerWitness {
  Eigen::VectorXd point;
  double value = 0.0;
};

struct UpperBound {
  double value = 0.0;
  std::string provenance;
};

/// A scalar estimate with a 95% interval and optional certificates.
/// Exact methods carry a zero-width interval.
struct NormEstimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double std_error = 0.0;
  Method method = Method::monte_carlo;
  /// Set when an optimizer stopped at its iteration cap: `value` is then only
  /// known to be a lower bound.
  bool lower_bound_only = false;
  std::optional<LowerWitness> lower_witness;
  std::optional<UpperBound> upper_bound;

  static NormEstimate exact(double value, Method method) {
    NormEstimate e;
    e.value = e.ci_low = e.ci_high = value;
    e.method = method;
    return e;
  }

  double relative_ci_width() const { return value > 0.0 ? (ci_high - ci_low) / value : 0.0; }
};

}  // namespace centroidkit
