#include "centroidkit/dists.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "centroidkit/error.hpp"
#include "centroidkit/parallel.hpp"
#include "centroidkit/rng.hpp"
#include "centroidkit/stats.hpp"

namespace centroidkit {

namespace {

constexpr double kIsotropyTolerance = 1e-10;

bool is_even_integer(double p, int& half) {
  if (p < 0.0 || p > 2.0e6 || p != std::floor(p) || std::fmod(p, 2.0) != 0.0) return false;
  half = static_cast<int>(p / 2.0);
  return true;
}

bool is_integer(double p) { return p >= 0.0 && p <= 1.0e6 && p == std::floor(p); }

// (2m-1)!! as a double product; exact while representable.
double double_factorial_odd(int m) {
  double r = 1.0;
  for (int j = 1; j <= m; ++j) r *= 2.0 * j - 1.0;
  return r;
}

// prod_{j<m} (n + 2j)
double rising_even(int n, int m) {
  double r = 1.0;
  for (int j = 0; j < m; ++j) r *= static_cast<double>(n) + 2.0 * j;
  return r;
}

double ipow(double x, int m) {
  double r = 1.0;
  for (int j = 0; j < m; ++j) r *= x;
  return r;
}

// E|g|^p for a standard Gaussian.
double gaussian_abs_moment(double p) {
  int m = 0;
  if (is_even_integer(p, m)) return double_factorial_odd(m);
  return std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(std::numbers::pi));
}

// E|X|^p for the unit-variance Laplace law, Gamma(p+1) 2^{-p/2}.
double laplace_abs_moment(double p) {
  if (is_integer(p)) {
    double r = 1.0;
    const int k = static_cast<int>(p);
    for (int j = 2; j <= k; ++j) r *= j;
    int m = 0;
    if (is_even_integer(p, m)) return r / std::ldexp(1.0, m);
    return r * std::pow(2.0, -0.5 * p);
  }
  return std::exp(std::lgamma(p + 1.0) - 0.5 * p * std::numbers::ln2);
}

// E|X|^p for uniform on [-sqrt3, sqrt3].
double cube_abs_moment(double p) {
  int m = 0;
  if (is_even_integer(p, m)) return ipow(3.0, m) / (2.0 * m + 1.0);
  return std::pow(3.0, 0.5 * p) / (p + 1.0);
}

// E|U_1|^p for U uniform on S^{n-1}.
double sphere_coordinate_moment(int n, double p) {
  int m = 0;
  if (is_even_integer(p, m)) return double_factorial_odd(m) / rising_even(n, m);
  return std::exp(std::lgamma(0.5 * n) + std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(std::numbers::pi) -
                  std::lgamma(0.5 * (n + p)));
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be positive and finite");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(Family family) {
  switch (family) {
    case Family::GaussianIsotropic: return "GaussianIsotropic";
    case Family::ExponentialProduct: return "ExponentialProduct";
    case Family::RademacherProduct: return "RademacherProduct";
    case Family::UniformSphere: return "UniformSphere";
    case Family::UniformCube: return "UniformCube";
    case Family::SparseIsotropic: return "SparseIsotropic";
    case Family::UnconditionalProduct: return "UnconditionalProduct";
    case Family::LinearImage: return "LinearImage";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  for (Family f : {Family::GaussianIsotropic, Family::ExponentialProduct, Family::RademacherProduct,
                   Family::UniformSphere, Family::UniformCube, Family::SparseIsotropic,
                   Family::UnconditionalProduct, Family::LinearImage}) {
    if (name == to_string(f)) return f;
  }
  throw InvalidArgument("unknown distribution family '" + name + "'");
}

const char* to_string(Marginal::Kind kind) {
  switch (kind) {
    case Marginal::Kind::TwoPoint: return "two_point";
    case Marginal::Kind::Uniform: return "uniform";
    case Marginal::Kind::Exponential: return "exponential";
    case Marginal::Kind::Gaussian: return "gaussian";
    case Marginal::Kind::LaplacePower: return "laplace_power";
  }
  return "?";
}

const char* to_string(RadialLaw::Kind kind) {
  switch (kind) {
    case RadialLaw::Kind::Constant: return "constant";
    case RadialLaw::Kind::Chi: return "chi";
    case RadialLaw::Kind::GeneralizedGamma: return "generalized_gamma";
  }
  return "?";
}

// ---- Marginal ------------------------------------------------------------

double Marginal::even_moment(int m) const {
  const double a2 = scale * scale;
  switch (kind) {
    case Kind::TwoPoint: return ipow(a2, m);
    case Kind::Uniform: return ipow(a2, m) / (2.0 * m + 1.0);
    case Kind::Exponential: {
      double f = 1.0;
      for (int j = 2; j <= 2 * m; ++j) f *= j;
      return ipow(a2, m) * f;
    }
    case Kind::Gaussian: return ipow(a2, m) * double_factorial_odd(m);
    case Kind::LaplacePower: return abs_moment(2.0 * m);
  }
  return 0.0;
}

double Marginal::abs_moment(double p) const {
  if (p < 0.0) throw InvalidArgument("moment order must be nonnegative");
  int m = 0;
  if (kind != Kind::LaplacePower && is_even_integer(p, m)) return even_moment(m);
  switch (kind) {
    case Kind::TwoPoint: return std::pow(scale, p);
    case Kind::Uniform: return std::pow(scale, p) / (p + 1.0);
    case Kind::Exponential: return std::exp(p * std::log(scale) + std::lgamma(p + 1.0));
    case Kind::Gaussian: return std::pow(scale, p) * gaussian_abs_moment(p);
    case Kind::LaplacePower:
      return std::exp(p * std::log(scale) + std::lgamma((p + 1.0) / power) - std::lgamma(1.0 / power));
  }
  return 0.0;
}

bool Marginal::log_concave() const {
  switch (kind) {
    case Kind::TwoPoint: return false;
    case Kind::LaplacePower: return power >= 1.0;
    default: return true;
  }
}

double Marginal::sample(Philox& rng) const {
  switch (kind) {
    case Kind::TwoPoint: return scale * rng.sign();
    case Kind::Uniform: return scale * (2.0 * rng.uniform() - 1.0);
    case Kind::Exponential: {
      const double s = rng.sign();
      return s * scale * rng.exponential();
    }
    case Kind::Gaussian: return scale * rng.normal();
    case Kind::LaplacePower: {
      const double s = rng.sign();
      return s * scale * std::pow(rng.gamma(1.0 / power), 1.0 / power);
    }
  }
  return 0.0;
}

// ---- RadialLaw -------------------------------------------------------------

double RadialLaw::moment(double p, int n) const {
  int m = 0;
  switch (kind) {
    case Kind::Constant:
      if (is_even_integer(p, m)) return ipow(radius * radius, m);
      return std::pow(radius, p);
    case Kind::Chi:
      if (is_even_integer(p, m)) return rising_even(n, m);
      return std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (n + p)) - std::lgamma(0.5 * n));
    case Kind::GeneralizedGamma:
      return std::exp(p * std::log(scale) + std::lgamma((shape + p) / power) - std::lgamma(shape / power));
  }
  return 0.0;
}

double RadialLaw::sample(Philox& rng, int n) const {
  switch (kind) {
    case Kind::Constant: return radius;
    case Kind::Chi: return std::sqrt(2.0 * rng.gamma(0.5 * n));
    case Kind::GeneralizedGamma: return scale * std::pow(rng.gamma(shape / power), 1.0 / power);
  }
  return 0.0;
}

// ---- DistributionSpec ------------------------------------------------------

namespace {

void check_dim(int n) {
  if (n < 1) throw InvalidArgument("dimension must be at least 1");
}

}  // namespace

DistributionSpec DistributionSpec::gaussian(int n) {
  check_dim(n);
  DistributionSpec s(Family::GaussianIsotropic, n);
  s.derive_flags();
  return s;
}

DistributionSpec DistributionSpec::exponential(int n) {
  check_dim(n);
  DistributionSpec s(Family::ExponentialProduct, n);
  s.derive_flags();
  return s;
}

DistributionSpec DistributionSpec::rademacher(int n) {
  check_dim(n);
  DistributionSpec s(Family::RademacherProduct, n);
  s.derive_flags();
  return s;
}

DistributionSpec DistributionSpec::uniform_sphere(int n, RadialLaw radial) {
  check_dim(n);
  switch (radial.kind) {
    case RadialLaw::Kind::Constant: check_positive(radial.radius, "radius"); break;
    case RadialLaw::Kind::Chi: break;
    case RadialLaw::Kind::GeneralizedGamma:
      check_positive(radial.shape, "radial shape");
      check_positive(radial.power, "radial power");
      check_positive(radial.scale, "radial scale");
      break;
  }
  DistributionSpec s(Family::UniformSphere, n);
  s.radial_ = radial;
  s.derive_flags();
  return s;
}

DistributionSpec DistributionSpec::uniform_cube(int n) {
  check_dim(n);
  DistributionSpec s(Family::UniformCube, n);
  s.derive_flags();
  return s;
}

DistributionSpec DistributionSpec::sparse(int n) {
  check_dim(n);
  DistributionSpec s(Family::SparseIsotropic, n);
  s.derive_flags();
  return s;
}

DistributionSpec DistributionSpec::unconditional_product(std::vector<Marginal> marginals) {
  check_dim(static_cast<int>(marginals.size()));
  for (const auto& m : marginals) {
    check_positive(m.scale, "marginal scale");
    if (m.kind == Marginal::Kind::LaplacePower) check_positive(m.power, "marginal power");
  }
  DistributionSpec s(Family::UnconditionalProduct, static_cast<int>(marginals.size()));
  s.marginals_ = std::move(marginals);
  s.derive_flags();
  return s;
}

DistributionSpec DistributionSpec::linear_image(const Eigen::MatrixXd& A, const DistributionSpec& base) {
  if (A.cols() != base.dim()) {
    throw InvalidArgument("linear image: matrix has " + std::to_string(A.cols()) + " columns but base dimension is " +
                          std::to_string(base.dim()));
  }
  if (A.rows() < 1 || A.rows() > A.cols()) throw InvalidArgument("linear image: need 1 <= rows <= columns");
  if (!A.allFinite()) throw InvalidArgument("linear image: matrix has non-finite entries");

  Eigen::MatrixXd M = A;
  const DistributionSpec* root = &base;
  if (base.family() == Family::LinearImage) {
    M = A * base.matrix();
    root = &base.base();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-12 * sv(0)) {
    throw InvalidArgument("linear image: matrix does not have full row rank");
  }

  DistributionSpec s(Family::LinearImage, static_cast<int>(M.rows()));
  s.matrix_ = M;
  s.base_ = std::make_shared<const DistributionSpec>(*root);

  if (M.rows() == M.cols()) {
    std::vector<int> perm(static_cast<std::size_t>(M.rows()), -1);
    std::vector<char> used(static_cast<std::size_t>(M.cols()), 0);
    bool monomial = true;
    for (Eigen::Index i = 0; i < M.rows() && monomial; ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        if (M(i, j) == 0.0) continue;
        if (perm[static_cast<std::size_t>(i)] >= 0 || used[static_cast<std::size_t>(j)]) {
          monomial = false;
          break;
        }
        perm[static_cast<std::size_t>(i)] = static_cast<int>(j);
        used[static_cast<std::size_t>(j)] = 1;
      }
    }
    if (monomial) {
      s.monomial_ = true;
      s.permutation_ = std::move(perm);
    }
  }
  s.derive_flags();
  return s;
}

const DistributionSpec& DistributionSpec::base() const {
  if (!base_) throw InvalidArgument("only LinearImage specs have a base");
  return *base_;
}

void DistributionSpec::derive_flags() {
  Flags f;
  switch (family_) {
    case Family::GaussianIsotropic:
    case Family::ExponentialProduct:
    case Family::UniformCube:
      f = {true, true, true, true, true};
      break;
    case Family::RademacherProduct:
    case Family::SparseIsotropic:
      f = {true, true, false, true, true};
      break;
    case Family::UniformSphere: {
      const double r2 = radial_.moment(2.0, n_);
      f.is_isotropic = std::abs(r2 - n_) <= kIsotropyTolerance * n_;
      f.is_unconditional = true;
      f.is_log_concave = radial_.kind == RadialLaw::Kind::Chi ||
                         (radial_.kind == RadialLaw::Kind::GeneralizedGamma && radial_.shape == n_ &&
                          radial_.power >= 1.0);
      f.has_exact_mixed_moments = true;
      f.has_exact_marginal_moments = true;
      break;
    }
    case Family::UnconditionalProduct: {
      f.is_isotropic = std::all_of(marginals_.begin(), marginals_.end(),
                                   [](const Marginal& m) { return std::abs(m.even_moment(1) - 1.0) <= kIsotropyTolerance; });
      f.is_unconditional = true;
      f.is_log_concave = std::all_of(marginals_.begin(), marginals_.end(), [](const Marginal& m) { return m.log_concave(); });
      f.has_exact_mixed_moments = true;
      f.has_exact_marginal_moments = true;
      break;
    }
    case Family::LinearImage: {
      const Flags& b = base_->flags();
      const Eigen::MatrixXd cov = covariance(*this);
      f.is_isotropic = (cov - Eigen::MatrixXd::Identity(n_, n_)).cwiseAbs().maxCoeff() <= kIsotropyTolerance;
      f.is_unconditional = monomial_ && b.is_unconditional;
      f.is_log_concave = b.is_log_concave;
      f.has_exact_mixed_moments = monomial_ && b.has_exact_mixed_moments;
      const Family bf = base_->family();
      f.has_exact_marginal_moments = (monomial_ && b.has_exact_marginal_moments) ||
                                     bf == Family::GaussianIsotropic || bf == Family::UniformSphere;
      break;
    }
  }
  flags_ = f;
}

std::string DistributionSpec::describe() const {
  std::ostringstream os;
  os << to_string(family_) << "(n=" << n_;
  switch (family_) {
    case Family::UniformSphere:
      os << ", radial=" << to_string(radial_.kind);
      if (radial_.kind == RadialLaw::Kind::Constant) os << "(" << format_double(radial_.radius) << ")";
      if (radial_.kind == RadialLaw::Kind::GeneralizedGamma) {
        os << "(" << format_double(radial_.shape) << "," << format_double(radial_.power) << ","
           << format_double(radial_.scale) << ")";
      }
      break;
    case Family::UnconditionalProduct:
      os << ", marginals=[";
      for (std::size_t i = 0; i < marginals_.size(); ++i) {
        if (i) os << ",";
        os << to_string(marginals_[i].kind) << "(" << format_double(marginals_[i].scale);
        if (marginals_[i].kind == Marginal::Kind::LaplacePower) os << "," << format_double(marginals_[i].power);
        os << ")";
      }
      os << "]";
      break;
    case Family::LinearImage:
      os << ", A=" << matrix_.rows() << "x" << matrix_.cols() << (monomial_ ? " monomial" : "")
         << ", base=" << base_->describe();
      break;
    default: break;
  }
  os << ")";
  return os.str();
}

bool operator==(const DistributionSpec& a, const DistributionSpec& b) {
  if (a.family_ != b.family_ || a.n_ != b.n_) return false;
  switch (a.family_) {
    case Family::UniformSphere: return a.radial_ == b.radial_;
    case Family::UnconditionalProduct: return a.marginals_ == b.marginals_;
    case Family::LinearImage:
      return a.matrix_.rows() == b.matrix_.rows() && a.matrix_.cols() == b.matrix_.cols() &&
             a.matrix_ == b.matrix_ && *a.base_ == *b.base_;
    default: return true;
  }
}

// ---- sampling --------------------------------------------------------------

namespace {

void draw_row(const DistributionSpec& spec, Philox& rng, double* out, std::vector<double>& scratch) {
  const int n = spec.dim();
  switch (spec.family()) {
    case Family::GaussianIsotropic:
      for (int i = 0; i < n; ++i) out[i] = rng.normal();
      return;
    case Family::ExponentialProduct:
      for (int i = 0; i < n; ++i) {
        const double s = rng.sign();
        out[i] = s * std::numbers::sqrt2 * 0.5 * rng.exponential();
      }
      return;
    case Family::RademacherProduct:
      for (int i = 0; i < n; ++i) out[i] = rng.sign();
      return;
    case Family::UniformCube:
      for (int i = 0; i < n; ++i) out[i] = std::numbers::sqrt3 * (2.0 * rng.uniform() - 1.0);
      return;
    case Family::SparseIsotropic: {
      std::fill(out, out + n, 0.0);
      const auto i = rng.below(static_cast<std::uint64_t>(n));
      out[i] = rng.sign() * std::sqrt(static_cast<double>(n));
      return;
    }
    case Family::UnconditionalProduct:
      for (int i = 0; i < n; ++i) out[i] = spec.marginals()[static_cast<std::size_t>(i)].sample(rng);
      return;
    case Family::UniformSphere: {
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (int i = 0; i < n; ++i) {
          out[i] = rng.normal();
          norm2 += out[i] * out[i];
        }
      } while (norm2 == 0.0);
      if (spec.radial().kind == RadialLaw::Kind::Chi) return;  // |g| ~ chi(n) independent of g/|g|
      const double factor = spec.radial().sample(rng, n) / std::sqrt(norm2);
      for (int i = 0; i < n; ++i) out[i] *= factor;
      return;
    }
    case Family::LinearImage: {
      const DistributionSpec& base = spec.base();
      const auto m = static_cast<std::size_t>(base.dim());
      std::vector<double> inner;
      if (scratch.size() < m) scratch.resize(m);
      draw_row(base, rng, scratch.data(), inner);
      Eigen::Map<Eigen::VectorXd>(out, n).noalias() =
          spec.matrix() * Eigen::Map<const Eigen::VectorXd>(scratch.data(), static_cast<Eigen::Index>(m));
      return;
    }
  }
}

constexpr std::int64_t kRowBlock = 512;

}  // namespace

SampleCache::SampleCache(DistributionSpec spec, std::uint64_t seed, RowMatrix data)
    : spec_(std::make_shared<const DistributionSpec>(std::move(spec))),
      seed_(seed),
      data_(std::make_shared<const RowMatrix>(std::move(data))) {
  if (data_->cols() != spec_->dim()) throw InvalidArgument("sample matrix width does not match the dimension");
}

RowMatrix sample_rows(const DistributionSpec& spec, std::uint64_t seed, std::int64_t first, std::int64_t count,
                      int jobs) {
  if (count < 0 || first < 0) throw InvalidArgument("row range must be nonnegative");
  RowMatrix out(count, spec.dim());
  const std::uint64_t row_seed = derive_seed(seed, StreamTag::samples);
  const auto blocks = static_cast<std::size_t>((count + kRowBlock - 1) / kRowBlock);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    std::vector<double> scratch;
    const std::int64_t lo = static_cast<std::int64_t>(b) * kRowBlock;
    const std::int64_t hi = std::min(count, lo + kRowBlock);
    for (std::int64_t r = lo; r < hi; ++r) {
      Philox rng(row_seed, static_cast<std::uint64_t>(first + r));
      draw_row(spec, rng, out.row(r).data(), scratch);
    }
  });
  return out;
}

SampleCache sample(const DistributionSpec& spec, std::int64_t count, std::uint64_t seed, int jobs) {
  if (count < 1) throw InvalidArgument("sample count must be at least 1");
  return SampleCache(spec, seed, sample_rows(spec, seed, 0, count, jobs));
}

// ---- exact moments ---------------------------------------------------------

double marginal_abs_moment(const DistributionSpec& spec, int i, double p) {
  if (i < 0 || i >= spec.dim()) throw InvalidArgument("coordinate index out of range");
  if (p < 0.0) throw InvalidArgument("moment order must be nonnegative");
  if (!spec.flags().has_exact_marginal_moments) {
    throw NoExactOracle("no exact marginal moments for " + spec.describe() + "; use Monte Carlo");
  }
  const int n = spec.dim();
  switch (spec.family()) {
    case Family::GaussianIsotropic: return gaussian_abs_moment(p);
    case Family::ExponentialProduct: return laplace_abs_moment(p);
    case Family::RademacherProduct: return 1.0;
    case Family::UniformCube: return cube_abs_moment(p);
    case Family::SparseIsotropic: return p == 0.0 ? 1.0 : std::pow(static_cast<double>(n), 0.5 * p - 1.0);
    case Family::UnconditionalProduct: return spec.marginals_[static_cast<std::size_t>(i)].abs_moment(p);
    case Family::UniformSphere: return sphere_coordinate_moment(n, p) * spec.radial().moment(p, n);
    case Family::LinearImage: {
      const DistributionSpec& base = spec.base();
      if (spec.monomial_) {
        const int j = spec.permutation_[static_cast<std::size_t>(i)];
        return std::pow(std::abs(spec.matrix_(i, j)), p) * marginal_abs_moment(base, j, p);
      }
      // Gaussian and rotation-invariant bases: <a_i, Y> has the law of |a_i| Y_1.
      return std::pow(spec.matrix_.row(i).norm(), p) * marginal_abs_moment(base, 0, p);
    }
  }
  return 0.0;
}

double mixed_even_moment(const DistributionSpec& spec, const Multiindex& alpha) {
  if (alpha.size() != spec.dim()) throw InvalidArgument("multiindex length does not match the dimension");
  if (!spec.flags().has_exact_mixed_moments) {
    throw NoExactOracle("no exact mixed moments for " + spec.describe() + "; use Monte Carlo");
  }
  const int n = spec.dim();
  const int k = alpha.order();
  switch (spec.family()) {
    case Family::GaussianIsotropic:
    case Family::ExponentialProduct:
    case Family::RademacherProduct:
    case Family::UniformCube:
    case Family::UnconditionalProduct: {
      double r = 1.0;
      for (int i = 0; i < n; ++i) {
        if (alpha[i] == 0) continue;
        r *= marginal_abs_moment(spec, i, 2.0 * alpha[i]);
      }
      return r;
    }
    case Family::SparseIsotropic: {
      if (k == 0) return 1.0;
      int support = 0;
      for (int i = 0; i < n; ++i) support += alpha[i] > 0;
      if (support > 1) return 0.0;
      return ipow(static_cast<double>(n), k - 1);
    }
    case Family::UniformSphere: {
      double r = 1.0;
      for (int i = 0; i < n; ++i) r *= double_factorial_odd(alpha[i]);
      return r / rising_even(n, k) * spec.radial().moment(2.0 * k, n);
    }
    case Family::LinearImage: {
      // X_i = a_i Y_{pi(i)}: E X^{2 alpha} = prod a_i^{2 alpha_i} * E Y^{2 beta}, beta_{pi(i)} = alpha_i.
      std::vector<int> beta(static_cast<std::size_t>(n), 0);
      double scale = 1.0;
      for (int i = 0; i < n; ++i) {
        const int j = spec.permutation_[static_cast<std::size_t>(i)];
        beta[static_cast<std::size_t>(j)] = alpha[i];
        scale *= ipow(spec.matrix_(i, j) * spec.matrix_(i, j), alpha[i]);
      }
      return scale * mixed_even_moment(spec.base(), Multiindex(std::move(beta)));
    }
  }
  return 0.0;
}

Eigen::MatrixXd covariance(const DistributionSpec& spec) {
  const int n = spec.dim();
  switch (spec.family()) {
    case Family::UnconditionalProduct: {
      Eigen::VectorXd d(n);
      for (int i = 0; i < n; ++i) d(i) = spec.marginals()[static_cast<std::size_t>(i)].even_moment(1);
      return d.asDiagonal();
    }
    case Family::UniformSphere:
      return Eigen::MatrixXd::Identity(n, n) * (spec.radial().moment(2.0, n) / n);
    case Family::LinearImage:
      return spec.matrix() * covariance(spec.base()) * spec.matrix().transpose();
    default: return Eigen::MatrixXd::Identity(n, n);
  }
}

Eigen::MatrixXd empirical_covariance(const SampleCache& cache) {
  const auto& X = cache.data();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  C.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  C.triangularView<Eigen::StrictlyUpper>() = C.transpose();
  return C / static_cast<double>(X.rows());
}

DistributionSpec isotropize(const DistributionSpec& spec, const IsotropizeOptions& opts) {
  if (spec.flags().is_isotropic && !opts.force_estimate) return spec;
  Eigen::MatrixXd cov;
  if (opts.force_estimate) {
    const auto cache = sample(spec, opts.estimate_samples, derive_seed(opts.seed, StreamTag::covariance));
    cov = empirical_covariance(cache);
  } else {
    cov = covariance(spec);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw SingularCovariance("covariance eigendecomposition failed");
  const Eigen::VectorXd lambda = eig.eigenvalues();
  const double lo = lambda.minCoeff();
  const double hi = lambda.maxCoeff();
  if (!(lo > 0.0) || hi / lo > opts.condition_threshold) {
    throw SingularCovariance("covariance condition number " + format_double(lo > 0.0 ? hi / lo : INFINITY) +
                             " exceeds threshold " + format_double(opts.condition_threshold));
  }
  const Eigen::MatrixXd W =
      eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  return DistributionSpec::linear_image(W, spec);
}

NormEstimate order_stat_mean(const DistributionSpec& spec, int rank, std::int64_t samples, std::uint64_t seed,
                             int resamples) {
  const int n = spec.dim();
  if (rank < 1 || rank > n) throw InvalidArgument("rank must lie in [1, n]");
  if (samples < 1) throw InvalidArgument("sample count must be at least 1");
  std::vector<double> values(static_cast<std::size_t>(samples));
  constexpr std::int64_t chunk = 1 << 14;
  std::vector<double> row(static_cast<std::size_t>(n));
  for (std::int64_t first = 0; first < samples; first += chunk) {
    const std::int64_t count = std::min(chunk, samples - first);
    const RowMatrix block = sample_rows(spec, seed, first, count);
    for (std::int64_t r = 0; r < count; ++r) {
      for (int i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] = std::abs(block(r, i));
      std::nth_element(row.begin(), row.begin() + (rank - 1), row.end(), std::greater<>());
      values[static_cast<std::size_t>(first + r)] = row[static_cast<std::size_t>(rank - 1)];
    }
  }
  const auto boot = bootstrap_mean(values, derive_seed(seed, StreamTag::bootstrap), resamples);
  NormEstimate e;
  e.value = boot.estimate;
  e.ci_low = boot.low;
  e.ci_high = boot.high;
  e.std_error = boot.std_error;
  e.method = Method::monte_carlo;
  return e;
}

}  // namespace centroidkit
