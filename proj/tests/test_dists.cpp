#include <doctest.h>

#include <cmath>

#include "centroidkit/dists.hpp"
#include "centroidkit/error.hpp"
#include "centroidkit/rng.hpp"
#include "oracles.hpp"

using namespace centroidkit;

namespace {

Multiindex mi(std::vector<int> a) { return Multiindex(std::move(a)); }

std::vector<DistributionSpec> exact_families(int n) {
  return {DistributionSpec::gaussian(n),     DistributionSpec::exponential(n),
          DistributionSpec::rademacher(n),   DistributionSpec::uniform_sphere(n),
          DistributionSpec::uniform_cube(n), DistributionSpec::sparse(n),
          DistributionSpec::uniform_sphere(n, RadialLaw::chi())};
}

}  // namespace

TEST_CASE("philox streams are reproducible and distinct") {
  Philox a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  CHECK(derive_seed(1, StreamTag::samples) != derive_seed(1, StreamTag::outer));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
}

TEST_CASE("sample supports") {
  const auto rad = sample(DistributionSpec::rademacher(3), 8, 0);
  for (Eigen::Index i = 0; i < rad.data().size(); ++i) CHECK(std::abs(rad.data().data()[i]) == 1.0);

  const auto sp = sample(DistributionSpec::sparse(4), 100, 1);
  for (Eigen::Index r = 0; r < 100; ++r) {
    int nonzero = 0;
    for (int c = 0; c < 4; ++c) {
      const double v = sp.data()(r, c);
      if (v != 0.0) {
        ++nonzero;
        CHECK(std::abs(v) == 2.0);
      }
    }
    CHECK(nonzero == 1);
  }
  CHECK_THROWS_AS(sample(DistributionSpec::gaussian(2), 0, 0), InvalidArgument);
}

TEST_CASE("gaussian covariance shrinks toward identity") {
  const auto spec = DistributionSpec::gaussian(16);
  const double err5 = (empirical_covariance(sample(spec, 100'000, 7)) - Eigen::MatrixXd::Identity(16, 16))
                          .cwiseAbs()
                          .maxCoeff();
  const double err6 = (empirical_covariance(sample(spec, 1'000'000, 7)) - Eigen::MatrixXd::Identity(16, 16))
                          .cwiseAbs()
                          .maxCoeff();
  CHECK(err5 < 0.05);
  CHECK(err6 < err5);
}

TEST_CASE("determinism and slicing") {
  const auto spec = DistributionSpec::exponential(5);
  const auto a = sample(spec, 3000, 11, 1);
  const auto b = sample(spec, 3000, 11, 4);
  CHECK(a.data() == b.data());
  const RowMatrix slice = sample_rows(spec, 11, 1000, 700);
  CHECK(slice == a.data().middleRows(1000, 700));
  CHECK(sample(spec, 10, 12).data() != a.data().topRows(10));
}

TEST_CASE("marginal moments against quadrature") {
  const auto ex = DistributionSpec::exponential(3);
  CHECK(marginal_abs_moment(ex, 1, 2.0) == 1.0);
  CHECK(marginal_abs_moment(ex, 0, 4.0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(marginal_abs_moment(ex, 0, 4.0) == doctest::Approx(oracle::exponential_abs_moment(4.0)).epsilon(1e-10));
  CHECK(marginal_abs_moment(ex, 2, 3.3) == doctest::Approx(oracle::exponential_abs_moment(3.3)).epsilon(1e-10));

  const auto g = DistributionSpec::gaussian(2);
  for (double p : {1.0, 2.5, 4.0, 7.0}) {
    CHECK(marginal_abs_moment(g, 0, p) == doctest::Approx(oracle::gaussian_abs_moment(p)).epsilon(1e-10));
  }
  CHECK(marginal_abs_moment(DistributionSpec::rademacher(4), 3, 5.5) == 1.0);

  for (int n : {3, 8}) {
    const auto s = DistributionSpec::uniform_sphere(n);
    CHECK(marginal_abs_moment(s, 0, 2.0) == doctest::Approx(1.0 / n).epsilon(1e-14));
    for (double p : {3.0, 4.0, 8.0}) {
      CHECK(marginal_abs_moment(s, 1, p) == doctest::Approx(oracle::sphere_marginal_moment(n, p)).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(marginal_abs_moment(g, 2, 2.0), InvalidArgument);
}

TEST_CASE("mixed even moments") {
  CHECK(mixed_even_moment(DistributionSpec::exponential(2), mi({1, 1})) == 1.0);
  CHECK(mixed_even_moment(DistributionSpec::gaussian(3), mi({2, 0, 0})) ==
        doctest::Approx(oracle::gaussian_abs_moment(4.0)).epsilon(1e-12));
  CHECK(mixed_even_moment(DistributionSpec::uniform_sphere(3), mi({1, 1, 0})) == doctest::Approx(1.0 / 15.0));

  // Monte Carlo oracle for the sphere value with 10^7 draws.
  const auto sphere = DistributionSpec::uniform_sphere(3);
  double acc = 0.0;
  const std::int64_t total = 10'000'000, chunk = 1'000'000;
  for (std::int64_t first = 0; first < total; first += chunk) {
    const RowMatrix rows = sample_rows(sphere, 5, first, chunk);
    acc += (rows.col(0).array().square() * rows.col(1).array().square()).sum();
  }
  CHECK(acc / total == doctest::Approx(1.0 / 15.0).epsilon(0.01));
}

TEST_CASE("Monte Carlo agrees with exact mixed moments within 3 standard errors") {
  const std::int64_t N = 1'000'000;
  for (const auto& spec : exact_families(4)) {
    const auto cache = sample(spec, N, 2024);
    const auto& X = cache.data();
    for (int k = 1; k <= 3; ++k) {
      for (const auto& a : enumerate_multiindices(4, k)) {
        Eigen::ArrayXd prod = Eigen::ArrayXd::Ones(N);
        for (int i = 0; i < 4; ++i) {
          if (a[i] > 0) prod *= X.col(i).array().pow(2 * a[i]);
        }
        const double mean = prod.mean();
        const double se = std::sqrt((prod - mean).square().sum() / (N - 1) / N);
        const double exact = mixed_even_moment(spec, a);
        INFO(spec.describe(), " alpha order ", k);
        CHECK(std::abs(mean - exact) <= 3.0 * se + 1e-12 * exact);
      }
    }
  }
}

TEST_CASE("flags") {
  const auto sp = DistributionSpec::sparse(5);
  CHECK(sp.flags().is_isotropic);
  CHECK(sp.flags().is_unconditional);
  CHECK_FALSE(sp.flags().is_log_concave);
  CHECK(DistributionSpec::exponential(3).flags().is_log_concave);
  CHECK(DistributionSpec::uniform_sphere(4, RadialLaw::chi()).flags().is_isotropic);
  CHECK_FALSE(DistributionSpec::uniform_sphere(4).flags().is_isotropic);
  Eigen::MatrixXd A(2, 2);
  A << 1, 1, 0, 1;
  const auto img = DistributionSpec::linear_image(A, DistributionSpec::exponential(2));
  CHECK_FALSE(img.flags().is_unconditional);
  CHECK_FALSE(img.flags().is_isotropic);
}

TEST_CASE("sparse law is exactly isotropic") {
  for (int n : {1, 3, 16}) {
    // Atoms +-sqrt(n) e_i with mass 1/(2n) each: E X_i^2 = 2 * n / (2n) = 1 and
    // off-diagonal products vanish atom by atom.
    ExactRational mass(1, 2 * n);
    mass.canonicalize();
    CHECK(2 * n * mass == 1);
    CHECK(covariance(DistributionSpec::sparse(n)) == Eigen::MatrixXd::Identity(n, n));
  }
}

TEST_CASE("isotropize") {
  Eigen::MatrixXd D = Eigen::Vector2d(2.0, 1.0).asDiagonal();
  const auto img = DistributionSpec::linear_image(D, DistributionSpec::gaussian(2));
  const auto iso = isotropize(img);
  CHECK((covariance(iso) - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK(iso.flags().is_isotropic);

  const auto g = DistributionSpec::gaussian(3);
  CHECK(isotropize(g) == g);

  Eigen::MatrixXd R(2, 2);
  R << 1, 2, 2, 4;
  CHECK_THROWS(isotropize(DistributionSpec::linear_image(R, DistributionSpec::gaussian(2))));

  Eigen::MatrixXd A(3, 3);
  A << 2, 1, 0, 0, 1, 3, 1, 0, 1;
  const auto once = isotropize(DistributionSpec::linear_image(A, DistributionSpec::exponential(3)));
  const auto twice = isotropize(once);
  CHECK((covariance(twice) - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-10);

  IsotropizeOptions est;
  est.force_estimate = true;
  est.seed = 3;
  const auto approx = isotropize(DistributionSpec::linear_image(A, DistributionSpec::exponential(3)), est);
  CHECK((covariance(approx) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("order statistics") {
  const auto r = order_stat_mean(DistributionSpec::rademacher(5), 3, 1000, 1);
  CHECK(r.value == 1.0);
  CHECK(r.ci_low == 1.0);
  CHECK(r.ci_high == 1.0);

  const auto g = order_stat_mean(DistributionSpec::gaussian(2), 2, 400'000, 2);
  const double oracle_min = oracle::gaussian_min_of_two();
  CHECK(g.ci_low <= oracle_min * 1.002);
  CHECK(g.ci_high >= oracle_min * 0.998);
  CHECK(g.value == doctest::Approx(oracle_min).epsilon(0.01));

  const auto e = order_stat_mean(DistributionSpec::exponential(16), 8, 100'000, 3);
  const auto e_ref = order_stat_mean(DistributionSpec::exponential(16), 8, 1'000'000, 4);
  CHECK(e.value >= 0.2);
  CHECK(e.value == doctest::Approx(e_ref.value).epsilon(0.02));
  CHECK_THROWS_AS(order_stat_mean(DistributionSpec::gaussian(3), 4, 10, 1), InvalidArgument);
}
