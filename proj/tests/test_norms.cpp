#include <doctest.h>

#include <cmath>
#include <random>

#include "centroidkit/error.hpp"
#include "centroidkit/norms.hpp"
#include "oracles.hpp"

using namespace centroidkit;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Eigen::VectorXd random_vector(std::mt19937_64& gen, int n) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) t(i) = normal(gen);
  return t;
}

// Empirical (1/N) sum |<t,x_j>|^p, the delta-method standard error of its
// p-th root, and the root itself.
struct Empirical {
  double norm, se;
};

Empirical empirical_norm(const RowMatrix& X, const Eigen::VectorXd& t, double p) {
  const Eigen::ArrayXd v = (X * t).array().abs().pow(p);
  const double mean = v.mean();
  const double sd = std::sqrt((v - mean).square().sum() / static_cast<double>(v.size() - 1));
  const double norm = std::pow(mean, 1.0 / p);
  return {norm, norm / p * sd / mean / std::sqrt(static_cast<double>(v.size()))};
}

}  // namespace

TEST_CASE("mp_norm_mc examples") {
  const auto g = sample(DistributionSpec::gaussian(3), 200'000, 1);
  const auto e1 = vec({1, 0, 0});
  const auto est = mp_norm_mc(g, 2.0, e1);
  CHECK(est.ci_low <= est.value);
  CHECK(est.value <= est.ci_high);
  CHECK(est.value == doctest::Approx(1.0).epsilon(0.01));
  CHECK(est.method == Method::monte_carlo);

  const auto zero = mp_norm_mc(g, 3.0, Eigen::VectorXd::Zero(3));
  CHECK(zero.value == 0.0);
  CHECK(zero.ci_high == 0.0);
  CHECK_THROWS_AS(mp_norm_mc(g, 0.5, e1), InvalidArgument);

  const auto ex = sample(DistributionSpec::exponential(1), 1'000'000, 2);
  const auto m4 = mp_norm_mc(ex, 4.0, vec({1}));
  const double oracle4 = std::pow(oracle::exponential_abs_moment(4.0), 0.25);
  CHECK(oracle4 == doctest::Approx(std::pow(6.0, 0.25)).epsilon(1e-10));
  CHECK(m4.value == doctest::Approx(oracle4).epsilon(0.01));
}

TEST_CASE("mp_norm_mc homogeneity is bit-exact for powers of two") {
  const auto c = sample(DistributionSpec::exponential(4), 10'000, 3);
  const auto t = vec({0.3, -1.2, 0.7, 2.0});
  const double base = mp_norm_value(c, 3.5, t);
  for (double lambda : {2.0, 0.25, -8.0, 1024.0}) {
    CHECK(mp_norm_value(c, 3.5, lambda * t) == std::abs(lambda) * base);
  }
  CHECK(mp_norm_value(c, 3.5, 3.0 * t) == doctest::Approx(3.0 * base).epsilon(1e-14));
}

TEST_CASE("mp_norm_exact_even examples") {
  CHECK(mp_norm_exact_even(DistributionSpec::rademacher(2), 2, vec({1, 1})).value ==
        doctest::Approx(std::pow(8.0, 0.25)).epsilon(1e-14));
  CHECK(mp_norm_exact_even(DistributionSpec::gaussian(2), 2, vec({1, 0})).value ==
        doctest::Approx(std::pow(oracle::gaussian_abs_moment(4.0), 0.25)).epsilon(1e-12));
  const auto t = vec({0.5, -2.0, 1.5});
  std::vector<Marginal> m{Marginal::uniform(1.0), Marginal::exponential(2.0), Marginal::two_point(3.0)};
  const auto prod = DistributionSpec::unconditional_product(m);
  double var = 0.0;
  for (int i = 0; i < 3; ++i) var += t(i) * t(i) * m[static_cast<std::size_t>(i)].even_moment(1);
  const auto k1 = mp_norm_exact_even(prod, 1, t);
  CHECK(k1.value == doctest::Approx(std::sqrt(var)).epsilon(1e-14));
  CHECK(k1.method == Method::exact_even);
  CHECK(k1.ci_low == k1.value);
  CHECK(k1.ci_high == k1.value);

  Eigen::MatrixXd A(2, 2);
  A << 1, 1, 0, 1;
  CHECK_THROWS(mp_norm_exact_even(DistributionSpec::linear_image(A, DistributionSpec::gaussian(2)), 2, vec({1, 0})));
}

TEST_CASE("exact and Monte Carlo norms agree within 3 standard errors") {
  const int n = 4;
  const std::vector<DistributionSpec> families{
      DistributionSpec::gaussian(n),      DistributionSpec::exponential(n), DistributionSpec::rademacher(n),
      DistributionSpec::uniform_cube(n),  DistributionSpec::sparse(n),      DistributionSpec::uniform_sphere(n),
  };
  std::mt19937_64 gen(17);
  std::vector<Eigen::VectorXd> ts;
  for (int j = 0; j < 20; ++j) ts.push_back(random_vector(gen, n));
  // 360 comparisons: under the null about one lands beyond 3 SE, so count
  // those and bound the count by the binomial tail, with a hard cap at 5 SE.
  int beyond = 0;
  int total = 0;
  for (const auto& spec : families) {
    const auto cache = sample(spec, 1'000'000, 99);
    for (int k = 1; k <= 3; ++k) {
      for (const auto& t : ts) {
        const double exact = mp_norm_exact_even(spec, k, t).value;
        const auto mc = empirical_norm(cache.data(), t, 2.0 * k);
        INFO(spec.describe(), " k=", k);
        CHECK(std::abs(mc.norm - exact) <= 5.0 * mc.se);
        beyond += std::abs(mc.norm - exact) > 3.0 * mc.se;
        ++total;
      }
    }
  }
  CHECK(total == 360);
  // P(Binomial(360, 0.0027) >= 6) < 1e-3.
  CHECK(beyond <= 5);
  // The bootstrap interval of mp_norm_mc tracks the same standard error.
  const auto cache = sample(DistributionSpec::exponential(n), 1'000'000, 99);
  const auto est = mp_norm_mc(cache, 6.0, ts[0]);
  const auto mc = empirical_norm(cache.data(), ts[0], 6.0);
  CHECK(est.value == doctest::Approx(mc.norm).epsilon(1e-12));
  CHECK(est.std_error == doctest::Approx(mc.se).epsilon(0.25));
  CHECK(std::abs(est.value - mp_norm_exact_even(cache.spec(), 3, ts[0]).value) <= 3.0 * est.std_error);
}

TEST_CASE("triangle inequality and homogeneity") {
  std::mt19937_64 gen(5);
  const auto spec = DistributionSpec::exponential(3);
  const auto cache = sample(spec, 50'000, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_vector(gen, 3), b = random_vector(gen, 3);
    for (int k = 1; k <= 3; ++k) {
      const double na = mp_norm_exact_even(spec, k, a).value;
      const double nb = mp_norm_exact_even(spec, k, b).value;
      CHECK(mp_norm_exact_even(spec, k, a + b).value <= (na + nb) * (1.0 + 1e-9));
      CHECK(mp_norm_exact_even(spec, k, -2.5 * a).value == doctest::Approx(2.5 * na).epsilon(1e-9));
    }
    // The empirical norm is an L_p norm on the sample, so it is subadditive exactly.
    for (double p : {1.0, 2.5, 7.0}) {
      CHECK(mp_norm_value(cache, p, a + b) <= (mp_norm_value(cache, p, a) + mp_norm_value(cache, p, b)) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("monotone in p on a fixed cache") {
  std::mt19937_64 gen(8);
  const auto cache = sample(DistributionSpec::gaussian(5), 20'000, 9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto t = random_vector(gen, 5);
    double prev = 0.0;
    for (double p : {1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0, 31.0, 33.0, 64.0, 128.0}) {
      const double v = mp_norm_value(cache, p, t);
      CHECK(v >= prev * (1.0 - 1e-12));
      prev = v;
    }
  }
}

TEST_CASE("large p is accumulated without overflow") {
  const auto cache = sample(DistributionSpec::exponential(2), 10'000, 4);
  const auto t = vec({1e100, 1e100});
  const double v = mp_norm_value(cache, 200.0, t);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(1e100 * mp_norm_value(cache, 200.0, vec({1, 1}))).epsilon(1e-12));
}

TEST_CASE("gradient") {
  const auto cache = sample(DistributionSpec::exponential(3), 20'000, 10);
  const auto t = vec({0.4, -1.1, 0.9});

  // p = 2: C t / ||t||_C with C the empirical second-moment matrix.
  const Eigen::MatrixXd C = empirical_covariance(cache);
  const Eigen::VectorXd g2 = mp_norm_gradient(cache, 2.0, t);
  const Eigen::VectorXd expect = C * t / std::sqrt(t.dot(C * t));
  CHECK((g2 - expect).norm() <= 1e-10 * expect.norm());

  CHECK((mp_norm_gradient(cache, 4.0, 2.0 * t) - mp_norm_gradient(cache, 4.0, t)).norm() <= 1e-12);
  CHECK(mp_norm_gradient(cache, 4.0, t).dot(t) == doctest::Approx(mp_norm_value(cache, 4.0, t)).epsilon(1e-12));
  CHECK_THROWS(mp_norm_gradient(cache, 4.0, Eigen::VectorXd::Zero(3)));

  std::mt19937_64 gen(11);
  for (double p : {2.0, 3.0, 4.0, 8.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = random_vector(gen, 3);
      const Eigen::VectorXd g = mp_norm_gradient(cache, p, x);
      Eigen::VectorXd fd(3);
      const double h = 1e-6 * x.norm();
      for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd up = x, down = x;
        up(i) += h;
        down(i) -= h;
        fd(i) = (mp_norm_value(cache, p, up) - mp_norm_value(cache, p, down)) / (2.0 * h);
      }
      INFO("p=", p);
      CHECK((g - fd).norm() <= 1e-4 * g.norm());
      CHECK(g.dot(x) == doctest::Approx(mp_norm_value(cache, p, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("rademacher_norm_exact") {
  CHECK(rademacher_norm_exact(vec({1, 0, 0}), 3.7).value == doctest::Approx(1.0).epsilon(1e-15));
  const auto a = vec({0.3, -1.4, 2.2, 0.1, 0.9});
  CHECK(rademacher_norm_exact(a, 2.0).value == doctest::Approx(a.norm()).epsilon(1e-14));
  const auto r = rademacher_norm_exact(vec({1, 1}), 4.0);
  CHECK(r.value == doctest::Approx(std::pow(8.0, 0.25)).epsilon(1e-15));
  CHECK(r.method == Method::brute_force);
  CHECK_THROWS(rademacher_norm_exact(Eigen::VectorXd::Ones(kRademacherMaxDim + 1), 2.0));

  // Even p matches the multinomial expansion.
  CHECK(rademacher_norm_exact(a, 6.0).value ==
        doctest::Approx(mp_norm_exact_even(DistributionSpec::rademacher(5), 3, a).value).epsilon(1e-12));
}

TEST_CASE("hitczenko_surrogate") {
  CHECK(hitczenko_surrogate(vec({1, 0, 0, 0}), 4.0) == 1.0);
  CHECK(hitczenko_surrogate(vec({1, 1, 0, 0, 0}), 4.0) == 2.0);
  CHECK(hitczenko_surrogate(Eigen::VectorXd::Ones(8), 2.0) ==
        doctest::Approx(2.0 + std::sqrt(2.0) * std::sqrt(6.0)).epsilon(1e-15));
  CHECK(hitczenko_surrogate(vec({-3, 1, 2}), 1.0) == doctest::Approx(3.0 + std::sqrt(5.0)).epsilon(1e-15));
}

TEST_CASE("hitczenko equivalence constant") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> dim(1, 14);
  std::uniform_int_distribution<int> order(1, 10);
  double c = 1.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(gen);
    const double p = order(gen);
    const auto a = random_vector(gen, n);
    const double ratio = rademacher_norm_exact(a, p).value / hitczenko_surrogate(a, p);
    c = std::max({c, ratio, 1.0 / ratio});
  }
  MESSAGE("empirical Hitczenko constant ", c);
  CHECK(c <= 8.0);
}

TEST_CASE("moment_growth_ratio") {
  const auto g = sample(DistributionSpec::gaussian(2), 1'000'000, 12);
  const auto e1 = vec({1, 0});
  const double rg = moment_growth_ratio(g, e1, 4.0, 2.0);
  CHECK(rg == doctest::Approx(std::pow(3.0, 0.25)).epsilon(0.01));
  CHECK(rg <= std::sqrt(2.0));
  const auto ex = sample(DistributionSpec::exponential(2), 1'000'000, 13);
  const double re = moment_growth_ratio(ex, e1, 4.0, 2.0);
  CHECK(re == doctest::Approx(std::pow(6.0, 0.25)).epsilon(0.02));
  CHECK(re <= 2.0);
  CHECK(moment_growth_ratio(ex, vec({0.3, 0.8}), 3.0, 3.0) == 1.0);
  CHECK_THROWS(moment_growth_ratio(ex, Eigen::VectorXd::Zero(2), 4.0, 2.0));
}
