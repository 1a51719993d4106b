#include <doctest.h>

#include <cmath>

#include "centroidkit/error.hpp"
#include "centroidkit/sudakov.hpp"
#include "oracles.hpp"

using namespace centroidkit;

namespace {

SudakovBudgets light() {
  SudakovBudgets b;
  b.samples = 10'000;
  b.net.boundary_candidates = 2000;
  b.net.interior_candidates = 1000;
  return b;
}

}  // namespace

TEST_CASE("index sets") {
  CHECK(IndexSet::cube(4, 0.5).diameter() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(IndexSet::ball(3, 2.0).diameter() == 4.0);
  CHECK_THROWS_AS(IndexSet::finite(RowMatrix(0, 3)), InvalidArgument);
  CHECK(IndexSet::cube(3, 1.0).scaled(2.0).radius() == 2.0);
}

TEST_CASE("sparse law: every supremum over the cube equals 1") {
  for (int n : {4, 16, 64}) {
    const auto spec = DistributionSpec::sparse(n);
    const auto T = IndexSet::cube(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const auto rows = sample(spec, 2000, 1);
    for (Eigen::Index r = 0; r < rows.count(); ++r) {
      REQUIRE(sup_of_realization(T, rows.data().row(r).transpose()) == 1.0);
    }
    const auto est = sup_over_set(spec, T, 10'000, 2);
    CHECK(est.value == 1.0);
    CHECK(est.ci_low == 1.0);
    CHECK(est.ci_high == 1.0);
  }
}

TEST_CASE("two-point and single-coordinate sets") {
  RowMatrix pm(2, 2);
  pm << 1, 1, -1, -1;
  const auto est = sup_over_set(DistributionSpec::rademacher(2), IndexSet::finite(pm), 100'000, 3);
  CHECK(std::abs(est.value - 1.0) <= 3.0 * est.std_error + 1e-15);

  RowMatrix ex(2, 3);
  ex << 0.3, -1.0, 2.0, -0.3, 1.0, -2.0;
  const Eigen::Vector3d s(0.3, -1.0, 2.0);
  const auto spec = DistributionSpec::gaussian(3);
  const auto e = sup_over_set(spec, IndexSet::finite(ex), 200'000, 4);
  const double exact = s.norm() * oracle::gaussian_abs_moment(1.0);
  CHECK(std::abs(e.value - exact) <= 3.0 * e.std_error);

  RowMatrix e1 = RowMatrix::Zero(2, 4);
  e1(0, 0) = 1.0;
  e1(1, 0) = -1.0;
  CHECK(sup_over_set(DistributionSpec::rademacher(4), IndexSet::finite(e1), 1000, 5).value == 1.0);
}

TEST_CASE("gaussian ball supremum is the chi mean") {
  const auto est = sup_over_set(DistributionSpec::gaussian(16), IndexSet::ball(16, 1.0), 100'000, 6);
  const double chi = oracle::chi_mean(16);
  CHECK(chi == doctest::Approx(std::sqrt(2.0) * std::tgamma(8.5) / std::tgamma(8.0)).epsilon(1e-10));
  CHECK(std::abs(est.value - chi) <= 3.0 * est.std_error);
  CHECK(est.ci_low <= est.value);

  const auto rep = minoration_constant_lower(DistributionSpec::gaussian(16), IndexSet::ball(16, 1.0),
                                             default_eps_grid(2.0), light(), 7);
  MESSAGE("gaussian ball cx_lower ", rep.cx_lower);
  CHECK(rep.cx_lower > 0.0);
  CHECK(rep.cx_lower <= 10.0);
}

TEST_CASE("scaling the index set scales the supremum") {
  const auto spec = DistributionSpec::exponential(3);
  RowMatrix pts(3, 3);
  pts << 1, 0, 2, -1, 1, 0, 0.5, 0.5, -3;
  for (const auto& T : {IndexSet::cube(3, 0.7), IndexSet::ball(3, 1.3), IndexSet::finite(pts)}) {
    const double base = sup_over_set(spec, T, 5000, 8).value;
    CHECK(sup_over_set(spec, T.scaled(2.0), 5000, 8).value == 2.0 * base);
    CHECK(sup_over_set(spec, T.scaled(3.3), 5000, 8).value == doctest::Approx(3.3 * base).epsilon(1e-13));
  }
}

TEST_CASE("entropy profile") {
  const auto T = IndexSet::cube(4, 0.5);
  const auto far = entropy_lower(T, 1.01 * T.diameter(), 1, light());
  CHECK(far.log_n_lower == 0.0);
  const auto grid = default_eps_grid(2.0);
  REQUIRE(grid.size() == 24);
  CHECK(grid.front() == doctest::Approx(2e-3).epsilon(1e-12));
  CHECK(grid.back() == doctest::Approx(2.0).epsilon(1e-12));

  const auto rep = minoration_constant_lower(DistributionSpec::rademacher(4), T, {1.5, 3.0, 10.0}, light(), 2);
  REQUIRE(rep.profile.size() == 3);
  CHECK(rep.profile[1].contribution == 0.0);
  CHECK(rep.profile[2].contribution == 0.0);
  CHECK(rep.cx_lower >= 0.0);

  RowMatrix zero = RowMatrix::Zero(2, 3);
  CHECK_THROWS(minoration_constant_lower(DistributionSpec::gaussian(3), IndexSet::finite(zero), {0.1}, light(), 3));
}

TEST_CASE("sparse minoration constant grows like sqrt(n)") {
  std::vector<double> cx;
  for (int n : {16, 64}) {
    const auto spec = DistributionSpec::sparse(n);
    const auto T = IndexSet::cube(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const auto rep = minoration_constant_lower(spec, T, default_eps_grid(T.diameter()), light(), 4);
    const double optimum = oracle::sparse_volume_optimum(n);
    INFO("n=", n, " cx_lower=", rep.cx_lower, " optimum=", optimum);
    CHECK(rep.cx_lower <= optimum * (1.0 + 1e-9));
    CHECK(rep.cx_lower >= 0.95 * optimum);
    CHECK(rep.cx_lower >= 0.2 * std::sqrt(static_cast<double>(n)));
    cx.push_back(rep.cx_lower);
  }
  CHECK(oracle::sparse_volume_optimum(16) == doctest::Approx(0.9389400).epsilon(1e-6));
  CHECK(oracle::sparse_volume_optimum(64) == doctest::Approx(1.7307447).epsilon(1e-6));
  CHECK(cx[1] / cx[0] >= 1.5);
}

TEST_CASE("M_p ball suprema match the dual-norm first moment") {
  const auto spec = DistributionSpec::exponential(3);
  auto budgets = light();
  const auto est = sup_over_set(spec, IndexSet::mp_ball(spec, 4.0), 400, 9, budgets);
  const auto rep = zp_moment(spec, 4.0, 1.0, 400, budgets.dual, 10);
  CHECK(std::abs(est.value - rep.estimate.value) <=
        (est.ci_high - est.ci_low) + (rep.estimate.ci_high - rep.estimate.ci_low));
}

TEST_CASE("unconditional minoration ratio") {
  RowMatrix e1 = RowMatrix::Zero(2, 4);
  e1(0, 0) = 1.0;
  e1(1, 0) = -1.0;
  const auto single = unconditional_minoration_ratio(DistributionSpec::rademacher(4), IndexSet::finite(e1), light(), 1);
  CHECK(single.report.sup_estimate.value == 1.0);
  CHECK(single.min_first_moment == 1.0);
  CHECK(single.ratio < 1.0);

  for (int n : {4, 16, 64}) {
    const auto T = IndexSet::cube(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const auto r = unconditional_minoration_ratio(DistributionSpec::rademacher(n), T, light(), 2);
    CHECK(r.report.sup_estimate.value == doctest::Approx(std::sqrt(static_cast<double>(n))).epsilon(1e-12));
    CHECK(r.ratio <= 1.0);
    const auto e = unconditional_minoration_ratio(DistributionSpec::exponential(n), T, light(), 3);
    CHECK(std::isfinite(e.ratio));
    CHECK(e.min_first_moment == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  }
  Eigen::MatrixXd shear(2, 2);
  shear << 1, 1, 0, 1;
  const auto sheared = DistributionSpec::linear_image(shear, DistributionSpec::exponential(2));
  CHECK_THROWS_AS(unconditional_minoration_ratio(sheared, IndexSet::cube(2, 1.0), light(), 1), InvalidArgument);
}
