#include <doctest.h>

#include <cmath>

#include "centroidkit/cover.hpp"
#include "centroidkit/error.hpp"
#include "oracles.hpp"

using namespace centroidkit;

namespace {

NetOptions small_cloud() {
  NetOptions o;
  o.boundary_candidates = 2000;
  o.interior_candidates = 1000;
  return o;
}

}  // namespace

TEST_CASE("ball volumes") {
  CHECK(unit_ball_volume(2) == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK(unit_ball_volume(4) == doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-15));
  for (int n : {1, 3, 7, 20}) {
    CHECK(log_unit_ball_volume(n) == doctest::Approx(oracle::log_ball_volume(n)).epsilon(1e-10));
  }
}

TEST_CASE("greedy_net examples") {
  const auto seg = greedy_net(BodyOracle::segment(0.0, 1.0), 0.25, 1);
  CHECK(seg.count == 2);
  CHECK(seg.achieved_radius <= 0.25 * (1.0 + kCoverSlack));

  for (int n : {1, 2, 5}) {
    CHECK(greedy_net(BodyOracle::euclidean_ball(n), 2.0, 2, small_cloud()).count == 1);
    CHECK(greedy_net(BodyOracle::euclidean_ball(n), 3.5, 2, small_cloud()).count == 1);
  }

  const auto disk = greedy_net(BodyOracle::euclidean_ball(2), 0.5, 3);
  CHECK(disk.count >= 4);
  CHECK(disk.count <= 25);
  CHECK(disk.kind == NetKind::greedy_cover);
  CHECK(static_cast<std::int64_t>(disk.centers.size()) == disk.count);
}

TEST_CASE("cover property on the candidate cloud") {
  const auto body = BodyOracle::cube(3, 1.0);
  const auto net = greedy_net(body, 0.6, 4, small_cloud());
  const RowMatrix cloud = candidate_cloud(body, 2000, 1000, 4);
  for (Eigen::Index r = 0; r < cloud.rows(); ++r) {
    double best = INFINITY;
    for (const auto& c : net.centers) best = std::min(best, (cloud.row(r).transpose() - c).norm());
    REQUIRE(best <= 0.6 * (1.0 + kCoverSlack));
  }
}

TEST_CASE("packing and covering sandwich") {
  const std::vector<BodyOracle> bodies{BodyOracle::euclidean_ball(2), BodyOracle::cube(3, 0.5),
                                       BodyOracle::mp_ball(DistributionSpec::exponential(3), 4.0)};
  for (const auto& body : bodies) {
    for (double eps : {0.1, 0.3, 0.7}) {
      const auto net = greedy_net(body, eps, 5, small_cloud());
      INFO(body.name(), " eps=", eps);
      CHECK(net.separated_2eps <= net.count);
      CHECK(net.count <= net.packing_count);
    }
  }
}

TEST_CASE("monotone in eps on a fixed cloud") {
  const auto body = BodyOracle::mp_ball(DistributionSpec::exponential(3), 3.0);
  const RowMatrix cloud = candidate_cloud(body, 2000, 1000, 6);
  const auto tr = farthest_point_traversal(cloud, 0.05);
  std::int64_t prev = tr.count_for(0.05);
  for (double eps = 0.06; eps < 3.0; eps *= 1.2) {
    const auto c = tr.count_for(eps);
    CHECK(c <= prev);
    prev = c;
  }
  CHECK(tr.count_for(10.0) == 1);
}

TEST_CASE("scale equivariance under matched seeds") {
  const auto body = BodyOracle::mp_ball(DistributionSpec::exponential(2), 4.0);
  for (double lambda : {0.5, 2.0, 3.0}) {
    const auto a = greedy_net(body, 0.2, 7, small_cloud());
    const auto b = greedy_net(body.scaled(lambda), 0.2 * lambda, 7, small_cloud());
    CHECK(a.packing_count == b.packing_count);
    CHECK(a.count == b.count);
  }
}

TEST_CASE("volume lower bounds") {
  const auto cube = volume_lower_bound(BodyOracle::cube(4, 0.5), 0.25, 0, 1);
  CHECK(cube.exact);
  CHECK(cube.value == doctest::Approx(512.0 / (M_PI * M_PI)).epsilon(1e-12));
  CHECK(volume_lower_bound(BodyOracle::euclidean_ball(5), 1.0, 0, 1).value == doctest::Approx(1.0).epsilon(1e-12));

  const double g4 = oracle::gaussian_norm(4.0);
  for (int n : {2, 3}) {
    const auto v = volume_lower_bound(BodyOracle::mp_ball(DistributionSpec::gaussian(n), 4.0), 0.3, 0, 1);
    CHECK(v.value == doctest::Approx(std::pow(g4 * 0.3, -n)).epsilon(1e-9));
  }

  // Monte Carlo volume of a body without a closed form: the M_4 ball of an
  // exponential law is compared against its own exact-volume-free estimate
  // at two seeds.
  const auto body = BodyOracle::mp_ball(DistributionSpec::exponential(2), 4.0);
  const auto a = volume_lower_bound(body, 0.5, 200'000, 2);
  const auto b = volume_lower_bound(body, 0.5, 200'000, 3);
  CHECK_FALSE(a.exact);
  CHECK(a.ci_low <= a.value);
  CHECK(a.value <= a.ci_high);
  CHECK(std::abs(a.value - b.value) <= (a.ci_high - a.ci_low) + (b.ci_high - b.ci_low));
}

TEST_CASE("greedy counts respect volume bounds") {
  struct Case {
    BodyOracle body;
    double eps;
  };
  const std::vector<Case> cases{{BodyOracle::euclidean_ball(2), 0.5},
                                {BodyOracle::euclidean_ball(2), 0.2},
                                {BodyOracle::cube(2, 1.0), 0.3},
                                {BodyOracle::cube(4, 0.5), 0.25},
                                {BodyOracle::mp_ball(DistributionSpec::exponential(2), 4.0), 0.2}};
  for (const auto& c : cases) {
    const auto v = volume_lower_bound(c.body, c.eps, 200'000, 9);
    const auto net = greedy_net(c.body, c.eps, 9);
    const double rel = v.value > 0.0 ? (v.ci_high - v.ci_low) / v.value : 0.0;
    INFO(c.body.name(), " eps=", c.eps);
    CHECK(static_cast<double>(net.count) >= v.value * (1.0 - rel));
  }
}

TEST_CASE("entropy_to_zp_bound") {
  const double e = std::exp(1.0);
  CHECK(entropy_to_zp_bound(9, 4.0, 0.5, 1, 1.0) == doctest::Approx(0.5 * 3.0 + e).epsilon(1e-15));
  CHECK(entropy_to_zp_bound(9, 4.0, 0.5, 54, 2.0) == doctest::Approx(1.5 + 2.0 * e).epsilon(1e-15));
  CHECK(entropy_to_zp_bound(4, 2.0, 0.0, 1000, 1.0) == doctest::Approx(e / 2.0 * std::log(1000.0)).epsilon(1e-14));

  CHECK(default_growth_constant(DistributionSpec::gaussian(4)).value() == 1.0);
  CHECK_FALSE(default_growth_constant(DistributionSpec::sparse(4)).has_value());

  // Gaussian n = 8, p = 4 at eps = 1 / ||g||_4: the bound exceeds the closed
  // form (E||X||_{Z_4}^2)^{1/2} = sqrt(8) / ||g||_4.
  const auto spec = DistributionSpec::gaussian(8);
  const double g4 = oracle::gaussian_norm(4.0);
  const auto net = greedy_net(BodyOracle::mp_ball(spec, 4.0), 1.0 / g4, 10, small_cloud());
  CHECK(entropy_to_zp_bound(spec, 4.0, 1.0 / g4, net) >= std::sqrt(8.0) / g4);
}

TEST_CASE("prop36_check") {
  const double g4 = oracle::gaussian_norm(4.0);
  const auto big = prop36_check(DistributionSpec::gaussian(3), 4.0, 2.0 * 2.0 / (g4 * std::exp(1.0)), 1, small_cloud());
  CHECK(big.net_count == 1);
  CHECK(big.pass);

  const auto g = prop36_check(DistributionSpec::gaussian(6), 4.0, 2.0, 2, small_cloud());
  CHECK(g.radius == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(g.bound == doctest::Approx(std::exp(4.0)).epsilon(1e-15));
  CHECK(g.net_count == 1);
  CHECK(g.pass);
  CHECK_FALSE(g.refuted);

  // The sparse law's M_4 ball is n^{-1/4} B_4^n, which has Euclidean
  // diameter 2; a tiny claimed constant is refuted by a separated set.
  const auto s = prop36_check(DistributionSpec::sparse(8), 4.0, 0.1, 3, small_cloud());
  CHECK_FALSE(s.pass);
  CHECK(s.refuted);
  CHECK(s.certified_lower <= s.net_count);
}
