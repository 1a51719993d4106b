#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "centroidkit/combi.hpp"
#include "centroidkit/error.hpp"

using namespace centroidkit;

namespace {

// All n-tuples of {0..k} summing to k, by brute force.
std::set<std::vector<int>> brute_multiindices(int n, int k) {
  std::set<std::vector<int>> out;
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  while (true) {
    int sum = 0;
    for (int v : a) sum += v;
    if (sum == k) out.insert(a);
    int i = 0;
    while (i < n && a[static_cast<std::size_t>(i)] == k) a[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
    ++a[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace

TEST_CASE("enumeration examples") {
  auto one = enumerate_multiindices(1, 5);
  REQUIRE(one.size() == 1);
  CHECK(one[0][0] == 5);

  auto two = enumerate_multiindices(2, 2);
  REQUIRE(two.size() == 3);
  CHECK(two[0] == Multiindex({2, 0}));
  CHECK(two[1] == Multiindex({1, 1}));
  CHECK(two[2] == Multiindex({0, 2}));

  CHECK(enumerate_multiindices(4, 3).size() == 20);
  CHECK(enumerate_multiindices(3, 0).size() == 1);
}

TEST_CASE("enumeration matches brute force and visits each index once") {
  for (int n = 1; n <= 5; ++n) {
    for (int k = 0; k <= 4; ++k) {
      const auto brute = brute_multiindices(n, k);
      std::set<std::vector<int>> seen;
      for (const auto& a : enumerate_multiindices(n, k)) {
        std::vector<int> v(a.entries().begin(), a.entries().end());
        CHECK(a.order() == k);
        CHECK(seen.insert(v).second);
      }
      CHECK(seen == brute);
    }
  }
}

TEST_CASE("enumeration count equals C(n+k-1,k) for n<=12, k<=8") {
  for (int n = 1; n <= 12; ++n) {
    for (int k = 0; k <= 8; ++k) {
      std::uint64_t count = 0;
      for (MultiindexStream s(n, k); !s.done(); s.advance()) ++count;
      CHECK(BigInt(static_cast<unsigned long>(count)) == binomial(static_cast<unsigned long>(n + k - 1), static_cast<unsigned long>(k)));
      CHECK(multiindex_count(n, k) == binomial(static_cast<unsigned long>(n + k - 1), static_cast<unsigned long>(k)));
    }
  }
}

TEST_CASE("multinomials") {
  CHECK(multinomial(Multiindex({2, 1, 1})) == 12);
  CHECK(multinomial(Multiindex({0, 0})) == 1);
  CHECK(multinomial_doubled(Multiindex({1, 1})) == 6);  // 4!/(2!2!)
  CHECK_THROWS_AS(Multiindex({1, -1}), InvalidArgument);
}

TEST_CASE("summand identity holds exactly for n<=8, k<=6") {
  for (int n = 1; n <= 8; ++n) {
    for (int k = 1; k <= 6; ++k) {
      for (MultiindexStream s(n, k); !s.done(); s.advance()) {
        REQUIRE(c2k_term_direct(s.current()) == c2k_term_product(s.current()));
      }
    }
  }
}

TEST_CASE("c2k examples") {
  for (int k = 1; k <= 6; ++k) {
    const auto c = c2k(1, k);
    CHECK(c.exact == 1);
    CHECK(c.value == doctest::Approx(1.0).epsilon(1e-15));
  }
  const auto c22 = c2k(2, 2);
  CHECK(c22.exact == ExactRational(8, 3));
  CHECK(c22.value == doctest::Approx(std::pow(8.0 / 3.0, 0.25)).epsilon(1e-15));
  for (int n = 1; n <= 12; ++n) {
    const auto c = c2k(n, 1);
    CHECK(c.exact == n);
    CHECK(c.value == doctest::Approx(std::sqrt(static_cast<double>(n))).epsilon(1e-15));
  }
  CHECK(c2k_direct(5, 4) == c2k(5, 4).exact);
}

TEST_CASE("c2k bounds examples") {
  const auto b11 = c2k_bounds(1, 1);
  CHECK(b11.lower == ExactRational(1, 4));
  CHECK(b11.upper == 4);
  const auto b22 = c2k_bounds(2, 2);
  CHECK(b22.lower == ExactRational(3, 16));
  CHECK(b22.upper == 48);
  CHECK(b22.lower <= ExactRational(8, 3));
  CHECK(ExactRational(8, 3) <= b22.upper);
  const auto b103 = c2k_bounds(10, 3);
  CHECK(b103.lower == ExactRational(55, 16));
  CHECK(b103.upper == 14080);
}

TEST_CASE("sandwich and asymptotic shape over n<=10, k<=10") {
  for (int n = 1; n <= 10; ++n) {
    for (int k = 1; k <= 10; ++k) {
      const auto c = c2k(n, k);
      const auto b = c2k_bounds(n, k);
      CHECK(b.lower <= c.exact);
      CHECK(c.exact <= b.upper);
      CHECK(root_of(b.lower, 2 * k) <= c.value * (1 + 1e-12));
      CHECK(c.value <= root_of(b.upper, 2 * k) * (1 + 1e-12));
      const double shape = c.value / std::sqrt((n + k) / static_cast<double>(k));
      CHECK(shape >= 0.25);
      CHECK(shape <= 4.0);
    }
  }
}

TEST_CASE("resource guard") {
  CHECK_THROWS_AS(c2k(40, 40), ResourceGuard);
  CHECK_THROWS_AS(c2k(3, 2, 5), ResourceGuard);
}

TEST_CASE("log and root of big numbers") {
  const BigInt big = binomial(200, 100);
  CHECK(log_of(big) == doctest::Approx(std::lgamma(201.0) - 2 * std::lgamma(101.0)).epsilon(1e-12));
  CHECK(root_of(ExactRational(81, 16), 4) == doctest::Approx(1.5).epsilon(1e-15));
}
