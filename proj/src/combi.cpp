#include "centroidkit/combi.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "centroidkit/error.hpp"

namespace centroidkit {

Multiindex::Multiindex(std::vector<int> entries) : entries_(std::move(entries)) {
  for (int a : entries_) {
    if (a < 0) throw InvalidArgument("multiindex entries must be nonnegative");
  }
  order_ = std::accumulate(entries_.begin(), entries_.end(), 0);
}

MultiindexStream::MultiindexStream(int n, int k) {
  if (n < 1) throw InvalidArgument("multiindex length must be >= 1");
  if (k < 0) throw InvalidArgument("multiindex order must be >= 0");
  current_.entries_.assign(static_cast<std::size_t>(n), 0);
  current_.entries_[0] = k;
  current_.order_ = k;
}

void MultiindexStream::advance() {
  // Colex successor: let j be the first nonzero coordinate. If j is the last
  // coordinate we are done; otherwise move one unit into j+1 and put the
  // remaining alpha_j - 1 units into coordinate 0.
  auto& e = current_.entries_;
  const int n = static_cast<int>(e.size());
  int j = 0;
  while (j < n && e[static_cast<std::size_t>(j)] == 0) ++j;
  if (j >= n - 1) {
    done_ = true;
    return;
  }
  const int rest = e[static_cast<std::size_t>(j)] - 1;
  e[static_cast<std::size_t>(j)] = 0;
  e[static_cast<std::size_t>(j + 1)] += 1;
  e[0] = rest;
}

std::vector<Multiindex> enumerate_multiindices(int n, int k) {
  std::vector<Multiindex> out;
  for (MultiindexStream s(n, k); !s.done(); s.advance()) out.push_back(s.current());
  return out;
}

BigInt binomial(unsigned long n, unsigned long k) {
  BigInt r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

BigInt multiindex_count(int n, int k) {
  if (n < 1 || k < 0) throw InvalidArgument("multiindex_count needs n >= 1, k >= 0");
  return binomial(static_cast<unsigned long>(n + k - 1), static_cast<unsigned long>(k));
}

namespace {

BigInt factorial(unsigned long m) {
  BigInt r;
  mpz_fac_ui(r.get_mpz_t(), m);
  return r;
}

}  // namespace

BigInt multinomial(const Multiindex& alpha) {
  BigInt r = factorial(static_cast<unsigned long>(alpha.order()));
  for (int a : alpha.entries()) r /= factorial(static_cast<unsigned long>(a));
  return r;
}

BigInt multinomial_doubled(const Multiindex& alpha) {
  BigInt r = factorial(2ul * static_cast<unsigned long>(alpha.order()));
  for (int a : alpha.entries()) r /= factorial(2ul * static_cast<unsigned long>(a));
  return r;
}

ExactRational c2k_term_direct(const Multiindex& alpha) {
  const BigInt m = multinomial(alpha);
  ExactRational q(m * m, multinomial_doubled(alpha));
  q.canonicalize();
  return q;
}

ExactRational c2k_term_product(const Multiindex& alpha) {
  const unsigned long k = static_cast<unsigned long>(alpha.order());
  BigInt num = 1;
  for (int a : alpha.entries()) num *= binomial(2ul * static_cast<unsigned long>(a), static_cast<unsigned long>(a));
  ExactRational q(num, binomial(2 * k, k));
  q.canonicalize();
  return q;
}

namespace {

void check_guard(int n, int k, std::uint64_t max_terms) {
  const BigInt count = multiindex_count(n, k);
  if (count > BigInt(std::to_string(max_terms))) {
    throw ResourceGuard("c2k(n=" + std::to_string(n) + ", k=" + std::to_string(k) + ") needs " + count.get_str() +
                        " summands, above the guard of " + std::to_string(max_terms));
  }
}

}  // namespace

C2k c2k(int n, int k, std::uint64_t max_terms) {
  if (n < 1 || k < 1) throw InvalidArgument("c2k needs n >= 1 and k >= 1");
  check_guard(n, k, max_terms);

  // Sum of prod_i C(2 alpha_i, alpha_i) over the simplex. The colex successor
  // only touches coordinates 0, j and j+1, so the product is updated in place
  // from a table of central binomials.
  std::vector<BigInt> central(static_cast<std::size_t>(k) + 1);
  for (int a = 0; a <= k; ++a) central[static_cast<std::size_t>(a)] = binomial(2ul * a, static_cast<unsigned long>(a));

  BigInt total = 0;
  if (k <= 31) {
    // Terms fit in 64 bits (C(2a,a) <= 4^a); accumulate in 128-bit chunks.
    std::vector<std::uint64_t> small(central.size());
    for (std::size_t a = 0; a < central.size(); ++a) small[a] = central[a].get_ui();
    unsigned __int128 chunk = 0;
    constexpr unsigned __int128 kFlush = static_cast<unsigned __int128>(1) << 125;
    auto flush = [&] {
      const auto hi = static_cast<std::uint64_t>(chunk >> 64);
      const auto lo = static_cast<std::uint64_t>(chunk);
      BigInt part = hi;
      part <<= 64;
      BigInt low;
      mpz_import(low.get_mpz_t(), 1, 1, sizeof(lo), 0, 0, &lo);
      total += part + low;
      chunk = 0;
    };
    for (MultiindexStream s(n, k); !s.done(); s.advance()) {
      std::uint64_t term = 1;
      for (int a : s.current().entries()) {
        if (a != 0) term *= small[static_cast<std::size_t>(a)];
      }
      chunk += term;
      if (chunk >= kFlush) flush();
    }
    flush();
  } else {
    for (MultiindexStream s(n, k); !s.done(); s.advance()) {
      BigInt term = 1;
      for (int a : s.current().entries()) {
        if (a != 0) term *= central[static_cast<std::size_t>(a)];
      }
      total += term;
    }
  }

  C2k out;
  out.exact = ExactRational(total, central[static_cast<std::size_t>(k)]);
  out.exact.canonicalize();
  out.value = root_of(out.exact, 2 * k);
  return out;
}

ExactRational c2k_direct(int n, int k, std::uint64_t max_terms) {
  if (n < 1 || k < 1) throw InvalidArgument("c2k needs n >= 1 and k >= 1");
  check_guard(n, k, max_terms);
  ExactRational total = 0;
  for (MultiindexStream s(n, k); !s.done(); s.advance()) total += c2k_term_direct(s.current());
  total.canonicalize();
  return total;
}

C2kBounds c2k_bounds(int n, int k) {
  if (n < 1 || k < 0) throw InvalidArgument("c2k_bounds needs n >= 1 and k >= 0");
  const BigInt count = multiindex_count(n, k);
  BigInt four_k;
  mpz_ui_pow_ui(four_k.get_mpz_t(), 4, static_cast<unsigned long>(k));
  C2kBounds b{ExactRational(count, four_k), ExactRational(count * four_k, 1)};
  b.lower.canonicalize();
  b.upper.canonicalize();
  return b;
}

double log_of(const BigInt& x) {
  if (sgn(x) <= 0) throw InvalidArgument("log of a nonpositive integer");
  long exponent = 0;
  const double mantissa = mpz_get_d_2exp(&exponent, x.get_mpz_t());
  return std::log(mantissa) + static_cast<double>(exponent) * std::log(2.0);
}

double log_of(const ExactRational& x) { return log_of(BigInt(x.get_num())) - log_of(BigInt(x.get_den())); }

double root_of(const ExactRational& x, int degree) {
  if (degree < 1) throw InvalidArgument("root degree must be >= 1");
  if (sgn(x) == 0) return 0.0;
  return std::exp(log_of(x) / static_cast<double>(degree));
}

}  // namespace centroidkit
