#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <gmpxx.h>

namespace centroidkit {

using BigInt = mpz_class;
/// Reduced rational with positive denominator (GMP canonical form).
using ExactRational = mpq_class;

/// Nonnegative integer vector alpha; order() is |alpha|_1.
class Multiindex {
 public:
  Multiindex() = default;
  explicit Multiindex(std::vector<int> entries);

  int size() const { return static_cast<int>(entries_.size()); }
  int order() const { return order_; }
  int operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }
  std::span<const int> entries() const { return entries_; }

  friend bool operator==(const Multiindex&, const Multiindex&) = default;

 private:
  friend class MultiindexStream;
  std::vector<int> entries_;
  int order_ = 0;
};

/// Single-pass enumeration of all alpha in N^n with |alpha|_1 = k, in
/// colexicographic order (the last coordinate varies slowest).
///
///   MultiindexStream stream(n, k);
///   for (; !stream.done(); stream.advance()) use(stream.current());
class MultiindexStream {
 public:
  MultiindexStream(int n, int k);

  bool done() const { return done_; }
  const Multiindex& current() const { return current_; }
  void advance();

 private:
  Multiindex current_;
  bool done_ = false;
};

std::vector<Multiindex> enumerate_multiindices(int n, int k);

BigInt binomial(unsigned long n, unsigned long k);
/// Number of multiindices of length n and order k: C(n+k-1, k).
BigInt multiindex_count(int n, int k);
/// m! / prod(alpha_i!) with m = |alpha|_1.
BigInt multinomial(const Multiindex& alpha);
/// (2m)! / prod((2 alpha_i)!) with m = |alpha|_1.
BigInt multinomial_doubled(const Multiindex& alpha);

/// Summand of c_{2k}^{2k} from its definition: C(k,alpha)^2 / C(2k,2alpha).
ExactRational c2k_term_direct(const Multiindex& alpha);
/// The same summand through central binomials:
/// C(2k,k)^{-1} * prod_i C(2 alpha_i, alpha_i).
ExactRational c2k_term_product(const Multiindex& alpha);

inline constexpr std::uint64_t kC2kTermGuard = 100'000'000;

struct C2k {
  ExactRational exact;  ///< c_{2k}^{2k}
  double value = 0.0;   ///< c_{2k}
};

/// c_{2k}^{2k} = sum over |alpha|_1 = k of C(k,alpha)^2 / C(2k,2alpha), evaluated
/// exactly through the central-binomial product form. Throws ResourceGuard
/// when the number of summands exceeds max_terms.
C2k c2k(int n, int k, std::uint64_t max_terms = kC2kTermGuard);

/// c_{2k}^{2k} summed term by term from the definition (slow; cross-check).
ExactRational c2k_direct(int n, int k, std::uint64_t max_terms = kC2kTermGuard);

struct C2kBounds {
  ExactRational lower;  ///< 4^{-k} C(n+k-1, k)
  ExactRational upper;  ///< 4^{k}  C(n+k-1, k)
};
C2kBounds c2k_bounds(int n, int k);

/// Natural log of a positive big integer or rational.
double log_of(const BigInt& x);
double log_of(const ExactRational& x);

/// x^{1/degree} as a double through the log domain.
double root_of(const ExactRational& x, int degree);

}  // namespace centroidkit
