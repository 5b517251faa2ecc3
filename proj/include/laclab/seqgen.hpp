#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "laclab/bigint.hpp"

namespace laclab {

enum class SequenceKind {
  geometric,             // n_k = theta^k
  geometric_minus_one,   // n_k = theta^k - 1
  power_gap,             // n_{k+1} = ceil(n_k * max(k^gamma, 1 + 1e-9))
  superlacunary_square,  // n_k = base^(k^2)
  explicit_terms,
};

/// Generator description for a strictly increasing positive integer sequence.
struct SequenceSpec {
  SequenceKind kind = SequenceKind::geometric;
  std::int64_t theta = 2;  // geometric / geometric_minus_one ratio, superlacunary base
  double gamma = 1.0;      // power_gap exponent
  BigInt first = 1;        // power_gap n_1
  std::vector<BigInt> terms;  // explicit_terms
  std::size_t length = 1;

  static SequenceSpec geometric(std::int64_t theta, std::size_t length);
  static SequenceSpec geometric_minus_one(std::int64_t theta, std::size_t length);
  static SequenceSpec power_gap(double gamma, BigInt first, std::size_t length);
  static SequenceSpec superlacunary_square(std::int64_t base, std::size_t length);
  static SequenceSpec explicit_list(std::vector<BigInt> terms);

  /// Short human-readable form, e.g. "geometric(theta=2,N=10)".
  std::string describe() const;
};

std::string to_string(SequenceKind kind);
SequenceKind parse_sequence_kind(const std::string& name);

/// Materialised sequence n_1 < n_2 < ... (stored 0-based; term(k) is 1-based).
class IntegerSequence {
 public:
  IntegerSequence(std::vector<BigInt> terms, SequenceSpec provenance);

  std::size_t size() const noexcept { return terms_.size(); }
  const BigInt& term(std::size_t k) const { return terms_.at(k - 1); }
  std::span<const BigInt> terms() const noexcept { return terms_; }
  const SequenceSpec& provenance() const noexcept { return provenance_; }

  /// First `count` terms, provenance updated to an explicit list.
  IntegerSequence prefix(std::size_t count) const;

 private:
  std::vector<BigInt> terms_;
  SequenceSpec provenance_;
};

IntegerSequence generate(const SequenceSpec& spec);

/// n_{k+1}/n_k >= q for all k, compared as exact rationals (q is taken at its
/// exact binary value).
bool check_hadamard(const IntegerSequence& seq, double q);

/// n_{k+1}/n_k >= k^gamma for all k >= 1. Exact decision: integer gamma uses
/// integer powers, otherwise k^gamma is bracketed with directed rounding.
bool check_polynomial_gap(const IntegerSequence& seq, double gamma);

/// eps_k = n_k / n_{k+1}, 1 <= k <= N-1.
Rational gap_ratio(const IntegerSequence& seq, std::size_t k);

/// delta_1 = 1 and delta_k = 5 (n_{k-1}/n_k + n_k/n_{k+1}) for 2 <= k <= N-1.
Rational delta_exact(const IntegerSequence& seq, std::size_t k);

/// (delta_1, ..., delta_{N-1}) rendered to double; index 0 holds delta_1.
std::vector<double> delta_sequence(const IntegerSequence& seq);

/// G = sum_{1<=i<=j<=N} gcd(n_i,n_j) / lcm(n_i,n_j), exact, diagonal included.
Rational gcd_sum(const IntegerSequence& seq);

/// sum_{1<=k<=l<=N} gcd(n_k,n_l) / sqrt(n_k n_l), diagonal included.
double dyer_harman_sum(const IntegerSequence& seq);

std::uint64_t divisor_count(std::uint64_t k);

/// rho_gamma(n) = sum_{d | n} d^{-(2 gamma - 1)}, gamma in (1/2, 1).
double rho_gamma(std::uint64_t n, double gamma);

struct CoefficientWeight {
  enum class Kind { rademacher_mensov, weber_divisor, weber_rho };
  Kind kind = Kind::weber_divisor;
  double parameter = 0.0;  // epsilon for rademacher_mensov, gamma for weber_rho

  static CoefficientWeight parse(const std::string& text);
};

/// Partial sum over k = 1..K of c_k^2 w(k) with natural logarithms; the k = 1
/// term is 0 because log 1 = 0.
double coefficient_condition_partial_sum(std::span<const double> c, const CoefficientWeight& weight);

/// One decimal integer per line.
void write_sequence(std::ostream& out, const IntegerSequence& seq);
IntegerSequence read_sequence(std::istream& in);

}  // namespace laclab
