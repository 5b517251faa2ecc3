#include "laclab/bigint.hpp"

#include <cmath>
#include <string>

#include "laclab/error.hpp"

namespace laclab {

BigInt parse_bigint(std::string_view text) {
  std::string s(text);
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t start = s.find_first_not_of(" \t");
  if (start == std::string::npos) throw DomainError("empty integer literal");
  s = s.substr(start);
  BigInt out;
  if (out.set_str(s, 10) != 0) throw DomainError("not a decimal integer: '" + s + "'");
  return out;
}

std::string to_decimal(const BigInt& value) { return value.get_str(10); }

std::string to_string(const Rational& value) { return value.get_str(10); }

std::size_t bit_length(const BigInt& value) {
  if (sgn(value) == 0) return 0;
  return mpz_sizeinbase(value.get_mpz_t(), 2);
}

std::size_t ceil_log2(const BigInt& n) {
  if (sgn(n) <= 0) throw DomainError("ceil_log2 needs n >= 1");
  BigInt m = n - 1;
  return bit_length(m);
}

double scaled_to_double(const BigInt& n, std::size_t bits) {
  if (sgn(n) == 0) return 0.0;
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, n.get_mpz_t());
  return std::ldexp(mant, static_cast<int>(exp - static_cast<long>(bits)));
}

double to_double(const Rational& value) {
  if (sgn(value) == 0) return 0.0;
  long en = 0;
  long ed = 0;
  double mn = mpz_get_d_2exp(&en, value.get_num_mpz_t());
  double md = mpz_get_d_2exp(&ed, value.get_den_mpz_t());
  return std::ldexp(mn / md, static_cast<int>(en - ed));
}

Rational exact_rational(double value) {
  if (!std::isfinite(value)) throw DomainError("non-finite value has no rational form");
  Rational out(value);  // mpq_set_d is exact
  out.canonicalize();
  return out;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace laclab
