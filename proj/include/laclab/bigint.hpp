#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace laclab {

using BigInt = mpz_class;
using Rational = mpq_class;

BigInt parse_bigint(std::string_view text);
std::string to_decimal(const BigInt& value);
std::string to_string(const Rational& value);

/// Number of significant bits; 0 for zero.
std::size_t bit_length(const BigInt& value);

/// ceil(log2 n) for n >= 1.
std::size_t ceil_log2(const BigInt& n);

/// Correctly scaled double even when numerator and denominator overflow double.
double to_double(const Rational& value);

/// n * 2^-bits as a double without intermediate overflow.
double scaled_to_double(const BigInt& n, std::size_t bits);

/// Exact rational value of a finite double.
Rational exact_rational(double value);

/// 64-bit FNV-1a, used for config hashes and bucketing.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace laclab
