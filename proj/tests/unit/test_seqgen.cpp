#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "laclab/error.hpp"
#include "laclab/seqgen.hpp"

using namespace laclab;

namespace {

IntegerSequence seq_of(std::initializer_list<long> values) {
  std::vector<BigInt> terms;
  for (long v : values) terms.emplace_back(v);
  return IntegerSequence(terms, SequenceSpec::explicit_list(terms));
}

std::vector<long> as_longs(const IntegerSequence& seq) {
  std::vector<long> out;
  for (const auto& t : seq.terms()) out.push_back(t.get_si());
  return out;
}

Rational gcd_sum_reference(std::span<const BigInt> terms) {
  Rational sum = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    for (std::size_t j = i; j < terms.size(); ++j) {
      BigInt g = gcd(terms[i], terms[j]);
      BigInt l = lcm(terms[i], terms[j]);
      sum += Rational(g, l);
    }
  }
  sum.canonicalize();
  return sum;
}

IntegerSequence random_increasing(std::mt19937_64& rng, std::size_t n, long max_step) {
  std::uniform_int_distribution<long> step(1, max_step);
  std::vector<BigInt> terms;
  long value = 0;
  for (std::size_t i = 0; i < n; ++i) {
    value += step(rng);
    terms.emplace_back(value);
  }
  return IntegerSequence(terms, SequenceSpec::explicit_list(terms));
}

}  // namespace

TEST_CASE("generate: catalog kinds") {
  CHECK(as_longs(generate(SequenceSpec::geometric(2, 4))) == std::vector<long>{2, 4, 8, 16});
  CHECK(as_longs(generate(SequenceSpec::geometric_minus_one(2, 3))) == std::vector<long>{1, 3, 7});
  CHECK(as_longs(generate(SequenceSpec::power_gap(1.0, 1, 5))) == std::vector<long>{1, 2, 4, 12, 48});
  CHECK(as_longs(generate(SequenceSpec::superlacunary_square(2, 4))) == std::vector<long>{2, 16, 512, 65536});
}

TEST_CASE("generate: guards") {
  CHECK_THROWS_AS(generate(SequenceSpec::geometric(1, 4)), DomainError);
  CHECK_THROWS_AS(generate(SequenceSpec::geometric(2, 0)), DomainError);
  CHECK_THROWS_AS(generate(SequenceSpec::power_gap(0.0, 1, 4)), DomainError);
  CHECK_THROWS_AS(seq_of({3, 3}), DomainError);
  CHECK_THROWS_AS(seq_of({0, 3}), DomainError);
}

TEST_CASE("generated sequences pass their own gap predicate") {
  for (std::int64_t theta : {2, 3, 8}) {
    auto seq = generate(SequenceSpec::geometric(theta, 40));
    CHECK(check_hadamard(seq, static_cast<double>(theta)));
    CHECK_FALSE(check_hadamard(seq, std::nextafter(static_cast<double>(theta), 100.0)));
  }
  for (double gamma : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    auto seq = generate(SequenceSpec::power_gap(gamma, 3, 30));
    CHECK(check_polynomial_gap(seq, gamma));
  }
}

TEST_CASE("check_hadamard") {
  CHECK(check_hadamard(seq_of({2, 4, 8}), 2.0));
  CHECK_FALSE(check_hadamard(seq_of({2, 4, 8}), 2.5));
  CHECK(check_hadamard(seq_of({1, 3, 7}), 2.0));
}

TEST_CASE("check_polynomial_gap") {
  CHECK(check_polynomial_gap(seq_of({1, 2, 4, 12, 48}), 1.0));
  CHECK_FALSE(check_polynomial_gap(seq_of({1, 2, 4, 12, 47}), 1.0));
  CHECK_FALSE(check_polynomial_gap(generate(SequenceSpec::geometric(2, 10)), 1.0));
}

TEST_CASE("delta_sequence") {
  auto d = delta_sequence(seq_of({2, 4, 8}));
  REQUIRE(d.size() == 2);
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 5.0);
  CHECK(delta_exact(seq_of({10, 100, 1000}), 2) == Rational(1));
  std::vector<BigInt> big{BigInt(1), BigInt("1000000"), BigInt("1000000000000")};
  IntegerSequence wide(big, SequenceSpec::explicit_list(big));
  CHECK(delta_exact(wide, 2) == Rational(1, 100000));
}

TEST_CASE("gcd_sum examples") {
  CHECK(gcd_sum(seq_of({5})) == Rational(1));
  CHECK(gcd_sum(seq_of({1, 2})) == Rational(5, 2));
  CHECK(gcd_sum(seq_of({2, 3, 4})) == Rational(15, 4));
  // pairwise coprime: N + sum 1/(n_i n_j)
  Rational coprime = 4 + Rational(1, 6) + Rational(1, 10) + Rational(1, 14) + Rational(1, 15) + Rational(1, 21) +
                     Rational(1, 35);
  coprime.canonicalize();
  CHECK(gcd_sum(seq_of({2, 3, 5, 7})) == coprime);
}

TEST_CASE("gcd_sum matches pairwise enumeration and is permutation invariant") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto seq = random_increasing(rng, 2 + trial % 40, 30);
    const Rational g = gcd_sum(seq);
    CHECK(g == gcd_sum_reference(seq.terms()));
    CHECK(g > Rational(static_cast<long>(seq.size())));
    std::vector<BigInt> shuffled(seq.terms().begin(), seq.terms().end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(gcd_sum_reference(shuffled) == g);
  }
}

TEST_CASE("gcd_sum stays under a recorded multiple of N (log log N)^2") {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (std::size_t n : {10u, 50u, 200u, 1000u}) {
    auto seq = random_increasing(rng, n, 1000);
    const double g = to_double(gcd_sum(seq));
    const double loglog = std::log(std::log(std::max<double>(static_cast<double>(n), 3.0)));
    worst = std::max(worst, g / (static_cast<double>(n) * loglog * loglog));
  }
  CHECK(worst < 30.0);
}

TEST_CASE("dyer_harman_sum") {
  CHECK(dyer_harman_sum(seq_of({7})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(dyer_harman_sum(seq_of({1, 2})) == doctest::Approx(2.70710678118654752).epsilon(1e-14));
  CHECK(dyer_harman_sum(seq_of({2, 4})) == doctest::Approx(2.70710678118654752).epsilon(1e-14));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto seq = random_increasing(rng, 12, 50);
    std::vector<BigInt> scaled;
    for (const auto& t : seq.terms()) scaled.push_back(t * 7);
    IntegerSequence seven(scaled, SequenceSpec::explicit_list(scaled));
    CHECK(dyer_harman_sum(seven) == doctest::Approx(dyer_harman_sum(seq)).epsilon(1e-13));
  }
}

TEST_CASE("divisor_count and rho_gamma") {
  CHECK(divisor_count(1) == 1);
  CHECK(divisor_count(12) == 6);
  CHECK(divisor_count(7) == 2);
  CHECK(divisor_count(720720) == 240);
  CHECK(rho_gamma(1, 0.75) == 1.0);
  CHECK(rho_gamma(12, 0.75) == doctest::Approx(3.48138047543484918753).epsilon(1e-14));
  CHECK(rho_gamma(13, 0.6) == doctest::Approx(1.0 + std::pow(13.0, -0.2)).epsilon(1e-14));
  CHECK_THROWS_AS(rho_gamma(12, 0.5), DomainError);
}

TEST_CASE("coefficient_condition_partial_sum") {
  const auto divisor = CoefficientWeight::parse("weber-divisor");
  std::vector<double> unit{1.0, 0.0, 0.0, 0.0};
  CHECK(coefficient_condition_partial_sum(unit, divisor) == 0.0);
  CHECK(coefficient_condition_partial_sum(unit, CoefficientWeight::parse("rademacher-mensov:0.1")) == 0.0);
  CHECK(coefficient_condition_partial_sum(std::vector<double>(5, 0.0), divisor) == 0.0);
  std::vector<double> harmonic{1.0, 0.5, 1.0 / 3.0};
  CHECK(coefficient_condition_partial_sum(harmonic, divisor) ==
        doctest::Approx(0.508437387139674485).epsilon(1e-13));
  CHECK_THROWS_AS(CoefficientWeight::parse("weber-rho:0.4"), DomainError);
  CHECK_THROWS_AS(CoefficientWeight::parse("nonsense"), DomainError);
}

TEST_CASE("sequence text round trip") {
  auto seq = generate(SequenceSpec::superlacunary_square(3, 6));
  std::stringstream io;
  write_sequence(io, seq);
  auto back = read_sequence(io);
  REQUIRE(back.size() == seq.size());
  for (std::size_t k = 1; k <= seq.size(); ++k) CHECK(back.term(k) == seq.term(k));
}
