#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "laclab/error.hpp"
#include "laclab/orbit.hpp"

using namespace laclab;

namespace {

IntegerSequence seq_of(std::initializer_list<long> values) {
  std::vector<BigInt> terms;
  for (long v : values) terms.emplace_back(v);
  return IntegerSequence(terms, SequenceSpec::explicit_list(terms));
}

FixedPoint point(long numerator, std::size_t bits) { return FixedPoint{BigInt(numerator), bits}; }

BigInt random_bits(std::mt19937_64& rng, std::size_t bits) {
  BigInt out = 0;
  for (std::size_t done = 0; done < bits; done += 32) {
    out <<= 32;
    out += static_cast<unsigned long>(rng() & 0xffffffffULL);
  }
  return out >> static_cast<mp_bitcnt_t>((bits + 31) / 32 * 32 - bits);
}

}  // namespace

TEST_CASE("sample_point is deterministic and replica dependent") {
  CHECK(sample_point(42, 3, 200).numerator == sample_point(42, 3, 200).numerator);
  std::set<std::string> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(sample_point(42, r, 128).numerator.get_str(16));
  CHECK(seen.size() == 1000);
  for (std::uint64_t r = 0; r < 64; ++r) {
    const auto x = sample_point(9, r, 1);
    CHECK(x.numerator >= 0);
    CHECK(x.numerator <= 1);
  }
}

TEST_CASE("frac_multiple examples") {
  CHECK(frac_multiple(point(0, 80), BigInt(12345)).numerator == 0);
  const auto r = frac_multiple(point(160, 8), BigInt(3), 0);
  CHECK(r.to_double() == 0.875);
  CHECK(frac_multiple(point(1, 1), BigInt(2), 0).numerator == 0);
  CHECK_THROWS_AS(frac_multiple(point(160, 8), BigInt(3)), GuardError);
}

TEST_CASE("frac_multiple equals big-rational arithmetic") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t bits = 70 + trial % 200;
    FixedPoint x{random_bits(rng, bits), bits};
    BigInt n = random_bits(rng, 1 + trial % 6) + 1;
    const auto got = frac_multiple(x, n);
    Rational prod = x.to_rational() * Rational(n);
    BigInt whole = prod.get_num() / prod.get_den();
    Rational frac = prod - Rational(whole);
    frac.canonicalize();
    CHECK(got.to_rational() == frac);
  }
}

TEST_CASE("odd multipliers permute the grid") {
  const std::size_t bits = 10;
  for (long n : {1L, 3L, 5L, 77L, 1023L}) {
    std::set<long> image;
    for (long p = 0; p < (1L << bits); ++p) image.insert(frac_multiple(point(p, bits), BigInt(n), 0).numerator.get_si());
    CHECK(image.size() == (1u << bits));
  }
  std::set<long> image;
  for (long p = 0; p < (1L << bits); ++p) image.insert(frac_multiple(point(p, bits), BigInt(12), 0).numerator.get_si());
  CHECK(image.size() == (1u << bits) / 4);
}

TEST_CASE("catalog evaluation") {
  CHECK(PeriodicFunction::centered_frac()(0.25) == -0.25);
  CHECK(PeriodicFunction::erdos_fortet()(0.0) == 2.0);
  CHECK(PeriodicFunction::heavy_tail(1.0)(0.75) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(PeriodicFunction::heavy_tail(1.0)(0.25) == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(PeriodicFunction::cosine()(0.5) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(PeriodicFunction::heavy_tail(1.0).eval_exact(BigInt(1), 1), SingularityError);
  CHECK(PeriodicFunction::centered_indicator(0.25)(0.25) == doctest::Approx(0.75));
  for (const char* text : {"cos", "centered-frac", "sign-sine", "erdos-fortet", "heavy-tail:1.5", "indicator:0.25",
                           "harmonic:1,0;0,0.5"}) {
    CHECK(PeriodicFunction::parse(PeriodicFunction::parse(text).to_string()).to_string() ==
          PeriodicFunction::parse(text).to_string());
  }
}

TEST_CASE("heavy tail is odd about one half") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const auto f = PeriodicFunction::heavy_tail(alpha);
    for (double u : {0.01, 0.1, 0.3, 0.49}) CHECK(f(0.5 + u) == doctest::Approx(-f(0.5 - u)).epsilon(1e-14));
  }
}

TEST_CASE("catalog functions have mean zero") {
  for (const char* text : {"cos", "centered-frac", "sign-sine", "erdos-fortet", "indicator:0.3", "harmonic:0.5,0.2;0,1"})
    CHECK(std::abs(mean_value(PeriodicFunction::parse(text))) < 1e-10);
  CHECK_THROWS(mean_value(PeriodicFunction::heavy_tail(0.5)));
  CHECK(std::abs(mean_value(PeriodicFunction::truncated(PeriodicFunction::heavy_tail(1.5), 5.0))) < 1e-10);
  CHECK(l2_norm(PeriodicFunction::cosine()) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("partial_sum examples") {
  const FixedPoint quarter{BigInt(1) << 78, 80};
  CHECK(partial_sum(PeriodicFunction::cosine(), seq_of({1, 2, 3}), point(0, 80), 3) == doctest::Approx(3.0));
  CHECK(partial_sum(PeriodicFunction::centered_frac(), seq_of({1}), quarter, 1) == -0.25);
  CHECK(partial_sum(PeriodicFunction::centered_frac(), seq_of({1, 2}), quarter, 2) == -0.25);
}

TEST_CASE("partial sums increment by one term") {
  const auto seq = generate(SequenceSpec::geometric_minus_one(3, 40));
  const auto f = PeriodicFunction::erdos_fortet();
  const auto x = sample_point(1, 0, guarded_bits(seq, 40));
  for (std::size_t n = 1; n <= 40; ++n) {
    const double step = partial_sum(f, seq, x, n) - (n > 1 ? partial_sum(f, seq, x, n - 1) : 0.0);
    CHECK(step == doctest::Approx(f.eval(frac_multiple(x, seq.term(n)))).epsilon(1e-12));
  }
}

TEST_CASE("OrbitEvaluator agrees with frac_multiple") {
  for (const auto& spec : {SequenceSpec::geometric(2, 60), SequenceSpec::power_gap(2.0, 1, 40),
                           SequenceSpec::superlacunary_square(2, 8), SequenceSpec::geometric_minus_one(2, 50)}) {
    const auto seq = generate(spec);
    OrbitEvaluator orbit(seq, seq.size(), guarded_bits(seq, seq.size()));
    std::vector<double> fr;
    for (std::uint64_t r = 0; r < 5; ++r) {
      const auto x = sample_point(3, r, orbit.bits());
      orbit.fractions(x, fr);
      REQUIRE(fr.size() == seq.size());
      for (std::size_t k = 1; k <= seq.size(); ++k) {
        const auto exact = frac_multiple(x, seq.term(k));
        CHECK(fr[k - 1] == exact.to_double());
        CHECK(orbit.fraction(x, k).to_rational() == exact.to_rational());
      }
    }
  }
}

TEST_CASE("l2_modulus") {
  const auto c = PeriodicFunction::cosine();
  CHECK(l2_modulus(c, 0.0) == 0.0);
  CHECK(l2_modulus(c, 0.125) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(l2_modulus(c, 0.25) == doctest::Approx(std::numbers::sqrt2).epsilon(1e-12));
  CHECK(l2_modulus(c, 0.4) == doctest::Approx(std::numbers::sqrt2).epsilon(1e-12));
  for (const char* text : {"centered-frac", "sign-sine", "erdos-fortet"}) {
    const auto f = PeriodicFunction::parse(text);
    const double norm = l2_norm(f);
    double previous = 0.0;
    for (double delta : {0.01, 0.05, 0.1, 0.2, 0.3, 0.5}) {
      const double w = l2_modulus(f, delta);
      CHECK(w >= previous - 1e-12);
      CHECK(w <= 2.0 * norm + 1e-12);
      previous = w;
    }
  }
  // sawtooth difference is 2h off a set of measure 2h where it is 2h - 1
  const auto saw = PeriodicFunction::centered_frac();
  CHECK(shift_energy(saw, 0.1) == doctest::Approx(2 * 0.1 * (1 - 2 * 0.1)).epsilon(1e-10));
}

TEST_CASE("truncation schedule and tail measure") {
  const auto heavy = PeriodicFunction::heavy_tail(1.0);
  const auto root_levels = truncation_schedule(heavy, 3);
  REQUIRE(root_levels.levels.size() == 3);
  CHECK(root_levels.levels[0] == doctest::Approx(1.0));
  CHECK(root_levels.levels[1] == doctest::Approx(2.0));
  CHECK(root_levels.levels[2] == doctest::Approx(3.0));
  CHECK(truncation_schedule(PeriodicFunction::heavy_tail(0.5), 1).levels[0] == doctest::Approx(1.0));
  const auto ef = truncation_schedule(PeriodicFunction::erdos_fortet(), 4);
  for (double level : ef.levels) CHECK(level == doctest::Approx(2.0));
  CHECK(truncation_schedule(heavy, 20, TruncationRule::summable).meets_tail_bound());

  CHECK(tail_measure(heavy, 4.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(tail_measure(heavy, 1.0) == doctest::Approx(1.0));
  CHECK(tail_measure(PeriodicFunction::cosine(), 1.5) == 0.0);
}

TEST_CASE("condition_maingap verdicts") {
  const auto lipschitz = condition_maingap(PeriodicFunction::cosine(), generate(SequenceSpec::superlacunary_square(2, 9)), 8);
  CHECK(lipschitz.verdict == SeriesVerdict::plausibly_convergent);
  const auto heavy = PeriodicFunction::heavy_tail(1.0);
  const auto sparse = condition_maingap(PeriodicFunction::heavy_tail(1.5), generate(SequenceSpec::superlacunary_square(2, 14)), 13);
  CHECK(sparse.verdict == SeriesVerdict::plausibly_convergent);
  const auto wide = condition_maingap(heavy, generate(SequenceSpec::power_gap(6.0, 1, 14)), 13);
  CHECK(wide.verdict != SeriesVerdict::plausibly_convergent);
  const auto flat = condition_maingap(heavy, generate(SequenceSpec::geometric(2, 14)), 13);
  CHECK(flat.verdict == SeriesVerdict::plausibly_divergent);
}
