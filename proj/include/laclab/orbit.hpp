#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "laclab/bigint.hpp"
#include "laclab/seqgen.hpp"

namespace laclab {

/// x = numerator / 2^bits in [0,1), held exactly.
struct FixedPoint {
  BigInt numerator = 0;
  std::size_t bits = 1;

  double to_double() const;
  Rational to_rational() const;
};

/// (x mod 2^bits) / 2^bits truncated to 53 bits.
double low_bits_fraction_of(const BigInt& x, std::size_t bits);

/// Deterministic point on the 2^-bits grid drawn from stream (seed, replica).
FixedPoint sample_point(std::uint64_t seed, std::uint64_t replica, std::size_t bits);

/// Exact {n x}. Requires x.bits >= ceil(log2 n) + guard_bits, else GuardError.
FixedPoint frac_multiple(const FixedPoint& x, const BigInt& n, std::size_t guard_bits = 64);

/// Multiplication by a fixed n modulo 2^bits. Powers of two become shifts and
/// sparse signed-digit multipliers become a few shifted additions.
class Multiplier {
 public:
  explicit Multiplier(const BigInt& n);

  const BigInt& value() const noexcept { return n_; }
  /// out = (n * x) mod 2^bits; x must already be reduced.
  void apply(const BigInt& x, std::size_t bits, BigInt& out) const;
  /// {n x} for x = numerator / 2^bits, truncated to 53 bits.
  double fraction(const BigInt& x, std::size_t bits, BigInt& scratch) const;

  bool is_shift() const noexcept { return shift_only_; }
  std::size_t signed_digit_weight() const noexcept { return digits_.size(); }

 private:
  BigInt n_;
  bool shift_only_ = false;
  bool use_digits_ = false;
  std::vector<std::pair<std::size_t, int>> digits_;  // (position, +1/-1)
};

/// Mean-zero 1-periodic functions of the catalog.
class PeriodicFunction {
 public:
  struct Harmonic {
    std::vector<std::pair<double, double>> coefficients;  // (a_j, b_j) for cos/sin 2 pi j x
  };
  struct CenteredFrac {};
  struct SignSine {};
  struct ErdosFortet {};
  struct HeavyTail {
    double alpha;
  };
  struct CenteredIndicator {
    double t;
  };
  struct Truncated {
    std::shared_ptr<const PeriodicFunction> base;
    double level;
  };
  using Variant = std::variant<Harmonic, CenteredFrac, SignSine, ErdosFortet, HeavyTail, CenteredIndicator, Truncated>;

  static PeriodicFunction cosine();
  static PeriodicFunction harmonic(std::vector<std::pair<double, double>> coefficients);
  static PeriodicFunction centered_frac();
  static PeriodicFunction sign_sine();
  static PeriodicFunction erdos_fortet();
  static PeriodicFunction heavy_tail(double alpha);
  static PeriodicFunction centered_indicator(double t);
  static PeriodicFunction truncated(const PeriodicFunction& base, double level);

  /// Accepts the forms printed by to_string(): "cos", "harmonic:1,0;0,0.5",
  /// "centered-frac", "sign-sine", "erdos-fortet", "heavy-tail:1.5",
  /// "indicator:0.25", "truncated:4:heavy-tail:1".
  static PeriodicFunction parse(const std::string& text);
  std::string to_string() const;

  const Variant& variant() const noexcept { return v_; }

  double operator()(double u) const { return eval(u); }
  double eval(double u) const;
  /// Evaluation at numerator / 2^bits; the singular point and the jump points
  /// are decided exactly.
  double eval_exact(const BigInt& numerator, std::size_t bits) const;
  double eval(const FixedPoint& x) const { return eval_exact(x.numerator, x.bits); }
  /// True when eval(double) could misplace the argument relative to a jump.
  bool needs_exact_argument() const;

  bool is_bounded() const;
  bool is_square_integrable() const { return is_bounded(); }
  /// sup |f|; +inf for the untruncated heavy tail.
  double sup_abs() const;
  /// Variation over one period including the wrap-around jump. Harmonic
  /// combinations report the bound sum_j 4 j sqrt(a_j^2 + b_j^2).
  double total_variation() const;
  /// Points in [0,1) where f jumps or is singular.
  std::vector<double> breakpoints() const;
  /// (a_j, b_j) when f is a trigonometric polynomial.
  std::optional<std::vector<std::pair<double, double>>> fourier_coefficients() const;
  const HeavyTail* heavy_tail_part() const;

 private:
  explicit PeriodicFunction(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Sum of f({n_k x}) for k <= count with compensated accumulation.
double partial_sum(const PeriodicFunction& f, const IntegerSequence& seq, const FixedPoint& x, std::size_t count);

/// Prepared multipliers for repeated orbit evaluation at many sample points.
class OrbitEvaluator {
 public:
  OrbitEvaluator(const IntegerSequence& seq, std::size_t count, std::size_t bits, std::size_t guard_bits = 64);

  std::size_t size() const noexcept { return mult_.size(); }
  std::size_t bits() const noexcept { return bits_; }
  const Multiplier& multiplier(std::size_t k) const { return mult_.at(k - 1); }

  /// {n_k x}, k = 1..size(), rendered to double.
  void fractions(const FixedPoint& x, std::vector<double>& out) const;
  /// Exact {n_k x} for one index.
  FixedPoint fraction(const FixedPoint& x, std::size_t k) const;
  /// Running values f({n_k x}); SingularityError carries the 1-based index.
  void values(const PeriodicFunction& f, const FixedPoint& x, std::vector<double>& out) const;
  double partial_sum(const PeriodicFunction& f, const FixedPoint& x, std::size_t count) const;

 private:
  // Reduced x n_k into `current`, reusing the previous index when n_k is a
  // small multiple of n_{k-1}.
  void advance(const FixedPoint& x, std::size_t i, bool have_previous, BigInt& current) const;

  std::vector<Multiplier> mult_;
  std::vector<BigInt> step_;  // n_k / n_{k-1} when integral and at most 256 bits, else 0
  std::size_t bits_;
};

/// Number of bits satisfying the guard rule for the first `count` terms.
std::size_t guarded_bits(const IntegerSequence& seq, std::size_t count, std::size_t guard_bits = 64);

/// int_0^1 |f(x+h) - f(x-h)|^2 dx.
double shift_energy(const PeriodicFunction& f, double h);

/// omega_2(f, delta) = sup_{0<=h<=delta} shift_energy(f, h)^{1/2}; delta is
/// clamped to 1/2.
double l2_modulus(const PeriodicFunction& f, double delta);

/// mu{x : |f(x)| >= level}.
double tail_measure(const PeriodicFunction& f, double level);

/// int_0^1 g over [0,1] split at the given points (adaptive Gauss-Kronrod).
template <class G>
double integrate_pieces(const G& g, std::vector<double> points);

/// int_0^1 f dx and int_0^1 f^2 dx by piecewise quadrature.
double mean_value(const PeriodicFunction& f);
double l2_norm(const PeriodicFunction& f);

enum class TruncationRule {
  root,      // T_k = k^{1/alpha}
  summable,  // T_k = (2 k^2)^{1/alpha}, so that mu{|f| >= T_k} <= k^-2
};

struct TruncationSchedule {
  TruncationRule rule = TruncationRule::root;
  std::vector<double> levels;
  std::vector<double> tails;  // mu{|f| >= T_k}

  /// mu{|f| >= T_k} <= k^-2 for every k.
  bool meets_tail_bound() const;
};

/// Bounded f: every level is sup|f|, nudged upward when that level still
/// carries positive measure.
TruncationSchedule truncation_schedule(const PeriodicFunction& f, std::size_t count,
                                       TruncationRule rule = TruncationRule::root);

enum class SeriesVerdict { plausibly_convergent, plausibly_divergent, inconclusive };
std::string to_string(SeriesVerdict v);

struct ConditionRow {
  std::size_t k;
  double level;
  double delta;
  double level_term;  // T_k delta_k^{1/4}
  double omega_term;  // omega_2(f_{T_k}, min(8 delta_k^{1/2}, 1/2))^{1/2}
  double term;
  double partial_sum;
};

struct ConditionReport {
  std::vector<ConditionRow> rows;
  TruncationRule rule = TruncationRule::summable;
  SeriesVerdict verdict = SeriesVerdict::inconclusive;
  double decay_exponent = 0.0;  // least-squares slope of log term vs log k
  std::size_t window_begin = 0;
  std::size_t window_end = 0;
  std::string diagnostic;

  void write_csv(std::ostream& out) const;
};

/// Finite-window evaluation of the series T_k delta_k^{1/4} + omega_2^{1/2}.
ConditionReport condition_maingap(const PeriodicFunction& f, const IntegerSequence& seq, std::size_t count,
                                  TruncationRule rule = TruncationRule::summable);

}  // namespace laclab

#include "laclab/detail/quadrature.hpp"
