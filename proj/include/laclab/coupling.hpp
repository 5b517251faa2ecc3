#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "laclab/bigint.hpp"
#include "laclab/orbit.hpp"
#include "laclab/seqgen.hpp"

namespace laclab {

/// Exact p/q with small positive denominator; comparisons use 128-bit products.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational to_rational() const;
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator<(const Fraction& a, const Fraction& b) noexcept {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator==(const Fraction& a, const Fraction& b) noexcept {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<=(const Fraction& a, const Fraction& b) noexcept { return !(b < a); }
};

/// Largest n_{k+1} accepted by the filtration routines.
inline constexpr std::int64_t kFiltrationLimit = std::int64_t{1} << 22;

/// sigma-field F_k generated by the cut points i/n_j, 1 <= j <= k+1.
class GridFiltration {
 public:
  GridFiltration(const IntegerSequence& seq, std::size_t level);

  std::size_t level() const noexcept { return level_; }
  std::size_t atom_count() const noexcept { return cuts_.size() - 1; }
  Fraction atom_left(std::size_t i) const { return cuts_.at(i); }
  Fraction atom_right(std::size_t i) const { return cuts_.at(i + 1); }
  std::span<const Fraction> cuts() const noexcept { return cuts_; }
  /// n_j for 1 <= j <= level + 1.
  std::int64_t term(std::size_t j) const { return terms_.at(j - 1); }

  /// Index of the atom containing x.
  std::size_t locate(const FixedPoint& x) const;
  /// Every cut of `coarser` is a cut here.
  bool refines(const GridFiltration& coarser) const;

 private:
  std::size_t level_;
  std::vector<std::int64_t> terms_;
  std::vector<Fraction> cuts_;
};

struct ConditionalExpectation {
  std::size_t k = 0;
  std::vector<Fraction> values;  // X_k on each atom of F_k
  Fraction epsilon;              // n_k / n_{k+1}
  Fraction max_deviation;        // max over atoms of sup |T_k - X_k|
  bool bound_holds = false;      // max_deviation <= epsilon
};

/// X_k = E({n_k x} | F_k) atom by atom (k >= 1).
ConditionalExpectation conditional_expectation_step(const GridFiltration& filtration, std::size_t k);
ConditionalExpectation conditional_expectation_step(const IntegerSequence& seq, std::size_t k);

/// Finite law with exact rational atoms.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  /// Sorts, merges repeated support points and checks positivity and total mass 1.
  DiscreteDistribution(std::vector<Rational> support, std::vector<Rational> masses);
  static DiscreteDistribution point_mass(const Rational& x);

  std::size_t size() const noexcept { return support_.size(); }
  const std::vector<Rational>& support() const noexcept { return support_; }
  const std::vector<Rational>& masses() const noexcept { return masses_; }

 private:
  std::vector<Rational> support_;
  std::vector<Rational> masses_;
};

/// Law of X_k from a conditional expectation step (atom lengths as masses).
DiscreteDistribution expectation_distribution(const GridFiltration& filtration, const ConditionalExpectation& step);

struct GoodAtomReport {
  std::size_t k = 0;
  std::uint64_t cells = 0;       // n_{k+1}
  std::uint64_t good_cells = 0;  // cells with no interior point of B_{k-1}
  Rational measure;
  Rational bound;                // 1 - 2 eps_k
  bool side_condition = false;   // n_1 + ... + n_k <= 2 n_k
  bool bound_holds = false;
  std::vector<std::uint8_t> good;  // per cell
};

GoodAtomReport good_atoms(const IntegerSequence& seq, std::size_t k);

/// Smallest k0 <= K such that n_1 + ... + n_k <= 2 n_k for every k0 <= k <= K;
/// K + 1 when the condition fails at K.
std::size_t side_condition_start(const IntegerSequence& seq, std::size_t K);

struct FiltrationCheck {
  std::size_t k = 0;
  Rational epsilon;
  Rational max_deviation;
  bool deviation_holds = false;
  Rational good_measure;
  Rational good_bound;
  bool side_condition = false;
  bool pre_asymptotic = false;  // k < k0
  bool good_measure_holds = false;
  std::size_t atoms = 0;
};

/// Exact checks of |T_k - X_k| <= eps_k and of the good-atom measure bound for k = 1..K.
std::vector<FiltrationCheck> verify_filtration_bounds(const IntegerSequence& seq, std::size_t K);

/// Prohorov distance, exact for rational supports.
Rational prohorov_distance_exact(const DiscreteDistribution& p, const DiscreteDistribution& q);
double prohorov_distance(const DiscreteDistribution& p, const DiscreteDistribution& q);

struct JointMass {
  std::size_t i;  // index into P1 support
  std::size_t j;  // index into P2 support
  Rational mass;
};

struct Coupling {
  std::vector<JointMass> cells;  // sorted by (i, j)
  Rational epsilon;              // requested epsilon
  Rational effective_epsilon;    // epsilon (1 + 1e-12)
  Rational flow;                 // mass placed on pairs closer than effective_epsilon
  Rational exceedance;           // mass on pairs with 0 < |x - y| >= effective_epsilon
};

/// Joint law with marginals P1, P2 placing at most epsilon of mass on
/// |x - y| >= epsilon: maximum flow on the close pairs, residual mass matched
/// north-west corner. Throws DomainError below feasibility.
Coupling strassen_coupling(const DiscreteDistribution& p, const DiscreteDistribution& q, const Rational& epsilon);

/// Row and column sums of the coupling equal the marginals exactly.
bool coupling_marginals_exact(const Coupling& c, const DiscreteDistribution& p, const DiscreteDistribution& q);

struct CouplingRow {
  std::size_t k = 0;
  BigInt n_k;
  double epsilon = 0.0;
  double delta = 0.0;
  std::uint64_t exceed_count = 0;     // |{n_k x} - Z_k| >= delta_k
  std::uint64_t exceed_xy_count = 0;  // |X_k - Y_k| >= delta_k
  std::uint64_t good_count = 0;       // replicas on good atoms of F_{k-1}
  double exceedance = 0.0;
  double exceedance_xy = 0.0;
  double wilson_lower = 0.0;
  bool vacuous = false;  // delta_k >= 1
  bool pass = false;
};

struct CouplingReport {
  std::vector<CouplingRow> rows;
  std::size_t replicas = 0;
  double max_abs_correlation = 0.0;  // over pairs (Z_k, Z_l), k != l
  double correlation_limit = 0.0;    // 4 / sqrt(M)
  bool pass = false;

  void write_csv(std::ostream& out) const;
};

/// Wilson score interval lower end for x successes in m trials.
double wilson_lower(std::uint64_t x, std::uint64_t m, double z);

/// Monte Carlo run of the construction for k = 1..K with M replicas.
CouplingReport simulate_coupling(const IntegerSequence& seq, std::size_t K, std::size_t M, std::uint64_t seed,
                                 unsigned threads = 0);

}  // namespace laclab
