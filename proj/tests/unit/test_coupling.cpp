#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "laclab/coupling.hpp"
#include "laclab/error.hpp"

using namespace laclab;

namespace {

IntegerSequence seq_of(std::initializer_list<long> values) {
  std::vector<BigInt> terms;
  for (long v : values) terms.emplace_back(v);
  return IntegerSequence(terms, SequenceSpec::explicit_list(terms));
}

Rational abs_diff(const Rational& a, const Rational& b) { return a < b ? Rational(b - a) : Rational(a - b); }

// inf over eps of the defining inequalities, one direction, by enumerating
// every subset A of the support of p. Distances to A are step points of the
// open neighbourhood mass, so the infimum for A is min_j max(d_j, c_j).
Rational one_sided_by_subsets(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  const auto& xs = p.support();
  const auto& ys = q.support();
  Rational worst = 0;
  for (unsigned mask = 1; mask < (1u << xs.size()); ++mask) {
    Rational pa = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (mask & (1u << i)) pa += p.masses()[i];
    std::vector<Rational> dist(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) {
      bool first = true;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(mask & (1u << i))) continue;
        Rational d = abs_diff(xs[i], ys[j]);
        if (first || d < dist[j]) dist[j] = d;
        first = false;
      }
    }
    std::vector<Rational> levels{Rational(0)};
    levels.insert(levels.end(), dist.begin(), dist.end());
    Rational best = 1;
    for (const auto& level : levels) {
      Rational covered = 0;
      for (std::size_t j = 0; j < ys.size(); ++j)
        if (dist[j] <= level) covered += q.masses()[j];
      Rational gap = pa - covered;
      Rational candidate = std::max(level, gap);
      if (candidate < best) best = candidate;
    }
    if (best > worst) worst = best;
  }
  return worst;
}

Rational prohorov_by_subsets(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  return std::max(one_sided_by_subsets(p, q), one_sided_by_subsets(q, p));
}

DiscreteDistribution random_distribution(std::mt19937_64& rng, std::size_t max_size, long grid) {
  std::uniform_int_distribution<std::size_t> size(1, max_size);
  std::uniform_int_distribution<long> pos(0, grid);
  std::uniform_int_distribution<long> weight(1, 9);
  const std::size_t n = size(rng);
  std::vector<Rational> support, masses;
  long total = 0;
  std::vector<long> w(n);
  for (auto& v : w) total += v = weight(rng);
  for (std::size_t i = 0; i < n; ++i) {
    support.emplace_back(pos(rng), grid);
    support.back().canonicalize();
    masses.emplace_back(w[i], total);
    masses.back().canonicalize();
  }
  return DiscreteDistribution(support, masses);
}

Rational exceedance_at(const Coupling& c, const DiscreteDistribution& p, const DiscreteDistribution& q,
                       const Rational& eps) {
  Rational mass = 0;
  for (const auto& cell : c.cells) {
    const Rational d = abs_diff(p.support()[cell.i], q.support()[cell.j]);
    if (sgn(d) > 0 && d >= eps) mass += cell.mass;
  }
  return mass;
}

}  // namespace

TEST_CASE("filtration atoms") {
  const auto s = seq_of({2, 4, 16});
  GridFiltration level1(s, 1);
  REQUIRE(level1.atom_count() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(level1.atom_left(i) == Fraction{static_cast<std::int64_t>(i), 4});
    CHECK(level1.atom_right(i) == Fraction{static_cast<std::int64_t>(i + 1), 4});
  }
  GridFiltration level0(s, 0);
  CHECK(level0.atom_count() == 2);
  GridFiltration level2(s, 2);
  CHECK(level2.refines(level1));
  CHECK(level1.refines(level0));
  CHECK_FALSE(level0.refines(level1));
  CHECK_THROWS_AS(GridFiltration(generate(SequenceSpec::geometric(2, 30)), 25), GuardError);
}

TEST_CASE("filtration nesting for a non-nested sequence") {
  const auto s = seq_of({3, 7, 30, 211});
  for (std::size_t k = 1; k < 3; ++k) CHECK(GridFiltration(s, k).refines(GridFiltration(s, k - 1)));
  GridFiltration f(s, 2);
  for (std::size_t i = 0; i < f.atom_count(); ++i) {
    const Fraction len{f.atom_right(i).num * f.atom_left(i).den - f.atom_left(i).num * f.atom_right(i).den,
                       f.atom_right(i).den * f.atom_left(i).den};
    CHECK(len <= Fraction{1, 30});
  }
}

TEST_CASE("conditional expectation step") {
  const auto s = seq_of({2, 4});
  const auto step = conditional_expectation_step(s, 1);
  REQUIRE(step.values.size() == 4);
  CHECK(step.values[0] == Fraction{1, 4});
  CHECK(step.values[1] == Fraction{3, 4});
  CHECK(step.epsilon == Fraction{1, 2});
  CHECK(step.bound_holds);

  // atoms that are whole periods of {n_k x} average to 1/2
  const auto coarse = seq_of({4, 5});
  GridFiltration f(coarse, 1);
  const auto e = conditional_expectation_step(f, 1);
  CHECK(e.bound_holds);

  for (const auto& spec : {SequenceSpec::geometric(3, 6), SequenceSpec::power_gap(1.5, 2, 7)}) {
    const auto seq = generate(spec);
    for (std::size_t k = 1; k + 1 <= seq.size(); ++k) {
      const auto c = conditional_expectation_step(seq, k);
      CHECK(c.bound_holds);
      CHECK(c.max_deviation <= c.epsilon);
    }
  }
}

TEST_CASE("good atoms") {
  const auto s = seq_of({2, 4});
  const auto g = good_atoms(s, 1);
  CHECK(g.measure == Rational(1));
  CHECK(good_atoms(s, 0).measure == Rational(1));
  const auto geo = good_atoms(generate(SequenceSpec::geometric(4, 5)), 3);
  CHECK(geo.measure >= Rational(1, 2));
  CHECK(geo.bound_holds);
  const auto odd = seq_of({3, 7, 30, 211, 2000});
  const std::size_t k0 = side_condition_start(odd, 4);
  for (std::size_t k = std::max<std::size_t>(k0, 1); k <= 4; ++k) CHECK(good_atoms(odd, k).bound_holds);
}

TEST_CASE("exact filtration bounds along geometric(8)") {
  const auto checks = verify_filtration_bounds(generate(SequenceSpec::geometric(8, 7)), 6);
  REQUIRE(checks.size() == 6);
  for (const auto& c : checks) {
    CHECK(c.deviation_holds);
    CHECK((c.pre_asymptotic || c.good_measure_holds));
  }
}

TEST_CASE("Prohorov examples") {
  const auto zero = DiscreteDistribution::point_mass(Rational(0));
  const auto far = DiscreteDistribution::point_mass(Rational(3, 10));
  CHECK(prohorov_distance_exact(zero, zero) == 0);
  CHECK(prohorov_distance_exact(zero, far) == Rational(3, 10));
  DiscreteDistribution two({Rational(0), Rational(1, 2)}, {Rational(1, 2), Rational(1, 2)});
  CHECK(prohorov_distance_exact(two, zero) == Rational(1, 2));
  CHECK(prohorov_distance(two, zero) == 0.5);
  CHECK_THROWS_AS(DiscreteDistribution({Rational(0)}, {Rational(1, 2)}), DomainError);
}

TEST_CASE("Prohorov distance equals the subset definition") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 150; ++trial) {
    const auto p = random_distribution(rng, 6, 20);
    const auto q = random_distribution(rng, 6, 20);
    CHECK(prohorov_distance_exact(p, q) == prohorov_by_subsets(p, q));
  }
}

TEST_CASE("Prohorov metric properties") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_distribution(rng, 8, 40);
    const auto q = random_distribution(rng, 8, 40);
    const auto r = random_distribution(rng, 8, 40);
    const Rational pq = prohorov_distance_exact(p, q);
    CHECK(pq == prohorov_distance_exact(q, p));
    CHECK(prohorov_distance_exact(p, p) == 0);
    CHECK(to_double(prohorov_distance_exact(p, r)) <= to_double(pq + prohorov_distance_exact(q, r)) + 1e-9);
  }
}

TEST_CASE("Strassen coupling") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_distribution(rng, 10, 50);
    const auto q = random_distribution(rng, 10, 50);
    const Rational eps = prohorov_distance_exact(p, q);
    const auto c = strassen_coupling(p, q, eps);
    CHECK(coupling_marginals_exact(c, p, q));
    CHECK(to_double(c.exceedance) <= to_double(eps) + 1e-9);
    CHECK(to_double(exceedance_at(c, p, q, c.effective_epsilon)) <= to_double(eps) + 1e-9);
    if (sgn(eps) > 0) CHECK_THROWS_AS(strassen_coupling(p, q, eps * Rational(1, 2)), DomainError);
  }
  const auto same = DiscreteDistribution({Rational(1, 3), Rational(2, 3)}, {Rational(1, 4), Rational(3, 4)});
  const auto diag = strassen_coupling(same, same, Rational(0));
  CHECK(diag.exceedance == 0);
  for (const auto& cell : diag.cells) CHECK(cell.i == cell.j);

  const auto at0 = DiscreteDistribution::point_mass(Rational(0));
  const auto at3 = DiscreteDistribution::point_mass(Rational(3, 10));
  const auto boundary = strassen_coupling(at0, at3, Rational(3, 10));
  REQUIRE(boundary.cells.size() == 1);
  CHECK(boundary.cells[0].mass == 1);
  CHECK(boundary.exceedance == 0);
}

TEST_CASE("X_k replica law matches the exact distribution") {
  const auto seq = generate(SequenceSpec::geometric(3, 5));
  const std::size_t k = 3;
  GridFiltration f(seq, k);
  const auto step = conditional_expectation_step(f, k);
  const auto law = expectation_distribution(f, step);
  std::map<Rational, std::uint64_t> hist;
  const std::size_t m = 20000;
  for (std::size_t r = 0; r < m; ++r) {
    const auto x = sample_point(123, r, 64);
    ++hist[step.values[f.locate(x)].to_rational()];
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) {
    const double expected = to_double(law.masses()[i]) * static_cast<double>(m);
    const double seen = static_cast<double>(hist[law.support()[i]]);
    chi2 += (seen - expected) * (seen - expected) / expected;
  }
  const double dof = static_cast<double>(law.size() - 1);
  // Wilson-Hilferty 99% point
  const double z = 2.326;
  const double critical = dof * std::pow(1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof)), 3);
  CHECK(chi2 < critical);
}

TEST_CASE("wilson lower bound") {
  CHECK(wilson_lower(0, 100, 3.0) == 0.0);
  CHECK(wilson_lower(50, 100, 1.96) == doctest::Approx(0.4038).epsilon(1e-3));
}

TEST_CASE("simulated coupling at small scale") {
  const auto seq = generate(SequenceSpec::geometric(16, 6));
  const auto report = simulate_coupling(seq, 4, 20000, 5, 1);
  REQUIRE(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    CHECK(row.exceedance >= 0.0);
    CHECK(row.exceedance <= 1.0);
    CHECK(row.pass);
  }
  CHECK(report.max_abs_correlation <= report.correlation_limit);
  CHECK(report.pass);
  const auto again = simulate_coupling(seq, 4, 20000, 5, 3);
  for (std::size_t i = 0; i < 4; ++i) CHECK(again.rows[i].exceed_count == report.rows[i].exceed_count);
}
