#include "laclab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <queue>

#include "laclab/error.hpp"
#include "laclab/parallel.hpp"
#include "laclab/philox.hpp"

namespace laclab {

namespace {

using i128 = __int128;
using u128 = unsigned __int128;

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Fraction make_fraction(i128 num, i128 den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num > std::numeric_limits<std::int64_t>::max() || num < std::numeric_limits<std::int64_t>::min() ||
      den > std::numeric_limits<std::int64_t>::max()) {
    throw std::overflow_error("fraction exceeds 64-bit range");
  }
  return {static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

std::vector<std::int64_t> small_terms(const IntegerSequence& seq, std::size_t count) {
  if (count > seq.size()) throw DomainError("sequence too short: need n_" + std::to_string(count));
  if (seq.term(count) > kFiltrationLimit) {
    throw GuardError("filtration guard: n_" + std::to_string(count) + " = " + to_decimal(seq.term(count)) +
                     " exceeds 2^22");
  }
  std::vector<std::int64_t> out;
  out.reserve(count);
  for (std::size_t j = 1; j <= count; ++j) out.push_back(seq.term(j).get_si());
  return out;
}

// Mean of {n x} on [a, b) when no multiple of 1/n lies inside.
struct LinearPiece {
  Fraction value;
  Fraction deviation;  // n (b - a) / 2
};

LinearPiece linear_piece(std::int64_t n, const Fraction& a, const Fraction& b) {
  const i128 c = static_cast<i128>(n) * a.num / a.den;
  if (static_cast<i128>(n) * b.num > (c + 1) * b.den) {
    throw std::logic_error("atom crosses a multiple of 1/n_k");
  }
  const i128 den = static_cast<i128>(2) * a.den * b.den;
  const i128 sum = static_cast<i128>(a.num) * b.den + static_cast<i128>(b.num) * a.den;
  const i128 diff = static_cast<i128>(b.num) * a.den - static_cast<i128>(a.num) * b.den;
  return {make_fraction(n * sum - 2 * c * a.den * b.den, den), make_fraction(n * diff, den)};
}

// Dinic maximum flow with exact rational capacities.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes) : graph_(nodes), level_(nodes), it_(nodes) {}

  std::size_t add_edge(std::size_t from, std::size_t to, const Rational& cap) {
    graph_[from].push_back({to, graph_[to].size(), cap});
    graph_[to].push_back({from, graph_[from].size() - 1, Rational(0)});
    return graph_[from].size() - 1;
  }

  Rational run(std::size_t s, std::size_t t) {
    Rational total = 0;
    while (bfs(s, t)) {
      std::fill(it_.begin(), it_.end(), 0);
      while (true) {
        Rational pushed = dfs(s, t, Rational(-1));
        if (sgn(pushed) <= 0) break;
        total += pushed;
      }
    }
    return total;
  }

  const Rational& residual(std::size_t node, std::size_t edge) const { return graph_[node][edge].cap; }

 private:
  struct Edge {
    std::size_t to;
    std::size_t rev;
    Rational cap;
  };

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (const auto& e : graph_[v]) {
        if (sgn(e.cap) > 0 && level_[e.to] < 0) {
          level_[e.to] = level_[v] + 1;
          q.push(e.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  // limit < 0 stands for an unbounded push from the source.
  Rational dfs(std::size_t v, std::size_t t, const Rational& limit) {
    if (v == t) return limit;
    for (auto& i = it_[v]; i < graph_[v].size(); ++i) {
      Edge& e = graph_[v][i];
      if (sgn(e.cap) <= 0 || level_[e.to] != level_[v] + 1) continue;
      const Rational& bound = (sgn(limit) < 0 || e.cap < limit) ? e.cap : limit;
      Rational got = dfs(e.to, t, bound);
      if (sgn(got) > 0) {
        e.cap -= got;
        graph_[e.to][e.rev].cap += got;
        return got;
      }
    }
    return Rational(0);
  }

  std::vector<std::vector<Edge>> graph_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
};

Rational abs_diff(const Rational& a, const Rational& b) { return a < b ? Rational(b - a) : Rational(a - b); }

// Flow of P into Q over the pairs accepted by `close`; returns total and the
// per-pair flows.
template <class Close>
Rational transport(const DiscreteDistribution& p, const DiscreteDistribution& q, Close close,
                   std::vector<JointMass>* pairs) {
  const std::size_t n1 = p.size(), n2 = q.size();
  MaxFlow flow(n1 + n2 + 2);
  const std::size_t s = n1 + n2, t = n1 + n2 + 1;
  for (std::size_t i = 0; i < n1; ++i) flow.add_edge(s, i, p.masses()[i]);
  for (std::size_t j = 0; j < n2; ++j) flow.add_edge(n1 + j, t, q.masses()[j]);
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> middle;
  const Rational unit(1);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      if (close(p.support()[i], q.support()[j])) middle.emplace_back(i, j, flow.add_edge(i, n1 + j, unit));
    }
  }
  Rational total = flow.run(s, t);
  if (pairs) {
    for (const auto& [i, j, e] : middle) {
      Rational used = unit - flow.residual(i, e);
      if (sgn(used) > 0) pairs->push_back({i, j, used});
    }
  }
  return total;
}

void check_size(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.size() == 0 || q.size() == 0) throw DomainError("distributions must be nonempty");
  if (p.size() + q.size() > 10000) throw GuardError("support sizes limited to 10^4 in total");
  if (p.size() * q.size() > (std::size_t{1} << 22)) throw GuardError("support product limited to 2^22 pairs");
}

}  // namespace

Rational Fraction::to_rational() const {
  Rational r(BigInt(static_cast<long>(num)), BigInt(static_cast<long>(den)));
  r.canonicalize();
  return r;
}

// ---------------------------------------------------------------------------

GridFiltration::GridFiltration(const IntegerSequence& seq, std::size_t level) : level_(level) {
  terms_ = small_terms(seq, level + 1);
  const std::int64_t top = terms_.back();
  cuts_.reserve(static_cast<std::size_t>(top) + 1);
  for (std::int64_t i = 0; i <= top; ++i) {
    const std::int64_t g = std::gcd(i, top);
    cuts_.push_back({i / g, top / g});
  }
  std::vector<Fraction> list, merged;
  for (std::size_t j = 0; j + 1 < terms_.size(); ++j) {
    const std::int64_t n = terms_[j];
    list.clear();
    for (std::int64_t i = 0; i <= n; ++i) {
      const std::int64_t g = std::gcd(i, n);
      list.push_back({i / g, n / g});
    }
    merged.clear();
    merged.reserve(cuts_.size() + list.size());
    std::merge(cuts_.begin(), cuts_.end(), list.begin(), list.end(), std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    cuts_.swap(merged);
  }
}

std::size_t GridFiltration::locate(const FixedPoint& x) const {
  BigInt one = 1;
  one <<= static_cast<mp_bitcnt_t>(x.bits);
  // first cut strictly greater than x
  auto it = std::upper_bound(cuts_.begin(), cuts_.end(), 0, [&](int, const Fraction& c) {
    return x.numerator * c.den < BigInt(static_cast<long>(c.num)) * one;
  });
  if (it == cuts_.begin() || it == cuts_.end()) throw DomainError("point outside [0,1)");
  return static_cast<std::size_t>(it - cuts_.begin()) - 1;
}

bool GridFiltration::refines(const GridFiltration& coarser) const {
  for (const auto& c : coarser.cuts()) {
    if (!std::binary_search(cuts_.begin(), cuts_.end(), c)) return false;
  }
  return true;
}

ConditionalExpectation conditional_expectation_step(const GridFiltration& filtration, std::size_t k) {
  if (k < 1 || k != filtration.level()) throw DomainError("X_k needs the filtration of level k >= 1");
  ConditionalExpectation out;
  out.k = k;
  const std::int64_t n = filtration.term(k);
  out.epsilon = make_fraction(n, filtration.term(k + 1));
  out.values.reserve(filtration.atom_count());
  for (std::size_t i = 0; i < filtration.atom_count(); ++i) {
    const auto piece = linear_piece(n, filtration.atom_left(i), filtration.atom_right(i));
    out.values.push_back(piece.value);
    if (out.max_deviation < piece.deviation) out.max_deviation = piece.deviation;
  }
  out.bound_holds = out.max_deviation <= out.epsilon;
  return out;
}

ConditionalExpectation conditional_expectation_step(const IntegerSequence& seq, std::size_t k) {
  return conditional_expectation_step(GridFiltration(seq, k), k);
}

DiscreteDistribution::DiscreteDistribution(std::vector<Rational> support, std::vector<Rational> masses) {
  if (support.size() != masses.size() || support.empty()) throw DomainError("support and masses must match and be nonempty");
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
  Rational total = 0;
  for (std::size_t idx : order) {
    if (sgn(masses[idx]) <= 0) throw DomainError("masses must be positive");
    if (support[idx] < 0 || support[idx] > 1) throw DomainError("support must lie in [0,1]");
    total += masses[idx];
    if (!support_.empty() && support_.back() == support[idx]) {
      masses_.back() += masses[idx];
    } else {
      support_.push_back(support[idx]);
      masses_.push_back(masses[idx]);
    }
  }
  if (total != 1) throw DomainError("masses must sum to exactly 1 (got " + to_string(total) + ")");
}

DiscreteDistribution DiscreteDistribution::point_mass(const Rational& x) { return DiscreteDistribution({x}, {Rational(1)}); }

DiscreteDistribution expectation_distribution(const GridFiltration& filtration, const ConditionalExpectation& step) {
  std::vector<std::size_t> order(step.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return step.values[a] < step.values[b]; });
  std::vector<Rational> support, masses;
  for (std::size_t idx : order) {
    const Fraction a = filtration.atom_left(idx), b = filtration.atom_right(idx);
    const Fraction len = make_fraction(static_cast<i128>(b.num) * a.den - static_cast<i128>(a.num) * b.den,
                                       static_cast<i128>(a.den) * b.den);
    if (!support.empty() && step.values[idx] == Fraction{support.back().get_num().get_si(), support.back().get_den().get_si()}) {
      masses.back() += len.to_rational();
    } else {
      support.push_back(step.values[idx].to_rational());
      masses.push_back(len.to_rational());
    }
  }
  return DiscreteDistribution(std::move(support), std::move(masses));
}

GoodAtomReport good_atoms(const IntegerSequence& seq, std::size_t k) {
  const auto n = small_terms(seq, k + 1);
  GoodAtomReport r;
  r.k = k;
  const std::int64_t top = n[k];
  r.cells = static_cast<std::uint64_t>(top);
  r.good.assign(static_cast<std::size_t>(top), 1);
  for (std::size_t m = 0; m < k; ++m) {
    for (std::int64_t i = 1; i < n[m]; ++i) {
      const std::int64_t pos = i * top;
      if (pos % n[m] != 0) r.good[static_cast<std::size_t>(pos / n[m])] = 0;
    }
  }
  r.good_cells = static_cast<std::uint64_t>(std::count(r.good.begin(), r.good.end(), 1));
  r.measure = Rational(BigInt(static_cast<unsigned long>(r.good_cells)), BigInt(static_cast<long>(top)));
  r.measure.canonicalize();
  std::int64_t prefix = 0;
  for (std::size_t m = 0; m < k; ++m) prefix += n[m];
  if (k == 0) {
    r.bound = 1;
    r.side_condition = true;
  } else {
    r.bound = Rational(1) - Rational(BigInt(2 * n[k - 1]), BigInt(static_cast<long>(top)));
    r.bound.canonicalize();
    r.side_condition = prefix <= 2 * n[k - 1];
  }
  r.bound_holds = r.measure >= r.bound;
  return r;
}

std::size_t side_condition_start(const IntegerSequence& seq, std::size_t K) {
  if (K == 0 || K > seq.size()) throw DomainError("K out of range");
  std::vector<BigInt> prefix(K + 1, BigInt(0));
  for (std::size_t k = 1; k <= K; ++k) prefix[k] = prefix[k - 1] + seq.term(k);
  std::size_t k0 = K + 1;
  for (std::size_t k = K; k >= 1; --k) {
    if (prefix[k] <= 2 * seq.term(k)) k0 = k; else break;
  }
  return k0;
}

std::vector<FiltrationCheck> verify_filtration_bounds(const IntegerSequence& seq, std::size_t K) {
  if (K == 0) throw DomainError("K must be >= 1");
  const std::size_t k0 = side_condition_start(seq, K);
  std::vector<FiltrationCheck> out;
  for (std::size_t k = 1; k <= K; ++k) {
    FiltrationCheck c;
    c.k = k;
    {
      GridFiltration f(seq, k);
      const auto step = conditional_expectation_step(f, k);
      c.atoms = f.atom_count();
      c.epsilon = step.epsilon.to_rational();
      c.max_deviation = step.max_deviation.to_rational();
      c.deviation_holds = step.bound_holds;
    }
    const auto g = good_atoms(seq, k);
    c.good_measure = g.measure;
    c.good_bound = g.bound;
    c.side_condition = g.side_condition;
    c.pre_asymptotic = k < k0;
    c.good_measure_holds = g.bound_holds;
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------

Rational prohorov_distance_exact(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  check_size(p, q);
  std::vector<Rational> levels{Rational(0)};
  for (const auto& x : p.support()) {
    for (const auto& y : q.support()) levels.push_back(abs_diff(x, y));
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto flow_at = [&](std::size_t a) {
    const Rational& e = levels[a];
    return transport(p, q, [&](const Rational& x, const Rational& y) { return abs_diff(x, y) <= e; }, nullptr);
  };
  // pi = min_a max(e_a, 1 - F_a); e_a - (1 - F_a) increases with a.
  std::size_t lo = 0, hi = levels.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (levels[mid] >= Rational(1) - flow_at(mid)) hi = mid; else lo = mid + 1;
  }
  if (lo == 0) return levels[0];
  Rational before = Rational(1) - flow_at(lo - 1);
  return levels[lo] < before ? levels[lo] : before;
}

double prohorov_distance(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  return to_double(prohorov_distance_exact(p, q));
}

Coupling strassen_coupling(const DiscreteDistribution& p, const DiscreteDistribution& q, const Rational& epsilon) {
  check_size(p, q);
  if (sgn(epsilon) < 0) throw DomainError("epsilon must be >= 0");
  Coupling c;
  c.epsilon = epsilon;
  c.effective_epsilon = epsilon * Rational(BigInt("1000000000001"), BigInt("1000000000000"));
  const Rational& eff = c.effective_epsilon;
  std::vector<JointMass> flow_pairs;
  c.flow = transport(
      p, q,
      [&](const Rational& x, const Rational& y) {
        const Rational d = abs_diff(x, y);
        return sgn(d) == 0 || d < eff;
      },
      &flow_pairs);
  if (c.flow < Rational(1) - eff) {
    throw DomainError("epsilon " + to_string(epsilon) + " is below the Prohorov distance: close-pair flow " +
                      to_string(c.flow));
  }
  std::vector<Rational> rest_p = p.masses(), rest_q = q.masses();
  std::map<std::pair<std::size_t, std::size_t>, Rational> joint;
  for (const auto& m : flow_pairs) {
    rest_p[m.i] -= m.mass;
    rest_q[m.j] -= m.mass;
    joint[{m.i, m.j}] += m.mass;
  }
  // North-west corner on the residual masses.
  std::size_t i = 0, j = 0;
  while (i < rest_p.size() && j < rest_q.size()) {
    if (sgn(rest_p[i]) == 0) { ++i; continue; }
    if (sgn(rest_q[j]) == 0) { ++j; continue; }
    const Rational m = rest_p[i] < rest_q[j] ? rest_p[i] : rest_q[j];
    joint[{i, j}] += m;
    rest_p[i] -= m;
    rest_q[j] -= m;
  }
  c.exceedance = 0;
  for (auto& [key, mass] : joint) {
    const Rational d = abs_diff(p.support()[key.first], q.support()[key.second]);
    if (sgn(d) > 0 && d >= eff) c.exceedance += mass;
    c.cells.push_back({key.first, key.second, mass});
  }
  return c;
}

bool coupling_marginals_exact(const Coupling& c, const DiscreteDistribution& p, const DiscreteDistribution& q) {
  std::vector<Rational> row(p.size(), Rational(0)), col(q.size(), Rational(0));
  for (const auto& m : c.cells) {
    if (m.i >= p.size() || m.j >= q.size() || sgn(m.mass) <= 0) return false;
    row[m.i] += m.mass;
    col[m.j] += m.mass;
  }
  return row == p.masses() && col == q.masses();
}

// ---------------------------------------------------------------------------

double wilson_lower(std::uint64_t x, std::uint64_t m, double z) {
  if (m == 0) return 0.0;
  const double n = static_cast<double>(m);
  const double p = static_cast<double>(x) / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return std::max(0.0, center - half);
}

void CouplingReport::write_csv(std::ostream& out) const {
  out << "k,n_k,eps_k,delta_k,exceedance,M,pass\n";
  char buf[160];
  for (const auto& r : rows) {
    out << r.k << ',' << to_decimal(r.n_k) << ',';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%zu,%s\n", r.epsilon, r.delta, r.exceedance, replicas,
                  r.pass ? "true" : "false");
    out << buf;
  }
}

namespace {

// Conditional law of Y given the F_k atom inside a good F_{k-1} cell.
struct CouplingPlan {
  std::vector<std::vector<std::pair<double, std::uint32_t>>> rows;  // (cumulative probability, j)
};

CouplingPlan build_plan(std::int64_t nk, std::int64_t nk1, std::int64_t residue, std::int64_t grid) {
  // Cuts of the cell in u = {n_k x} coordinates sit at (f0 + m n_k) / n_{k+1}.
  const std::int64_t f0 = residue == 0 ? nk : nk - residue;
  std::vector<std::int64_t> bounds{0};
  for (std::int64_t v = f0; v < nk1; v += nk) bounds.push_back(v);
  bounds.push_back(nk1);
  std::vector<Rational> xs, ps;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    xs.emplace_back(BigInt(static_cast<long>(bounds[i] + bounds[i + 1])), BigInt(static_cast<long>(2 * nk1)));
    ps.emplace_back(BigInt(static_cast<long>(bounds[i + 1] - bounds[i])), BigInt(static_cast<long>(nk1)));
    xs.back().canonicalize();
    ps.back().canonicalize();
  }
  std::vector<Rational> ys, qs;
  for (std::int64_t j = 0; j < grid; ++j) {
    ys.emplace_back(BigInt(static_cast<long>(2 * j + 1)), BigInt(static_cast<long>(2 * grid)));
    ys.back().canonicalize();
    qs.emplace_back(BigInt(1), BigInt(static_cast<long>(grid)));
  }
  // Atoms are kept separate even when midpoints would coincide, so index by atom.
  const DiscreteDistribution p(xs, ps), q(ys, qs);
  if (p.size() != xs.size()) throw std::logic_error("coincident atom midpoints");
  Rational eps(BigInt(static_cast<long>(nk)), BigInt(static_cast<long>(nk1)));
  eps.canonicalize();
  const auto c = strassen_coupling(p, q, eps);
  CouplingPlan plan;
  plan.rows.resize(p.size());
  std::vector<double> acc(p.size(), 0.0);
  for (const auto& m : c.cells) {
    Rational share = m.mass / p.masses()[m.i];
    acc[m.i] += to_double(share);
    plan.rows[m.i].emplace_back(acc[m.i], static_cast<std::uint32_t>(m.j));
  }
  return plan;
}

u128 to_u128(const BigInt& v) {
  return (static_cast<u128>(mpz_getlimbn(v.get_mpz_t(), 1)) << 64) | static_cast<u128>(mpz_getlimbn(v.get_mpz_t(), 0));
}

double u128_to_unit(u128 num, std::size_t bits) { return std::ldexp(static_cast<double>(num), -static_cast<int>(bits)); }

}  // namespace

CouplingReport simulate_coupling(const IntegerSequence& seq, std::size_t K, std::size_t M, std::uint64_t seed,
                                 unsigned threads) {
  if (K == 0) throw DomainError("K must be >= 1");
  if (M == 0) throw DomainError("M must be >= 1");
  const auto n = small_terms(seq, K + 1);
  const std::size_t bits = ceil_log2(seq.term(K + 1)) + 64;
  const u128 mask = (u128{1} << bits) - 1;

  std::vector<double> delta(K + 1);
  std::vector<std::int64_t> grid(K + 1);
  std::vector<std::vector<std::uint8_t>> good(K + 1);
  for (std::size_t k = 1; k <= K; ++k) {
    delta[k] = to_double(delta_exact(seq, k));
    grid[k] = (2 * n[k] + n[k - 1] - 1) / n[k - 1];
    good[k] = good_atoms(seq, k - 1).good;
  }

  std::mutex plan_mutex;
  std::map<std::pair<std::size_t, std::int64_t>, CouplingPlan> plans;
  auto plan_for = [&](std::size_t k, std::int64_t residue) -> const CouplingPlan& {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = plans.find({k, residue});
    if (it == plans.end()) it = plans.emplace(std::make_pair(k, residue), build_plan(n[k - 1], n[k], residue, grid[k])).first;
    return it->second;
  };

  std::vector<std::uint8_t> flags(M * K, 0);  // bit 0: |T-Z| >= delta, bit 1: |X-Y| >= delta, bit 2: good cell
  std::vector<double> z_values(M * K, 0.0);

  for_each_replica(M, threads, [&](std::size_t r) {
    const FixedPoint x = sample_point(seed, r, bits);
    const u128 num = to_u128(x.numerator);
    CounterRng aux(seed, r, Stream::auxiliary);
    for (std::size_t k = 1; k <= K; ++k) {
      const std::int64_t nk = n[k - 1], nk1 = n[k];
      const u128 prod = static_cast<u128>(nk) * num;
      const auto cell = static_cast<std::int64_t>(prod >> bits);
      const u128 t_num = prod & mask;
      const double t_val = u128_to_unit(t_num, bits);

      // Atom of F_k containing x: tightest cuts i/n_m, m <= k+1, around it.
      Fraction a{0, 1}, b{1, 1};
      for (std::size_t m = 0; m <= k; ++m) {
        const auto fl = static_cast<std::int64_t>((static_cast<u128>(n[m]) * num) >> bits);
        const Fraction left{fl, n[m]}, right{fl + 1, n[m]};
        if (a < left) a = left;
        if (right < b) b = right;
      }
      const double x_val = linear_piece(nk, a, b).value.to_double();

      const double eta1 = aux.uniform();
      const double eta2 = aux.uniform();
      std::int64_t j;
      const bool on_good = good[k][static_cast<std::size_t>(cell)] != 0;
      if (on_good) {
        const std::int64_t residue = static_cast<std::int64_t>((static_cast<i128>(cell) * nk1) % nk);
        const std::int64_t f0 = residue == 0 ? nk : nk - residue;
        const auto w = static_cast<std::int64_t>((t_num * static_cast<u128>(nk1)) >> bits);
        const std::size_t atom = w >= f0 ? static_cast<std::size_t>((w - f0) / nk + 1) : 0;
        const auto& row = plan_for(k, residue).rows.at(atom);
        j = row.back().second;
        for (const auto& [cum, idx] : row) {
          if (eta1 < cum) {
            j = idx;
            break;
          }
        }
      } else {
        j = std::min<std::int64_t>(grid[k] - 1, static_cast<std::int64_t>(eta1 * static_cast<double>(grid[k])));
      }
      const double g = static_cast<double>(grid[k]);
      const double y_val = (2.0 * static_cast<double>(j) + 1.0) / (2.0 * g);
      const double z_val = y_val + (eta2 - 0.5) / g;
      std::uint8_t f = 0;
      if (std::fabs(t_val - z_val) >= delta[k]) f |= 1;
      if (std::fabs(x_val - y_val) >= delta[k]) f |= 2;
      if (on_good) f |= 4;
      flags[r * K + (k - 1)] = f;
      z_values[r * K + (k - 1)] = z_val;
    }
  });

  CouplingReport report;
  report.replicas = M;
  report.pass = true;
  for (std::size_t k = 1; k <= K; ++k) {
    CouplingRow row;
    row.k = k;
    row.n_k = seq.term(k);
    row.epsilon = static_cast<double>(n[k - 1]) / static_cast<double>(n[k]);
    row.delta = delta[k];
    for (std::size_t r = 0; r < M; ++r) {
      const auto f = flags[r * K + (k - 1)];
      row.exceed_count += f & 1;
      row.exceed_xy_count += (f >> 1) & 1;
      row.good_count += (f >> 2) & 1;
    }
    row.exceedance = static_cast<double>(row.exceed_count) / static_cast<double>(M);
    row.exceedance_xy = static_cast<double>(row.exceed_xy_count) / static_cast<double>(M);
    row.wilson_lower = wilson_lower(row.exceed_count, M, 3.0);
    row.vacuous = row.delta >= 1.0;
    row.pass = row.vacuous || row.wilson_lower <= row.delta;
    report.pass = report.pass && row.pass;
    report.rows.push_back(std::move(row));
  }

  report.correlation_limit = 4.0 / std::sqrt(static_cast<double>(M));
  if (M >= 2) {
    std::vector<double> mean(K, 0.0), sd(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      CompensatedSum s;
      for (std::size_t r = 0; r < M; ++r) s.add(z_values[r * K + k]);
      mean[k] = s.value() / static_cast<double>(M);
      CompensatedSum v;
      for (std::size_t r = 0; r < M; ++r) {
        const double d = z_values[r * K + k] - mean[k];
        v.add(d * d);
      }
      sd[k] = std::sqrt(v.value());
    }
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t l = k + 1; l < K; ++l) {
        CompensatedSum c;
        for (std::size_t r = 0; r < M; ++r) c.add((z_values[r * K + k] - mean[k]) * (z_values[r * K + l] - mean[l]));
        const double corr = c.value() / (sd[k] * sd[l]);
        report.max_abs_correlation = std::max(report.max_abs_correlation, std::fabs(corr));
      }
    }
  }
  report.pass = report.pass && report.max_abs_correlation <= report.correlation_limit;
  return report;
}

}  // namespace laclab
