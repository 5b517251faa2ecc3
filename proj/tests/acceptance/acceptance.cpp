// Acceptance run: one verdict line per criterion.
//
//   laclab_acceptance [--only N] [--strict] [--threads T]
//
// Criteria whose failure is documented as unattainable are marked "known";
// they do not change the exit status unless --strict is given.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "laclab/cli.hpp"
#include "laclab/coupling.hpp"
#include "laclab/diophantine.hpp"
#include "laclab/discrepancy.hpp"
#include "laclab/limits.hpp"
#include "laclab/orbit.hpp"
#include "laclab/philox.hpp"
#include "laclab/seqgen.hpp"

using namespace laclab;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  bool known_failure = false;
  std::string detail;
};

unsigned g_threads = 0;

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

std::string ks_text(const KsCheck& c) {
  return fmt("%s ks=%.4f %s %.4f", c.label.c_str(), c.ks, c.upper ? "<=" : ">", c.threshold);
}

bool within(double seconds, double limit, std::string& detail) {
  detail += fmt("; %.1fs (limit %.0fs)", seconds, limit);
  return seconds < limit;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> random_points(CounterRng& rng, std::size_t n, bool on_grid) {
  std::vector<double> pts(n);
  for (double& p : pts) p = on_grid ? static_cast<double>(rng.next_u64() % 64) / 64.0 : rng.uniform();
  return pts;
}

Verdict discrepancy_oracle() {
  const auto start = Clock::now();
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    CounterRng rng(101, trial, Stream::iid);
    const std::size_t n = 1 + rng.next_u64() % 200;
    const auto pts = random_points(rng, n, trial % 4 == 0);
    const double gap = std::fabs(discrepancy(pts) - discrepancy_bruteforce(pts));
    worst = std::max(worst, gap);
    if (gap > 1e-12) ++mismatches;
  }
  Verdict v;
  v.detail = fmt("1000 sets, N<=200: %zu mismatches, max |formula - brute force| = %.2e", mismatches, worst);
  v.pass = within(seconds_since(start), 30, v.detail) && mismatches == 0;
  return v;
}

PeriodicFunction random_bounded_function(CounterRng& rng, std::uint64_t trial) {
  switch (trial % 7) {
    case 0: return PeriodicFunction::cosine();
    case 1: return PeriodicFunction::centered_frac();
    case 2: return PeriodicFunction::sign_sine();
    case 3: return PeriodicFunction::erdos_fortet();
    case 4: return PeriodicFunction::centered_indicator(rng.uniform());
    case 5: return PeriodicFunction::harmonic({{rng.uniform() - 0.5, rng.uniform() - 0.5}, {0.0, rng.uniform()}});
    default: return PeriodicFunction::truncated(PeriodicFunction::heavy_tail(1.5), 2.0 + 4.0 * rng.uniform());
  }
}

Verdict koksma() {
  const auto start = Clock::now();
  std::size_t violations = 0;
  double tightest = 0.0;
  const auto orbit_seq = generate(SequenceSpec::geometric(3, 200));
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    CounterRng rng(202, trial, Stream::iid);
    const auto f = random_bounded_function(rng, trial);
    const std::size_t n = 1 + rng.next_u64() % 200;
    std::vector<double> pts;
    if (trial % 3 == 0) {
      OrbitEvaluator orbit(orbit_seq, n, guarded_bits(orbit_seq, n));
      orbit.fractions(sample_point(202, trial, orbit.bits()), pts);
    } else {
      pts = random_points(rng, n, trial % 5 == 0);
    }
    const auto r = koksma_check(f, pts);
    if (!r.holds) ++violations;
    if (r.rhs > 0) tightest = std::max(tightest, r.lhs / r.rhs);
  }
  Verdict v;
  v.detail = fmt("1000 (f, point set) instances: %zu violations, max lhs/rhs = %.3f", violations, tightest);
  v.pass = within(seconds_since(start), 60, v.detail) && violations == 0;
  return v;
}

// Independent enumerations with machine integers.
Rational gcd_sum_enumerated(const std::vector<long>& n) {
  Rational s = 0;
  for (std::size_t i = 0; i < n.size(); ++i)
    for (std::size_t j = i; j < n.size(); ++j) {
      long a = n[i], b = n[j];
      while (b != 0) {
        const long t = a % b;
        a = b;
        b = t;
      }
      s += Rational(a * a, n[i] * n[j]);
    }
  s.canonicalize();
  return s;
}

std::uint64_t solutions_enumerated(const std::vector<long>& n, unsigned d, long nu) {
  std::uint64_t c = 0;
  for (long a = 1; a <= static_cast<long>(d); ++a)
    for (long b = 1; b <= static_cast<long>(d); ++b)
      for (std::size_t k = 0; k < n.size(); ++k)
        for (std::size_t l = 0; l < n.size(); ++l)
          if (!(nu == 0 && a == b && k == l) && a * n[k] - b * n[l] == nu) ++c;
  return c;
}

Verdict number_theory_oracles() {
  const auto start = Clock::now();
  std::size_t gcd_bad = 0, count_bad = 0, queries = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    CounterRng rng(303, trial, Stream::iid);
    const std::size_t len = 1 + rng.next_u64() % 64;
    std::vector<long> values;
    long v = 0;
    for (std::size_t i = 0; i < len; ++i) values.push_back(v += 1 + static_cast<long>(rng.next_u64() % 16));
    std::vector<BigInt> terms(values.begin(), values.end());
    const IntegerSequence seq(terms, SequenceSpec::explicit_list(terms));
    if (gcd_sum(seq) != gcd_sum_enumerated(values)) ++gcd_bad;
    const unsigned d = 1 + static_cast<unsigned>(trial % 4);
    for (long nu = -32; nu <= 32; nu += 1 + static_cast<long>(rng.next_u64() % 4)) {
      ++queries;
      if (count_solutions(seq, len, d, BigInt(nu)) != solutions_enumerated(values, d, nu)) ++count_bad;
    }
  }
  Verdict v;
  v.detail = fmt("100 sequences, N<=64: gcd_sum mismatches %zu; %zu Diophantine queries (d<=4, |nu|<=32), mismatches %zu",
                 gcd_bad, queries, count_bad);
  v.pass = within(seconds_since(start), 30, v.detail) && gcd_bad == 0 && count_bad == 0;
  return v;
}

Verdict coupling_bound() {
  const auto start = Clock::now();
  const auto seq = generate(SequenceSpec::geometric(8, 7));
  const auto report = simulate_coupling(seq, 6, 100000, 404, g_threads);
  bool rows_ok = true;
  std::string rows;
  for (const auto& r : report.rows) {
    rows_ok = rows_ok && r.pass;
    rows += fmt(" k=%zu:%.4f/%.4f%s", r.k, r.exceedance, r.delta, r.vacuous ? "(vacuous)" : "");
  }
  bool exact_ok = true;
  std::size_t pre = 0;
  for (const auto& c : verify_filtration_bounds(seq, 6)) {
    exact_ok = exact_ok && c.deviation_holds && (c.pre_asymptotic || c.good_measure_holds);
    if (c.pre_asymptotic) ++pre;
  }
  Verdict v;
  v.detail = fmt("geometric(8), K=6, M=1e5: exceedance/delta%s; max |corr| %.4f <= %.4f; exact deviation and good-atom bounds %s",
                 rows.c_str(), report.max_abs_correlation, report.correlation_limit, exact_ok ? "hold" : "FAIL");
  if (pre > 0) v.detail += fmt(" (%zu pre-asymptotic k)", pre);
  v.pass = within(seconds_since(start), 300, v.detail) && rows_ok && report.pass && exact_ok;
  return v;
}

Verdict from_experiment(const ExperimentResult& r, double limit_seconds, const std::string& what,
                        const std::vector<std::string>& known_labels = {}) {
  Verdict v;
  v.detail = what;
  bool pass = true;
  bool only_known = true;
  for (const auto& c : r.checks) {
    v.detail += "; " + ks_text(c);
    if (!c.pass) {
      pass = false;
      const bool known = std::find(known_labels.begin(), known_labels.end(), c.label) != known_labels.end();
      v.detail += known ? " FAIL (known)" : " FAIL";
      only_known = only_known && known;
    }
  }
  for (const auto& w : r.warnings) v.detail += "; warning: " + w;
  const bool fast = within(r.runtime_ms / 1000.0, limit_seconds, v.detail);
  v.pass = pass && fast;
  v.known_failure = !pass && fast && only_known;
  return v;
}

Verdict clt() {
  ExperimentConfig cfg;
  cfg.sequence = SequenceSpec::geometric(2, 4096);
  cfg.terms = 4096;
  cfg.replicas = 20000;
  cfg.seed = 7;
  cfg.threads = g_threads;
  cfg.with_control = true;
  return from_experiment(clt_experiment(cfg), 120, "cos, geometric(2), N=4096, M=2e4", {"single_term_control"});
}

Verdict erdos_fortet() {
  const auto r = erdos_fortet_experiment(4096, 20000, 7, g_threads, 0.05);
  return from_experiment(r, 120, "cos 2pi x + cos 4pi x along 2^k - 1, N=4096, M=2e4");
}

Verdict kolmogorov_law() {
  ExperimentConfig cfg;
  cfg.sequence = SequenceSpec::superlacunary_square(2, 256);
  cfg.terms = 256;
  cfg.replicas = 10000;
  cfg.seed = 7;
  cfg.threads = g_threads;
  cfg.with_control = true;
  return from_experiment(discrepancy_limit_experiment(cfg), 300, "superlacunary_square(2), N=256, M=1e4");
}

Verdict stable() {
  ExperimentConfig cfg;
  cfg.sequence = SequenceSpec::power_gap(2.0, 1, 1024);
  cfg.terms = 1024;
  cfg.replicas = 10000;
  cfg.seed = 7;
  cfg.threads = g_threads;
  cfg.alpha = 1.5;
  cfg.with_control = true;
  const bool gap = check_polynomial_gap(generate(cfg.sequence), 2.0);
  auto v = from_experiment(stable_experiment(cfg), 300,
                           std::string("alpha=3/2, power_gap(gamma=2), gap condition ") + (gap ? "holds" : "FAILS") +
                               ", N=1024, M=1e4");
  v.pass = v.pass && gap;
  return v;
}

Verdict frechet() {
  ExperimentConfig cfg;
  cfg.sequence = SequenceSpec::power_gap(2.0, 1, 1024);
  cfg.terms = 1024;
  cfg.replicas = 10000;
  cfg.seed = 7;
  cfg.threads = g_threads;
  cfg.alpha = 1.0;
  cfg.with_control = false;
  return from_experiment(frechet_experiment(cfg), 120, "alpha=1, power_gap(gamma=2), n=1024, M=1e4");
}

Verdict reference_values() {
  struct Item {
    const char* name;
    double value;
    double expected;
    double tolerance;
  };
  const std::vector<Item> items{
      {"kac(cos)", kac_variance(PeriodicFunction::cosine()).value, 0.5, 1e-8},
      {"kac(erdos-fortet)", kac_variance(PeriodicFunction::erdos_fortet()).value, 2.0, 1e-6},
      {"fukuyama(2)", fukuyama_constant(2), std::sqrt(42.0) / 9.0, 1e-12},
      {"Gamma(1/2,1/2;2)", gaussian_covariance(2, 0.5, 0.5), 0.25, 1e-9},
      {"omega2(cos,1/8)", l2_modulus(PeriodicFunction::cosine(), 0.125), 1.0, 1e-9},
      {"mixture variance", erdos_fortet_second_moment(), 1.0, 1e-6},
  };
  Verdict v;
  v.pass = true;
  for (const auto& it : items) {
    const double err = std::fabs(it.value - it.expected);
    const bool ok = err <= it.tolerance;
    v.pass = v.pass && ok;
    if (!v.detail.empty()) v.detail += "; ";
    v.detail += fmt("%s=%.12g (err %.1e%s)", it.name, it.value, err, ok ? "" : " FAIL");
  }
  return v;
}

DiscreteDistribution random_distribution(CounterRng& rng) {
  const std::size_t n = 1 + rng.next_u64() % 12;
  std::vector<Rational> support, masses;
  std::vector<long> w(n);
  long total = 0;
  for (auto& x : w) total += x = 1 + static_cast<long>(rng.next_u64() % 20);
  for (std::size_t i = 0; i < n; ++i) {
    Rational s(static_cast<long>(rng.next_u64() % 101), 100);
    s.canonicalize();
    Rational m(w[i], total);
    m.canonicalize();
    support.push_back(s);
    masses.push_back(m);
  }
  return DiscreteDistribution(support, masses);
}

// Smallest candidate eps with P(|X - Y| >= eps) <= eps under the product coupling.
Rational product_coupling_level(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  std::vector<std::pair<Rational, Rational>> cells;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) {
      Rational d = p.support()[i] - q.support()[j];
      if (d < 0) d = -d;
      cells.emplace_back(d, p.masses()[i] * q.masses()[j]);
    }
  auto exceed = [&](const Rational& eps) {
    Rational m = 0;
    for (const auto& [d, w] : cells)
      if (sgn(d) > 0 && d >= eps) m += w;
    return m;
  };
  std::vector<Rational> candidates{Rational(1)};
  for (const auto& [d, w] : cells) candidates.push_back(d);
  for (const auto& [d, w] : cells) candidates.push_back(exceed(d));
  Rational best = 1;
  for (const auto& c : candidates)
    if (exceed(c) <= c && c < best) best = c;
  return best;
}

Verdict prohorov_properties() {
  const auto start = Clock::now();
  std::size_t violations = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    CounterRng rng(505, trial, Stream::iid);
    const auto p = random_distribution(rng);
    const auto q = random_distribution(rng);
    const auto r = random_distribution(rng);
    const Rational pq = prohorov_distance_exact(p, q);
    const Rational qp = prohorov_distance_exact(q, p);
    bool ok = pq == qp && sgn(prohorov_distance_exact(p, p)) == 0 && sgn(pq) >= 0 && pq <= 1;
    ok = ok && to_double(prohorov_distance_exact(p, r)) <= to_double(pq + prohorov_distance_exact(q, r)) + 1e-9;
    const auto c = strassen_coupling(p, q, pq);
    ok = ok && coupling_marginals_exact(c, p, q) && to_double(c.exceedance) <= to_double(pq) + 1e-9;
    ok = ok && pq <= product_coupling_level(p, q) && qp <= product_coupling_level(q, p);
    if (!ok) ++violations;
  }
  Verdict v;
  v.detail = fmt("100 random pairs: symmetry, identity, triangle, coupling marginals and exceedance, "
                 "coupling-implies-bound: %zu violations",
                 violations);
  v.pass = within(seconds_since(start), 60, v.detail) && violations == 0;
  return v;
}

Verdict determinism() {
  const auto start = Clock::now();
  struct Case {
    const char* command;
    const char* config;
  };
  const std::vector<Case> cases{
      {"clt", R"({"kind": "geometric", "theta": 2, "N": 4096, "M": 20000, "seed": 7})"},
      {"kdist", R"({"N": 128, "M": 2000, "seed": 3})"},
      {"couple", R"({"theta": 8, "K": 4, "M": 20000, "seed": 5, "verify": false})"},
  };
  bool identical = true;
  std::string detail;
  for (const auto& cs : cases) {
    std::string reference;
    for (unsigned threads : {1u, 2u, 8u, 1u}) {
      auto parsed = cli::validate_config_text(cs.config, cs.command);
      if (!parsed.ok()) {
        identical = false;
        detail += std::string(" ") + cs.command + ": config rejected";
        break;
      }
      parsed.config->threads = threads;
      std::ostringstream out, err;
      cli::execute(*parsed.config, out, err);
      if (reference.empty()) reference = out.str();
      if (out.str() != reference) identical = false;
    }
    detail += fmt(" %s(%zu bytes)", cs.command, reference.size());
  }
  Verdict v;
  v.detail = "threads 1, 2, 8 and a rerun give identical bytes for" + detail;
  v.pass = within(seconds_since(start), 300, v.detail) && identical;
  return v;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  bool strict = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--strict") == 0) {
      strict = true;
    } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
      g_threads = static_cast<unsigned>(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--only N] [--strict] [--threads T]\n", argv[0]);
      return 1;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "discrepancy formula equals brute force", discrepancy_oracle},
      {2, "Koksma inequality", koksma},
      {3, "GCD-sum and Diophantine oracles", number_theory_oracles},
      {4, "coupling bound and exact filtration inequalities", coupling_bound},
      {5, "CLT for cos along 2^k", clt},
      {6, "Erdos-Fortet mixture", erdos_fortet},
      {7, "Kolmogorov law for sqrt(N) D_N", kolmogorov_law},
      {8, "stable limit", stable},
      {9, "Frechet limit", frechet},
      {10, "reference values", reference_values},
      {11, "Prohorov metric and Strassen coupling", prohorov_properties},
      {12, "determinism across thread counts", determinism},
  };

  int failures = 0, known = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const char* tag = v.pass ? "PASS" : (v.known_failure ? "FAIL (known)" : "FAIL");
    std::printf("criterion %2d %-12s %s: %s\n", c.id, tag, c.title, v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) {
      if (v.known_failure && !strict) ++known;
      else ++failures;
    }
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 1;
  }
  std::printf("%d criteria, %d failed (%d of them known)\n", ran, failures + known, known);
  return failures == 0 ? 0 : 1;
}
