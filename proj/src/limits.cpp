#include "laclab/limits.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "laclab/diophantine.hpp"
#include "laclab/discrepancy.hpp"
#include "laclab/error.hpp"
#include "laclab/numeric.hpp"
#include "laclab/parallel.hpp"
#include "laclab/philox.hpp"

namespace laclab {
namespace {

constexpr double kPi = std::numbers::pi;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void require_sizes(std::size_t terms, std::size_t replicas) {
  if (terms < 1) throw GuardError("N must be at least 1");
  if (replicas < 1) throw GuardError("M must be at least 1");
}

IntegerSequence sequence_of_length(SequenceSpec spec, std::size_t terms) {
  if (spec.kind != SequenceKind::explicit_terms) spec.length = terms;
  IntegerSequence seq = generate(spec);
  if (seq.size() < terms) throw DomainError("sequence is shorter than N");
  return seq;
}

std::vector<double> orbit_sums(const PeriodicFunction& f, const IntegerSequence& seq, std::size_t terms,
                               std::size_t replicas, std::uint64_t seed, unsigned threads) {
  const std::size_t bits = guarded_bits(seq, terms);
  const OrbitEvaluator orbit(seq, terms, bits);
  std::vector<double> out(replicas);
  for_each_replica(replicas, threads, [&](std::size_t r) {
    out[r] = orbit.partial_sum(f, sample_point(seed, r, bits), terms);
  });
  return out;
}

KsCheck upper_check(std::string label, std::string reference, double ks, double tolerance, std::size_t replicas) {
  const double threshold = tolerance + ks_slack(replicas);
  return {std::move(label), std::move(reference), ks, threshold, true, ks <= threshold};
}

KsCheck lower_check(std::string label, std::string reference, double ks, double bound) {
  return {std::move(label), std::move(reference), ks, bound, false, ks > bound};
}

void finish(ExperimentResult& result, Clock::time_point start) {
  result.pass = std::all_of(result.checks.begin(), result.checks.end(), [](const KsCheck& c) { return c.pass; });
  result.runtime_ms = elapsed_ms(start);
}

bool single_frequency(const PeriodicFunction& f) {
  const auto c = f.fourier_coefficients();
  if (!c) return false;
  return std::count_if(c->begin(), c->end(), [](const auto& p) { return p.first != 0.0 || p.second != 0.0; }) == 1;
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  CompensatedSum mean;
  for (double x : v) mean.add(x);
  const double m = mean.value() / static_cast<double>(v.size());
  CompensatedSum ss;
  for (double x : v) ss.add((x - m) * (x - m));
  return std::sqrt(ss.value() / static_cast<double>(v.size() - 1));
}

// Scale for S_N; the label names where it came from.
std::pair<double, std::string> normalizer_for(Normalization mode, const PeriodicFunction& f, const SequenceSpec& spec,
                                              std::size_t terms, const std::vector<double>& sums) {
  const double n = static_cast<double>(terms);
  if (mode == Normalization::automatic) {
    if (single_frequency(f)) {
      mode = Normalization::frequency;
    } else if (spec.kind == SequenceKind::geometric && spec.theta == 2) {
      mode = Normalization::kac;
    } else {
      mode = Normalization::sample;
    }
  }
  switch (mode) {
    case Normalization::frequency: {
      const auto c = f.fourier_coefficients();
      if (!c) throw DomainError("frequency normalization needs a trigonometric polynomial");
      double energy = 0.0;
      for (const auto& [a, b] : *c) energy += 0.5 * (a * a + b * b);
      return {std::sqrt(n * energy), "frequency"};
    }
    case Normalization::kac:
      return {std::sqrt(n * kac_variance(f).value), "kac"};
    case Normalization::sample:
      return {sample_sd(sums), "sample"};
    case Normalization::root_n:
      return {std::sqrt(n), "root_n"};
    case Normalization::automatic:
      break;
  }
  throw std::logic_error("unreachable normalization");
}

std::vector<double> normalized(const std::vector<double>& sums, double normalizer) {
  if (!(normalizer > 0.0) || !std::isfinite(normalizer)) throw DomainError("zero variance: the normalizer vanishes");
  std::vector<double> out(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) out[i] = sums[i] / normalizer;
  return out;
}

std::vector<double> iid_heavy_sums(double alpha, std::size_t terms, std::size_t replicas, std::uint64_t seed,
                                   Stream stream, unsigned threads, bool maxima) {
  const double scale = std::pow(static_cast<double>(terms), 1.0 / alpha);
  std::vector<double> out(replicas);
  for_each_replica(replicas, threads, [&](std::size_t r) {
    CounterRng rng(seed, r, stream);
    CompensatedSum sum;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < terms; ++i) {
      const double sign_u = rng.uniform();
      const double v = heavy_tail_draw(alpha, sign_u, rng.uniform_open());
      sum.add(v);
      best = std::max(best, v);
    }
    out[r] = (maxima ? best : sum.value()) / scale;
  });
  return out;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0,2)");
}

}  // namespace

double kolmogorov_K(double t) {
  if (!(t > 0.0)) return 0.0;
  if (t < 0.6) {
    // theta-function form, fast for small t
    double s = 0.0;
    for (int k = 1; k < 100; ++k) {
      const double m = 2.0 * k - 1.0;
      const double term = std::exp(-m * m * kPi * kPi / (8.0 * t * t));
      s += term;
      if (term < 1e-17 * s || term == 0.0) break;
    }
    return std::min(1.0, std::sqrt(2.0 * kPi) / t * s);
  }
  double s = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::clamp(1.0 - 2.0 * s, 0.0, 1.0);
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

double frechet_cdf(double x, double alpha) {
  if (!(x > 0.0)) return 0.0;
  return std::exp(-std::pow(x, -alpha));
}

KacVariance kac_variance(const PeriodicFunction& f, std::size_t kmax) {
  if (!f.is_square_integrable()) throw DomainError("kac_variance needs a square-integrable function; truncate the heavy tail");
  KacVariance out;
  out.kmax = kmax;
  if (const auto c = f.fourier_coefficients()) {
    const std::size_t top = c->size();
    auto cross = [&](std::size_t k) {
      if (k >= 63) return 0.0;
      const std::size_t step = std::size_t{1} << k;
      double s = 0.0;
      for (std::size_t j = 1; j * step <= top; ++j) {
        const auto& lo = (*c)[j - 1];
        const auto& hi = (*c)[j * step - 1];
        s += 0.5 * (lo.first * hi.first + lo.second * hi.second);
      }
      return s;
    };
    double value = 0.0;
    for (const auto& [a, b] : *c) value += 0.5 * (a * a + b * b);
    for (std::size_t k = 1; k <= kmax; ++k) value += 2.0 * cross(k);
    double tail = 0.0;
    for (std::size_t k = kmax + 1; k < 63 && (std::size_t{1} << k) <= top; ++k) tail += 2.0 * std::fabs(cross(k));
    out.value = value;
    out.tail_bound = tail;
    return out;
  }
  if (kmax > 22) throw GuardError("kac_variance quadrature is limited to kmax <= 22");
  const std::vector<double> base = f.breakpoints();
  const double norm = l2_norm(f);
  CompensatedSum value;
  value.add(norm * norm);
  for (std::size_t k = 1; k <= kmax; ++k) {
    const double scale = std::ldexp(1.0, static_cast<int>(k));
    const std::size_t cells = std::size_t{1} << k;
    std::vector<double> points;
    points.reserve((base.size() + 1) * (cells + 1) + base.size());
    points.insert(points.end(), base.begin(), base.end());
    for (std::size_t i = 0; i <= cells; ++i) {
      points.push_back(static_cast<double>(i) / scale);
      for (double d : base) points.push_back((d + static_cast<double>(i)) / scale);
    }
    std::erase_if(points, [](double p) { return p < 0.0 || p > 1.0; });
    const double term = integrate_pieces(
        [&](double x) {
          const double y = x * scale;
          return f.eval(x) * f.eval(y - std::floor(y));
        },
        std::move(points));
    value.add(2.0 * term);
  }
  out.value = value.value();
  // |int f(x) f(2^k x)| <= |f| omega_2(f, 2^-k) / sqrt 2 and
  // omega_2(f, delta)^2 <= 4 sup|f| V(f) delta
  const double sv = std::sqrt(f.sup_abs() * f.total_variation());
  out.tail_bound = 2.0 * std::numbers::sqrt2 * norm * sv * std::pow(2.0, -0.5 * static_cast<double>(kmax)) /
                   (std::numbers::sqrt2 - 1.0);
  return out;
}

double erdos_fortet_cdf(double x, std::size_t nodes) {
  if (nodes < 64 || nodes % 2 != 0) throw DomainError("erdos_fortet_cdf needs an even node count >= 64");
  if (std::isnan(x)) throw DomainError("erdos_fortet_cdf of NaN");
  if (x == 0.0) return 0.5;
  if (std::isinf(x)) return x > 0.0 ? 1.0 : 0.0;
  // the integrand is symmetric about t = 1/2, so half the nodes suffice
  CompensatedSum s;
  const double q = static_cast<double>(nodes);
  for (std::size_t i = 0; i < nodes / 2; ++i) {
    const double c = std::cos(kPi * (static_cast<double>(i) + 0.5) / q);
    s.add(0.5 * std::erfc(-x / (2.0 * c)));
  }
  return 2.0 * s.value() / q;
}

double erdos_fortet_second_moment(std::size_t nodes) {
  auto tail = [nodes](double x) { return 4.0 * x * erdos_fortet_cdf(-x, nodes); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      tail, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13);
}

CovarianceValue gaussian_covariance_exact(long a, const Rational& s, const Rational& t, std::size_t kmax) {
  if (a < 2) throw DomainError("gaussian_covariance needs an integer ratio a >= 2");
  if (s < 0 || s > 1 || t < 0 || t > 1) throw DomainError("gaussian_covariance needs s, t in [0,1]");
  // mu{x <= u, {m x} <= v} - u v over one period
  auto cross = [](const Rational& u, const Rational& v, const BigInt& m) {
    const Rational mu = u * m;
    BigInt whole;
    mpz_fdiv_q(whole.get_mpz_t(), mu.get_num_mpz_t(), mu.get_den_mpz_t());
    const Rational part = mu - Rational(whole);
    const Rational hit = (Rational(whole) * v + std::min(v, part)) / Rational(m);
    return Rational(hit - u * v);
  };
  CovarianceValue out;
  out.value = std::min(s, t) - s * t;
  BigInt m = 1;
  for (std::size_t k = 1; k <= kmax; ++k) {
    m *= a;
    out.value += cross(s, t, m) + cross(t, s, m);
  }
  out.value.canonicalize();
  // each cross term is at most 1/(4 a^k) in absolute value
  out.tail_bound = 0.5 / (std::pow(static_cast<double>(a), static_cast<double>(kmax)) * static_cast<double>(a - 1));
  return out;
}

double gaussian_covariance(long a, double s, double t, std::size_t kmax) {
  return to_double(gaussian_covariance_exact(a, exact_rational(s), exact_rational(t), kmax).value);
}

EmpiricalCDF::EmpiricalCDF(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw DomainError("empirical CDF of an empty sample");
  for (double v : sorted_) {
    if (std::isnan(v)) throw DomainError("empirical CDF sample contains NaN");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCDF::operator()(double t) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double ks_distance(const EmpiricalCDF& sample, const std::function<double(double)>& cdf) {
  const auto s = sample.sorted();
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(j + 1) / n - f, f - static_cast<double>(i) / n});
    i = j + 1;
  }
  return d;
}

double two_sample_ks(const EmpiricalCDF& a, const EmpiricalCDF& b) {
  const auto x = a.sorted();
  const auto y = b.sorted();
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (i == x.size()) {
      v = y[j];
    } else if (j == y.size()) {
      v = x[i];
    } else {
      v = std::min(x[i], y[j]);
    }
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_slack(std::size_t replicas) {
  return 2.0 * std::sqrt(std::log(2.0 / 0.01) / (2.0 * static_cast<double>(replicas)));
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::automatic: return "auto";
    case Normalization::frequency: return "frequency";
    case Normalization::kac: return "kac";
    case Normalization::sample: return "sample";
    case Normalization::root_n: return "root-n";
  }
  return "auto";
}

Normalization parse_normalization(const std::string& text) {
  if (text == "auto") return Normalization::automatic;
  if (text == "frequency") return Normalization::frequency;
  if (text == "kac") return Normalization::kac;
  if (text == "sample") return Normalization::sample;
  if (text == "root-n" || text == "root_n") return Normalization::root_n;
  throw DomainError("unknown normalization '" + text + "' (auto, frequency, kac, sample, root-n)");
}

ExperimentResult clt_experiment(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  require_sizes(cfg.terms, cfg.replicas);
  const PeriodicFunction f = PeriodicFunction::parse(cfg.function);
  if (!f.is_square_integrable()) throw DomainError("the CLT harness needs a square-integrable function");
  const IntegerSequence seq = sequence_of_length(cfg.sequence, cfg.terms);

  ExperimentResult result;
  result.experiment = "clt";
  const std::vector<double> sums = orbit_sums(f, seq, cfg.terms, cfg.replicas, cfg.seed, cfg.threads);
  auto [scale, source] = normalizer_for(cfg.normalization, f, cfg.sequence, cfg.terms, sums);
  result.normalizer = scale;
  result.normalizer_source = source;
  result.samples = normalized(sums, scale);
  const double ks = ks_distance(EmpiricalCDF(result.samples), normal_cdf);
  result.checks.push_back(upper_check("normal", "Phi", ks, cfg.tolerance, cfg.replicas));

  if (cfg.with_control) {
    const std::vector<double> single = orbit_sums(f, seq, 1, cfg.replicas, cfg.seed, cfg.threads);
    const double single_scale = normalizer_for(cfg.normalization, f, cfg.sequence, 1, single).first;
    const double control = ks_distance(EmpiricalCDF(normalized(single, single_scale)), normal_cdf);
    result.checks.push_back(lower_check("single_term_control", "Phi", control, 0.1));
  }
  finish(result, start);
  return result;
}

ExperimentResult erdos_fortet_experiment(std::size_t terms, std::size_t replicas, std::uint64_t seed, unsigned threads,
                                         double tolerance) {
  const auto start = Clock::now();
  require_sizes(terms, replicas);
  const PeriodicFunction f = PeriodicFunction::erdos_fortet();
  const IntegerSequence seq = generate(SequenceSpec::geometric_minus_one(2, terms));

  ExperimentResult result;
  result.experiment = "erdos-fortet";
  result.normalizer = std::sqrt(static_cast<double>(terms));
  result.normalizer_source = "root_n";
  result.samples = normalized(orbit_sums(f, seq, terms, replicas, seed, threads), result.normalizer);
  const EmpiricalCDF ecdf(result.samples);
  const double mixture = ks_distance(ecdf, [](double x) { return erdos_fortet_cdf(x); });
  result.checks.push_back(upper_check("mixture", "erdos_fortet_cdf", mixture, tolerance, replicas));
  result.checks.push_back(lower_check("normal_control", "Phi", ks_distance(ecdf, normal_cdf), 0.05));
  finish(result, start);
  return result;
}

ExperimentResult discrepancy_limit_experiment(const ExperimentConfig& cfg, DiscrepancyKind kind) {
  const auto start = Clock::now();
  require_sizes(cfg.terms, cfg.replicas);
  const IntegerSequence seq = sequence_of_length(cfg.sequence, cfg.terms);
  const std::size_t n = cfg.terms;
  const double root = std::sqrt(static_cast<double>(n));
  auto measure = [kind](std::span<const double> pts) {
    return kind == DiscrepancyKind::star ? star_discrepancy(pts) : discrepancy(pts);
  };

  ExperimentResult result;
  result.experiment = "kdist";
  result.normalizer = root;
  result.normalizer_source = kind == DiscrepancyKind::star ? "star" : "extreme";
  try {
    const DiophantineProfile profile = clt_condition_profile(seq, n, 2, NuSelection::every(true));
    if (profile.verdict != "vanishing") {
      result.warnings.push_back("Diophantine profile (d=2, all nu) is " + profile.verdict +
                                "; the Kolmogorov limit is not expected");
    }
  } catch (const GuardError& e) {
    result.warnings.push_back(std::string("Diophantine profile skipped: ") + e.what());
  }

  const std::size_t bits = guarded_bits(seq, n);
  const OrbitEvaluator orbit(seq, n, bits);
  result.samples.resize(cfg.replicas);
  for_each_replica(cfg.replicas, cfg.threads, [&](std::size_t r) {
    thread_local std::vector<double> pts;
    orbit.fractions(sample_point(cfg.seed, r, bits), pts);
    result.samples[r] = root * measure(pts);
  });
  const double ks = ks_distance(EmpiricalCDF(result.samples), kolmogorov_K);
  result.checks.push_back(upper_check("kolmogorov", "K", ks, cfg.tolerance, cfg.replicas));

  if (cfg.with_control) {
    std::vector<double> control(cfg.replicas);
    for_each_replica(cfg.replicas, cfg.threads, [&](std::size_t r) {
      CounterRng rng(cfg.seed, r, Stream::iid);
      std::vector<double> pts(n);
      for (double& p : pts) p = rng.uniform();
      control[r] = root * measure(pts);
    });
    const double cks = ks_distance(EmpiricalCDF(std::move(control)), kolmogorov_K);
    result.checks.push_back(upper_check("iid_control", "K", cks, cfg.tolerance, cfg.replicas));
  }
  finish(result, start);
  return result;
}

double heavy_tail_draw(double alpha, double sign_uniform, double magnitude_uniform) {
  const double magnitude = std::pow(0.5 * magnitude_uniform, -1.0 / alpha);
  return sign_uniform < 0.5 ? -magnitude : magnitude;
}

ExperimentResult stable_experiment(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  require_sizes(cfg.terms, cfg.replicas);
  check_alpha(cfg.alpha);
  const PeriodicFunction f = PeriodicFunction::heavy_tail(cfg.alpha);
  const IntegerSequence seq = sequence_of_length(cfg.sequence, cfg.terms);

  ExperimentResult result;
  result.experiment = "stable";
  if (!check_polynomial_gap(seq, 1.0)) {
    result.warnings.push_back("sequence violates n_{k+1}/n_k >= k; the stable limit is not expected");
  }
  result.normalizer = std::pow(static_cast<double>(cfg.terms), 1.0 / cfg.alpha);
  result.normalizer_source = "n^(1/alpha)";
  result.samples = normalized(orbit_sums(f, seq, cfg.terms, cfg.replicas, cfg.seed, cfg.threads), result.normalizer);
  const EmpiricalCDF iid(iid_heavy_sums(cfg.alpha, cfg.terms, cfg.replicas, cfg.seed, Stream::iid, cfg.threads, false));
  result.checks.push_back(
      upper_check("iid_sums", "two-sample", two_sample_ks(EmpiricalCDF(result.samples), iid), cfg.tolerance, cfg.replicas));
  if (cfg.with_control) {
    const EmpiricalCDF second(
        iid_heavy_sums(cfg.alpha, cfg.terms, cfg.replicas, cfg.seed, Stream::iid_second, cfg.threads, false));
    result.checks.push_back(upper_check("calibration", "two-sample", two_sample_ks(iid, second), 0.03, cfg.replicas));
  }
  finish(result, start);
  return result;
}

ExperimentResult frechet_experiment(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  require_sizes(cfg.terms, cfg.replicas);
  check_alpha(cfg.alpha);
  const PeriodicFunction f = PeriodicFunction::heavy_tail(cfg.alpha);
  const IntegerSequence seq = sequence_of_length(cfg.sequence, cfg.terms);
  const std::size_t n = cfg.terms;
  const double alpha = cfg.alpha;

  ExperimentResult result;
  result.experiment = "frechet";
  if (!check_polynomial_gap(seq, 1.0)) {
    result.warnings.push_back("sequence violates n_{k+1}/n_k >= k; the Frechet limit is not expected");
  }
  result.normalizer = std::pow(static_cast<double>(n), 1.0 / alpha);
  result.normalizer_source = "n^(1/alpha)";
  const std::size_t bits = guarded_bits(seq, n);
  const OrbitEvaluator orbit(seq, n, bits);
  result.samples.resize(cfg.replicas);
  for_each_replica(cfg.replicas, cfg.threads, [&](std::size_t r) {
    thread_local std::vector<double> vals;
    orbit.values(f, sample_point(cfg.seed, r, bits), vals);
    result.samples[r] = *std::max_element(vals.begin(), vals.end()) / result.normalizer;
  });
  auto limit = [alpha](double x) { return frechet_cdf(x, alpha); };
  result.checks.push_back(
      upper_check("frechet", "G", ks_distance(EmpiricalCDF(result.samples), limit), cfg.tolerance, cfg.replicas));
  if (cfg.with_control) {
    const EmpiricalCDF iid(iid_heavy_sums(alpha, n, cfg.replicas, cfg.seed, Stream::iid, cfg.threads, true));
    result.checks.push_back(upper_check("iid_control", "G", ks_distance(iid, limit), 0.03, cfg.replicas));
  }
  finish(result, start);
  return result;
}

std::vector<LilRow> lil_trace(const PeriodicFunction& f, const SequenceSpec& spec, std::uint64_t seed,
                              std::size_t max_terms) {
  if (max_terms < 16) throw DomainError("lil_trace needs at least 16 terms");
  std::vector<double> fracs(max_terms);
  std::vector<double> vals(max_terms);
  const bool exact = f.needs_exact_argument();

  if (spec.kind == SequenceKind::geometric) {
    // stream theta^k x without materialising the sequence
    const auto theta = static_cast<unsigned long>(spec.theta);
    BigInt top;
    mpz_ui_pow_ui(top.get_mpz_t(), theta, max_terms);
    const std::size_t bits = ceil_log2(top) + 64;
    const FixedPoint x = sample_point(seed, 0, bits);
    const bool power_of_two = (theta & (theta - 1)) == 0;
    const std::size_t shift = power_of_two ? static_cast<std::size_t>(std::countr_zero(theta)) : 0;
    BigInt current = x.numerator;
    for (std::size_t k = 1; k <= max_terms; ++k) {
      std::size_t width = bits;
      if (power_of_two) {
        width = bits - shift * k;
        if (exact) mpz_fdiv_r_2exp(current.get_mpz_t(), x.numerator.get_mpz_t(), width);
        fracs[k - 1] = low_bits_fraction_of(x.numerator, width);
      } else {
        mpz_mul_ui(current.get_mpz_t(), current.get_mpz_t(), theta);
        mpz_fdiv_r_2exp(current.get_mpz_t(), current.get_mpz_t(), bits);
        fracs[k - 1] = low_bits_fraction_of(current, bits);
      }
      try {
        vals[k - 1] = exact ? f.eval_exact(current, width) : f.eval(fracs[k - 1]);
      } catch (const SingularityError& e) {
        throw SingularityError(std::string(e.what()) + " (term k=" + std::to_string(k) + ")", k);
      }
    }
  } else {
    const IntegerSequence seq = sequence_of_length(spec, max_terms);
    std::size_t total = 0;
    for (const auto& n : seq.terms()) total += bit_length(n);
    if (total > (std::size_t{1} << 31)) throw GuardError("lil_trace: the materialised sequence exceeds 2^31 bits");
    const std::size_t bits = guarded_bits(seq, max_terms);
    const OrbitEvaluator orbit(seq, max_terms, bits);
    const FixedPoint x = sample_point(seed, 0, bits);
    orbit.fractions(x, fracs);
    orbit.values(f, x, vals);
  }

  std::vector<LilRow> rows;
  CompensatedSum sum;
  std::size_t next = 16;
  for (std::size_t n = 1; n <= max_terms; ++n) {
    sum.add(vals[n - 1]);
    if (n != next && n != max_terms) continue;
    if (n == next) next *= 2;
    const double nn = static_cast<double>(n);
    LilRow row;
    row.n = n;
    row.normalized_sum = sum.value() / std::sqrt(nn * std::log(std::log(nn)));
    row.discrepancy_lil = lil_statistic(std::span<const double>(fracs.data(), n));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace laclab
