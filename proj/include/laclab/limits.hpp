#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "laclab/bigint.hpp"
#include "laclab/orbit.hpp"
#include "laclab/seqgen.hpp"

namespace laclab {

/// Limit law of sqrt(n) sup_x |F_n(x) - x|; 0 for t <= 0.
double kolmogorov_K(double t);
double normal_cdf(double t);
/// exp(-x^-alpha) on (0, inf), 0 elsewhere.
double frechet_cdf(double x, double alpha);

struct KacVariance {
  double value = 0.0;
  double tail_bound = 0.0;  // bound on the omitted terms k > kmax
  std::size_t kmax = 0;
};

/// sigma^2 = int f^2 + 2 sum_{k=1}^{kmax} int f(x) f(2^k x) dx. Trigonometric
/// polynomials are handled exactly through their coefficients; other bounded
/// functions by piecewise quadrature (kmax <= 22).
KacVariance kac_variance(const PeriodicFunction& f, std::size_t kmax = 16);

/// int_0^1 Phi(x / (sqrt 2 |cos pi t|)) dt by the midpoint rule with an even
/// node count (>= 64).
double erdos_fortet_cdf(double x, std::size_t nodes = std::size_t{1} << 14);
/// int x^2 dF of the mixture above, from 4 int_0^inf x (1 - F(x)) dx.
double erdos_fortet_second_moment(std::size_t nodes = std::size_t{1} << 14);

struct CovarianceValue {
  Rational value;
  double tail_bound = 0.0;
};

/// Gamma(s, t) for n_k = a^k with the series cut after kmax cross terms. Every
/// term is an exact rational.
CovarianceValue gaussian_covariance_exact(long a, const Rational& s, const Rational& t, std::size_t kmax);
double gaussian_covariance(long a, double s, double t, std::size_t kmax = 48);

/// Right-continuous step function of a sample.
class EmpiricalCDF {
 public:
  explicit EmpiricalCDF(std::vector<double> samples);

  double operator()(double t) const;
  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

/// sup_t |F_hat(t) - F(t)| for a continuous reference F, exact over the jumps.
double ks_distance(const EmpiricalCDF& sample, const std::function<double(double)>& cdf);
double two_sample_ks(const EmpiricalCDF& a, const EmpiricalCDF& b);

/// 2 sqrt(ln(2/0.01) / (2M)), added to every upper KS tolerance.
double ks_slack(std::size_t replicas);

enum class Normalization {
  automatic,  // sqrt(N |f|^2) for one frequency, Kac sigma for 2^k, else sample sd
  frequency,  // sqrt(N |f|^2)
  kac,        // sqrt(N sigma^2) with sigma^2 from kac_variance
  sample,     // sample standard deviation of the replicas
  root_n,     // sqrt(N)
};

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& text);

struct ExperimentConfig {
  std::string function = "cos";
  SequenceSpec sequence = SequenceSpec::geometric(2, 4096);
  std::size_t terms = 4096;      // N, inner sum length (or n for maxima)
  std::size_t replicas = 20000;  // M
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Normalization normalization = Normalization::automatic;
  double alpha = 1.5;
  double tolerance = 0.05;
  bool with_control = false;
};

/// One KS assertion. Upper checks pass when ks <= threshold, lower checks
/// (negative controls) when ks > threshold.
struct KsCheck {
  std::string label;
  std::string reference;
  double ks = 0.0;
  double threshold = 0.0;
  bool upper = true;
  bool pass = false;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<double> samples;  // replica order
  double normalizer = 1.0;
  std::string normalizer_source;
  std::vector<KsCheck> checks;
  std::vector<std::string> warnings;
  bool pass = false;
  double runtime_ms = 0.0;
};

/// Replicas of S_N / normalizer at independent uniform x; KS against Phi. The
/// control adds the N = 1 law, which must be far from Phi (> 0.1).
ExperimentResult clt_experiment(const ExperimentConfig& cfg);

/// f = cos 2 pi x + cos 4 pi x along 2^k - 1, normed by sqrt(N); KS against
/// the mixture CDF (upper) and against Phi (lower, > 0.05).
ExperimentResult erdos_fortet_experiment(std::size_t terms, std::size_t replicas, std::uint64_t seed,
                                         unsigned threads = 0, double tolerance = 0.05);

enum class DiscrepancyKind { star, extreme };

/// sqrt(N) D_N of the first N points {n_k x} against K. The control replaces
/// the orbit by N i.i.d. uniforms.
ExperimentResult discrepancy_limit_experiment(const ExperimentConfig& cfg, DiscrepancyKind kind = DiscrepancyKind::star);

/// S_N / N^{1/alpha} for the heavy tail along the sequence versus sums of N
/// i.i.d. draws from its exact law; the control compares two i.i.d. batches
/// (tolerance 0.03).
ExperimentResult stable_experiment(const ExperimentConfig& cfg);

/// max_{k<=n} f(n_k x) / n^{1/alpha} against exp(-x^-alpha); the control uses
/// n i.i.d. draws (tolerance 0.03).
ExperimentResult frechet_experiment(const ExperimentConfig& cfg);

/// One draw from the law of the heavy tail: sign times (V/2)^{-1/alpha}.
double heavy_tail_draw(double alpha, double sign_uniform, double magnitude_uniform);

struct LilRow {
  std::size_t n = 0;
  double normalized_sum = 0.0;   // S_N / sqrt(N log log N)
  double discrepancy_lil = 0.0;  // N D_N / sqrt(2 N log log N)
};

/// Running values at N = 16, 32, ... up to max_terms (which is included) for
/// one sample point drawn from (seed, replica 0).
std::vector<LilRow> lil_trace(const PeriodicFunction& f, const SequenceSpec& spec, std::uint64_t seed,
                              std::size_t max_terms);

}  // namespace laclab
