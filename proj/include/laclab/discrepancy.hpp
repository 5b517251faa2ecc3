#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "laclab/bigint.hpp"
#include "laclab/orbit.hpp"

namespace laclab {

/// Extreme discrepancy sup_{0<=a<b<=1} |#{x_k in [a,b)}/N - (b-a)| via the
/// sorted-points formula. Points must lie in [0,1).
double discrepancy(std::span<const double> points);
/// sup_t |#{x_k < t}/N - t|.
double star_discrepancy(std::span<const double> points);

/// O(N^2 log N) sup over candidate intervals with endpoints in {0, x_i, 1};
/// limited to N <= 2000.
double discrepancy_bruteforce(std::span<const double> points);

/// Exact versions over dyadic points sharing one precision.
Rational discrepancy_exact(std::span<const FixedPoint> points);
Rational star_discrepancy_exact(std::span<const FixedPoint> points);

struct KoksmaReport {
  double lhs = 0.0;        // |mean f(x_k) - int f|
  double rhs = 0.0;        // 2 V_f D_N
  double variation = 0.0;  // V_f
  double discrepancy = 0.0;
  bool holds = false;
};

KoksmaReport koksma_check(const PeriodicFunction& f, std::span<const double> points);

/// N D_N / sqrt(2 N log log N); N >= 16.
double lil_statistic(std::span<const double> points);
double lil_statistic_from(double discrepancy_value, std::size_t n);

/// Limsup constant for n_k = theta^k in the discrepancy LIL.
double fukuyama_constant(long theta);

/// max over t on a uniform grid of |sum_k (1{x_k <= t} - t)|.
double indicator_family_sup(std::span<const double> points, std::size_t grid = 1024);

/// One value per line with 17 significant digits.
void write_points(std::ostream& out, std::span<const double> points);
std::vector<double> read_points(std::istream& in);

}  // namespace laclab
