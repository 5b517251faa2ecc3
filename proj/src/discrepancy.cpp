#include "laclab/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "laclab/error.hpp"

namespace laclab {

namespace {

std::vector<double> sorted_checked(std::span<const double> points) {
  if (points.empty()) throw DomainError("point set must be nonempty");
  std::vector<double> x(points.begin(), points.end());
  for (double v : x) {
    if (!(v >= 0.0 && v < 1.0)) throw DomainError("points must lie in [0,1)");
  }
  std::sort(x.begin(), x.end());
  return x;
}

// Scaled offsets i 2^B - N num_(i), shared by the exact extreme and star forms.
std::vector<BigInt> sorted_numerators(std::span<const FixedPoint> points, std::size_t& bits) {
  if (points.empty()) throw DomainError("point set must be nonempty");
  bits = points.front().bits;
  std::vector<BigInt> nums;
  nums.reserve(points.size());
  for (const auto& p : points) {
    if (p.bits != bits) throw DomainError("fixed-point samples must share one precision");
    nums.push_back(p.numerator);
  }
  std::sort(nums.begin(), nums.end());
  return nums;
}

}  // namespace

double discrepancy(std::span<const double> points) {
  const auto x = sorted_checked(points);
  const double n = static_cast<double>(x.size());
  double hi = -2.0, lo = 2.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = static_cast<double>(i + 1) / n - x[i];
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  return 1.0 / n + hi - lo;
}

double star_discrepancy(std::span<const double> points) {
  const auto x = sorted_checked(points);
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d = std::max(d, x[i] - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - x[i]);
  }
  return d;
}

double discrepancy_bruteforce(std::span<const double> points) {
  if (points.size() > 2000) throw GuardError("brute-force discrepancy is limited to N <= 2000");
  const auto x = sorted_checked(points);
  const double n = static_cast<double>(x.size());
  std::vector<double> cand = x;
  cand.push_back(0.0);
  cand.push_back(1.0);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  double best = 0.0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const double a = cand[i];
    const auto ge_a = std::lower_bound(x.begin(), x.end(), a);
    const auto gt_a = std::upper_bound(x.begin(), x.end(), a);
    for (std::size_t j = i; j < cand.size(); ++j) {
      const double b = cand[j];
      const auto le_b = std::upper_bound(x.begin(), x.end(), b);
      const auto lt_b = std::lower_bound(x.begin(), x.end(), b);
      // [a, b] approached by [a, b + 0): overfull side.
      const double closed = static_cast<double>(le_b - ge_a) / n - (b - a);
      // (a, b) approached by [a + 0, b): underfull side.
      const double open = (b - a) - static_cast<double>(std::max<std::ptrdiff_t>(0, lt_b - gt_a)) / n;
      best = std::max({best, closed, open});
    }
  }
  return best;
}

Rational discrepancy_exact(std::span<const FixedPoint> points) {
  std::size_t bits = 0;
  const auto nums = sorted_numerators(points, bits);
  BigInt one = 1;
  one <<= static_cast<mp_bitcnt_t>(bits);
  const BigInt n = static_cast<unsigned long>(nums.size());
  BigInt hi, lo, v;
  for (std::size_t i = 0; i < nums.size(); ++i) {
    v = one * static_cast<unsigned long>(i + 1) - n * nums[i];
    if (i == 0 || v > hi) hi = v;
    if (i == 0 || v < lo) lo = v;
  }
  Rational d(one + hi - lo, n * one);
  d.canonicalize();
  return d;
}

Rational star_discrepancy_exact(std::span<const FixedPoint> points) {
  std::size_t bits = 0;
  const auto nums = sorted_numerators(points, bits);
  BigInt one = 1;
  one <<= static_cast<mp_bitcnt_t>(bits);
  const BigInt n = static_cast<unsigned long>(nums.size());
  BigInt best = 0, v;
  for (std::size_t i = 0; i < nums.size(); ++i) {
    v = n * nums[i] - one * static_cast<unsigned long>(i);
    if (v > best) best = v;
    v = one * static_cast<unsigned long>(i + 1) - n * nums[i];
    if (v > best) best = v;
  }
  Rational d(best, n * one);
  d.canonicalize();
  return d;
}

KoksmaReport koksma_check(const PeriodicFunction& f, std::span<const double> points) {
  KoksmaReport r;
  r.variation = f.total_variation();
  r.discrepancy = discrepancy(points);
  CompensatedSum s;
  for (double x : points) s.add(f.eval(x));
  const bool mean_zero = !std::holds_alternative<PeriodicFunction::Truncated>(f.variant());
  const double integral = mean_zero ? 0.0 : mean_value(f);
  r.lhs = std::fabs(s.value() / static_cast<double>(points.size()) - integral);
  r.rhs = 2.0 * r.variation * r.discrepancy;
  r.holds = r.lhs <= r.rhs;
  return r;
}

double lil_statistic_from(double discrepancy_value, std::size_t n) {
  if (n < 16) throw DomainError("LIL statistic needs N >= 16");
  const double nn = static_cast<double>(n);
  return nn * discrepancy_value / std::sqrt(2.0 * nn * std::log(std::log(nn)));
}

double lil_statistic(std::span<const double> points) {
  if (points.size() < 16) throw DomainError("LIL statistic needs N >= 16");
  return lil_statistic_from(discrepancy(points), points.size());
}

double fukuyama_constant(long theta) {
  if (theta < 2) throw DomainError("Fukuyama constant needs theta >= 2");
  const double t = static_cast<double>(theta);
  if (theta == 2) return std::sqrt(42.0) / 9.0;
  if (theta % 2 == 0) return std::sqrt((t + 1.0) * t * (t - 2.0)) / (2.0 * std::sqrt(std::pow(t - 1.0, 3)));
  return std::sqrt(t + 1.0) / (2.0 * std::sqrt(t - 1.0));
}

double indicator_family_sup(std::span<const double> points, std::size_t grid) {
  const auto x = sorted_checked(points);
  if (grid == 0) throw DomainError("grid must be positive");
  const double n = static_cast<double>(x.size());
  double best = 0.0;
  for (std::size_t i = 0; i <= grid; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid);
    const auto count = static_cast<double>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
    best = std::max(best, std::fabs(count - n * t));
  }
  return best;
}

void write_points(std::ostream& out, std::span<const double> points) {
  char buf[64];
  for (double v : points) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out << buf;
  }
}

std::vector<double> read_points(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      throw DomainError("line " + std::to_string(lineno) + ": not a number");
    }
    if (line.find_first_not_of(" \t\r,", used) != std::string::npos) {
      throw DomainError("line " + std::to_string(lineno) + ": trailing characters");
    }
    if (!(v >= 0.0 && v < 1.0)) throw DomainError("line " + std::to_string(lineno) + ": value outside [0,1)");
    out.push_back(v);
  }
  if (out.empty()) throw DomainError("point file holds no values");
  return out;
}

}  // namespace laclab
