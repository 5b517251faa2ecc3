#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

#include "laclab/numeric.hpp"

namespace laclab {

namespace detail {

// Bisection on a Kronrod error test scaled by the L1 mass of the piece, so
// pieces whose integral cancels to ~0 still terminate.
template <class G>
double kronrod_bisect(const G& g, double a, double b, int depth) {
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 0, 0.0, &err, &l1);
  const double width = 0.5 * (b - a);
  if (depth == 0 || err * width <= 1e-14 * l1 + 1e-300) return v;
  const double mid = 0.5 * (a + b);
  return kronrod_bisect(g, a, mid, depth - 1) + kronrod_bisect(g, mid, b, depth - 1);
}

}  // namespace detail

template <class G>
double integrate_pieces(const G& g, std::vector<double> points) {
  points.push_back(0.0);
  points.push_back(1.0);
  for (auto& p : points) p = std::clamp(p, 0.0, 1.0);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  CompensatedSum sum;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double a = points[i];
    const double b = points[i + 1];
    if (!(b > a)) continue;
    // Evaluate at interior nodes only: the endpoints may be jump points.
    sum.add(detail::kronrod_bisect(g, a, b, 12));
  }
  return sum.value();
}

}  // namespace laclab
