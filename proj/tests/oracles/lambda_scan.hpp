#pragma once

// Root and minimum finding by scanning lambda on a fine grid with the dense
// eigensolver, then refining by bisection / golden section.

#include <cmath>
#include <stdexcept>

#include "dense_eigen.hpp"

namespace oracle {

/// Positive root of mu(lambda) = 0: first sign change on a grid of `steps`
/// points in (0, lambda_max], then bisection to `tol`.
inline double decay_rate_scan(int dim, int n, const std::vector<double>& alpha, double A, double gamma,
                              double lambda_max, int steps = 400, double tol = 1e-12) {
  double lo = lambda_max / steps;
  if (mu(dim, n, alpha, lo, A, gamma) >= 0) throw std::runtime_error("decay_rate_scan: mu not negative near 0");
  for (int s = 2; s <= steps; ++s) {
    double hi = lambda_max * s / steps;
    if (mu(dim, n, alpha, hi, A, gamma) >= 0) {
      while (hi - lo > tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mu(dim, n, alpha, mid, A, gamma) < 0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    lo = hi;
  }
  throw std::runtime_error("decay_rate_scan: no sign change");
}

/// min over lambda > 0 of (k(lambda) + fprime0) / lambda, k the principal
/// eigenvalue of Lap + lambda^2 + lambda A alpha.
inline double kpp_speed_scan(int dim, int n, const std::vector<double>& alpha, double A, double fprime0,
                             double lambda_max = 20.0, int steps = 400) {
  auto g = [&](double lam) {
    std::vector<double> V(alpha.size());
    for (std::size_t k = 0; k < V.size(); ++k) V[k] = lam * lam + lam * A * alpha[k];
    return (principal(dim, n, 1.0, V).value + fprime0) / lam;
  };
  int best = 1;
  double gbest = g(lambda_max / steps);
  for (int s = 2; s <= steps; ++s) {
    const double v = g(lambda_max * s / steps);
    if (v < gbest) {
      gbest = v;
      best = s;
    }
  }
  if (best == steps) throw std::runtime_error("kpp_speed_scan: minimum at the scan edge");
  double a = lambda_max * (best - 1) / steps, b = lambda_max * (best + 1) / steps;
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = b - r * (b - a), d = a + r * (b - a), gc = g(c), gd = g(d);
  while (b - a > 1e-10) {
    if (gc < gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - r * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + r * (b - a);
      gd = g(d);
    }
  }
  return std::min(gc, gd);
}

}  // namespace oracle
