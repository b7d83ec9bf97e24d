#pragma once

// Brute-force maximisation of <alpha w, w> / <w, w> over torus fields with
// <-Lap w, w> <= M <w, w>: gradient steps on the Rayleigh quotient, each
// followed by a projection back onto the unit sphere inside the constraint.
// The projection is w -> (I + rho K)^{-1} w normalised, rho >= 0 the smallest
// value meeting the constraint (K = -Lap, found by bisection).

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dense_eigen.hpp"

namespace oracle {

struct AscentResult {
  double value = 0.0;
  double dirichlet = 0.0;
  int iterations = 0;
};

inline AscentResult projected_ascent(int dim, int n, const std::vector<double>& alpha, double M, double step = 0.5,
                                     int max_iter = 200000, double tol = 1e-14) {
  const Eigen::MatrixXd K = -laplacian_matrix(dim, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  const Eigen::MatrixXd& Q = es.eigenvectors();
  const Eigen::VectorXd& kappa = es.eigenvalues();
  const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(alpha.data(), alpha.size());

  auto quotient = [&](const Eigen::VectorXd& c) { return c.cwiseProduct(c).dot(kappa) / c.squaredNorm(); };
  // w in the eigenbasis of K: w = Q c
  auto project = [&](Eigen::VectorXd c) {
    c.normalize();
    if (quotient(c) <= M) return c;
    double lo = 0.0, hi = 1.0;
    auto shrink = [&](double rho) { return Eigen::VectorXd(c.cwiseQuotient((1.0 + rho * kappa.array()).matrix())); };
    while (quotient(shrink(hi)) > M) hi *= 2;
    for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
      const double mid = 0.5 * (lo + hi);
      (quotient(shrink(mid)) > M ? lo : hi) = mid;
    }
    return Eigen::VectorXd(shrink(hi).normalized());
  };

  Eigen::VectorXd w = Eigen::VectorXd::Ones(a.size()) + 0.5 * a;  // start leaning towards large alpha
  Eigen::VectorXd c = project(Q.transpose() * w);
  double value = 0.0;
  AscentResult r;
  for (int it = 0; it < max_iter; ++it) {
    w = Q * c;
    const double v = w.dot(a.cwiseProduct(w));
    const Eigen::VectorXd grad = a.cwiseProduct(w) - v * w;
    c = project(c + step * (Q.transpose() * grad));
    r.iterations = it + 1;
    if (std::abs(v - value) < tol && it > 10) break;
    value = v;
  }
  w = Q * c;
  r.value = w.dot(a.cwiseProduct(w));
  r.dirichlet = quotient(c);
  return r;
}

}  // namespace oracle
